#include "p3f/detail/levmar.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "p3f/trace.hpp"

namespace p3f::detail {

bool solve_spd(std::vector<double>& a, std::vector<double>& b,
               std::size_t n) {
  // In-place Cholesky A = L L^T, then two triangular solves.
  for (std::size_t j = 0; j < n; ++j) {
    double d = a[j * n + j];
    for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
    if (!(d > 0.0) || !std::isfinite(d)) return false;
    const double ljj = std::sqrt(d);
    a[j * n + j] = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = s / ljj;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= a[i * n + k] * b[k];
    b[i] = s / a[i * n + i];
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= a[k * n + i] * b[k];
    b[i] = s / a[i * n + i];
  }
  return true;
}

namespace {

double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

bool all_finite(const std::vector<double>& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace

LevMarResult levmar(const ResidualFn& residual, const JacobianFn& jacobian,
                    std::vector<double> x0, std::size_t m,
                    const LevMarOptions& opt) {
  const std::size_t n = x0.size();
  if (n == 0) throw Error("levmar: empty parameter vector");
  if (m < n)
    throw Error("levmar: ill-conditioned problem (more parameters than "
                "residuals); try fewer branches");

  std::vector<double> r(m), r_try(m), jac(m * n);
  std::vector<double> jtj(n * n), g(n), a(n * n), step(n), x_try(n);

  residual(x0, r);
  if (!all_finite(r))
    throw Error("levmar: non-finite residual at the initial guess");

  LevMarResult res;
  res.x = std::move(x0);
  res.residual_norm = norm2(r);
  res.residual_history.push_back(res.residual_norm);

  double lambda = opt.lambda_init;
  for (std::size_t iter = 0; iter < opt.max_iterations; ++iter) {
    jacobian(res.x, jac);
    if (!all_finite(jac))
      throw Error("levmar: non-finite Jacobian; model is ill-conditioned");

    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j <= i; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < m; ++k)
          s += jac[k * n + i] * jac[k * n + j];
        jtj[i * n + j] = s;
        jtj[j * n + i] = s;
      }
      double gs = 0.0;
      for (std::size_t k = 0; k < m; ++k) gs += jac[k * n + i] * r[k];
      g[i] = gs;
    }
    // Marquardt scaling with a relative floor: directions whose columns
    // have (near-)vanished stay strongly damped instead of producing
    // gigantic steps that a global clamp would let poison the live ones.
    double max_diag = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      max_diag = std::max(max_diag, jtj[i * n + i]);
    if (max_diag == 0.0)
      throw Error(
          "levmar: Jacobian is identically zero (rank-deficient); "
          "try fewer branches");
    const double diag_floor = 1e-14 * max_diag;

    bool accepted = false;
    while (!accepted) {
      a = jtj;
      for (std::size_t i = 0; i < n; ++i)
        a[i * n + i] += lambda * std::max(jtj[i * n + i], diag_floor);
      step = g;
      for (double& s : step) s = -s;
      if (!solve_spd(a, step, n)) {
        lambda *= 10.0;
        if (lambda > opt.lambda_max)
          throw Error(
              "levmar: singular normal equations (rank-deficient Jacobian); "
              "try fewer branches");
        continue;
      }

      double step_inf = 0.0;
      for (double s : step) step_inf = std::max(step_inf, std::abs(s));
      if (step_inf > opt.max_step)
        for (double& s : step) s *= opt.max_step / step_inf;

      for (std::size_t i = 0; i < n; ++i) x_try[i] = res.x[i] + step[i];
      residual(x_try, r_try);
      const double norm_try =
          all_finite(r_try) ? norm2(r_try)
                            : std::numeric_limits<double>::infinity();

      if (norm_try < res.residual_norm) {
        accepted = true;
        res.x = x_try;
        r = r_try;
        res.residual_norm = norm_try;
        res.residual_history.push_back(norm_try);
        lambda = std::max(lambda / 3.0, 1e-12);
        res.iterations = iter + 1;
        const double rel_step = std::min(step_inf, opt.max_step);
        if (rel_step < opt.step_tolerance || norm_try == 0.0) {
          res.converged = true;
          return res;
        }
      } else {
        lambda *= 4.0;
        if (lambda > opt.lambda_max) {
          // No improving step exists at any damping. If the final proposal
          // already shrank below the step tolerance the solver is pinned at
          // a numerical optimum; otherwise report non-convergence with the
          // best parameters so far.
          res.iterations = iter + 1;
          res.converged = step_inf < opt.step_tolerance;
          return res;
        }
      }
    }
  }
  res.iterations = opt.max_iterations;
  return res;
}

}  // namespace p3f::detail
