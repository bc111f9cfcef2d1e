#include "p3f/fit.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "p3f/detail/format.hpp"
#include "p3f/detail/levmar.hpp"
#include "p3f/detail/mbvd_fit_model.hpp"
#include "p3f/metrics.hpp"
#include "p3f/stack_model.hpp"

namespace p3f {

namespace detail {

namespace {
constexpr std::complex<double> kImag{0.0, 1.0};
}

MbvdFitModel::MbvdFitModel(std::vector<double> freqs,
                           std::vector<std::complex<double>> y,
                           std::vector<double> weights,
                           std::size_t n_branches)
    : freqs_(std::move(freqs)),
      y_(std::move(y)),
      w_(std::move(weights)),
      n_branches_(n_branches) {}

std::vector<double> MbvdFitModel::encode(const MbvdParams& p) {
  std::vector<double> u;
  u.reserve(3 + 3 * p.branches.size());
  u.push_back(std::log(p.c0));
  u.push_back(std::log(p.r0 + kEpsResistance));
  u.push_back(std::log(p.rs + kEpsResistance));
  for (const MotionalBranch& b : p.branches) {
    u.push_back(std::log(b.rm));
    u.push_back(std::log(b.lm));
    u.push_back(std::log(b.cm));
  }
  return u;
}

MbvdParams MbvdFitModel::decode(const std::vector<double>& u) {
  MbvdParams p;
  p.c0 = std::exp(u[0]);
  p.r0 = std::exp(u[1]) - kEpsResistance;
  p.rs = std::exp(u[2]) - kEpsResistance;
  for (std::size_t i = 3; i + 3 <= u.size(); i += 3) {
    MotionalBranch b;
    b.rm = std::exp(u[i]);
    b.lm = std::exp(u[i + 1]);
    b.cm = std::exp(u[i + 2]);
    p.branches.push_back(b);
  }
  return p;
}

void MbvdFitModel::residual(const std::vector<double>& u,
                            std::vector<double>& r) const {
  const MbvdParams p = decode(u);
  for (std::size_t i = 0; i < freqs_.size(); ++i) {
    const double omega = 2.0 * std::numbers::pi * freqs_[i];
    std::complex<double> y_inner =
        1.0 / (p.r0 + 1.0 / (kImag * omega * p.c0));
    for (const MotionalBranch& b : p.branches)
      y_inner +=
          1.0 / (b.rm + kImag * (omega * b.lm - 1.0 / (omega * b.cm)));
    const std::complex<double> d =
        y_inner / (1.0 + p.rs * y_inner) - y_[i];
    r[2 * i] = w_[i] * d.real();
    r[2 * i + 1] = w_[i] * d.imag();
  }
}

void MbvdFitModel::jacobian(const std::vector<double>& u,
                            std::vector<double>& jac) const {
  const MbvdParams p = decode(u);
  const std::size_t np = n_params();
  std::vector<std::complex<double>> dy(np);
  std::vector<std::complex<double>> yb(p.branches.size());
  for (std::size_t i = 0; i < freqs_.size(); ++i) {
    const double omega = 2.0 * std::numbers::pi * freqs_[i];
    const std::complex<double> y_st =
        1.0 / (p.r0 + 1.0 / (kImag * omega * p.c0));
    std::complex<double> y_in = y_st;
    for (std::size_t k = 0; k < p.branches.size(); ++k) {
      const MotionalBranch& b = p.branches[k];
      yb[k] = 1.0 / (b.rm + kImag * (omega * b.lm - 1.0 / (omega * b.cm)));
      y_in += yb[k];
    }
    const std::complex<double> s = 1.0 + p.rs * y_in;
    const std::complex<double> dy_dyin = 1.0 / (s * s);
    const std::complex<double> y = y_in / s;

    // d/d(log p) = (p + shift) * d/dp for each log-transformed parameter.
    dy[0] = dy_dyin * (y_st * y_st / (kImag * omega * p.c0 * p.c0)) * p.c0;
    dy[1] = dy_dyin * (-y_st * y_st) * (p.r0 + kEpsResistance);
    dy[2] = (-y * y) * (p.rs + kEpsResistance);
    for (std::size_t k = 0; k < p.branches.size(); ++k) {
      const MotionalBranch& b = p.branches[k];
      const std::complex<double> yb2 = yb[k] * yb[k];
      dy[3 + 3 * k] = dy_dyin * (-yb2) * b.rm;
      dy[3 + 3 * k + 1] = dy_dyin * (-kImag * omega * yb2) * b.lm;
      dy[3 + 3 * k + 2] =
          dy_dyin * (yb2 / (kImag * omega * b.cm * b.cm)) * b.cm;
    }
    for (std::size_t j = 0; j < np; ++j) {
      jac[(2 * i) * np + j] = w_[i] * dy[j].real();
      jac[(2 * i + 1) * np + j] = w_[i] * dy[j].imag();
    }
  }
}

}  // namespace detail

namespace {

std::vector<double> make_weights(const AdmittanceTrace& t, Weighting w) {
  const std::size_t n = t.size();
  std::vector<double> weights(n, 1.0);
  if (w == Weighting::inverse_magnitude) {
    double max_abs = 0.0;
    for (const auto& y : t.y) max_abs = std::max(max_abs, std::abs(y));
    const double floor = std::max(1e-12 * max_abs, 1e-300);
    for (std::size_t i = 0; i < n; ++i)
      weights[i] = 1.0 / std::max(std::abs(t.y[i]), floor);
  }
  return weights;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    std::nth_element(v.begin(), v.begin() + mid - 1, v.end());
    m = 0.5 * (m + v[mid - 1]);
  }
  return m;
}

}  // namespace

void FitOptions::validate() const {
  if (n_branches < 1 || n_branches > MbvdParams::kMaxBranches)
    throw Error("FitOptions: n_branches must be 1.." +
                std::to_string(MbvdParams::kMaxBranches));
  if (max_iterations < 1)
    throw Error("FitOptions: max_iterations must be >= 1");
  if (!(step_tolerance > 0.0))
    throw Error("FitOptions: step_tolerance must be > 0");
}

MbvdParams initial_guess(const AdmittanceTrace& t, std::size_t n_branches) {
  t.validate();
  if (t.size() < 16)
    throw Error("initial_guess: insufficient data (need >= 16 points)");
  if (n_branches < 1 || n_branches > MbvdParams::kMaxBranches)
    throw Error("initial_guess: n_branches must be 1.." +
                std::to_string(MbvdParams::kMaxBranches));
  const std::size_t n = t.size();

  // c0 from the flattest quartile of the |y| slope: off-resonance samples
  // where Im(y)/w approaches the static capacitance.
  std::vector<double> absy(n), slope(n);
  for (std::size_t i = 0; i < n; ++i) absy[i] = std::abs(t.y[i]);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t a = i == 0 ? 0 : i - 1;
    const std::size_t b = i + 1 == n ? i : i + 1;
    slope[i] = std::abs((absy[b] - absy[a]) / (t.freqs[b] - t.freqs[a]));
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return slope[a] < slope[b]; });
  std::vector<double> c0_samples;
  for (std::size_t i = 0; i < std::max<std::size_t>(n / 4, 1); ++i) {
    const std::size_t j = order[i];
    c0_samples.push_back(t.y[j].imag() /
                         (2.0 * std::numbers::pi * t.freqs[j]));
  }
  double c0 = median(std::move(c0_samples));
  if (!(c0 > 0.0)) {
    std::vector<double> mag;
    for (std::size_t i = 0; i < n; ++i)
      mag.push_back(absy[i] / (2.0 * std::numbers::pi * t.freqs[i]));
    c0 = std::max(median(std::move(mag)), 1e-21);
  }

  // One branch per detected peak, strongest first when there are spares.
  std::vector<ResonancePair> pairs = find_resonances(t);
  if (pairs.size() > n_branches) {
    std::stable_sort(pairs.begin(), pairs.end(),
                     [&](const ResonancePair& a, const ResonancePair& b) {
                       auto height = [&](double fs) {
                         const std::size_t i =
                             std::lower_bound(t.freqs.begin(), t.freqs.end(),
                                              fs) -
                             t.freqs.begin();
                         return absy[std::min(i, n - 1)];
                       };
                       return height(a.fs) > height(b.fs);
                     });
    pairs.resize(n_branches);
    std::sort(pairs.begin(), pairs.end(),
              [](const ResonancePair& a, const ResonancePair& b) {
                return a.fs < b.fs;
              });
  }

  MbvdParams p;
  p.c0 = c0;
  p.r0 = 0.0;
  p.rs = 0.0;
  auto add_branch = [&](double fs, double cm, double q) {
    MotionalBranch b;
    b.cm = cm;
    const double w = 2.0 * std::numbers::pi * fs;
    b.lm = 1.0 / (w * w * cm);
    b.rm = w * b.lm / q;
    p.branches.push_back(b);
  };
  for (const ResonancePair& pair : pairs) {
    double cm = 1e-3 * c0;
    if (pair.fp && *pair.fp > pair.fs) {
      const double r = *pair.fp / pair.fs;
      cm = c0 * (r * r - 1.0);
    }
    double q = 100.0;
    try {
      q = q_3db(t, pair.fs);
    } catch (const Error&) {
      // Coarse width unavailable at the band edge; keep the default seed.
    }
    add_branch(pair.fs, cm, q);
  }

  // Pad missing modes with low-coupling placeholders at the band edges.
  const double f_lo = t.freqs.front();
  const double f_hi = t.freqs.back();
  std::size_t pad = 0;
  while (p.branches.size() < n_branches) {
    const bool low_edge = pad % 2 == 0;
    const double shift = 0.02 * (1.0 + static_cast<double>(pad / 2));
    double fs = low_edge ? f_lo * (1.0 + shift) : f_hi * (1.0 - shift);
    bool clash = true;
    while (clash) {
      clash = false;
      for (const MotionalBranch& b : p.branches)
        if (std::abs(branch_fs(b) - fs) <= 2e-6 * fs) {
          fs *= 1.0 + 1e-4;
          clash = true;
        }
    }
    add_branch(fs, 1e-4 * c0, 100.0);
    ++pad;
  }
  p.validate();
  return p;
}

FitResult fit_mbvd(const AdmittanceTrace& t, const FitOptions& opt) {
  opt.validate();
  t.validate();

  MbvdParams seed = initial_guess(t, opt.n_branches);
  const SeedOverrides& ov = opt.seed_overrides;
  if (ov.c0) seed.c0 = *ov.c0;
  if (ov.r0) seed.r0 = *ov.r0;
  if (ov.rs) seed.rs = *ov.rs;
  if (ov.branches) {
    if (ov.branches->size() != opt.n_branches)
      throw Error(
          "fit_mbvd: seed_overrides.branches size must equal n_branches");
    seed.branches = *ov.branches;
  }
  seed.validate();

  const std::size_t n = t.size();
  const std::vector<double> w = make_weights(t, opt.weighting);
  double denom2 = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    denom2 += w[i] * w[i] * std::norm(t.y[i]);
  const double denom = std::sqrt(std::max(denom2, 1e-300));

  const detail::MbvdFitModel model(t.freqs, t.y, w, opt.n_branches);
  detail::LevMarOptions lm_opt;
  lm_opt.max_iterations = opt.max_iterations;
  lm_opt.step_tolerance = opt.step_tolerance;
  detail::LevMarResult lm = detail::levmar(
      [&](const std::vector<double>& u, std::vector<double>& r) {
        model.residual(u, r);
      },
      [&](const std::vector<double>& u, std::vector<double>& jac) {
        model.jacobian(u, jac);
      },
      detail::MbvdFitModel::encode(seed), model.n_residuals(), lm_opt);

  FitResult result;
  result.params = detail::MbvdFitModel::decode(lm.x);
  result.params.r0 = std::max(result.params.r0, 0.0);
  result.params.rs = std::max(result.params.rs, 0.0);
  // Separate any branches the optimizer collapsed onto one fs so the
  // returned params always satisfy the distinctness invariant.
  for (std::size_t i = 0; i < result.params.branches.size(); ++i)
    for (std::size_t j = i + 1; j < result.params.branches.size(); ++j) {
      MotionalBranch& bj = result.params.branches[j];
      const double fi = branch_fs(result.params.branches[i]);
      while (std::abs(fi - branch_fs(bj)) <=
             1e-6 * std::max(fi, branch_fs(bj)))
        bj.lm *= 1.0 + 1e-5;
    }
  result.params.validate();
  result.residual = lm.residual_norm / denom;
  result.iterations = lm.iterations;
  result.converged = lm.converged;
  result.residual_history.reserve(lm.residual_history.size());
  for (double h : lm.residual_history)
    result.residual_history.push_back(h / denom);
  return result;
}

std::string fit_result_to_json(const FitResult& r) {
  std::ostringstream os;
  std::istringstream params(params_to_json(r.params));
  os << "{\n  \"params\": ";
  std::string line;
  bool first = true;
  while (std::getline(params, line)) {
    if (!first) os << "\n  " << line;
    else os << line;
    first = false;
  }
  os << ",\n";
  os << "  \"residual\": " << detail::fmt_e(r.residual) << ",\n";
  os << "  \"iterations\": " << r.iterations << ",\n";
  os << "  \"converged\": " << (r.converged ? "true" : "false") << "\n";
  os << "}\n";
  return os.str();
}

}  // namespace p3f
