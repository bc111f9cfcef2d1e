#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace p3f::detail {

struct LevMarOptions {
  std::size_t max_iterations = 500;
  double step_tolerance = 1e-10;  // inf-norm threshold on the accepted step
  double lambda_init = 1e-3;
  double lambda_max = 1e12;
  double max_step = 3.0;  // inf-norm clamp on a single step
};

struct LevMarResult {
  std::vector<double> x;
  double residual_norm = 0.0;  // sqrt(sum r^2) at x
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<double> residual_history;  // norm at seed and after accepts
};

using ResidualFn =
    std::function<void(const std::vector<double>&, std::vector<double>&)>;
/// Row-major m x n Jacobian of the residual vector.
using JacobianFn =
    std::function<void(const std::vector<double>&, std::vector<double>&)>;

/// In-place Cholesky solve of the SPD system A x = b (A row-major n x n,
/// lower triangle used). Returns false on a non-positive pivot.
bool solve_spd(std::vector<double>& a, std::vector<double>& b, std::size_t n);

/// Levenberg-Marquardt with diag(J^T J) scaling. Throws p3f::Error when
/// the damped normal equations stay singular up to lambda_max or the
/// residual is non-finite at the seed.
LevMarResult levmar(const ResidualFn& residual, const JacobianFn& jacobian,
                    std::vector<double> x0, std::size_t m,
                    const LevMarOptions& opt);

}  // namespace p3f::detail
