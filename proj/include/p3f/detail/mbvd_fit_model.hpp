#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "p3f/bvd.hpp"

namespace p3f::detail {

/// Shift applied to r0/rs before the log transform so zero-seeded
/// resistances stay representable and strictly improvable.
inline constexpr double kEpsResistance = 1e-3;  // Ohm

/// Weighted mBVD residual/Jacobian over log-transformed parameters
/// [log c0, log(r0+eps), log(rs+eps), (log rm, log lm, log cm) per branch].
/// Shared between the fitter and the Jacobian verification tests.
class MbvdFitModel {
 public:
  MbvdFitModel(std::vector<double> freqs, std::vector<std::complex<double>> y,
               std::vector<double> weights, std::size_t n_branches);

  std::size_t n_params() const { return 3 + 3 * n_branches_; }
  std::size_t n_residuals() const { return 2 * freqs_.size(); }

  static std::vector<double> encode(const MbvdParams& p);
  /// Raw decode used inside the optimizer; r0/rs may sit in (-eps, 0)
  /// while iterating and are clamped only in the reported result.
  static MbvdParams decode(const std::vector<double>& u);

  /// r[2i] = w_i Re(Y(u, f_i) - y_i), r[2i+1] = the imaginary part.
  void residual(const std::vector<double>& u, std::vector<double>& r) const;
  /// Row-major (2N x n_params) analytic Jacobian of residual().
  void jacobian(const std::vector<double>& u, std::vector<double>& jac) const;

 private:
  std::vector<double> freqs_;
  std::vector<std::complex<double>> y_;
  std::vector<double> w_;
  std::size_t n_branches_;
};

}  // namespace p3f::detail
