#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "p3f/bvd.hpp"
#include "p3f/trace.hpp"

namespace p3f {

enum class Weighting { uniform, inverse_magnitude };

/// Optional partial seed; any field set here replaces the corresponding
/// piece of the automatic initial guess.
struct SeedOverrides {
  std::optional<double> c0;
  std::optional<double> r0;
  std::optional<double> rs;
  std::optional<std::vector<MotionalBranch>> branches;
};

struct FitOptions {
  std::size_t n_branches = 1;
  std::size_t max_iterations = 500;
  double step_tolerance = 1e-10;  // relative step convergence threshold
  Weighting weighting = Weighting::inverse_magnitude;
  SeedOverrides seed_overrides;

  void validate() const;
};

struct FitResult {
  MbvdParams params;
  double residual = 0.0;  // weighted RMS misfit, relative (dimensionless)
  std::size_t iterations = 0;
  bool converged = false;

  /// Weighted residual after each accepted step, starting at the seed.
  /// Non-increasing by construction.
  std::vector<double> residual_history;
};

/// Deterministic seed: c0 from the flattest-|d|y|/df| quartile of
/// Im(y)/w, branch fs/cm from detected (fs, fp) pairs, q from a coarse
/// 3-dB width; missing peaks are padded with low-coupling placeholder
/// branches at the band edges. Throws "insufficient data" below 16 points.
MbvdParams initial_guess(const AdmittanceTrace& t, std::size_t n_branches);

/// Damped least squares on log-transformed positive parameters
/// (c0, r0+eps, rs+eps, rm, lm, cm). Non-convergence is reported through
/// converged = false with the best parameters so far, not an exception;
/// a rank-deficient Jacobian throws "ill-conditioned".
FitResult fit_mbvd(const AdmittanceTrace& t, const FitOptions& opt);

/// {"params": {...}, "residual": ..., "iterations": N, "converged": bool}
std::string fit_result_to_json(const FitResult& r);

}  // namespace p3f
