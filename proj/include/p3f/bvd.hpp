#pragma once

#include <complex>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "p3f/metrics.hpp"
#include "p3f/trace.hpp"

namespace p3f {

struct MotionalBranch {
  double rm = 0.0;  // Ohm
  double lm = 0.0;  // H
  double cm = 0.0;  // F

  void validate() const;
};

/// Modified Butterworth-Van Dyke parameter set. Topology is fixed:
/// rs in series with the parallel combination of the static branch
/// (r0 + c0 in series) and the motional branches.
struct MbvdParams {
  static constexpr std::size_t kMaxBranches = 8;

  double c0 = 0.0;  // F
  double r0 = 0.0;  // Ohm
  double rs = 0.0;  // Ohm
  std::vector<MotionalBranch> branches;

  void validate() const;
};

/// Y(w) = 1 / (rs + 1 / (1/(r0 + 1/(jwc0)) + sum_k 1/(rm + jwlm + 1/(jwcm))))
std::complex<double> mbvd_admittance_at(const MbvdParams& p, double f);
AdmittanceTrace mbvd_admittance(const MbvdParams& p, const FrequencyGrid& g);

/// Series resonance fs = 1 / (2*pi*sqrt(lm*cm)).
double branch_fs(const MotionalBranch& b);

/// Branch quality factor Q = 2*pi*fs*lm/rm. Throws for rm = 0.
double branch_q(const MotionalBranch& b);

struct SynthTarget {
  double fs = 0.0;  // Hz
  double k2 = 0.0;  // coupling under the chosen convention
  double q = 0.0;   // branch Q
};

/// Inverse synthesis: builds branches whose (fs, k2, q) round-trip through
/// mbvd_admittance and metric extraction to the targets. cm solves the
/// convention exactly through fp = fs*sqrt(1 + cm/c0).
MbvdParams synthesize(const std::vector<SynthTarget>& targets, double c0,
                      double rs, double r0,
                      K2Convention conv = kDefaultK2Convention);

/// Per-branch metrics from fitted parameters: fs and Q from each branch,
/// fp = fs*sqrt(1 + cm/c0), k2 under the convention. This is the
/// extraction path that decouples overlapping tones after a fit; raw-trace
/// extraction lives in extract_report(const AdmittanceTrace&, ...).
std::vector<ResonanceMetrics> extract_report(const MbvdParams& p,
                                             K2Convention conv);

/// Fixed-field-order JSON, %.12e numerics:
/// {"c0_f":..., "r0_ohm":..., "rs_ohm":..., "branches":[{"rm_ohm":...,...}]}
/// `generator_metadata`, when non-empty, is appended verbatim as the value
/// of a trailing "generator" key.
std::string params_to_json(const MbvdParams& p,
                           const std::string& generator_metadata = "");
MbvdParams params_from_json(std::string_view text);

}  // namespace p3f
