#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace p3f {

/// Error type thrown by all modules. Messages name the offending field,
/// line number, or frequency where that is known.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FrequencyGrid {
  enum class Spacing { linear, log };

  double f_start = 0.0;   // Hz
  double f_stop = 0.0;    // Hz
  std::size_t n_points = 0;
  Spacing spacing = Spacing::linear;

  void validate() const;
  std::vector<double> frequencies() const;
};

/// Frequency-indexed complex admittance, the common currency between
/// simulation, fitting, and metric extraction.
struct AdmittanceTrace {
  std::vector<double> freqs;             // Hz, strictly ascending
  std::vector<std::complex<double>> y;   // S

  /// Reduction tag recorded by io::dut_admittance ("series", "shunt",
  /// "one_port"); empty for simulated or CSV-loaded traces.
  std::optional<std::string> topology;

  /// Indices of samples flagged as exact lossless poles by the stack
  /// simulator. The stored sample is evaluated at a nudged frequency so
  /// the trace itself stays finite.
  std::vector<std::size_t> pole_indices;

  std::size_t size() const { return freqs.size(); }
  void validate() const;
};

}  // namespace p3f
