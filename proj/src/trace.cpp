#include "p3f/trace.hpp"

#include <cmath>

namespace p3f {

void FrequencyGrid::validate() const {
  if (!(f_start > 0.0) || !std::isfinite(f_start))
    throw Error("FrequencyGrid: f_start must be > 0");
  if (!(f_stop > f_start) || !std::isfinite(f_stop))
    throw Error("FrequencyGrid: f_stop must exceed f_start");
  if (n_points < 2) throw Error("FrequencyGrid: n_points must be >= 2");
}

std::vector<double> FrequencyGrid::frequencies() const {
  validate();
  std::vector<double> f(n_points);
  const double n1 = static_cast<double>(n_points - 1);
  if (spacing == Spacing::linear) {
    for (std::size_t i = 0; i < n_points; ++i) {
      const double a = static_cast<double>(i) / n1;
      f[i] = f_start + (f_stop - f_start) * a;
    }
  } else {
    const double lg0 = std::log(f_start);
    const double lg1 = std::log(f_stop);
    for (std::size_t i = 0; i < n_points; ++i) {
      const double a = static_cast<double>(i) / n1;
      f[i] = std::exp(lg0 + (lg1 - lg0) * a);
    }
  }
  f.front() = f_start;
  f.back() = f_stop;
  return f;
}

void AdmittanceTrace::validate() const {
  if (freqs.size() != y.size())
    throw Error("AdmittanceTrace: freqs and y lengths differ");
  if (freqs.empty()) throw Error("AdmittanceTrace: empty trace");
  for (std::size_t i = 0; i < freqs.size(); ++i) {
    if (!std::isfinite(freqs[i]) || freqs[i] <= 0.0)
      throw Error("AdmittanceTrace: non-finite or non-positive frequency");
    if (i > 0 && !(freqs[i] > freqs[i - 1]))
      throw Error("AdmittanceTrace: frequencies not strictly ascending");
    if (!std::isfinite(y[i].real()) || !std::isfinite(y[i].imag()))
      throw Error("AdmittanceTrace: non-finite admittance sample");
  }
}

}  // namespace p3f
