#include "p3f/noise.hpp"

#include <cmath>
#include <numbers>

namespace p3f {

double NormalSampler::uniform01() {
  // (0, 1) open interval; mt19937 output is standardized so the stream is
  // reproducible everywhere.
  return (static_cast<double>(rng_()) + 0.5) / 4294967296.0;
}

double NormalSampler::operator()() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  const double u1 = uniform01();
  const double u2 = uniform01();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(a);
  have_spare_ = true;
  return r * std::cos(a);
}

void apply_multiplicative_noise(AdmittanceTrace& t, double sigma,
                                std::uint32_t seed) {
  if (!(sigma >= 0.0)) throw Error("noise: sigma must be >= 0");
  if (sigma == 0.0) return;
  NormalSampler g(seed);
  for (auto& y : t.y) {
    const double re = g();
    const double im = g();
    y *= std::complex<double>(1.0 + sigma * re, sigma * im);
  }
}

}  // namespace p3f
