#pragma once

#include <cstdint>
#include <random>

#include "p3f/trace.hpp"

namespace p3f {

/// Standard-normal sampler: Box-Muller over mt19937 so fixed seeds give
/// the same stream on every platform (std::normal_distribution does not
/// guarantee that).
class NormalSampler {
 public:
  explicit NormalSampler(std::uint32_t seed) : rng_(seed) {}

  double operator()();

 private:
  double uniform01();

  std::mt19937 rng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

/// y_i *= 1 + sigma * (g1 + i*g2), g ~ N(0,1).
void apply_multiplicative_noise(AdmittanceTrace& t, double sigma,
                                std::uint32_t seed);

}  // namespace p3f
