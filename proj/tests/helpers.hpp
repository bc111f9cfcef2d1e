#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "p3f/bvd.hpp"
#include "p3f/stack_model.hpp"
#include "p3f/trace.hpp"

namespace testutil {

inline constexpr double kPi = std::numbers::pi;

/// Effective thickness-mode constants used across the suites (same set as
/// configs/bilayer_p3f.json).
inline p3f::MaterialProps linbo3(double q_mech = 200.0) {
  p3f::MaterialProps m;
  m.density = 4700.0;
  m.c_stiff = 2.5e11;
  m.e_piezo = 5.6;
  m.eps_clamped = 3.19e-10;
  m.q_mech = q_mech;
  return m;
}

inline p3f::MaterialProps lossless_linbo3() {
  return linbo3(std::numeric_limits<double>::infinity());
}

inline p3f::Stack single_layer(const p3f::MaterialProps& m, double t,
                               double area = 4012e-12, int polarity = 1) {
  p3f::Stack s;
  s.layers.push_back({m, t, polarity});
  s.area = area;
  return s;
}

inline p3f::Stack bilayer(const p3f::MaterialProps& m, double t,
                          double area = 4012e-12) {
  p3f::Stack s;
  s.layers.push_back({m, t, +1});
  s.layers.push_back({m, t, -1});
  s.area = area;
  return s;
}

/// Independent closed-form Mason admittance of a single free plate:
/// y = i*w*C0 / (1 - kt2 * tan(phi)/phi), phi = w*t/(2*v), v = sqrt(c/rho),
/// with the same complex-stiffness loss model. Coded from the formula, not
/// from the transfer-matrix chain.
inline std::complex<double> mason_single_layer(const p3f::MaterialProps& m,
                                               double thickness, double area,
                                               double f) {
  const std::complex<double> i{0.0, 1.0};
  std::complex<double> c = m.c_stiff;
  if (std::isfinite(m.q_mech)) c *= std::complex<double>(1.0, 1.0 / m.q_mech);
  const std::complex<double> v = std::sqrt(c / m.density);
  const double w = 2.0 * kPi * f;
  const std::complex<double> phi = w * thickness / (2.0 * v);
  // With complex stiffness the coupling factor is complex as well.
  const std::complex<double> kt2 =
      m.e_piezo * m.e_piezo / (c * m.eps_clamped);
  const double c0 = m.eps_clamped * area / thickness;
  return i * w * c0 / (1.0 - kt2 * std::tan(phi) / phi);
}

/// Analytic series-resonance frequency of the lossless single plate from
/// the closed form: the root of 1 - kt2*tan(phi)/phi below fp = v/(2t).
inline double mason_fs(const p3f::MaterialProps& m, double thickness) {
  const double v = std::sqrt(m.c_stiff / m.density);
  const double fp = v / (2.0 * thickness);
  const double kt2 = m.e_piezo * m.e_piezo / (m.c_stiff * m.eps_clamped);
  auto g = [&](double f) {
    const double phi = kPi / 2.0 * f / fp;
    return 1.0 - kt2 * std::tan(phi) / phi;
  };
  double lo = 1e-6 * fp, hi = fp * (1.0 - 1e-12);
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max(std::abs(b), 1e-300);
}

inline double rel_err(const std::complex<double>& a,
                      const std::complex<double>& b) {
  return std::abs(a - b) / std::max(std::abs(b), 1e-300);
}

struct Rng {
  std::mt19937 gen;
  explicit Rng(std::uint32_t seed) : gen(seed) {}
  double uniform(double lo, double hi) {
    return lo + (hi - lo) * (gen() + 0.5) / 4294967296.0;
  }
};

}  // namespace testutil
