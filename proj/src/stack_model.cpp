#include "p3f/stack_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace p3f {

namespace {

constexpr std::complex<double> kImag{0.0, 1.0};

bool finite(const std::complex<double>& v) {
  return std::isfinite(v.real()) && std::isfinite(v.imag());
}

/// Per-layer wave quantities at one frequency.
struct LayerWave {
  std::complex<double> c;   // complex stiffness c*(1 + i/q)
  std::complex<double> k;   // w * sqrt(rho / c)
  std::complex<double> ck;  // acoustic impedance scale c*k
  double h = 0.0;           // signed piezo constant e/eps, 0 for polarity 0
  double t = 0.0;
  double eps = 0.0;
};

LayerWave make_wave(const Layer& layer, double omega, bool ignore_loss) {
  LayerWave w;
  const MaterialProps& m = layer.material;
  w.c = m.c_stiff;
  if (!ignore_loss && std::isfinite(m.q_mech))
    w.c = m.c_stiff * std::complex<double>(1.0, 1.0 / m.q_mech);
  w.k = omega * std::sqrt(m.density / w.c);
  w.ck = w.c * w.k;
  w.h = layer.polarity == 0
            ? 0.0
            : static_cast<double>(layer.polarity) * m.e_piezo / m.eps_clamped;
  w.t = layer.thickness;
  w.eps = m.eps_clamped;
  return w;
}

/// Mechanical state (displacement u, stress T) at a horizontal cut.
struct State {
  std::complex<double> u;
  std::complex<double> T;
};

/// Propagates a state across one layer under electric displacement D.
/// Within the layer u = a*sin(kz) + b*cos(kz), T = ck*(a*cos - b*sin) - hD.
State cross_layer(const LayerWave& w, const State& s, double d) {
  const std::complex<double> kt = w.k * w.t;
  const std::complex<double> sn = std::sin(kt);
  const std::complex<double> cs = std::cos(kt);
  const std::complex<double> a = (s.T + w.h * d) / w.ck;
  const std::complex<double> b = s.u;
  State top;
  top.u = a * sn + b * cs;
  top.T = w.ck * (a * cs - b * sn) - w.h * d;
  return top;
}

/// Boundary-system summary for one frequency. The driven solution is
/// u(z) = alpha(z)*u_bot + beta(z)*D with free faces, giving
///   y = i*w*A * alphaT / (alphaT*(G - Q) + P*betaT)
/// where alphaT/betaT are the top-face stresses of the two basis states,
/// G = sum t/eps, and P/Q collect the per-layer piezo voltage terms
/// sum h*(u_top - u_bot) of each basis state.
struct BoundarySystem {
  std::complex<double> alpha_t;  // top stress of the homogeneous state
  std::complex<double> beta_t;   // top stress of the D-driven state
  std::complex<double> p;        // sum h * delta(alpha_u)
  std::complex<double> q;        // sum h * delta(beta_u)
  double g = 0.0;                // sum t/eps
};

BoundarySystem assemble(const Stack& s, double f, bool ignore_loss) {
  const double omega = 2.0 * std::numbers::pi * f;
  State alpha{1.0, 0.0};  // unit bottom displacement, free bottom face
  State beta{0.0, 0.0};   // zero bottom state, unit drive
  BoundarySystem b;
  for (const Layer& layer : s.layers) {
    const LayerWave w = make_wave(layer, omega, ignore_loss);
    const State alpha_top = cross_layer(w, alpha, 0.0);
    const State beta_top = cross_layer(w, beta, 1.0);
    b.p += w.h * (alpha_top.u - alpha.u);
    b.q += w.h * (beta_top.u - beta.u);
    b.g += w.t / w.eps;
    alpha = alpha_top;
    beta = beta_top;
  }
  b.alpha_t = alpha.T;
  b.beta_t = beta.T;
  return b;
}

std::complex<double> admittance_raw(const Stack& s, double f) {
  const BoundarySystem b = assemble(s, f, false);
  const double omega = 2.0 * std::numbers::pi * f;
  const std::complex<double> den = b.alpha_t * (b.g - b.q) + b.p * b.beta_t;
  return kImag * omega * s.area * b.alpha_t / den;
}

double db20(double mag) {
  return 20.0 * std::log10(std::max(mag, 1e-300));
}

/// Vertex of the parabola through three samples; falls back to the middle
/// sample when the points are collinear.
struct Vertex {
  double x;
  double y;
};

Vertex refine_extremum(const std::vector<double>& xs,
                       const std::vector<double>& ys, std::size_t i) {
  const double x1 = xs[i - 1], x2 = xs[i], x3 = xs[i + 1];
  const double y1 = ys[i - 1], y2 = ys[i], y3 = ys[i + 1];
  const double d1 = x2 - x1;
  const double d2 = x2 - x3;
  const double num = d1 * d1 * (y2 - y3) - d2 * d2 * (y2 - y1);
  const double den = d1 * (y2 - y3) - d2 * (y2 - y1);
  if (den == 0.0 || !std::isfinite(num / den)) return {x2, y2};
  double xv = x2 - 0.5 * num / den;
  xv = std::clamp(xv, x1, x3);
  // Lagrange evaluation of the same parabola at the vertex.
  const double l1 = (xv - x2) * (xv - x3) / ((x1 - x2) * (x1 - x3));
  const double l2 = (xv - x1) * (xv - x3) / ((x2 - x1) * (x2 - x3));
  const double l3 = (xv - x1) * (xv - x2) / ((x3 - x1) * (x3 - x2));
  return {xv, y1 * l1 + y2 * l2 + y3 * l3};
}

/// Topographic prominence of peak i on the dB curve: height above the
/// higher of the two valley floors reached before higher ground.
double peak_prominence(const std::vector<double>& db, std::size_t i) {
  const double peak = db[i];
  double left_min = peak;
  for (std::size_t j = i; j-- > 0;) {
    if (db[j] > peak) break;
    left_min = std::min(left_min, db[j]);
  }
  double right_min = peak;
  for (std::size_t j = i + 1; j < db.size(); ++j) {
    if (db[j] > peak) break;
    right_min = std::min(right_min, db[j]);
  }
  return peak - std::max(left_min, right_min);
}

}  // namespace

void MaterialProps::validate() const {
  if (!(density > 0.0) || !std::isfinite(density))
    throw Error("MaterialProps: density must be > 0");
  if (!(c_stiff > 0.0) || !std::isfinite(c_stiff))
    throw Error("MaterialProps: c_stiff must be > 0");
  if (!(e_piezo >= 0.0) || !std::isfinite(e_piezo))
    throw Error("MaterialProps: e_piezo must be >= 0");
  if (!(eps_clamped > 0.0) || !std::isfinite(eps_clamped))
    throw Error("MaterialProps: eps_clamped must be > 0");
  if (!(q_mech > 0.0)) throw Error("MaterialProps: q_mech must be > 0");
  const double kt2 = e_piezo * e_piezo / (c_stiff * eps_clamped);
  if (!(kt2 < 1.0))
    throw Error("MaterialProps: intrinsic coupling k_t^2 must be < 1");
}

double intrinsic_kt2(const MaterialProps& m) {
  return m.e_piezo * m.e_piezo / (m.c_stiff * m.eps_clamped);
}

void Layer::validate() const {
  material.validate();
  if (!(thickness > 0.0) || !std::isfinite(thickness))
    throw Error("Layer: thickness must be > 0");
  if (polarity < -1 || polarity > 1)
    throw Error("Layer: polarity must be -1, 0, or +1");
}

double Stack::total_thickness() const {
  double t = 0.0;
  for (const Layer& l : layers) t += l.thickness;
  return t;
}

void Stack::validate() const {
  if (layers.empty()) throw Error("Stack: at least one layer required");
  for (const Layer& l : layers) l.validate();
  if (!(area > 0.0) || !std::isfinite(area))
    throw Error("Stack: area must be > 0");
}

void DeviceGeometry::validate() const {
  if (n_electrodes < 2) throw Error("DeviceGeometry: n_electrodes must be >= 2");
  if (!(electrode_width > 0.0))
    throw Error("DeviceGeometry: electrode_width must be > 0");
  if (!(electrode_gap > 0.0))
    throw Error("DeviceGeometry: electrode_gap must be > 0");
  if (!(aperture > 0.0)) throw Error("DeviceGeometry: aperture must be > 0");
  if (!(electrode_thickness > 0.0))
    throw Error("DeviceGeometry: electrode_thickness must be > 0");
  if (busline_distance != 0.0 && !(busline_distance > 0.0))
    throw Error("DeviceGeometry: busline_distance must be > 0");
  if (wavelength != 0.0) {
    const double expect = 2.0 * (electrode_width + electrode_gap);
    if (std::abs(wavelength - expect) > 1e-9 * expect)
      throw Error("DeviceGeometry: wavelength must equal 2*(Le + Lg)");
  }
}

double estimate_c0(const DeviceGeometry& geom, double eps_eff,
                   double fringing_factor) {
  geom.validate();
  if (!(eps_eff > 0.0)) throw Error("estimate_c0: eps_eff must be > 0");
  if (!(fringing_factor > 0.0))
    throw Error("estimate_c0: fringing factor must be > 0");
  return (geom.n_electrodes - 1) * eps_eff * geom.aperture /
         geom.electrode_gap * fringing_factor;
}

std::complex<double> input_admittance_at(const Stack& s, double f,
                                         bool* pole) {
  if (pole) *pole = false;
  std::complex<double> y = admittance_raw(s, f);
  if (finite(y)) return y;
  // Singular boundary solve at an exact lossless resonance: flag the
  // frequency and sample just beside the pole so the trace stays finite.
  if (pole) *pole = true;
  double nudge = 0x1p-40;
  for (int attempt = 0; attempt < 12; ++attempt) {
    y = admittance_raw(s, f * (1.0 + nudge));
    if (finite(y)) return y;
    y = admittance_raw(s, f * (1.0 - nudge));
    if (finite(y)) return y;
    nudge *= 16.0;
  }
  throw Error("input_admittance: persistent singular solve near " +
              std::to_string(f) + " Hz");
}

AdmittanceTrace input_admittance(const Stack& s, const FrequencyGrid& g) {
  s.validate();
  AdmittanceTrace t;
  t.freqs = g.frequencies();
  t.y.resize(t.freqs.size());
  for (std::size_t i = 0; i < t.freqs.size(); ++i) {
    bool pole = false;
    t.y[i] = input_admittance_at(s, t.freqs[i], &pole);
    if (pole) t.pole_indices.push_back(i);
  }
  return t;
}

std::vector<ResonancePair> find_resonances(const AdmittanceTrace& t,
                                           const ResonanceOptions& opt) {
  t.validate();
  const std::size_t n = t.size();
  std::vector<ResonancePair> pairs;
  if (n < 3) return pairs;

  std::vector<double> db(n);
  for (std::size_t i = 0; i < n; ++i) db[i] = db20(std::abs(t.y[i]));

  std::vector<std::size_t> peaks;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (db[i] > db[i - 1] && db[i] >= db[i + 1] &&
        peak_prominence(db, i) >= opt.min_prominence_db)
      peaks.push_back(i);
  }

  for (std::size_t k = 0; k < peaks.size(); ++k) {
    const std::size_t i = peaks[k];
    ResonancePair pair;
    pair.fs = refine_extremum(t.freqs, db, i).x;

    // fp: deepest |y| minimum between this peak and the next one (or the
    // trace end). A minimum sitting on the trace end means the null was
    // not captured, so fp stays absent.
    const std::size_t hi = (k + 1 < peaks.size()) ? peaks[k + 1] : n - 1;
    std::size_t jmin = i;
    for (std::size_t j = i + 1; j <= hi; ++j)
      if (db[j] < db[jmin]) jmin = j;
    if (jmin > i && jmin < n - 1 && jmin < hi)
      pair.fp = refine_extremum(t.freqs, db, jmin).x;
    pairs.push_back(pair);
  }
  return pairs;
}

StressProfile mode_stress_profile(const Stack& s, double f,
                                  std::size_t n_samples) {
  s.validate();
  if (n_samples < 64) n_samples = 64;
  const BoundarySystem b = assemble(s, f, false);
  const std::complex<double> u_bot = -b.beta_t / b.alpha_t;
  if (!finite(u_bot))
    throw Error("mode_stress_profile: exact lossless pole at " +
                std::to_string(f) + " Hz; add loss or offset the frequency");

  const double omega = 2.0 * std::numbers::pi * f;
  const double total = s.total_thickness();
  StressProfile profile;
  profile.depths.resize(n_samples);
  profile.stress.resize(n_samples);

  // Re-chain the combined driven state and sample T(z) inside each layer.
  State st{u_bot, 0.0};
  std::size_t layer_idx = 0;
  double layer_bottom = 0.0;
  LayerWave w = make_wave(s.layers[0], omega, false);
  for (std::size_t i = 0; i < n_samples; ++i) {
    const double z =
        total * static_cast<double>(i) / static_cast<double>(n_samples - 1);
    while (layer_idx + 1 < s.layers.size() &&
           z > layer_bottom + s.layers[layer_idx].thickness) {
      st = cross_layer(w, st, 1.0);
      layer_bottom += s.layers[layer_idx].thickness;
      ++layer_idx;
      w = make_wave(s.layers[layer_idx], omega, false);
    }
    const std::complex<double> a = (st.T + w.h) / w.ck;
    const std::complex<double> kz = w.k * (z - layer_bottom);
    profile.depths[i] = z;
    profile.stress[i] =
        w.ck * (a * std::cos(kz) - st.u * std::sin(kz)) - w.h;
  }
  return profile;
}

int label_mode(const StressProfile& p) {
  if (p.depths.size() != p.stress.size() || p.depths.empty())
    throw Error("label_mode: malformed profile");
  double max_abs = 0.0;
  std::size_t imax = 0;
  for (std::size_t i = 0; i < p.stress.size(); ++i) {
    const double a = std::abs(p.stress[i]);
    if (!std::isfinite(a)) throw Error("label_mode: non-finite stress sample");
    if (a > max_abs) {
      max_abs = a;
      imax = i;
    }
  }
  if (max_abs == 0.0) throw Error("label_mode: degenerate profile");

  const std::complex<double> rot =
      std::exp(-kImag * std::arg(p.stress[imax]));
  const double band = 1e-3 * max_abs;
  int changes = 0;
  int last_sign = 0;
  for (const std::complex<double>& v : p.stress) {
    const double re = (v * rot).real();
    if (std::abs(re) < band) continue;
    const int sign = re > 0.0 ? 1 : -1;
    if (last_sign != 0 && sign != last_sign) ++changes;
    last_sign = sign;
  }
  return 1 + changes;
}

namespace {

/// Lossless boundary residuals: m21 vanishes at mechanical (parallel)
/// resonance, den at the electrically loaded (series) resonance.
struct Residuals {
  double m21;
  double den;
};

Residuals lossless_residuals(const Stack& s, double f) {
  const BoundarySystem b = assemble(s, f, true);
  const std::complex<double> den = b.alpha_t * (b.g - b.q) + b.p * b.beta_t;
  return {b.alpha_t.real(), den.real()};
}

double bisect(const Stack& s, double lo, double hi, bool use_den) {
  auto eval = [&](double f) {
    const Residuals r = lossless_residuals(s, f);
    return use_den ? r.den : r.m21;
  };
  double flo = eval(lo);
  for (int i = 0; i < 200 && (hi - lo) > 1e-15 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fmid = eval(mid);
    if ((fmid < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fmid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

std::optional<ModePair> lossless_mode_pair(const Stack& s, double f_lo,
                                           double f_hi) {
  s.validate();
  if (!(f_lo > 0.0) || !(f_hi > f_lo))
    throw Error("lossless_mode_pair: invalid frequency window");

  constexpr int kScan = 512;
  std::vector<Residuals> r(kScan + 1);
  std::vector<double> f(kScan + 1);
  for (int i = 0; i <= kScan; ++i) {
    f[i] = f_lo + (f_hi - f_lo) * i / kScan;
    r[i] = lossless_residuals(s, f[i]);
  }

  // First mechanical root in the window is fp.
  double fp = -1.0;
  int fp_cell = -1;
  for (int i = 0; i < kScan; ++i) {
    if ((r[i].m21 < 0.0) != (r[i + 1].m21 < 0.0)) {
      fp = bisect(s, f[i], f[i + 1], false);
      fp_cell = i;
      break;
    }
  }
  if (fp < 0.0) return std::nullopt;

  // fs is the last electrical root at or below fp.
  double fs = -1.0;
  for (int i = fp_cell; i >= 0; --i) {
    if ((r[i].den < 0.0) != (r[i + 1].den < 0.0)) {
      fs = bisect(s, f[i], f[i + 1], true);
      if (fs <= fp * (1.0 + 1e-12)) break;
      fs = -1.0;
    }
  }
  if (fs < 0.0) return std::nullopt;
  return ModePair{std::min(fs, fp), fp};
}

}  // namespace p3f
