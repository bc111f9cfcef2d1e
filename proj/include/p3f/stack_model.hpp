#pragma once

#include <complex>
#include <limits>
#include <optional>
#include <vector>

#include "p3f/trace.hpp"

namespace p3f {

/// Effective 1-D thickness-mode constants of one material. Loss enters
/// through a complex stiffness c * (1 + i/q_mech); q_mech = infinity means
/// lossless.
struct MaterialProps {
  double density = 0.0;      // kg/m^3
  double c_stiff = 0.0;      // Pa, stiffened elastic constant c^D
  double e_piezo = 0.0;      // C/m^2, piezoelectric stress constant magnitude
  double eps_clamped = 0.0;  // F/m, clamped permittivity
  double q_mech = std::numeric_limits<double>::infinity();

  void validate() const;
};

/// Intrinsic coupling k_t^2 = e^2 / (c^D * eps).
double intrinsic_kt2(const MaterialProps& m);

struct Layer {
  MaterialProps material;
  double thickness = 0.0;  // m
  int polarity = 0;        // sign on e_piezo; 0 = non-piezoelectric layer

  void validate() const;
};

/// Ordered 1-D multilayer, bottom to top, with stress-free outer faces
/// (released plate). The layers form a single electrical series path:
/// the electric displacement is uniform through the stack and the port
/// voltage is the sum of per-layer voltage drops.
struct Stack {
  enum class Boundary { free_free };

  std::vector<Layer> layers;
  double area = 0.0;  // m^2
  Boundary boundary = Boundary::free_free;

  double total_thickness() const;
  void validate() const;
};

struct DeviceGeometry {
  int n_electrodes = 0;
  double electrode_width = 0.0;      // m
  double electrode_gap = 0.0;        // m
  double wavelength = 0.0;           // m; 0 = not supplied
  double aperture = 0.0;             // m
  double busline_distance = 0.0;     // m; 0 = not supplied
  double electrode_thickness = 0.0;  // m

  void validate() const;
};

/// Parallel-plate-per-gap IDT estimate used only to seed fits:
/// (n_electrodes - 1) * eps_eff * aperture / electrode_gap * fringing.
/// For thin-film IDTs pass eps_eff = clamped permittivity times film
/// thickness (see README); the result is an order-of-magnitude seed.
double estimate_c0(const DeviceGeometry& geom, double eps_eff,
                   double fringing_factor = 1.0);

/// Standing-wave stress profile through the stack thickness.
struct StressProfile {
  std::vector<double> depths;                 // m, 0 at bottom face
  std::vector<std::complex<double>> stress;   // Pa per unit drive
};

/// One-port electrical input admittance of the stack over the grid,
/// chaining per-layer acoustic transfer matrices and superposing the
/// signed piezoelectric source terms. Deterministic; sequential over
/// frequency. Exact lossless poles are flagged in the trace rather than
/// emitted as non-finite samples.
AdmittanceTrace input_admittance(const Stack& s, const FrequencyGrid& g);

/// Single-frequency evaluation. If `pole` is non-null it is set when the
/// boundary solve is singular at f (lossless resonance); the returned
/// value is then evaluated at a relatively nudged frequency.
std::complex<double> input_admittance_at(const Stack& s, double f,
                                         bool* pole = nullptr);

struct ResonancePair {
  double fs = 0.0;           // Hz, |y| local maximum (refined)
  std::optional<double> fp;  // Hz, following |y| minimum; absent if trailing
};

struct ResonanceOptions {
  double min_prominence_db = 3.0;  // peaks below this prominence are omitted
};

/// Series/parallel resonance pairs of a trace: |y| maxima refined by
/// parabolic interpolation in log|y|, each paired with the following
/// |y| minimum, ordered by fs.
std::vector<ResonancePair> find_resonances(const AdmittanceTrace& t,
                                           const ResonanceOptions& opt = {});

/// Forced stress response at frequency f under unit electric displacement
/// drive, sampled at n_samples uniformly spaced depths (n_samples >= 64).
/// Throws if f is an exact lossless pole of the boundary solve.
StressProfile mode_stress_profile(const Stack& s, double f,
                                  std::size_t n_samples = 257);

/// Thickness-mode order: 1 + sign changes of the phase-normalized real
/// stress across interior samples, with a hysteresis band of
/// 1e-3 * max|stress|. Throws on an all-zero profile.
int label_mode(const StressProfile& p);

struct ModePair {
  double fs = 0.0;
  double fp = 0.0;
};

/// Exact (fs, fp) of the lossless skeleton of the stack in [f_lo, f_hi],
/// located by bisection on the boundary-system residuals: fp where the
/// free-free mechanical chain is singular, fs where the electrical
/// denominator vanishes. Loss is ignored. Returns nullopt if the window
/// contains no pair.
std::optional<ModePair> lossless_mode_pair(const Stack& s, double f_lo,
                                           double f_hi);

}  // namespace p3f
