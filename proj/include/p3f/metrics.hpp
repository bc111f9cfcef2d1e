#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "p3f/stack_model.hpp"
#include "p3f/trace.hpp"

namespace p3f {

/// Electromechanical coupling convention. Reports must always carry the
/// tag: published k2 values are not comparable without it.
enum class K2Convention {
  pi2_8,     // k2 = (pi^2/8) * (fp^2 - fs^2) / fs^2
  ieee,      // k2 = (fp^2 - fs^2) / fp^2
  tan_form,  // k2 = (pi/2) * (fs/fp) * tan((pi/2) * (fp - fs) / fp)
};

inline constexpr K2Convention kDefaultK2Convention = K2Convention::pi2_8;

std::string to_string(K2Convention c);
K2Convention k2_convention_from_string(std::string_view s);

/// Largest coupling reachable by the convention (fp/fs -> infinity).
double k2_max(K2Convention c);

double k2_from_fs_fp(double fs, double fp, K2Convention c);

/// Inverse of k2_from_fs_fp in fp: closed form for pi2_8/ieee, bisection
/// for tan_form. Throws on k2 outside (0, k2_max).
double fp_from_fs_k2(double fs, double k2, K2Convention c);

double fom(double q, double k2);

/// 3-dB quality factor Q = fs / (f_hi - f_lo), where f_hi/f_lo are the
/// crossings nearest fs at which 20*log10|y| falls 10*log10(2) dB below
/// the parabolically interpolated peak; crossings are located by linear
/// interpolation in (f, dB). Throws when a crossing lies out of band,
/// naming the side.
double q_3db(const AdmittanceTrace& t, double fs);

struct ResonanceMetrics {
  double fs = 0.0;
  std::optional<double> fp;
  std::optional<double> q_3db;
  std::optional<double> k2;
  std::optional<double> fom;       // q_3db * k2 when both present
  std::optional<int> mode_order;
};

/// Per-mode report: find_resonances + q_3db + k2 + FoM, sorted by fs.
/// A q_3db span failure leaves that mode's q (and fom) absent instead of
/// aborting the report; k2/fom are absent when fp is.
std::vector<ResonanceMetrics> extract_report(
    const AdmittanceTrace& t, K2Convention conv,
    const ResonanceOptions& opt = {});

std::string report_to_json(const std::vector<ResonanceMetrics>& report,
                           K2Convention conv);
std::string report_to_csv(const std::vector<ResonanceMetrics>& report,
                          K2Convention conv);

}  // namespace p3f
