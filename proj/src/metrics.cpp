#include "p3f/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "p3f/detail/format.hpp"

namespace p3f {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kHalfPowerDb = 3.0102999566398120;  // 10*log10(2)

double db20(double mag) { return 20.0 * std::log10(std::max(mag, 1e-300)); }

}  // namespace

std::string to_string(K2Convention c) {
  switch (c) {
    case K2Convention::pi2_8: return "pi2_8";
    case K2Convention::ieee: return "ieee";
    case K2Convention::tan_form: return "tan_form";
  }
  throw Error("unknown k2 convention");
}

K2Convention k2_convention_from_string(std::string_view s) {
  if (s == "pi2_8") return K2Convention::pi2_8;
  if (s == "ieee") return K2Convention::ieee;
  if (s == "tan_form") return K2Convention::tan_form;
  throw Error("unknown k2 convention '" + std::string(s) +
              "' (expected pi2_8, ieee, or tan_form)");
}

double k2_max(K2Convention c) {
  switch (c) {
    case K2Convention::pi2_8: return std::numeric_limits<double>::infinity();
    case K2Convention::ieee: return 1.0;
    case K2Convention::tan_form: return 1.0;
  }
  throw Error("unknown k2 convention");
}

double k2_from_fs_fp(double fs, double fp, K2Convention c) {
  if (!(fs > 0.0) || !(fp > fs))
    throw Error("k2_from_fs_fp: need 0 < fs < fp");
  switch (c) {
    case K2Convention::pi2_8:
      return (kPi * kPi / 8.0) * (fp * fp - fs * fs) / (fs * fs);
    case K2Convention::ieee:
      return (fp * fp - fs * fs) / (fp * fp);
    case K2Convention::tan_form:
      return (kPi / 2.0) * (fs / fp) * std::tan((kPi / 2.0) * (fp - fs) / fp);
  }
  throw Error("unknown k2 convention");
}

double fp_from_fs_k2(double fs, double k2, K2Convention c) {
  if (!(fs > 0.0)) throw Error("fp_from_fs_k2: fs must be > 0");
  if (!(k2 > 0.0) || !(k2 < k2_max(c)))
    throw Error("fp_from_fs_k2: unreachable coupling " + std::to_string(k2) +
                " for convention " + to_string(c));
  switch (c) {
    case K2Convention::pi2_8:
      return fs * std::sqrt(1.0 + 8.0 * k2 / (kPi * kPi));
    case K2Convention::ieee:
      return fs / std::sqrt(1.0 - k2);
    case K2Convention::tan_form: {
      // k2 is strictly increasing in r = fp/fs with limit 1; bisect.
      double lo = 1.0, hi = 2.0;
      while (k2_from_fs_fp(1.0, hi, c) < k2) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e9)
          throw Error("fp_from_fs_k2: unreachable coupling for tan_form");
      }
      for (int i = 0; i < 200 && (hi - lo) > 1e-15 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        (k2_from_fs_fp(1.0, mid, c) < k2 ? lo : hi) = mid;
      }
      return fs * 0.5 * (lo + hi);
    }
  }
  throw Error("unknown k2 convention");
}

double fom(double q, double k2) {
  if (!(q > 0.0)) throw Error("fom: q must be > 0");
  if (!(k2 >= 0.0)) throw Error("fom: k2 must be >= 0");
  return q * k2;
}

double q_3db(const AdmittanceTrace& t, double fs) {
  t.validate();
  const std::size_t n = t.size();
  if (n < 3) throw Error("q_3db: trace too short");

  std::vector<double> db(n);
  for (std::size_t i = 0; i < n; ++i) db[i] = db20(std::abs(t.y[i]));

  // Nearest sample to fs, then hill-climb to the local |y| maximum so a
  // slightly off-grid fs still lands on its peak.
  std::size_t i =
      std::lower_bound(t.freqs.begin(), t.freqs.end(), fs) - t.freqs.begin();
  if (i >= n) i = n - 1;
  if (i > 0 && fs - t.freqs[i - 1] < t.freqs[i] - fs) --i;
  while (i + 1 < n && db[i + 1] > db[i]) ++i;
  while (i > 0 && db[i - 1] > db[i]) --i;
  if (i == 0 || i + 1 == n)
    throw Error("q_3db: fs is not an interior |y| maximum");

  // Interpolated peak height (parabola through the three samples).
  const double x1 = t.freqs[i - 1], x2 = t.freqs[i], x3 = t.freqs[i + 1];
  const double y1 = db[i - 1], y2 = db[i], y3 = db[i + 1];
  const double d1 = x2 - x1, d2 = x2 - x3;
  const double den = d1 * (y2 - y3) - d2 * (y2 - y1);
  double peak_db = y2;
  if (den != 0.0) {
    const double num = d1 * d1 * (y2 - y3) - d2 * d2 * (y2 - y1);
    const double xv = std::clamp(x2 - 0.5 * num / den, x1, x3);
    const double l1 = (xv - x2) * (xv - x3) / ((x1 - x2) * (x1 - x3));
    const double l2 = (xv - x1) * (xv - x3) / ((x2 - x1) * (x2 - x3));
    const double l3 = (xv - x1) * (xv - x2) / ((x3 - x1) * (x3 - x2));
    peak_db = std::max(peak_db, y1 * l1 + y2 * l2 + y3 * l3);
  }
  const double target = peak_db - kHalfPowerDb;

  auto crossing = [&](bool high_side) -> double {
    std::size_t j = i;
    while (true) {
      const std::size_t next = high_side ? j + 1 : j - 1;
      if ((high_side && j + 1 >= n) || (!high_side && j == 0))
        throw Error(std::string("q_3db: insufficient span on ") +
                    (high_side ? "high" : "low") + " side of " +
                    std::to_string(fs) + " Hz");
      if (db[next] < target) {
        // Linear interpolation in (f, dB) between j and next.
        const double f0 = t.freqs[j], f1 = t.freqs[next];
        const double g0 = db[j], g1 = db[next];
        return f0 + (target - g0) * (f1 - f0) / (g1 - g0);
      }
      j = next;
    }
  };

  const double f_hi = crossing(true);
  const double f_lo = crossing(false);
  return fs / (f_hi - f_lo);
}

std::vector<ResonanceMetrics> extract_report(const AdmittanceTrace& t,
                                             K2Convention conv,
                                             const ResonanceOptions& opt) {
  std::vector<ResonanceMetrics> report;
  for (const ResonancePair& pair : find_resonances(t, opt)) {
    ResonanceMetrics m;
    m.fs = pair.fs;
    m.fp = pair.fp;
    try {
      m.q_3db = q_3db(t, pair.fs);
    } catch (const Error&) {
      // Crossing out of band: report the mode without q rather than abort.
    }
    if (pair.fp && *pair.fp > pair.fs)
      m.k2 = k2_from_fs_fp(pair.fs, *pair.fp, conv);
    if (m.q_3db && m.k2) m.fom = *m.q_3db * *m.k2;
    report.push_back(m);
  }
  std::sort(report.begin(), report.end(),
            [](const ResonanceMetrics& a, const ResonanceMetrics& b) {
              return a.fs < b.fs;
            });
  return report;
}

namespace {

std::string opt_num(const std::optional<double>& v) {
  return v ? detail::fmt_e(*v) : "null";
}

}  // namespace

std::string report_to_json(const std::vector<ResonanceMetrics>& report,
                           K2Convention conv) {
  using detail::fmt_e;
  std::ostringstream os;
  os << "[\n";
  for (std::size_t i = 0; i < report.size(); ++i) {
    const ResonanceMetrics& m = report[i];
    os << "  {\"fs_hz\": " << fmt_e(m.fs) << ", \"fp_hz\": " << opt_num(m.fp)
       << ", \"q_3db\": " << opt_num(m.q_3db) << ", \"k2\": " << opt_num(m.k2)
       << ", \"fom\": " << opt_num(m.fom) << ", \"mode_order\": "
       << (m.mode_order ? std::to_string(*m.mode_order) : "null")
       << ", \"k2_convention\": \"" << to_string(conv) << "\"}"
       << (i + 1 < report.size() ? "," : "") << "\n";
  }
  os << "]\n";
  return os.str();
}

std::string report_to_csv(const std::vector<ResonanceMetrics>& report,
                          K2Convention conv) {
  using detail::fmt_e;
  std::ostringstream os;
  os << "fs_hz,fp_hz,q_3db,k2,fom,mode_order,k2_convention\n";
  auto cell = [](const std::optional<double>& v) {
    return v ? detail::fmt_e(*v) : std::string();
  };
  for (const ResonanceMetrics& m : report) {
    os << fmt_e(m.fs) << ',' << cell(m.fp) << ',' << cell(m.q_3db) << ','
       << cell(m.k2) << ',' << cell(m.fom) << ','
       << (m.mode_order ? std::to_string(*m.mode_order) : "") << ','
       << to_string(conv) << "\n";
  }
  return os.str();
}

}  // namespace p3f
