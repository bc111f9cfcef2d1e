#include "p3f/bvd.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#if __has_include(<nlohmann/json.hpp>)
#include <nlohmann/json.hpp>
#else
#include <json.hpp>  // vendored copy of the same library
#endif

#include "p3f/detail/format.hpp"

namespace p3f {

namespace {
constexpr std::complex<double> kImag{0.0, 1.0};
}

void MotionalBranch::validate() const {
  if (!(lm > 0.0) || !std::isfinite(lm))
    throw Error("MotionalBranch: lm must be > 0");
  if (!(cm > 0.0) || !std::isfinite(cm))
    throw Error("MotionalBranch: cm must be > 0");
  if (!(rm >= 0.0) || !std::isfinite(rm))
    throw Error("MotionalBranch: rm must be >= 0");
}

void MbvdParams::validate() const {
  if (!(c0 > 0.0) || !std::isfinite(c0))
    throw Error("MbvdParams: c0 must be > 0");
  if (!(r0 >= 0.0) || !std::isfinite(r0))
    throw Error("MbvdParams: r0 must be >= 0");
  if (!(rs >= 0.0) || !std::isfinite(rs))
    throw Error("MbvdParams: rs must be >= 0");
  // An empty branch list is the pure static circuit (zero-coupling limit).
  if (branches.size() > kMaxBranches)
    throw Error("MbvdParams: at most " + std::to_string(kMaxBranches) +
                " branches");
  for (const MotionalBranch& b : branches) b.validate();
  for (std::size_t i = 0; i < branches.size(); ++i) {
    const double fi = branch_fs(branches[i]);
    for (std::size_t j = i + 1; j < branches.size(); ++j) {
      const double fj = branch_fs(branches[j]);
      if (std::abs(fi - fj) <= 1e-6 * std::max(fi, fj))
        throw Error("MbvdParams: branch fs values must be distinct");
    }
  }
}

std::complex<double> mbvd_admittance_at(const MbvdParams& p, double f) {
  const double omega = 2.0 * std::numbers::pi * f;
  const std::complex<double> jwc0 = kImag * omega * p.c0;
  std::complex<double> y_inner = 1.0 / (p.r0 + 1.0 / jwc0);
  for (const MotionalBranch& b : p.branches) {
    const std::complex<double> z =
        b.rm + kImag * (omega * b.lm - 1.0 / (omega * b.cm));
    y_inner += 1.0 / z;
  }
  // Y = y_inner / (1 + rs*y_inner) is stable at both rs = 0 and the
  // lossless antiresonance (y_inner = 0).
  return y_inner / (1.0 + p.rs * y_inner);
}

AdmittanceTrace mbvd_admittance(const MbvdParams& p, const FrequencyGrid& g) {
  p.validate();
  AdmittanceTrace t;
  t.freqs = g.frequencies();
  t.y.reserve(t.freqs.size());
  for (double f : t.freqs) t.y.push_back(mbvd_admittance_at(p, f));
  return t;
}

double branch_fs(const MotionalBranch& b) {
  return 1.0 / (2.0 * std::numbers::pi * std::sqrt(b.lm * b.cm));
}

double branch_q(const MotionalBranch& b) {
  if (b.rm == 0.0) throw Error("branch_q: rm = 0 gives infinite Q");
  return 2.0 * std::numbers::pi * branch_fs(b) * b.lm / b.rm;
}

MbvdParams synthesize(const std::vector<SynthTarget>& targets, double c0,
                      double rs, double r0, K2Convention conv) {
  if (targets.empty()) throw Error("synthesize: no targets");
  if (!(c0 > 0.0)) throw Error("synthesize: c0 must be > 0");
  if (!(rs >= 0.0) || !(r0 >= 0.0))
    throw Error("synthesize: rs and r0 must be >= 0");

  MbvdParams p;
  p.c0 = c0;
  p.rs = rs;
  p.r0 = r0;
  for (const SynthTarget& tgt : targets) {
    if (!(tgt.fs > 0.0)) throw Error("synthesize: target fs must be > 0");
    if (!(tgt.q > 0.0)) throw Error("synthesize: target q must be > 0");
    const double fp = fp_from_fs_k2(tgt.fs, tgt.k2, conv);
    const double ratio2 = (fp / tgt.fs) * (fp / tgt.fs);
    MotionalBranch b;
    b.cm = c0 * (ratio2 - 1.0);
    const double w = 2.0 * std::numbers::pi * tgt.fs;
    b.lm = 1.0 / (w * w * b.cm);
    b.rm = w * b.lm / tgt.q;
    p.branches.push_back(b);
  }
  p.validate();
  return p;
}

std::vector<ResonanceMetrics> extract_report(const MbvdParams& p,
                                             K2Convention conv) {
  p.validate();
  std::vector<ResonanceMetrics> report;
  for (const MotionalBranch& b : p.branches) {
    ResonanceMetrics m;
    m.fs = branch_fs(b);
    m.fp = m.fs * std::sqrt(1.0 + b.cm / p.c0);
    if (b.rm > 0.0) m.q_3db = branch_q(b);
    m.k2 = k2_from_fs_fp(m.fs, *m.fp, conv);
    if (m.q_3db) m.fom = *m.q_3db * *m.k2;
    report.push_back(m);
  }
  std::sort(report.begin(), report.end(),
            [](const ResonanceMetrics& a, const ResonanceMetrics& b) {
              return a.fs < b.fs;
            });
  return report;
}

std::string params_to_json(const MbvdParams& p,
                           const std::string& generator_metadata) {
  using detail::fmt_e;
  std::ostringstream os;
  os << "{\n";
  os << "  \"c0_f\": " << fmt_e(p.c0) << ",\n";
  os << "  \"r0_ohm\": " << fmt_e(p.r0) << ",\n";
  os << "  \"rs_ohm\": " << fmt_e(p.rs) << ",\n";
  os << "  \"branches\": [\n";
  for (std::size_t i = 0; i < p.branches.size(); ++i) {
    const MotionalBranch& b = p.branches[i];
    os << "    {\"rm_ohm\": " << fmt_e(b.rm) << ", \"lm_h\": " << fmt_e(b.lm)
       << ", \"cm_f\": " << fmt_e(b.cm) << "}"
       << (i + 1 < p.branches.size() ? "," : "") << "\n";
  }
  os << "  ]";
  if (!generator_metadata.empty())
    os << ",\n  \"generator\": " << generator_metadata;
  os << "\n}\n";
  return os.str();
}

MbvdParams params_from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("params JSON: ") + e.what());
  }
  try {
    MbvdParams p;
    p.c0 = j.at("c0_f").get<double>();
    p.r0 = j.at("r0_ohm").get<double>();
    p.rs = j.at("rs_ohm").get<double>();
    for (const auto& jb : j.at("branches")) {
      MotionalBranch b;
      b.rm = jb.at("rm_ohm").get<double>();
      b.lm = jb.at("lm_h").get<double>();
      b.cm = jb.at("cm_f").get<double>();
      p.branches.push_back(b);
    }
    p.validate();
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("params JSON: ") + e.what());
  }
}

}  // namespace p3f
