#include "p3f/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "p3f/bvd.hpp"
#include "p3f/config.hpp"
#include "p3f/detail/format.hpp"
#include "p3f/fit.hpp"
#include "p3f/io.hpp"
#include "p3f/metrics.hpp"
#include "p3f/noise.hpp"
#include "p3f/stack_model.hpp"
#include "p3f/trace.hpp"

namespace p3f {

namespace {

std::string g6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

bool looks_like_csv(const std::string& text) {
  const auto pos = text.find_first_not_of(" \t\r\n");
  if (pos == std::string::npos) return false;
  return text.compare(pos, 7, "freq_hz") == 0;
}

int ports_from_extension(const std::string& path) {
  auto ends_with = [&](const char* suf) {
    const std::size_t len = std::string(suf).size();
    return path.size() >= len &&
           path.compare(path.size() - len, len, suf) == 0;
  };
  if (ends_with(".s1p")) return 1;
  if (ends_with(".s2p")) return 2;
  return 0;
}

AdmittanceTrace load_trace(const std::string& path,
                           const std::optional<std::string>& topology_flag,
                           std::ostream& out, bool quiet) {
  const std::string text = read_text_file(path);
  if (looks_like_csv(text)) return read_trace_csv(text);

  const Network net = parse_touchstone(text, ports_from_extension(path));
  DutTopology topo;
  bool defaulted = false;
  if (topology_flag) {
    topo = dut_topology_from_string(*topology_flag);
  } else if (net.n_ports == 1) {
    topo = DutTopology::one_port;
  } else {
    topo = DutTopology::series;
    defaulted = true;
  }
  if (!quiet)
    out << "topology: " << to_string(topo) << (defaulted ? " (default)" : "")
        << "\n";
  return dut_admittance(net, topo);
}

void print_report(const std::vector<ResonanceMetrics>& report,
                  K2Convention conv, std::ostream& out) {
  out << "mode  fs_hz         fp_hz         q_3db      k2(" << to_string(conv)
      << ")  fom\n";
  for (const ResonanceMetrics& m : report) {
    auto cell = [](const std::optional<double>& v) {
      return v ? g6(*v) : std::string("-");
    };
    out << (m.mode_order ? std::to_string(*m.mode_order) : std::string("-"))
        << "  " << g6(m.fs) << "  " << cell(m.fp) << "  " << cell(m.q_3db)
        << "  " << cell(m.k2) << "  " << cell(m.fom) << "\n";
  }
}

struct SimulateArgs {
  std::string config_path;
  double f_start = 1e9;
  double f_stop = 100e9;
  std::size_t n_points = 2001;
  bool log_spacing = false;
  std::string convention = "pi2_8";
  std::string out_path;
  double profile_at = 0.0;
  std::string profile_out;
  bool quiet = false;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  const StackConfig cfg = load_stack_config_file(a.config_path);
  FrequencyGrid grid{a.f_start, a.f_stop, a.n_points,
                     a.log_spacing ? FrequencyGrid::Spacing::log
                                   : FrequencyGrid::Spacing::linear};
  const K2Convention conv = k2_convention_from_string(a.convention);
  const AdmittanceTrace trace = input_admittance(cfg.stack, grid);
  if (!a.out_path.empty())
    write_text_file(a.out_path, write_trace_csv(trace));

  std::vector<ResonanceMetrics> report = extract_report(trace, conv);
  for (ResonanceMetrics& m : report) {
    try {
      m.mode_order = label_mode(mode_stress_profile(cfg.stack, m.fs));
    } catch (const Error&) {
      // Pole or degenerate profile: leave the order unlabeled.
    }
  }
  if (!a.quiet) {
    if (report.empty()) out << "no resonances found\n";
    else print_report(report, conv, out);
    if (!a.out_path.empty()) out << "trace written to " << a.out_path << "\n";
  }

  if (a.profile_at > 0.0) {
    const StressProfile prof = mode_stress_profile(cfg.stack, a.profile_at);
    const int order = label_mode(prof);
    std::string path = a.profile_out.empty() ? a.out_path + ".profile.csv"
                                             : a.profile_out;
    std::ostringstream os;
    os << "depth_m,re_stress_pa,im_stress_pa\n";
    for (std::size_t i = 0; i < prof.depths.size(); ++i)
      os << detail::fmt_e(prof.depths[i]) << ','
         << detail::fmt_e(prof.stress[i].real()) << ','
         << detail::fmt_e(prof.stress[i].imag()) << "\n";
    write_text_file(path, os.str());
    out << "mode order at " << g6(a.profile_at) << " Hz: " << order << "\n";
    if (!a.quiet) out << "stress profile written to " << path << "\n";
  }
  return kExitOk;
}

struct FitArgs {
  std::string in_path;
  std::size_t branches = 1;
  std::optional<std::string> topology;
  std::string convention = "pi2_8";
  std::string weighting = "inverse_magnitude";
  std::size_t max_iterations = 500;
  std::string out_path;
  std::string report_path;
  bool quiet = false;
};

int cmd_fit(const FitArgs& a, std::ostream& out) {
  const AdmittanceTrace trace = load_trace(a.in_path, a.topology, out, a.quiet);
  const K2Convention conv = k2_convention_from_string(a.convention);

  FitOptions opt;
  opt.n_branches = a.branches;
  opt.max_iterations = a.max_iterations;
  if (a.weighting == "uniform") opt.weighting = Weighting::uniform;
  else if (a.weighting == "inverse_magnitude")
    opt.weighting = Weighting::inverse_magnitude;
  else throw Error("unknown weighting '" + a.weighting + "'");

  const FitResult result = fit_mbvd(trace, opt);
  if (!a.out_path.empty())
    write_text_file(a.out_path, fit_result_to_json(result));

  // Per-branch metrics from the fitted parameters; the fit is what
  // decouples overlapping tones once several branches load the circuit.
  const std::vector<ResonanceMetrics> report =
      extract_report(result.params, conv);
  if (!a.report_path.empty())
    write_text_file(a.report_path, report_to_json(report, conv));

  if (!a.quiet) {
    out << "fit: " << (result.converged ? "converged" : "did not converge")
        << " after " << result.iterations
        << " iterations, residual=" << g6(result.residual) << "\n";
    out << "c0=" << g6(result.params.c0) << " F  r0="
        << g6(result.params.r0) << " Ohm  rs=" << g6(result.params.rs)
        << " Ohm\n";
    print_report(report, conv, out);
    if (!a.out_path.empty()) out << "fit written to " << a.out_path << "\n";
  }
  return result.converged ? kExitOk : kExitNoConvergence;
}

struct ExtractArgs {
  std::string in_path;
  std::optional<std::string> topology;
  std::string convention = "pi2_8";
  std::string out_path;
  std::string csv_path;
  bool quiet = false;
};

int cmd_extract(const ExtractArgs& a, std::ostream& out) {
  const AdmittanceTrace trace = load_trace(a.in_path, a.topology, out, a.quiet);
  const K2Convention conv = k2_convention_from_string(a.convention);
  const std::vector<ResonanceMetrics> report = extract_report(trace, conv);
  if (!a.out_path.empty())
    write_text_file(a.out_path, report_to_json(report, conv));
  if (!a.csv_path.empty())
    write_text_file(a.csv_path, report_to_csv(report, conv));
  if (!a.quiet) {
    if (report.empty()) out << "no resonances found\n";
    else print_report(report, conv, out);
  }
  return kExitOk;
}

struct SynthArgs {
  std::vector<double> fs;
  std::vector<double> k2;
  std::vector<double> q;
  double c0 = 0.0;
  double rs = 0.0;
  double r0 = 0.0;
  std::string convention = "pi2_8";
  double f_start = 0.0;
  double f_stop = 0.0;
  std::size_t n_points = 4001;
  double noise = 0.0;
  std::uint32_t seed = 1;
  bool seed_given = false;
  double z0 = 50.0;
  std::string out_params;
  std::string out_trace;
  std::string out_s2p;
  bool quiet = false;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  if (a.fs.empty() || a.fs.size() != a.k2.size() || a.fs.size() != a.q.size())
    throw Error("synth: --fs, --k2, and --q must be given once per tone");
  const K2Convention conv = k2_convention_from_string(a.convention);

  // A zero-coupling tone contributes nothing but the static branch.
  std::vector<SynthTarget> targets;
  for (std::size_t i = 0; i < a.fs.size(); ++i)
    if (a.k2[i] > 0.0) targets.push_back({a.fs[i], a.k2[i], a.q[i]});
  MbvdParams params;
  if (targets.empty()) {
    params.c0 = a.c0;
    params.rs = a.rs;
    params.r0 = a.r0;
    params.validate();
  } else {
    params = synthesize(targets, a.c0, a.rs, a.r0, conv);
  }

  double f_start = a.f_start;
  double f_stop = a.f_stop;
  if (f_start <= 0.0 || f_stop <= 0.0) {
    // Default band: cover every (fs, fp) pair with margin.
    double lo = *std::min_element(a.fs.begin(), a.fs.end());
    double hi = *std::max_element(a.fs.begin(), a.fs.end());
    for (const SynthTarget& t : targets)
      hi = std::max(hi, fp_from_fs_k2(t.fs, t.k2, conv));
    f_start = 0.7 * lo;
    f_stop = 1.25 * hi;
  }
  const FrequencyGrid grid{f_start, f_stop, a.n_points,
                           FrequencyGrid::Spacing::linear};
  AdmittanceTrace trace = mbvd_admittance(params, grid);
  if (a.noise > 0.0) apply_multiplicative_noise(trace, a.noise, a.seed);

  {
    using detail::fmt_e;
    std::ostringstream meta;
    meta << "{\"k2_convention\": \"" << to_string(conv) << "\", ";
    meta << "\"noise_sigma\": "
         << (a.noise > 0.0 ? fmt_e(a.noise) : std::string("null")) << ", ";
    meta << "\"noise_seed\": "
         << (a.noise > 0.0 ? std::to_string(a.seed) : std::string("null"))
         << ", \"targets\": [";
    for (std::size_t i = 0; i < targets.size(); ++i)
      meta << (i ? ", " : "") << "{\"fs_hz\": " << fmt_e(targets[i].fs)
           << ", \"k2\": " << fmt_e(targets[i].k2)
           << ", \"q\": " << fmt_e(targets[i].q) << "}";
    meta << "]}";
    if (!a.out_params.empty())
      write_text_file(a.out_params, params_to_json(params, meta.str()));
  }
  if (!a.out_trace.empty())
    write_text_file(a.out_trace, write_trace_csv(trace));
  if (!a.out_s2p.empty())
    write_text_file(a.out_s2p, serialize_touchstone(
                                   series_two_port_from_trace(trace, a.z0)));

  if (!a.quiet) {
    out << targets.size() << " tone(s), " << grid.n_points << " points, "
        << g6(f_start) << " - " << g6(f_stop) << " Hz\n";
    for (const MotionalBranch& b : params.branches)
      out << "  fs=" << g6(branch_fs(b)) << " Hz q=" << g6(branch_q(b))
          << "\n";
  }
  return kExitOk;
}

struct SurveyArgs {
  std::string in_path;
  std::string out_path;
  bool quiet = false;
};

int cmd_survey(const SurveyArgs& a, std::ostream& out, std::ostream& err) {
  const std::string text = read_text_file(a.in_path);
  std::istringstream is(text);
  std::string raw;
  std::size_t line_no = 0;
  bool have_header = false;

  struct Row {
    std::string label;
    double freq, q, k2, fom;
  };
  std::vector<Row> rows;

  while (std::getline(is, raw)) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (raw.find_first_not_of(" \t") == std::string::npos) continue;
    if (!have_header) {
      if (raw != "label,freq_hz,q,k2")
        throw Error("survey: malformed header on line " +
                    std::to_string(line_no) +
                    " (expected label,freq_hz,q,k2)");
      have_header = true;
      continue;
    }
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(raw);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() != 4) {
      err << "survey: line " << line_no << ": expected 4 columns, got "
          << cells.size() << "; skipped\n";
      continue;
    }
    Row r;
    r.label = cells[0];
    try {
      std::size_t used = 0;
      r.freq = std::stod(cells[1], &used);
      if (used != cells[1].size()) throw std::invalid_argument("");
      r.q = std::stod(cells[2], &used);
      if (used != cells[2].size()) throw std::invalid_argument("");
      r.k2 = std::stod(cells[3], &used);
      if (used != cells[3].size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
      err << "survey: line " << line_no << ": non-numeric value; skipped\n";
      continue;
    }
    if (!(r.freq > 0.0) || !(r.q > 0.0) || !(r.k2 >= 0.0)) {
      err << "survey: line " << line_no
          << ": needs freq_hz > 0, q > 0, k2 >= 0; skipped\n";
      continue;
    }
    r.fom = r.q * r.k2;
    rows.push_back(r);
  }
  if (!have_header) throw Error("survey: missing header");

  std::stable_sort(rows.begin(), rows.end(),
                   [](const Row& x, const Row& y) { return x.freq < y.freq; });

  std::ostringstream os;
  os << "freq_hz,fom,q,k2,label\n";
  for (const Row& r : rows)
    os << detail::fmt_e(r.freq) << ',' << detail::fmt_e(r.fom) << ','
       << detail::fmt_e(r.q) << ',' << detail::fmt_e(r.k2) << ',' << r.label
       << "\n";
  write_text_file(a.out_path, os.str());
  if (!a.quiet)
    out << rows.size() << " point(s) written to " << a.out_path << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"P3F resonator stack simulation, mBVD fitting, and RF metrics"};
  app.name("p3fkit");
  app.require_subcommand(1);

  SimulateArgs sim;
  CLI::App* c_sim = app.add_subcommand(
      "simulate", "Simulate stack input admittance from a JSON config");
  c_sim->add_option("config", sim.config_path, "stack config JSON")->required();
  c_sim->add_option("--f-start", sim.f_start, "grid start (Hz)");
  c_sim->add_option("--f-stop", sim.f_stop, "grid stop (Hz)");
  c_sim->add_option("--n-points", sim.n_points, "grid points");
  c_sim->add_flag("--log", sim.log_spacing, "logarithmic grid");
  c_sim->add_option("--convention", sim.convention, "k2 convention");
  c_sim->add_option("--out", sim.out_path, "trace CSV output path");
  c_sim->add_option("--profile-at", sim.profile_at,
                    "also sample the stress profile at this frequency (Hz)");
  c_sim->add_option("--profile-out", sim.profile_out,
                    "stress profile CSV path (default <out>.profile.csv)");
  c_sim->add_flag("--quiet", sim.quiet, "suppress chatter");

  FitArgs fit;
  CLI::App* c_fit = app.add_subcommand(
      "fit", "Fit an mBVD model to a trace CSV or Touchstone file");
  c_fit->add_option("input", fit.in_path, "trace CSV / .s1p / .s2p")
      ->required();
  c_fit->add_option("--branches", fit.branches, "motional branch count");
  c_fit->add_option("--topology", fit.topology,
                    "one_port|series|shunt (2-port default: series)");
  c_fit->add_option("--convention", fit.convention, "k2 convention");
  c_fit->add_option("--weighting", fit.weighting,
                    "uniform|inverse_magnitude");
  c_fit->add_option("--max-iter", fit.max_iterations, "iteration cap");
  c_fit->add_option("--out", fit.out_path, "fit result JSON path");
  c_fit->add_option("--report", fit.report_path, "metrics report JSON path");
  c_fit->add_flag("--quiet", fit.quiet, "suppress chatter");

  ExtractArgs ext;
  CLI::App* c_ext = app.add_subcommand(
      "extract", "Extract fs/fp/Q/k2/FoM metrics from a trace");
  c_ext->add_option("input", ext.in_path, "trace CSV / .s1p / .s2p")
      ->required();
  c_ext->add_option("--topology", ext.topology,
                    "one_port|series|shunt (2-port default: series)");
  c_ext->add_option("--convention", ext.convention, "k2 convention");
  c_ext->add_option("--out", ext.out_path, "report JSON path");
  c_ext->add_option("--csv", ext.csv_path, "report CSV path");
  c_ext->add_flag("--quiet", ext.quiet, "suppress chatter");

  SynthArgs syn;
  CLI::App* c_syn = app.add_subcommand(
      "synth", "Synthesize an mBVD dataset from (fs, k2, q) targets");
  c_syn->add_option("--fs", syn.fs, "tone fs (Hz), repeat per tone");
  c_syn->add_option("--k2", syn.k2, "tone k2, repeat per tone");
  c_syn->add_option("--q", syn.q, "tone q, repeat per tone");
  c_syn->add_option("--c0", syn.c0, "static capacitance (F)")->required();
  c_syn->add_option("--rs", syn.rs, "series resistance (Ohm)");
  c_syn->add_option("--r0", syn.r0, "static branch resistance (Ohm)");
  c_syn->add_option("--convention", syn.convention, "k2 convention");
  c_syn->add_option("--f-start", syn.f_start, "grid start (Hz, default auto)");
  c_syn->add_option("--f-stop", syn.f_stop, "grid stop (Hz, default auto)");
  c_syn->add_option("--n-points", syn.n_points, "grid points");
  c_syn->add_option("--noise", syn.noise,
                    "multiplicative complex Gaussian noise sigma");
  c_syn->add_option("--seed", syn.seed, "noise seed");
  c_syn->add_option("--z0", syn.z0, "Touchstone reference impedance (Ohm)");
  c_syn->add_option("--out-params", syn.out_params, "params JSON path");
  c_syn->add_option("--out-trace", syn.out_trace, "trace CSV path");
  c_syn->add_option("--out-s2p", syn.out_s2p,
                    "series-embedded 2-port Touchstone path");
  c_syn->add_flag("--quiet", syn.quiet, "suppress chatter");

  SurveyArgs sur;
  CLI::App* c_sur = app.add_subcommand(
      "survey", "Compute FoM per row of a label,freq_hz,q,k2 CSV");
  c_sur->add_option("input", sur.in_path, "survey CSV")->required();
  c_sur->add_option("--out", sur.out_path, "plot-data CSV path")->required();
  c_sur->add_flag("--quiet", sur.quiet, "suppress chatter");

  std::vector<const char*> argv;
  argv.push_back("p3fkit");
  for (const std::string& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()),
              const_cast<char**>(argv.data()));
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (c_sim->parsed()) return cmd_simulate(sim, out);
    if (c_fit->parsed()) return cmd_fit(fit, out);
    if (c_ext->parsed()) return cmd_extract(ext, out);
    if (c_syn->parsed()) return cmd_synth(syn, out);
    if (c_sur->parsed()) return cmd_survey(sur, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitUsage;
  }
  err << "error: no subcommand given\n";
  return kExitUsage;
}

}  // namespace p3f
