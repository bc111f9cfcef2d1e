#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "p3f/bvd.hpp"
#include "p3f/config.hpp"
#include "p3f/fit.hpp"
#include "p3f/io.hpp"
#include "p3f/metrics.hpp"
#include "p3f/noise.hpp"
#include "p3f/stack_model.hpp"
#include "p3f/trace.hpp"

namespace py = pybind11;
using namespace p3f;

PYBIND11_MODULE(_core, m) {
  m.doc() = "Piezoelectric stack simulation, mBVD fitting, and RF metrics";

  py::register_exception<Error>(m, "P3fError");

  // --- shared types ---------------------------------------------------
  py::enum_<FrequencyGrid::Spacing>(m, "Spacing")
      .value("linear", FrequencyGrid::Spacing::linear)
      .value("log", FrequencyGrid::Spacing::log);

  py::class_<FrequencyGrid>(m, "FrequencyGrid")
      .def(py::init([](double f_start, double f_stop, std::size_t n_points,
                       FrequencyGrid::Spacing spacing) {
             return FrequencyGrid{f_start, f_stop, n_points, spacing};
           }),
           py::arg("f_start"), py::arg("f_stop"), py::arg("n_points"),
           py::arg("spacing") = FrequencyGrid::Spacing::linear)
      .def_readwrite("f_start", &FrequencyGrid::f_start)
      .def_readwrite("f_stop", &FrequencyGrid::f_stop)
      .def_readwrite("n_points", &FrequencyGrid::n_points)
      .def_readwrite("spacing", &FrequencyGrid::spacing)
      .def("frequencies", &FrequencyGrid::frequencies);

  py::class_<AdmittanceTrace>(m, "AdmittanceTrace")
      .def(py::init([](std::vector<double> freqs,
                       std::vector<std::complex<double>> y) {
             AdmittanceTrace t;
             t.freqs = std::move(freqs);
             t.y = std::move(y);
             t.validate();
             return t;
           }),
           py::arg("freqs"), py::arg("y"))
      .def_readonly("freqs", &AdmittanceTrace::freqs)
      .def_readonly("y", &AdmittanceTrace::y)
      .def_readonly("topology", &AdmittanceTrace::topology)
      .def_readonly("pole_indices", &AdmittanceTrace::pole_indices)
      .def("__len__", &AdmittanceTrace::size);

  // --- stack model ----------------------------------------------------
  py::class_<MaterialProps>(m, "MaterialProps")
      .def(py::init([](double density, double c_stiff, double e_piezo,
                       double eps_clamped, double q_mech) {
             MaterialProps p{density, c_stiff, e_piezo, eps_clamped, q_mech};
             p.validate();
             return p;
           }),
           py::arg("density"), py::arg("c_stiff"), py::arg("e_piezo"),
           py::arg("eps_clamped"),
           py::arg("q_mech") = std::numeric_limits<double>::infinity())
      .def_readwrite("density", &MaterialProps::density)
      .def_readwrite("c_stiff", &MaterialProps::c_stiff)
      .def_readwrite("e_piezo", &MaterialProps::e_piezo)
      .def_readwrite("eps_clamped", &MaterialProps::eps_clamped)
      .def_readwrite("q_mech", &MaterialProps::q_mech);

  py::class_<Layer>(m, "Layer")
      .def(py::init([](MaterialProps material, double thickness, int polarity) {
             Layer l{std::move(material), thickness, polarity};
             l.validate();
             return l;
           }),
           py::arg("material"), py::arg("thickness"), py::arg("polarity"))
      .def_readwrite("material", &Layer::material)
      .def_readwrite("thickness", &Layer::thickness)
      .def_readwrite("polarity", &Layer::polarity);

  py::class_<Stack>(m, "Stack")
      .def(py::init([](std::vector<Layer> layers, double area) {
             Stack s;
             s.layers = std::move(layers);
             s.area = area;
             s.validate();
             return s;
           }),
           py::arg("layers"), py::arg("area"))
      .def_readwrite("layers", &Stack::layers)
      .def_readwrite("area", &Stack::area)
      .def("total_thickness", &Stack::total_thickness);

  py::class_<DeviceGeometry>(m, "DeviceGeometry")
      .def(py::init([](int n_electrodes, double electrode_width,
                       double electrode_gap, double aperture,
                       double electrode_thickness, double wavelength,
                       double busline_distance) {
             DeviceGeometry g{n_electrodes,       electrode_width,
                              electrode_gap,      wavelength,
                              aperture,           busline_distance,
                              electrode_thickness};
             g.validate();
             return g;
           }),
           py::arg("n_electrodes"), py::arg("electrode_width"),
           py::arg("electrode_gap"), py::arg("aperture"),
           py::arg("electrode_thickness"), py::arg("wavelength") = 0.0,
           py::arg("busline_distance") = 0.0);

  py::class_<StressProfile>(m, "StressProfile")
      .def_readonly("depths", &StressProfile::depths)
      .def_readonly("stress", &StressProfile::stress);

  py::class_<ResonancePair>(m, "ResonancePair")
      .def_readonly("fs", &ResonancePair::fs)
      .def_readonly("fp", &ResonancePair::fp);

  py::class_<ModePair>(m, "ModePair")
      .def_readonly("fs", &ModePair::fs)
      .def_readonly("fp", &ModePair::fp);

  m.def("intrinsic_kt2", &intrinsic_kt2, py::arg("material"),
        "k_t^2 = e^2 / (c^D * eps)");
  m.def("input_admittance", &input_admittance, py::arg("stack"),
        py::arg("grid"));
  m.def(
      "find_resonances",
      [](const AdmittanceTrace& t, double min_prominence_db) {
        return find_resonances(t, ResonanceOptions{min_prominence_db});
      },
      py::arg("trace"), py::arg("min_prominence_db") = 3.0);
  m.def("mode_stress_profile", &mode_stress_profile, py::arg("stack"),
        py::arg("f"), py::arg("n_samples") = 257);
  m.def("label_mode", &label_mode, py::arg("profile"));
  m.def("estimate_c0", &estimate_c0, py::arg("geometry"), py::arg("eps_eff"),
        py::arg("fringing_factor") = 1.0);
  m.def("lossless_mode_pair", &lossless_mode_pair, py::arg("stack"),
        py::arg("f_lo"), py::arg("f_hi"));

  // --- mBVD -----------------------------------------------------------
  py::class_<MotionalBranch>(m, "MotionalBranch")
      .def(py::init([](double rm, double lm, double cm) {
             MotionalBranch b{rm, lm, cm};
             b.validate();
             return b;
           }),
           py::arg("rm"), py::arg("lm"), py::arg("cm"))
      .def_readwrite("rm", &MotionalBranch::rm)
      .def_readwrite("lm", &MotionalBranch::lm)
      .def_readwrite("cm", &MotionalBranch::cm);

  py::class_<MbvdParams>(m, "MbvdParams")
      .def(py::init([](double c0, double r0, double rs,
                       std::vector<MotionalBranch> branches) {
             MbvdParams p;
             p.c0 = c0;
             p.r0 = r0;
             p.rs = rs;
             p.branches = std::move(branches);
             p.validate();
             return p;
           }),
           py::arg("c0"), py::arg("r0"), py::arg("rs"), py::arg("branches"))
      .def_readwrite("c0", &MbvdParams::c0)
      .def_readwrite("r0", &MbvdParams::r0)
      .def_readwrite("rs", &MbvdParams::rs)
      .def_readwrite("branches", &MbvdParams::branches);

  py::enum_<K2Convention>(m, "K2Convention")
      .value("pi2_8", K2Convention::pi2_8)
      .value("ieee", K2Convention::ieee)
      .value("tan_form", K2Convention::tan_form);

  py::class_<SynthTarget>(m, "SynthTarget")
      .def(py::init([](double fs, double k2, double q) {
             return SynthTarget{fs, k2, q};
           }),
           py::arg("fs"), py::arg("k2"), py::arg("q"))
      .def_readwrite("fs", &SynthTarget::fs)
      .def_readwrite("k2", &SynthTarget::k2)
      .def_readwrite("q", &SynthTarget::q);

  m.def("mbvd_admittance", &mbvd_admittance, py::arg("params"),
        py::arg("grid"));
  m.def("mbvd_admittance_at", &mbvd_admittance_at, py::arg("params"),
        py::arg("f"));
  m.def("branch_fs", &branch_fs, py::arg("branch"));
  m.def("branch_q", &branch_q, py::arg("branch"));
  m.def("synthesize", &synthesize, py::arg("targets"), py::arg("c0"),
        py::arg("rs") = 0.0, py::arg("r0") = 0.0,
        py::arg("convention") = kDefaultK2Convention);
  m.def("params_to_json", &params_to_json, py::arg("params"),
        py::arg("generator_metadata") = "");
  m.def("params_from_json", &params_from_json, py::arg("text"));

  // --- metrics ----------------------------------------------------------
  py::class_<ResonanceMetrics>(m, "ResonanceMetrics")
      .def_readonly("fs", &ResonanceMetrics::fs)
      .def_readonly("fp", &ResonanceMetrics::fp)
      .def_readonly("q_3db", &ResonanceMetrics::q_3db)
      .def_readonly("k2", &ResonanceMetrics::k2)
      .def_readonly("fom", &ResonanceMetrics::fom)
      .def_readonly("mode_order", &ResonanceMetrics::mode_order);

  m.def("k2_from_fs_fp", &k2_from_fs_fp, py::arg("fs"), py::arg("fp"),
        py::arg("convention"));
  m.def("fp_from_fs_k2", &fp_from_fs_k2, py::arg("fs"), py::arg("k2"),
        py::arg("convention"));
  m.def("fom", &fom, py::arg("q"), py::arg("k2"));
  m.def("q_3db", &q_3db, py::arg("trace"), py::arg("fs"));
  m.def(
      "extract_report",
      [](const AdmittanceTrace& t, K2Convention conv,
         double min_prominence_db) {
        return extract_report(t, conv, ResonanceOptions{min_prominence_db});
      },
      py::arg("trace"), py::arg("convention") = kDefaultK2Convention,
      py::arg("min_prominence_db") = 3.0);
  m.def("extract_report",
        py::overload_cast<const MbvdParams&, K2Convention>(&extract_report),
        py::arg("params"), py::arg("convention") = kDefaultK2Convention);
  m.def("report_to_json", &report_to_json, py::arg("report"),
        py::arg("convention"));
  m.def("report_to_csv", &report_to_csv, py::arg("report"),
        py::arg("convention"));

  // --- fit --------------------------------------------------------------
  py::enum_<Weighting>(m, "Weighting")
      .value("uniform", Weighting::uniform)
      .value("inverse_magnitude", Weighting::inverse_magnitude);

  py::class_<FitOptions>(m, "FitOptions")
      .def(py::init([](std::size_t n_branches, std::size_t max_iterations,
                       double step_tolerance, Weighting weighting) {
             FitOptions o;
             o.n_branches = n_branches;
             o.max_iterations = max_iterations;
             o.step_tolerance = step_tolerance;
             o.weighting = weighting;
             o.validate();
             return o;
           }),
           py::arg("n_branches") = 1, py::arg("max_iterations") = 500,
           py::arg("step_tolerance") = 1e-10,
           py::arg("weighting") = Weighting::inverse_magnitude)
      .def_readwrite("n_branches", &FitOptions::n_branches)
      .def_readwrite("max_iterations", &FitOptions::max_iterations)
      .def_readwrite("step_tolerance", &FitOptions::step_tolerance)
      .def_readwrite("weighting", &FitOptions::weighting);

  py::class_<FitResult>(m, "FitResult")
      .def_readonly("params", &FitResult::params)
      .def_readonly("residual", &FitResult::residual)
      .def_readonly("iterations", &FitResult::iterations)
      .def_readonly("converged", &FitResult::converged)
      .def_readonly("residual_history", &FitResult::residual_history);

  m.def("initial_guess", &initial_guess, py::arg("trace"),
        py::arg("n_branches"));
  m.def("fit_mbvd", &fit_mbvd, py::arg("trace"), py::arg("options"));
  m.def("fit_result_to_json", &fit_result_to_json, py::arg("result"));

  // --- io -----------------------------------------------------------------
  py::enum_<TouchstoneFormat>(m, "TouchstoneFormat")
      .value("ri", TouchstoneFormat::ri)
      .value("ma", TouchstoneFormat::ma)
      .value("db", TouchstoneFormat::db);

  py::enum_<DutTopology>(m, "DutTopology")
      .value("one_port", DutTopology::one_port)
      .value("series", DutTopology::series)
      .value("shunt", DutTopology::shunt);

  py::class_<Network>(m, "Network")
      .def_readonly("n_ports", &Network::n_ports)
      .def_readonly("freqs", &Network::freqs)
      .def_readonly("s", &Network::s)
      .def_readonly("z0", &Network::z0);

  m.def("parse_touchstone", &parse_touchstone, py::arg("text"),
        py::arg("expected_ports") = 0);
  m.def("serialize_touchstone", &serialize_touchstone, py::arg("network"),
        py::arg("format") = TouchstoneFormat::ri);
  m.def("s_to_y", &s_to_y, py::arg("network"));
  m.def("dut_admittance", &dut_admittance, py::arg("network"),
        py::arg("topology"));
  m.def("series_two_port_from_trace", &series_two_port_from_trace,
        py::arg("trace"), py::arg("z0") = 50.0);
  m.def("read_trace_csv", &read_trace_csv, py::arg("text"));
  m.def("write_trace_csv", &write_trace_csv, py::arg("trace"));
  m.def("apply_multiplicative_noise", &apply_multiplicative_noise,
        py::arg("trace"), py::arg("sigma"), py::arg("seed"));

  // --- config ---------------------------------------------------------
  py::class_<StackConfig>(m, "StackConfig")
      .def_readonly("stack", &StackConfig::stack)
      .def_readonly("geometry", &StackConfig::geometry);

  m.def("load_stack_config", &load_stack_config, py::arg("json_text"));
  m.def("load_stack_config_file", &load_stack_config_file, py::arg("path"));
}
