#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include "helpers.hpp"
#include "p3f/config.hpp"
#include "p3f/metrics.hpp"
#include "p3f/stack_model.hpp"

using namespace p3f;
using namespace testutil;

TEST_CASE("intrinsic_kt2 basics") {
  MaterialProps m = linbo3();
  m.e_piezo = 0.0;
  CHECK(intrinsic_kt2(m) == 0.0);

  // e^2 = 0.25 * c * eps
  m.e_piezo = std::sqrt(0.25 * m.c_stiff * m.eps_clamped);
  CHECK(intrinsic_kt2(m) == doctest::Approx(0.25).epsilon(1e-14));

  CHECK_THROWS_AS(
      [] {
        MaterialProps bad = linbo3();
        bad.e_piezo = 2.0 * std::sqrt(bad.c_stiff * bad.eps_clamped);
        bad.validate();
      }(),
      Error);
}

TEST_CASE("default 128Y constants: kt2 in (0.3, 0.6), Mason fs/fp oracle") {
  const MaterialProps m = lossless_linbo3();
  const double kt2 = intrinsic_kt2(m);
  CHECK(kt2 > 0.3);
  CHECK(kt2 < 0.6);

  // Closed-form oracle: fp = v/2t, fs from the Mason formula; the tan_form
  // convention applied to that pair must return kt2 identically.
  const double t = 110e-9;
  const double fp = std::sqrt(m.c_stiff / m.density) / (2.0 * t);
  const double fs = mason_fs(m, t);
  CHECK(k2_from_fs_fp(fs, fp, K2Convention::tan_form) ==
        doctest::Approx(kt2).epsilon(1e-12));

  // The transfer-matrix pair agrees with the closed-form pair.
  const auto pair = lossless_mode_pair(single_layer(m, t), 0.55 * fp,
                                       1.04 * fp);
  REQUIRE(pair.has_value());
  CHECK(rel_err(pair->fs, fs) < 1e-9);
  CHECK(rel_err(pair->fp, fp) < 1e-12);
}

TEST_CASE("polarity-0 single layer is exactly a static capacitor") {
  MaterialProps m = linbo3();
  m.e_piezo = 0.0;
  const double t = 110e-9, area = 4012e-12;
  const Stack s = single_layer(m, t, area, 0);
  const FrequencyGrid g{1e9, 60e9, 7};
  const AdmittanceTrace tr = input_admittance(s, g);
  for (std::size_t i = 0; i < tr.size(); ++i) {
    const std::complex<double> exact{
        0.0, 2.0 * kPi * tr.freqs[i] * m.eps_clamped * area / t};
    CHECK(rel_err(tr.y[i], exact) < 1e-13);
  }
  CHECK(find_resonances(tr).empty());
}

TEST_CASE("transfer matrix matches the closed-form Mason oracle") {
  Rng rng(7001);
  for (int trial = 0; trial < 20; ++trial) {
    MaterialProps m;
    m.density = rng.uniform(2000.0, 8000.0);
    m.c_stiff = rng.uniform(5e10, 4e11);
    m.eps_clamped = rng.uniform(2e-11, 8e-10);
    const double kt2 = rng.uniform(0.01, 0.6);
    m.e_piezo = std::sqrt(kt2 * m.c_stiff * m.eps_clamped);
    m.q_mech = rng.uniform(50.0, 500.0);
    const double t = rng.uniform(5e-8, 2e-6);
    const double area = rng.uniform(1e-10, 1e-8);
    const Stack s = single_layer(m, t, area);

    const double f1 = std::sqrt(m.c_stiff / m.density) / (2.0 * t);
    const FrequencyGrid g{0.2 * f1, 3.0 * f1, 301};
    const AdmittanceTrace tr = input_admittance(s, g);
    for (std::size_t i = 0; i < tr.size(); ++i)
      CHECK(rel_err(tr.y[i], mason_single_layer(m, t, area, tr.freqs[i])) <
            1e-9);
  }
}

TEST_CASE("lossless oracle equivalence away from poles") {
  const MaterialProps m = lossless_linbo3();
  const double t = 110e-9, area = 4012e-12;
  const Stack s = single_layer(m, t);
  const double fp = std::sqrt(m.c_stiff / m.density) / (2.0 * t);
  const double fs = mason_fs(m, t);
  for (double f : {0.3 * fp, 0.7 * fs, 0.93 * fs, 1.02 * fs, 0.99 * fp,
                   1.3 * fp, 2.2 * fp}) {
    const std::complex<double> y = input_admittance_at(s, f);
    CHECK(rel_err(y, mason_single_layer(m, t, area, f)) < 1e-9);
  }
}

TEST_CASE("passivity of the lossy simulated trace") {
  const AdmittanceTrace tr = input_admittance(
      bilayer(linbo3(), 110e-9), FrequencyGrid{5e9, 120e9, 3001});
  for (const auto& y : tr.y) CHECK(y.real() >= -1e-12);
}

TEST_CASE("area linearity") {
  const MaterialProps m = linbo3();
  const Stack s1 = single_layer(m, 110e-9, 2e-9);
  const Stack s2 = single_layer(m, 110e-9, 6e-9);
  for (double f : {5e9, 20e9, 33e9, 70e9}) {
    const auto y1 = input_admittance_at(s1, f);
    const auto y2 = input_admittance_at(s2, f);
    CHECK(rel_err(y2, 3.0 * y1) < 1e-13);
  }
}

TEST_CASE("reciprocal thickness scaling") {
  const MaterialProps m = lossless_linbo3();
  const double t = 110e-9, scale = 3.7;
  const double fp1 = std::sqrt(m.c_stiff / m.density) / (2.0 * t);
  const auto p1 = lossless_mode_pair(single_layer(m, t), 0.55 * fp1,
                                     1.04 * fp1);
  const auto p2 = lossless_mode_pair(single_layer(m, t * scale),
                                     0.55 * fp1 / scale, 1.04 * fp1 / scale);
  REQUIRE(p1.has_value());
  REQUIRE(p2.has_value());
  CHECK(rel_err(p2->fs, p1->fs / scale) < 1e-9);
  CHECK(rel_err(p2->fp, p1->fp / scale) < 1e-9);
  const double k1 = k2_from_fs_fp(p1->fs, p1->fp, K2Convention::pi2_8);
  const double k2 = k2_from_fs_fp(p2->fs, p2->fp, K2Convention::pi2_8);
  CHECK(rel_err(k2, k1) < 1e-9);
}

TEST_CASE("even/odd selection rule of the uniform plate") {
  const MaterialProps m = lossless_linbo3();
  const double t = 220e-9;
  const Stack s = single_layer(m, t);
  const double f1 = std::sqrt(m.c_stiff / m.density) / (2.0 * t);

  // Even orders: fs and fp collapse, coupling below 1e-10.
  for (int n : {2, 4}) {
    const auto p = lossless_mode_pair(s, (n - 0.05) * f1, (n + 0.05) * f1);
    REQUIRE(p.has_value());
    const double split = (p->fp - p->fs) / p->fs;
    CHECK(split >= 0.0);
    const double k2 =
        split > 0.0 ? k2_from_fs_fp(p->fs, p->fp, K2Convention::pi2_8) : 0.0;
    CHECK(k2 < 1e-10);
  }

  // Odd orders: k2 falls off as ~1/n^2.
  double k2n[3];
  int idx = 0;
  for (int n : {3, 5, 7}) {
    const auto p =
        lossless_mode_pair(s, (n - 0.45) * f1, (n + 0.02) * f1);
    REQUIRE(p.has_value());
    k2n[idx++] = k2_from_fs_fp(p->fs, p->fp, K2Convention::pi2_8);
  }
  CHECK(k2n[0] / k2n[1] == doctest::Approx(25.0 / 9.0).epsilon(0.1));
  CHECK(k2n[1] / k2n[2] == doctest::Approx(49.0 / 25.0).epsilon(0.1));
}

TEST_CASE("P3F recovery: bilayer order-2 equals single-layer order-1") {
  const MaterialProps m = lossless_linbo3();
  const double t = 110e-9;
  const double fp = std::sqrt(m.c_stiff / m.density) / (2.0 * t);
  const auto ps = lossless_mode_pair(single_layer(m, t), 0.6 * fp, 1.04 * fp);
  const auto pb = lossless_mode_pair(bilayer(m, t), 0.6 * fp, 1.04 * fp);
  REQUIRE(ps.has_value());
  REQUIRE(pb.has_value());
  const double ks = k2_from_fs_fp(ps->fs, ps->fp, K2Convention::pi2_8);
  const double kb = k2_from_fs_fp(pb->fs, pb->fp, K2Convention::pi2_8);
  CHECK(rel_err(kb, ks) < 0.01);

  // The bilayer's order-1 mode is killed by the polarity flip.
  const double f1b = 0.5 * fp;
  const auto p1 = lossless_mode_pair(bilayer(m, t), 0.9 * f1b, 1.1 * f1b);
  REQUIRE(p1.has_value());
  CHECK((p1->fp - p1->fs) / p1->fs < 1e-12);
}

TEST_CASE("find_resonances on a synthetic single-branch trace") {
  // fs = 1.0 GHz, fp = 1.05 GHz by construction.
  MbvdParams p;
  p.c0 = 1e-12;
  MotionalBranch b;
  b.cm = p.c0 * (1.05 * 1.05 - 1.0);
  const double w = 2.0 * kPi * 1e9;
  b.lm = 1.0 / (w * w * b.cm);
  b.rm = w * b.lm / 500.0;
  p.branches.push_back(b);

  const AdmittanceTrace tr =
      mbvd_admittance(p, FrequencyGrid{0.9e9, 1.2e9, 6001});
  const auto pairs = find_resonances(tr);
  REQUIRE(pairs.size() == 1);
  CHECK(rel_err(pairs[0].fs, 1e9) < 1e-4);
  REQUIRE(pairs[0].fp.has_value());
  CHECK(rel_err(*pairs[0].fp, 1.05e9) < 1e-4);
}

TEST_CASE("find_resonances prominence threshold") {
  // Flat unit background with a 12 dB tone and a ~0.8 dB ripple.
  AdmittanceTrace tr;
  tr.freqs = FrequencyGrid{0.8e9, 1.6e9, 4001}.frequencies();
  for (double f : tr.freqs) {
    auto bump = [&](double f0, double height, double width) {
      const double x = (f - f0) / width;
      return height / (1.0 + x * x);
    };
    tr.y.emplace_back(
        1.0 + bump(1.0e9, 3.0, 5e6) + bump(1.4e9, 0.1, 5e6), 0.0);
  }
  CHECK(find_resonances(tr).size() == 1);
  CHECK(find_resonances(tr, {0.5}).size() == 2);
}

TEST_CASE("trailing fs without captured fp") {
  MbvdParams p;
  p.c0 = 1e-12;
  MotionalBranch b;
  b.cm = 0.1 * p.c0;
  const double w = 2.0 * kPi * 1e9;
  b.lm = 1.0 / (w * w * b.cm);
  b.rm = w * b.lm / 300.0;
  p.branches.push_back(b);
  // Band ends just above fs, before the antiresonance at ~1.049 GHz.
  const AdmittanceTrace tr =
      mbvd_admittance(p, FrequencyGrid{0.95e9, 1.01e9, 2001});
  const auto pairs = find_resonances(tr);
  REQUIRE(pairs.size() == 1);
  CHECK(!pairs[0].fp.has_value());
}

TEST_CASE("stress profiles and mode labels") {
  const MaterialProps lossy = linbo3(1e6);
  const double t = 110e-9;

  SUBCASE("order-1 antiresonance of a single plate is a half-wave") {
    const Stack s = single_layer(linbo3(1e6), t);
    const double fp = std::sqrt(lossy.c_stiff / lossy.density) / (2.0 * t);
    const StressProfile prof = mode_stress_profile(s, fp, 257);
    REQUIRE(prof.depths.size() == 257);
    double max_abs = 0.0;
    for (const auto& v : prof.stress) max_abs = std::max(max_abs, std::abs(v));
    CHECK(std::abs(prof.stress.front()) <= 1e-6 * max_abs);
    CHECK(std::abs(prof.stress.back()) <= 1e-6 * max_abs);
    // Shape tracks |sin(pi z / t)| and peaks mid-thickness.
    for (std::size_t i = 0; i < prof.depths.size(); i += 16) {
      const double expect = std::sin(kPi * prof.depths[i] / t);
      CHECK(std::abs(std::abs(prof.stress[i]) / max_abs - expect) < 1e-2);
    }
    CHECK(label_mode(prof) == 1);
  }

  SUBCASE("uniform plate driven at its even order stays single-lobed") {
    // The even mode cannot be excited electrically; the forced profile is
    // the non-resonant cos(2 pi z/t) - 1 shape with no interior crossing.
    const Stack s = single_layer(linbo3(1e6), t);
    const double f2 = std::sqrt(lossy.c_stiff / lossy.density) / t;
    CHECK(label_mode(mode_stress_profile(s, f2, 257)) == 1);
  }

  SUBCASE("bilayer at order-2: full-wave with one interior crossing") {
    const Stack s = bilayer(linbo3(1e6), t / 2.0);  // total thickness t
    const double f2 = std::sqrt(lossy.c_stiff / lossy.density) / t;
    const StressProfile prof = mode_stress_profile(s, f2, 257);
    CHECK(label_mode(prof) == 2);
    // The crossing sits at mid-thickness within sample resolution.
    const std::complex<double> mid = prof.stress[128];
    double max_abs = 0.0;
    for (const auto& v : prof.stress) max_abs = std::max(max_abs, std::abs(v));
    CHECK(std::abs(mid) < 0.05 * max_abs);
  }

  SUBCASE("bilayer overtone: 5 crossings, order 6") {
    const Stack s = bilayer(linbo3(200.0), 110e-9);
    const double f6 =
        3.0 * std::sqrt(lossy.c_stiff / lossy.density) / (2.0 * 110e-9);
    // Brute-force scan of the simulated stack near its ~3x overtone.
    const auto pair = lossless_mode_pair(bilayer(lossless_linbo3(), 110e-9),
                                         0.94 * f6, 1.02 * f6);
    REQUIRE(pair.has_value());
    const StressProfile prof = mode_stress_profile(s, pair->fs, 513);
    CHECK(label_mode(prof) == 6);
  }

  SUBCASE("analytic sine profiles") {
    for (int n : {1, 2, 6}) {
      StressProfile prof;
      for (int i = 0; i < 257; ++i) {
        const double z = static_cast<double>(i) / 256.0;
        prof.depths.push_back(z);
        prof.stress.emplace_back(std::sin(n * kPi * z), 0.0);
      }
      CHECK(label_mode(prof) == n);
    }
  }

  SUBCASE("degenerate profile is an error") {
    StressProfile prof;
    for (int i = 0; i < 64; ++i) {
      prof.depths.push_back(i);
      prof.stress.emplace_back(0.0, 0.0);
    }
    CHECK_THROWS_WITH_AS(label_mode(prof),
                         doctest::Contains("degenerate"), Error);
  }
}

TEST_CASE("electroded stack: metal layers load the modes mechanically") {
  // Aluminum modeled as a polarity-0 layer that is electrically
  // transparent (huge eps) but mechanically present.
  MaterialProps al;
  al.density = 2700.0;
  al.c_stiff = 1.11e11;
  al.e_piezo = 0.0;
  al.eps_clamped = 1.0;
  al.q_mech = 1000.0;

  const MaterialProps ln = linbo3();
  Stack bare = bilayer(ln, 110e-9);
  Stack loaded = bare;
  loaded.layers.insert(loaded.layers.begin(), {al, 50e-9, 0});
  loaded.layers.push_back({al, 50e-9, 0});

  const FrequencyGrid g{15e9, 45e9, 4001};
  const AdmittanceTrace tb = input_admittance(bare, g);
  const AdmittanceTrace tl = input_admittance(loaded, g);
  for (const auto& y : tl.y) CHECK(y.real() >= -1e-12);

  const auto pb = find_resonances(tb);
  const auto pl = find_resonances(tl);
  REQUIRE(pb.size() == 1);
  REQUIRE(!pl.empty());
  // Mass loading pulls the main mode down, and the electrically
  // transparent metal leaves the static capacitance (far below every
  // mode) essentially unchanged.
  CHECK(pl[0].fs < pb[0].fs);
  CHECK(rel_err(input_admittance_at(loaded, 1e9).imag(),
                input_admittance_at(bare, 1e9).imag()) < 0.01);
}

TEST_CASE("singular solves are flagged, never emitted as non-finite") {
  // Extreme f*t with loss overflows the layer chain; the sample must come
  // back finite from a nudged frequency with the pole recorded.
  MaterialProps m;
  m.density = 1.0;
  m.c_stiff = 1.0;
  m.e_piezo = 0.0;
  m.eps_clamped = 1.0;
  m.q_mech = 200.0;
  Stack s;
  s.layers.push_back({m, 1.0, 0});
  s.area = 1.0;

  const AdmittanceTrace tr =
      input_admittance(s, FrequencyGrid{44300.0, 44700.0, 5});
  CHECK(!tr.pole_indices.empty());
  tr.validate();  // all samples finite
  for (const auto& y : tr.y) CHECK(y.imag() > 0.0);

  // With coupling the driven terms overflow far beyond any rescuable
  // nudge and the solver reports the frequency instead.
  Stack sp = s;
  sp.layers[0].material.e_piezo = 0.5;
  sp.layers[0].polarity = 1;
  CHECK_THROWS_WITH_AS(input_admittance_at(sp, 45100.0),
                       doctest::Contains("45100"), Error);
}

TEST_CASE("log-spaced grid") {
  const FrequencyGrid g{1e9, 1e12, 4, FrequencyGrid::Spacing::log};
  const std::vector<double> f = g.frequencies();
  REQUIRE(f.size() == 4);
  CHECK(f.front() == 1e9);
  CHECK(f.back() == 1e12);
  CHECK(f[1] == doctest::Approx(1e10).epsilon(1e-12));
  CHECK(f[2] == doctest::Approx(1e11).epsilon(1e-12));
}

TEST_CASE("grid invariance of interpolated resonances") {
  const Stack s = bilayer(linbo3(), 110e-9);
  const FrequencyGrid coarse{20e9, 40e9, 1001};
  const FrequencyGrid fine{20e9, 40e9, 4001};
  const auto pc = find_resonances(input_admittance(s, coarse));
  const auto pf = find_resonances(input_admittance(s, fine));
  REQUIRE(pc.size() == 1);
  REQUIRE(pf.size() == 1);
  const double df_coarse = (40e9 - 20e9) / 1000.0;
  CHECK(std::abs(pf[0].fs - pc[0].fs) < 0.5 * df_coarse);
  REQUIRE(pc[0].fp.has_value());
  REQUIRE(pf[0].fp.has_value());
  CHECK(std::abs(*pf[0].fp - *pc[0].fp) < 0.5 * df_coarse);
}

TEST_CASE("estimate_c0") {
  DeviceGeometry g;
  g.n_electrodes = 2;
  g.electrode_width = 1.0;
  g.electrode_gap = 1.0;
  g.aperture = 1.0;
  g.electrode_thickness = 1.0;
  CHECK(estimate_c0(g, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(estimate_c0(g, 1.0, 2.0) == 2.0 * estimate_c0(g, 1.0, 1.0));

  // Device geometry with eps_eff = eps_clamped * stack thickness; the
  // resulting seed value is documented in the README.
  DeviceGeometry idt;
  idt.n_electrodes = 17;
  idt.electrode_width = 800e-9;
  idt.electrode_gap = 3.2e-6;
  idt.wavelength = 8e-6;
  idt.aperture = 59e-6;
  idt.busline_distance = 71e-6;
  idt.electrode_thickness = 350e-9;
  const double eps_eff = 3.19e-10 * 220e-9;
  const double c0 = estimate_c0(idt, eps_eff);
  CHECK(c0 > 1e-15);
  CHECK(c0 < 100e-15);

  DeviceGeometry bad = idt;
  bad.wavelength = 7.9e-6;  // != 2*(Le+Lg)
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("stack config loading") {
  SUBCASE("bundled bilayer config") {
    const StackConfig cfg =
        load_stack_config_file(std::string(P3F_CONFIG_DIR) +
                               "/bilayer_p3f.json");
    REQUIRE(cfg.stack.layers.size() == 2);
    CHECK(cfg.stack.layers[0].polarity == 1);
    CHECK(cfg.stack.layers[1].polarity == -1);
    CHECK(cfg.stack.layers[0].thickness == doctest::Approx(110e-9));
    CHECK(cfg.stack.area == doctest::Approx(4012e-12));
    REQUIRE(cfg.geometry.has_value());
    CHECK(cfg.geometry->n_electrodes == 17);
  }

  SUBCASE("schema violations carry field paths") {
    const char* missing_density = R"({
      "materials": {"m": {"c_stiff_pa": 1e11, "e_piezo_c_m2": 0,
                          "eps_clamped_f_m": 1e-10}},
      "layers": [{"material": "m", "thickness_nm": 100, "polarity": 0}],
      "area_um2": 100})";
    CHECK_THROWS_WITH_AS(load_stack_config(missing_density),
                         doctest::Contains("materials.m.density_kg_m3"),
                         Error);

    const char* bad_thickness = R"({
      "materials": {"m": {"density_kg_m3": 4700, "c_stiff_pa": 1e11,
                          "e_piezo_c_m2": 0, "eps_clamped_f_m": 1e-10}},
      "layers": [{"material": "m", "thickness_nm": -5, "polarity": 0}],
      "area_um2": 100})";
    CHECK_THROWS_WITH_AS(load_stack_config(bad_thickness),
                         doctest::Contains("layers[0].thickness_nm"), Error);

    const char* unknown_material = R"({
      "materials": {"m": {"density_kg_m3": 4700, "c_stiff_pa": 1e11,
                          "e_piezo_c_m2": 0, "eps_clamped_f_m": 1e-10}},
      "layers": [{"material": "nope", "thickness_nm": 5, "polarity": 0}],
      "area_um2": 100})";
    CHECK_THROWS_WITH_AS(load_stack_config(unknown_material),
                         doctest::Contains("layers[0].material"), Error);

    const char* bad_polarity = R"({
      "materials": {"m": {"density_kg_m3": 4700, "c_stiff_pa": 1e11,
                          "e_piezo_c_m2": 0, "eps_clamped_f_m": 1e-10}},
      "layers": [{"material": "m", "thickness_nm": 5, "polarity": 2}],
      "area_um2": 100})";
    CHECK_THROWS_WITH_AS(load_stack_config(bad_polarity),
                         doctest::Contains("layers[0].polarity"), Error);
  }
}

TEST_CASE("invalid inputs") {
  CHECK_THROWS_AS((FrequencyGrid{0.0, 1e9, 10}.validate()), Error);
  CHECK_THROWS_AS((FrequencyGrid{1e9, 1e8, 10}.validate()), Error);
  CHECK_THROWS_AS((FrequencyGrid{1e9, 2e9, 1}.validate()), Error);

  Stack empty;
  empty.area = 1e-9;
  CHECK_THROWS_AS(empty.validate(), Error);

  Stack s = single_layer(linbo3(), 110e-9);
  s.area = 0.0;
  CHECK_THROWS_AS(s.validate(), Error);
}
