#include "p3f/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "p3f/detail/format.hpp"

namespace p3f {

namespace {

constexpr std::complex<double> kImag{0.0, 1.0};

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::string upper(std::string s) {
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

double parse_number(const std::string& tok, std::size_t line_no) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(tok, &used);
  } catch (const std::exception&) {
    throw Error("touchstone: non-numeric token '" + tok + "' on line " +
                std::to_string(line_no));
  }
  if (used != tok.size())
    throw Error("touchstone: non-numeric token '" + tok + "' on line " +
                std::to_string(line_no));
  return v;
}

std::complex<double> decode_pair(double a, double b, TouchstoneFormat fmt) {
  constexpr double deg = std::numbers::pi / 180.0;
  switch (fmt) {
    case TouchstoneFormat::ri: return {a, b};
    case TouchstoneFormat::ma: return std::polar(a, b * deg);
    case TouchstoneFormat::db: return std::polar(std::pow(10.0, a / 20.0), b * deg);
  }
  throw Error("touchstone: unknown format");
}

struct OptionLine {
  double freq_mult = 1e9;  // GHz default
  TouchstoneFormat fmt = TouchstoneFormat::ma;
  double z0 = 50.0;
};

OptionLine parse_option_line(const std::string& line, std::size_t line_no) {
  OptionLine opt;
  const std::vector<std::string> toks = split_ws(line.substr(1));
  for (std::size_t i = 0; i < toks.size(); ++i) {
    const std::string t = upper(toks[i]);
    if (t == "HZ") opt.freq_mult = 1.0;
    else if (t == "KHZ") opt.freq_mult = 1e3;
    else if (t == "MHZ") opt.freq_mult = 1e6;
    else if (t == "GHZ") opt.freq_mult = 1e9;
    else if (t == "S") { /* scattering parameters, the only kind accepted */ }
    else if (t == "Y" || t == "Z" || t == "G" || t == "H")
      throw Error("touchstone: only S-parameter files are supported (line " +
                  std::to_string(line_no) + ")");
    else if (t == "RI") opt.fmt = TouchstoneFormat::ri;
    else if (t == "MA") opt.fmt = TouchstoneFormat::ma;
    else if (t == "DB") opt.fmt = TouchstoneFormat::db;
    else if (t == "R") {
      if (i + 1 >= toks.size())
        throw Error("touchstone: option line R without impedance (line " +
                    std::to_string(line_no) + ")");
      opt.z0 = parse_number(toks[++i], line_no);
      if (!(opt.z0 > 0.0))
        throw Error("touchstone: reference impedance must be > 0 (line " +
                    std::to_string(line_no) + ")");
    } else {
      throw Error("touchstone: unknown option token '" + toks[i] +
                  "' on line " + std::to_string(line_no));
    }
  }
  return opt;
}

}  // namespace

void Network::validate() const {
  if (n_ports != 1 && n_ports != 2)
    throw Error("Network: n_ports must be 1 or 2");
  if (freqs.size() != s.size())
    throw Error("Network: freqs and s lengths differ");
  if (!(z0 > 0.0)) throw Error("Network: z0 must be > 0");
  for (std::size_t i = 1; i < freqs.size(); ++i)
    if (!(freqs[i] > freqs[i - 1]))
      throw Error("Network: frequencies not strictly ascending");
}

Network parse_touchstone(std::string_view text, int expected_ports) {
  if (expected_ports != 0 && expected_ports != 1 && expected_ports != 2)
    throw Error("touchstone: expected_ports must be 0, 1, or 2");

  std::istringstream is{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  bool have_option = false;
  OptionLine opt;
  Network net;
  net.n_ports = expected_ports;

  while (std::getline(is, raw)) {
    ++line_no;
    if (const auto bang = raw.find('!'); bang != std::string::npos)
      raw.erase(bang);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    if (line[0] == '[')
      throw Error("touchstone: v2 keyword '" + line +
                  "' not supported (v1 only), line " + std::to_string(line_no));
    if (line[0] == '#') {
      if (have_option)
        throw Error("touchstone: duplicate option line at line " +
                    std::to_string(line_no));
      opt = parse_option_line(line, line_no);
      have_option = true;
      continue;
    }
    if (!have_option)
      throw Error("touchstone: data before option line at line " +
                  std::to_string(line_no));

    const std::vector<std::string> toks = split_ws(line);
    if (net.n_ports == 0) {
      if (toks.size() == 3) net.n_ports = 1;
      else if (toks.size() == 9) net.n_ports = 2;
      else
        throw Error("touchstone: cannot infer port count from " +
                    std::to_string(toks.size()) + " columns on line " +
                    std::to_string(line_no));
    }
    const std::size_t expect_cols = net.n_ports == 1 ? 3 : 9;
    if (toks.size() != expect_cols)
      throw Error("touchstone: expected " + std::to_string(expect_cols) +
                  " columns for a " + std::to_string(net.n_ports) +
                  "-port row, got " + std::to_string(toks.size()) +
                  " on line " + std::to_string(line_no));

    std::vector<double> vals(toks.size());
    for (std::size_t i = 0; i < toks.size(); ++i)
      vals[i] = parse_number(toks[i], line_no);

    const double f = vals[0] * opt.freq_mult;
    if (!net.freqs.empty() && !(f > net.freqs.back()))
      throw Error("touchstone: non-ascending frequency on line " +
                  std::to_string(line_no));
    net.freqs.push_back(f);

    Mat2 m{};
    if (net.n_ports == 1) {
      m[0] = decode_pair(vals[1], vals[2], opt.fmt);
    } else {
      // v1 2-port row order: S11 S21 S12 S22.
      m[0] = decode_pair(vals[1], vals[2], opt.fmt);
      m[2] = decode_pair(vals[3], vals[4], opt.fmt);
      m[1] = decode_pair(vals[5], vals[6], opt.fmt);
      m[3] = decode_pair(vals[7], vals[8], opt.fmt);
    }
    net.s.push_back(m);
  }
  if (!have_option) throw Error("touchstone: missing option line");
  if (net.freqs.empty()) throw Error("touchstone: no data rows");
  net.z0 = opt.z0;
  net.validate();
  return net;
}

std::string serialize_touchstone(const Network& n, TouchstoneFormat fmt) {
  n.validate();
  if (n.freqs.empty()) throw Error("serialize_touchstone: nothing to write");
  using detail::fmt_e;
  constexpr double rad2deg = 180.0 / std::numbers::pi;

  std::ostringstream os;
  os << "! " << n.n_ports << "-port S-parameter data\n";
  os << "# Hz S "
     << (fmt == TouchstoneFormat::ri ? "RI"
                                     : fmt == TouchstoneFormat::ma ? "MA" : "DB")
     << " R ";
  {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", n.z0);
    os << buf << "\n";
  }

  auto put = [&](std::ostringstream& o, const std::complex<double>& v) {
    switch (fmt) {
      case TouchstoneFormat::ri:
        o << ' ' << fmt_e(v.real()) << ' ' << fmt_e(v.imag());
        break;
      case TouchstoneFormat::ma:
        o << ' ' << fmt_e(std::abs(v)) << ' ' << fmt_e(std::arg(v) * rad2deg);
        break;
      case TouchstoneFormat::db:
        o << ' ' << fmt_e(20.0 * std::log10(std::max(std::abs(v), 1e-300)))
          << ' ' << fmt_e(std::arg(v) * rad2deg);
        break;
    }
  };

  for (std::size_t i = 0; i < n.freqs.size(); ++i) {
    os << fmt_e(n.freqs[i]);
    if (n.n_ports == 1) {
      put(os, n.s[i][0]);
    } else {
      put(os, n.s[i][0]);  // S11
      put(os, n.s[i][2]);  // S21
      put(os, n.s[i][1]);  // S12
      put(os, n.s[i][3]);  // S22
    }
    os << "\n";
  }
  return os.str();
}

std::vector<Mat2> s_to_y(const Network& n) {
  n.validate();
  std::vector<Mat2> out(n.s.size());
  for (std::size_t i = 0; i < n.s.size(); ++i) {
    const Mat2& s = n.s[i];
    Mat2 y{};
    if (n.n_ports == 1) {
      const std::complex<double> den = 1.0 + s[0];
      if (std::abs(den) == 0.0)
        throw Error("s_to_y: singular (I+S) at " +
                    std::to_string(n.freqs[i]) + " Hz");
      y[0] = (1.0 - s[0]) / (n.z0 * den);
    } else {
      // Y = (1/z0) (I-S)(I+S)^-1 with an explicit 2x2 inverse.
      const std::complex<double> a11 = 1.0 + s[0], a12 = s[1];
      const std::complex<double> a21 = s[2], a22 = 1.0 + s[3];
      const std::complex<double> det = a11 * a22 - a12 * a21;
      if (std::abs(det) == 0.0)
        throw Error("s_to_y: singular (I+S) at " +
                    std::to_string(n.freqs[i]) + " Hz");
      const std::complex<double> i11 = a22 / det, i12 = -a12 / det;
      const std::complex<double> i21 = -a21 / det, i22 = a11 / det;
      const std::complex<double> b11 = 1.0 - s[0], b12 = -s[1];
      const std::complex<double> b21 = -s[2], b22 = 1.0 - s[3];
      y[0] = (b11 * i11 + b12 * i21) / n.z0;
      y[1] = (b11 * i12 + b12 * i22) / n.z0;
      y[2] = (b21 * i11 + b22 * i21) / n.z0;
      y[3] = (b21 * i12 + b22 * i22) / n.z0;
      if (s[1] == s[2]) y[2] = y[1];  // keep reciprocity exact
    }
    out[i] = y;
  }
  return out;
}

std::vector<Mat2> y_to_s(const std::vector<Mat2>& y, int n_ports, double z0) {
  if (n_ports != 1 && n_ports != 2)
    throw Error("y_to_s: n_ports must be 1 or 2");
  if (!(z0 > 0.0)) throw Error("y_to_s: z0 must be > 0");
  std::vector<Mat2> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    Mat2 s{};
    if (n_ports == 1) {
      const std::complex<double> den = 1.0 + z0 * y[i][0];
      if (std::abs(den) == 0.0)
        throw Error("y_to_s: singular (I + z0*Y) at index " +
                    std::to_string(i));
      s[0] = (1.0 - z0 * y[i][0]) / den;
    } else {
      const std::complex<double> a11 = 1.0 + z0 * y[i][0], a12 = z0 * y[i][1];
      const std::complex<double> a21 = z0 * y[i][2], a22 = 1.0 + z0 * y[i][3];
      const std::complex<double> det = a11 * a22 - a12 * a21;
      if (std::abs(det) == 0.0)
        throw Error("y_to_s: singular (I + z0*Y) at index " +
                    std::to_string(i));
      const std::complex<double> i11 = a22 / det, i12 = -a12 / det;
      const std::complex<double> i21 = -a21 / det, i22 = a11 / det;
      const std::complex<double> b11 = 1.0 - z0 * y[i][0], b12 = -z0 * y[i][1];
      const std::complex<double> b21 = -z0 * y[i][2], b22 = 1.0 - z0 * y[i][3];
      s[0] = b11 * i11 + b12 * i21;
      s[1] = b11 * i12 + b12 * i22;
      s[2] = b21 * i11 + b22 * i21;
      s[3] = b21 * i12 + b22 * i22;
      if (y[i][1] == y[i][2]) s[2] = s[1];
    }
    out[i] = s;
  }
  return out;
}

std::string to_string(DutTopology t) {
  switch (t) {
    case DutTopology::one_port: return "one_port";
    case DutTopology::series: return "series";
    case DutTopology::shunt: return "shunt";
  }
  throw Error("unknown DUT topology");
}

DutTopology dut_topology_from_string(std::string_view s) {
  if (s == "one_port") return DutTopology::one_port;
  if (s == "series") return DutTopology::series;
  if (s == "shunt") return DutTopology::shunt;
  throw Error("unknown DUT topology '" + std::string(s) +
              "' (expected one_port, series, or shunt)");
}

AdmittanceTrace dut_admittance(const Network& n, DutTopology topo) {
  if (topo == DutTopology::one_port && n.n_ports == 2)
    throw Error("dut_admittance: one_port is ambiguous for a 2-port network; "
                "choose series or shunt");
  if (topo != DutTopology::one_port && n.n_ports == 1)
    throw Error("dut_admittance: " + to_string(topo) +
                " reduction requires a 2-port network");

  const std::vector<Mat2> ym = s_to_y(n);
  AdmittanceTrace t;
  t.freqs = n.freqs;
  t.y.reserve(ym.size());
  for (const Mat2& y : ym) {
    switch (topo) {
      case DutTopology::one_port: t.y.push_back(y[0]); break;
      case DutTopology::series: t.y.push_back(-y[2]); break;
      case DutTopology::shunt: t.y.push_back(y[0] + y[1]); break;
    }
  }
  t.topology = to_string(topo);
  return t;
}

Network series_two_port_from_trace(const AdmittanceTrace& t, double z0) {
  t.validate();
  std::vector<Mat2> y(t.size());
  for (std::size_t i = 0; i < t.size(); ++i)
    y[i] = {t.y[i], -t.y[i], -t.y[i], t.y[i]};
  Network n;
  n.n_ports = 2;
  n.freqs = t.freqs;
  n.z0 = z0;
  n.s = y_to_s(y, 2, z0);
  return n;
}

AdmittanceTrace read_trace_csv(std::string_view text) {
  std::istringstream is{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  AdmittanceTrace t;
  bool have_header = false;
  while (std::getline(is, raw)) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    const std::string line = trim(raw);
    if (line.empty()) continue;
    if (!have_header) {
      if (line != "freq_hz,re_y_s,im_y_s")
        throw Error("trace CSV: malformed header on line " +
                    std::to_string(line_no) +
                    " (expected freq_hz,re_y_s,im_y_s)");
      have_header = true;
      continue;
    }
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(trim(cell));
    if (cells.size() != 3)
      throw Error("trace CSV: expected 3 columns on line " +
                  std::to_string(line_no));
    double v[3];
    for (int i = 0; i < 3; ++i) {
      try {
        std::size_t used = 0;
        v[i] = std::stod(cells[i], &used);
        if (used != cells[i].size()) throw std::invalid_argument(cells[i]);
      } catch (const std::exception&) {
        throw Error("trace CSV: non-numeric value '" + cells[i] +
                    "' on line " + std::to_string(line_no));
      }
    }
    if (!t.freqs.empty() && !(v[0] > t.freqs.back()))
      throw Error("trace CSV: non-monotonic frequency on line " +
                  std::to_string(line_no));
    t.freqs.push_back(v[0]);
    t.y.emplace_back(v[1], v[2]);
  }
  if (!have_header) throw Error("trace CSV: missing header");
  if (t.freqs.empty()) throw Error("trace CSV: no data rows");
  t.validate();
  return t;
}

std::string write_trace_csv(const AdmittanceTrace& t) {
  t.validate();
  using detail::fmt_e;
  std::ostringstream os;
  os << "freq_hz,re_y_s,im_y_s\n";
  for (std::size_t i = 0; i < t.size(); ++i)
    os << fmt_e(t.freqs[i]) << ',' << fmt_e(t.y[i].real()) << ','
       << fmt_e(t.y[i].imag()) << "\n";
  return os.str();
}

std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open file: " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

void write_text_file(const std::string& path, std::string_view content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write file: " + path);
  f << content;
  if (!f) throw Error("write failed: " + path);
}

}  // namespace p3f
