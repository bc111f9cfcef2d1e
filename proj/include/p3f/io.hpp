#pragma once

#include <array>
#include <complex>
#include <string>
#include <string_view>
#include <vector>

#include "p3f/trace.hpp"

namespace p3f {

/// Row-major 2x2 complex matrix; 1-port data uses element [0] only.
using Mat2 = std::array<std::complex<double>, 4>;

/// Multi-port S-parameter dataset with a uniform reference impedance.
struct Network {
  int n_ports = 1;
  std::vector<double> freqs;  // Hz, strictly ascending
  std::vector<Mat2> s;        // per-frequency scattering matrix
  double z0 = 50.0;           // Ohm

  void validate() const;
};

enum class TouchstoneFormat { ri, ma, db };

/// Touchstone v1 (.s1p/.s2p) parser. Option-line defaults: GHz S MA R 50.
/// 2-port rows use the standard S11 S21 S12 S22 column order. v2 keyword
/// blocks are rejected. expected_ports = 0 infers the port count from the
/// first data row.
Network parse_touchstone(std::string_view text, int expected_ports = 0);

/// Emits a v1 file; parse(serialize(n)) reproduces freqs and S within
/// 1e-12 relative in RI format (%.12e).
std::string serialize_touchstone(const Network& n,
                                 TouchstoneFormat fmt = TouchstoneFormat::ri);

/// Y = (1/z0) * (I - S) * (I + S)^-1 per frequency; the 1-port case
/// reduces to y = (1 - s) / (z0 * (1 + s)). Throws when (I + S) is
/// singular, naming the frequency.
std::vector<Mat2> s_to_y(const Network& n);

/// Inverse map S = (I - z0*Y) * (I + z0*Y)^-1.
std::vector<Mat2> y_to_s(const std::vector<Mat2>& y, int n_ports, double z0);

enum class DutTopology { one_port, series, shunt };

std::string to_string(DutTopology t);
DutTopology dut_topology_from_string(std::string_view s);

/// Scalar DUT admittance per the topology tag: Y11 (one_port), -Y21
/// (series), Y11 + Y12 (shunt). The tag is recorded in the trace
/// metadata. A one_port request on a 2-port network is ambiguous and
/// throws.
AdmittanceTrace dut_admittance(const Network& n, DutTopology topo);

/// Embeds a scalar admittance as the series element of a symmetric
/// 2-port: Y = [[y, -y], [-y, y]] converted to S at z0.
Network series_two_port_from_trace(const AdmittanceTrace& t, double z0 = 50.0);

/// Trace CSV, header `freq_hz,re_y_s,im_y_s`, %.12e rows, LF endings.
AdmittanceTrace read_trace_csv(std::string_view text);
std::string write_trace_csv(const AdmittanceTrace& t);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view content);

}  // namespace p3f
