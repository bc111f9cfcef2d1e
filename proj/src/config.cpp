#include "p3f/config.hpp"

#include <map>

#if __has_include(<nlohmann/json.hpp>)
#include <nlohmann/json.hpp>
#else
#include <json.hpp>  // vendored copy of the same library
#endif

#include "p3f/io.hpp"

namespace p3f {

namespace {

using nlohmann::json;

double require_positive(const json& obj, const std::string& key,
                        const std::string& path) {
  if (!obj.contains(key)) throw Error(path + "." + key + ": missing");
  const json& v = obj.at(key);
  if (!v.is_number())
    throw Error(path + "." + key + ": must be a number");
  const double d = v.get<double>();
  if (!(d > 0.0)) throw Error(path + "." + key + ": must be > 0");
  return d;
}

MaterialProps parse_material(const json& jm, const std::string& path) {
  if (!jm.is_object()) throw Error(path + ": must be an object");
  MaterialProps m;
  m.density = require_positive(jm, "density_kg_m3", path);
  m.c_stiff = require_positive(jm, "c_stiff_pa", path);
  if (!jm.contains("e_piezo_c_m2"))
    throw Error(path + ".e_piezo_c_m2: missing");
  if (!jm.at("e_piezo_c_m2").is_number())
    throw Error(path + ".e_piezo_c_m2: must be a number");
  m.e_piezo = jm.at("e_piezo_c_m2").get<double>();
  if (m.e_piezo < 0.0) throw Error(path + ".e_piezo_c_m2: must be >= 0");
  m.eps_clamped = require_positive(jm, "eps_clamped_f_m", path);
  if (jm.contains("q_mech") && !jm.at("q_mech").is_null())
    m.q_mech = require_positive(jm, "q_mech", path);
  try {
    m.validate();
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
  return m;
}

}  // namespace

StackConfig load_stack_config(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(std::string("stack config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error("stack config: top level must be an object");

  if (!j.contains("materials") || !j.at("materials").is_object())
    throw Error("materials: missing or not an object");
  std::map<std::string, MaterialProps> materials;
  for (const auto& [name, jm] : j.at("materials").items())
    materials.emplace(name, parse_material(jm, "materials." + name));

  if (!j.contains("layers") || !j.at("layers").is_array() ||
      j.at("layers").empty())
    throw Error("layers: missing or empty array");

  StackConfig cfg;
  std::size_t idx = 0;
  for (const auto& jl : j.at("layers")) {
    const std::string path = "layers[" + std::to_string(idx) + "]";
    if (!jl.is_object()) throw Error(path + ": must be an object");
    if (!jl.contains("material") || !jl.at("material").is_string())
      throw Error(path + ".material: missing or not a string");
    const std::string mat = jl.at("material").get<std::string>();
    const auto it = materials.find(mat);
    if (it == materials.end())
      throw Error(path + ".material: unknown material '" + mat + "'");
    Layer layer;
    layer.material = it->second;
    layer.thickness = require_positive(jl, "thickness_nm", path) * 1e-9;
    if (!jl.contains("polarity") || !jl.at("polarity").is_number_integer())
      throw Error(path + ".polarity: missing or not an integer");
    layer.polarity = jl.at("polarity").get<int>();
    if (layer.polarity < -1 || layer.polarity > 1)
      throw Error(path + ".polarity: must be -1, 0, or 1");
    cfg.stack.layers.push_back(layer);
    ++idx;
  }

  cfg.stack.area = require_positive(j, "area_um2", "(top)") * 1e-12;

  if (j.contains("geometry")) {
    const json& jg = j.at("geometry");
    if (!jg.is_object()) throw Error("geometry: must be an object");
    DeviceGeometry g;
    if (!jg.contains("n_electrodes") ||
        !jg.at("n_electrodes").is_number_integer())
      throw Error("geometry.n_electrodes: missing or not an integer");
    g.n_electrodes = jg.at("n_electrodes").get<int>();
    g.electrode_width =
        require_positive(jg, "electrode_width_nm", "geometry") * 1e-9;
    g.electrode_gap =
        require_positive(jg, "electrode_gap_nm", "geometry") * 1e-9;
    g.aperture = require_positive(jg, "aperture_um", "geometry") * 1e-6;
    g.electrode_thickness =
        require_positive(jg, "electrode_thickness_nm", "geometry") * 1e-9;
    if (jg.contains("wavelength_nm"))
      g.wavelength = require_positive(jg, "wavelength_nm", "geometry") * 1e-9;
    if (jg.contains("busline_distance_um"))
      g.busline_distance =
          require_positive(jg, "busline_distance_um", "geometry") * 1e-6;
    try {
      g.validate();
    } catch (const Error& e) {
      throw Error(std::string("geometry: ") + e.what());
    }
    cfg.geometry = g;
  }

  try {
    cfg.stack.validate();
  } catch (const Error& e) {
    throw Error(std::string("stack config: ") + e.what());
  }
  return cfg;
}

StackConfig load_stack_config_file(const std::string& path) {
  return load_stack_config(read_text_file(path));
}

}  // namespace p3f
