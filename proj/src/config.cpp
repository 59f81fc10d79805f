#include "kindiff/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "kindiff/errors.hpp"

namespace kindiff {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::string& path,
                const std::set<std::string>& allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) {
      throw Error("parse_config: unknown key '" + path + "." + it.key() + "'");
    }
  }
}

double num(const json& j, const std::string& path) {
  if (!j.is_number()) throw Error("parse_config: '" + path + "' must be a number");
  return j.get<double>();
}

Eigen::VectorXd vec(const json& j, const std::string& path) {
  if (!j.is_array()) throw Error("parse_config: '" + path + "' must be an array");
  Eigen::VectorXd v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v[i] = num(j[i], path);
  return v;
}

RegionShape parse_shape(const json& j, const std::string& path) {
  check_keys(j, path, {"type", "lo", "hi", "center", "radius", "cells"});
  RegionShape s;
  const std::string type = j.at("type").get<std::string>();
  if (type == "rect" || type == "interval") {
    s.kind = RegionShape::Kind::Rect;
    s.lo = vec(j.at("lo"), path + ".lo");
    s.hi = vec(j.at("hi"), path + ".hi");
  } else if (type == "disk") {
    s.kind = RegionShape::Kind::Disk;
    s.center = vec(j.at("center"), path + ".center");
    s.radius = num(j.at("radius"), path + ".radius");
  } else if (type == "cells") {
    s.kind = RegionShape::Kind::Cells;
    for (const auto& c : j.at("cells")) s.cells.push_back(c.get<int>());
  } else {
    throw Error("parse_config: unknown shape type '" + type + "' at " + path);
  }
  return s;
}

}  // namespace

RunConfig parse_config_text(const std::string& text, const std::string& path_label) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error("parse_config: " + std::string(e.what()));
  }
  RunConfig cfg;
  cfg.source_text = text;
  cfg.source_path = path_label;

  check_keys(root, "", {"geometry", "velocity", "kernel", "epsilons", "time",
                        "initial", "mode", "output", "options", "tolerances"});

  {
    const json& g = root.at("geometry");
    check_keys(g, "geometry", {"box", "cells", "inclusions"});
    const json& box = g.at("box");
    require(box.is_array() && !box.empty() && box.size() <= 2,
            "parse_config: geometry.box must list one interval per axis");
    cfg.box_lo.resize(box.size());
    cfg.box_hi.resize(box.size());
    for (size_t d = 0; d < box.size(); ++d) {
      require(box[d].is_array() && box[d].size() == 2,
              "parse_config: geometry.box entries must be [lo, hi]");
      cfg.box_lo[d] = num(box[d][0], "geometry.box");
      cfg.box_hi[d] = num(box[d][1], "geometry.box");
    }
    for (const auto& c : g.at("cells")) cfg.cells_per_axis.push_back(c.get<int>());
    require(cfg.cells_per_axis.size() == box.size(),
            "parse_config: geometry.cells must match the box dimension");
    if (g.contains("inclusions")) {
      int i = 0;
      for (const auto& shape : g.at("inclusions"))
        cfg.inclusions.push_back(
            parse_shape(shape, "geometry.inclusions[" + std::to_string(i++) + "]"));
    }
  }

  {
    const json& v = root.at("velocity");
    check_keys(v, "velocity", {"model", "points", "dim", "speeds", "weights"});
    cfg.velocity.model = v.at("model").get<std::string>();
    if (v.contains("points")) cfg.velocity.points = v.at("points").get<int>();
    if (v.contains("dim")) cfg.velocity.dim = v.at("dim").get<int>();
    if (v.contains("speeds"))
      for (const auto& s : v.at("speeds")) cfg.velocity.speeds.push_back(num(s, "velocity.speeds"));
    if (v.contains("weights"))
      for (const auto& s : v.at("weights"))
        cfg.velocity.speed_weights.push_back(num(s, "velocity.weights"));
  }

  {
    const json& k = root.at("kernel");
    check_keys(k, "kernel", {"type", "sigma", "sigma_regions", "b_base", "c0", "c1",
                             "file", "scaling", "gamma", "sdb_tolerance"});
    const std::string type = k.value("type", "isotropic");
    if (type == "isotropic") {
      cfg.kernel.type = KernelSpec::Type::Isotropic;
      if (k.contains("sigma")) cfg.kernel.sigma = num(k.at("sigma"), "kernel.sigma");
      if (k.contains("sigma_regions")) {
        int i = 0;
        for (const auto& r : k.at("sigma_regions")) {
          const std::string path = "kernel.sigma_regions[" + std::to_string(i++) + "]";
          check_keys(r, path, {"shape", "value"});
          cfg.kernel.sigma_regions.emplace_back(parse_shape(r.at("shape"), path + ".shape"),
                                                num(r.at("value"), path + ".value"));
        }
      }
    } else if (type == "anisotropic_dot") {
      cfg.kernel.type = KernelSpec::Type::AnisotropicDot;
      cfg.kernel.c0 = num(k.at("c0"), "kernel.c0");
      cfg.kernel.c1 = num(k.at("c1"), "kernel.c1");
    } else if (type == "tabulated") {
      cfg.kernel.type = KernelSpec::Type::Tabulated;
      cfg.kernel.table_path = k.at("file").get<std::string>();
    } else {
      throw Error("parse_config: unknown kernel.type '" + type + "'");
    }
    if (k.contains("b_base")) cfg.kernel.b_base = num(k.at("b_base"), "kernel.b_base");
    if (k.contains("sdb_tolerance"))
      cfg.kernel.sdb_tolerance = num(k.at("sdb_tolerance"), "kernel.sdb_tolerance");
    const std::string law = k.value("scaling", "linear");
    cfg.kernel.scaling = parse_scaling_law(law, k.value("gamma", 1.0));
  }

  {
    const json& e = root.at("epsilons");
    require(e.is_array() && !e.empty(), "parse_config: epsilons must be a nonempty array");
    for (const auto& x : e) cfg.eps_list.push_back(num(x, "epsilons"));
    for (size_t i = 0; i < cfg.eps_list.size(); ++i) {
      require(cfg.eps_list[i] > 0, "parse_config: epsilons must be strictly positive");
      require(i == 0 || cfg.eps_list[i] < cfg.eps_list[i - 1],
              "parse_config: epsilons must be strictly decreasing");
    }
  }

  {
    const json& t = root.at("time");
    check_keys(t, "time", {"horizon", "snapshots", "dt_kinetic_scale", "dt_diffusion"});
    cfg.horizon = num(t.at("horizon"), "time.horizon");
    require(cfg.horizon > 0, "parse_config: time.horizon must be positive");
    if (t.contains("snapshots"))
      for (const auto& s : t.at("snapshots"))
        cfg.snapshot_times.push_back(num(s, "time.snapshots"));
    for (size_t i = 0; i < cfg.snapshot_times.size(); ++i) {
      require(cfg.snapshot_times[i] >= 0 &&
                  cfg.snapshot_times[i] <= cfg.horizon + 1e-12,
              "parse_config: snapshot times must lie within the horizon");
      require(i == 0 || cfg.snapshot_times[i] > cfg.snapshot_times[i - 1],
              "parse_config: snapshot times must be increasing");
    }
    if (t.contains("dt_kinetic_scale"))
      cfg.dt_kinetic_scale = num(t.at("dt_kinetic_scale"), "time.dt_kinetic_scale");
    if (t.contains("dt_diffusion"))
      cfg.dt_diffusion = num(t.at("dt_diffusion"), "time.dt_diffusion");
  }

  if (root.contains("initial")) {
    const json& f = root.at("initial");
    check_keys(f, "initial", {"profile", "amplitude", "center", "width", "box_lo",
                              "box_hi", "velocity_factor", "flatten_inclusions"});
    const std::string profile = f.value("profile", "sine_product");
    if (profile == "zero") cfg.initial.profile = InitialField::Profile::Zero;
    else if (profile == "constant") cfg.initial.profile = InitialField::Profile::Constant;
    else if (profile == "sine_product") cfg.initial.profile = InitialField::Profile::SineProduct;
    else if (profile == "gaussian") cfg.initial.profile = InitialField::Profile::Gaussian;
    else if (profile == "indicator") cfg.initial.profile = InitialField::Profile::Indicator;
    else throw Error("parse_config: unknown initial.profile '" + profile + "'");
    if (f.contains("amplitude")) cfg.initial.amplitude = num(f.at("amplitude"), "initial.amplitude");
    if (f.contains("center")) cfg.initial.center = vec(f.at("center"), "initial.center");
    if (f.contains("width")) cfg.initial.width = num(f.at("width"), "initial.width");
    if (f.contains("box_lo")) cfg.initial.box_lo = vec(f.at("box_lo"), "initial.box_lo");
    if (f.contains("box_hi")) cfg.initial.box_hi = vec(f.at("box_hi"), "initial.box_hi");
    const std::string vf = f.value("velocity_factor", "none");
    if (vf == "none") cfg.initial.factor = InitialField::VelocityFactor::None;
    else if (vf == "v1_squared") cfg.initial.factor = InitialField::VelocityFactor::V1Squared;
    else if (vf == "one_plus_v1") cfg.initial.factor = InitialField::VelocityFactor::OnePlusV1;
    else throw Error("parse_config: unknown initial.velocity_factor '" + vf + "'");
    if (f.contains("flatten_inclusions"))
      cfg.initial.flatten_inclusions = f.at("flatten_inclusions").get<bool>();
  }

  if (root.contains("mode")) cfg.mode = root.at("mode").get<std::string>();
  if (root.contains("output")) cfg.output = root.at("output").get<std::string>();

  if (root.contains("options")) {
    const json& o = root.at("options");
    check_keys(o, "options", {"deterministic", "force", "interior_margin", "weak_ratio",
                              "weak_abs_threshold", "use_iterative"});
    cfg.deterministic = o.value("deterministic", false);
    cfg.force = o.value("force", false);
    if (o.contains("interior_margin"))
      cfg.interior_margin = num(o.at("interior_margin"), "options.interior_margin");
    if (o.contains("weak_ratio")) cfg.weak_ratio = num(o.at("weak_ratio"), "options.weak_ratio");
    if (o.contains("weak_abs_threshold"))
      cfg.weak_abs_threshold = num(o.at("weak_abs_threshold"), "options.weak_abs_threshold");
    cfg.use_iterative = o.value("use_iterative", false);
  }

  if (root.contains("tolerances")) {
    const json& t = root.at("tolerances");
    check_keys(t, "tolerances", {"solve", "sdb"});
    if (t.contains("solve")) cfg.solve_tol = num(t.at("solve"), "tolerances.solve");
    if (t.contains("sdb")) cfg.kernel.sdb_tolerance = num(t.at("sdb"), "tolerances.sdb");
  }
  return cfg;
}

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "parse_config: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

BuiltModel build_model(const RunConfig& cfg) {
  BuiltModel m{build_geometry(cfg.box_lo, cfg.box_hi, cfg.cells_per_axis, cfg.inclusions),
               build_quadrature(cfg.velocity), Kernel{}};
  m.kernel = build_kernel(cfg.kernel, m.geom, m.grid);
  return m;
}

}  // namespace kindiff
