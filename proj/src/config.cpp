#include "ellab/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace ellab {

namespace {

using Json = nlohmann::ordered_json;

[[noreturn]] void missing(const std::string& path) {
  throw ConfigError("missing required field: " + path);
}

const Json& require(const Json& j, const char* key, const std::string& path) {
  auto it = j.find(key);
  if (it == j.end()) missing(path + "." + key);
  return *it;
}

double number(const Json& j, const char* key, const std::string& path) {
  const Json& v = require(j, key, path);
  if (!v.is_number()) throw ConfigError("field is not a number: " + path + "." + key);
  return v.get<double>();
}

double number_or(const Json& j, const char* key, double fallback) {
  auto it = j.find(key);
  return it == j.end() ? fallback : it->get<double>();
}

std::vector<double> number_list(const Json& j, const char* key) {
  std::vector<double> out;
  auto it = j.find(key);
  if (it == j.end()) return out;
  if (!it->is_array()) throw ConfigError(std::string("field is not a list: run.") + key);
  for (const auto& v : *it) out.push_back(v.get<double>());
  return out;
}

WeightFamily parse_family(const std::string& name, const std::string& path) {
  if (name == "power_law") return WeightFamily::power_law;
  if (name == "bump") return WeightFamily::bump;
  if (name == "piecewise_radial") return WeightFamily::piecewise_radial;
  if (name == "box_expression") return WeightFamily::box_expression;
  throw ConfigError("unknown weight family '" + name + "' at " + path);
}

const char* family_name(WeightFamily f) {
  switch (f) {
    case WeightFamily::power_law: return "power_law";
    case WeightFamily::bump: return "bump";
    case WeightFamily::piecewise_radial: return "piecewise_radial";
    default: return "box_expression";
  }
}

WeightSpec parse_weight(const Json& j, const std::string& path) {
  WeightSpec spec;
  spec.mu_scale_positive = number_or(j, "mu_scale_positive", 1.0);
  const Json& comps = require(j, "components", path);
  if (!comps.is_array()) throw ConfigError("field is not a list: " + path + ".components");
  std::size_t idx = 0;
  for (const auto& c : comps) {
    const std::string cpath = path + ".components[" + std::to_string(idx++) + "]";
    WeightComponent w;
    w.family = parse_family(require(c, "family", cpath).get<std::string>(), cpath);
    switch (w.family) {
      case WeightFamily::power_law:
        w.amplitude = number(c, "amplitude", cpath);
        w.exponent = number(c, "exponent", cpath);
        break;
      case WeightFamily::bump:
        w.amplitude = number(c, "amplitude", cpath);
        w.center = number(c, "center", cpath);
        w.center_y = number_or(c, "center_y", 0.0);
        w.radius = number(c, "radius", cpath);
        w.sign = number_or(c, "sign", 1.0);
        break;
      case WeightFamily::piecewise_radial: {
        const Json& bp = require(c, "breakpoints", cpath);
        const Json& vals = require(c, "values", cpath);
        for (const auto& b : bp) w.breakpoints.push_back(b.get<double>());
        for (const auto& v : vals) w.values.push_back(v.get<double>());
        break;
      }
      case WeightFamily::box_expression:
        w.c0 = number_or(c, "c0", 0.0);
        w.cx = number_or(c, "cx", 0.0);
        w.cy = number_or(c, "cy", 0.0);
        w.cr2 = number_or(c, "cr2", 0.0);
        break;
    }
    spec.components.push_back(std::move(w));
  }
  return spec;
}

Json emit_weight(const WeightSpec& spec) {
  Json j;
  j["mu_scale_positive"] = spec.mu_scale_positive;
  Json comps = Json::array();
  for (const auto& w : spec.components) {
    Json c;
    c["family"] = family_name(w.family);
    switch (w.family) {
      case WeightFamily::power_law:
        c["amplitude"] = w.amplitude;
        c["exponent"] = w.exponent;
        break;
      case WeightFamily::bump:
        c["amplitude"] = w.amplitude;
        c["center"] = w.center;
        c["center_y"] = w.center_y;
        c["radius"] = w.radius;
        c["sign"] = w.sign;
        break;
      case WeightFamily::piecewise_radial:
        c["breakpoints"] = w.breakpoints;
        c["values"] = w.values;
        break;
      case WeightFamily::box_expression:
        c["c0"] = w.c0;
        c["cx"] = w.cx;
        c["cy"] = w.cy;
        c["cr2"] = w.cr2;
        break;
    }
    comps.push_back(std::move(c));
  }
  j["components"] = std::move(comps);
  return j;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid commented JSON: ") + e.what());
  }

  ExperimentConfig cfg;
  const Json& problem = require(j, "problem", "config");
  cfg.problem.p = number(problem, "p", "problem");
  cfg.problem.lambda = number_or(problem, "lambda", 0.0);
  cfg.problem.V = parse_weight(require(problem, "V", "problem"), "problem.V");
  cfg.problem.h = parse_weight(require(problem, "h", "problem"), "problem.h");

  const Json& grid = require(j, "grid", "config");
  const std::string kind = require(grid, "kind", "grid").get<std::string>();
  if (kind == "radial")
    cfg.problem.grid.kind = GridKind::radial;
  else if (kind == "box")
    cfg.problem.grid.kind = GridKind::box;
  else
    throw ConfigError("unknown grid kind '" + kind + "' at grid.kind");
  cfg.problem.grid.dimension = static_cast<int>(number(grid, "dimension", "grid"));
  cfg.problem.grid.extent = number(grid, "extent", "grid");
  cfg.problem.grid.nodes = static_cast<int>(number(grid, "nodes", "grid"));
  cfg.problem.grid.stretch = number_or(grid, "stretch", 1.0);

  if (auto it = j.find("solver"); it != j.end()) {
    const Json& solver = *it;
    cfg.problem.solver.constraint_tol = number_or(solver, "constraint_tol", 1e-8);
    cfg.problem.solver.residual_tol = number_or(solver, "residual_tol", 1e-6);
    cfg.problem.solver.max_iterations =
        static_cast<int>(number_or(solver, "max_iterations", 100000));
    cfg.problem.solver.enorm_cap = number_or(solver, "enorm_cap", 1e6);
    cfg.problem.solver.path_nodes = static_cast<int>(number_or(solver, "path_nodes", 33));
    cfg.problem.solver.seed = static_cast<std::uint64_t>(number_or(solver, "seed", 0.0));
  }

  if (auto it = j.find("run"); it != j.end()) {
    const Json& run = *it;
    cfg.lambdas = number_list(run, "lambdas");
    cfg.mus = number_list(run, "mus");
    cfg.r_values = number_list(run, "r_values");
    cfg.path_nodes = static_cast<int>(number_or(run, "path_nodes", 33));
    cfg.resolution = number_or(run, "resolution", -1.0);
    if (auto m = run.find("masked"); m != run.end()) cfg.masked = m->get<bool>();
    if (auto c = run.find("candidate"); c != run.end()) cfg.candidate = c->get<bool>();
    if (auto f = run.find("format"); f != run.end()) cfg.format = f->get<std::string>();
    if (cfg.format != "json" && cfg.format != "csv")
      throw ConfigError("run.format must be 'json' or 'csv'");
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string emit_config(const ExperimentConfig& cfg) {
  Json j;
  Json problem;
  problem["p"] = cfg.problem.p;
  problem["lambda"] = cfg.problem.lambda;
  problem["V"] = emit_weight(cfg.problem.V);
  problem["h"] = emit_weight(cfg.problem.h);
  j["problem"] = std::move(problem);

  Json grid;
  grid["kind"] = cfg.problem.grid.kind == GridKind::radial ? "radial" : "box";
  grid["dimension"] = cfg.problem.grid.dimension;
  grid["extent"] = cfg.problem.grid.extent;
  grid["nodes"] = cfg.problem.grid.nodes;
  grid["stretch"] = cfg.problem.grid.stretch;
  j["grid"] = std::move(grid);

  Json solver;
  solver["constraint_tol"] = cfg.problem.solver.constraint_tol;
  solver["residual_tol"] = cfg.problem.solver.residual_tol;
  solver["max_iterations"] = cfg.problem.solver.max_iterations;
  solver["enorm_cap"] = cfg.problem.solver.enorm_cap;
  solver["path_nodes"] = cfg.problem.solver.path_nodes;
  solver["seed"] = cfg.problem.solver.seed;
  j["solver"] = std::move(solver);

  Json run;
  run["lambdas"] = cfg.lambdas;
  run["mus"] = cfg.mus;
  run["r_values"] = cfg.r_values;
  run["path_nodes"] = cfg.path_nodes;
  run["resolution"] = cfg.resolution;
  run["masked"] = cfg.masked;
  run["candidate"] = cfg.candidate;
  run["format"] = cfg.format;
  j["run"] = std::move(run);

  return j.dump(2) + "\n";
}

}  // namespace ellab
