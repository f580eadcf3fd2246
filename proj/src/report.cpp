#include "ellab/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace ellab {

namespace {

using Json = nlohmann::ordered_json;

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Json json_number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "infinity" : "-infinity";
}

Json report_header(const ExperimentConfig& cfg, const std::string& subcommand, bool stable) {
  Json j;
  Json tool;
  tool["name"] = kToolName;
  tool["version"] = kToolVersion;
  j["tool"] = std::move(tool);
  j["subcommand"] = subcommand;
  j["seed"] = cfg.problem.solver.seed;
  j["stable_output"] = stable;
  j["config"] = Json::parse(emit_config(cfg), nullptr, true, /*ignore_comments=*/true);
  return j;
}

void attach_window(Json& report, const WindowTriple& window) {
  Json w;
  w["lambda1"] = json_number(window.lambda1);
  w["lambda1_h"] = json_number(window.lambda1_h);
  w["lambda1_minus_zero"] = json_number(window.lambda1_minus_zero);
  report["window"] = std::move(w);
}

Json state_summary(const Problem& pb, const StateVector& s, double lambda) {
  Json j;
  j["lambda"] = json_number(lambda);
  j["energy"] = json_number(energy(s, lambda));
  j["enorm"] = json_number(s.enorm());
  j["grad_norm"] = json_number(std::sqrt(std::max(0.0, s.grad_sq)));
  j["vp_norm"] = json_number(std::sqrt(std::max(0.0, s.intV_u2 + s.intVm_u2)));
  j["hp_norm"] = json_number(std::pow(std::max(0.0, s.intHp_up), 1.0 / s.p));
  j["residual_dual"] = json_number(residual_dual_norm(pb, s, lambda));
  j["residual_scaled"] = json_number(residual_scaled(pb, s, lambda));
  double mn = 0.0, mx = 0.0;
  for (double v : s.u.v) {
    mn = std::min(mn, v);
    mx = std::max(mx, v);
  }
  j["min"] = json_number(mn);
  j["max"] = json_number(mx);
  j["nonneg"] = s.nonneg;
  return j;
}

std::string branch_csv(const Branch& branch) {
  std::string out = "lambda,sigma,energy,E_norm,grad_norm,Vp_norm,hp_norm,residual\n";
  for (const auto& pt : branch.points) {
    out += g17(pt.lambda) + ',' + g17(pt.sigma) + ',' + g17(pt.energy) + ',' + g17(pt.enorm) +
           ',' + g17(pt.grad_norm) + ',' + g17(pt.vp_norm) + ',' + g17(pt.hp_norm) + ',' +
           g17(pt.residual) + '\n';
  }
  return out;
}

std::string sweep_csv(const MuSweep& sweep) {
  std::string out = "mu,lambda1_h,target,gap_rel\n";
  for (std::size_t i = 0; i < sweep.mu.size(); ++i) {
    const double gap = (sweep.target - sweep.value[i]) / sweep.target;
    out += g17(sweep.mu[i]) + ',' + g17(sweep.value[i]) + ',' + g17(sweep.target) + ',' +
           g17(gap) + '\n';
  }
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out << text;
  if (!out) throw std::runtime_error("failed writing output file: " + path);
}

}  // namespace ellab
