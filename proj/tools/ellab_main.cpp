#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <random>
#include <string>

#include "CLI11.hpp"
#include <json.hpp>

#include "ellab/branch.hpp"
#include "ellab/config.hpp"
#include "ellab/eigen.hpp"
#include "ellab/kernels.hpp"
#include "ellab/minimize.hpp"
#include "ellab/mountainpass.hpp"
#include "ellab/report.hpp"

namespace {

using Json = nlohmann::ordered_json;
using namespace ellab;

struct Run {
  ExperimentConfig cfg;
  std::string subcommand;
  std::string out_dir;
  std::string format;
  bool stable = false;
  int exit_code = 0;
  std::chrono::steady_clock::time_point t0;
};

void deliver(Run& run, const std::string& text, const std::string& ext) {
  if (run.out_dir.empty()) {
    std::cout << text;
    return;
  }
  std::filesystem::create_directories(run.out_dir);
  write_text(run.out_dir + "/" + run.subcommand + "." + ext, text);
}

void deliver_json(Run& run, Json j) {
  if (!run.stable) {
    const auto ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - run.t0);
    j["wall_ms"] = ms.count();
  }
  deliver(run, j.dump(2) + "\n", "json");
}

Json tolerances(const SolverOptions& opt) {
  Json t;
  t["residual_tol"] = opt.residual_tol;
  t["constraint_tol"] = opt.constraint_tol;
  t["enorm_cap"] = opt.enorm_cap;
  return t;
}

double pick_lambda(const ExperimentConfig& cfg) {
  if (cfg.problem.lambda > 0.0) return cfg.problem.lambda;
  if (!cfg.lambdas.empty()) return cfg.lambdas.front();
  throw ConfigError("missing required field: problem.lambda");
}

Field smooth_random_field(const Problem& pb, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Field f = make_field(pb.grid);
  const double rmax = pb.grid->extent();
  const auto& r = pb.grid->radius();
  for (int b = 0; b < 3; ++b) {
    const double center = 0.9 * unif(rng) * rmax;
    const double width = (0.08 + 0.4 * unif(rng)) * rmax;
    const double amp = 2.0 * unif(rng) - 1.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
      const double d = std::abs(r[i] - center) / width;
      if (d < 1.0) {
        const double c = std::cos(1.5707963267948966 * d);
        f.v[i] += amp * c * c;
      }
    }
  }
  return f;
}

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::holds: return "holds";
    case Verdict::fails: return "fails";
    default: return "undetermined";
  }
}

void run_eigen(Run& run) {
  Problem pb = Problem::build(run.cfg.problem);
  Json j = report_header(run.cfg, run.subcommand, run.stable);
  attach_window(j, compute_window(pb));
  j["tolerances"] = tolerances(pb.spec.solver);

  EigenResult res;
  if (run.cfg.masked) {
    RegionMask mask = minus_zero_region(pb.h);
    res = principal_eigenpair(pb.grid, pb.V, &mask, pb.spec.solver);
  } else {
    res = principal_eigenpair(pb.grid, pb.V, nullptr, pb.spec.solver);
  }
  Json r;
  r["masked"] = run.cfg.masked;
  r["infinite"] = res.infinite;
  r["value"] = json_number(res.value);
  r["residual"] = json_number(res.residual);
  r["iterations"] = res.iterations;
  r["converged"] = res.converged;
  j["eigenpair"] = std::move(r);

  if (!run.cfg.r_values.empty()) {
    auto rows = eigen_convergence_sweep(run.cfg.problem, run.cfg.r_values);
    Json sweep = Json::array();
    for (const auto& row : rows) {
      Json s;
      s["r_max"] = row.r_max;
      s["lambda1"] = json_number(row.lambda1);
      sweep.push_back(std::move(s));
    }
    j["r_sweep"] = std::move(sweep);
  }
  if (!res.converged && !res.infinite) run.exit_code = 3;
  deliver_json(run, std::move(j));
}

void run_lambda1h(Run& run) {
  Problem pb = Problem::build(run.cfg.problem);
  Json j = report_header(run.cfg, run.subcommand, run.stable);
  attach_window(j, compute_window(pb));
  j["tolerances"] = tolerances(pb.spec.solver);
  ConstrainedEigResult ce = lambda1_constrained(pb);
  Json r;
  r["infinite"] = ce.infinite;
  r["value"] = json_number(ce.value);
  r["active"] = ce.active;
  r["sigma1"] = json_number(ce.sigma1);
  r["sigma2"] = json_number(ce.sigma2);
  r["alpha"] = json_number(ce.alpha);
  r["threshold_residual"] = json_number(ce.threshold_residual);
  r["constraint_value"] = json_number(ce.constraint_value);
  r["normalization_error"] = json_number(ce.normalization_error);
  r["kkt_residual"] = json_number(ce.kkt_residual);
  r["sign_inconsistent"] = ce.sign_inconsistent;
  r["iterations"] = ce.iterations;
  r["converged"] = ce.converged;
  j["constrained_level"] = std::move(r);
  if (!ce.converged && !ce.infinite) run.exit_code = 3;
  deliver_json(run, std::move(j));
}

void run_minimize(Run& run) {
  Problem pb = Problem::build(run.cfg.problem);
  const double lambda = pick_lambda(run.cfg);
  MinimizeReport rep = local_minimize(pb, lambda);
  if (run.format == "csv") {
    Branch br;
    BranchPoint pt;
    pt.lambda = rep.lambda;
    pt.sigma = rep.sigma;
    pt.energy = rep.feasible ? energy(rep.state, lambda) : rep.sigma;
    pt.enorm = rep.feasible ? rep.state.enorm() : 0.0;
    pt.grad_norm = std::sqrt(std::max(0.0, rep.state.grad_sq));
    pt.vp_norm = std::sqrt(std::max(0.0, rep.state.intV_u2 + rep.state.intVm_u2));
    pt.hp_norm = std::pow(std::max(0.0, rep.state.intHp_up), 1.0 / pb.p);
    pt.residual = rep.residual_scaled;
    br.points.push_back(std::move(pt));
    deliver(run, branch_csv(br), "csv");
  } else {
    Json j = report_header(run.cfg, run.subcommand, run.stable);
    attach_window(j, compute_window(pb));
    j["tolerances"] = tolerances(pb.spec.solver);
    Json r;
    r["feasible"] = rep.feasible;
    r["unbounded"] = rep.unbounded;
    r["sigma"] = json_number(rep.sigma);
    r["iterations"] = rep.iterations;
    r["converged"] = rep.converged;
    r["boundary_contradiction"] = rep.boundary_contradiction;
    if (rep.feasible && !rep.unbounded) r["state"] = state_summary(pb, rep.state, lambda);
    j["minimize"] = std::move(r);
    deliver_json(run, std::move(j));
  }
  if (rep.feasible && !rep.unbounded && !rep.converged) run.exit_code = 3;
}

void run_mountain_pass(Run& run) {
  Problem pb = Problem::build(run.cfg.problem);
  const double lambda = pick_lambda(run.cfg);
  Field phi0 = find_endpoint(pb, lambda);
  MountainPassReport mp = mountain_pass(pb, lambda, phi0, run.cfg.path_nodes);
  MinimizeReport mini = local_minimize(pb, lambda);

  Json j = report_header(run.cfg, run.subcommand, run.stable);
  attach_window(j, compute_window(pb));
  j["tolerances"] = tolerances(pb.spec.solver);
  Json r;
  r["level"] = json_number(mp.level);
  r["converged"] = mp.converged;
  r["level_collapsed"] = mp.level_collapsed;
  r["iterations"] = mp.iterations;
  r["residual_dual"] = json_number(mp.residual_dual);
  r["residual_scaled"] = json_number(mp.residual_scaled);
  r["endpoint_energy"] = json_number(mp.endpoint_energy);
  r["endpoint_rayleigh"] = json_number(mp.endpoint_rayleigh);
  r["second_variation_vv"] = json_number(second_variation(pb, mp.v, lambda, mp.v.u));
  r["saddle"] = state_summary(pb, mp.v, lambda);
  if (mini.feasible && !mini.unbounded) {
    r["minimizer"] = state_summary(pb, mini.state, lambda);
    OrderedPair op = order_pair(pb, lambda, mini.state, mp.v);
    Json o;
    o["min_gap"] = json_number(op.min_gap);
    o["converged"] = op.converged;
    o["lower_state"] = state_summary(pb, op.u, lambda);
    r["ordering"] = std::move(o);
    const double dist = [&] {
      Field d = make_field(pb.grid);
      for (std::size_t i = 0; i < d.size(); ++i) d.v[i] = mp.v.u.v[i] - mini.state.u.v[i];
      return make_state(pb, d).enorm();
    }();
    r["relative_distance_to_minimizer"] =
        json_number(dist / (1.0 + std::max(mp.v.enorm(), mini.state.enorm())));
  }
  j["mountain_pass"] = std::move(r);
  if (!mp.converged) run.exit_code = 3;
  deliver_json(run, std::move(j));
}

void run_branch(Run& run) {
  if (run.cfg.lambdas.empty()) throw ConfigError("missing required field: run.lambdas");
  Problem pb = Problem::build(run.cfg.problem);
  Branch br = continue_branch(pb, run.cfg.lambdas);
  if (run.format == "csv") {
    deliver(run, branch_csv(br), "csv");
  } else {
    Json j = report_header(run.cfg, run.subcommand, run.stable);
    attach_window(j, br.window);
    j["tolerances"] = tolerances(pb.spec.solver);
    Json rows = Json::array();
    for (const auto& pt : br.points) {
      Json r;
      r["lambda"] = json_number(pt.lambda);
      r["sigma"] = json_number(pt.sigma);
      r["energy"] = json_number(pt.energy);
      r["enorm"] = json_number(pt.enorm);
      r["grad_norm"] = json_number(pt.grad_norm);
      r["vp_norm"] = json_number(pt.vp_norm);
      r["hp_norm"] = json_number(pt.hp_norm);
      r["residual"] = json_number(pt.residual);
      r["converged"] = pt.converged;
      rows.push_back(std::move(r));
    }
    Json b;
    b["points"] = std::move(rows);
    b["warnings"] = br.warnings;
    b["aborted"] = br.aborted;
    if (br.aborted) b["abort_reason"] = br.abort_reason;
    j["branch"] = std::move(b);
    deliver_json(run, std::move(j));
  }
  if (br.aborted) run.exit_code = 3;
}

void run_blowup_fit(Run& run) {
  if (run.cfg.lambdas.empty()) throw ConfigError("missing required field: run.lambdas");
  Problem pb = Problem::build(run.cfg.problem);
  Branch br = continue_branch(pb, run.cfg.lambdas);
  BlowupFit fit = fit_blowup(pb, br);
  Json j = report_header(run.cfg, run.subcommand, run.stable);
  attach_window(j, br.window);
  j["tolerances"] = tolerances(pb.spec.solver);
  Json r;
  r["exponent"] = json_number(fit.exponent);
  r["amplitude"] = json_number(fit.amplitude);
  r["points_used"] = fit.points_used;
  r["mu"] = json_number(fit.mu);
  r["c_calibrated"] = json_number(fit.c_calibrated);
  r["lambda_right"] = json_number(fit.lambda_right);
  Json margins = Json::array();
  for (double m : fit.pointwise_margin) margins.push_back(json_number(m));
  r["pointwise_margin"] = std::move(margins);
  r["pointwise_ok"] = fit.pointwise_ok;
  j["blowup_fit"] = std::move(r);
  deliver_json(run, std::move(j));
}

void run_sweep_mu(Run& run) {
  if (run.cfg.mus.empty()) throw ConfigError("missing required field: run.mus");
  MuSweep sweep = sweep_mu(run.cfg.problem, run.cfg.mus);
  if (run.format == "csv") {
    deliver(run, sweep_csv(sweep), "csv");
    return;
  }
  Json j = report_header(run.cfg, run.subcommand, run.stable);
  attach_window(j, sweep.window);
  Json r;
  Json mus = Json::array(), values = Json::array();
  for (double m : sweep.mu) mus.push_back(json_number(m));
  for (double v : sweep.value) values.push_back(json_number(v));
  r["mu"] = std::move(mus);
  r["value"] = std::move(values);
  r["target"] = json_number(sweep.target);
  r["monotone"] = sweep.monotone;
  r["all_below_target"] = sweep.all_below_target;
  r["final_gap_rel"] = json_number(sweep.final_gap_rel);
  j["mu_sweep"] = std::move(r);
  deliver_json(run, std::move(j));
}

void run_lambda_star(Run& run) {
  Problem pb = Problem::build(run.cfg.problem);
  LambdaStarReport rep = estimate_lambda_star(pb, run.cfg.resolution);
  Json j = report_header(run.cfg, run.subcommand, run.stable);
  attach_window(j, rep.window);
  j["tolerances"] = tolerances(pb.spec.solver);
  Json r;
  r["lambda_lo"] = json_number(rep.lambda_lo);
  r["lambda_hi"] = json_number(rep.lambda_hi);
  r["resolution"] = json_number(rep.resolution);
  r["baseline_solvable"] = rep.baseline_solvable;
  r["solves"] = rep.solves;
  r["last_residual"] = json_number(rep.last_residual);
  r["failure_diagnostic"] = rep.failure_diagnostic;
  r["hminus_e1_integral"] = json_number(rep.hminus_e1_integral);
  r["strict_gap_predicted"] = rep.hminus_e1_integral > 0.0;
  r["minus_zero_contiguous"] = rep.minus_zero_contiguous;
  if (rep.baseline_solvable) r["solution"] = state_summary(pb, rep.last_solution, rep.lambda_lo);
  j["lambda_star"] = std::move(r);
  if (!rep.baseline_solvable) run.exit_code = 3;
  deliver_json(run, std::move(j));
}

void run_certify(Run& run) {
  Problem pb = Problem::build(run.cfg.problem);
  const double lambda = pick_lambda(run.cfg);
  Certificate cert;
  if (run.cfg.candidate) {
    MinimizeReport rep = local_minimize(pb, lambda);
    if (!rep.feasible || rep.unbounded || !rep.converged)
      throw std::runtime_error("candidate solve failed; run certify without run.candidate");
    cert = certify_nonexistence(pb, lambda, &rep.state);
  } else {
    cert = certify_nonexistence(pb, lambda, nullptr);
  }
  Json j = report_header(run.cfg, run.subcommand, run.stable);
  attach_window(j, cert.window);
  j["tolerances"] = tolerances(pb.spec.solver);
  Json r;
  r["kind"] = to_string(cert.kind);
  r["lambda"] = json_number(lambda);
  r["lhs"] = json_number(cert.lhs);
  r["rhs"] = json_number(cert.rhs);
  r["reverified"] = cert.reverified;
  r["detail"] = cert.detail;
  j["certificate"] = std::move(r);
  deliver_json(run, std::move(j));
}

void run_check_embedding(Run& run) {
  GridPtr grid = Grid::build(run.cfg.problem.grid);
  EmbeddingReport rep = check_embedding(run.cfg.problem.V, run.cfg.problem.h,
                                        run.cfg.problem.grid.dimension, run.cfg.problem.p, grid);
  Json j = report_header(run.cfg, run.subcommand, run.stable);
  try {
    Problem pb = Problem::build(run.cfg.problem);
    attach_window(j, compute_window(pb));
  } catch (const std::exception& e) {
    j["window"] = std::string("unavailable: ") + e.what();
  }
  Json r;
  r["eq46"] = verdict_name(rep.eq46);
  r["eq47"] = verdict_name(rep.eq47);
  r["knuutz"] = verdict_name(rep.knuutz);
  r["eq48"] = verdict_name(rep.eq48);
  r["negative_part_control"] = verdict_name(rep.cond3);
  r["positive_part_control"] = verdict_name(rep.cond4);
  r["hminus_zero"] = rep.hminus_zero;
  r["exponents_known"] = rep.exponents_known;
  if (rep.exponents_known) {
    r["alpha"] = json_number(rep.alpha);
    r["beta"] = json_number(rep.beta);
    r["exponent_lhs"] = json_number(rep.exponent_lhs);
    r["exponent_rhs"] = json_number(rep.exponent_rhs);
  }
  r["positivity_radius"] = json_number(rep.positivity_radius);
  Json tails = Json::array();
  for (double t : rep.knuutz_tail) tails.push_back(json_number(t));
  r["knuutz_tail"] = std::move(tails);
  Json proxies = Json::array();
  for (double t : rep.limsup_proxy) proxies.push_back(json_number(t));
  r["limsup_proxy"] = std::move(proxies);
  j["embedding"] = std::move(r);
  deliver_json(run, std::move(j));
}

void run_verify(Run& run) {
  Json j = report_header(run.cfg, run.subcommand, run.stable);
  const int dim = run.cfg.problem.grid.dimension;
  const int nodes = run.cfg.problem.grid.nodes;
  const double lambda = run.cfg.problem.lambda > 0.0 ? run.cfg.problem.lambda : 2.0;

  // Manufactured critical point on the unit ball: u*(r) = (1 - r^2)^2 with
  // V = 1 and h chosen from the analytic Laplacian so the continuum first
  // variation vanishes identically; the discrete residual then measures pure
  // discretization error.
  GridPtr grid = build_radial_grid(dim, 1.0, nodes);
  Field ustar = sample_profile(grid, [](double r) {
    const double q = 1.0 - r * r;
    return q * q;
  });
  Field hval = sample_profile(grid, [dim, lambda](double r) {
    const double q = 1.0 - r * r;
    const double lap = (4.0 * dim + 8.0) * r * r - 4.0 * dim;
    return (lap + lambda * q * q) / (q * q * q * q * q * q);
  });
  Field vval = sample_profile(grid, [](double) { return 1.0; });
  Problem mpb = Problem::build(grid, weight_from_values(vval), weight_from_values(hval), 4.0,
                               run.cfg.problem.solver, lambda);
  StateVector s = make_state(mpb, ustar);
  const double dual = residual_dual_norm(mpb, s, lambda);
  const double rel = dual / s.enorm();
  Json manufactured;
  manufactured["lambda"] = json_number(lambda);
  manufactured["nodes"] = nodes;
  manufactured["residual_dual"] = json_number(dual);
  manufactured["residual_relative"] = json_number(rel);
  manufactured["pass"] = rel <= 1e-3;
  j["manufactured"] = std::move(manufactured);

  // Finite-difference checks of the first and second variation on the
  // configured problem, over seeded smooth field pairs.
  Problem pb = Problem::build(run.cfg.problem);
  attach_window(j, compute_window(pb));
  const auto& k = kernels::ops();
  double worst_grad = 0.0, worst_hess = 0.0;
  const int pairs = 20;
  for (int t = 0; t < pairs; ++t) {
    Field u = smooth_random_field(pb, run.cfg.problem.solver.seed * 2654435761ull + 2 * t);
    Field phi = smooth_random_field(pb, run.cfg.problem.solver.seed * 2654435761ull + 2 * t + 1);
    StateVector su = make_state(pb, u);
    const double scale = std::max(1.0, su.enorm());
    const double eps = 1e-5 * scale;
    auto shifted = [&](double e) {
      Field w = u;
      k.axpy(w.data(), e, phi.data(), w.size());
      return make_state(pb, w);
    };
    const double ip = energy(shifted(eps), lambda);
    const double im = energy(shifted(-eps), lambda);
    std::vector<double> r(pb.size());
    residual_dual_vector(pb, su, lambda, r);
    const double pairing = k.dot(r.data(), phi.data(), pb.size());
    const double fd = (ip - im) / (2.0 * eps);
    worst_grad = std::max(worst_grad, std::abs(fd - pairing) / (1.0 + std::abs(pairing)));

    std::vector<double> rp(pb.size()), rm(pb.size());
    residual_dual_vector(pb, shifted(eps), lambda, rp);
    residual_dual_vector(pb, shifted(-eps), lambda, rm);
    const double fd2 =
        (k.dot(rp.data(), phi.data(), pb.size()) - k.dot(rm.data(), phi.data(), pb.size())) /
        (2.0 * eps);
    const double quad = second_variation(pb, su, lambda, phi);
    worst_hess = std::max(worst_hess, std::abs(fd2 - quad) / (1.0 + std::abs(quad)));
  }
  Json fd;
  fd["pairs"] = pairs;
  fd["max_gradient_error"] = json_number(worst_grad);
  fd["max_hessian_error"] = json_number(worst_hess);
  fd["pass"] = worst_grad <= 1e-5 && worst_hess <= 1e-5;
  j["finite_difference"] = std::move(fd);
  deliver_json(run, std::move(j));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical laboratory for indefinite superlinear elliptic problems"};
  app.require_subcommand(1);

  std::string config_path, out_dir, format_flag;
  std::uint64_t seed = 0;
  bool stable = false;
  app.add_option("--config", config_path, "experiment configuration file")->required();
  app.add_option("--out", out_dir, "output directory (default: stdout)");
  app.add_option("--format", format_flag, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  auto* seed_opt = app.add_option("--seed", seed, "override the solver seed");
  app.add_flag("--stable-output", stable, "omit timings for byte-identical reports");

  const char* names[] = {"eigen",    "lambda1h",  "minimize",   "mountain-pass",
                         "branch",   "blowup-fit", "sweep-mu",   "lambda-star",
                         "certify",  "check-embedding", "verify"};
  const char* descs[] = {
      "principal eigenpair, optionally masked to {h <= 0}, optional radius sweep",
      "sign-constrained principal level with Lagrange data",
      "cone minimization at the configured lambda",
      "saddle search between 0 and a negative-region bump",
      "solution branch along the configured lambda ladder",
      "branch plus blow-up rate fit at the right endpoint",
      "sign-constrained level under amplified positive part",
      "bisection bracket of the largest solvable lambda",
      "nonexistence certificates",
      "compact-embedding sufficient conditions",
      "manufactured-solution and finite-difference checks"};
  for (std::size_t i = 0; i < std::size(names); ++i)
    app.add_subcommand(names[i], descs[i])->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "argument error: " << e.what() << "\n";
    return 1;
  }

  Run run;
  try {
    run.cfg = load_config(config_path);
    if (*seed_opt) run.cfg.problem.solver.seed = seed;
    run.subcommand = app.get_subcommands().front()->get_name();
    run.out_dir = out_dir;
    run.format = format_flag.empty() ? run.cfg.format : format_flag;
    run.stable = stable;
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  }

  run.t0 = std::chrono::steady_clock::now();
  try {
    if (run.subcommand == "eigen") run_eigen(run);
    else if (run.subcommand == "lambda1h") run_lambda1h(run);
    else if (run.subcommand == "minimize") run_minimize(run);
    else if (run.subcommand == "mountain-pass") run_mountain_pass(run);
    else if (run.subcommand == "branch") run_branch(run);
    else if (run.subcommand == "blowup-fit") run_blowup_fit(run);
    else if (run.subcommand == "sweep-mu") run_sweep_mu(run);
    else if (run.subcommand == "lambda-star") run_lambda_star(run);
    else if (run.subcommand == "certify") run_certify(run);
    else if (run.subcommand == "check-embedding") run_check_embedding(run);
    else if (run.subcommand == "verify") run_verify(run);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const Refusal& e) {
    std::cerr << "refused: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return 3;
  }
  return run.exit_code;
}
