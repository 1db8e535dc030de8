// Command-line front end: load MDP and distortion files, solve/perceive,
// detect misperceived rare high-risk pairs, run estimation, and drive the
// verification harness. All structured output is JSON (CSV for curve data);
// identical argv + seed reproduce byte-identical reports.
//
// Exit codes: 0 success, 2 validation failure, 3 verification-check failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cptmdp/blackswan.hpp"
#include "cptmdp/distortion.hpp"
#include "cptmdp/mdp.hpp"
#include "cptmdp/perception.hpp"
#include "cptmdp/verify.hpp"
#include "json.hpp"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitCheckFailed = 3;

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw cptmdp::Error("cannot open " + path);
  json j;
  in >> j;
  return j;
}

void emit(const json& report, const std::string& out_path) {
  std::string text = report.dump(2);
  if (out_path.empty()) {
    std::cout << text << "\n";
  } else {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw cptmdp::Error("cannot write " + out_path);
    out << text << "\n";
  }
}

cptmdp::Policy resolve_policy(const cptmdp::Mdp& mdp, const std::string& policy_arg) {
  if (policy_arg.empty() || policy_arg == "optimal") return cptmdp::optimal_policy(mdp);
  return cptmdp::policy_from_json(load_json_file(policy_arg));
}

void write_curves_csv(const cptmdp::DistortionModel& model, const std::string& path,
                      int samples = 512) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw cptmdp::Error("cannot write " + path);
  out << "x,u_plus,u_minus,p,w_plus,w_minus\n";
  char buf[256];
  for (int i = 0; i <= samples; ++i) {
    double t = static_cast<double>(i) / samples;
    double x = t * model.r_max();
    double p = t;
    std::snprintf(buf, sizeof(buf), "%.12g,%.12g,%.12g,%.12g,%.12g,%.12g\n", x,
                  model.value.u_plus.eval(x), model.value.u_minus.eval(-x), p,
                  model.prob.w_plus.eval(p), model.prob.w_minus.eval(p));
    out << buf;
  }
}

int cmd_validate(const std::string& mdp_path, const std::string& dist_path,
                 const std::string& curves_csv, const std::string& out_path) {
  json report;
  if (!mdp_path.empty()) {
    cptmdp::Mdp mdp = cptmdp::mdp_from_json(load_json_file(mdp_path));
    report["mdp"] = {{"valid", true},
                     {"n_states", mdp.n_states()},
                     {"n_actions", mdp.n_actions()},
                     {"horizon", mdp.horizon()},
                     {"gamma", mdp.gamma()},
                     {"r_max", mdp.r_max()}};
  }
  if (!dist_path.empty()) {
    cptmdp::DistortionModel model = cptmdp::model_from_json(load_json_file(dist_path));
    report["distortion"] = cptmdp::certificate_to_json(model.certificate);
    if (!curves_csv.empty()) write_curves_csv(model, curves_csv);
  }
  if (report.empty()) throw cptmdp::Error("validate needs --mdp and/or --distortion");
  emit(report, out_path);
  return kExitOk;
}

int cmd_solve(const std::string& mdp_path, const std::string& policy_arg, int start,
              const std::string& out_path) {
  cptmdp::Mdp mdp = cptmdp::mdp_from_json(load_json_file(mdp_path));
  cptmdp::Policy policy = resolve_policy(mdp, policy_arg);
  cptmdp::OccupancyMeasure occ = cptmdp::occupancy(mdp, policy, start);
  json occ_rows = json::array();
  for (int s = 0; s < mdp.n_states(); ++s) {
    json row = json::array();
    for (int a = 0; a < mdp.n_actions(); ++a) row.push_back(occ.at(s, a, mdp.n_actions()));
    occ_rows.push_back(std::move(row));
  }
  json report{{"start", start},
              {"value", cptmdp::value_function(mdp, policy, start)},
              {"value_from_occupancy", cptmdp::value_from_occupancy(mdp, occ)},
              {"occupancy", std::move(occ_rows)},
              {"occupancy_normalizer", occ.normalizer},
              {"policy", cptmdp::policy_to_json(policy)}};
  emit(report, out_path);
  return kExitOk;
}

int cmd_perceive(const std::string& mdp_path, const std::string& dist_path,
                 const std::string& policy_arg, int start,
                 const std::string& curves_csv, const std::string& out_path) {
  cptmdp::Mdp mdp = cptmdp::mdp_from_json(load_json_file(mdp_path));
  cptmdp::DistortionModel model = cptmdp::model_from_json(load_json_file(dist_path));
  cptmdp::Policy policy = resolve_policy(mdp, policy_arg);
  cptmdp::PerceivedMdp pm = cptmdp::build_hmdp(mdp, policy, model, start);
  cptmdp::RewardDistribution dist = cptmdp::reward_distribution(mdp, policy, start);
  json report{{"start", start},
              {"eps_r", pm.eps_r},
              {"eps_d", pm.eps_d},
              {"reward_dagger", pm.reward_dagger},
              {"occupancy_dagger", pm.occupancy_dagger},
              {"ordering", pm.ordering},
              {"value_gmdp", cptmdp::value_function(mdp, policy, start)},
              {"value_hmdp", cptmdp::cpt_value(dist, model, mdp.occupancy_normalizer())}};
  if (!curves_csv.empty()) write_curves_csv(model, curves_csv);
  emit(report, out_path);
  return kExitOk;
}

int cmd_detect(const std::string& mdp_path, const std::string& dist_path,
               const std::string& policy_arg, int start, double c_bs, double eps_bs,
               double eta_flat, const std::string& out_path) {
  cptmdp::Mdp mdp = cptmdp::mdp_from_json(load_json_file(mdp_path));
  cptmdp::DistortionModel model = cptmdp::model_from_json(load_json_file(dist_path));
  cptmdp::Policy policy = resolve_policy(mdp, policy_arg);
  cptmdp::BlackSwanReport report =
      cptmdp::detect(mdp, policy, model, c_bs, eps_bs, start, eta_flat);

  std::printf("%4s %4s %14s %14s %12s %10s %6s %8s\n", "s", "a", "R", "u-(R)",
              "P^pi", "high-risk", "rare", "verdict");
  for (const auto& d : report.pairs) {
    std::printf("%4d %4d %14.6g %14.6g %12.6g %10s %6s %8s\n", d.s, d.a, d.reward,
                d.u_reward, d.occupancy, d.high_risk ? "yes" : "no",
                d.rare ? "yes" : "no", d.event ? "EVENT" : "-");
  }
  std::printf("events: %zu, eps_bs_min: %g, r_bs: %g\n", report.events.size(),
              report.eps_bs_min, report.r_bs);
  emit(cptmdp::blackswan_report_json(report), out_path);
  return kExitOk;
}

int cmd_estimate(const std::string& mdp_path, const std::string& dist_path,
                 const std::string& policy_arg, int start, long n_samples,
                 std::uint64_t seed, bool from_trajectories, long n_trajectories,
                 const std::string& dump_trajectory_path,
                 const std::string& load_trajectory_path, const std::string& out_path) {
  cptmdp::Mdp mdp = cptmdp::mdp_from_json(load_json_file(mdp_path));
  cptmdp::DistortionModel model = cptmdp::model_from_json(load_json_file(dist_path));
  cptmdp::Policy policy = resolve_policy(mdp, policy_arg);
  cptmdp::HemdpEstimate est;
  if (!load_trajectory_path.empty()) {
    std::ifstream in(load_trajectory_path);
    if (!in) throw cptmdp::Error("cannot open " + load_trajectory_path);
    cptmdp::Trajectory traj = cptmdp::load_trajectory(in);
    est = cptmdp::estimate_hemdp(traj.rewards, model, mdp.occupancy_normalizer());
  } else if (from_trajectories) {
    cptmdp::PerceivedMdp pm = cptmdp::build_hmdp(mdp, policy, model, start);
    std::vector<cptmdp::Trajectory> trajs;
    trajs.reserve(n_trajectories);
    for (long i = 0; i < n_trajectories; ++i)
      trajs.push_back(cptmdp::sample_trajectory(
          mdp, policy, start, cptmdp::derive_seed(seed, static_cast<std::uint64_t>(i))));
    if (!dump_trajectory_path.empty()) {
      std::ofstream out(dump_trajectory_path, std::ios::binary);
      cptmdp::dump_trajectory(trajs.front(), out);
    }
    est = cptmdp::estimate_from_trajectories(pm, trajs);
  } else {
    cptmdp::RewardDistribution dist = cptmdp::reward_distribution(mdp, policy, start);
    cptmdp::Rng rng(seed);
    std::vector<double> samples(n_samples);
    for (long i = 0; i < n_samples; ++i) samples[i] = cptmdp::sample_reward(dist, rng);
    est = cptmdp::estimate_hemdp(samples, model, mdp.occupancy_normalizer());
  }
  emit(cptmdp::hemdp_report_json(est), out_path);
  return kExitOk;
}

int cmd_verify(const std::string& theorem, long instances, std::uint64_t seed,
               const std::string& model_path, const std::string& mdp_path,
               double c_bs, double eps_bs, double eps_d, int start,
               const std::string& out_path) {
  cptmdp::DistortionModel model =
      model_path.empty() ? cptmdp::tversky_kahneman_model(0.88, 0.88, 2.25, 0.61,
                                                          0.69, 10.0)
                         : cptmdp::model_from_json(load_json_file(model_path));
  cptmdp::TheoremCheckResult res;
  if (theorem == "one_step") {
    res = cptmdp::check_one_step(model, instances, seed);
  } else if (theorem == "two_state") {
    res = cptmdp::check_two_state(model, instances, seed);
  } else if (theorem == "three_state") {
    try {
      res = cptmdp::construct_three_state_counterexample(model, instances, seed).result;
    } catch (const cptmdp::SearchBudgetExhausted& e) {
      std::cerr << e.what() << "\n";
      return kExitCheckFailed;
    }
  } else if (theorem == "value_gap") {
    if (mdp_path.empty()) throw cptmdp::Error("value_gap needs --mdp");
    cptmdp::Mdp mdp = cptmdp::mdp_from_json(load_json_file(mdp_path));
    res = cptmdp::check_value_gap_lower_bound(mdp, cptmdp::optimal_policy(mdp), model,
                                              c_bs, eps_bs, start);
  } else if (theorem == "visitation_gap") {
    if (mdp_path.empty()) throw cptmdp::Error("visitation_gap needs --mdp");
    cptmdp::Mdp mdp = cptmdp::mdp_from_json(load_json_file(mdp_path));
    cptmdp::Rng rng(seed);
    cptmdp::Policy policy = cptmdp::random_stationary_policy(
        rng, mdp.horizon(), mdp.n_states(), mdp.n_actions());
    res = cptmdp::check_visitation_gap_lemma(mdp, eps_d, policy, instances, seed);
  } else if (theorem == "dkw") {
    if (mdp_path.empty()) throw cptmdp::Error("dkw needs --mdp");
    cptmdp::Mdp mdp = cptmdp::mdp_from_json(load_json_file(mdp_path));
    cptmdp::Policy policy = cptmdp::optimal_policy(mdp);
    cptmdp::RewardDistribution dist = cptmdp::reward_distribution(mdp, policy, start);
    cptmdp::DkwConfig config;
    double c = std::max(cptmdp::max_grid_slope(model.prob.w_plus) *
                            std::abs(model.u(model.r_max())),
                        cptmdp::max_grid_slope(model.prob.w_minus) *
                            std::abs(model.u(-model.r_max())));
    config.epsilon = c * std::sqrt(2.0 * std::log(4.0 / 0.05) / 10000.0);
    res = cptmdp::check_dkw_convergence(dist, model, config, {100, 1000, 10000},
                                        std::max(instances, 100L), seed);
  } else {
    throw cptmdp::Error("unknown theorem '" + theorem +
                        "' (one_step|two_state|three_state|value_gap|visitation_gap|dkw)");
  }
  emit(cptmdp::result_to_json(res), out_path);
  return res.pass() ? kExitOk : kExitCheckFailed;
}

int cmd_hitting(double delta, double r_max, double r_bs, double eps_min, double eps_bs,
                const std::string& mdp_path, const std::string& dist_path,
                const std::string& policy_arg, int start, double c_bs, long trials,
                std::uint64_t seed, const std::string& out_path) {
  int t = cptmdp::hitting_time_bound(delta, r_max, r_bs, eps_min, eps_bs);
  double scale = (r_max - r_bs) / (2.0 * r_max);
  json report{{"t_bound", t},
              {"delta", delta},
              {"p_min", scale * eps_min},
              {"p_max", scale * eps_bs}};
  if (!mdp_path.empty()) {
    cptmdp::Mdp mdp = cptmdp::mdp_from_json(load_json_file(mdp_path));
    cptmdp::DistortionModel model = cptmdp::model_from_json(load_json_file(dist_path));
    cptmdp::Policy policy = resolve_policy(mdp, policy_arg);
    cptmdp::BlackSwanReport bs = cptmdp::detect(mdp, policy, model, c_bs, eps_bs, start);
    cptmdp::HittingEstimate est =
        cptmdp::monte_carlo_hitting(mdp, policy, bs.events, start, t, trials, seed);
    report["events"] = bs.events.size();
    report["hit_by_t"] = est.hit_by_t;
    report["first_hit_at_t"] = est.first_hit_at_t;
    report["std_error"] = est.std_error;
    report["trials"] = est.trials;
  }
  emit(report, out_path);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CPT-distorted MDP analysis: perception, rare high-risk event "
               "detection, and verification"};
  app.require_subcommand(1);

  std::string mdp_path, dist_path, policy_arg, out_path, curves_csv;
  std::string theorem, dump_traj, load_traj;
  int start = 0;
  double c_bs = 0.0, eps_bs = 0.0, eta_flat = 1e-12, eps_d = 0.05;
  double delta = 0.0, r_max = 0.0, r_bs = 0.0, eps_min = 0.0;
  long instances = 1000, n_samples = 10000, trials = 100000, n_trajectories = 1000;
  std::uint64_t seed = 0;
  bool from_trajectories = false;

  auto* validate = app.add_subcommand("validate", "validate an MDP and/or distortion file");
  validate->add_option("--mdp", mdp_path);
  validate->add_option("--distortion", dist_path);
  validate->add_option("--curves-csv", curves_csv, "write u/w curve samples");
  validate->add_option("--out", out_path);

  auto* solve = app.add_subcommand("solve", "solve an MDP and report value/occupancy");
  solve->add_option("--mdp", mdp_path)->required();
  solve->add_option("--policy", policy_arg, "'optimal' (default) or a policy JSON file");
  solve->add_option("--start", start);
  solve->add_option("--out", out_path);

  auto* perceive = app.add_subcommand("perceive", "build the distorted (human) MDP");
  perceive->add_option("--mdp", mdp_path)->required();
  perceive->add_option("--distortion", dist_path)->required();
  perceive->add_option("--policy", policy_arg);
  perceive->add_option("--start", start);
  perceive->add_option("--curves-csv", curves_csv);
  perceive->add_option("--out", out_path);

  auto* detect = app.add_subcommand("detect", "detect rare high-risk misperceived pairs");
  detect->add_option("--mdp", mdp_path)->required();
  detect->add_option("--distortion", dist_path)->required();
  detect->add_option("--policy", policy_arg);
  detect->add_option("--start", start);
  detect->add_option("--c-bs", c_bs)->required();
  detect->add_option("--eps-bs", eps_bs)->required();
  detect->add_option("--eta-flat", eta_flat, "tolerance for the flatness equality");
  detect->add_option("--out", out_path);

  auto* estimate = app.add_subcommand("estimate", "estimate the distorted value from samples");
  estimate->add_option("--mdp", mdp_path)->required();
  estimate->add_option("--distortion", dist_path)->required();
  estimate->add_option("--policy", policy_arg);
  estimate->add_option("--start", start);
  estimate->add_option("--samples", n_samples);
  estimate->add_option("--seed", seed)->required();
  estimate->add_flag("--from-trajectories", from_trajectories,
                     "pool rewards from sampled trajectories (adds kappa gaps)");
  estimate->add_option("--trajectories", n_trajectories);
  estimate->add_option("--dump-trajectory", dump_traj, "write first trajectory as JSON lines");
  estimate->add_option("--load-trajectory", load_traj, "estimate from a JSON-lines trajectory");
  estimate->add_option("--out", out_path);

  auto* verify = app.add_subcommand("verify", "run a verification check");
  verify->add_option("--theorem", theorem)->required();
  verify->add_option("--instances", instances);
  verify->add_option("--seed", seed)->required();
  verify->add_option("--model", dist_path, "distortion model JSON file");
  verify->add_option("--mdp", mdp_path);
  verify->add_option("--c-bs", c_bs);
  verify->add_option("--eps-bs", eps_bs);
  verify->add_option("--eps-d", eps_d);
  verify->add_option("--start", start);
  verify->add_option("--out", out_path);

  auto* hitting = app.add_subcommand("hitting", "hitting-time bound and optional simulation");
  hitting->add_option("--delta", delta)->required();
  hitting->add_option("--r-max", r_max)->required();
  hitting->add_option("--r-bs", r_bs)->required();
  hitting->add_option("--eps-min", eps_min)->required();
  hitting->add_option("--eps-bs", eps_bs)->required();
  hitting->add_option("--mdp", mdp_path, "simulate hit-by-t on this MDP");
  hitting->add_option("--distortion", dist_path);
  hitting->add_option("--policy", policy_arg);
  hitting->add_option("--start", start);
  hitting->add_option("--c-bs", c_bs);
  hitting->add_option("--trials", trials);
  hitting->add_option("--seed", seed);
  hitting->add_option("--out", out_path);

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate->parsed()) return cmd_validate(mdp_path, dist_path, curves_csv, out_path);
    if (solve->parsed()) return cmd_solve(mdp_path, policy_arg, start, out_path);
    if (perceive->parsed())
      return cmd_perceive(mdp_path, dist_path, policy_arg, start, curves_csv, out_path);
    if (detect->parsed())
      return cmd_detect(mdp_path, dist_path, policy_arg, start, c_bs, eps_bs, eta_flat,
                        out_path);
    if (estimate->parsed())
      return cmd_estimate(mdp_path, dist_path, policy_arg, start, n_samples, seed,
                          from_trajectories, n_trajectories, dump_traj, load_traj,
                          out_path);
    if (verify->parsed())
      return cmd_verify(theorem, instances, seed, dist_path, mdp_path, c_bs, eps_bs,
                        eps_d, start, out_path);
    if (hitting->parsed())
      return cmd_hitting(delta, r_max, r_bs, eps_min, eps_bs, mdp_path, dist_path,
                         policy_arg, start, c_bs, trials, seed, out_path);
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return kExitValidation;
  }
  return kExitValidation;
}
