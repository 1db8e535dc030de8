#pragma once

// Human-MDP construction and estimation. Rewards pass through u; visitation
// probabilities pass through w applied to cumulative sums over a fixed
// ordering of state-action pairs. Estimation rebuilds the distorted value
// from sampled rewards via empirical distribution functions.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "cptmdp/distortion.hpp"
#include "cptmdp/mdp.hpp"

namespace cptmdp {

// Pushforward of the visitation measure through the reward table.
struct RewardDistribution {
  std::vector<double> support;        // sorted ascending
  std::vector<double> probabilities;  // matching masses, sum 1
  std::vector<double> cdf;            // cumulative sums

  // F(r) = P[X <= r].
  double cdf_at(double r) const {
    auto it = std::upper_bound(support.begin(), support.end(), r);
    if (it == support.begin()) return 0.0;
    return cdf[static_cast<std::size_t>(it - support.begin()) - 1];
  }
  double mass_at(double r) const {
    auto it = std::lower_bound(support.begin(), support.end(), r);
    if (it != support.end() && *it == r)
      return probabilities[static_cast<std::size_t>(it - support.begin())];
    return 0.0;
  }
  void finalize() {
    cdf.resize(probabilities.size());
    double cum = 0.0;
    for (std::size_t i = 0; i < probabilities.size(); ++i) {
      cum += probabilities[i];
      cdf[i] = cum;
    }
  }
};

// Occupancy mass aggregated over pairs sharing a reward value; zero-mass
// pairs are dropped, so the support covers exactly the reachable rewards.
inline RewardDistribution reward_distribution(const Mdp& mdp, const Policy& policy,
                                              int start_state) {
  OccupancyMeasure occ = occupancy(mdp, policy, start_state);
  std::map<double, double> atoms;
  for (int s = 0; s < mdp.n_states(); ++s)
    for (int a = 0; a < mdp.n_actions(); ++a) {
      double w = occ.at(s, a, mdp.n_actions());
      if (w > 0.0) atoms[mdp.r(s, a)] += w;
    }
  RewardDistribution dist;
  for (const auto& [r, p] : atoms) {
    dist.support.push_back(r);
    dist.probabilities.push_back(p);
  }
  dist.finalize();
  return dist;
}

// Distorted visitation weights for one ordering pass: pairs sorted by
// ascending weight (ties by index), cumulative sums pushed through w with the
// branch of the upper pair's reward sign, then differenced. Returns weights
// in the original pair order plus the ordering used.
struct DistortedVisitation {
  std::vector<double> weights;
  std::vector<int> ordering;  // pair indices, ascending occupancy
};

inline DistortedVisitation distorted_visitation(const std::vector<double>& occ_weights,
                                                const std::vector<double>& rewards,
                                                const DistortionModel& model) {
  if (occ_weights.size() != rewards.size())
    throw DimensionMismatch("occupancy/reward size mismatch");
  const std::size_t n = occ_weights.size();
  DistortedVisitation out;
  out.ordering.resize(n);
  std::iota(out.ordering.begin(), out.ordering.end(), 0);
  std::sort(out.ordering.begin(), out.ordering.end(), [&](int i, int j) {
    if (occ_weights[i] != occ_weights[j]) return occ_weights[i] < occ_weights[j];
    return i < j;
  });
  out.weights.assign(n, 0.0);
  long double cum = 0.0L;
  for (std::size_t k = 0; k < n; ++k) {
    int idx = out.ordering[k];
    long double cum_prev = cum;
    cum += occ_weights[idx];
    bool gain = rewards[idx] >= 0.0;
    out.weights[idx] = model.w(static_cast<double>(cum), gain) -
                       model.w(static_cast<double>(cum_prev), gain);
  }
  return out;
}

struct PerceivedMdp {
  Mdp source;
  DistortionModel model;
  Policy policy;
  int start_state = 0;
  OccupancyMeasure occ;                  // ground visitation measure
  std::vector<double> reward_dagger;     // [s*A + a]
  std::vector<double> occupancy_dagger;  // [s*A + a], need not sum to 1
  std::vector<int> ordering;             // cumulative-sum order of pairs
  double eps_r = 0.0;
  double eps_d = 0.0;
};

inline PerceivedMdp build_hmdp(const Mdp& mdp, const Policy& policy,
                               const DistortionModel& model, int start_state) {
  if (!model.certificate.structural_pass()) {
    const ConstraintResult* f = model.certificate.first_failure();
    throw CertificateFailed("build_hmdp: constraint '" + f->name + "' failed");
  }
  check_compatible(mdp, policy);
  check_state(mdp, start_state);

  PerceivedMdp pm{mdp, model, policy, start_state,
                  occupancy(mdp, policy, start_state)};
  const int n = mdp.n_pairs();
  pm.reward_dagger.resize(n);
  std::vector<double> rewards(n);
  for (int s = 0; s < mdp.n_states(); ++s)
    for (int a = 0; a < mdp.n_actions(); ++a) {
      int i = mdp.pair_index(s, a);
      rewards[i] = mdp.r(s, a);
      pm.reward_dagger[i] = model.u(rewards[i]);
    }
  DistortedVisitation dv = distorted_visitation(pm.occ.weights, rewards, model);
  pm.occupancy_dagger = std::move(dv.weights);
  pm.ordering = std::move(dv.ordering);

  pm.eps_r = 0.0;
  pm.eps_d = 0.0;
  for (int i = 0; i < n; ++i) {
    pm.eps_r = std::max(pm.eps_r, std::abs(rewards[i] - pm.reward_dagger[i]));
    pm.eps_d = std::max(pm.eps_d, std::abs(pm.occ.weights[i] - pm.occupancy_dagger[i]));
  }
  return pm;
}

// Max-norm gaps, recomputed from the stored tables.
inline std::pair<double, double> perception_gaps(const PerceivedMdp& pm) {
  double eps_r = 0.0, eps_d = 0.0;
  for (int s = 0; s < pm.source.n_states(); ++s)
    for (int a = 0; a < pm.source.n_actions(); ++a) {
      int i = pm.source.pair_index(s, a);
      eps_r = std::max(eps_r, std::abs(pm.source.r(s, a) - pm.reward_dagger[i]));
      eps_d = std::max(eps_d, std::abs(pm.occ.weights[i] - pm.occupancy_dagger[i]));
    }
  return {eps_r, eps_d};
}

// Adds an isolated state: self-loops, zero reward, zero inbound probability.
// Policies gain an action-0 row for it. Values and all prior visitation
// weights are unchanged.
inline PerceivedMdp augment_state(const PerceivedMdp& pm, int new_state) {
  const Mdp& m = pm.source;
  if (new_state < m.n_states())
    throw DuplicateState("state " + std::to_string(new_state) + " already present");
  if (new_state != m.n_states())
    throw DimensionMismatch("next state index must be " + std::to_string(m.n_states()));
  const int S = m.n_states(), A = m.n_actions(), S2 = S + 1;
  std::vector<double> transition(static_cast<std::size_t>(S2) * A * S2, 0.0);
  std::vector<double> reward(static_cast<std::size_t>(S2) * A, 0.0);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) {
      reward[static_cast<std::size_t>(s) * A + a] = m.r(s, a);
      for (int s2 = 0; s2 < S; ++s2)
        transition[(static_cast<std::size_t>(s) * A + a) * S2 + s2] = m.p(s, a, s2);
    }
  for (int a = 0; a < A; ++a)
    transition[(static_cast<std::size_t>(S) * A + a) * S2 + S] = 1.0;
  std::vector<std::string> labels = m.labels();
  if (!labels.empty()) labels.push_back("aug_" + std::to_string(S));
  Mdp extended(S2, A, std::move(transition), std::move(reward), m.gamma(),
               m.horizon(), m.r_max(), std::move(labels));

  const Policy& p = pm.policy;
  std::vector<double> table(static_cast<std::size_t>(p.horizon()) * S2 * A, 0.0);
  for (int t = 0; t < p.horizon(); ++t) {
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a)
        table[(static_cast<std::size_t>(t) * S2 + s) * A + a] = p.prob(t, s, a);
    table[(static_cast<std::size_t>(t) * S2 + S) * A + 0] = 1.0;
  }
  Policy extended_policy(p.horizon(), S2, A, std::move(table), p.is_deterministic());
  return build_hmdp(extended, extended_policy, pm.model, pm.start_state);
}

// Distorted state map h(r) = w(F(r)) with the branch of r's sign; exact on
// the support atoms, monotone non-decreasing.
struct RewardMap {
  std::vector<double> support;
  std::vector<double> mapped;
};

inline RewardMap state_distortion_map(const RewardDistribution& dist,
                                      const DistortionModel& model) {
  RewardMap map;
  map.support = dist.support;
  map.mapped.resize(dist.support.size());
  for (std::size_t i = 0; i < dist.support.size(); ++i) {
    double r = dist.support[i];
    map.mapped[i] = model.w(dist.cdf[i], r >= 0.0);
  }
  return map;
}

inline RewardMap state_distortion_map(const Mdp& mdp, const Policy& policy,
                                      const DistortionModel& model, int start_state) {
  OccupancyMeasure occ = occupancy(mdp, policy, start_state);
  std::map<double, int> seen;
  for (int s = 0; s < mdp.n_states(); ++s)
    for (int a = 0; a < mdp.n_actions(); ++a)
      if (occ.at(s, a, mdp.n_actions()) > 0.0 && ++seen[mdp.r(s, a)] > 1)
        throw NonInjectiveReward("duplicate reward value " +
                                 std::to_string(mdp.r(s, a)) +
                                 " on the reachable support");
  return state_distortion_map(reward_distribution(mdp, policy, start_state), model);
}

// Order-statistics CPT value of a reward distribution: losses cumulated from
// the most negative atom upward through w-, gains decumulated from the most
// positive atom downward through w+, each weighted against u, scaled by the
// visitation normalizer. Reduces to normalizer * E[X] at the identity model.
inline double cpt_value(const RewardDistribution& dist, const DistortionModel& model,
                        double normalizer) {
  if (!model.certificate.structural_pass())
    throw CertificateFailed("cpt_value: model certificate not structurally sound");
  const std::size_t n = dist.support.size();
  long double total = 0.0L;
  // losses, ascending
  long double cum = 0.0L;
  for (std::size_t i = 0; i < n && dist.support[i] < 0.0; ++i) {
    long double prev = cum;
    cum += dist.probabilities[i];
    total += static_cast<long double>(model.u(dist.support[i])) *
             (model.w(static_cast<double>(cum), false) -
              model.w(static_cast<double>(prev), false));
  }
  // gains, descending
  long double tail = 0.0L;
  for (std::size_t k = n; k-- > 0 && dist.support[k] >= 0.0;) {
    long double prev = tail;
    tail += dist.probabilities[k];
    total += static_cast<long double>(model.u(dist.support[k])) *
             (model.w(static_cast<double>(tail), true) -
              model.w(static_cast<double>(prev), true));
  }
  return normalizer * static_cast<double>(total);
}

// Right-continuous empirical distribution function.
struct StepFunction {
  std::vector<double> xs;   // sorted unique sample values
  std::vector<double> cdf;  // fraction of samples <= xs[i]

  double operator()(double x) const {
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    if (it == xs.begin()) return 0.0;
    return cdf[static_cast<std::size_t>(it - xs.begin()) - 1];
  }
};

inline StepFunction make_edf(std::vector<double> samples) {
  std::sort(samples.begin(), samples.end());
  StepFunction f;
  const std::size_t n = samples.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (i + 1 < n && samples[i + 1] == samples[i]) continue;
    f.xs.push_back(samples[i]);
    f.cdf.push_back(static_cast<double>(i + 1) / static_cast<double>(n));
  }
  return f;
}

struct HemdpEstimate {
  long n_samples = 0;
  StepFunction edf_plus;   // over u+(max(x,0)) of the samples
  StepFunction edf_minus;  // over |u-(min(x,0))| of the samples
  double cpt_value_estimate = 0.0;
  double kappa_r = std::numeric_limits<double>::quiet_NaN();
  double kappa_d = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

// integral over [0, inf) of w(P[Z > x]) dx for a nonnegative-sample EDF,
// evaluated exactly as a finite sum over the step intervals.
inline double choquet_tail_integral(const StepFunction& edf, const DistortionModel& model,
                                    bool gain_branch) {
  long double total = 0.0L;
  double prev_x = 0.0;
  for (std::size_t i = 0; i < edf.xs.size(); ++i) {
    double x = edf.xs[i];
    if (x <= 0.0) {
      prev_x = 0.0;
      continue;
    }
    double survival_before = 1.0 - (i == 0 ? 0.0 : edf.cdf[i - 1]);
    total += static_cast<long double>(x - prev_x) *
             model.w(survival_before, gain_branch);
    prev_x = x;
  }
  return static_cast<double>(total);
}

}  // namespace detail

// CPT value estimate from raw reward samples: transforms samples through u,
// builds gain/loss-magnitude EDFs, and integrates the distorted survival
// functions. Deterministic given the samples.
inline HemdpEstimate estimate_hemdp(const std::vector<double>& rewards,
                                    const DistortionModel& model, double normalizer) {
  if (rewards.empty()) throw EmptySample("estimate_hemdp needs n >= 1 samples");
  std::vector<double> gains(rewards.size()), losses(rewards.size());
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    gains[i] = rewards[i] >= 0.0 ? model.u(rewards[i]) : 0.0;
    losses[i] = rewards[i] < 0.0 ? -model.u(rewards[i]) : 0.0;
  }
  HemdpEstimate est;
  est.n_samples = static_cast<long>(rewards.size());
  est.edf_plus = make_edf(std::move(gains));
  est.edf_minus = make_edf(std::move(losses));
  double pos = detail::choquet_tail_integral(est.edf_plus, model, true);
  double neg = detail::choquet_tail_integral(est.edf_minus, model, false);
  est.cpt_value_estimate = normalizer * (pos - neg);
  return est;
}

// Estimate from sampled trajectories against a reference perceived MDP;
// populates the estimation gaps. kappa_r compares the perceived reward table
// with the u-transformed rewards observed at visited pairs; kappa_d compares
// the distorted visitation weights with the distortion of the plug-in
// empirical visitation frequencies.
inline HemdpEstimate estimate_from_trajectories(const PerceivedMdp& pm,
                                                const std::vector<Trajectory>& trajs) {
  if (trajs.empty()) throw EmptySample("no trajectories supplied");
  const Mdp& m = pm.source;
  const int n_pairs = m.n_pairs();
  std::vector<double> pooled;
  std::vector<double> plugin(n_pairs, 0.0);
  std::vector<double> observed_udagger(n_pairs,
                                       std::numeric_limits<double>::quiet_NaN());
  for (const Trajectory& traj : trajs) {
    if (static_cast<int>(traj.actions.size()) != m.horizon())
      throw DimensionMismatch("trajectory horizon does not match mdp");
    double discount = 1.0;
    for (int t = 0; t < m.horizon(); ++t) {
      int i = m.pair_index(traj.states[t], traj.actions[t]);
      pooled.push_back(traj.rewards[t]);
      plugin[i] += discount;
      observed_udagger[i] = pm.model.u(traj.rewards[t]);
      discount *= m.gamma();
    }
  }
  double denom = static_cast<double>(trajs.size()) * m.occupancy_normalizer();
  for (double& v : plugin) v /= denom;

  HemdpEstimate est = estimate_hemdp(pooled, pm.model, m.occupancy_normalizer());

  est.kappa_r = 0.0;
  for (int i = 0; i < n_pairs; ++i)
    if (std::isfinite(observed_udagger[i]))
      est.kappa_r = std::max(est.kappa_r,
                             std::abs(pm.reward_dagger[i] - observed_udagger[i]));

  std::vector<double> rewards(n_pairs);
  for (int s = 0; s < m.n_states(); ++s)
    for (int a = 0; a < m.n_actions(); ++a)
      rewards[m.pair_index(s, a)] = m.r(s, a);
  DistortedVisitation dv = distorted_visitation(plugin, rewards, pm.model);
  est.kappa_d = 0.0;
  for (int i = 0; i < n_pairs; ++i)
    est.kappa_d = std::max(est.kappa_d,
                           std::abs(pm.occupancy_dagger[i] - dv.weights[i]));
  return est;
}

// Inverse-CDF sampling from a discrete reward distribution.
inline double sample_reward(const RewardDistribution& dist, Rng& rng) {
  double u = rng.uniform();
  auto it = std::upper_bound(dist.cdf.begin(), dist.cdf.end(), u);
  std::size_t i = std::min(static_cast<std::size_t>(it - dist.cdf.begin()),
                           dist.support.size() - 1);
  return dist.support[i];
}

// ---- trajectory JSON lines: one {"t","s","a","r"} record per step ----

inline void dump_trajectory(const Trajectory& traj, std::ostream& os) {
  for (std::size_t t = 0; t < traj.actions.size(); ++t) {
    nlohmann::json rec{{"t", t},
                       {"s", traj.states[t]},
                       {"a", traj.actions[t]},
                       {"r", traj.rewards[t]}};
    os << rec.dump() << "\n";
  }
}

inline Trajectory load_trajectory(std::istream& is) {
  Trajectory traj;
  std::string line;
  int last_state = -1;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    nlohmann::json rec = nlohmann::json::parse(line);
    traj.states.push_back(rec.at("s").get<int>());
    traj.actions.push_back(rec.at("a").get<int>());
    traj.rewards.push_back(rec.at("r").get<double>());
    last_state = rec.at("s").get<int>();
  }
  (void)last_state;
  if (traj.actions.empty()) throw EmptySample("trajectory stream has no records");
  // Final arrival state is not part of the record schema; mark it unknown by
  // repeating the last visited state (estimation consumes rewards only).
  traj.states.push_back(traj.states.back());
  return traj;
}

inline nlohmann::json hemdp_report_json(const HemdpEstimate& est) {
  nlohmann::json j;
  j["n"] = est.n_samples;
  j["value"] = est.cpt_value_estimate;
  j["kappa_r"] = std::isfinite(est.kappa_r) ? nlohmann::json(est.kappa_r)
                                            : nlohmann::json(nullptr);
  j["kappa_d"] = std::isfinite(est.kappa_d) ? nlohmann::json(est.kappa_d)
                                            : nlohmann::json(nullptr);
  return j;
}

}  // namespace cptmdp
