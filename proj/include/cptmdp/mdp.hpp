#pragma once

// Stationary finite-horizon MDPs: exact representation, backward-induction
// solution, visitation (occupancy) measures, and seeded trajectory sampling.
//
// Conventions. A horizon-T episode visits states s_0..s_T and takes actions
// a_0..a_{T-1}; reward r_t = R(s_t, a_t) accrues at steps t = 0..T-1. The
// normalized visitation measure divides the discount-weighted visit
// probabilities by norm(gamma, T) = sum_{t<T} gamma^t, so it is a probability
// distribution over state-action pairs; value_from_occupancy multiplies the
// factor back.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "cptmdp/common.hpp"
#include "json.hpp"

namespace cptmdp {

class Mdp {
 public:
  Mdp(int n_states, int n_actions, std::vector<double> transition,
      std::vector<double> reward, double gamma, int horizon, double r_max,
      std::vector<std::string> labels = {})
      : n_states_(n_states),
        n_actions_(n_actions),
        transition_(std::move(transition)),
        reward_(std::move(reward)),
        gamma_(gamma),
        horizon_(horizon),
        r_max_(r_max),
        labels_(std::move(labels)) {
    validate();
  }

  int n_states() const { return n_states_; }
  int n_actions() const { return n_actions_; }
  int n_pairs() const { return n_states_ * n_actions_; }
  double gamma() const { return gamma_; }
  int horizon() const { return horizon_; }
  double r_max() const { return r_max_; }
  const std::vector<std::string>& labels() const { return labels_; }

  double p(int s, int a, int s2) const {
    return transition_[(static_cast<std::size_t>(s) * n_actions_ + a) * n_states_ + s2];
  }
  double r(int s, int a) const {
    return reward_[static_cast<std::size_t>(s) * n_actions_ + a];
  }
  const std::vector<double>& transition_table() const { return transition_; }
  const std::vector<double>& reward_table() const { return reward_; }

  int pair_index(int s, int a) const { return s * n_actions_ + a; }

  // sum_{t<T} gamma^t; equals T when gamma == 1.
  double occupancy_normalizer() const {
    if (gamma_ == 1.0) return static_cast<double>(horizon_);
    return (1.0 - std::pow(gamma_, horizon_)) / (1.0 - gamma_);
  }

 private:
  void validate() const {
    if (n_states_ < 1 || n_actions_ < 1)
      throw DimensionMismatch("n_states and n_actions must be positive");
    if (transition_.size() != static_cast<std::size_t>(n_states_) * n_actions_ * n_states_)
      throw DimensionMismatch("transition table has wrong size");
    if (reward_.size() != static_cast<std::size_t>(n_states_) * n_actions_)
      throw DimensionMismatch("reward table has wrong size");
    if (!(gamma_ > 0.0 && gamma_ <= 1.0))
      throw BadDiscount("gamma must lie in (0, 1], got " + std::to_string(gamma_));
    if (horizon_ < 1) throw BadDiscount("horizon must be >= 1");
    if (!(r_max_ > 0.0)) throw RewardOutOfBounds("r_max must be positive");
    if (!labels_.empty() && labels_.size() != static_cast<std::size_t>(n_states_))
      throw DimensionMismatch("labels size must match n_states");
    for (int s = 0; s < n_states_; ++s) {
      for (int a = 0; a < n_actions_; ++a) {
        double sum = 0.0;
        for (int s2 = 0; s2 < n_states_; ++s2) {
          double v = p(s, a, s2);
          if (!(v >= 0.0 && v <= 1.0 + kProbTol))
            throw NonStochasticRow("P(s'|" + std::to_string(s) + "," +
                                   std::to_string(a) + ") entry outside [0,1]");
          sum += v;
        }
        if (std::abs(sum - 1.0) > kProbTol)
          throw NonStochasticRow("row (" + std::to_string(s) + "," +
                                 std::to_string(a) + ") sums to " +
                                 std::to_string(sum));
        double rv = r(s, a);
        if (!std::isfinite(rv) || std::abs(rv) > r_max_ + 1e-12)
          throw RewardOutOfBounds("R(" + std::to_string(s) + "," +
                                  std::to_string(a) + ") = " +
                                  std::to_string(rv) + " exceeds r_max");
      }
    }
  }

  int n_states_;
  int n_actions_;
  std::vector<double> transition_;  // [s][a][s']
  std::vector<double> reward_;      // [s][a]
  double gamma_;
  int horizon_;
  double r_max_;
  std::vector<std::string> labels_;
};

// Time-indexed randomized policy: row (t, s) is a distribution over actions.
// Stationary policies repeat the same rows for every t.
class Policy {
 public:
  Policy(int horizon, int n_states, int n_actions, std::vector<double> table,
         bool deterministic)
      : horizon_(horizon),
        n_states_(n_states),
        n_actions_(n_actions),
        table_(std::move(table)),
        deterministic_(deterministic) {
    if (table_.size() != static_cast<std::size_t>(horizon_) * n_states_ * n_actions_)
      throw DimensionMismatch("policy table has wrong size");
    for (int t = 0; t < horizon_; ++t)
      for (int s = 0; s < n_states_; ++s) {
        double sum = 0.0;
        for (int a = 0; a < n_actions_; ++a) sum += prob(t, s, a);
        if (std::abs(sum - 1.0) > kProbTol)
          throw NonStochasticRow("policy row (t=" + std::to_string(t) + ", s=" +
                                 std::to_string(s) + ") sums to " +
                                 std::to_string(sum));
      }
  }

  static Policy stationary_deterministic(const std::vector<int>& actions,
                                         int horizon, int n_actions) {
    int n_states = static_cast<int>(actions.size());
    std::vector<double> table(
        static_cast<std::size_t>(horizon) * n_states * n_actions, 0.0);
    for (int t = 0; t < horizon; ++t)
      for (int s = 0; s < n_states; ++s) {
        if (actions[s] < 0 || actions[s] >= n_actions)
          throw DimensionMismatch("action index out of range");
        table[(static_cast<std::size_t>(t) * n_states + s) * n_actions +
              actions[s]] = 1.0;
      }
    return Policy(horizon, n_states, n_actions, std::move(table), true);
  }

  static Policy deterministic(const std::vector<std::vector<int>>& actions,
                              int n_actions) {
    int horizon = static_cast<int>(actions.size());
    int n_states = static_cast<int>(actions.at(0).size());
    std::vector<double> table(
        static_cast<std::size_t>(horizon) * n_states * n_actions, 0.0);
    for (int t = 0; t < horizon; ++t)
      for (int s = 0; s < n_states; ++s)
        table[(static_cast<std::size_t>(t) * n_states + s) * n_actions +
              actions[t][s]] = 1.0;
    return Policy(horizon, n_states, n_actions, std::move(table), true);
  }

  static Policy uniform(int horizon, int n_states, int n_actions) {
    std::vector<double> table(
        static_cast<std::size_t>(horizon) * n_states * n_actions,
        1.0 / n_actions);
    return Policy(horizon, n_states, n_actions, std::move(table), false);
  }

  int horizon() const { return horizon_; }
  int n_states() const { return n_states_; }
  int n_actions() const { return n_actions_; }
  bool is_deterministic() const { return deterministic_; }

  double prob(int t, int s, int a) const {
    return table_[(static_cast<std::size_t>(t) * n_states_ + s) * n_actions_ + a];
  }

  // Action with maximal probability (deterministic policies: the action).
  int action(int t, int s) const {
    int best = 0;
    for (int a = 1; a < n_actions_; ++a)
      if (prob(t, s, a) > prob(t, s, best)) best = a;
    return best;
  }

  const std::vector<double>& table() const { return table_; }

 private:
  int horizon_;
  int n_states_;
  int n_actions_;
  std::vector<double> table_;  // [t][s][a]
  bool deterministic_;
};

struct OccupancyMeasure {
  std::vector<double> weights;  // [s*A + a], sums to 1
  double normalizer = 0.0;      // sum_{t<T} gamma^t

  double at(int s, int a, int n_actions) const {
    return weights[static_cast<std::size_t>(s) * n_actions + a];
  }
  double total() const {
    return std::accumulate(weights.begin(), weights.end(), 0.0);
  }
};

struct Trajectory {
  std::vector<int> states;      // length T+1
  std::vector<int> actions;     // length T
  std::vector<double> rewards;  // length T
  std::uint64_t seed = 0;
};

inline void check_compatible(const Mdp& mdp, const Policy& policy) {
  if (policy.horizon() != mdp.horizon() || policy.n_states() != mdp.n_states() ||
      policy.n_actions() != mdp.n_actions())
    throw DimensionMismatch("policy dimensions do not match mdp");
}

inline void check_state(const Mdp& mdp, int s) {
  if (s < 0 || s >= mdp.n_states())
    throw DimensionMismatch("state index out of range");
}

// Exact finite-horizon value V_0(start) by backward induction.
inline double value_function(const Mdp& mdp, const Policy& policy, int start_state) {
  check_compatible(mdp, policy);
  check_state(mdp, start_state);
  const int S = mdp.n_states(), A = mdp.n_actions(), T = mdp.horizon();
  std::vector<double> v(S, 0.0), next(S, 0.0);
  for (int t = T - 1; t >= 0; --t) {
    for (int s = 0; s < S; ++s) {
      double val = 0.0;
      for (int a = 0; a < A; ++a) {
        double pa = policy.prob(t, s, a);
        if (pa == 0.0) continue;
        double q = mdp.r(s, a);
        double cont = 0.0;
        for (int s2 = 0; s2 < S; ++s2) cont += mdp.p(s, a, s2) * next[s2];
        q += mdp.gamma() * cont;
        val += pa * q;
      }
      v[s] = val;
    }
    std::swap(v, next);
  }
  return next[start_state];
}

// Normalized visitation measure: P(s,a) = sum_{t<T} gamma^t Pr[(s_t,a_t)=(s,a)] / norm.
inline OccupancyMeasure occupancy(const Mdp& mdp, const Policy& policy, int start_state) {
  check_compatible(mdp, policy);
  check_state(mdp, start_state);
  const int S = mdp.n_states(), A = mdp.n_actions(), T = mdp.horizon();
  std::vector<double> dist(S, 0.0);
  dist[start_state] = 1.0;
  OccupancyMeasure occ;
  occ.weights.assign(static_cast<std::size_t>(S) * A, 0.0);
  occ.normalizer = mdp.occupancy_normalizer();
  double discount = 1.0;
  std::vector<double> next(S);
  for (int t = 0; t < T; ++t) {
    std::fill(next.begin(), next.end(), 0.0);
    for (int s = 0; s < S; ++s) {
      if (dist[s] == 0.0) continue;
      for (int a = 0; a < A; ++a) {
        double joint = dist[s] * policy.prob(t, s, a);
        if (joint == 0.0) continue;
        occ.weights[static_cast<std::size_t>(s) * A + a] += discount * joint;
        for (int s2 = 0; s2 < S; ++s2) next[s2] += joint * mdp.p(s, a, s2);
      }
    }
    std::swap(dist, next);
    discount *= mdp.gamma();
  }
  for (double& w : occ.weights) w /= occ.normalizer;
  return occ;
}

// V = norm * sum_(s,a) R(s,a) P(s,a); agrees with value_function to 1e-9.
inline double value_from_occupancy(const Mdp& mdp, const OccupancyMeasure& occ) {
  if (occ.weights.size() != static_cast<std::size_t>(mdp.n_pairs()))
    throw DimensionMismatch("occupancy size does not match mdp");
  double inner = 0.0;
  for (int s = 0; s < mdp.n_states(); ++s)
    for (int a = 0; a < mdp.n_actions(); ++a)
      inner += mdp.r(s, a) * occ.at(s, a, mdp.n_actions());
  return occ.normalizer * inner;
}

// Deterministic optimal policy; argmax ties broken by lowest action index.
inline Policy optimal_policy(const Mdp& mdp) {
  const int S = mdp.n_states(), A = mdp.n_actions(), T = mdp.horizon();
  std::vector<double> next(S, 0.0), v(S, 0.0);
  std::vector<std::vector<int>> actions(T, std::vector<int>(S, 0));
  for (int t = T - 1; t >= 0; --t) {
    for (int s = 0; s < S; ++s) {
      double best_q = -std::numeric_limits<double>::infinity();
      int best_a = 0;
      for (int a = 0; a < A; ++a) {
        double q = mdp.r(s, a);
        double cont = 0.0;
        for (int s2 = 0; s2 < S; ++s2) cont += mdp.p(s, a, s2) * next[s2];
        q += mdp.gamma() * cont;
        if (q > best_q) {
          best_q = q;
          best_a = a;
        }
      }
      v[s] = best_q;
      actions[t][s] = best_a;
    }
    std::swap(v, next);
  }
  return Policy::deterministic(actions, A);
}

inline double count_deterministic_policies(const Mdp& mdp) {
  return std::pow(static_cast<double>(mdp.n_actions()),
                  static_cast<double>(mdp.n_states()) * mdp.horizon());
}

// Exhaustive, duplicate-free enumeration of all |A|^(S*T) deterministic
// policies (mixed-radix counting). Guarded by `cap`.
inline std::vector<Policy> enumerate_deterministic_policies(
    const Mdp& mdp, double cap = 1e6) {
  double count = count_deterministic_policies(mdp);
  if (count > cap)
    throw EnumerationTooLarge("would enumerate " + std::to_string(count) +
                              " policies (cap " + std::to_string(cap) + ")");
  const int S = mdp.n_states(), A = mdp.n_actions(), T = mdp.horizon();
  const long total = static_cast<long>(std::llround(count));
  std::vector<Policy> out;
  out.reserve(total);
  std::vector<std::vector<int>> assign(T, std::vector<int>(S, 0));
  for (long idx = 0; idx < total; ++idx) {
    out.push_back(Policy::deterministic(assign, A));
    // increment mixed-radix counter
    for (int t = 0; t < T; ++t) {
      bool carry = false;
      for (int s = 0; s < S; ++s) {
        if (++assign[t][s] < A) {
          carry = false;
          break;
        }
        assign[t][s] = 0;
        carry = true;
      }
      if (!carry) break;
    }
  }
  return out;
}

inline int sample_from(const double* probs, int n, Rng& rng) {
  double u = rng.uniform();
  double cum = 0.0;
  for (int i = 0; i < n; ++i) {
    cum += probs[i];
    if (u < cum) return i;
  }
  // Guard against rounding in the cumulative sum.
  for (int i = n - 1; i >= 0; --i)
    if (probs[i] > 0.0) return i;
  return n - 1;
}

inline Trajectory sample_trajectory(const Mdp& mdp, const Policy& policy,
                                    int start_state, std::uint64_t seed) {
  check_compatible(mdp, policy);
  check_state(mdp, start_state);
  const int S = mdp.n_states(), A = mdp.n_actions(), T = mdp.horizon();
  Rng rng(seed);
  Trajectory traj;
  traj.seed = seed;
  traj.states.reserve(T + 1);
  traj.actions.reserve(T);
  traj.rewards.reserve(T);
  int s = start_state;
  traj.states.push_back(s);
  std::vector<double> action_probs(A);
  for (int t = 0; t < T; ++t) {
    for (int a = 0; a < A; ++a) action_probs[a] = policy.prob(t, s, a);
    int a = sample_from(action_probs.data(), A, rng);
    traj.actions.push_back(a);
    traj.rewards.push_back(mdp.r(s, a));
    const double* row = mdp.transition_table().data() +
                        (static_cast<std::size_t>(s) * A + a) * S;
    s = sample_from(row, S, rng);
    traj.states.push_back(s);
  }
  return traj;
}

// ---- JSON (spec file schema: 0-based indices throughout) ----

inline Mdp mdp_from_json(const nlohmann::json& j) {
  int S = j.at("n_states").get<int>();
  int A = j.at("n_actions").get<int>();
  std::vector<double> transition;
  transition.reserve(static_cast<std::size_t>(S) * A * S);
  const auto& pt = j.at("transition");
  if (static_cast<int>(pt.size()) != S)
    throw DimensionMismatch("transition outer size != n_states");
  for (const auto& per_state : pt) {
    if (static_cast<int>(per_state.size()) != A)
      throw DimensionMismatch("transition action dimension != n_actions");
    for (const auto& row : per_state) {
      if (static_cast<int>(row.size()) != S)
        throw DimensionMismatch("transition row size != n_states");
      for (const auto& v : row) transition.push_back(v.get<double>());
    }
  }
  std::vector<double> reward;
  reward.reserve(static_cast<std::size_t>(S) * A);
  const auto& rt = j.at("reward");
  if (static_cast<int>(rt.size()) != S)
    throw DimensionMismatch("reward outer size != n_states");
  for (const auto& row : rt) {
    if (static_cast<int>(row.size()) != A)
      throw DimensionMismatch("reward row size != n_actions");
    for (const auto& v : row) reward.push_back(v.get<double>());
  }
  std::vector<std::string> labels;
  if (j.contains("labels")) labels = j.at("labels").get<std::vector<std::string>>();
  return Mdp(S, A, std::move(transition), std::move(reward),
             j.at("gamma").get<double>(), j.at("horizon").get<int>(),
             j.at("r_max").get<double>(), std::move(labels));
}

inline nlohmann::json mdp_to_json(const Mdp& mdp) {
  nlohmann::json j;
  j["n_states"] = mdp.n_states();
  j["n_actions"] = mdp.n_actions();
  j["gamma"] = mdp.gamma();
  j["horizon"] = mdp.horizon();
  j["r_max"] = mdp.r_max();
  nlohmann::json pt = nlohmann::json::array();
  for (int s = 0; s < mdp.n_states(); ++s) {
    nlohmann::json per_state = nlohmann::json::array();
    for (int a = 0; a < mdp.n_actions(); ++a) {
      nlohmann::json row = nlohmann::json::array();
      for (int s2 = 0; s2 < mdp.n_states(); ++s2) row.push_back(mdp.p(s, a, s2));
      per_state.push_back(std::move(row));
    }
    pt.push_back(std::move(per_state));
  }
  j["transition"] = std::move(pt);
  nlohmann::json rt = nlohmann::json::array();
  for (int s = 0; s < mdp.n_states(); ++s) {
    nlohmann::json row = nlohmann::json::array();
    for (int a = 0; a < mdp.n_actions(); ++a) row.push_back(mdp.r(s, a));
    rt.push_back(std::move(row));
  }
  j["reward"] = std::move(rt);
  if (!mdp.labels().empty()) j["labels"] = mdp.labels();
  return j;
}

inline Policy policy_from_json(const nlohmann::json& j) {
  int T = j.at("horizon").get<int>();
  const auto& tbl = j.at("table");
  int S = static_cast<int>(tbl.at(0).size());
  int A = static_cast<int>(tbl.at(0).at(0).size());
  std::vector<double> table;
  table.reserve(static_cast<std::size_t>(T) * S * A);
  for (const auto& per_t : tbl)
    for (const auto& per_s : per_t)
      for (const auto& v : per_s) table.push_back(v.get<double>());
  bool det = j.value("deterministic", false);
  return Policy(T, S, A, std::move(table), det);
}

inline nlohmann::json policy_to_json(const Policy& p) {
  nlohmann::json tbl = nlohmann::json::array();
  for (int t = 0; t < p.horizon(); ++t) {
    nlohmann::json per_t = nlohmann::json::array();
    for (int s = 0; s < p.n_states(); ++s) {
      nlohmann::json row = nlohmann::json::array();
      for (int a = 0; a < p.n_actions(); ++a) row.push_back(p.prob(t, s, a));
      per_t.push_back(std::move(row));
    }
    tbl.push_back(std::move(per_t));
  }
  return nlohmann::json{{"horizon", p.horizon()},
                        {"deterministic", p.is_deterministic()},
                        {"table", std::move(tbl)}};
}

}  // namespace cptmdp
