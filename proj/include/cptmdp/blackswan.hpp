#pragma once

// Detection of rare, high-risk, misperceived state-action pairs. A pair is
// flagged when (a) the loss distortion exceeds c_bs at its reward and (b) its
// true visitation probability is positive but below eps_bs while the
// distorted cumulative weight is flat across it (the pair is perceived as
// infeasible). Also: the reward-space boundary R_bs, the reward-space pair
// test, and classification of events in piecewise-stationary sequences.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "cptmdp/perception.hpp"

namespace cptmdp {

struct PairDiagnostic {
  int s = 0, a = 0;
  double reward = 0.0;
  double u_reward = 0.0;     // perceived reward u(R)
  double reward_gap = 0.0;   // R - u-(R), negative when perception is optimistic
  double occupancy = 0.0;    // true visitation weight
  double cum = 0.0;          // cumulative visitation up to and including the pair
  double cum_prev = 0.0;
  double w_cum = 0.0;        // distorted cumulative (loss branch)
  double w_cum_prev = 0.0;
  bool high_risk = false;
  bool rare = false;
  bool event = false;
};

struct BlackSwanReport {
  std::vector<PairDiagnostic> pairs;          // every reachable pair, scan order
  std::vector<std::pair<int, int>> events;    // the detected set B
  double eps_bs_min = 0.0;                    // min occupancy over B, 0 if empty
  double r_bs = std::numeric_limits<double>::quiet_NaN();  // NaN: no intersection
  double c_bs = 0.0;
  double eps_bs = 0.0;
  double eta_flat = 0.0;                      // tolerance used for the equality test
};

// Magnitude R_bs > 0 at which |u-(r) - r| first reaches c_bs on [-r_max, 0],
// scanning from 0 outward; bisection-refined so the residual is <= 1e-10.
// Throws NoIntersection when the distortion stays below c_bs everywhere,
// which forces the detected set to be empty.
inline double compute_r_bs(const DistortionModel& model, double c_bs, double r_max) {
  if (!(c_bs > 0.0)) throw InvalidParameter("c_bs must be positive");
  if (!(r_max > 0.0)) throw InvalidParameter("r_max must be positive");
  auto gap = [&](double m) {  // |u-(-m) - (-m)| - c_bs
    return std::abs(model.u(-m) + m) - c_bs;
  };
  const int n = 1 << 16;
  double prev_m = 0.0;
  double prev_g = gap(0.0);
  for (int i = 1; i <= n; ++i) {
    double m = r_max * static_cast<double>(i) / n;
    double g = gap(m);
    if (g >= 0.0) {
      double lo = prev_m, hi = m;
      for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (gap(mid) >= 0.0)
          hi = mid;
        else
          lo = mid;
      }
      double r_bs = 0.5 * (lo + hi);
      if (std::abs(gap(r_bs)) > 1e-10) r_bs = hi;  // settle on the crossing side
      return r_bs;
    }
    prev_m = m;
    prev_g = g;
  }
  (void)prev_g;
  throw NoIntersection("|u-(r) - r| stays below c_bs=" + std::to_string(c_bs) +
                       " on [-" + std::to_string(r_max) + ", 0]");
}

// Exhaustive scan of reachable pairs against both conditions. The cumulative
// ordering spans all pairs (ascending occupancy, ties by pair index); the
// flatness test uses the loss branch, equality within eta_flat.
inline BlackSwanReport detect(const Mdp& mdp, const Policy& policy,
                              const DistortionModel& model, double c_bs,
                              double eps_bs, int start_state,
                              double eta_flat = 1e-12) {
  if (!(c_bs > 0.0)) throw InvalidParameter("c_bs must be positive");
  if (!(eps_bs > 0.0 && eps_bs < 1.0))
    throw InvalidParameter("eps_bs must lie in (0,1)");
  if (!model.certificate.structural_pass()) {
    const ConstraintResult* f = model.certificate.first_failure();
    throw CertificateFailed("detect: constraint '" + f->name + "' failed");
  }

  OccupancyMeasure occ = occupancy(mdp, policy, start_state);
  const int n = mdp.n_pairs();
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int i, int j) {
    if (occ.weights[i] != occ.weights[j]) return occ.weights[i] < occ.weights[j];
    return i < j;
  });

  BlackSwanReport report;
  report.c_bs = c_bs;
  report.eps_bs = eps_bs;
  report.eta_flat = eta_flat;
  try {
    report.r_bs = compute_r_bs(model, c_bs, mdp.r_max());
  } catch (const NoIntersection&) {
    // left NaN; the high-risk condition is then unsatisfiable
  }

  long double cum = 0.0L;
  report.eps_bs_min = std::numeric_limits<double>::infinity();
  for (int k = 0; k < n; ++k) {
    int idx = order[k];
    long double cum_prev = cum;
    cum += occ.weights[idx];
    int s = idx / mdp.n_actions();
    int a = idx % mdp.n_actions();
    if (occ.weights[idx] <= 0.0) continue;  // unreachable pairs are never events

    PairDiagnostic d;
    d.s = s;
    d.a = a;
    d.reward = mdp.r(s, a);
    d.u_reward = model.u(d.reward);
    d.occupancy = occ.weights[idx];
    d.cum = static_cast<double>(cum);
    d.cum_prev = static_cast<double>(cum_prev);
    d.w_cum = model.w(d.cum, false);
    d.w_cum_prev = model.w(d.cum_prev, false);
    d.reward_gap = d.reward - (d.reward < 0.0 ? d.u_reward : d.reward);
    d.high_risk = d.reward < 0.0 && (d.reward - d.u_reward) < -c_bs;
    d.rare = std::abs(d.w_cum - d.w_cum_prev) <= eta_flat &&
             d.occupancy > 0.0 && d.occupancy < eps_bs;
    d.event = d.high_risk && d.rare;
    if (d.event) {
      report.events.emplace_back(s, a);
      report.eps_bs_min = std::min(report.eps_bs_min, d.occupancy);
    }
    report.pairs.push_back(d);
  }
  if (report.events.empty()) report.eps_bs_min = 0.0;
  std::sort(report.events.begin(), report.events.end());
  return report;
}

inline double eps_bs_min(const BlackSwanReport& report) { return report.eps_bs_min; }

// Reward-space pair test: distortion beyond c_bs at r, distorted cumulative
// exactly zero, and 0 < F(r) < eps_bs. A true result implies r lies in
// [-r_max, -R_bs] whenever the boundary exists.
inline bool check_prop1(double r, const DistortionModel& model, double c_bs,
                        double eps_bs, const RewardDistribution& dist,
                        double eta_flat = 1e-12) {
  if (r > 0.0) return false;
  bool high_risk = (r - model.u(r)) < -c_bs;
  if (!high_risk) return false;
  double F = dist.cdf_at(r);
  bool rare = std::abs(model.w(F, false)) <= eta_flat && F > 0.0 && F < eps_bs;
  if (!rare) return false;
  double r_bs = compute_r_bs(model, c_bs, model.r_max());
  if (r > -r_bs + 1e-9)
    throw Error("check_prop1: accepted reward " + std::to_string(r) +
                " above -R_bs = " + std::to_string(-r_bs));
  return true;
}

// True iff no reward atom satisfies both conditions in reward space; the
// rare test checks flatness of the distorted cumulative across the atom.
inline bool is_safe_perception(const DistortionModel& model,
                               const RewardDistribution& dist, double c_bs,
                               double eps_bs, double eta_flat = 1e-12) {
  for (std::size_t i = 0; i < dist.support.size(); ++i) {
    double r = dist.support[i];
    if (r >= 0.0) break;
    double p = dist.probabilities[i];
    bool high_risk = (r - model.u(r)) < -c_bs;
    double w_hi = model.w(dist.cdf[i], false);
    double w_lo = model.w(dist.cdf[i] - p, false);
    bool rare = std::abs(w_hi - w_lo) <= eta_flat && p > 0.0 && p < eps_bs;
    if (high_risk && rare) return false;
  }
  return true;
}

// ---- classification in (piecewise-)stationary sequences ----

struct StageDynamics {
  std::vector<double> transition;  // [s][a][s'], same layout as Mdp
  std::vector<double> reward;      // [s][a]

  bool operator==(const StageDynamics& o) const {
    return transition == o.transition && reward == o.reward;
  }
};

enum class Verdict { SBlackSwan, Indeterminate };

struct EventClassification {
  int s = 0, a = 0, t_bs = 0;
  Verdict verdict = Verdict::Indeterminate;
  bool has_interval = false;
  int t1 = 0, t2 = 0;  // inclusive interval of constant dynamics + flagging
};

// Classifies a flagged event inside a sequence of per-step dynamics. The
// maximal interval with constant (P_t, R_t) around t_bs is intersected with
// the span on which the event stays flagged; a singleton always qualifies, so
// a flagged event on any input gets a verdict. Unflagged queries are
// Indeterminate.
inline EventClassification classify_temporal(
    const std::vector<StageDynamics>& sequence,
    const std::function<bool(int, int, int)>& flagged, int s, int a, int t_bs) {
  if (t_bs < 0 || t_bs >= static_cast<int>(sequence.size()))
    throw EventOutOfRange("t_bs=" + std::to_string(t_bs) + " outside sequence of length " +
                          std::to_string(sequence.size()));
  EventClassification out;
  out.s = s;
  out.a = a;
  out.t_bs = t_bs;
  if (!flagged(s, a, t_bs)) return out;

  int t1 = t_bs, t2 = t_bs;
  while (t1 > 0 && sequence[t1 - 1] == sequence[t_bs]) --t1;
  while (t2 + 1 < static_cast<int>(sequence.size()) && sequence[t2 + 1] == sequence[t_bs])
    ++t2;
  // shrink to the maximal flagged sub-interval containing t_bs
  int u1 = t_bs, u2 = t_bs;
  while (u1 > t1 && flagged(s, a, u1 - 1)) --u1;
  while (u2 < t2 && flagged(s, a, u2 + 1)) ++u2;

  out.verdict = Verdict::SBlackSwan;
  out.has_interval = true;
  out.t1 = u1;
  out.t2 = u2;
  return out;
}

// ---- JSON ----

inline nlohmann::json blackswan_report_json(const BlackSwanReport& r) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& d : r.pairs) {
    pairs.push_back(nlohmann::json{{"s", d.s},
                                   {"a", d.a},
                                   {"reward", d.reward},
                                   {"u_reward", d.u_reward},
                                   {"occupancy", d.occupancy},
                                   {"cum", d.cum},
                                   {"cum_prev", d.cum_prev},
                                   {"w_cum", d.w_cum},
                                   {"w_cum_prev", d.w_cum_prev},
                                   {"high_risk", d.high_risk},
                                   {"rare", d.rare},
                                   {"event", d.event}});
  }
  nlohmann::json events = nlohmann::json::array();
  for (const auto& [s, a] : r.events) events.push_back(nlohmann::json{{"s", s}, {"a", a}});
  return nlohmann::json{
      {"c_bs", r.c_bs},
      {"eps_bs", r.eps_bs},
      {"eta_flat", r.eta_flat},
      {"r_bs", std::isfinite(r.r_bs) ? nlohmann::json(r.r_bs) : nlohmann::json(nullptr)},
      {"eps_bs_min", r.eps_bs_min},
      {"events", std::move(events)},
      {"pairs", std::move(pairs)}};
}

}  // namespace cptmdp
