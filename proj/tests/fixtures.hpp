#pragma once

// Shared instances for tests and the acceptance suite.
//
// The insurance MDP: a two-step decision. From `start`, action 0 (pay) moves
// to `premium` (utility -15) with certainty; action 1 (no-pay) moves to
// `base` (utility 0) with probability 0.99 or `risk` (utility -1000) with
// probability 0.01. Terminal states self-loop, rewards are state-based,
// gamma = 1, horizon 2, so V(no-pay) = -10 and V(pay) = -15 exactly.

#include <vector>

#include "cptmdp/blackswan.hpp"
#include "cptmdp/distortion.hpp"
#include "cptmdp/mdp.hpp"
#include "cptmdp/perception.hpp"

namespace fixtures {

inline constexpr int kPay = 0;
inline constexpr int kNoPay = 1;
inline constexpr int kStart = 0, kBase = 1, kPremium = 2, kRisk = 3;

inline cptmdp::Mdp insurance_mdp() {
  const int S = 4, A = 2;
  std::vector<double> P(S * A * S, 0.0);
  auto set = [&](int s, int a, int s2, double v) {
    P[(static_cast<std::size_t>(s) * A + a) * S + s2] = v;
  };
  set(kStart, kPay, kPremium, 1.0);
  set(kStart, kNoPay, kBase, 0.99);
  set(kStart, kNoPay, kRisk, 0.01);
  for (int s : {kBase, kPremium, kRisk})
    for (int a = 0; a < A; ++a) set(s, a, s, 1.0);
  std::vector<double> R = {0, 0, 0, 0, -15, -15, -1000, -1000};  // [s][a]
  return cptmdp::Mdp(S, A, std::move(P), std::move(R), 1.0, 2, 1000.0,
                     {"start", "base", "premium", "risk"});
}

inline cptmdp::Policy always(int action) {
  return cptmdp::Policy::stationary_deterministic({action, action, action, action},
                                                  2, 2);
}

// Three-state variant with start == base, as in the compact description.
inline cptmdp::Mdp insurance_mdp_3state() {
  const int S = 3, A = 2;
  std::vector<double> P(S * A * S, 0.0);
  auto set = [&](int s, int a, int s2, double v) {
    P[(static_cast<std::size_t>(s) * A + a) * S + s2] = v;
  };
  set(0, kPay, 1, 1.0);
  set(0, kNoPay, 0, 0.99);
  set(0, kNoPay, 2, 0.01);
  for (int s : {1, 2})
    for (int a = 0; a < A; ++a) set(s, a, s, 1.0);
  std::vector<double> R = {0, 0, -15, -15, -1000, -1000};
  return cptmdp::Mdp(S, A, std::move(P), std::move(R), 1.0, 2, 1000.0,
                     {"base", "premium", "risk"});
}

inline cptmdp::DistortionModel tk_model(double r_max) {
  return cptmdp::tversky_kahneman_model(0.88, 0.88, 2.25, 0.61, 0.69, r_max);
}

// Strongly optimistic loss branch: u-(x) = -2 sqrt(-x). With c_bs = 100 and
// r_max = 1000 the distortion boundary sits at R_bs = (1 + sqrt(101))^2.
inline cptmdp::DistortionModel optimistic_model(double r_max) {
  return cptmdp::tversky_kahneman_model(0.88, 0.5, 2.0, 0.61, 0.69, r_max);
}

inline cptmdp::DistortionModel flat_optimistic_model(double r_max, double p_flat) {
  return cptmdp::flat_region_model(p_flat, optimistic_model(r_max));
}

}  // namespace fixtures
