#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <vector>

#include "cptmdp/mdp.hpp"
#include "cptmdp/verify.hpp"
#include "fixtures.hpp"

using namespace cptmdp;
using Catch::Approx;

namespace {

Mdp single_pair_chain(double gamma, int horizon, double reward = 0.0) {
  return Mdp(1, 1, {1.0}, {reward}, gamma, horizon, 10.0);
}

// Deterministic cycle over n states with a single action.
Mdp cycle_mdp(int n, int horizon) {
  std::vector<double> P(static_cast<std::size_t>(n) * n, 0.0);
  for (int s = 0; s < n; ++s) P[static_cast<std::size_t>(s) * n + (s + 1) % n] = 1.0;
  std::vector<double> R(n, 0.0);
  return Mdp(n, 1, std::move(P), std::move(R), 1.0, horizon, 10.0);
}

}  // namespace

TEST_CASE("mdp construction validates the invariants") {
  CHECK_NOTHROW(fixtures::insurance_mdp());
  CHECK_NOTHROW(fixtures::insurance_mdp_3state());
  CHECK_NOTHROW(single_pair_chain(1.0, 1));

  SECTION("non-stochastic row") {
    std::vector<double> P = {0.9};  // sums to 0.9
    CHECK_THROWS_AS(Mdp(1, 1, P, {0.0}, 1.0, 1, 1.0), NonStochasticRow);
  }
  SECTION("reward out of bounds") {
    CHECK_THROWS_AS(Mdp(1, 1, {1.0}, {5.0}, 1.0, 1, 1.0), RewardOutOfBounds);
  }
  SECTION("bad discount") {
    CHECK_THROWS_AS(Mdp(1, 1, {1.0}, {0.0}, 0.0, 1, 1.0), BadDiscount);
    CHECK_THROWS_AS(Mdp(1, 1, {1.0}, {0.0}, 1.5, 1, 1.0), BadDiscount);
  }
  SECTION("policy rows must be stochastic") {
    CHECK_THROWS_AS(Policy(1, 1, 2, {0.6, 0.3}, false), NonStochasticRow);
  }
}

TEST_CASE("insurance values are exact") {
  Mdp mdp = fixtures::insurance_mdp();
  CHECK(value_function(mdp, fixtures::always(fixtures::kNoPay), fixtures::kStart) ==
        -10.0);
  CHECK(value_function(mdp, fixtures::always(fixtures::kPay), fixtures::kStart) ==
        -15.0);

  Mdp three = fixtures::insurance_mdp_3state();
  CHECK(value_function(three, Policy::stationary_deterministic({1, 1, 1}, 2, 2), 0) ==
        -10.0);
  CHECK(value_function(three, Policy::stationary_deterministic({0, 0, 0}, 2, 2), 0) ==
        -15.0);
}

TEST_CASE("zero rewards give zero value") {
  Mdp mdp = cycle_mdp(3, 5);
  Policy pi = Policy::stationary_deterministic({0, 0, 0}, 5, 1);
  CHECK(value_function(mdp, pi, 0) == 0.0);
}

TEST_CASE("occupancy of the single-pair chain is one") {
  for (double gamma : {0.5, 0.9, 1.0}) {
    Mdp mdp = single_pair_chain(gamma, 7);
    Policy pi = Policy::stationary_deterministic({0}, 7, 1);
    OccupancyMeasure occ = occupancy(mdp, pi, 0);
    CHECK(occ.at(0, 0, 1) == Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("insurance occupancy matches the enumerated two-step tree") {
  // By hand: step 0 puts mass 1 on (start, no-pay); step 1 splits 0.99/0.01
  // between (base, no-pay) and (risk, no-pay); normalizer is 2.
  Mdp mdp = fixtures::insurance_mdp();
  OccupancyMeasure occ = occupancy(mdp, fixtures::always(fixtures::kNoPay),
                                   fixtures::kStart);
  CHECK(occ.normalizer == 2.0);
  CHECK(occ.at(fixtures::kStart, fixtures::kNoPay, 2) == Approx(0.5).margin(1e-12));
  CHECK(occ.at(fixtures::kBase, fixtures::kNoPay, 2) == Approx(0.495).margin(1e-12));
  CHECK(occ.at(fixtures::kRisk, fixtures::kNoPay, 2) == Approx(0.005).margin(1e-12));
  CHECK(occ.total() == Approx(1.0).margin(1e-9));
}

TEST_CASE("deterministic cycles spread mass evenly over visited pairs") {
  {
    // 2-state cycle, T=2: pairs (0,a) and (1,a) each carry 1/2.
    OccupancyMeasure occ = occupancy(cycle_mdp(2, 2),
                                     Policy::stationary_deterministic({0, 0}, 2, 1), 0);
    CHECK(occ.at(0, 0, 1) == Approx(0.5).margin(1e-12));
    CHECK(occ.at(1, 0, 1) == Approx(0.5).margin(1e-12));
  }
  {
    // 3-state cycle, T=3: one visit each, 1/3 per pair.
    OccupancyMeasure occ = occupancy(cycle_mdp(3, 3),
                                     Policy::stationary_deterministic({0, 0, 0}, 3, 1), 0);
    for (int s = 0; s < 3; ++s)
      CHECK(occ.at(s, 0, 1) == Approx(1.0 / 3.0).margin(1e-12));
  }
}

TEST_CASE("value_from_occupancy agrees with backward induction") {
  Mdp mdp = fixtures::insurance_mdp();
  Policy np = fixtures::always(fixtures::kNoPay);
  OccupancyMeasure occ = occupancy(mdp, np, fixtures::kStart);
  CHECK(value_from_occupancy(mdp, occ) == Approx(-10.0).margin(1e-9));

  // Identity holds across random instances, policies, and start states.
  InstanceOptions opts;
  opts.max_horizon = 6;
  for (int i = 0; i < 120; ++i) {
    Rng rng(derive_seed(424242, i));
    Mdp m = random_mdp(rng, opts);
    Policy pi = random_stationary_policy(rng, m.horizon(), m.n_states(), m.n_actions());
    int s0 = rng.uniform_int(m.n_states());
    double direct = value_function(m, pi, s0);
    double via_occ = value_from_occupancy(m, occupancy(m, pi, s0));
    CHECK(direct == Approx(via_occ).margin(1e-9));
    CHECK(occupancy(m, pi, s0).total() == Approx(1.0).margin(1e-9));
  }
}

TEST_CASE("optimal policy picks no-pay in the insurance decision") {
  Mdp mdp = fixtures::insurance_mdp();
  Policy star = optimal_policy(mdp);
  CHECK(star.action(0, fixtures::kStart) == fixtures::kNoPay);
  CHECK(value_function(mdp, star, fixtures::kStart) == -10.0);
}

TEST_CASE("single-action MDPs are trivially optimal") {
  Mdp mdp = cycle_mdp(3, 4);
  Policy star = optimal_policy(mdp);
  for (int t = 0; t < 4; ++t)
    for (int s = 0; s < 3; ++s) CHECK(star.action(t, s) == 0);
}

TEST_CASE("optimal policy matches brute-force enumeration") {
  InstanceOptions opts;
  opts.min_states = 4;
  opts.max_states = 4;
  opts.min_actions = 3;
  opts.max_actions = 3;
  opts.min_horizon = 2;
  opts.max_horizon = 2;
  for (int i = 0; i < 25; ++i) {
    Rng rng(derive_seed(777, i));
    Mdp m = random_mdp(rng, opts);
    int s0 = rng.uniform_int(m.n_states());
    double v_star = value_function(m, optimal_policy(m), s0);
    double best = -1e300;
    for (const Policy& p : enumerate_deterministic_policies(m))
      best = std::max(best, value_function(m, p, s0));
    CHECK(v_star == Approx(best).margin(1e-9));
    CHECK(v_star >= best - 1e-12);
  }
}

TEST_CASE("deterministic policy enumeration counts") {
  {
    Mdp m(2, 2, {0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5}, {0, 0, 0, 0}, 1.0, 1, 1.0);
    CHECK(enumerate_deterministic_policies(m).size() == 4);  // |A|^|S| = 2^2
  }
  {
    InstanceOptions opts;
    opts.min_states = opts.max_states = 3;
    opts.min_actions = opts.max_actions = 2;
    opts.min_horizon = opts.max_horizon = 2;
    Rng rng(5);
    Mdp m = random_mdp(rng, opts);
    auto all = enumerate_deterministic_policies(m);
    CHECK(all.size() == 64);  // |A|^(|S| T) = 2^6
    // duplicate-free
    std::map<std::vector<double>, int> seen;
    for (const Policy& p : all) ++seen[p.table()];
    CHECK(seen.size() == all.size());
  }
  {
    InstanceOptions opts;
    opts.min_states = opts.max_states = 5;
    opts.min_actions = opts.max_actions = 3;
    opts.min_horizon = opts.max_horizon = 8;
    Rng rng(6);
    Mdp m = random_mdp(rng, opts);
    CHECK_THROWS_AS(enumerate_deterministic_policies(m), EnumerationTooLarge);
  }
}

TEST_CASE("trajectory sampling is reproducible and respects the chain") {
  Mdp cyc = cycle_mdp(3, 6);
  Policy pi = Policy::stationary_deterministic({0, 0, 0}, 6, 1);
  Trajectory a = sample_trajectory(cyc, pi, 0, 1);
  Trajectory b = sample_trajectory(cyc, pi, 0, 999);
  CHECK(a.states == b.states);  // deterministic chain: seed irrelevant
  CHECK(a.states == std::vector<int>{0, 1, 2, 0, 1, 2, 0});

  Mdp mdp = fixtures::insurance_mdp();
  Policy np = fixtures::always(fixtures::kNoPay);
  Trajectory t1 = sample_trajectory(mdp, np, 0, 31337);
  Trajectory t2 = sample_trajectory(mdp, np, 0, 31337);
  CHECK(t1.states == t2.states);
  CHECK(t1.rewards == t2.rewards);
  CHECK(t1.states.size() == 3);
  CHECK(t1.actions.size() == 2);
  for (std::size_t k = 0; k + 1 < t1.states.size(); ++k)
    CHECK(mdp.p(t1.states[k], t1.actions[k], t1.states[k + 1]) > 0.0);
}

TEST_CASE("risk-state frequency matches the binomial rate") {
  Mdp mdp = fixtures::insurance_mdp();
  Policy np = fixtures::always(fixtures::kNoPay);
  const long n = 100000;
  long risk = 0;
  for (long i = 0; i < n; ++i) {
    Trajectory t = sample_trajectory(mdp, np, 0, derive_seed(2024, i));
    if (t.states[1] == fixtures::kRisk) ++risk;
  }
  double p_hat = static_cast<double>(risk) / n;
  double sigma = std::sqrt(0.01 * 0.99 / n);
  CHECK(std::abs(p_hat - 0.01) <= 3.0 * sigma);
}

TEST_CASE("sampled visit frequencies match the occupancy marginals") {
  // One (s,a) observation per trajectory at a uniformly random step keeps the
  // draws independent, so Pearson's statistic applies: dof = 2 (three
  // reachable pairs), critical value 9.210 at alpha = 0.01.
  Mdp mdp = fixtures::insurance_mdp();
  Policy np = fixtures::always(fixtures::kNoPay);
  OccupancyMeasure occ = occupancy(mdp, np, 0);
  const long n = 100000;
  std::map<int, long> counts;
  Rng pick(99);
  for (long i = 0; i < n; ++i) {
    Trajectory t = sample_trajectory(mdp, np, 0, derive_seed(11, i));
    int step = pick.uniform_int(2);
    counts[mdp.pair_index(t.states[step], t.actions[step])]++;
  }
  double chi2 = 0.0;
  int cells = 0;
  for (int s = 0; s < mdp.n_states(); ++s)
    for (int a = 0; a < mdp.n_actions(); ++a) {
      double expect = occ.at(s, a, 2) * n;
      if (expect == 0.0) {
        CHECK(counts[mdp.pair_index(s, a)] == 0);
        continue;
      }
      double obs = static_cast<double>(counts[mdp.pair_index(s, a)]);
      chi2 += (obs - expect) * (obs - expect) / expect;
      ++cells;
    }
  CHECK(cells == 3);
  CHECK(chi2 < 9.210);
}

TEST_CASE("mdp JSON round trip") {
  Mdp mdp = fixtures::insurance_mdp();
  nlohmann::json j = mdp_to_json(mdp);
  Mdp back = mdp_from_json(j);
  CHECK(back.transition_table() == mdp.transition_table());
  CHECK(back.reward_table() == mdp.reward_table());
  CHECK(mdp_to_json(back) == j);
}
