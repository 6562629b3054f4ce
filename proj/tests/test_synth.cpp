#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <fstream>
#include <sstream>

#include "rhomu/abstraction.hpp"
#include "rhomu/codec.hpp"
#include "rhomu/gain.hpp"
#include "rhomu/plant.hpp"
#include "rhomu/synth.hpp"

using namespace rhomu;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

FinitePlant counter() { return parse_plant(slurp(std::string(PLANTS_DIR) + "/ex1.json")); }
FinitePlant shifter() { return parse_plant(slurp(std::string(PLANTS_DIR) + "/ex3.json")); }
FinitePlant two_phase() { return parse_plant(slurp(std::string(PLANTS_DIR) + "/ex2.json")); }

// Bare-bones dynamics for exercising the iteration in isolation.
MhatDynamics loop(int states, int inputs, std::vector<int> next) {
  MhatDynamics dyn;
  dyn.num_states = states;
  dyn.num_inputs = inputs;
  dyn.num_disturb = 1;
  dyn.next = std::move(next);
  dyn.window = 1;
  dyn.plant_id = "handmade";
  return dyn;
}

StageCost flat_cost(std::vector<Rational> cost) {
  StageCost sc;
  sc.tau = Rational(1);
  sc.gamma = Rational(0);
  sc.max_abs = Rational(0);
  for (const Rational& c : cost) {
    Rational a = c.sign() < 0 ? Rational(0) - c : c;
    if (sc.max_abs < a) sc.max_abs = a;
  }
  sc.cost = std::move(cost);
  return sc;
}

}  // namespace

TEST_CASE("rewriting a machine over disturbance symbols") {
  FinitePlant pl = counter();
  Abstraction m = build_abstraction(pl, 1);
  Codec codec = Codec::minimal(2);
  MhatDynamics dyn = build_mhat(m, codec);
  CHECK(dyn.num_states == m.size());
  CHECK(dyn.num_inputs == 2);
  CHECK(dyn.num_disturb == 2);

  int lo_a = m.state_of(Snapshot{{0}, {0}});
  int lo_b = m.state_of(Snapshot{{0}, {1}});
  int hi_b = m.state_of(Snapshot{{1}, {1}});
  REQUIRE(lo_a >= 0);
  SUBCASE("disturbance zero means the prediction was right") {
    // (lo;a) predicts lo; w=0 decodes to lo, so stepping on b observes lo.
    CHECK(dyn.step(lo_a, 1, 0) == lo_b);
  }
  SUBCASE("disturbance one flips the binary observation") {
    CHECK(dyn.step(lo_a, 1, 1) == hi_b);
  }
  SUBCASE("alphabet mismatch is rejected") {
    CHECK_THROWS_AS(build_mhat(m, Codec::minimal(3)), std::invalid_argument);
  }
  SUBCASE("a codec with decode gaps is rejected") {
    Codec broken = Codec::from_beta(2, 2, {0, 0, 1, 0});
    CHECK_THROWS_AS(build_mhat(m, broken), std::invalid_argument);
  }
}

TEST_CASE("stage cost arithmetic") {
  FinitePlant pl = counter();
  Abstraction m = build_abstraction(pl, 1);
  CostWeights w = CostWeights::defaults(2, 2);
  GainResult gamma = max_cycle_ratio(error_graph(pl, m, w));
  REQUIRE_FALSE(gamma.infinite);
  REQUIRE(gamma.gamma == Rational(1, 2));

  SUBCASE("sigma combines budget, estimate, and input charge") {
    StageCost sc = build_stage_cost(m, pl, w, Rational(1), gamma);
    int q = m.state_of(Snapshot{{0}, {0}});  // estimate mu = 2
    CHECK(sc.mu_h[q] == Rational(2));
    // tau*mu_delta(w) - mu(h(q)) - tau*gamma*rho(u)
    CHECK(sc.cost[(q * 2 + 0) * 2 + 1] == Rational(-3, 2));
    CHECK(sc.cost[(q * 2 + 0) * 2 + 0] == Rational(-5, 2));
    CHECK(sc.max_abs >= Rational(7, 2));  // the root's estimate is the worst case
  }
  SUBCASE("an infinite gain refuses a budget") {
    GainResult inf;
    inf.infinite = true;
    CHECK_THROWS_AS(build_stage_cost(m, pl, w, Rational(1), inf), std::domain_error);
  }
  SUBCASE("tau must be positive") {
    CHECK_THROWS_AS(build_stage_cost(m, pl, w, Rational(0), gamma), std::invalid_argument);
  }
}

TEST_CASE("value iteration on handmade loops") {
  SUBCASE("zero cost is already a fixed point") {
    ValueIterationResult res = value_iteration(loop(1, 1, {0}), flat_cost({Rational(0)}));
    CHECK(res.status == IterationStatus::Converged);
    CHECK(res.iterations == 0);
    CHECK(res.value[0] == Rational(0));
    CHECK(res.policy == std::vector<int>{0});
  }
  SUBCASE("a losing self-loop blows the explicit bound") {
    ValueIterationResult res = value_iteration(loop(1, 1, {0}), flat_cost({Rational(-1)}));
    CHECK(res.status == IterationStatus::Diverged);
    CHECK(res.bound == Rational(2));
    CHECK(res.value[0] > res.bound);
  }
  SUBCASE("the policy avoids the losing input") {
    ValueIterationResult res =
        value_iteration(loop(1, 2, {0, 0}), flat_cost({Rational(-1), Rational(0)}));
    REQUIRE(res.status == IterationStatus::Converged);
    CHECK(res.policy == std::vector<int>{1});
    CHECK(res.value[0] == Rational(0));
  }
  SUBCASE("ties go to the first input") {
    ValueIterationResult res =
        value_iteration(loop(1, 2, {0, 0}), flat_cost({Rational(0), Rational(0)}));
    REQUIRE(res.status == IterationStatus::Converged);
    CHECK(res.policy == std::vector<int>{0});
  }
  SUBCASE("mismatched tables are rejected") {
    CHECK_THROWS_AS(value_iteration(loop(1, 1, {0}), flat_cost({})), std::invalid_argument);
  }
}

TEST_CASE("certificates revalidate the closed loop") {
  SUBCASE("a negative self-loop fails with a witness") {
    Certificate cert = certify(loop(1, 1, {0}), flat_cost({Rational(-1)}), {0});
    CHECK_FALSE(cert.holds);
    CHECK(cert.witness_states == std::vector<int>{0});
  }
  SUBCASE("a zero self-loop holds") {
    Certificate cert = certify(loop(1, 1, {0}), flat_cost({Rational(0)}), {0});
    CHECK(cert.holds);
    CHECK(cert.witness_states.empty());
  }
  SUBCASE("negative transients are fine; only cycles count") {
    Certificate cert = certify(loop(2, 1, {1, 1}), flat_cost({Rational(-5), Rational(0)}), {0, 0});
    CHECK(cert.holds);
  }
  SUBCASE("policy sanity is enforced") {
    CHECK_THROWS_AS(certify(loop(1, 1, {0}), flat_cost({Rational(0)}), {0, 0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(certify(loop(1, 1, {0}), flat_cost({Rational(0)}), {3}),
                    std::invalid_argument);
  }
}

TEST_CASE("the tau grid is a fixed ascending ladder") {
  std::vector<Rational> grid = default_tau_grid();
  REQUIRE(grid.size() == 13);
  CHECK(grid.front() == Rational(1, 64));
  CHECK(grid[6] == Rational(1));
  CHECK(grid.back() == Rational(64));
  for (size_t k = 1; k < grid.size(); ++k) CHECK(grid[k - 1] < grid[k]);
}

TEST_CASE("deployment splits closed orbits into lassos") {
  FinitePlant pl = two_phase();
  Abstraction m = build_abstraction(pl, 1);
  std::vector<int> policy(m.size(), 0);
  DeploymentReport rep = deploy_and_check(pl, m, policy, 10);
  CHECK(rep.bounded);
  CHECK(rep.all_cycles_zero);
  CHECK(rep.sums_stabilized);
  REQUIRE(rep.runs.size() == 2);
  CHECK(rep.runs[0].transient_len == 2);  // z0: root, then one sliding step
  CHECK(rep.runs[0].cycle_len == 1);
  CHECK(rep.runs[1].transient_len == 1);  // z1 reaches its loop one step sooner
  CHECK(rep.runs[1].cycle_len == 1);
  for (const DeploymentRun& run : rep.runs) {
    CHECK(run.running_sum.size() == 10);
    CHECK(run.cycle_cost_sum == Rational(0));
  }
  SUBCASE("zero horizon keeps only the cycle verdicts") {
    DeploymentReport zero = deploy_and_check(pl, m, policy, 0);
    CHECK(zero.runs[0].running_sum.empty());
    CHECK(zero.sums_stabilized);
  }
  SUBCASE("alphabet and size mismatches are rejected") {
    CHECK_THROWS_AS(deploy_and_check(counter(), m, policy, 10), std::invalid_argument);
    CHECK_THROWS_AS(deploy_and_check(pl, m, std::vector<int>(1, 0), 10), std::invalid_argument);
  }
}

TEST_CASE("end-to-end synthesis on the shift register") {
  FinitePlant pl = shifter();
  NestedSequence seq = build_nested_sequence(pl, 2);
  const Abstraction& m2 = seq.machines[1];
  CostWeights w = CostWeights::defaults(2, 2);
  GainResult gamma = max_cycle_ratio(error_graph(pl, m2, w));
  REQUIRE_FALSE(gamma.infinite);
  REQUIRE(gamma.gamma == Rational(0));

  TauSearchResult res = search_tau(m2, pl, w, gamma);
  REQUIRE(res.found);
  CHECK(res.vi.status == IterationStatus::Converged);
  CHECK(res.cert.holds);
  CHECK(res.cert.policy == res.vi.policy);
  CHECK(res.cert.window == 2);
  CHECK(res.trials.back().outcome == "converged");

  DeploymentReport rep = deploy_and_check(pl, m2, res.vi.policy, 200);
  CHECK(rep.bounded);
  CHECK(rep.all_cycles_zero);
  CHECK(rep.sums_stabilized);
  REQUIRE(rep.runs.size() == 8);
  for (const DeploymentRun& run : rep.runs) {
    CHECK(run.running_sum.size() == 200);
    CHECK(run.cycle_cost_zero);
  }
}

TEST_CASE("synthesis reports failure when no budget works") {
  // The counter's worst state is absorbing under its own best prediction, so
  // the performance charge recurs and every budget diverges.
  FinitePlant pl = counter();
  Abstraction m = build_abstraction(pl, 1);
  CostWeights w = CostWeights::defaults(2, 2);
  GainResult gamma = max_cycle_ratio(error_graph(pl, m, w));
  TauSearchResult res = search_tau(m, pl, w, gamma);
  CHECK_FALSE(res.found);
  REQUIRE(res.trials.size() == 13);
  for (const TauTrial& t : res.trials) CHECK(t.outcome == "diverged");
}
