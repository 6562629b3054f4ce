#pragma once

// Controller synthesis on top of a window machine. The machine is rewritten
// with the disturbance symbol as its input (the observed output is decoded
// from the prediction and the disturbance), a stage cost trades the
// disturbance budget against the predicted performance, and min-max value
// iteration either produces a policy whose closed loop carries a
// non-negative-cost certificate or diverges past an explicit bound.

#include <string>
#include <vector>

#include "rhomu/abstraction.hpp"
#include "rhomu/codec.hpp"
#include "rhomu/gain.hpp"
#include "rhomu/plant.hpp"

namespace rhomu {

struct MhatDynamics {
  int num_states = 0;
  int num_inputs = 0;   // controller inputs u
  int num_disturb = 0;  // disturbance symbols w
  std::vector<int> next;  // [(q*num_inputs + u)*num_disturb + w] -> q'
  int window = 0;
  std::string plant_id;

  int step(int q, int u, int w) const { return next[(q * num_inputs + u) * num_disturb + w]; }
};

// Rewrites the machine over (input, disturbance): the observed output is
// decoded from the state's prediction. The minimal codec always decodes; a
// codec that fails to decode some (prediction, w) pair is rejected here.
MhatDynamics build_mhat(const Abstraction& m, const Codec& codec);

struct StageCost {
  Rational tau;
  Rational gamma;
  std::vector<Rational> rho, mu_delta;   // the weight tables used
  std::vector<Rational> mu_h;            // mu of each state's performance estimate
  std::vector<Rational> cost;            // [(q*m + u)*w_count + w]
  Rational max_abs;                      // max |cost|, for the divergence bound
};

// sigma(q, u, w) = tau*mu_delta(w) - mu(h(q)) - tau*gamma*rho(u). Requires a
// finite gain (throws std::domain_error otherwise).
StageCost build_stage_cost(const Abstraction& m, const FinitePlant& plant,
                           const CostWeights& weights, const Rational& tau,
                           const GainResult& gamma);

enum class IterationStatus { Converged, Diverged };

struct ValueIterationResult {
  IterationStatus status = IterationStatus::Diverged;
  int iterations = 0;
  std::vector<Rational> value;
  std::vector<int> policy;  // lexicographic-min minimizer per state; on convergence
  Rational bound;           // (num_states + 1) * max|sigma|
};

// J_0 = 0; J_{k+1}(q) = max(0, min_u max_w(-sigma + J_k(next))). Exact
// arithmetic; Converged on the first fixed point, Diverged once any entry
// exceeds the bound (at which point no fixed point exists below it).
ValueIterationResult value_iteration(const MhatDynamics& dyn, const StageCost& sc);

struct Certificate {
  bool holds = false;
  int window = 0;
  Rational tau;
  Rational gamma;
  std::vector<int> policy;
  std::vector<int> witness_states;  // a closed-loop cycle with negative cost sum
};

// Independent revalidation: on the graph the policy closes (disturbance still
// adversarial), every cycle must have non-negative stage-cost sum. Uses plain
// negative-cycle detection, not the value table.
Certificate certify(const MhatDynamics& dyn, const StageCost& sc, const std::vector<int>& policy);

struct DeploymentRun {
  int x0 = 0;
  int transient_len = 0;
  int cycle_len = 0;
  Rational cycle_cost_sum;     // mu(v) summed once around the cycle
  bool cycle_cost_zero = true; // mu(v) == 0 at every state on the cycle
  std::vector<Rational> running_sum;  // prefix sums of mu(v) to the horizon
};

struct DeploymentReport {
  bool bounded = true;          // every reachable closed-loop cycle sums <= 0
  bool all_cycles_zero = true;  // mu(v) == 0 pointwise on every such cycle
  bool sums_stabilized = true;  // max prefix sum attained within 3/4 horizon
  int horizon = 0;
  std::vector<DeploymentRun> runs;
};

// Closes the loop for real: the controller (machine + policy, fed the true
// plant output) drives the plant from every declared initial state. The
// boundedness verdict comes from the cycle structure of the closed product;
// the horizon simulation is the human-readable evidence.
DeploymentReport deploy_and_check(const FinitePlant& plant, const Abstraction& m,
                                  const std::vector<int>& policy, int horizon = 200);

struct TauTrial {
  Rational tau;
  std::string outcome;  // "converged", "diverged", "certificate failed"
};

struct TauSearchResult {
  bool found = false;
  Rational tau;
  ValueIterationResult vi;
  Certificate cert;
  std::vector<TauTrial> trials;
};

std::vector<Rational> default_tau_grid();  // 2^k for k = -6..6

// First grid value whose value iteration converges and whose certificate
// revalidates wins.
TauSearchResult search_tau(const Abstraction& m, const FinitePlant& plant,
                           const CostWeights& weights, const GainResult& gamma,
                           const std::vector<Rational>& grid = default_tau_grid());

}  // namespace rhomu
