#pragma once

// Approximation-error gain machinery. The prediction-error system of a plant
// paired with one of its window machines is a finite weighted graph: each
// edge carries a rho-cost (charged to the input) and a mu-cost (charged to
// the prediction error). The gain is the maximum cycle ratio
// (sum mu)/(sum rho) over reachable cycles, computed exactly.
//
// Why cycles suffice: on a finite graph every infinite run is a finite prefix
// plus cycles, and the prefix contributes a bounded amount to any partial
// sum. So "inf over partial sums of (gamma*rho - mu) is finite" holds for
// every run exactly when every reachable cycle has non-negative
// (gamma*rho - mu)-weight, and the least such gamma is the maximum cycle
// ratio (+infinity when a zero-rho cycle carries positive mu).

#include <string>
#include <vector>

#include "rhomu/abstraction.hpp"
#include "rhomu/plant.hpp"
#include "rhomu/rational.hpp"

namespace rhomu {

struct CostWeights {
  std::vector<Rational> rho;       // indexed by input symbol, >= 0
  std::vector<Rational> mu_delta;  // indexed by disturbance symbol w, >= 0

  // rho identically 1; mu_delta charges 1 for every non-match.
  static CostWeights defaults(int m, int p);

  // mu_delta(0) == 0 and mu_delta(w) > 0 for w != 0.
  bool positive_definite() const;
  void validate(int m, int p) const;  // sizes and non-negativity
};

struct GraphEdge {
  int from = 0, to = 0;
  Rational rho, mu;
  std::string label;
};

struct WeightedGraph {
  std::vector<std::string> node_labels;
  std::vector<GraphEdge> edges;
  std::vector<std::vector<int>> out;  // edge indices by source node
  std::vector<int> initial;

  int add_node(std::string label);
  void add_edge(int from, int to, Rational rho, Rational mu, std::string label);
  int size() const { return static_cast<int>(node_labels.size()); }
};

struct GainResult {
  bool infinite = false;
  Rational gamma;                   // defined when finite
  std::vector<int> witness_edges;   // a cycle attaining the ratio
  std::string method = "parametric";

  std::string str() const { return infinite ? "inf" : gamma.str(); }
};

// Product of the plant and a window machine driven by the same inputs, with
// the machine fed the plant's outputs. Edge costs: rho of the input, mu of
// the disturbance symbol comparing the machine's prediction with the true
// output. Nodes are the product states reachable from (x0, root) over the
// declared initial set.
WeightedGraph error_graph(const FinitePlant& plant, const Abstraction& m,
                          const CostWeights& weights);

// Exact maximum cycle ratio of a reachable weighted graph. Returns infinite
// with a witness when some cycle has zero rho-sum and positive mu-sum; zero
// when no cycle carries positive mu; otherwise the exact rational max ratio.
// Method: parametric negative-cycle search -- probe a candidate gamma under
// edge weight gamma*rho - mu, replace the candidate by the ratio of any
// negative cycle found, stop when the probe certifies (no negative cycle and
// a zero-cost cycle with positive rho attains the candidate). Candidates are
// ratios of simple cycles, strictly increasing, so the search terminates.
// Throws std::logic_error on an acyclic graph (a total machine never yields
// one).
GainResult max_cycle_ratio(const WeightedGraph& g);

// Worst-case gain bound computed from the machine alone: both the input and
// the observed output are adversarial, and every state whose candidate
// output set is ambiguous is charged the worst disturbance cost.
WeightedGraph bound_graph(const Abstraction& m, const CostWeights& weights);
GainResult gain_upper_bound(const Abstraction& m, const CostWeights& weights);

struct ZeroReduction {
  bool finite = true;
  std::vector<int> certificate;  // machine states of an offending cycle, if any
};

// Restricts the machine to inputs with zero rho-cost and reports whether any
// cycle of that restriction visits a state with ambiguous candidate outputs
// (finite == no such cycle, which is exactly when the worst-case bound above
// is finite).
ZeroReduction zero_reduction_finite(const Abstraction& m, const CostWeights& weights);

struct StabilityCheck {
  bool holds = true;
  std::vector<int> witness_edges;  // a cycle with negative gamma*rho - mu sum
};

// Does every reachable cycle satisfy gamma*(sum rho) - (sum mu) >= 0?
StabilityCheck check_gain_stability(const WeightedGraph& g, const Rational& gamma);

// Ratio of a cycle given as edge indices; throws std::domain_error when the
// rho-sum is zero.
Rational cycle_ratio(const WeightedGraph& g, const std::vector<int>& cycle);

// Any cycle with negative total cost under the given per-edge costs, as edge
// indices; empty when none exists. Cost tables replace the rho/mu weights for
// this search.
std::vector<int> find_negative_cycle(const WeightedGraph& g, const std::vector<Rational>& cost);

}  // namespace rhomu
