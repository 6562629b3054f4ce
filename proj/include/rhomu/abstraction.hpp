#pragma once

// Deterministic finite-state approximations of a plant, built from bounded
// observation windows. A level-i machine keeps the last i (output, input)
// pairs as its state, annotated with the set of plant states consistent with
// the window; it emits a predicted output and a predicted performance value
// per state. States:
//
//   root        the empty window (nothing observed yet)
//   impossible  absorbing sink for windows no plant run can produce
//   partial     windows of length 1..i-1 (still filling up)
//   final       windows of exactly length i (sliding from here on)
//
// Only windows reachable from the root are materialized; the impossible sink
// always exists so the transition table is total.

#include <string>
#include <unordered_map>
#include <vector>

#include "rhomu/plant.hpp"
#include "rhomu/rational.hpp"

namespace rhomu {

enum class StateKind { Root, Impossible, Partial, Final };

struct AbstractState {
  StateKind kind = StateKind::Root;
  Snapshot snap;            // empty for root and impossible
  std::vector<int> x_set;   // plant states consistent with the window, sorted
  std::vector<int> y_set;   // their outputs, sorted distinct
  bool operator==(const AbstractState&) const = default;
};

inline constexpr int kRootState = 0;
inline constexpr int kImpossibleState = 1;

struct Abstraction {
  int window = 0;  // i
  std::string plant_id;
  std::vector<std::string> inputs, outputs;
  std::vector<AbstractState> states;  // [0]=root, [1]=impossible, then BFS order
  std::vector<int> next;              // [(q*m + u)*p + y] -> q'
  std::vector<int> g;                 // predicted output symbol per state
  std::vector<Rational> h;            // predicted performance value per state
  std::vector<Rational> v_hat;        // sorted distinct range of h
  std::string output_policy = "lexicographic";

  // Rebuilt after deserialization; not part of the value.
  std::unordered_map<Snapshot, int, SnapshotHash> index;

  int m() const { return static_cast<int>(inputs.size()); }
  int p() const { return static_cast<int>(outputs.size()); }
  int size() const { return static_cast<int>(states.size()); }
  int step(int q, int u, int y) const { return next[(q * m() + u) * p() + y]; }
  int state_of(const Snapshot& s) const {
    auto it = index.find(s);
    return it == index.end() ? -1 : it->second;
  }
  void rebuild_index();

  friend bool operator==(const Abstraction& a, const Abstraction& b) {
    return a.window == b.window && a.plant_id == b.plant_id && a.inputs == b.inputs &&
           a.outputs == b.outputs && a.states == b.states && a.next == b.next && a.g == b.g &&
           a.h == b.h && a.v_hat == b.v_hat && a.output_policy == b.output_policy;
  }
};

// How the predicted output is chosen from each state's candidate set.
struct OutputPolicy {
  enum class Kind { Lexicographic, NestedWith, Assigned };
  Kind kind = Kind::Lexicographic;
  const Abstraction* previous = nullptr;  // NestedWith: copy from the level below
  const std::unordered_map<Snapshot, int, SnapshotHash>* table = nullptr;  // Assigned

  static OutputPolicy lexicographic() { return {}; }
  static OutputPolicy nested_with(const Abstraction& prev) {
    OutputPolicy p;
    p.kind = Kind::NestedWith;
    p.previous = &prev;
    return p;
  }
  static OutputPolicy assigned(const std::unordered_map<Snapshot, int, SnapshotHash>& t) {
    OutputPolicy p;
    p.kind = Kind::Assigned;
    p.table = &t;
    return p;
  }
};

// Builds the level-i machine. Predicted output: policy choice among the
// state's candidate outputs (lexicographic-min by default; the impossible
// sink gets the lexicographic-min output symbol). Predicted performance:
// worst-case over the state's candidate set (argmax of mu over h, ties to the
// lexicographic-min plant state); the impossible sink gets the best case over
// the whole state set. Throws std::invalid_argument when a nested_with copy
// falls outside a state's candidate set.
Abstraction build_abstraction(const FinitePlant& plant, int window,
                              OutputPolicy policy = OutputPolicy::lexicographic());

struct StepResult {
  int q_next = 0;
  int ytilde = 0;   // prediction emitted by the pre-transition state
  Rational vhat;    // performance estimate of the pre-transition state
};

// One synchronous step of the machine on (input, observed output).
StepResult mi_step(const Abstraction& a, int q, int u, int y);

// Result of the cross-level output-consistency pass. admissible records, for
// every feasible window, the set of outputs that every longer still-ambiguous
// refinement of that window can also show (the intersection that the chosen
// prediction must come from).
struct AdmissibleEntry {
  Snapshot snap;
  std::vector<int> admissible;
};

struct NestingReport {
  bool nested = false;
  int i_max = 0;
  std::vector<bool> level_consistent;  // [k]: levels k+1,k+2 agree per the rule
  std::vector<AdmissibleEntry> admissible;
  std::vector<Snapshot> failure_chain;  // window + refinements pinching to empty
  std::string message;
};

struct NestedSequence {
  std::vector<Abstraction> machines;  // levels 1..i_max
  NestingReport report;
};

// Builds levels 1..i_max with predictions consistent across levels: an
// ambiguous window's prediction equals its one-pair-shorter truncation's
// (drop the oldest pair). Runs a global admissible-set pass; when some
// intersection is empty the sequence is still returned with plain
// lexicographic predictions and the report carries the witness chain.
NestedSequence build_nested_sequence(const FinitePlant& plant, int i_max);

std::string state_label(const Abstraction& a, int q);
inline std::string state_label(const FinitePlant&, const Abstraction& a, int q) {
  return state_label(a, q);
}

}  // namespace rhomu
