#pragma once

// Finite plant model: deterministic transition structure f over a finite
// state set, output map g, performance map h, and a cost weighting mu on the
// performance values. Symbols are stored as 0-based indices into the declared
// label lists; the declared order is the lexicographic order used everywhere
// deterministic tie-breaking is needed.

#include <cstddef>
#include <string>
#include <vector>

#include "rhomu/rational.hpp"

namespace rhomu {

struct FinitePlant {
  std::vector<std::string> states;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::vector<std::vector<int>> next;  // next[x][u]
  std::vector<int> out;                // out[x]: output symbol of state x
  std::vector<Rational> perf;         // perf[x]: performance value h(x)
  std::vector<Rational> perf_values;  // sorted distinct range of h
  std::vector<Rational> mu_values;    // mu_values[k] = mu(perf_values[k])
  std::vector<int> initial_states;    // sorted; defaults to all states

  int n() const { return static_cast<int>(states.size()); }
  int m() const { return static_cast<int>(inputs.size()); }
  int p() const { return static_cast<int>(outputs.size()); }

  const Rational& mu_of(const Rational& value) const;
  const Rational& mu_of_state(int x) const { return mu_of(perf[x]); }
  bool mu_nonnegative() const;

  int state_index(const std::string& label) const;   // -1 if unknown
  int input_index(const std::string& label) const;
  int output_index(const std::string& label) const;
};

// Strict parser for the plant document format. Top-level keys: states,
// inputs, outputs, f, g, h, mu, initial_states (optional). Unknown keys,
// non-total tables, unknown labels, and mu entries that do not line up with
// the range of h are all rejected with a message naming the offending field.
FinitePlant parse_plant(const std::string& json_text);

// Canonical serialization (sorted keys, rationals as strings). Round-trips
// through parse_plant; also the basis for the plant digest.
std::string plant_to_json(const FinitePlant& plant);

// FNV-1a digest of the canonical serialization, as fixed-width hex.
std::string plant_digest(const FinitePlant& plant);

struct TraceStep {
  int t = 0;
  int x = 0;
  int u = -1;  // -1 on the final record (no input consumed)
  int y = 0;
  Rational v;  // performance value h(x)
};

struct Trace {
  std::vector<TraceStep> steps;  // T+1 records for a T-step run
  bool x0_in_initial = true;
};

// Runs the plant from x0 under the given input word. x0 may lie outside the
// declared initial set; the trace flags that instead of failing.
Trace simulate(const FinitePlant& plant, int x0, const std::vector<int>& us);

// Observation window: ys[0]/us[0] is the newest recorded pair, the back is
// the oldest. Equality and hashing are structural.
struct Snapshot {
  std::vector<int> ys, us;
  bool operator==(const Snapshot&) const = default;
  size_t length() const { return ys.size(); }
};

struct SnapshotHash {
  size_t operator()(const Snapshot& s) const {
    size_t h = 1469598103934665603ull;
    auto mix = [&h](int v) {
      h ^= static_cast<size_t>(v) + 0x9e3779b97f4a7c15ull;
      h *= 1099511628211ull;
    };
    for (int v : s.ys) mix(v);
    mix(-7);
    for (int v : s.us) mix(v);
    return h;
  }
};

struct SnapshotStates {
  std::vector<int> origin;   // states that could have produced the window
  std::vector<int> current;  // their images under the recorded input word
};

// Consistency semantics: origin collects every plant state x_o (over the full
// state set, not just the initial set) whose run under the window's inputs,
// oldest first, reproduces the window's outputs position by position; current
// is the set reached from origin after also applying the newest input. The
// window is infeasible iff origin is empty. Both sets come back sorted.
SnapshotStates snapshot_state_set(const FinitePlant& plant, const Snapshot& s);

std::string snapshot_label(const FinitePlant& plant, const Snapshot& s);

}  // namespace rhomu
