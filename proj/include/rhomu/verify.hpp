#pragma once

// Property checkers. Each returns a verdict plus, on violation, a witness
// that replays: start the plant at witness.x0, drive it (and the machine(s))
// with witness.inputs, and the final step exhibits the reported violation.

#include <optional>
#include <string>
#include <vector>

#include "rhomu/abstraction.hpp"
#include "rhomu/codec.hpp"
#include "rhomu/gain.hpp"
#include "rhomu/plant.hpp"

namespace rhomu {

enum class Verdict { Holds, Violated, NotApplicable };

std::string verdict_str(Verdict v);

struct CounterexampleWitness {
  int x0 = -1;
  std::vector<int> inputs;
  std::string detail;
};

struct PropertyReport {
  std::string property;
  Verdict verdict = Verdict::Holds;
  std::string scope;
  std::string detail;
  std::optional<CounterexampleWitness> witness;
};

// Round-trips every prediction/observation pair through the codec along all
// input words up to the given depth, from every declared initial state:
// decode(prediction, encode(prediction, observed)) must reproduce observed.
// The codec is a parameter so deliberately broken tables can be exercised.
PropertyReport check_output_match(const FinitePlant& plant, const Abstraction& m,
                                  const Codec& codec, int depth);

// The true plant state always lies in the machine state's candidate set (in
// particular, feasible runs never reach the impossible sink). depth < 0 walks
// the reachable product exhaustively; otherwise input trees to that depth.
PropertyReport check_inclusion(const FinitePlant& plant, const Abstraction& m, int depth = -1);

// Exhaustive over the reachable triple product: the true performance cost is
// bounded by the finer machine's estimate, which is bounded by the coarser
// machine's (low = smaller window, high = one larger).
PropertyReport check_performance_chain(const FinitePlant& plant, const Abstraction& low,
                                       const Abstraction& high);

// Every ambiguous final state of the higher level predicts exactly what its
// one-pair-shorter truncation predicts at the level below.
PropertyReport check_output_nested(const Abstraction& low, const Abstraction& high);

// Gains are non-increasing along a consistent sequence, and the disturbance
// cost comparison holds pointwise on every reachable triple product. Requires
// positive-definite mu weights; returns NotApplicable when the sequence is
// not output-consistent.
PropertyReport check_gain_monotone(const FinitePlant& plant,
                                   const std::vector<Abstraction>& machines,
                                   const CostWeights& weights);

struct LevelGain {
  int level = 0;
  GainResult gamma;
};

struct CompletenessReport {
  std::vector<LevelGain> levels;
  int i_star = 0;  // least level with zero gain; 0 when none found up to i_max
  bool final_unambiguous = false;  // every reachable final of level i_star unambiguous
  bool nested = false;
  std::string message;
  PropertyReport summary;
};

// Scans levels 1..i_max for the first zero-gain machine. Reports facts; the
// scan never proves a negative ("none found up to i_max" is as far as it
// goes).
CompletenessReport check_completeness(const FinitePlant& plant, const CostWeights& weights,
                                      int i_max);

}  // namespace rhomu
