#pragma once

// Serialization for every artifact the toolkit produces: machines and
// controllers as canonical JSON (sorted keys, rationals as strings, trailing
// newline), graphs and machines as DOT, traces as CSV, and a run manifest
// tying outputs to input digests. Canonical means byte-identical across runs
// for identical inputs; nothing here records time or environment.

#include <string>
#include <vector>

#include "rhomu/abstraction.hpp"
#include "rhomu/codec.hpp"
#include "rhomu/gain.hpp"
#include "rhomu/plant.hpp"
#include "rhomu/rational.hpp"

namespace rhomu {

inline constexpr const char* kToolVersion = "0.1.0";

// FNV-1a over the raw bytes, as fixed-width hex. The same digest the plant
// serializer uses, exposed for arbitrary artifacts.
std::string digest_text(const std::string& text);

std::string abstraction_to_json(const Abstraction& a);
Abstraction abstraction_from_json(const std::string& text);

// A synthesized controller: the window machine it runs on, the input chosen
// per machine state, and the trade-off parameters it was certified at.
struct Controller {
  Abstraction machine;
  std::vector<int> policy;  // input symbol per machine state
  Rational tau;
  Rational gamma;
};

std::string controller_to_json(const Controller& c);
Controller controller_from_json(const std::string& text);

std::string weights_to_json(const CostWeights& w, const std::vector<std::string>& input_labels);
// Resolves rho keys against the plant's input alphabet; mu_delta is indexed
// by disturbance symbol and must cover exactly the output alphabet size.
CostWeights weights_from_json(const std::string& text, const FinitePlant& plant);

std::string abstraction_to_dot(const Abstraction& a);
std::string graph_to_dot(const WeightedGraph& g);

// Plain plant run as CSV. Columns t,x,u,y,v always carry values (u empty on
// the final record); the controller columns q,ytilde,vhat,w stay empty.
std::string trace_csv(const FinitePlant& plant, const Trace& trace);

struct ClosedLoopRow {
  int t = 0;
  int x = 0;
  int u = -1;  // -1 on the final record
  int y = 0;
  Rational v;
  int q = 0;
  int ytilde = 0;
  Rational vhat;
  int w = 0;
};

// Drives the plant from x0 for T steps with the controller choosing every
// input from its machine state; records the machine's prediction, estimate,
// and the disturbance symbol the codec assigns to each (prediction, output)
// pair. T+1 rows.
std::vector<ClosedLoopRow> run_closed_loop(const FinitePlant& plant, const Controller& c,
                                           const Codec& codec, int x0, int T);

std::string closed_loop_csv(const FinitePlant& plant, const std::vector<ClosedLoopRow>& rows);

// What a command ran on and what it wrote. Inputs map artifact names to
// digests of their content; params record the switches that shaped the run.
struct RunManifest {
  std::string command;
  std::vector<std::pair<std::string, std::string>> inputs;
  std::vector<std::pair<std::string, std::string>> params;
  std::vector<std::string> outputs;
};

std::string manifest_to_json(const RunManifest& m);

}  // namespace rhomu
