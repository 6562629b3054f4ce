#include "rhomu/io.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace rhomu {

using nlohmann::json;

std::string digest_text(const std::string& text) {
  unsigned long long h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", h);
  return buf;
}

namespace {

[[noreturn]] void fail(const char* what, const std::string& msg) {
  throw std::invalid_argument(std::string(what) + ": " + msg);
}

json parse_document(const std::string& text, const char* what) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(what, std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) fail(what, "top-level document must be an object");
  return j;
}

void require_keys(const json& j, const std::set<std::string>& known, const char* what) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key())) fail(what, "unknown key '" + it.key() + "'");
  for (const auto& k : known)
    if (!j.contains(k)) fail(what, k + ": missing");
}

Rational read_rational(const json& v, const char* what, const std::string& where) {
  if (v.is_number_integer()) return Rational(v.get<long long>());
  if (v.is_string()) {
    try {
      return Rational::parse(v.get<std::string>());
    } catch (const std::exception&) {
      fail(what, where + ": bad rational '" + v.get<std::string>() + "'");
    }
  }
  fail(what, where + ": expected integer or rational string");
}

const char* kind_str(StateKind k) {
  switch (k) {
    case StateKind::Root:
      return "root";
    case StateKind::Impossible:
      return "impossible";
    case StateKind::Partial:
      return "partial";
    default:
      return "final";
  }
}

StateKind kind_of(const std::string& s, const char* what) {
  if (s == "root") return StateKind::Root;
  if (s == "impossible") return StateKind::Impossible;
  if (s == "partial") return StateKind::Partial;
  if (s == "final") return StateKind::Final;
  fail(what, "states: unknown kind '" + s + "'");
}

int resolve(const std::vector<std::string>& labels, const json& v, const char* what,
            const std::string& where) {
  if (!v.is_string()) fail(what, where + ": expected a symbol label");
  auto s = v.get<std::string>();
  auto it = std::find(labels.begin(), labels.end(), s);
  if (it == labels.end()) fail(what, where + ": unknown symbol '" + s + "'");
  return static_cast<int>(it - labels.begin());
}

json abstraction_json(const Abstraction& a) {
  json j;
  j["window"] = a.window;
  j["plant"] = a.plant_id;
  j["inputs"] = a.inputs;
  j["outputs"] = a.outputs;
  j["output_policy"] = a.output_policy;
  j["next"] = a.next;
  json vh = json::array();
  for (const auto& v : a.v_hat) vh.push_back(v.str());
  j["v_hat"] = std::move(vh);
  json states = json::array();
  for (int q = 0; q < a.size(); ++q) {
    const AbstractState& s = a.states[q];
    json js;
    js["kind"] = kind_str(s.kind);
    json ys = json::array(), us = json::array();
    for (int y : s.snap.ys) ys.push_back(a.outputs[y]);
    for (int u : s.snap.us) us.push_back(a.inputs[u]);
    js["ys"] = std::move(ys);  // newest first
    js["us"] = std::move(us);
    js["x_set"] = s.x_set;
    json yset = json::array();
    for (int y : s.y_set) yset.push_back(a.outputs[y]);
    js["y_set"] = std::move(yset);
    js["g"] = a.outputs[a.g[q]];
    js["h"] = a.h[q].str();
    states.push_back(std::move(js));
  }
  j["states"] = std::move(states);
  return j;
}

Abstraction abstraction_from(const json& j, const char* what) {
  static const std::set<std::string> known = {"window",  "plant", "inputs", "outputs",
                                              "output_policy", "next",  "v_hat",  "states"};
  require_keys(j, known, what);

  Abstraction a;
  if (!j.at("window").is_number_integer() || j.at("window").get<int>() < 1)
    fail(what, "window: expected a positive integer");
  a.window = j.at("window").get<int>();
  if (!j.at("plant").is_string()) fail(what, "plant: expected the plant digest string");
  a.plant_id = j.at("plant").get<std::string>();
  if (!j.at("inputs").is_array() || !j.at("outputs").is_array())
    fail(what, "inputs/outputs: expected label arrays");
  a.inputs = j.at("inputs").get<std::vector<std::string>>();
  a.outputs = j.at("outputs").get<std::vector<std::string>>();
  if (a.inputs.empty() || a.outputs.empty()) fail(what, "inputs/outputs: must be non-empty");
  if (!j.at("output_policy").is_string()) fail(what, "output_policy: expected a string");
  a.output_policy = j.at("output_policy").get<std::string>();

  if (!j.at("states").is_array() || j.at("states").size() < 2)
    fail(what, "states: expected an array with at least the root and the sink");
  int qi = 0;
  for (const auto& js : j.at("states")) {
    std::string where = "states[" + std::to_string(qi) + "]";
    if (!js.is_object()) fail(what, where + ": expected an object");
    static const std::set<std::string> state_keys = {"kind", "ys",    "us", "x_set",
                                                     "y_set", "g", "h"};
    require_keys(js, state_keys, what);
    AbstractState s;
    s.kind = kind_of(js.at("kind").get<std::string>(), what);
    if (!js.at("ys").is_array() || !js.at("us").is_array() ||
        js.at("ys").size() != js.at("us").size())
      fail(what, where + ": ys and us must be arrays of equal length");
    for (const auto& v : js.at("ys")) s.snap.ys.push_back(resolve(a.outputs, v, what, where));
    for (const auto& v : js.at("us")) s.snap.us.push_back(resolve(a.inputs, v, what, where));
    if (!js.at("x_set").is_array()) fail(what, where + ": x_set must be an array");
    for (const auto& v : js.at("x_set")) {
      if (!v.is_number_integer() || v.get<int>() < 0)
        fail(what, where + ": x_set entries are plant state indices");
      s.x_set.push_back(v.get<int>());
    }
    for (const auto& v : js.at("y_set")) s.y_set.push_back(resolve(a.outputs, v, what, where));
    a.g.push_back(resolve(a.outputs, js.at("g"), what, where));
    a.h.push_back(read_rational(js.at("h"), what, where + ".h"));
    a.states.push_back(std::move(s));
    ++qi;
  }
  if (a.states[kRootState].kind != StateKind::Root ||
      a.states[kImpossibleState].kind != StateKind::Impossible)
    fail(what, "states: slot 0 must be the root and slot 1 the impossible sink");

  if (!j.at("next").is_array()) fail(what, "next: expected a flat transition array");
  size_t expect = static_cast<size_t>(a.size()) * a.m() * a.p();
  if (j.at("next").size() != expect)
    fail(what, "next: expected " + std::to_string(expect) + " entries, got " +
                   std::to_string(j.at("next").size()));
  for (const auto& v : j.at("next")) {
    if (!v.is_number_integer() || v.get<int>() < 0 || v.get<int>() >= a.size())
      fail(what, "next: entries must name states by index");
    a.next.push_back(v.get<int>());
  }

  if (!j.at("v_hat").is_array()) fail(what, "v_hat: expected an array");
  int vi = 0;
  for (const auto& v : j.at("v_hat"))
    a.v_hat.push_back(read_rational(v, what, "v_hat[" + std::to_string(vi++) + "]"));

  a.rebuild_index();
  return a;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::string csv_cell_rational(const Rational& v) { return v.str(); }

}  // namespace

std::string abstraction_to_json(const Abstraction& a) { return dump(abstraction_json(a)); }

Abstraction abstraction_from_json(const std::string& text) {
  return abstraction_from(parse_document(text, "abstraction"), "abstraction");
}

std::string controller_to_json(const Controller& c) {
  json j;
  j["machine"] = abstraction_json(c.machine);
  json pol = json::array();
  for (int u : c.policy) pol.push_back(c.machine.inputs[u]);
  j["policy"] = std::move(pol);
  j["tau"] = c.tau.str();
  j["gamma"] = c.gamma.str();
  return dump(j);
}

Controller controller_from_json(const std::string& text) {
  const char* what = "controller";
  json j = parse_document(text, what);
  static const std::set<std::string> known = {"machine", "policy", "tau", "gamma"};
  require_keys(j, known, what);
  Controller c;
  if (!j.at("machine").is_object()) fail(what, "machine: expected an object");
  c.machine = abstraction_from(j.at("machine"), what);
  if (!j.at("policy").is_array() || j.at("policy").size() != static_cast<size_t>(c.machine.size()))
    fail(what, "policy: expected one input per machine state");
  int qi = 0;
  for (const auto& v : j.at("policy"))
    c.policy.push_back(resolve(c.machine.inputs, v, what, "policy[" + std::to_string(qi++) + "]"));
  c.tau = read_rational(j.at("tau"), what, "tau");
  c.gamma = read_rational(j.at("gamma"), what, "gamma");
  if (!(Rational(0) < c.tau)) fail(what, "tau: must be positive");
  return c;
}

std::string weights_to_json(const CostWeights& w, const std::vector<std::string>& input_labels) {
  if (w.rho.size() != input_labels.size())
    throw std::invalid_argument("weights: one rho entry per input required");
  json j;
  json rho;
  for (size_t u = 0; u < input_labels.size(); ++u) rho[input_labels[u]] = w.rho[u].str();
  j["rho"] = std::move(rho);
  json md = json::array();
  for (const auto& v : w.mu_delta) md.push_back(v.str());
  j["mu_delta"] = std::move(md);
  return dump(j);
}

CostWeights weights_from_json(const std::string& text, const FinitePlant& plant) {
  const char* what = "weights";
  json j = parse_document(text, what);
  static const std::set<std::string> known = {"rho", "mu_delta"};
  require_keys(j, known, what);
  CostWeights w;
  if (!j.at("rho").is_object()) fail(what, "rho: expected an object keyed by input label");
  w.rho.assign(plant.m(), Rational(0));
  std::vector<bool> seen(plant.m(), false);
  for (auto it = j.at("rho").begin(); it != j.at("rho").end(); ++it) {
    int u = plant.input_index(it.key());
    if (u < 0) fail(what, "rho: unknown input '" + it.key() + "'");
    w.rho[u] = read_rational(it.value(), what, "rho." + it.key());
    seen[u] = true;
  }
  for (int u = 0; u < plant.m(); ++u)
    if (!seen[u]) fail(what, "rho: missing entry for input '" + plant.inputs[u] + "'");
  if (!j.at("mu_delta").is_array() || j.at("mu_delta").size() != static_cast<size_t>(plant.p()))
    fail(what, "mu_delta: expected one entry per disturbance symbol (output alphabet size)");
  int wi = 0;
  for (const auto& v : j.at("mu_delta"))
    w.mu_delta.push_back(read_rational(v, what, "mu_delta[" + std::to_string(wi++) + "]"));
  w.validate(plant.m(), plant.p());
  return w;
}

std::string abstraction_to_dot(const Abstraction& a) {
  std::ostringstream os;
  os << "digraph machine {\n  rankdir=LR;\n  node [shape=ellipse];\n";
  for (int q = 0; q < a.size(); ++q) {
    os << "  q" << q << " [label=\"" << state_label(a, q) << "\\ng=" << a.outputs[a.g[q]]
       << " h=" << a.h[q].str() << "\"";
    if (q == kRootState) os << ", penwidth=2";
    if (q == kImpossibleState) os << ", style=dashed";
    if (a.states[q].kind == StateKind::Final) os << ", shape=box";
    os << "];\n";
  }
  for (int q = 0; q < a.size(); ++q)
    for (int u = 0; u < a.m(); ++u)
      for (int y = 0; y < a.p(); ++y)
        os << "  q" << q << " -> q" << a.step(q, u, y) << " [label=\"" << a.inputs[u] << "/"
           << a.outputs[y] << "\"];\n";
  os << "}\n";
  return os.str();
}

std::string graph_to_dot(const WeightedGraph& g) {
  std::ostringstream os;
  os << "digraph weighted {\n  rankdir=LR;\n  node [shape=ellipse];\n";
  std::set<int> initial(g.initial.begin(), g.initial.end());
  for (int v = 0; v < g.size(); ++v) {
    os << "  n" << v << " [label=\"" << g.node_labels[v] << "\"";
    if (initial.count(v)) os << ", penwidth=2";
    os << "];\n";
  }
  for (const auto& e : g.edges)
    os << "  n" << e.from << " -> n" << e.to << " [label=\"" << e.label
       << "\\nrho=" << e.rho.str() << " mu=" << e.mu.str() << "\"];\n";
  os << "}\n";
  return os.str();
}

namespace {
const char* kTraceHeader = "t,x,u,y,v,q,ytilde,vhat,w\n";
}

std::string trace_csv(const FinitePlant& plant, const Trace& trace) {
  std::ostringstream os;
  os << kTraceHeader;
  for (const auto& s : trace.steps) {
    os << s.t << ',' << plant.states[s.x] << ',' << (s.u < 0 ? "" : plant.inputs[s.u]) << ','
       << plant.outputs[s.y] << ',' << csv_cell_rational(s.v) << ",,,,\n";
  }
  return os.str();
}

std::vector<ClosedLoopRow> run_closed_loop(const FinitePlant& plant, const Controller& c,
                                           const Codec& codec, int x0, int T) {
  if (x0 < 0 || x0 >= plant.n()) throw std::invalid_argument("trace: x0 out of range");
  if (T < 0) throw std::invalid_argument("trace: horizon must be non-negative");
  if (c.machine.m() != plant.m() || c.machine.p() != plant.p())
    throw std::invalid_argument("trace: controller and plant alphabets do not match");
  std::vector<ClosedLoopRow> rows;
  int x = x0, q = kRootState;
  for (int t = 0; t <= T; ++t) {
    ClosedLoopRow r;
    r.t = t;
    r.x = x;
    r.y = plant.out[x];
    r.v = plant.perf[x];
    r.q = q;
    r.ytilde = c.machine.g[q];
    r.vhat = c.machine.h[q];
    r.w = codec.encode(r.ytilde, r.y);
    if (t < T) {
      r.u = c.policy[q];
      q = c.machine.step(q, r.u, r.y);
      x = plant.next[x][r.u];
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string closed_loop_csv(const FinitePlant& plant, const std::vector<ClosedLoopRow>& rows) {
  std::ostringstream os;
  os << kTraceHeader;
  for (const auto& r : rows) {
    os << r.t << ',' << plant.states[r.x] << ',' << (r.u < 0 ? "" : plant.inputs[r.u]) << ','
       << plant.outputs[r.y] << ',' << csv_cell_rational(r.v) << ",q" << r.q << ','
       << plant.outputs[r.ytilde] << ',' << csv_cell_rational(r.vhat) << ',' << r.w << "\n";
  }
  return os.str();
}

std::string manifest_to_json(const RunManifest& m) {
  json j;
  j["command"] = m.command;
  json in;
  for (const auto& [k, v] : m.inputs) in[k] = v;
  j["inputs"] = in.is_null() ? json::object() : std::move(in);
  json pr;
  for (const auto& [k, v] : m.params) pr[k] = v;
  j["params"] = pr.is_null() ? json::object() : std::move(pr);
  j["outputs"] = m.outputs;
  j["version"] = kToolVersion;
  return dump(j);
}

}  // namespace rhomu
