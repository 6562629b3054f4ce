#include "rhomu/plant.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "json.hpp"

namespace rhomu {

using nlohmann::json;

const Rational& FinitePlant::mu_of(const Rational& value) const {
  for (size_t k = 0; k < perf_values.size(); ++k)
    if (perf_values[k] == value) return mu_values[k];
  throw std::invalid_argument("plant: mu undefined for performance value " + value.str());
}

bool FinitePlant::mu_nonnegative() const {
  for (const auto& v : mu_values)
    if (v.sign() < 0) return false;
  return true;
}

namespace {
int find_label(const std::vector<std::string>& labels, const std::string& s) {
  for (size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == s) return static_cast<int>(i);
  return -1;
}
}  // namespace

int FinitePlant::state_index(const std::string& label) const { return find_label(states, label); }
int FinitePlant::input_index(const std::string& label) const { return find_label(inputs, label); }
int FinitePlant::output_index(const std::string& label) const { return find_label(outputs, label); }

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument("plant: " + msg); }

std::vector<std::string> read_labels(const json& j, const char* key) {
  if (!j.contains(key)) fail(std::string(key) + ": missing");
  const json& arr = j.at(key);
  if (!arr.is_array() || arr.empty()) fail(std::string(key) + ": expected non-empty array");
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& e : arr) {
    if (!e.is_string() || e.get<std::string>().empty())
      fail(std::string(key) + ": labels must be non-empty strings");
    auto s = e.get<std::string>();
    if (!seen.insert(s).second) fail(std::string(key) + ": duplicate label '" + s + "'");
    out.push_back(s);
  }
  return out;
}

Rational read_rational(const json& v, const std::string& where) {
  if (v.is_number_integer()) return Rational(v.get<long long>());
  if (v.is_string()) {
    try {
      return Rational::parse(v.get<std::string>());
    } catch (const std::exception&) {
      fail(where + ": expected rational like \"3\" or \"-7/2\", got '" + v.get<std::string>() + "'");
    }
  }
  fail(where + ": expected integer or rational string");
}

}  // namespace

FinitePlant parse_plant(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) fail("top-level document must be an object");

  static const std::set<std::string> known = {"states", "inputs",  "outputs",       "f",
                                              "g",      "h",       "mu",            "initial_states"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key())) fail("unknown key '" + it.key() + "'");

  FinitePlant pl;
  pl.states = read_labels(j, "states");
  pl.inputs = read_labels(j, "inputs");
  pl.outputs = read_labels(j, "outputs");

  // f: state -> input -> state, total.
  if (!j.contains("f") || !j.at("f").is_object()) fail("f: missing or not an object");
  const json& f = j.at("f");
  for (auto it = f.begin(); it != f.end(); ++it)
    if (pl.state_index(it.key()) < 0) fail("f: unknown state '" + it.key() + "'");
  pl.next.assign(pl.states.size(), std::vector<int>(pl.inputs.size(), -1));
  for (int x = 0; x < pl.n(); ++x) {
    if (!f.contains(pl.states[x])) fail("f: missing row for state '" + pl.states[x] + "'");
    const json& row = f.at(pl.states[x]);
    if (!row.is_object()) fail("f." + pl.states[x] + ": expected object keyed by input");
    for (auto it = row.begin(); it != row.end(); ++it)
      if (pl.input_index(it.key()) < 0)
        fail("f." + pl.states[x] + ": unknown input '" + it.key() + "'");
    for (int u = 0; u < pl.m(); ++u) {
      if (!row.contains(pl.inputs[u]))
        fail("f: missing transition for state '" + pl.states[x] + "' on input '" + pl.inputs[u] +
             "'");
      const json& tgt = row.at(pl.inputs[u]);
      if (!tgt.is_string()) fail("f." + pl.states[x] + "." + pl.inputs[u] + ": expected state label");
      int t = pl.state_index(tgt.get<std::string>());
      if (t < 0)
        fail("f." + pl.states[x] + "." + pl.inputs[u] + ": unknown state '" +
             tgt.get<std::string>() + "'");
      pl.next[x][u] = t;
    }
  }

  // g: state -> output, total.
  if (!j.contains("g") || !j.at("g").is_object()) fail("g: missing or not an object");
  const json& g = j.at("g");
  for (auto it = g.begin(); it != g.end(); ++it)
    if (pl.state_index(it.key()) < 0) fail("g: unknown state '" + it.key() + "'");
  pl.out.assign(pl.states.size(), -1);
  for (int x = 0; x < pl.n(); ++x) {
    if (!g.contains(pl.states[x])) fail("g: missing output for state '" + pl.states[x] + "'");
    const json& val = g.at(pl.states[x]);
    if (!val.is_string()) fail("g." + pl.states[x] + ": expected output label");
    int y = pl.output_index(val.get<std::string>());
    if (y < 0) fail("g." + pl.states[x] + ": unknown output '" + val.get<std::string>() + "'");
    pl.out[x] = y;
  }

  // h: state -> rational performance value, total.
  if (!j.contains("h") || !j.at("h").is_object()) fail("h: missing or not an object");
  const json& h = j.at("h");
  for (auto it = h.begin(); it != h.end(); ++it)
    if (pl.state_index(it.key()) < 0) fail("h: unknown state '" + it.key() + "'");
  pl.perf.resize(pl.states.size());
  for (int x = 0; x < pl.n(); ++x) {
    if (!h.contains(pl.states[x])) fail("h: missing value for state '" + pl.states[x] + "'");
    pl.perf[x] = read_rational(h.at(pl.states[x]), "h." + pl.states[x]);
  }

  // Distinct performance values, sorted.
  for (const auto& v : pl.perf) {
    bool present = false;
    for (const auto& w : pl.perf_values) present = present || w == v;
    if (!present) pl.perf_values.push_back(v);
  }
  std::sort(pl.perf_values.begin(), pl.perf_values.end());

  // mu: performance value -> rational, keys must exactly cover range(h).
  if (!j.contains("mu") || !j.at("mu").is_object()) fail("mu: missing or not an object");
  const json& mu = j.at("mu");
  std::vector<Rational> mu_keys;
  std::vector<Rational> mu_vals;
  for (auto it = mu.begin(); it != mu.end(); ++it) {
    Rational key;
    try {
      key = Rational::parse(it.key());
    } catch (const std::exception&) {
      fail("mu: key '" + it.key() + "' is not a rational");
    }
    for (const auto& prev : mu_keys)
      if (prev == key) fail("mu: duplicate key for value " + key.str());
    bool in_range = false;
    for (const auto& v : pl.perf_values) in_range = in_range || v == key;
    if (!in_range) fail("mu: key '" + it.key() + "' does not match any value produced by h");
    mu_keys.push_back(key);
    mu_vals.push_back(read_rational(it.value(), "mu." + it.key()));
  }
  pl.mu_values.resize(pl.perf_values.size());
  for (size_t k = 0; k < pl.perf_values.size(); ++k) {
    bool found = false;
    for (size_t i = 0; i < mu_keys.size(); ++i)
      if (mu_keys[i] == pl.perf_values[k]) {
        pl.mu_values[k] = mu_vals[i];
        found = true;
      }
    if (!found) fail("mu: missing entry for value " + pl.perf_values[k].str() + " produced by h");
  }

  // initial_states: optional; defaults to the full state set.
  if (j.contains("initial_states")) {
    const json& init = j.at("initial_states");
    if (!init.is_array() || init.empty()) fail("initial_states: expected non-empty array");
    std::set<int> seen;
    for (const auto& e : init) {
      if (!e.is_string()) fail("initial_states: expected state labels");
      int x = pl.state_index(e.get<std::string>());
      if (x < 0) fail("initial_states: unknown state '" + e.get<std::string>() + "'");
      if (!seen.insert(x).second)
        fail("initial_states: duplicate state '" + e.get<std::string>() + "'");
    }
    pl.initial_states.assign(seen.begin(), seen.end());
  } else {
    for (int x = 0; x < pl.n(); ++x) pl.initial_states.push_back(x);
  }
  return pl;
}

std::string plant_to_json(const FinitePlant& pl) {
  json j;
  j["states"] = pl.states;
  j["inputs"] = pl.inputs;
  j["outputs"] = pl.outputs;
  json f = json::object();
  for (int x = 0; x < pl.n(); ++x) {
    json row = json::object();
    for (int u = 0; u < pl.m(); ++u) row[pl.inputs[u]] = pl.states[pl.next[x][u]];
    f[pl.states[x]] = row;
  }
  j["f"] = f;
  json g = json::object(), h = json::object();
  for (int x = 0; x < pl.n(); ++x) {
    g[pl.states[x]] = pl.outputs[pl.out[x]];
    h[pl.states[x]] = pl.perf[x].str();
  }
  j["g"] = g;
  j["h"] = h;
  json mu = json::object();
  for (size_t k = 0; k < pl.perf_values.size(); ++k)
    mu[pl.perf_values[k].str()] = pl.mu_values[k].str();
  j["mu"] = mu;
  json init = json::array();
  for (int x : pl.initial_states) init.push_back(pl.states[x]);
  j["initial_states"] = init;
  return j.dump(2) + "\n";
}

std::string plant_digest(const FinitePlant& plant) {
  std::string text = plant_to_json(plant);
  unsigned long long h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  snprintf(buf, sizeof buf, "%016llx", h);
  return buf;
}

Trace simulate(const FinitePlant& pl, int x0, const std::vector<int>& us) {
  if (x0 < 0 || x0 >= pl.n()) throw std::invalid_argument("simulate: state index out of range");
  for (int u : us)
    if (u < 0 || u >= pl.m()) throw std::invalid_argument("simulate: input index out of range");
  Trace tr;
  tr.x0_in_initial =
      std::binary_search(pl.initial_states.begin(), pl.initial_states.end(), x0);
  int x = x0;
  for (size_t t = 0; t <= us.size(); ++t) {
    TraceStep st;
    st.t = static_cast<int>(t);
    st.x = x;
    st.u = t < us.size() ? us[t] : -1;
    st.y = pl.out[x];
    st.v = pl.perf[x];
    tr.steps.push_back(st);
    if (t < us.size()) x = pl.next[x][us[t]];
  }
  return tr;
}

SnapshotStates snapshot_state_set(const FinitePlant& pl, const Snapshot& s) {
  if (s.ys.size() != s.us.size())
    throw std::invalid_argument("snapshot: output and input windows differ in length");
  const int j = static_cast<int>(s.length());
  for (int y : s.ys)
    if (y < 0 || y >= pl.p()) throw std::invalid_argument("snapshot: output index out of range");
  for (int u : s.us)
    if (u < 0 || u >= pl.m()) throw std::invalid_argument("snapshot: input index out of range");

  SnapshotStates result;
  if (j == 0) {
    // Empty window: nothing observed yet, every state is consistent.
    for (int x = 0; x < pl.n(); ++x) {
      result.origin.push_back(x);
      result.current.push_back(x);
    }
    return result;
  }
  std::set<int> current;
  for (int x0 = 0; x0 < pl.n(); ++x0) {
    // Replay the window oldest-to-newest: the origin candidate must show the
    // oldest output, then each recorded input must lead to a state showing
    // the next recorded output.
    int x = x0;
    if (pl.out[x] != s.ys[j - 1]) continue;
    bool ok = true;
    for (int k = j - 1; k >= 1; --k) {
      x = pl.next[x][s.us[k]];
      if (pl.out[x] != s.ys[k - 1]) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    result.origin.push_back(x0);
    current.insert(pl.next[x][s.us[0]]);
  }
  result.current.assign(current.begin(), current.end());
  return result;
}

std::string snapshot_label(const FinitePlant& pl, const Snapshot& s) {
  std::string t = "(";
  for (size_t k = 0; k < s.ys.size(); ++k) {
    if (k) t += ",";
    t += pl.outputs[s.ys[k]];
  }
  t += ";";
  for (size_t k = 0; k < s.us.size(); ++k) {
    if (k) t += ",";
    t += pl.inputs[s.us[k]];
  }
  t += ")";
  return t;
}

}  // namespace rhomu
