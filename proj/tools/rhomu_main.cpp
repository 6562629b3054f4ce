// Command-line front end. Every command that produces files writes them under
// --out together with a manifest tying the outputs to digests of the inputs;
// identical invocations produce byte-identical artifacts.
//
// Exit codes: 0 success (and, for verify/synthesize, the checked property
// holds), 1 a checked property fails or no controller exists on the grid,
// 2 usage or input-validation errors.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rhomu/abstraction.hpp"
#include "rhomu/codec.hpp"
#include "rhomu/gain.hpp"
#include "rhomu/io.hpp"
#include "rhomu/plant.hpp"
#include "rhomu/synth.hpp"
#include "rhomu/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace rhomu;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

FinitePlant load_plant(const std::string& path) { return parse_plant(read_file(path)); }

CostWeights load_weights(const std::string& path, const FinitePlant& plant) {
  if (path.empty()) return CostWeights::defaults(plant.m(), plant.p());
  return weights_from_json(read_file(path), plant);
}

std::string edge_str(const WeightedGraph& g, int e) {
  return g.node_labels[g.edges[e].from] + " --" + g.edges[e].label + "--> " +
         g.node_labels[g.edges[e].to];
}

json witness_json(const FinitePlant& plant, const CounterexampleWitness& w) {
  json j;
  j["x0"] = w.x0 >= 0 ? plant.states[w.x0] : "";
  json in = json::array();
  for (int u : w.inputs) in.push_back(plant.inputs[u]);
  j["inputs"] = std::move(in);
  j["detail"] = w.detail;
  return j;
}

json property_json(const FinitePlant& plant, const PropertyReport& r) {
  json j;
  j["property"] = r.property;
  j["scope"] = r.scope;
  j["verdict"] = verdict_str(r.verdict);
  j["detail"] = r.detail;
  if (r.witness) j["witness"] = witness_json(plant, *r.witness);
  return j;
}

void print_property(const PropertyReport& r) {
  std::cout << r.property << " (" << r.scope << "): " << verdict_str(r.verdict);
  if (!r.detail.empty()) std::cout << " -- " << r.detail;
  std::cout << "\n";
}

json nesting_json(const FinitePlant& plant, const NestingReport& rep) {
  json j;
  j["nested"] = rep.nested;
  j["i_max"] = rep.i_max;
  j["level_consistent"] = rep.level_consistent;
  j["message"] = rep.message;
  json adm = json::array();
  for (const auto& e : rep.admissible) {
    json a;
    a["window"] = snapshot_label(plant, e.snap);
    json outs = json::array();
    for (int y : e.admissible) outs.push_back(plant.outputs[y]);
    a["outputs"] = std::move(outs);
    adm.push_back(std::move(a));
  }
  j["admissible"] = std::move(adm);
  json chain = json::array();
  for (const auto& s : rep.failure_chain) chain.push_back(snapshot_label(plant, s));
  j["failure_chain"] = std::move(chain);
  return j;
}

// Split "a,b,a" into labels; empty string gives the empty word.
std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!s.empty()) out.push_back(cur);
  return out;
}

struct OutDir {
  fs::path dir;
  std::vector<std::string> written;

  explicit OutDir(const std::string& d) : dir(d) { fs::create_directories(dir); }
  void put(const std::string& name, const std::string& content) {
    write_file(dir / name, content);
    written.push_back(name);
  }
  void finish(RunManifest m) {
    std::sort(written.begin(), written.end());
    m.outputs = written;
    write_file(dir / "manifest.json", manifest_to_json(m));
  }
};

int cmd_abstract(const std::string& plant_path, int window, bool nested,
                 const std::string& out_dir) {
  FinitePlant plant = load_plant(plant_path);
  OutDir out(out_dir);
  RunManifest man;
  man.command = "abstract";
  man.inputs = {{"plant", plant_digest(plant)}};
  man.params = {{"i", std::to_string(window)}, {"nested", nested ? "true" : "false"}};

  if (nested) {
    NestedSequence seq = build_nested_sequence(plant, window);
    for (const auto& m : seq.machines) {
      out.put("m" + std::to_string(m.window) + ".json", abstraction_to_json(m));
      out.put("m" + std::to_string(m.window) + ".dot", abstraction_to_dot(m));
    }
    out.put("nesting.json", json(nesting_json(plant, seq.report)).dump(2) + "\n");
    std::cout << "levels 1.." << window << ": " << seq.machines.back().size()
              << " states at the top; consistent predictions: "
              << (seq.report.nested ? "yes" : "no") << "\n";
    if (!seq.report.nested) std::cout << seq.report.message << "\n";
  } else {
    Abstraction m = build_abstraction(plant, window);
    out.put("m" + std::to_string(window) + ".json", abstraction_to_json(m));
    out.put("m" + std::to_string(window) + ".dot", abstraction_to_dot(m));
    std::cout << "level " << window << ": " << m.size() << " states\n";
  }
  out.finish(std::move(man));
  return 0;
}

int cmd_gain(const std::string& plant_path, const std::string& machine_path, int window,
             const std::string& weights_path, const std::string& out_dir) {
  FinitePlant plant = load_plant(plant_path);
  Abstraction m;
  if (!machine_path.empty()) {
    m = abstraction_from_json(read_file(machine_path));
    if (m.plant_id != plant_digest(plant))
      throw std::invalid_argument("gain: the machine was built from a different plant");
  } else {
    m = build_abstraction(plant, window);
  }
  CostWeights w = load_weights(weights_path, plant);

  WeightedGraph eg = error_graph(plant, m, w);
  GainResult lower = max_cycle_ratio(eg);
  WeightedGraph bg = bound_graph(m, w);
  GainResult upper = gain_upper_bound(m, w);
  ZeroReduction zr = zero_reduction_finite(m, w);

  json j;
  j["window"] = m.window;
  j["gamma"] = lower.str();
  j["gamma_finite"] = !lower.infinite;
  json wit = json::array();
  for (int e : lower.witness_edges) wit.push_back(edge_str(eg, e));
  j["witness"] = std::move(wit);
  j["gamma_hat"] = upper.str();
  j["gamma_hat_finite"] = !upper.infinite;
  json bwit = json::array();
  for (int e : upper.witness_edges) bwit.push_back(edge_str(bg, e));
  j["bound_witness"] = std::move(bwit);
  j["zero_restriction_finite"] = zr.finite;
  json cert = json::array();
  for (int q : zr.certificate) cert.push_back(state_label(m, q));
  j["zero_restriction_certificate"] = std::move(cert);

  OutDir out(out_dir);
  out.put("gain.json", j.dump(2) + "\n");
  out.put("error_graph.dot", graph_to_dot(eg));
  out.put("bound_graph.dot", graph_to_dot(bg));
  RunManifest man;
  man.command = "gain";
  man.inputs = {{"plant", plant_digest(plant)}};
  if (!machine_path.empty()) man.inputs.emplace_back("machine", digest_text(read_file(machine_path)));
  if (!weights_path.empty()) man.inputs.emplace_back("weights", digest_text(read_file(weights_path)));
  man.params = {{"i", std::to_string(m.window)}};
  out.finish(std::move(man));

  std::cout << "gamma = " << lower.str() << "\n";
  std::cout << "gamma_hat = " << upper.str() << "\n";
  std::cout << "zero-cost restriction finite: " << (zr.finite ? "yes" : "no") << "\n";
  return 0;
}

int cmd_verify(const std::string& plant_path, int i_max, int depth,
               const std::string& weights_path, const std::string& out_dir) {
  FinitePlant plant = load_plant(plant_path);
  CostWeights w = load_weights(weights_path, plant);
  if (depth <= 0) depth = 2 * i_max + 2;
  Codec codec = Codec::minimal(plant.p());

  NestedSequence seq = build_nested_sequence(plant, i_max);
  const auto& ms = seq.machines;

  std::vector<PropertyReport> reports;
  for (size_t k = 0; k < ms.size(); ++k) {
    PropertyReport r = check_output_match(plant, ms[k], codec, depth);
    r.scope += ", level " + std::to_string(k + 1);
    reports.push_back(std::move(r));
  }
  for (size_t k = 0; k < ms.size(); ++k) {
    PropertyReport r = check_inclusion(plant, ms[k]);
    r.scope += ", level " + std::to_string(k + 1);
    reports.push_back(std::move(r));
  }
  for (size_t k = 0; k + 1 < ms.size(); ++k)
    reports.push_back(check_performance_chain(plant, ms[k], ms[k + 1]));
  for (size_t k = 0; k + 1 < ms.size(); ++k)
    reports.push_back(check_output_nested(ms[k], ms[k + 1]));
  if (ms.size() >= 2) reports.push_back(check_gain_monotone(plant, ms, w));
  CompletenessReport comp = check_completeness(plant, w, i_max);
  reports.push_back(comp.summary);

  bool violated = false;
  for (const auto& r : reports) {
    print_property(r);
    if (r.verdict == Verdict::Violated) violated = true;
  }

  if (!out_dir.empty()) {
    json j;
    json props = json::array();
    for (const auto& r : reports) props.push_back(property_json(plant, r));
    j["properties"] = std::move(props);
    json levels = json::array();
    for (const auto& lg : comp.levels) {
      json l;
      l["level"] = lg.level;
      l["gamma"] = lg.gamma.str();
      levels.push_back(std::move(l));
    }
    j["gains"] = std::move(levels);
    j["i_star"] = comp.i_star;
    j["final_unambiguous"] = comp.final_unambiguous;
    j["nested"] = comp.nested;
    j["message"] = comp.message;
    OutDir out(out_dir);
    out.put("verify.json", j.dump(2) + "\n");
    RunManifest man;
    man.command = "verify";
    man.inputs = {{"plant", plant_digest(plant)}};
    if (!weights_path.empty())
      man.inputs.emplace_back("weights", digest_text(read_file(weights_path)));
    man.params = {{"i", std::to_string(i_max)}, {"depth", std::to_string(depth)}};
    out.finish(std::move(man));
  }
  return violated ? 1 : 0;
}

int cmd_synthesize(const std::string& plant_path, int window, const std::string& weights_path,
                   const std::string& tau_str, int horizon, const std::string& out_dir) {
  FinitePlant plant = load_plant(plant_path);
  CostWeights w = load_weights(weights_path, plant);
  NestedSequence seq = build_nested_sequence(plant, window);
  const Abstraction& m = seq.machines.back();

  WeightedGraph eg = error_graph(plant, m, w);
  GainResult gamma = max_cycle_ratio(eg);

  OutDir out(out_dir);
  RunManifest man;
  man.command = "synthesize";
  man.inputs = {{"plant", plant_digest(plant)}};
  if (!weights_path.empty())
    man.inputs.emplace_back("weights", digest_text(read_file(weights_path)));
  man.params = {{"i", std::to_string(window)},
                {"tau", tau_str.empty() ? "grid" : tau_str},
                {"horizon", std::to_string(horizon)}};

  if (gamma.infinite) {
    json j;
    j["found"] = false;
    j["reason"] = "approximation-error gain is infinite at this window length";
    j["gamma"] = "inf";
    out.put("synthesis.json", j.dump(2) + "\n");
    out.finish(std::move(man));
    std::cout << "gain is infinite at level " << window << "; no controller\n";
    return 1;
  }

  std::vector<Rational> grid =
      tau_str.empty() ? default_tau_grid() : std::vector<Rational>{Rational::parse(tau_str)};
  TauSearchResult res = search_tau(m, plant, w, gamma, grid);

  json trials = json::array();
  for (const auto& t : res.trials) {
    json jt;
    jt["tau"] = t.tau.str();
    jt["outcome"] = t.outcome;
    trials.push_back(std::move(jt));
  }

  if (!res.found) {
    json j;
    j["found"] = false;
    j["reason"] = "value iteration diverged for every tau tried";
    j["gamma"] = gamma.str();
    j["trials"] = std::move(trials);
    out.put("synthesis.json", j.dump(2) + "\n");
    out.finish(std::move(man));
    std::cout << "no tau on the grid admits a bounded value; no controller\n";
    return 1;
  }

  Controller ctrl{m, res.vi.policy, res.tau, gamma.gamma};
  out.put("controller.json", controller_to_json(ctrl));

  DeploymentReport dep = deploy_and_check(plant, m, res.vi.policy, horizon);
  json j;
  j["found"] = true;
  j["window"] = m.window;
  j["tau"] = res.tau.str();
  j["gamma"] = gamma.str();
  j["iterations"] = res.vi.iterations;
  j["bound"] = res.vi.bound.str();
  json val = json::array();
  for (const auto& v : res.vi.value) val.push_back(v.str());
  j["value"] = std::move(val);
  j["certified"] = res.cert.holds;
  j["trials"] = std::move(trials);
  json depj;
  depj["bounded"] = dep.bounded;
  depj["all_cycles_zero"] = dep.all_cycles_zero;
  depj["sums_stabilized"] = dep.sums_stabilized;
  depj["horizon"] = dep.horizon;
  json runs = json::array();
  for (const auto& r : dep.runs) {
    json jr;
    jr["x0"] = plant.states[r.x0];
    jr["transient"] = r.transient_len;
    jr["cycle"] = r.cycle_len;
    jr["cycle_cost_sum"] = r.cycle_cost_sum.str();
    jr["final_sum"] = r.running_sum.empty() ? "0" : r.running_sum.back().str();
    runs.push_back(std::move(jr));
  }
  depj["runs"] = std::move(runs);
  j["deployment"] = std::move(depj);
  out.put("certificate.json", j.dump(2) + "\n");
  out.finish(std::move(man));

  std::cout << "tau = " << res.tau.str() << ": value iteration converged in "
            << res.vi.iterations << " rounds; certificate "
            << (res.cert.holds ? "holds" : "FAILS") << "\n";
  std::cout << "deployment: bounded " << (dep.bounded ? "yes" : "no") << ", cycles zero "
            << (dep.all_cycles_zero ? "yes" : "no") << ", sums stabilized "
            << (dep.sums_stabilized ? "yes" : "no") << "\n";
  return 0;
}

int cmd_simulate(const std::string& plant_path, const std::string& x0_label,
                 const std::string& inputs_csv, const std::string& controller_path, int T,
                 const std::string& out_dir) {
  FinitePlant plant = load_plant(plant_path);
  int x0 = plant.state_index(x0_label);
  if (x0 < 0) throw std::invalid_argument("simulate: unknown state '" + x0_label + "'");

  OutDir out(out_dir);
  RunManifest man;
  man.command = "simulate";
  man.inputs = {{"plant", plant_digest(plant)}};
  man.params = {{"x0", x0_label}};

  if (!controller_path.empty()) {
    Controller ctrl = controller_from_json(read_file(controller_path));
    if (ctrl.machine.plant_id != plant_digest(plant))
      throw std::invalid_argument("simulate: the controller was built for a different plant");
    Codec codec = Codec::minimal(plant.p());
    auto rows = run_closed_loop(plant, ctrl, codec, x0, T);
    out.put("trace.csv", closed_loop_csv(plant, rows));
    man.inputs.emplace_back("controller", digest_text(read_file(controller_path)));
    man.params.emplace_back("T", std::to_string(T));
    std::cout << "closed loop for " << T << " steps from " << x0_label << "\n";
  } else {
    std::vector<int> us;
    for (const auto& lab : split_csv(inputs_csv)) {
      int u = plant.input_index(lab);
      if (u < 0) throw std::invalid_argument("simulate: unknown input '" + lab + "'");
      us.push_back(u);
    }
    Trace tr = simulate(plant, x0, us);
    if (!tr.x0_in_initial)
      std::cout << "note: " << x0_label << " is not a declared initial state\n";
    out.put("trace.csv", trace_csv(plant, tr));
    man.params.emplace_back("inputs", inputs_csv);
    std::cout << "open loop for " << us.size() << " steps from " << x0_label << "\n";
  }
  out.finish(std::move(man));
  return 0;
}

int cmd_codec(int p, int bound, const std::string& out_dir) {
  Codec c = Codec::minimal(p);
  std::ostringstream csv;
  csv << "ytilde,y,w\n";
  for (int yt = 1; yt <= p; ++yt)
    for (int y = 1; y <= p; ++y) csv << yt << ',' << y << ',' << beta(yt, y, p) << "\n";

  bool identity = true;
  for (int yt = 0; yt < p; ++yt)
    for (int y = 0; y < p; ++y)
      if (c.decode(yt, c.encode(yt, y)) != y) identity = false;

  json j;
  j["p"] = p;
  j["identity_holds"] = identity;
  if (p <= bound) {
    MinimalityReport rep = verify_minimality(p, bound);
    j["searched"] = true;
    j["smaller_codec_exists"] = rep.smaller_codec_exists;
    j["candidates_examined"] = rep.candidates_examined;
  } else {
    j["searched"] = false;
    j["note"] = "exhaustive minimality search skipped above the bound";
  }

  OutDir out(out_dir);
  out.put("beta.csv", csv.str());
  out.put("minimality.json", j.dump(2) + "\n");
  RunManifest man;
  man.command = "codec";
  man.params = {{"p", std::to_string(p)}, {"bound", std::to_string(bound)}};
  out.finish(std::move(man));

  std::cout << "p = " << p << ": identity " << (identity ? "holds" : "FAILS") << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Window-machine approximations of finite plants: construction, "
               "error gains, property checks, and certified controllers"};
  app.require_subcommand(1);

  std::string plant_path, machine_path, weights_path, controller_path;
  std::string out_dir, x0_label, inputs_csv, tau_str;
  int window = 1, depth = 0, horizon = 200, T = 20, p = 2, bound = 4;
  bool nested = false;

  auto* ab = app.add_subcommand("abstract", "Build window machines for a plant");
  ab->add_option("--plant", plant_path, "plant JSON file")->required()->check(CLI::ExistingFile);
  ab->add_option("--i", window, "window length")->required()->check(CLI::PositiveNumber);
  ab->add_flag("--nested", nested, "build levels 1..i with consistent predictions");
  ab->add_option("--out", out_dir, "output directory")->required();

  auto* ga = app.add_subcommand("gain", "Approximation-error gain of a machine");
  ga->add_option("--plant", plant_path, "plant JSON file")->required()->check(CLI::ExistingFile);
  auto* ga_machine = ga->add_option("--machine", machine_path, "machine JSON file")
                         ->check(CLI::ExistingFile);
  ga->add_option("--i", window, "build the machine at this window length")
      ->check(CLI::PositiveNumber)
      ->excludes(ga_machine);
  ga->add_option("--weights", weights_path, "cost weights JSON file")->check(CLI::ExistingFile);
  ga->add_option("--out", out_dir, "output directory")->required();

  auto* ve = app.add_subcommand("verify", "Check the toolkit's guarantees on a plant");
  ve->add_option("--plant", plant_path, "plant JSON file")->required()->check(CLI::ExistingFile);
  ve->add_option("--i", window, "deepest window length")->required()->check(CLI::PositiveNumber);
  ve->add_option("--depth", depth, "input-tree depth for the codec round-trip check");
  ve->add_option("--weights", weights_path, "cost weights JSON file")->check(CLI::ExistingFile);
  ve->add_option("--out", out_dir, "output directory (optional)");

  auto* sy = app.add_subcommand("synthesize", "Search for a certified controller");
  sy->add_option("--plant", plant_path, "plant JSON file")->required()->check(CLI::ExistingFile);
  sy->add_option("--i", window, "window length")->required()->check(CLI::PositiveNumber);
  sy->add_option("--weights", weights_path, "cost weights JSON file")->check(CLI::ExistingFile);
  sy->add_option("--tau", tau_str, "fix the trade-off weight instead of searching the grid");
  sy->add_option("--horizon", horizon, "deployment evidence horizon")->check(CLI::PositiveNumber);
  sy->add_option("--out", out_dir, "output directory")->required();

  auto* si = app.add_subcommand("simulate", "Run the plant open- or closed-loop");
  si->add_option("--plant", plant_path, "plant JSON file")->required()->check(CLI::ExistingFile);
  si->add_option("--x0", x0_label, "start state label")->required();
  auto* si_inputs = si->add_option("--inputs", inputs_csv, "comma-separated input word");
  auto* si_ctrl = si->add_option("--controller", controller_path, "controller JSON file")
                      ->check(CLI::ExistingFile)
                      ->excludes(si_inputs);
  si->add_option("--T", T, "closed-loop steps")->needs(si_ctrl);
  si->add_option("--out", out_dir, "output directory")->required();

  auto* co = app.add_subcommand("codec", "Disturbance codec table and minimality");
  co->add_option("--p", p, "output alphabet size")->required()->check(CLI::Range(2, 64));
  co->add_option("--bound", bound, "largest p for the exhaustive minimality search");
  co->add_option("--out", out_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (app.got_subcommand(ab)) return cmd_abstract(plant_path, window, nested, out_dir);
    if (app.got_subcommand(ga))
      return cmd_gain(plant_path, machine_path, window, weights_path, out_dir);
    if (app.got_subcommand(ve)) return cmd_verify(plant_path, window, depth, weights_path, out_dir);
    if (app.got_subcommand(sy))
      return cmd_synthesize(plant_path, window, weights_path, tau_str, horizon, out_dir);
    if (app.got_subcommand(si))
      return cmd_simulate(plant_path, x0_label, inputs_csv, controller_path, T, out_dir);
    if (app.got_subcommand(co)) return cmd_codec(p, bound, out_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
