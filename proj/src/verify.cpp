#include "rhomu/verify.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <map>
#include <stdexcept>

namespace rhomu {

std::string verdict_str(Verdict v) {
  switch (v) {
    case Verdict::Holds:
      return "holds";
    case Verdict::Violated:
      return "violated";
    default:
      return "not-applicable";
  }
}

namespace {

void require_same_plant(const Abstraction& a, const Abstraction& b, const char* who) {
  if (a.plant_id != b.plant_id || a.inputs != b.inputs || a.outputs != b.outputs)
    throw std::invalid_argument(std::string(who) + ": machines built from different plants");
}

void require_matching(const FinitePlant& pl, const Abstraction& m, const char* who) {
  if (m.inputs != pl.inputs || m.outputs != pl.outputs)
    throw std::invalid_argument(std::string(who) + ": machine and plant alphabets differ");
}

}  // namespace

PropertyReport check_output_match(const FinitePlant& pl, const Abstraction& m, const Codec& codec,
                                  int depth) {
  require_matching(pl, m, "output-match");
  if (codec.p != pl.p())
    throw std::invalid_argument("output-match: codec alphabet size differs from the plant's");
  PropertyReport rep;
  rep.property = "output-match";
  rep.scope = "depth=" + std::to_string(depth) + ", all initial states";

  // Depth-first over input trees; the path is maintained for the witness.
  std::vector<int> path;
  std::function<bool(int, int, int)> walk = [&](int x, int q, int remaining) -> bool {
    int ytilde = m.g[q];
    int y = pl.out[x];
    int w = codec.encode(ytilde, y);
    int decoded = w >= 0 && w < codec.w_count ? codec.decode(ytilde, w) : -1;
    if (decoded != y) {
      rep.verdict = Verdict::Violated;
      CounterexampleWitness cw;
      cw.x0 = path.empty() ? x : -2;  // fixed below by the caller loop
      cw.inputs = path;
      cw.detail = "prediction '" + pl.outputs[ytilde] + "', observed '" + pl.outputs[y] +
                  "', disturbance " + std::to_string(w) + " decodes to " +
                  (decoded < 0 ? std::string("nothing") : "'" + pl.outputs[decoded] + "'");
      rep.witness = cw;
      return false;
    }
    if (remaining == 0) return true;
    for (int u = 0; u < pl.m(); ++u) {
      path.push_back(u);
      bool ok = walk(pl.next[x][u], m.step(q, u, y), remaining - 1);
      path.pop_back();
      if (!ok) return false;
    }
    return true;
  };
  for (int x0 : pl.initial_states) {
    if (!walk(x0, kRootState, depth)) {
      rep.witness->x0 = x0;
      rep.detail = "codec failed to reproduce an observed output";
      return rep;
    }
  }
  rep.detail = "every prediction/observation pair round-trips through the codec";
  return rep;
}

PropertyReport check_inclusion(const FinitePlant& pl, const Abstraction& m, int depth) {
  require_matching(pl, m, "inclusion");
  PropertyReport rep;
  rep.property = "inclusion";
  rep.scope = depth < 0 ? "exhaustive over the reachable product"
                        : "depth=" + std::to_string(depth);

  auto contains = [&](int q, int x) {
    const auto& xs = m.states[q].x_set;
    return std::binary_search(xs.begin(), xs.end(), x);
  };
  auto violation = [&](int x, int q, int x0, std::vector<int> inputs) {
    rep.verdict = Verdict::Violated;
    CounterexampleWitness cw;
    cw.x0 = x0;
    cw.inputs = std::move(inputs);
    cw.detail = "plant state '" + pl.states[x] + "' not in candidate set of machine state " +
                state_label(m, q);
    rep.witness = cw;
    rep.detail = "candidate-set tracking lost the true state";
  };

  if (depth < 0) {
    // BFS with predecessor tracking so witnesses replay.
    std::map<std::pair<int, int>, std::pair<std::pair<int, int>, int>> pred;
    std::deque<std::pair<int, int>> queue;
    std::map<std::pair<int, int>, int> origin;
    auto trace_back = [&](std::pair<int, int> node) {
      std::vector<int> inputs;
      while (pred.count(node)) {
        auto [prev, u] = pred.at(node);
        inputs.push_back(u);
        node = prev;
      }
      std::reverse(inputs.begin(), inputs.end());
      return std::make_pair(origin.at(node), inputs);
    };
    for (int x0 : pl.initial_states) {
      std::pair<int, int> start{x0, kRootState};
      if (!origin.count(start)) {
        origin[start] = x0;
        queue.push_back(start);
      }
    }
    std::map<std::pair<int, int>, char> seen;
    for (auto& s : queue) seen[s] = 1;
    while (!queue.empty()) {
      auto node = queue.front();
      queue.pop_front();
      auto [x, q] = node;
      if (!contains(q, x)) {
        auto [x0, inputs] = trace_back(node);
        violation(x, q, x0, inputs);
        return rep;
      }
      for (int u = 0; u < pl.m(); ++u) {
        std::pair<int, int> nxt{pl.next[x][u], m.step(q, u, pl.out[x])};
        if (seen.emplace(nxt, 1).second) {
          pred[nxt] = {node, u};
          origin[nxt] = origin.at(node);
          queue.push_back(nxt);
        }
      }
    }
  } else {
    std::vector<int> path;
    std::function<bool(int, int, int, int)> walk = [&](int x, int q, int x0, int remaining) {
      if (!contains(q, x)) {
        violation(x, q, x0, path);
        return false;
      }
      if (remaining == 0) return true;
      for (int u = 0; u < pl.m(); ++u) {
        path.push_back(u);
        bool ok = walk(pl.next[x][u], m.step(q, u, pl.out[x]), x0, remaining - 1);
        path.pop_back();
        if (!ok) return false;
      }
      return true;
    };
    for (int x0 : pl.initial_states)
      if (!walk(x0, kRootState, x0, depth)) return rep;
  }
  rep.detail = "true plant state tracked by every reachable machine state";
  return rep;
}

PropertyReport check_performance_chain(const FinitePlant& pl, const Abstraction& low,
                                       const Abstraction& high) {
  require_matching(pl, low, "performance-chain");
  require_matching(pl, high, "performance-chain");
  require_same_plant(low, high, "performance-chain");
  PropertyReport rep;
  rep.property = "performance-chain";
  rep.scope = "exhaustive over the reachable triple product, levels " +
              std::to_string(low.window) + "/" + std::to_string(high.window);

  struct Node {
    int x, ql, qh;
    auto operator<=>(const Node&) const = default;
  };
  std::map<Node, std::pair<Node, int>> pred;
  std::map<Node, int> origin;
  std::map<Node, char> seen;
  std::deque<Node> queue;
  for (int x0 : pl.initial_states) {
    Node s{x0, kRootState, kRootState};
    if (seen.emplace(s, 1).second) {
      origin[s] = x0;
      queue.push_back(s);
    }
  }
  while (!queue.empty()) {
    Node node = queue.front();
    queue.pop_front();
    const Rational& mv = pl.mu_of_state(node.x);
    const Rational& ml = pl.mu_of(low.h[node.ql]);
    const Rational& mh = pl.mu_of(high.h[node.qh]);
    if (!(mv <= mh && mh <= ml)) {
      rep.verdict = Verdict::Violated;
      CounterexampleWitness cw;
      Node walk = node;
      while (pred.count(walk)) {
        auto [prev, u] = pred.at(walk);
        cw.inputs.push_back(u);
        walk = prev;
      }
      std::reverse(cw.inputs.begin(), cw.inputs.end());
      cw.x0 = origin.at(walk);
      cw.detail = "mu(true)=" + mv.str() + ", mu(level " + std::to_string(high.window) +
                  ")=" + mh.str() + ", mu(level " + std::to_string(low.window) + ")=" + ml.str();
      rep.witness = cw;
      rep.detail = "performance estimates not ordered";
      return rep;
    }
    int y = pl.out[node.x];
    for (int u = 0; u < pl.m(); ++u) {
      Node nxt{pl.next[node.x][u], low.step(node.ql, u, y), high.step(node.qh, u, y)};
      if (seen.emplace(nxt, 1).second) {
        pred[nxt] = {node, u};
        origin[nxt] = origin.at(node);
        queue.push_back(nxt);
      }
    }
  }
  rep.detail = "true cost <= finer estimate <= coarser estimate everywhere reachable";
  return rep;
}

PropertyReport check_output_nested(const Abstraction& low, const Abstraction& high) {
  require_same_plant(low, high, "output-nested");
  if (high.window != low.window + 1)
    throw std::invalid_argument("output-nested: levels must be consecutive");
  PropertyReport rep;
  rep.property = "output-nested";
  rep.scope = "levels " + std::to_string(low.window) + "/" + std::to_string(high.window);
  for (int q = 0; q < high.size(); ++q) {
    const AbstractState& st = high.states[q];
    if (st.kind != StateKind::Final || st.y_set.size() <= 1) continue;
    Snapshot t = st.snap;
    t.ys.pop_back();
    t.us.pop_back();
    int below = low.state_of(t);
    if (below < 0 || high.g[q] != low.g[below]) {
      rep.verdict = Verdict::Violated;
      CounterexampleWitness cw;
      cw.detail = "ambiguous state " + state_label(high, q) + " predicts '" +
                  high.outputs[high.g[q]] + "'" +
                  (below < 0 ? std::string(", truncation missing below")
                             : ", truncation predicts '" + low.outputs[low.g[below]] + "'");
      rep.witness = cw;
      rep.detail = "prediction changes across levels on an ambiguous window";
      return rep;
    }
  }
  rep.detail = "ambiguous windows inherit their truncation's prediction";
  return rep;
}

PropertyReport check_gain_monotone(const FinitePlant& pl, const std::vector<Abstraction>& ms,
                                   const CostWeights& weights) {
  weights.validate(pl.m(), pl.p());
  if (!weights.positive_definite())
    throw std::invalid_argument("gain-monotone: mu weights must be positive definite");
  if (ms.size() < 2)
    throw std::invalid_argument("gain-monotone: need at least two consecutive levels");
  PropertyReport rep;
  rep.property = "gain-monotone";
  rep.scope = "levels 1.." + std::to_string(ms.size());

  for (size_t k = 0; k + 1 < ms.size(); ++k) {
    PropertyReport nested = check_output_nested(ms[k], ms[k + 1]);
    if (nested.verdict != Verdict::Holds) {
      rep.verdict = Verdict::NotApplicable;
      rep.detail = "sequence is not output-consistent between levels " +
                   std::to_string(ms[k].window) + " and " + std::to_string(ms[k + 1].window) +
                   "; monotonicity not asserted";
      return rep;
    }
  }

  // Pointwise disturbance-cost comparison on each consecutive triple product.
  for (size_t k = 0; k + 1 < ms.size(); ++k) {
    const Abstraction& low = ms[k];
    const Abstraction& high = ms[k + 1];
    struct Node {
      int x, ql, qh;
      auto operator<=>(const Node&) const = default;
    };
    std::map<Node, std::pair<Node, int>> pred;
    std::map<Node, int> origin;
    std::map<Node, char> seen;
    std::deque<Node> queue;
    for (int x0 : pl.initial_states) {
      Node s{x0, kRootState, kRootState};
      if (seen.emplace(s, 1).second) {
        origin[s] = x0;
        queue.push_back(s);
      }
    }
    while (!queue.empty()) {
      Node node = queue.front();
      queue.pop_front();
      int y = pl.out[node.x];
      int wl = beta(low.g[node.ql] + 1, y + 1, pl.p());
      int wh = beta(high.g[node.qh] + 1, y + 1, pl.p());
      if (!(weights.mu_delta[wh] <= weights.mu_delta[wl])) {
        rep.verdict = Verdict::Violated;
        CounterexampleWitness cw;
        Node walk = node;
        while (pred.count(walk)) {
          auto [prev, u] = pred.at(walk);
          cw.inputs.push_back(u);
          walk = prev;
        }
        std::reverse(cw.inputs.begin(), cw.inputs.end());
        cw.x0 = origin.at(walk);
        cw.detail = "disturbance cost rises from level " + std::to_string(low.window) + " (w=" +
                    std::to_string(wl) + ") to level " + std::to_string(high.window) + " (w=" +
                    std::to_string(wh) + ")";
        rep.witness = cw;
        rep.detail = "finer level pays a larger disturbance cost on a reachable run";
        return rep;
      }
      for (int u = 0; u < pl.m(); ++u) {
        Node nxt{pl.next[node.x][u], low.step(node.ql, u, y), high.step(node.qh, u, y)};
        if (seen.emplace(nxt, 1).second) {
          pred[nxt] = {node, u};
          origin[nxt] = origin.at(node);
          queue.push_back(nxt);
        }
      }
    }
  }

  // Non-increasing exact gains.
  std::string chain;
  GainResult prev;
  for (size_t k = 0; k < ms.size(); ++k) {
    GainResult cur = max_cycle_ratio(error_graph(pl, ms[k], weights));
    if (k) {
      bool ok = prev.infinite || (!cur.infinite && cur.gamma <= prev.gamma);
      if (!ok) {
        rep.verdict = Verdict::Violated;
        CounterexampleWitness cw;
        cw.detail = "gain rises from " + prev.str() + " (level " + std::to_string(ms[k - 1].window) +
                    ") to " + cur.str() + " (level " + std::to_string(ms[k].window) + ")";
        rep.witness = cw;
        rep.detail = "gains increase along the sequence";
        return rep;
      }
      chain += " >= ";
    }
    chain += cur.str();
    prev = cur;
  }
  rep.detail = "gains non-increasing: " + chain;
  return rep;
}

CompletenessReport check_completeness(const FinitePlant& pl, const CostWeights& weights,
                                      int i_max) {
  weights.validate(pl.m(), pl.p());
  if (i_max < 1) throw std::invalid_argument("completeness: i_max must be at least 1");
  CompletenessReport rep;
  NestedSequence seq = build_nested_sequence(pl, i_max);
  rep.nested = seq.report.nested;
  for (int i = 1; i <= i_max; ++i) {
    GainResult g = max_cycle_ratio(error_graph(pl, seq.machines[i - 1], weights));
    rep.levels.push_back({i, g});
    if (rep.i_star == 0 && !g.infinite && g.gamma.is_zero()) rep.i_star = i;
  }
  if (rep.i_star > 0) {
    const Abstraction& m = seq.machines[rep.i_star - 1];
    rep.final_unambiguous = true;
    // Finals reachable by definition of the build; check their ambiguity.
    for (int q = 0; q < m.size(); ++q)
      if (m.states[q].kind == StateKind::Final && m.states[q].y_set.size() > 1)
        rep.final_unambiguous = false;
    rep.message = "first zero-gain level: " + std::to_string(rep.i_star);
  } else {
    rep.message = "none found up to i_max=" + std::to_string(i_max);
  }

  rep.summary.property = "completeness";
  rep.summary.scope = "levels 1.." + std::to_string(i_max);
  rep.summary.verdict = Verdict::Holds;
  // Once a zero-gain level exists, every deeper level must also be zero-gain
  // (finer windows only shrink candidate sets); flag an inconsistency loudly.
  for (const auto& lg : rep.levels)
    if (rep.i_star > 0 && lg.level > rep.i_star && (lg.gamma.infinite || !lg.gamma.gamma.is_zero()))
      rep.summary.verdict = Verdict::Violated;
  rep.summary.detail = rep.message;
  return rep;
}

}  // namespace rhomu
