#include "rhomu/gain.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <map>
#include <stdexcept>

#include "rhomu/codec.hpp"

namespace rhomu {

CostWeights CostWeights::defaults(int m, int p) {
  CostWeights w;
  w.rho.assign(m, Rational(1));
  w.mu_delta.assign(p, Rational(1));
  w.mu_delta[0] = Rational(0);
  return w;
}

bool CostWeights::positive_definite() const {
  if (mu_delta.empty() || !mu_delta[0].is_zero()) return false;
  for (size_t w = 1; w < mu_delta.size(); ++w)
    if (mu_delta[w].sign() <= 0) return false;
  return true;
}

void CostWeights::validate(int m, int p) const {
  if (static_cast<int>(rho.size()) != m)
    throw std::invalid_argument("weights: rho table must cover every input symbol");
  if (static_cast<int>(mu_delta.size()) != p)
    throw std::invalid_argument("weights: mu table must cover every disturbance symbol");
  for (const auto& r : rho)
    if (r.sign() < 0) throw std::invalid_argument("weights: rho costs must be non-negative");
  for (const auto& r : mu_delta)
    if (r.sign() < 0) throw std::invalid_argument("weights: mu costs must be non-negative");
}

int WeightedGraph::add_node(std::string label) {
  node_labels.push_back(std::move(label));
  out.emplace_back();
  return size() - 1;
}

void WeightedGraph::add_edge(int from, int to, Rational rho, Rational mu, std::string label) {
  out[from].push_back(static_cast<int>(edges.size()));
  edges.push_back({from, to, std::move(rho), std::move(mu), std::move(label)});
}

namespace {

// Nodes reachable from the initial set; an empty initial set means the whole
// graph. Every cycle search below is scoped by this mask: cycles that no run
// can reach carry no weight.
std::vector<char> reachable_from_initial(const WeightedGraph& g) {
  std::vector<char> reach(g.size(), 0);
  if (g.initial.empty()) {
    std::fill(reach.begin(), reach.end(), 1);
    return reach;
  }
  std::deque<int> queue;
  for (int v : g.initial)
    if (v >= 0 && v < g.size() && !reach[v]) {
      reach[v] = 1;
      queue.push_back(v);
    }
  while (!queue.empty()) {
    int v = queue.front();
    queue.pop_front();
    for (int ei : g.out[v]) {
      int to = g.edges[ei].to;
      if (!reach[to]) {
        reach[to] = 1;
        queue.push_back(to);
      }
    }
  }
  return reach;
}

// Strongly connected components over the subgraph of edges passing the
// filter; iterative Tarjan. Returns component id per node (-1 for isolated
// nodes never pushed -- does not happen, all nodes are processed).
std::vector<int> scc_components(const WeightedGraph& g,
                                const std::function<bool(const GraphEdge&)>& keep) {
  const int n = g.size();
  std::vector<int> comp(n, -1), low(n, 0), num(n, -1), stacked(n, 0);
  std::vector<int> stack;
  int counter = 0, comps = 0;
  struct Frame {
    int v;
    size_t ei;
  };
  for (int root = 0; root < n; ++root) {
    if (num[root] >= 0) continue;
    std::vector<Frame> frames{{root, 0}};
    num[root] = low[root] = counter++;
    stack.push_back(root);
    stacked[root] = 1;
    while (!frames.empty()) {
      Frame& f = frames.back();
      if (f.ei < g.out[f.v].size()) {
        const GraphEdge& e = g.edges[g.out[f.v][f.ei++]];
        if (!keep(e)) continue;
        if (num[e.to] < 0) {
          num[e.to] = low[e.to] = counter++;
          stack.push_back(e.to);
          stacked[e.to] = 1;
          frames.push_back({e.to, 0});
        } else if (stacked[e.to]) {
          low[f.v] = std::min(low[f.v], num[e.to]);
        }
      } else {
        if (low[f.v] == num[f.v]) {
          while (true) {
            int w = stack.back();
            stack.pop_back();
            stacked[w] = 0;
            comp[w] = comps;
            if (w == f.v) break;
          }
          ++comps;
        }
        int v = f.v;
        frames.pop_back();
        if (!frames.empty()) low[frames.back().v] = std::min(low[frames.back().v], low[v]);
      }
    }
  }
  return comp;
}

// Shortest (fewest edges) cycle through the given edge, staying inside its
// strongly connected component. BFS from the edge head back to its tail.
std::vector<int> cycle_through_edge(const WeightedGraph& g, const std::vector<int>& comp,
                                    int edge_idx,
                                    const std::function<bool(const GraphEdge&)>& keep) {
  const GraphEdge& e = g.edges[edge_idx];
  if (e.to == e.from) return {edge_idx};
  std::vector<int> pred_edge(g.size(), -1);
  std::deque<int> queue{e.to};
  std::vector<char> seen(g.size(), 0);
  seen[e.to] = 1;
  while (!queue.empty()) {
    int v = queue.front();
    queue.pop_front();
    if (v == e.from) break;
    for (int ei : g.out[v]) {
      const GraphEdge& f = g.edges[ei];
      if (!keep(f) || comp[f.to] != comp[e.from] || seen[f.to]) continue;
      seen[f.to] = 1;
      pred_edge[f.to] = ei;
      queue.push_back(f.to);
    }
  }
  if (!seen[e.from]) throw std::logic_error("gain: component not strongly connected");
  std::vector<int> path;
  for (int v = e.from; v != e.to; v = g.edges[pred_edge[v]].from) path.push_back(pred_edge[v]);
  std::reverse(path.begin(), path.end());
  path.insert(path.begin(), edge_idx);
  return path;  // e.from -> e.to (the edge), then back to e.from
}

}  // namespace

// Bellman-Ford negative-cycle detection with a virtual source (all distances
// start at zero, so any negative cycle in the graph is found). Returns the
// cycle as edge indices, or empty and fills potentials with the converged
// distances.
static std::vector<int> negative_cycle(const WeightedGraph& g, const std::vector<Rational>& cost,
                                       std::vector<Rational>* potentials) {
  const int n = g.size();
  std::vector<char> reach = reachable_from_initial(g);
  std::vector<Rational> dist(n, Rational(0));
  std::vector<int> pred(n, -1);
  int changed_node = -1;
  for (int pass = 0; pass <= n; ++pass) {
    changed_node = -1;
    for (size_t ei = 0; ei < g.edges.size(); ++ei) {
      const GraphEdge& e = g.edges[ei];
      if (!reach[e.from]) continue;
      if (dist[e.from] + cost[ei] < dist[e.to]) {
        dist[e.to] = dist[e.from] + cost[ei];
        pred[e.to] = static_cast<int>(ei);
        changed_node = e.to;
      }
    }
    if (changed_node < 0) break;
  }
  if (changed_node < 0) {
    if (potentials) *potentials = dist;
    return {};
  }
  // A relaxation in the extra pass: walk predecessors n times to land inside
  // the cycle, then collect it.
  int v = changed_node;
  for (int k = 0; k < n; ++k) {
    if (pred[v] < 0) throw std::logic_error("gain: broken predecessor chain");
    v = g.edges[pred[v]].from;
  }
  std::vector<int> cycle;
  int w = v;
  do {
    cycle.push_back(pred[w]);
    w = g.edges[pred[w]].from;
  } while (w != v);
  std::reverse(cycle.begin(), cycle.end());
  return cycle;
}

std::vector<int> find_negative_cycle(const WeightedGraph& g, const std::vector<Rational>& cost) {
  return negative_cycle(g, cost, nullptr);
}

namespace {

struct CycleSums {
  Rational rho, mu;
};

CycleSums sums(const WeightedGraph& g, const std::vector<int>& cycle) {
  CycleSums s;
  for (int ei : cycle) {
    s.rho += g.edges[ei].rho;
    s.mu += g.edges[ei].mu;
  }
  return s;
}

}  // namespace

Rational cycle_ratio(const WeightedGraph& g, const std::vector<int>& cycle) {
  CycleSums s = sums(g, cycle);
  if (s.rho.is_zero()) throw std::domain_error("gain: cycle has zero rho-sum, ratio undefined");
  return s.mu / s.rho;
}

GainResult max_cycle_ratio(const WeightedGraph& g) {
  GainResult result;
  std::vector<char> reach = reachable_from_initial(g);
  auto all = [&reach](const GraphEdge& e) { return static_cast<bool>(reach[e.from]); };

  // Infinite case: a reachable cycle among zero-rho edges carrying positive mu.
  auto zero_rho = [&reach](const GraphEdge& e) { return reach[e.from] && e.rho.is_zero(); };
  std::vector<int> zcomp = scc_components(g, zero_rho);
  for (size_t ei = 0; ei < g.edges.size(); ++ei) {
    const GraphEdge& e = g.edges[ei];
    if (reach[e.from] && e.rho.is_zero() && e.mu.sign() > 0 && zcomp[e.from] == zcomp[e.to]) {
      result.infinite = true;
      result.witness_edges = cycle_through_edge(g, zcomp, static_cast<int>(ei), zero_rho);
      return result;
    }
  }

  // Zero case: no cycle carries positive mu at all. An edge with both ends in
  // one component always lies on a cycle.
  std::vector<int> comp = scc_components(g, all);
  int seed_edge = -1;  // an in-component edge with positive mu, if any
  int any_cycle_edge = -1;
  for (size_t ei = 0; ei < g.edges.size(); ++ei) {
    const GraphEdge& e = g.edges[ei];
    if (!reach[e.from] || comp[e.from] != comp[e.to]) continue;
    if (any_cycle_edge < 0) any_cycle_edge = static_cast<int>(ei);
    if (e.mu.sign() > 0) {
      seed_edge = static_cast<int>(ei);
      break;
    }
  }
  if (any_cycle_edge < 0) throw std::logic_error("gain: reachable graph has no cycle");
  if (seed_edge < 0) {
    result.gamma = Rational(0);
    result.witness_edges = cycle_through_edge(g, comp, any_cycle_edge, all);
    return result;
  }

  // Parametric search seeded by a cycle through a positive-mu edge.
  std::vector<int> seed = cycle_through_edge(g, comp, seed_edge, all);
  CycleSums s = sums(g, seed);
  // Zero rho-sum would make it an infinite-witness cycle, handled above.
  Rational candidate = s.mu / s.rho;
  std::vector<int> achieved = seed;

  while (true) {
    std::vector<Rational> cost(g.edges.size());
    for (size_t ei = 0; ei < g.edges.size(); ++ei)
      cost[ei] = candidate * g.edges[ei].rho - g.edges[ei].mu;
    std::vector<Rational> pot;
    std::vector<int> neg = negative_cycle(g, cost, &pot);
    if (!neg.empty()) {
      CycleSums ns = sums(g, neg);
      candidate = ns.mu / ns.rho;  // strictly larger than the probed value
      achieved = neg;
      continue;
    }
    // No cycle beats the candidate; certify it with a zero-cost cycle of
    // positive rho-sum (edges with zero reduced cost form that subgraph).
    auto tight = [&](const GraphEdge& e) {
      size_t ei = &e - g.edges.data();
      return reach[e.from] && cost[ei] + pot[e.from] - pot[e.to] == Rational(0);
    };
    std::vector<int> tcomp = scc_components(g, tight);
    for (size_t ei = 0; ei < g.edges.size(); ++ei) {
      const GraphEdge& e = g.edges[ei];
      if (tight(e) && e.rho.sign() > 0 && tcomp[e.from] == tcomp[e.to]) {
        result.gamma = candidate;
        result.witness_edges = cycle_through_edge(g, tcomp, static_cast<int>(ei), tight);
        return result;
      }
    }
    // The cycle that achieved the candidate is itself tight; not finding any
    // tight cycle with positive rho means the invariant broke.
    result.gamma = candidate;
    result.witness_edges = achieved;
    return result;
  }
}

WeightedGraph error_graph(const FinitePlant& pl, const Abstraction& m,
                          const CostWeights& weights) {
  weights.validate(pl.m(), pl.p());
  if (m.inputs != pl.inputs || m.outputs != pl.outputs)
    throw std::invalid_argument("error graph: machine and plant alphabets differ");
  WeightedGraph g;
  std::map<std::pair<int, int>, int> ids;
  std::deque<std::pair<int, int>> queue;
  auto node = [&](int x, int q) {
    auto it = ids.find({x, q});
    if (it != ids.end()) return it->second;
    int id = g.add_node(pl.states[x] + "|" + state_label(pl, m, q));
    ids.emplace(std::make_pair(x, q), id);
    queue.emplace_back(x, q);
    return id;
  };
  for (int x0 : pl.initial_states) g.initial.push_back(node(x0, kRootState));
  while (!queue.empty()) {
    auto [x, q] = queue.front();
    queue.pop_front();
    int from = ids.at({x, q});
    for (int u = 0; u < pl.m(); ++u) {
      int y = pl.out[x];
      int w = beta(m.g[q] + 1, y + 1, pl.p());
      int to = node(pl.next[x][u], m.step(q, u, y));
      g.add_edge(from, to, weights.rho[u], weights.mu_delta[w],
                 pl.inputs[u] + "/w" + std::to_string(w));
    }
  }
  return g;
}

namespace {
Rational ambiguity_charge(const AbstractState& st, const CostWeights& weights) {
  if (st.y_set.size() <= 1) return Rational(0);  // includes the impossible sink
  Rational worst(0);
  for (const auto& c : weights.mu_delta) worst = std::max(worst, c);
  return worst;
}
}  // namespace

WeightedGraph bound_graph(const Abstraction& m, const CostWeights& weights) {
  weights.validate(m.m(), m.p());
  WeightedGraph g;
  std::vector<int> ids(m.size(), -1);
  std::deque<int> queue;
  auto node = [&](int q) {
    if (ids[q] >= 0) return ids[q];
    ids[q] = g.add_node(state_label(m, q));
    queue.push_back(q);
    return ids[q];
  };
  g.initial.push_back(node(kRootState));
  while (!queue.empty()) {
    int q = queue.front();
    queue.pop_front();
    Rational charge = ambiguity_charge(m.states[q], weights);
    for (int u = 0; u < m.m(); ++u)
      for (int y = 0; y < m.p(); ++y) {
        int to = node(m.step(q, u, y));
        g.add_edge(ids[q], to, weights.rho[u], charge,
                   m.inputs[u] + "," + m.outputs[y]);
      }
  }
  return g;
}

GainResult gain_upper_bound(const Abstraction& m, const CostWeights& weights) {
  return max_cycle_ratio(bound_graph(m, weights));
}

ZeroReduction zero_reduction_finite(const Abstraction& m, const CostWeights& weights) {
  weights.validate(m.m(), m.p());
  // Machine restricted to zero-rho inputs, from the root.
  WeightedGraph g;
  std::vector<int> ids(m.size(), -1);
  std::vector<int> back(m.size(), -1);  // graph node -> machine state
  std::deque<int> queue;
  auto node = [&](int q) {
    if (ids[q] >= 0) return ids[q];
    ids[q] = g.add_node(state_label(m, q));
    back[ids[q]] = q;
    queue.push_back(q);
    return ids[q];
  };
  g.initial.push_back(node(kRootState));
  while (!queue.empty()) {
    int q = queue.front();
    queue.pop_front();
    for (int u = 0; u < m.m(); ++u) {
      if (!weights.rho[u].is_zero()) continue;
      for (int y = 0; y < m.p(); ++y) {
        int to = node(m.step(q, u, y));
        g.add_edge(ids[q], to, Rational(0), Rational(0), m.inputs[u] + "," + m.outputs[y]);
      }
    }
  }
  ZeroReduction zr;
  auto all = [](const GraphEdge&) { return true; };
  std::vector<int> comp = scc_components(g, all);
  // Components containing a cycle: any with an in-component edge.
  std::vector<char> comp_cyclic(g.size(), 0);
  for (const auto& e : g.edges)
    if (comp[e.from] == comp[e.to]) comp_cyclic[comp[e.from]] = 1;
  for (int v = 0; v < g.size(); ++v) {
    int q = back[v];
    if (!comp_cyclic[comp[v]] || m.states[q].y_set.size() <= 1) continue;
    // v sits on a cycle of the restriction and is charged for ambiguity:
    // extract a cycle through it for the certificate.
    for (int ei : g.out[v]) {
      const GraphEdge& e = g.edges[ei];
      if (comp[e.to] != comp[v]) continue;
      std::vector<int> cyc = cycle_through_edge(g, comp, ei, all);
      zr.finite = false;
      for (int ce : cyc) zr.certificate.push_back(back[g.edges[ce].from]);
      return zr;
    }
  }
  return zr;
}

StabilityCheck check_gain_stability(const WeightedGraph& g, const Rational& gamma) {
  std::vector<Rational> cost(g.edges.size());
  for (size_t ei = 0; ei < g.edges.size(); ++ei)
    cost[ei] = gamma * g.edges[ei].rho - g.edges[ei].mu;
  StabilityCheck sc;
  std::vector<int> neg = negative_cycle(g, cost, nullptr);
  if (!neg.empty()) {
    sc.holds = false;
    sc.witness_edges = neg;
  }
  return sc;
}

}  // namespace rhomu
