#pragma once

// Brute-force references the tests compare the production algorithms against,
// plus generators for randomized cross-checks. Everything here is written for
// clarity over speed and capped rather than clever: the point is an
// independent answer, not a fast one.

#include <deque>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "rhomu/gain.hpp"
#include "rhomu/plant.hpp"
#include "rhomu/rational.hpp"

namespace oracle {

// Every simple cycle (as edge-index sequences) among nodes reachable from the
// graph's initial set. Each cycle is reported once, rooted at its smallest
// node id. Throws std::runtime_error past the caps. Assumes rho >= 0 per edge
// when used for ratio work (zero-rho composites then decompose into zero-rho
// simple cycles, so simple cycles are enough).
inline std::vector<std::vector<int>> simple_cycles(const rhomu::WeightedGraph& g,
                                                   size_t cycle_cap = 100000,
                                                   size_t step_cap = 2000000) {
  std::vector<char> reach(g.size(), 0);
  std::deque<int> bfs;
  for (int v : g.initial)
    if (!reach[v]) {
      reach[v] = 1;
      bfs.push_back(v);
    }
  while (!bfs.empty()) {
    int v = bfs.front();
    bfs.pop_front();
    for (int e : g.out[v])
      if (!reach[g.edges[e].to]) {
        reach[g.edges[e].to] = 1;
        bfs.push_back(g.edges[e].to);
      }
  }

  std::vector<std::vector<int>> found;
  std::vector<int> path;
  std::vector<char> on_path(g.size(), 0);
  size_t steps = 0;

  // Paths through nodes >= root only, so each cycle is rooted at its minimum.
  auto dfs = [&](auto&& self, int root, int v) -> void {
    if (++steps > step_cap) throw std::runtime_error("oracle: step cap exceeded");
    for (int e : g.out[v]) {
      int to = g.edges[e].to;
      if (!reach[to] || to < root) continue;
      if (to == root) {
        path.push_back(e);
        found.push_back(path);
        path.pop_back();
        if (found.size() > cycle_cap) throw std::runtime_error("oracle: cycle cap exceeded");
      } else if (!on_path[to]) {
        on_path[to] = 1;
        path.push_back(e);
        self(self, root, to);
        path.pop_back();
        on_path[to] = 0;
      }
    }
  };
  for (int root = 0; root < g.size(); ++root) {
    if (!reach[root]) continue;
    on_path[root] = 1;
    dfs(dfs, root, root);
    on_path[root] = 0;
  }
  return found;
}

struct OracleGain {
  bool infinite = false;
  rhomu::Rational gamma;  // max(0, max cycle ratio); meaningful when finite
};

// Definition-level gain: the least gamma >= 0 with gamma*(sum rho) >= sum mu
// on every reachable cycle, computed by enumerating all simple cycles.
inline OracleGain oracle_max_ratio(const rhomu::WeightedGraph& g) {
  OracleGain res;
  res.gamma = rhomu::Rational(0);
  for (const auto& cycle : simple_cycles(g)) {
    rhomu::Rational rho(0), mu(0);
    for (int e : cycle) {
      rho = rho + g.edges[e].rho;
      mu = mu + g.edges[e].mu;
    }
    if (rho.is_zero()) {
      if (mu.sign() > 0) res.infinite = true;
      continue;
    }
    rhomu::Rational ratio = mu / rho;
    if (res.gamma < ratio) res.gamma = ratio;
  }
  return res;
}

// Small random plant: up to 6 states, up to 2 inputs, up to 3 outputs,
// performance values in {0,1,2} with identity cost, every state initial.
inline rhomu::FinitePlant random_plant(std::mt19937& rng) {
  auto pick = [&rng](int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  };
  rhomu::FinitePlant pl;
  int n = pick(2, 6), m = pick(1, 2), p = pick(2, 3);
  for (int x = 0; x < n; ++x) pl.states.push_back("s" + std::to_string(x));
  for (int u = 0; u < m; ++u) pl.inputs.push_back("u" + std::to_string(u));
  for (int y = 0; y < p; ++y) pl.outputs.push_back("y" + std::to_string(y));
  pl.next.assign(n, std::vector<int>(m, 0));
  for (int x = 0; x < n; ++x)
    for (int u = 0; u < m; ++u) pl.next[x][u] = pick(0, n - 1);
  for (int x = 0; x < n; ++x) pl.out.push_back(pick(0, p - 1));
  for (int x = 0; x < n; ++x) pl.perf.push_back(rhomu::Rational(pick(0, 2)));
  for (int v = 0; v <= 2; ++v) {
    rhomu::Rational rv(v);
    for (const auto& used : pl.perf)
      if (used == rv) {
        pl.perf_values.push_back(rv);
        pl.mu_values.push_back(rv);
        break;
      }
  }
  for (int x = 0; x < n; ++x) pl.initial_states.push_back(x);
  return pl;
}

// Random non-negative weight tables; mu_delta stays positive definite so the
// gain semantics are the standard ones, rho may contain zeros when allowed
// (that is what produces infinite gains).
inline rhomu::CostWeights random_weights(std::mt19937& rng, int m, int p, bool allow_zero_rho) {
  auto pick = [&rng](int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  };
  rhomu::CostWeights w;
  for (int u = 0; u < m; ++u)
    w.rho.push_back(rhomu::Rational(allow_zero_rho ? pick(0, 2) : pick(1, 2)));
  w.mu_delta.push_back(rhomu::Rational(0));
  for (int d = 1; d < p; ++d) w.mu_delta.push_back(rhomu::Rational(pick(1, 2)));
  return w;
}

}  // namespace oracle
