#include "rhomu/synth.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_map>
#include <utility>

namespace rhomu {

MhatDynamics build_mhat(const Abstraction& m, const Codec& codec) {
  if (codec.p != m.p())
    throw std::invalid_argument("synth: codec alphabet size does not match the machine");
  MhatDynamics dyn;
  dyn.num_states = m.size();
  dyn.num_inputs = m.m();
  dyn.num_disturb = codec.w_count;
  dyn.window = m.window;
  dyn.plant_id = m.plant_id;
  dyn.next.assign(static_cast<size_t>(dyn.num_states) * dyn.num_inputs * dyn.num_disturb, 0);
  for (int q = 0; q < dyn.num_states; ++q) {
    for (int u = 0; u < dyn.num_inputs; ++u) {
      for (int w = 0; w < dyn.num_disturb; ++w) {
        int y = codec.decode(m.g[q], w);
        if (y < 0)
          throw std::invalid_argument("synth: codec cannot decode disturbance " +
                                      std::to_string(w) + " against prediction " +
                                      m.outputs[m.g[q]]);
        dyn.next[(static_cast<size_t>(q) * dyn.num_inputs + u) * dyn.num_disturb + w] =
            m.step(q, u, y);
      }
    }
  }
  return dyn;
}

StageCost build_stage_cost(const Abstraction& m, const FinitePlant& plant,
                           const CostWeights& weights, const Rational& tau,
                           const GainResult& gamma) {
  if (gamma.infinite)
    throw std::domain_error("synth: the approximation-error gain is infinite; no finite "
                            "disturbance budget exists");
  if (!(Rational(0) < tau)) throw std::invalid_argument("synth: tau must be positive");
  weights.validate(m.m(), m.p());

  StageCost sc;
  sc.tau = tau;
  sc.gamma = gamma.gamma;
  sc.rho = weights.rho;
  sc.mu_delta = weights.mu_delta;
  sc.mu_h.reserve(m.size());
  for (int q = 0; q < m.size(); ++q) sc.mu_h.push_back(plant.mu_of(m.h[q]));

  const int mm = m.m();
  const int wc = static_cast<int>(weights.mu_delta.size());
  sc.cost.assign(static_cast<size_t>(m.size()) * mm * wc, Rational(0));
  sc.max_abs = Rational(0);
  for (int q = 0; q < m.size(); ++q) {
    for (int u = 0; u < mm; ++u) {
      for (int w = 0; w < wc; ++w) {
        Rational c = tau * weights.mu_delta[w] - sc.mu_h[q] - tau * sc.gamma * weights.rho[u];
        Rational a = c < Rational(0) ? Rational(0) - c : c;
        if (sc.max_abs < a) sc.max_abs = a;
        sc.cost[(static_cast<size_t>(q) * mm + u) * wc + w] = c;
      }
    }
  }
  return sc;
}

ValueIterationResult value_iteration(const MhatDynamics& dyn, const StageCost& sc) {
  const size_t table = static_cast<size_t>(dyn.num_states) * dyn.num_inputs * dyn.num_disturb;
  if (sc.cost.size() != table)
    throw std::invalid_argument("synth: stage cost table does not match the dynamics");
  const int n = dyn.num_states;

  ValueIterationResult res;
  res.bound = Rational(n + 1) * sc.max_abs;
  res.value.assign(n, Rational(0));

  // One application of the min-max operator to the current table.
  auto backup = [&](const std::vector<Rational>& J, int q) {
    Rational best;
    bool have_best = false;
    for (int u = 0; u < dyn.num_inputs; ++u) {
      Rational worst;
      bool have_worst = false;
      for (int w = 0; w < dyn.num_disturb; ++w) {
        size_t at = (static_cast<size_t>(q) * dyn.num_inputs + u) * dyn.num_disturb + w;
        Rational c = J[dyn.next[at]] - sc.cost[at];
        if (!have_worst || worst < c) {
          worst = c;
          have_worst = true;
        }
      }
      if (!have_best || worst < best) {
        best = worst;
        have_best = true;
      }
    }
    return best < Rational(0) ? Rational(0) : best;
  };

  constexpr int kIterationCap = 1000000;
  for (res.iterations = 0; res.iterations < kIterationCap; ++res.iterations) {
    std::vector<Rational> next(n);
    bool changed = false;
    bool blown = false;
    for (int q = 0; q < n; ++q) {
      next[q] = backup(res.value, q);
      if (next[q] != res.value[q]) changed = true;
      if (res.bound < next[q]) blown = true;
    }
    res.value = std::move(next);
    if (blown) {
      ++res.iterations;
      res.status = IterationStatus::Diverged;
      return res;
    }
    if (!changed) break;
  }
  if (res.iterations >= kIterationCap)
    throw std::runtime_error("synth: value iteration failed to settle");

  // Extract the policy from the fixed point: per state, the first input
  // attaining the min over the adversarial disturbance.
  res.status = IterationStatus::Converged;
  res.policy.assign(n, 0);
  for (int q = 0; q < n; ++q) {
    Rational best;
    int arg = 0;
    for (int u = 0; u < dyn.num_inputs; ++u) {
      Rational worst;
      bool have_worst = false;
      for (int w = 0; w < dyn.num_disturb; ++w) {
        size_t at = (static_cast<size_t>(q) * dyn.num_inputs + u) * dyn.num_disturb + w;
        Rational c = res.value[dyn.next[at]] - sc.cost[at];
        if (!have_worst || worst < c) {
          worst = c;
          have_worst = true;
        }
      }
      if (u == 0 || worst < best) {
        best = worst;
        arg = u;
      }
    }
    res.policy[q] = arg;
  }
  return res;
}

Certificate certify(const MhatDynamics& dyn, const StageCost& sc, const std::vector<int>& policy) {
  if (static_cast<int>(policy.size()) != dyn.num_states)
    throw std::invalid_argument("synth: policy size does not match the dynamics");
  for (int u : policy)
    if (u < 0 || u >= dyn.num_inputs)
      throw std::invalid_argument("synth: policy names an input out of range");

  Certificate cert;
  cert.window = dyn.window;
  cert.tau = sc.tau;
  cert.gamma = sc.gamma;
  cert.policy = policy;

  WeightedGraph g;
  std::vector<Rational> edge_cost;
  for (int q = 0; q < dyn.num_states; ++q) g.add_node("q" + std::to_string(q));
  for (int q = 0; q < dyn.num_states; ++q) {
    int u = policy[q];
    for (int w = 0; w < dyn.num_disturb; ++w) {
      size_t at = (static_cast<size_t>(q) * dyn.num_inputs + u) * dyn.num_disturb + w;
      g.add_edge(q, dyn.next[at], Rational(0), Rational(0), "w" + std::to_string(w));
      edge_cost.push_back(sc.cost[at]);
    }
  }
  g.initial.push_back(kRootState);

  std::vector<int> cycle = find_negative_cycle(g, edge_cost);
  cert.holds = cycle.empty();
  for (int e : cycle) cert.witness_states.push_back(g.edges[e].from);
  return cert;
}

DeploymentReport deploy_and_check(const FinitePlant& plant, const Abstraction& m,
                                  const std::vector<int>& policy, int horizon) {
  if (m.m() != plant.m() || m.p() != plant.p())
    throw std::invalid_argument("synth: machine and plant alphabets do not match");
  if (static_cast<int>(policy.size()) != m.size())
    throw std::invalid_argument("synth: policy size does not match the machine");
  if (horizon < 0) throw std::invalid_argument("synth: horizon must be non-negative");

  DeploymentReport rep;
  rep.horizon = horizon;
  for (int x0 : plant.initial_states) {
    DeploymentRun run;
    run.x0 = x0;

    // The closed loop is deterministic, so the orbit of (plant state, machine
    // state) is a lasso; split it at the first repeated pair.
    std::unordered_map<long long, int> seen;
    std::vector<std::pair<int, int>> orbit;
    int x = x0, q = kRootState;
    for (;;) {
      long long key = static_cast<long long>(x) * m.size() + q;
      auto it = seen.find(key);
      if (it != seen.end()) {
        run.transient_len = it->second;
        run.cycle_len = static_cast<int>(orbit.size()) - it->second;
        break;
      }
      seen.emplace(key, static_cast<int>(orbit.size()));
      orbit.emplace_back(x, q);
      int u = policy[q];
      int y = plant.out[x];
      q = m.step(q, u, y);
      x = plant.next[x][u];
    }

    run.cycle_cost_sum = Rational(0);
    run.cycle_cost_zero = true;
    for (int t = run.transient_len; t < run.transient_len + run.cycle_len; ++t) {
      const Rational& c = plant.mu_of_state(orbit[t].first);
      run.cycle_cost_sum = run.cycle_cost_sum + c;
      if (c != Rational(0)) run.cycle_cost_zero = false;
    }
    if (Rational(0) < run.cycle_cost_sum) rep.bounded = false;
    if (!run.cycle_cost_zero) rep.all_cycles_zero = false;

    // Horizon-long evidence: prefix sums of the running performance cost.
    Rational sum(0);
    run.running_sum.reserve(horizon);
    for (int t = 0; t < horizon; ++t) {
      const auto& at = orbit[t < static_cast<int>(orbit.size())
                                 ? t
                                 : run.transient_len + (t - run.transient_len) % run.cycle_len];
      sum = sum + plant.mu_of_state(at.first);
      run.running_sum.push_back(sum);
    }
    if (!run.running_sum.empty()) {
      int arg_max = 0;
      for (int k = 1; k < horizon; ++k)
        if (run.running_sum[arg_max] < run.running_sum[k]) arg_max = k;
      if (arg_max + 1 > (3 * horizon) / 4) rep.sums_stabilized = false;
    }
    rep.runs.push_back(std::move(run));
  }
  return rep;
}

std::vector<Rational> default_tau_grid() {
  std::vector<Rational> grid;
  for (int k = -6; k <= 6; ++k)
    grid.push_back(k < 0 ? Rational(1, 1ll << -k) : Rational(1ll << k));
  return grid;
}

TauSearchResult search_tau(const Abstraction& m, const FinitePlant& plant,
                           const CostWeights& weights, const GainResult& gamma,
                           const std::vector<Rational>& grid) {
  Codec codec = Codec::minimal(m.p());
  MhatDynamics dyn = build_mhat(m, codec);

  TauSearchResult res;
  for (const Rational& tau : grid) {
    StageCost sc = build_stage_cost(m, plant, weights, tau, gamma);
    ValueIterationResult vi = value_iteration(dyn, sc);
    if (vi.status == IterationStatus::Diverged) {
      res.trials.push_back({tau, "diverged"});
      continue;
    }
    Certificate cert = certify(dyn, sc, vi.policy);
    if (!cert.holds) {
      res.trials.push_back({tau, "certificate failed"});
      continue;
    }
    res.trials.push_back({tau, "converged"});
    res.found = true;
    res.tau = tau;
    res.vi = std::move(vi);
    res.cert = std::move(cert);
    break;
  }
  return res;
}

}  // namespace rhomu
