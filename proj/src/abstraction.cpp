#include "rhomu/abstraction.hpp"

#include <algorithm>
#include <deque>
#include <set>
#include <stdexcept>

namespace rhomu {

void Abstraction::rebuild_index() {
  index.clear();
  for (int q = 0; q < size(); ++q)
    if (states[q].kind == StateKind::Partial || states[q].kind == StateKind::Final)
      index.emplace(states[q].snap, q);
}

namespace {

std::vector<int> outputs_of(const FinitePlant& pl, const std::vector<int>& xs) {
  std::set<int> ys;
  for (int x : xs) ys.insert(pl.out[x]);
  return {ys.begin(), ys.end()};
}

// Worst-case performance representative: the h value of the state maximizing
// mu over the candidate set, ties to the smallest state index.
Rational worst_perf(const FinitePlant& pl, const std::vector<int>& xs) {
  int best = xs.front();
  for (int x : xs)
    if (pl.mu_of_state(x) > pl.mu_of_state(best)) best = x;
  return pl.perf[best];
}

Rational best_perf_over_all(const FinitePlant& pl) {
  int best = 0;
  for (int x = 0; x < pl.n(); ++x)
    if (pl.mu_of_state(x) < pl.mu_of_state(best)) best = x;
  return pl.perf[best];
}

Snapshot truncate_oldest(const Snapshot& s) {
  Snapshot t = s;
  t.ys.pop_back();
  t.us.pop_back();
  return t;
}

int choose_output(const FinitePlant& pl, const Abstraction& a, int q, const OutputPolicy& policy) {
  const AbstractState& st = a.states[q];
  if (st.kind == StateKind::Impossible) return 0;  // lexicographic-min of the alphabet
  const std::vector<int>& ys = st.y_set;
  if (ys.empty()) throw std::logic_error("abstraction: non-sink state with empty output set");
  switch (policy.kind) {
    case OutputPolicy::Kind::Lexicographic:
      return ys.front();
    case OutputPolicy::Kind::Assigned: {
      if (st.kind == StateKind::Root) return ys.front();
      auto it = policy.table->find(st.snap);
      if (it == policy.table->end())
        throw std::logic_error("abstraction: assignment table misses state " +
                               snapshot_label(pl, st.snap));
      return it->second;
    }
    case OutputPolicy::Kind::NestedWith: {
      const Abstraction& prev = *policy.previous;
      if (st.kind == StateKind::Root) return prev.g[kRootState];
      // A window the previous level also has keeps its prediction verbatim.
      int same = prev.state_of(st.snap);
      if (same >= 0) return prev.g[same];
      if (ys.size() == 1) return ys.front();
      Snapshot t = truncate_oldest(st.snap);
      int below = prev.state_of(t);
      if (below < 0)
        throw std::logic_error("abstraction: truncation of a feasible window is missing below");
      int y = prev.g[below];
      if (!std::binary_search(ys.begin(), ys.end(), y))
        throw std::invalid_argument(
            "abstraction: nested output choice infeasible at state " +
            snapshot_label(pl, st.snap) + ": inherited prediction '" + pl.outputs[y] +
            "' is outside the state's candidate outputs (the admissible intersection is empty)");
      return y;
    }
  }
  throw std::logic_error("abstraction: unreachable");
}

}  // namespace

Abstraction build_abstraction(const FinitePlant& pl, int window, OutputPolicy policy) {
  if (window < 1) throw std::invalid_argument("abstraction: window must be at least 1");
  Abstraction a;
  a.window = window;
  a.plant_id = plant_digest(pl);
  a.inputs = pl.inputs;
  a.outputs = pl.outputs;

  AbstractState root;
  root.kind = StateKind::Root;
  for (int x = 0; x < pl.n(); ++x) root.x_set.push_back(x);
  root.y_set = outputs_of(pl, root.x_set);
  a.states.push_back(root);

  AbstractState sink;
  sink.kind = StateKind::Impossible;
  a.states.push_back(sink);

  a.rebuild_index();

  const int m = pl.m(), p = pl.p();
  auto ensure_row = [&](int q) {
    if (static_cast<int>(a.next.size()) < (q + 1) * m * p) a.next.resize((q + 1) * m * p, -1);
  };
  ensure_row(kImpossibleState);
  for (int u = 0; u < m; ++u)
    for (int y = 0; y < p; ++y) a.next[(kImpossibleState * m + u) * p + y] = kImpossibleState;

  // Breadth-first materialization; the (u, y) loop order fixes state ids.
  std::deque<int> queue = {kRootState};
  while (!queue.empty()) {
    int q = queue.front();
    queue.pop_front();
    const AbstractState st = a.states[q];  // copy: a.states may reallocate below
    ensure_row(q);
    for (int u = 0; u < m; ++u) {
      for (int y = 0; y < p; ++y) {
        Snapshot c;
        c.ys.push_back(y);
        c.us.push_back(u);
        c.ys.insert(c.ys.end(), st.snap.ys.begin(), st.snap.ys.end());
        c.us.insert(c.us.end(), st.snap.us.begin(), st.snap.us.end());
        if (st.kind == StateKind::Final) {
          c.ys.pop_back();
          c.us.pop_back();
        }
        int target;
        SnapshotStates sss = snapshot_state_set(pl, c);
        if (sss.origin.empty()) {
          target = kImpossibleState;
        } else {
          target = a.state_of(c);
          if (target < 0) {
            AbstractState ns;
            ns.kind = static_cast<int>(c.length()) == window ? StateKind::Final
                                                             : StateKind::Partial;
            ns.snap = c;
            ns.x_set = sss.current;
            ns.y_set = outputs_of(pl, ns.x_set);
            target = a.size();
            a.states.push_back(ns);
            a.index.emplace(c, target);
            queue.push_back(target);
          }
        }
        a.next[(q * m + u) * p + y] = target;
      }
    }
  }

  // Output and performance annotations.
  a.g.resize(a.size());
  a.h.resize(a.size());
  for (int q = 0; q < a.size(); ++q) {
    a.g[q] = choose_output(pl, a, q, policy);
    a.h[q] = a.states[q].kind == StateKind::Impossible ? best_perf_over_all(pl)
                                                       : worst_perf(pl, a.states[q].x_set);
  }
  std::set<Rational> vs;
  for (const auto& v : a.h) vs.insert(v);
  a.v_hat.assign(vs.begin(), vs.end());
  a.output_policy = policy.kind == OutputPolicy::Kind::Lexicographic ? "lexicographic" : "nested";
  return a;
}

StepResult mi_step(const Abstraction& a, int q, int u, int y) {
  if (q < 0 || q >= a.size()) throw std::invalid_argument("mi_step: state index out of range");
  if (u < 0 || u >= a.m()) throw std::invalid_argument("mi_step: input index out of range");
  if (y < 0 || y >= a.p()) throw std::invalid_argument("mi_step: output index out of range");
  StepResult r;
  r.ytilde = a.g[q];
  r.vhat = a.h[q];
  r.q_next = a.step(q, u, y);
  return r;
}

namespace {

std::vector<int> intersect(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

// Checks the cross-level rule on one machine pair: every ambiguous window of
// the higher level predicts what its one-pair-shorter truncation predicts.
bool pair_consistent(const Abstraction& low, const Abstraction& high) {
  for (int q = 0; q < high.size(); ++q) {
    const AbstractState& st = high.states[q];
    if (st.kind != StateKind::Final || st.y_set.size() <= 1) continue;
    int below = low.state_of(truncate_oldest(st.snap));
    if (below < 0 || high.g[q] != low.g[below]) return false;
  }
  return true;
}

}  // namespace

NestedSequence build_nested_sequence(const FinitePlant& pl, int i_max) {
  if (i_max < 1) throw std::invalid_argument("nested sequence: i_max must be at least 1");
  NestedSequence seq;
  seq.report.i_max = i_max;

  // Lexicographic builds give the window universe (the deepest machine holds
  // every feasible window of length 1..i_max as a partial or final state).
  for (int i = 1; i <= i_max; ++i)
    seq.machines.push_back(build_abstraction(pl, i, OutputPolicy::lexicographic()));
  const Abstraction& deep = seq.machines.back();

  // Ambiguous refinements, keyed by the truncated (one pair shorter) window.
  std::unordered_map<Snapshot, std::vector<int>, SnapshotHash> refinements;
  for (int q = 0; q < deep.size(); ++q) {
    const AbstractState& st = deep.states[q];
    if (st.snap.length() < 2 || st.y_set.size() <= 1) continue;
    refinements[truncate_oldest(st.snap)].push_back(q);
  }

  // Admissible sets, longest windows first so refinements are ready.
  std::vector<int> by_depth;
  for (int q = 0; q < deep.size(); ++q)
    if (deep.states[q].kind == StateKind::Partial || deep.states[q].kind == StateKind::Final)
      by_depth.push_back(q);
  std::stable_sort(by_depth.begin(), by_depth.end(), [&](int a, int b) {
    return deep.states[a].snap.length() > deep.states[b].snap.length();
  });
  std::unordered_map<Snapshot, std::vector<int>, SnapshotHash> admissible;
  int failed_at = -1;
  for (int q : by_depth) {
    const AbstractState& st = deep.states[q];
    std::vector<int> adm = st.y_set;
    auto it = refinements.find(st.snap);
    if (it != refinements.end())
      for (int child : it->second) adm = intersect(adm, admissible.at(deep.states[child].snap));
    admissible[st.snap] = adm;
    if (adm.empty() && failed_at < 0) failed_at = q;
  }

  // Report entries in materialization order (deterministic).
  for (int q = 2; q < deep.size(); ++q) {
    const AbstractState& st = deep.states[q];
    seq.report.admissible.push_back({st.snap, admissible.at(st.snap)});
  }

  if (failed_at >= 0) {
    // Witness: the pinched window plus refinements that empty its output set.
    const AbstractState& st = deep.states[failed_at];
    seq.report.failure_chain.push_back(st.snap);
    std::vector<int> running = st.y_set;
    auto it = refinements.find(st.snap);
    if (it != refinements.end()) {
      for (int child : it->second) {
        if (running.empty()) break;
        std::vector<int> cut = intersect(running, admissible.at(deep.states[child].snap));
        if (cut.size() < running.size()) {
          seq.report.failure_chain.push_back(deep.states[child].snap);
          running = cut;
        }
      }
    }
    seq.report.nested = false;
    seq.report.message = "no output choice survives every ambiguous refinement of window " +
                         snapshot_label(pl, st.snap) + "; lexicographic predictions returned";
  } else {
    // Assign predictions: shortest windows first, ambiguous windows inherit.
    std::unordered_map<Snapshot, int, SnapshotHash> chosen;
    for (auto rit = by_depth.rbegin(); rit != by_depth.rend(); ++rit) {
      const AbstractState& st = deep.states[*rit];
      if (st.y_set.size() == 1) {
        chosen[st.snap] = st.y_set.front();
      } else if (st.snap.length() == 1) {
        chosen[st.snap] = admissible.at(st.snap).front();
      } else {
        chosen[st.snap] = chosen.at(truncate_oldest(st.snap));
      }
    }
    seq.machines.clear();
    for (int i = 1; i <= i_max; ++i)
      seq.machines.push_back(build_abstraction(pl, i, OutputPolicy::assigned(chosen)));
    seq.report.nested = true;
    seq.report.message = "consistent predictions assigned across all levels";
  }

  for (size_t k = 0; k + 1 < seq.machines.size(); ++k)
    seq.report.level_consistent.push_back(
        pair_consistent(seq.machines[k], seq.machines[k + 1]));
  return seq;
}

std::string state_label(const Abstraction& a, int q) {
  const AbstractState& st = a.states[q];
  switch (st.kind) {
    case StateKind::Root:
      return "q_o";
    case StateKind::Impossible:
      return "q_empty";
    default: {
      std::string t = "(";
      for (size_t k = 0; k < st.snap.ys.size(); ++k) {
        if (k) t += ",";
        t += a.outputs[st.snap.ys[k]];
      }
      t += ";";
      for (size_t k = 0; k < st.snap.us.size(); ++k) {
        if (k) t += ",";
        t += a.inputs[st.snap.us[k]];
      }
      return t + ")";
    }
  }
}

}  // namespace rhomu
