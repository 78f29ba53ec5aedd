#pragma once

// Shenoy-Shafer propagation on a binary join tree. Messages toward a chosen
// root are computed as the combination of the sender's valuations with all
// other incoming messages, marginalized onto the separator. Both directions
// of every edge are cached; a cached message is dropped only when evidence
// attached on its sending side changes.
//
// In MAP mode, unevidenced input variables are maximized and everything else
// is summed (sums before maxima inside a message). When a maximization
// happens below a summation of the same branch, the result is an upper bound
// rather than the exact MAP value.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "join_tree.hpp"
#include "model.hpp"
#include "valuation.hpp"

namespace maxerr {

enum class Marginalization { Sum, Map };

/// Hard evidence: variable -> state.
using Evidence = std::map<VarId, bool>;

struct PropagationStats {
  std::size_t messages_computed = 0;
  std::size_t messages_reused = 0;
};

/// Per-query propagation state over a shared, immutable tree. Not
/// thread-safe; use one Propagator per concurrent query.
template <class Space = LinearSpace>
class Propagator {
 public:
  using Val = BasicValuation<Space>;

  Propagator(const BinaryJoinTree& tree, const ErrorModelNet& net, std::size_t max_width = kDefaultMaxWidth)
      : tree_(&tree), net_(&net), max_width_(max_width), state_(net.size(), -1) {
    if (tree.home.size() != net.size()) throw std::invalid_argument("tree was built for a different network");
    const std::size_t n = tree.size();
    potential_.resize(n);
    for (const auto& c : tree.clusters)
      for (VarId cpt : c.valuations)
        potential_[c.id] = combine(potential_[c.id], Val::from_cpt(net.cpts[cpt]), max_width_);

    evidence_site_.assign(net.size(), kNoCluster);
    for (VarId v = 0; v < net.size(); ++v) {
      ClusterId s = tree.singleton[v];
      if (s == kNoCluster) {
        for (const auto& c : tree.clusters)
          if (tree.cluster_contains(c.id, v) && (s == kNoCluster || c.scope.size() < tree.clusters[s].scope.size()))
            s = c.id;
      }
      evidence_site_[v] = s;
    }
    // Directed edge slots: 2e is first -> second, 2e + 1 the reverse.
    edge_index_.assign(n, {});
    for (std::size_t e = 0; e < tree.edges.size(); ++e) {
      auto [a, b] = tree.edges[e];
      edge_index_[a].emplace_back(b, 2 * e);
      edge_index_[b].emplace_back(a, 2 * e + 1);
    }
    for (auto& store : store_) store.assign(2 * tree.edges.size(), Slot{});
  }

  const BinaryJoinTree& tree() const { return *tree_; }
  const ErrorModelNet& net() const { return *net_; }
  const PropagationStats& stats() const { return stats_; }
  const std::vector<std::int8_t>& evidence_state() const { return state_; }

  /// Replaces the evidence, invalidating only messages whose sending side
  /// holds a variable whose evidence changed.
  void set_evidence(const Evidence& evidence) {
    std::vector<std::int8_t> next(net_->size(), -1);
    for (auto [v, s] : evidence) {
      if (v >= net_->size()) throw std::out_of_range("evidence on unknown variable");
      next[v] = s ? 1 : 0;
    }
    for (VarId v = 0; v < net_->size(); ++v)
      if (next[v] != state_[v]) invalidate_from(evidence_site_[v]);
    state_ = std::move(next);
  }

  void clear_evidence() { set_evidence({}); }

  /// Drops every cached message.
  void reset_cache() {
    for (auto& store : store_)
      for (auto& slot : store) slot.valid = false;
  }

  /// Collects messages toward `root` and returns the root belief: the
  /// combination of its valuations, its evidence and all incoming messages.
  Val propagate(ClusterId root, Marginalization mode = Marginalization::Sum) {
    if (root >= tree_->size()) throw std::out_of_range("no such cluster");
    auto parent = rooted(root);
    for (auto it = bfs_.rbegin(); it != bfs_.rend(); ++it) {
      ClusterId u = *it;
      if (u != root) message(u, parent[u], mode);
    }
    return gather(root, kNoCluster, mode);
  }

  /// P(e) computed at `root` (any cluster gives the same value).
  double prob_evidence(ClusterId root) { return propagate(root).total(); }

  double prob_evidence() {
    ClusterId root = net_->comparator_vars.empty() ? 0 : tree_->singleton[net_->comparator_vars.front()];
    return prob_evidence(root == kNoCluster ? 0 : root);
  }

  /// P(v = 0, e) and P(v = 1, e).
  std::pair<double, double> joint_marginal(VarId v) {
    ClusterId root = evidence_site_.at(v);
    Val belief = marg_sum(propagate(root), others(root, v));
    if (belief.width() == 0) return {0.0, 0.0};
    return {Space::to_prob(belief.at(0)), Space::to_prob(belief.at(1))};
  }

  /// MAP value of the current evidence computed toward `root`: an upper
  /// bound on max over unevidenced inputs of P(inputs, e), exact when no
  /// maximization precedes a summation along the collect order.
  double map_bound(ClusterId root) {
    Val belief = propagate(root, Marginalization::Map);
    auto [sum_vars, max_vars] = split(belief.scope());
    auto v = marg_sum_then_max(belief, sum_vars, max_vars);
    return Space::to_prob(v.at(0));
  }

  /// Number of (maximized, summed) variable pairs where the maximized one is
  /// eliminated strictly below the summed one on the collect toward `root`.
  /// Zero means the collect order is a valid MAP elimination order.
  std::size_t order_inversions(ClusterId root) {
    auto parent = rooted(root);
    const std::size_t n = tree_->size();
    std::vector<std::size_t> depth(n, 0);
    for (ClusterId u : bfs_)
      if (u != root) depth[u] = depth[parent[u]] + 1;
    // A variable is eliminated at the holder closest to the root.
    std::vector<ClusterId> elim(net_->size(), kNoCluster);
    for (ClusterId u : bfs_)
      for (VarId v : tree_->clusters[u].scope)
        if (elim[v] == kNoCluster) elim[v] = u;
    std::vector<std::size_t> sums_at(n, 0);
    std::vector<VarId> maxed;
    for (VarId v = 0; v < net_->size(); ++v) {
      if (elim[v] == kNoCluster || state_[v] >= 0) continue;
      if (net_->is_input(v)) maxed.push_back(v);
      else ++sums_at[elim[v]];
    }
    std::size_t inversions = 0;
    for (VarId v : maxed)
      for (ClusterId u = elim[v]; u != root;) {
        u = parent[u];
        inversions += sums_at[u];
      }
    return inversions;
  }

  /// Singleton cluster with the fewest order inversions (lowest id on ties).
  ClusterId best_map_root() {
    ClusterId best = kNoCluster;
    std::size_t best_inv = 0;
    for (const auto& c : tree_->clusters) {
      if (c.scope.size() != 1) continue;
      std::size_t inv = order_inversions(c.id);
      if (best == kNoCluster || inv < best_inv) {
        best = c.id;
        best_inv = inv;
      }
    }
    return best == kNoCluster ? 0 : best;
  }

 private:
  struct Slot {
    bool valid = false;
    Val message;
  };

  // Parent pointers for the tree rooted at `root`; fills bfs_ in BFS order.
  std::vector<ClusterId> rooted(ClusterId root) {
    std::vector<ClusterId> parent(tree_->size(), kNoCluster);
    bfs_.clear();
    bfs_.push_back(root);
    parent[root] = root;
    for (std::size_t i = 0; i < bfs_.size(); ++i) {
      ClusterId u = bfs_[i];
      for (ClusterId m : tree_->clusters[u].neighbors)
        if (parent[m] == kNoCluster) {
          parent[m] = u;
          bfs_.push_back(m);
        }
    }
    return parent;
  }

  std::size_t slot_of(ClusterId from, ClusterId to) const {
    for (auto [m, slot] : edge_index_[from])
      if (m == to) return slot;
    throw std::logic_error("clusters are not adjacent");
  }

  // Marks every message directed away from `site` as stale.
  void invalidate_from(ClusterId site) {
    if (site == kNoCluster) return;
    std::deque<std::pair<ClusterId, ClusterId>> queue{{site, kNoCluster}};
    while (!queue.empty()) {
      auto [u, from] = queue.front();
      queue.pop_front();
      for (auto [m, slot] : edge_index_[u]) {
        if (m == from) continue;
        for (auto& store : store_) store[slot].valid = false;
        queue.emplace_back(m, u);
      }
    }
  }

  // Belief of cluster u excluding the message from `skip`.
  Val gather(ClusterId u, ClusterId skip, Marginalization mode) {
    Val acc = potential_[u];
    for (VarId v : tree_->clusters[u].scope)
      if (state_[v] >= 0 && evidence_site_[v] == u) acc = combine(acc, Val::indicator(v, state_[v] == 1), max_width_);
    for (auto [m, slot] : edge_index_[u]) {
      if (m == skip) continue;
      const auto& s = store_[static_cast<int>(mode)][slot_of(m, u)];
      if (!s.valid) throw std::logic_error("message requested before its inputs");
      acc = combine(acc, s.message, max_width_);
    }
    return acc;
  }

  void message(ClusterId from, ClusterId to, Marginalization mode) {
    auto& slot = store_[static_cast<int>(mode)][slot_of(from, to)];
    if (slot.valid) {
      ++stats_.messages_reused;
      return;
    }
    Val acc = gather(from, to, mode);
    std::vector<VarId> drop;
    for (VarId v : acc.scope())
      if (!tree_->cluster_contains(to, v)) drop.push_back(v);
    if (mode == Marginalization::Sum) {
      slot.message = marg_sum(acc, drop);
    } else {
      auto [sum_vars, max_vars] = split(drop);
      slot.message = marg_sum_then_max(acc, sum_vars, max_vars);
    }
    slot.valid = true;
    ++stats_.messages_computed;
  }

  // Partition into (summed, maximized) for MAP marginalization.
  std::pair<std::vector<VarId>, std::vector<VarId>> split(const std::vector<VarId>& vars) const {
    std::vector<VarId> sum_vars, max_vars;
    for (VarId v : vars) (net_->is_input(v) && state_[v] < 0 ? max_vars : sum_vars).push_back(v);
    return {sum_vars, max_vars};
  }

  std::vector<VarId> others(ClusterId c, VarId keep) const {
    std::vector<VarId> out;
    for (VarId v : tree_->clusters[c].scope)
      if (v != keep) out.push_back(v);
    return out;
  }

  const BinaryJoinTree* tree_;
  const ErrorModelNet* net_;
  std::size_t max_width_;
  std::vector<Val> potential_;
  std::vector<ClusterId> evidence_site_;
  std::vector<std::vector<std::pair<ClusterId, std::size_t>>> edge_index_;
  std::vector<Slot> store_[2];
  std::vector<std::int8_t> state_;
  std::vector<ClusterId> bfs_;
  PropagationStats stats_;
};

/// One-shot collect toward `root` with a fresh message store.
template <class Space = LinearSpace>
BasicValuation<Space> propagate(const BinaryJoinTree& tree, const ErrorModelNet& net, const Evidence& evidence,
                                ClusterId root) {
  Propagator<Space> p(tree, net);
  p.set_evidence(evidence);
  return p.propagate(root);
}

template <class Space = LinearSpace>
double prob_evidence(const BinaryJoinTree& tree, const ErrorModelNet& net, const Evidence& evidence) {
  Propagator<Space> p(tree, net);
  p.set_evidence(evidence);
  return p.prob_evidence();
}

/// Upper bound on max over completions of `partial` of P(inputs, evid_o).
/// The root is the singleton cluster of `new_var` when given, otherwise the
/// singleton whose collect order has the fewest max-before-sum inversions.
template <class Space>
double map_upper_bound(Propagator<Space>& prop, const Evidence& partial, const Evidence& evid_o,
                       std::optional<VarId> new_var = std::nullopt) {
  Evidence all = evid_o;
  all.insert(partial.begin(), partial.end());
  prop.set_evidence(all);
  ClusterId root = kNoCluster;
  if (new_var) root = prop.tree().singleton.at(*new_var);
  if (root == kNoCluster) root = prop.best_map_root();
  return prop.map_bound(root);
}

/// P(O_j = 1 | inputs) for every comparator, with the inputs instantiated.
template <class Space>
std::vector<double> conditional_errors(Propagator<Space>& prop, const std::vector<bool>& inputs) {
  const auto& net = prop.net();
  if (inputs.size() != net.input_vars.size()) throw std::invalid_argument("wrong input vector length");
  Evidence e;
  for (std::size_t i = 0; i < inputs.size(); ++i) e[net.input_vars[i]] = inputs[i];
  prop.set_evidence(e);
  std::vector<double> out;
  for (VarId o : net.comparator_vars) {
    auto [p0, p1] = prop.joint_marginal(o);
    const double pe = p0 + p1;
    out.push_back(pe > 0.0 ? p1 / pe : 0.0);
  }
  return out;
}

}  // namespace maxerr
