#pragma once

// Depth-first branch and bound over input instantiations. Every search node
// gets an upper bound from MAP propagation on the join tree; a child is
// pruned when its bound falls below the best complete instantiation found
// so far. Leaves carry exact joint probabilities.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "join_tree.hpp"
#include "model.hpp"
#include "propagation.hpp"

namespace maxerr {

struct MapQuery {
  const ErrorModelNet* net = nullptr;
  const BinaryJoinTree* tree = nullptr;
  Evidence evid_o;               // comparator evidence, typically one O_j = 1
  std::vector<VarId> var_order;  // branching order over the input variables
};

struct MapResult {
  std::vector<bool> i_map;  // in INPUT declaration order
  double p_map = 0.0;       // P(i_map, evid_o)
  std::size_t nodes_expanded = 0;
  std::size_t nodes_pruned = 0;
};

/// A visited or pruned node of the search tree, reported to observers.
struct SearchEvent {
  Evidence partial;  // instantiated inputs
  double bound = 0.0;
  double best_so_far = 0.0;  // negative until a complete instantiation is known
  bool pruned = false;
  bool root_valid = false;  // collect order for the bound had no inversions
};

struct SolveOptions {
  bool prune = true;
  bool seed = true;
  double tolerance = 1e-12;
  std::size_t max_width = kDefaultMaxWidth;
  std::function<void(const SearchEvent&)> observer;
};

/// Inputs by descending number of CPTs that read them; ties by id.
inline std::vector<VarId> var_order_heuristic(const ErrorModelNet& net) {
  std::vector<std::size_t> uses(net.size(), 0);
  for (const auto& cpt : net.cpts)
    for (VarId p : cpt.parents) ++uses[p];
  std::vector<VarId> order = net.input_vars;
  std::stable_sort(order.begin(), order.end(), [&](VarId a, VarId b) {
    if (uses[a] != uses[b]) return uses[a] > uses[b];
    return a < b;
  });
  return order;
}

inline void check_query(const MapQuery& q) {
  if (!q.net || !q.tree) throw std::invalid_argument("MAP query needs a network and a join tree");
  if (q.evid_o.empty()) throw std::invalid_argument("MAP query needs comparator evidence");
  for (auto [v, s] : q.evid_o)
    if (v >= q.net->size() || q.net->vars[v].klass != VarClass::Comparator)
      throw std::invalid_argument("MAP evidence must be on comparator variables");
  auto sorted = q.var_order;
  std::sort(sorted.begin(), sorted.end());
  auto inputs = q.net->input_vars;
  std::sort(inputs.begin(), inputs.end());
  if (sorted != inputs) throw std::invalid_argument("var_order must be a permutation of the inputs");
}

namespace detail {

inline std::vector<bool> to_input_bits(const ErrorModelNet& net, const Evidence& assignment) {
  std::vector<bool> bits;
  for (VarId v : net.input_vars) bits.push_back(assignment.at(v));
  return bits;
}

// Lexicographic comparison of complete assignments read in `order`.
inline bool lex_less(const Evidence& a, const Evidence& b, const std::vector<VarId>& order) {
  for (VarId v : order) {
    bool x = a.at(v), y = b.at(v);
    if (x != y) return !x;
  }
  return false;
}

}  // namespace detail

/// Greedy instantiation followed by single-bit hill climbing. The result's
/// probability is exact, so it is a valid lower bound on the MAP value.
template <class Space = LinearSpace>
std::pair<Evidence, double> seed(Propagator<Space>& prop, const MapQuery& q, double tolerance = 1e-12) {
  Evidence partial;
  for (VarId v : q.var_order) {
    double best = -1.0;
    bool best_state = false;
    for (bool s : {false, true}) {
      partial[v] = s;
      double u = map_upper_bound(prop, partial, q.evid_o, v);
      if (u > best) {
        best = u;
        best_state = s;
      }
    }
    partial[v] = best_state;
  }
  double value = map_upper_bound(prop, partial, q.evid_o);
  for (bool improved = true; improved;) {
    improved = false;
    for (VarId v : q.var_order) {
      partial[v] = !partial[v];
      double candidate = map_upper_bound(prop, partial, q.evid_o, v);
      if (candidate > value + tolerance) {
        value = candidate;
        improved = true;
      } else {
        partial[v] = !partial[v];
      }
    }
  }
  return {partial, value};
}

template <class Space = LinearSpace>
std::pair<Evidence, double> seed(const MapQuery& q) {
  check_query(q);
  Propagator<Space> prop(*q.tree, *q.net);
  return seed(prop, q);
}

namespace detail {

template <class Space>
class BranchAndBound {
 public:
  BranchAndBound(const MapQuery& q, const SolveOptions& opts)
      : q_(q), opts_(opts), prop_(*q.tree, *q.net, opts.max_width) {}

  MapResult run() {
    if (opts_.seed) {
      auto [assignment, value] = seed(prop_, q_, opts_.tolerance);
      best_ = assignment;
      best_value_ = value;
      have_best_ = true;
    }
    Evidence partial;
    const double root_bound = map_upper_bound(prop_, partial, q_.evid_o);
    ++result_.nodes_expanded;
    notify(partial, root_bound, false, std::nullopt);
    descend(partial, 0);
    result_.i_map = to_input_bits(*q_.net, best_);
    result_.p_map = best_value_;
    return result_;
  }

 private:
  void descend(Evidence& partial, std::size_t depth) {
    if (depth == q_.var_order.size()) return;
    const VarId v = q_.var_order[depth];
    double bound[2];
    for (bool s : {false, true}) {
      partial[v] = s;
      bound[s] = map_upper_bound(prop_, partial, q_.evid_o, v);
    }
    const bool first = bound[1] > bound[0];
    for (bool s : {first, !first}) {
      partial[v] = s;
      const double u = bound[s];
      if (opts_.prune && have_best_ && u < best_value_ - opts_.tolerance) {
        ++result_.nodes_pruned;
        notify(partial, u, true, v);
        continue;
      }
      ++result_.nodes_expanded;
      notify(partial, u, false, v);
      if (depth + 1 == q_.var_order.size()) {
        offer(partial, u);
      } else {
        descend(partial, depth + 1);
      }
    }
    partial.erase(v);
  }

  // Leaves: the bound of a complete instantiation is its exact probability.
  void offer(const Evidence& leaf, double value) {
    const bool better = !have_best_ || value > best_value_ + opts_.tolerance;
    const bool tie = have_best_ && !better && value >= best_value_ - opts_.tolerance;
    if (better || (tie && lex_less(leaf, best_, q_.net->input_vars))) {
      best_ = leaf;
      best_value_ = better ? value : std::max(value, best_value_);
      have_best_ = true;
    }
  }

  void notify(const Evidence& partial, double bound, bool pruned, std::optional<VarId> new_var) {
    if (!opts_.observer) return;
    SearchEvent ev;
    ev.partial = partial;
    ev.bound = bound;
    ev.best_so_far = have_best_ ? best_value_ : -1.0;
    ev.pruned = pruned;
    ClusterId root = new_var ? q_.tree->singleton.at(*new_var) : prop_.best_map_root();
    ev.root_valid = root != kNoCluster && prop_.order_inversions(root) == 0;
    opts_.observer(ev);
  }

  const MapQuery& q_;
  const SolveOptions& opts_;
  Propagator<Space> prop_;
  Evidence best_;
  double best_value_ = -1.0;
  bool have_best_ = false;
  MapResult result_;
};

}  // namespace detail

/// Exact MAP instantiation of the inputs given the comparator evidence.
/// Equal optima resolve to the lexicographically smallest vector in INPUT
/// declaration order.
template <class Space = LinearSpace>
MapResult solve(const MapQuery& q, const SolveOptions& opts = {}) {
  check_query(q);
  return detail::BranchAndBound<Space>(q, opts).run();
}

}  // namespace maxerr
