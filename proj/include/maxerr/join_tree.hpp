#pragma once

// Binary join trees built with the fusion algorithm: variables are
// eliminated in a given order, the clusters holding the eliminated variable
// are merged two at a time (smallest union first), and the residual cluster
// is handed on. Neighbouring duplicate clusters are folded afterwards when
// the merged node keeps at most three neighbours.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "model.hpp"
#include "valuation.hpp"

namespace maxerr {

/// A permutation of all variables where the `map_tail` maximization
/// variables (the inputs) come last.
struct EliminationOrder {
  std::vector<VarId> vars;
  std::size_t map_tail = 0;
};

inline bool is_valid_order(const ErrorModelNet& net, const EliminationOrder& order) {
  if (order.vars.size() != net.size() || order.map_tail != net.input_vars.size()) return false;
  std::vector<bool> seen(net.size(), false);
  for (std::size_t p = 0; p < order.vars.size(); ++p) {
    VarId v = order.vars[p];
    if (v >= net.size() || seen[v]) return false;
    seen[v] = true;
    const bool tail = p >= order.vars.size() - order.map_tail;
    if (tail != net.is_input(v)) return false;
  }
  return true;
}

/// Interaction graph of a set of factor scopes.
class InteractionGraph {
 public:
  InteractionGraph(std::size_t num_vars, const std::vector<std::vector<VarId>>& scopes) : adj_(num_vars) {
    for (const auto& s : scopes)
      for (VarId a : s)
        for (VarId b : s)
          if (a != b) adj_[a].insert(b);
  }

  std::size_t fill_in(VarId v) const {
    std::size_t fill = 0;
    const auto& nb = adj_[v];
    for (auto a = nb.begin(); a != nb.end(); ++a)
      for (auto b = std::next(a); b != nb.end(); ++b)
        if (!adj_[*a].count(*b)) ++fill;
    return fill;
  }

  /// Connects v's neighbours pairwise and removes v. Returns |{v} + neighbours|.
  std::size_t eliminate(VarId v) {
    std::vector<VarId> nb(adj_[v].begin(), adj_[v].end());
    for (VarId a : nb)
      for (VarId b : nb)
        if (a != b) adj_[a].insert(b);
    for (VarId a : nb) adj_[a].erase(v);
    adj_[v].clear();
    return nb.size() + 1;
  }

 private:
  std::vector<std::set<VarId>> adj_;
};

/// Greedy min-fill order over the interaction graph of `scopes`. Variables
/// flagged in `last` are only eliminated once all others are gone. Ties go
/// to the lowest variable id.
inline std::vector<VarId> min_fill_order(std::size_t num_vars, const std::vector<std::vector<VarId>>& scopes,
                                         const std::vector<bool>& last) {
  InteractionGraph graph(num_vars, scopes);
  std::vector<bool> done(num_vars, false);
  std::vector<VarId> order;
  for (int phase = 0; phase < 2; ++phase) {
    const bool want_last = phase == 1;
    std::size_t remaining = 0;
    for (VarId v = 0; v < num_vars; ++v)
      if (last[v] == want_last) ++remaining;
    for (; remaining > 0; --remaining) {
      VarId best = 0;
      std::size_t best_fill = std::numeric_limits<std::size_t>::max();
      for (VarId v = 0; v < num_vars; ++v) {
        if (done[v] || last[v] != want_last) continue;
        std::size_t f = graph.fill_in(v);
        if (f < best_fill) {
          best_fill = f;
          best = v;
        }
      }
      graph.eliminate(best);
      done[best] = true;
      order.push_back(best);
    }
  }
  return order;
}

/// Largest clique (|{v} + later neighbours|) created by eliminating in `order`.
inline std::size_t induced_width(std::size_t num_vars, const std::vector<std::vector<VarId>>& scopes,
                                 const std::vector<VarId>& order) {
  InteractionGraph graph(num_vars, scopes);
  std::size_t width = 0;
  for (VarId v : order) width = std::max(width, graph.eliminate(v));
  return width;
}

inline std::vector<std::vector<VarId>> cpt_scopes(const ErrorModelNet& net) {
  std::vector<std::vector<VarId>> scopes;
  for (const auto& cpt : net.cpts) scopes.push_back(cpt.scope());
  return scopes;
}

/// Min-fill elimination order with all inputs eliminated last.
inline EliminationOrder choose_order(const ErrorModelNet& net) {
  std::vector<bool> last(net.size(), false);
  for (VarId v : net.input_vars) last[v] = true;
  return {min_fill_order(net.size(), cpt_scopes(net), last), net.input_vars.size()};
}

using ClusterId = std::uint32_t;
inline constexpr ClusterId kNoCluster = std::numeric_limits<ClusterId>::max();

struct Cluster {
  ClusterId id = 0;
  std::vector<VarId> scope;          // sorted
  std::vector<VarId> valuations;     // attached CPTs, named by their child variable
  std::vector<ClusterId> neighbors;  // at most three
};

class BinaryJoinTree {
 public:
  std::vector<Cluster> clusters;
  std::vector<std::pair<ClusterId, ClusterId>> edges;
  std::vector<ClusterId> singleton;  // per variable, lowest-id cluster whose scope is exactly {v}
  std::vector<ClusterId> home;       // per CPT (child variable), the cluster it is attached to
  EliminationOrder order;

  std::size_t size() const { return clusters.size(); }

  /// Size Z of the largest cluster.
  std::size_t width() const {
    std::size_t z = 0;
    for (const auto& c : clusters) z = std::max(z, c.scope.size());
    return z;
  }

  bool cluster_contains(ClusterId c, VarId v) const {
    return std::binary_search(clusters[c].scope.begin(), clusters[c].scope.end(), v);
  }
};

namespace detail {

struct BuildNode {
  std::vector<VarId> scope;  // sorted
  std::vector<VarId> valuations;
  std::vector<std::size_t> adj;
  bool alive = true;
};

inline std::vector<VarId> set_union(const std::vector<VarId>& a, const std::vector<VarId>& b) {
  std::vector<VarId> out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

inline void link(std::vector<BuildNode>& nodes, std::size_t a, std::size_t b) {
  nodes[a].adj.push_back(b);
  nodes[b].adj.push_back(a);
}

// Folds neighbouring clusters with identical scopes while the merged node
// stays within three neighbours.
inline void merge_duplicates(std::vector<BuildNode>& nodes) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t a = 0; a < nodes.size(); ++a) {
      if (!nodes[a].alive) continue;
      auto neighbours = nodes[a].adj;
      std::sort(neighbours.begin(), neighbours.end());
      for (std::size_t b : neighbours) {
        if (b <= a || !nodes[b].alive || nodes[a].scope != nodes[b].scope) continue;
        if (nodes[a].adj.size() + nodes[b].adj.size() - 2 > 3) continue;
        for (std::size_t c : nodes[b].adj) {
          if (c == a) continue;
          auto& cadj = nodes[c].adj;
          std::replace(cadj.begin(), cadj.end(), b, a);
          nodes[a].adj.push_back(c);
        }
        nodes[a].adj.erase(std::remove(nodes[a].adj.begin(), nodes[a].adj.end(), b), nodes[a].adj.end());
        nodes[a].valuations.insert(nodes[a].valuations.end(), nodes[b].valuations.begin(),
                                   nodes[b].valuations.end());
        nodes[b].alive = false;
        nodes[b].adj.clear();
        changed = true;
        break;
      }
    }
  }
}

}  // namespace detail

/// Builds a binary join tree for `net`. Every CPT scope and a singleton for
/// each target variable seed the cluster pool. Throws WidthOverflow when the
/// largest cluster exceeds `max_width`.
inline BinaryJoinTree build_tree(const ErrorModelNet& net, const EliminationOrder& order,
                                 const std::vector<VarId>& targets, std::size_t max_width = kDefaultMaxWidth) {
  if (!is_valid_order(net, order)) throw std::invalid_argument("invalid elimination order");
  using detail::BuildNode;
  std::vector<BuildNode> nodes;
  std::vector<std::size_t> pool;  // Γ

  auto add_node = [&](std::vector<VarId> scope) {
    nodes.push_back(BuildNode{std::move(scope), {}, {}, true});
    return nodes.size() - 1;
  };
  auto find_in_pool = [&](const std::vector<VarId>& scope) -> std::size_t {
    for (std::size_t n : pool)
      if (nodes[n].scope == scope) return n;
    return nodes.size();
  };

  for (const auto& cpt : net.cpts) {
    auto scope = cpt.scope();
    std::sort(scope.begin(), scope.end());
    std::size_t n = find_in_pool(scope);
    if (n == nodes.size()) {
      n = add_node(scope);
      pool.push_back(n);
    }
    nodes[n].valuations.push_back(cpt.child);
  }
  std::vector<VarId> sorted_targets = targets;
  std::sort(sorted_targets.begin(), sorted_targets.end());
  sorted_targets.erase(std::unique(sorted_targets.begin(), sorted_targets.end()), sorted_targets.end());
  for (VarId v : sorted_targets) {
    if (v >= net.size()) throw std::invalid_argument("target variable out of range");
    if (find_in_pool({v}) == nodes.size()) pool.push_back(add_node({v}));
  }

  std::size_t remaining = order.vars.size();
  std::size_t last_node = nodes.size();
  for (VarId y : order.vars) {
    std::vector<std::size_t> holders;  // Γ_Y, ascending node id
    for (std::size_t n : pool)
      if (std::binary_search(nodes[n].scope.begin(), nodes[n].scope.end(), y)) holders.push_back(n);
    pool.erase(std::remove_if(pool.begin(), pool.end(),
                              [&](std::size_t n) {
                                return std::binary_search(nodes[n].scope.begin(), nodes[n].scope.end(), y);
                              }),
               pool.end());
    std::sort(holders.begin(), holders.end());
    if (holders.empty()) throw std::logic_error("variable missing from cluster pool");

    while (holders.size() > 1) {
      std::size_t bi = 0, bj = 1, best = std::numeric_limits<std::size_t>::max();
      for (std::size_t i = 0; i < holders.size(); ++i)
        for (std::size_t j = i + 1; j < holders.size(); ++j) {
          std::size_t u = detail::set_union(nodes[holders[i]].scope, nodes[holders[j]].scope).size();
          if (u < best) {
            best = u;
            bi = i;
            bj = j;
          }
        }
      auto merged = detail::set_union(nodes[holders[bi]].scope, nodes[holders[bj]].scope);
      if (merged.size() > max_width) throw WidthOverflow(merged.size(), max_width);
      std::size_t k = add_node(std::move(merged));
      detail::link(nodes, holders[bi], k);
      detail::link(nodes, holders[bj], k);
      holders.erase(holders.begin() + static_cast<std::ptrdiff_t>(bj));
      holders.erase(holders.begin() + static_cast<std::ptrdiff_t>(bi));
      holders.push_back(k);
    }
    std::size_t top = holders.front();
    if (remaining > 1) {
      auto rest = nodes[top].scope;
      rest.erase(std::find(rest.begin(), rest.end(), y));
      std::size_t r = add_node(std::move(rest));
      detail::link(nodes, top, r);
      pool.push_back(r);
    } else {
      last_node = top;
    }
    --remaining;
  }

  // Residual clusters that went empty (disconnected parts of the network)
  // are still in the pool; tie them into the tree.
  std::vector<std::size_t> loose{last_node};
  loose.insert(loose.end(), pool.begin(), pool.end());
  while (loose.size() > 1) {
    std::size_t k = add_node(detail::set_union(nodes[loose[0]].scope, nodes[loose[1]].scope));
    detail::link(nodes, loose[0], k);
    detail::link(nodes, loose[1], k);
    loose.erase(loose.begin(), loose.begin() + 2);
    loose.push_back(k);
  }

  detail::merge_duplicates(nodes);

  BinaryJoinTree tree;
  tree.order = order;
  std::vector<ClusterId> remap(nodes.size(), kNoCluster);
  for (std::size_t n = 0; n < nodes.size(); ++n) {
    if (!nodes[n].alive) continue;
    remap[n] = static_cast<ClusterId>(tree.clusters.size());
    tree.clusters.push_back(Cluster{remap[n], nodes[n].scope, nodes[n].valuations, {}});
  }
  for (std::size_t n = 0; n < nodes.size(); ++n) {
    if (!nodes[n].alive) continue;
    for (std::size_t m : nodes[n].adj) {
      tree.clusters[remap[n]].neighbors.push_back(remap[m]);
      if (n < m) tree.edges.emplace_back(remap[n], remap[m]);
    }
  }
  for (auto& c : tree.clusters) std::sort(c.neighbors.begin(), c.neighbors.end());
  std::sort(tree.edges.begin(), tree.edges.end());

  tree.singleton.assign(net.size(), kNoCluster);
  tree.home.assign(net.size(), kNoCluster);
  for (const auto& c : tree.clusters) {
    if (c.scope.size() == 1 && tree.singleton[c.scope[0]] == kNoCluster) tree.singleton[c.scope[0]] = c.id;
    for (VarId cpt : c.valuations) tree.home[cpt] = c.id;
  }
  return tree;
}

/// Tree with singleton clusters for every variable.
inline BinaryJoinTree build_tree(const ErrorModelNet& net, std::size_t max_width = kDefaultMaxWidth) {
  std::vector<VarId> all(net.size());
  for (VarId v = 0; v < net.size(); ++v) all[v] = v;
  return build_tree(net, choose_order(net), all, max_width);
}

/// Structural checks; returns a description of every violation found.
inline std::vector<std::string> validate_tree(const BinaryJoinTree& tree, const ErrorModelNet& net,
                                              const std::vector<VarId>& targets = {}) {
  std::vector<std::string> problems;
  const std::size_t n = tree.size();
  if (n == 0) return {"tree has no clusters"};
  if (tree.edges.size() != n - 1) problems.push_back("edge count is not clusters - 1");
  for (const auto& c : tree.clusters)
    if (c.neighbors.size() > 3)
      problems.push_back("cluster " + std::to_string(c.id) + " has " + std::to_string(c.neighbors.size()) +
                         " neighbours");

  std::vector<bool> reached(n, false);
  std::deque<ClusterId> queue{0};
  reached[0] = true;
  std::size_t count = 0;
  while (!queue.empty()) {
    ClusterId c = queue.front();
    queue.pop_front();
    ++count;
    for (ClusterId m : tree.clusters[c].neighbors)
      if (!reached[m]) {
        reached[m] = true;
        queue.push_back(m);
      }
  }
  if (count != n) problems.push_back("tree is not connected");

  // Running intersection: clusters holding v induce a connected subtree.
  for (VarId v = 0; v < net.size(); ++v) {
    std::vector<ClusterId> holders;
    for (const auto& c : tree.clusters)
      if (tree.cluster_contains(c.id, v)) holders.push_back(c.id);
    if (holders.empty()) {
      problems.push_back("variable " + net.vars[v].name + " is in no cluster");
      continue;
    }
    std::vector<bool> seen(n, false);
    std::deque<ClusterId> q{holders.front()};
    seen[holders.front()] = true;
    std::size_t got = 0;
    while (!q.empty()) {
      ClusterId c = q.front();
      q.pop_front();
      ++got;
      for (ClusterId m : tree.clusters[c].neighbors)
        if (!seen[m] && tree.cluster_contains(m, v)) {
          seen[m] = true;
          q.push_back(m);
        }
    }
    if (got != holders.size()) problems.push_back("running intersection fails for " + net.vars[v].name);
  }

  std::vector<int> attached(net.size(), 0);
  for (const auto& c : tree.clusters)
    for (VarId cpt : c.valuations) {
      ++attached[cpt];
      for (VarId s : net.cpts[cpt].scope())
        if (!tree.cluster_contains(c.id, s))
          problems.push_back("CPT of " + net.vars[cpt].name + " attached to cluster " + std::to_string(c.id) +
                             " without " + net.vars[s].name);
    }
  for (VarId v = 0; v < net.size(); ++v)
    if (attached[v] != 1)
      problems.push_back("CPT of " + net.vars[v].name + " attached " + std::to_string(attached[v]) + " times");

  for (VarId v : targets)
    if (v >= tree.singleton.size() || tree.singleton[v] == kNoCluster)
      problems.push_back("no singleton cluster for " + net.vars[v].name);
  return problems;
}

inline std::string dump_tree(const BinaryJoinTree& tree, const ErrorModelNet& net) {
  std::ostringstream os;
  os << "join tree: " << tree.size() << " clusters, " << tree.edges.size() << " edges, Z = " << tree.width()
     << "\n";
  os << "elimination order:";
  for (VarId v : tree.order.vars) os << ' ' << net.vars[v].name;
  os << "\n";
  for (const auto& c : tree.clusters) {
    os << "C" << c.id << " {";
    for (std::size_t i = 0; i < c.scope.size(); ++i) os << (i ? "," : "") << net.vars[c.scope[i]].name;
    os << "}";
    if (!c.valuations.empty()) {
      os << " phi:";
      for (VarId v : c.valuations) os << ' ' << net.vars[v].name;
    }
    os << " ->";
    for (ClusterId m : c.neighbors) os << " C" << m;
    os << "\n";
  }
  return os.str();
}

}  // namespace maxerr
