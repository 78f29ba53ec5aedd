#pragma once

// Dense valuations over binary variables with combination and sum/max
// marginalization. Tables are indexed by packed assignment with the first
// scope variable as the most significant bit.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "model.hpp"

namespace maxerr {

/// Plain probabilities.
struct LinearSpace {
  using value_type = double;
  static constexpr double zero() { return 0.0; }
  static constexpr double one() { return 1.0; }
  static double mul(double a, double b) { return a * b; }
  static double add(double a, double b) { return a + b; }
  static double from_prob(double p) { return p; }
  static double to_prob(double v) { return v; }
};

/// Natural-log probabilities, for networks deep enough to underflow doubles.
struct LogSpace {
  using value_type = double;
  static constexpr double zero() { return -std::numeric_limits<double>::infinity(); }
  static constexpr double one() { return 0.0; }
  static double mul(double a, double b) { return a + b; }
  static double add(double a, double b) {
    if (a == zero()) return b;
    if (b == zero()) return a;
    double hi = std::max(a, b), lo = std::min(a, b);
    return hi + std::log1p(std::exp(lo - hi));
  }
  static double from_prob(double p) { return p > 0.0 ? std::log(p) : zero(); }
  static double to_prob(double v) { return std::exp(v); }
};

inline constexpr std::size_t kDefaultMaxWidth = 25;

/// Raised when a combination would exceed the configured scope width.
class WidthOverflow : public std::runtime_error {
 public:
  WidthOverflow(std::size_t width, std::size_t limit)
      : std::runtime_error("clique of " + std::to_string(width) + " variables exceeds width limit " +
                           std::to_string(limit)),
        width_(width) {}
  std::size_t width() const { return width_; }

 private:
  std::size_t width_;
};

template <class Space = LinearSpace>
class BasicValuation {
 public:
  using value_type = typename Space::value_type;

  /// Unit valuation: empty scope, value one.
  BasicValuation() : table_{Space::one()} {}

  BasicValuation(std::vector<VarId> scope, std::vector<value_type> table)
      : scope_(std::move(scope)), table_(std::move(table)) {
    if (table_.size() != (std::size_t{1} << scope_.size()))
      throw std::invalid_argument("valuation table size does not match scope");
    auto sorted = scope_;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw std::invalid_argument("valuation scope repeats a variable");
  }

  /// Valuation of a CPT over (child, parents...).
  static BasicValuation from_cpt(const Cpt& cpt) {
    std::vector<value_type> t(cpt.table.size());
    std::transform(cpt.table.begin(), cpt.table.end(), t.begin(), Space::from_prob);
    return BasicValuation(cpt.scope(), std::move(t));
  }

  /// Indicator of `v = state`.
  static BasicValuation indicator(VarId v, bool state) {
    return BasicValuation({v}, state ? std::vector<value_type>{Space::zero(), Space::one()}
                                     : std::vector<value_type>{Space::one(), Space::zero()});
  }

  const std::vector<VarId>& scope() const { return scope_; }
  const std::vector<value_type>& table() const { return table_; }
  std::size_t width() const { return scope_.size(); }
  bool contains(VarId v) const { return std::find(scope_.begin(), scope_.end(), v) != scope_.end(); }

  value_type at(std::uint64_t index) const { return table_[index]; }

  /// Value under a (possibly larger) assignment map.
  value_type at(const std::map<VarId, bool>& assignment) const {
    std::uint64_t idx = 0;
    for (VarId v : scope_) idx = (idx << 1) | std::uint64_t{assignment.at(v)};
    return table_[idx];
  }

  /// Sum of all cells, as a probability.
  double total() const {
    value_type acc = Space::zero();
    for (auto x : table_) acc = Space::add(acc, x);
    return Space::to_prob(acc);
  }

 private:
  std::vector<VarId> scope_;
  std::vector<value_type> table_;
};

using Valuation = BasicValuation<LinearSpace>;

namespace detail {

// Walks all assignments of `scope` while tracking, for each projection
// target, the packed index of the restricted assignment.
class ProjectionWalker {
 public:
  ProjectionWalker(const std::vector<VarId>& scope, const std::vector<const std::vector<VarId>*>& targets)
      : n_(scope.size()), strides_(targets.size(), std::vector<std::uint64_t>(scope.size(), 0)),
        index_(targets.size(), 0) {
    for (std::size_t t = 0; t < targets.size(); ++t) {
      const auto& ts = *targets[t];
      for (std::size_t p = 0; p < n_; ++p) {
        auto it = std::find(ts.begin(), ts.end(), scope[p]);
        if (it != ts.end()) {
          auto pos = static_cast<std::size_t>(it - ts.begin());
          strides_[t][p] = std::uint64_t{1} << (ts.size() - 1 - pos);
        }
      }
    }
  }

  std::uint64_t index(std::size_t t) const { return index_[t]; }

  // Advance from assignment `cell` to `cell + 1`.
  void step(std::uint64_t cell) {
    // Bits from the least significant position flip: trailing ones clear, next zero sets.
    for (std::size_t bit = 0; bit < n_; ++bit) {
      const std::size_t p = n_ - 1 - bit;
      const bool was_set = (cell >> bit) & 1U;
      for (std::size_t t = 0; t < index_.size(); ++t) {
        if (was_set) index_[t] -= strides_[t][p];
        else index_[t] += strides_[t][p];
      }
      if (!was_set) break;
    }
  }

 private:
  std::size_t n_;
  std::vector<std::vector<std::uint64_t>> strides_;
  std::vector<std::uint64_t> index_;
};

}  // namespace detail

/// Pointwise product over the union of scopes. The result scope is a's
/// scope followed by the variables only b has.
template <class Space>
BasicValuation<Space> combine(const BasicValuation<Space>& a, const BasicValuation<Space>& b,
                              std::size_t max_width = kDefaultMaxWidth) {
  std::vector<VarId> scope = a.scope();
  for (VarId v : b.scope())
    if (!a.contains(v)) scope.push_back(v);
  if (scope.size() > max_width) throw WidthOverflow(scope.size(), max_width);
  const std::uint64_t cells = std::uint64_t{1} << scope.size();
  std::vector<typename Space::value_type> table(cells);
  detail::ProjectionWalker walk(scope, {&a.scope(), &b.scope()});
  for (std::uint64_t cell = 0; cell < cells; ++cell) {
    table[cell] = Space::mul(a.at(walk.index(0)), b.at(walk.index(1)));
    if (cell + 1 < cells) walk.step(cell);
  }
  return BasicValuation<Space>(std::move(scope), std::move(table));
}

namespace detail {

template <class Space>
std::vector<VarId> kept_scope(const BasicValuation<Space>& v, const std::vector<VarId>& drop) {
  std::vector<VarId> kept;
  for (VarId x : v.scope())
    if (std::find(drop.begin(), drop.end(), x) == drop.end()) kept.push_back(x);
  return kept;
}

}  // namespace detail

/// Sums out `drop` (variables absent from the scope are ignored).
template <class Space>
BasicValuation<Space> marg_sum(const BasicValuation<Space>& v, const std::vector<VarId>& drop) {
  std::vector<VarId> kept = detail::kept_scope(v, drop);
  if (kept.size() == v.width()) return v;
  std::vector<typename Space::value_type> table(std::size_t{1} << kept.size(), Space::zero());
  const std::uint64_t cells = v.table().size();
  detail::ProjectionWalker walk(v.scope(), {&kept});
  for (std::uint64_t cell = 0; cell < cells; ++cell) {
    auto& slot = table[walk.index(0)];
    slot = Space::add(slot, v.at(cell));
    if (cell + 1 < cells) walk.step(cell);
  }
  return BasicValuation<Space>(std::move(kept), std::move(table));
}

/// Result of max-marginalization: the maxima plus, for every kept cell, the
/// packed assignment of the dropped variables (in `dropped` order) that
/// attains it. Ties go to the lexicographically smallest assignment.
template <class Space>
struct MaxMarginal {
  BasicValuation<Space> value;
  std::vector<VarId> dropped;
  std::vector<std::uint64_t> witness;
};

template <class Space>
MaxMarginal<Space> marg_max(const BasicValuation<Space>& v, const std::vector<VarId>& drop) {
  std::vector<VarId> kept = detail::kept_scope(v, drop);
  std::vector<VarId> dropped;
  for (VarId x : v.scope())
    if (std::find(drop.begin(), drop.end(), x) != drop.end()) dropped.push_back(x);
  const std::size_t out_cells = std::size_t{1} << kept.size();
  std::vector<typename Space::value_type> table(out_cells, Space::zero());
  std::vector<std::uint64_t> witness(out_cells, 0);
  std::vector<bool> seen(out_cells, false);
  const std::uint64_t cells = v.table().size();
  detail::ProjectionWalker walk(v.scope(), {&kept, &dropped});
  for (std::uint64_t cell = 0; cell < cells; ++cell) {
    const auto k = walk.index(0);
    const auto x = v.at(cell);
    if (!seen[k] || x > table[k] || (x == table[k] && walk.index(1) < witness[k])) {
      table[k] = x;
      witness[k] = walk.index(1);
      seen[k] = true;
    }
    if (cell + 1 < cells) walk.step(cell);
  }
  return {BasicValuation<Space>(std::move(kept), std::move(table)), std::move(dropped), std::move(witness)};
}

/// Sums out `sum_vars`, then maximizes out `max_vars`.
template <class Space>
BasicValuation<Space> marg_sum_then_max(const BasicValuation<Space>& v, const std::vector<VarId>& sum_vars,
                                        const std::vector<VarId>& max_vars) {
  auto s = marg_sum(v, sum_vars);
  if (max_vars.empty()) return s;
  return marg_max(s, max_vars).value;
}

/// The same valuation with its scope reordered to `scope` (a permutation).
template <class Space>
BasicValuation<Space> reorder(const BasicValuation<Space>& v, const std::vector<VarId>& scope) {
  if (scope.size() != v.width()) throw std::invalid_argument("reorder: not a permutation");
  std::vector<typename Space::value_type> table(v.table().size());
  detail::ProjectionWalker walk(scope, {&v.scope()});
  for (std::uint64_t cell = 0; cell < table.size(); ++cell) {
    table[cell] = v.at(walk.index(0));
    if (cell + 1 < table.size()) walk.step(cell);
  }
  return BasicValuation<Space>(scope, std::move(table));
}

}  // namespace maxerr
