#include <gtest/gtest.h>

#include <algorithm>

#include "fixtures.hpp"

using namespace maxerr;

namespace {

VarId var(const ErrorModelNet& net, const std::string& name) {
  for (const auto& v : net.vars)
    if (v.name == name) return v.id;
  throw std::out_of_range(name);
}

ClusterId find_cluster(const BinaryJoinTree& t, std::vector<VarId> scope) {
  std::sort(scope.begin(), scope.end());
  for (const auto& c : t.clusters)
    if (c.scope == scope) return c.id;
  return kNoCluster;
}

bool adjacent(const BinaryJoinTree& t, ClusterId a, ClusterId b) {
  const auto& n = t.clusters[a].neighbors;
  return std::find(n.begin(), n.end(), b) != n.end();
}

}  // namespace

TEST(Order, InputsLast) {
  auto net = build_error_model(fixtures::fig1(), 0.1);
  auto order = choose_order(net);
  ASSERT_EQ(order.vars.size(), net.size());
  EXPECT_EQ(order.map_tail, 3u);
  for (std::size_t p = net.size() - 3; p < net.size(); ++p) EXPECT_TRUE(net.is_input(order.vars[p]));
  EXPECT_TRUE(is_valid_order(net, order));
}

TEST(Order, FigureOrderIsValid) {
  auto net = build_error_model(fixtures::fig1(), 0.1);
  EliminationOrder o;
  for (const char* n : {"err(x3)", "x3", "x3*", "x1", "x2", "x1*", "x2*", "c", "b", "a"}) o.vars.push_back(var(net, n));
  o.map_tail = 3;
  EXPECT_TRUE(is_valid_order(net, o));
  std::swap(o.vars[6], o.vars[7]);
  EXPECT_FALSE(is_valid_order(net, o));
}

TEST(Order, ChainHasWidthTwo) {
  auto c = parse_bench("INPUT(a)\nOUTPUT(g4)\ng0 = NOT(a)\ng1 = NOT(g0)\ng2 = NOT(g1)\ng3 = NOT(g2)\ng4 = NOT(g3)\n");
  auto scopes = std::vector<std::vector<VarId>>{{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 6}, {6, 7}};
  std::vector<bool> last(8, false);
  auto order = min_fill_order(8, scopes, last);
  EXPECT_EQ(induced_width(8, scopes, order), 2u);
  (void)c;
}

TEST(Order, MinFillMatchesExhaustiveOnSmallGraphs) {
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    std::mt19937_64 rng(seed);
    const std::size_t n = 7;
    std::vector<std::vector<VarId>> scopes;
    for (int e = 0; e < 8; ++e) {
      VarId a = rng() % n, b = rng() % n;
      if (a != b) scopes.push_back({a, b});
    }
    std::vector<bool> last(n, false);
    auto heuristic = induced_width(n, scopes, min_fill_order(n, scopes, last));
    std::vector<VarId> perm(n);
    for (VarId i = 0; i < n; ++i) perm[i] = i;
    std::size_t best = n + 1;
    do best = std::min(best, induced_width(n, scopes, perm));
    while (std::next_permutation(perm.begin(), perm.end()));
    // min-fill is a heuristic; on these sparse graphs it stays within one of optimal
    EXPECT_LE(heuristic, best + 1) << "seed " << seed;
  }
}

TEST(Tree, SingleGateFigure) {
  // I1, I2 -> X1 (ideal AND), X2 (faulty AND) -> O1
  auto c = parse_bench("INPUT(I1)\nINPUT(I2)\nOUTPUT(X1)\nX1 = AND(I1, I2)\n");
  auto net = build_error_model(c, 0.1);
  auto tree = build_tree(net);
  EXPECT_TRUE(validate_tree(tree, net, fixtures::all_vars(net)).empty());
  const VarId i1 = var(net, "I1"), i2 = var(net, "I2"), x1 = var(net, "X1"), x2 = var(net, "X1*"),
              o1 = var(net, "err(X1)");
  ASSERT_NE(tree.singleton[i1], kNoCluster);
  ASSERT_NE(tree.singleton[o1], kNoCluster);
  ClusterId pair = find_cluster(tree, {i1, i2});
  ASSERT_NE(pair, kNoCluster);
  EXPECT_TRUE(adjacent(tree, tree.singleton[i1], pair));
  ClusterId cmp = find_cluster(tree, {o1, x1, x2});
  ASSERT_NE(cmp, kNoCluster);
  EXPECT_TRUE(adjacent(tree, tree.singleton[o1], cmp));
  EXPECT_EQ(tree.home[o1], cmp);
  for (const auto& cl : tree.clusters) EXPECT_LE(cl.neighbors.size(), 3u);
}

TEST(Tree, C17) {
  for (auto c : {fixtures::c17(), fixtures::c17_branches()}) {
    auto net = build_error_model(c, 0.05);
    auto tree = build_tree(net);
    EXPECT_TRUE(validate_tree(tree, net, fixtures::all_vars(net)).empty());
    EXPECT_LE(tree.width(), 19u);
    EXPECT_NE(dump_tree(tree, net).find("Z = "), std::string::npos);
  }
}

TEST(Tree, RandomCorpusValid) {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    auto c = oracle::random_circuit(seed, fixtures::corpus_spec(seed));
    auto net = build_error_model(c, 0.1);
    auto tree = build_tree(net);
    auto problems = validate_tree(tree, net, fixtures::all_vars(net));
    EXPECT_TRUE(problems.empty()) << "seed " << seed << ": " << (problems.empty() ? "" : problems.front());
  }
}

TEST(Tree, Deterministic) {
  auto net = build_error_model(fixtures::c17(), 0.05);
  EXPECT_EQ(dump_tree(build_tree(net), net), dump_tree(build_tree(net), net));
}

TEST(Tree, WidthLimit) {
  auto net = build_error_model(fixtures::c17(), 0.05);
  EXPECT_THROW(build_tree(net, 3), WidthOverflow);
}

TEST(Tree, ValidatorCatchesBrokenTree) {
  auto net = build_error_model(fixtures::c17(), 0.05);
  auto tree = build_tree(net);
  auto broken = tree;
  broken.edges.pop_back();
  EXPECT_FALSE(validate_tree(broken, net, fixtures::all_vars(net)).empty());
  broken = tree;
  broken.clusters[broken.home[net.comparator_vars[0]]].valuations.clear();
  EXPECT_FALSE(validate_tree(broken, net, fixtures::all_vars(net)).empty());
}
