#include <gtest/gtest.h>

#include "fixtures.hpp"

using namespace maxerr;

TEST(Exact, SingleGate) {
  auto c = fixtures::nand1();
  for (std::uint64_t v = 0; v < 4; ++v) {
    EXPECT_DOUBLE_EQ(oracle::exact_cond_error(c, input_vector(v, 2), std::vector<double>{0.05})[0], 0.05);
    EXPECT_DOUBLE_EQ(oracle::exact_cond_error(c, input_vector(v, 2), std::vector<double>{0.0})[0], 0.0);
  }
}

TEST(Exact, C17Golden) {
  auto c = fixtures::c17();
  auto plain = oracle::exact_cond_error(c, bits_from_string("01111"), std::vector<double>(6, 0.05));
  EXPECT_NEAR(plain[1], 0.17825, 5e-7);
  auto br = fixtures::c17_branches();
  auto e = oracle::exact_cond_error(br, bits_from_string("01111"), std::vector<double>(12, 0.05));
  EXPECT_NEAR(e[1], 0.312, 0.01);
  EXPECT_NEAR(e[1], 0.311657, 5e-7);
}

TEST(Exact, MatchesNaiveEnumeration) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto c = oracle::random_circuit(seed, fixtures::corpus_spec(seed));
    std::vector<double> eps(c.num_gates());
    for (std::size_t g = 0; g < eps.size(); ++g) eps[g] = 0.01 * static_cast<double>(g + 1);
    auto bits = input_vector(seed, c.num_inputs());
    auto fast = oracle::exact_cond_error(c, bits, eps);
    auto golden = eval(c, bits);
    std::vector<double> slow(c.num_outputs(), 0.0);
    for (std::uint64_t s = 0; s < (std::uint64_t{1} << c.num_gates()); ++s) {
      FaultSet f;
      double w = 1.0;
      for (std::size_t g = 0; g < c.num_gates(); ++g) {
        if ((s >> g) & 1U) f.insert(g);
        w *= (s >> g) & 1U ? eps[g] : 1.0 - eps[g];
      }
      auto out = eval(c, bits, f);
      for (std::size_t j = 0; j < out.size(); ++j)
        if (out[j] != golden[j]) slow[j] += w;
    }
    for (std::size_t j = 0; j < slow.size(); ++j) EXPECT_NEAR(fast[j], slow[j], 1e-14);
  }
}

TEST(Exact, Limits) {
  oracle::RandomCircuitSpec s;
  s.gates = 23;
  auto big = oracle::random_circuit(1, s);
  EXPECT_THROW(oracle::exact_cond_error(big, input_vector(0, 4), std::vector<double>(23, 0.1)), std::invalid_argument);
}

TEST(ExactMap, C17) {
  auto ex = oracle::exact_map(fixtures::c17_branches(), {0.05, {}}, 1);
  EXPECT_EQ(bits_to_string(ex.vector), "01111");
  EXPECT_NEAR(ex.joint * 32, 0.311657, 5e-7);
}

TEST(MonteCarlo, EpsilonZero) {
  auto c = fixtures::c17();
  auto r = oracle::monte_carlo(c, bits_from_string("01111"), {10000, 1, std::vector<double>(6, 0.0)});
  for (const auto& e : r) {
    EXPECT_EQ(e.estimate, 0.0);
    EXPECT_EQ(e.stderr_, 0.0);
  }
}

TEST(MonteCarlo, SingleGateBinomial) {
  auto c = fixtures::nand1();
  auto r = oracle::monte_carlo(c, {true, false}, {1'000'000, 7, {0.05}});
  EXPECT_NEAR(r[0].estimate, 0.05, 3 * std::sqrt(0.05 * 0.95 / 1e6));
  EXPECT_NEAR(r[0].stderr_, std::sqrt(r[0].estimate * (1 - r[0].estimate) / 1e6), 1e-15);
}

TEST(MonteCarlo, DeterministicAcrossThreads) {
  auto c = fixtures::c17_branches();
  oracle::McConfig cfg{300'000, 42, std::vector<double>(12, 0.05)};
  auto a = oracle::monte_carlo(c, bits_from_string("01111"), cfg, 0, 1);
  auto b = oracle::monte_carlo(c, bits_from_string("01111"), cfg, 0, 8);
  for (std::size_t j = 0; j < a.size(); ++j) EXPECT_EQ(a[j].estimate, b[j].estimate);
  auto other = oracle::monte_carlo(c, bits_from_string("01111"), {300'000, 43, cfg.eps}, 0, 1);
  EXPECT_NE(a[1].estimate, other[1].estimate);
}

TEST(MonteCarlo, WithinFourSigma) {
  std::size_t inside = 0, trials = 0;
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    auto c = oracle::random_circuit(seed, fixtures::corpus_spec(seed));
    std::vector<double> eps(c.num_gates(), 0.1);
    auto bits = input_vector(seed, c.num_inputs());
    auto exact = oracle::exact_cond_error(c, bits, eps);
    auto mc = oracle::monte_carlo(c, bits, {100'000, seed, eps});
    for (std::size_t j = 0; j < exact.size(); ++j) {
      const double sigma = std::sqrt(exact[j] * (1 - exact[j]) / 1e5);
      inside += std::fabs(mc[j].estimate - exact[j]) <= 4 * sigma + 1e-12;
      ++trials;
    }
  }
  EXPECT_GE(static_cast<double>(inside), 0.99 * static_cast<double>(trials));
}

TEST(MonteCarlo, C17WorstVector) {
  auto c = fixtures::c17_branches();
  auto mc = oracle::monte_carlo(c, bits_from_string("01111"), {1'000'000, 1, std::vector<double>(12, 0.05)});
  EXPECT_NEAR(mc[1].estimate, 0.311657, 0.005);
}

TEST(RandomCircuit, Deterministic) {
  auto s = fixtures::corpus_spec(3);
  EXPECT_EQ(to_bench(oracle::random_circuit(3, s)), to_bench(oracle::random_circuit(3, s)));
  EXPECT_NE(to_bench(oracle::random_circuit(3, s)), to_bench(oracle::random_circuit(4, s)));
}

TEST(RandomCircuit, Shape) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto s = fixtures::corpus_spec(seed);
    auto c = oracle::random_circuit(seed, s);
    EXPECT_EQ(c.num_inputs(), s.inputs);
    EXPECT_EQ(c.num_gates(), s.gates);
    EXPECT_GE(c.num_outputs(), 1u);
    EXPECT_LE(c.num_outputs(), s.max_outputs + 0);
  }
}
