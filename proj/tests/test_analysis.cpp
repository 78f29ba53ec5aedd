#include <gtest/gtest.h>

#include <sstream>

#include "fixtures.hpp"

using namespace maxerr;

TEST(MaxError, C17) {
  Analyzer an(fixtures::c17_branches());
  auto r = an.max_error({0.05, {}});
  EXPECT_NEAR(r.max_error, 0.312, 0.01);
  EXPECT_NEAR(r.max_error, 0.311657, 5e-7);
  EXPECT_EQ(bits_to_string(r.worst_vector), "01111");
  EXPECT_EQ(r.worst_output, "23");
  ASSERT_EQ(r.per_output.size(), 2u);
  EXPECT_LT(r.avg_error, r.max_error);
  EXPECT_NEAR(r.avg_error, 0.188241, 5e-7);
}

TEST(MaxError, C17GateOnlyFaultSites) {
  Analyzer an(fixtures::c17());
  auto r = an.max_error({0.05, {}});
  EXPECT_NEAR(r.max_error, 0.17825, 5e-7);
  EXPECT_EQ(bits_to_string(r.worst_vector), "01111");
}

TEST(MaxError, EpsilonZeroUnreachable) {
  Analyzer an(fixtures::c17());
  auto r = an.max_error({0.0, {}});
  EXPECT_TRUE(r.all_unreachable());
  EXPECT_EQ(r.max_error, 0.0);
  EXPECT_TRUE(r.worst_vector.empty());
}

TEST(MaxError, SingleNand) {
  Analyzer an(fixtures::nand1());
  auto r = an.max_error({0.05, {}});
  EXPECT_NEAR(r.max_error, 0.05, 1e-15);
  EXPECT_NEAR(r.avg_error, 0.05, 1e-15);
  auto s = an.spectrum({0.05, {}});
  for (const auto& e : s.entries) EXPECT_NEAR(e.max_error, 0.05, 1e-15);
}

TEST(MaxError, JointEvidenceAndLogSpace) {
  AnalysisOptions o;
  o.log_space = true;
  Analyzer lg(fixtures::c17_branches(), o);
  EXPECT_NEAR(lg.max_error({0.05, {}}).max_error, 0.311657, 5e-7);
  o.log_space = false;
  o.joint_evidence = true;
  Analyzer joint(fixtures::c17_branches(), o);
  auto r = joint.max_error({0.05, {}});
  ASSERT_EQ(r.per_output.size(), 1u);
  EXPECT_EQ(r.per_output[0].output, "*");
  EXPECT_LE(r.max_error, 0.311657 + 1e-6);
}

TEST(MaxError, AvgNeverAboveMax) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Analyzer an(oracle::random_circuit(seed, fixtures::corpus_spec(seed)));
    auto r = an.max_error({0.1, {}});
    EXPECT_LE(r.avg_error, r.max_error + 1e-12);
  }
}

TEST(Spectrum, C17) {
  Analyzer an(fixtures::c17_branches());
  auto s = an.spectrum({0.05, {}});
  ASSERT_EQ(s.entries.size(), 32u);
  auto best = std::max_element(s.entries.begin(), s.entries.end(),
                               [](const auto& a, const auto& b) { return a.max_error < b.max_error; });
  EXPECT_EQ(bits_to_string(best->vector), "01111");
  EXPECT_NEAR(best->max_error, an.max_error({0.05, {}}).max_error, 1e-9);
  auto high = s.above(s.mean + s.stddev);
  EXPECT_FALSE(high.empty());
  EXPECT_LT(high.size(), 32u);
}

TEST(Spectrum, ArgmaxMatchesSolve) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto c = oracle::random_circuit(seed, fixtures::corpus_spec(seed));
    Analyzer an(c);
    auto s = an.spectrum({0.05, {}});
    auto r = an.max_error({0.05, {}});
    for (std::size_t j = 0; j < c.num_outputs(); ++j) {
      double best = 0.0;
      for (const auto& e : s.entries) best = std::max(best, e.per_output[j]);
      if (r.per_output[j].unreachable) continue;
      EXPECT_NEAR(r.per_output[j].error, best, 1e-9) << "seed " << seed;
    }
    EXPECT_NEAR(r.max_error, std::max_element(s.entries.begin(), s.entries.end(), [](const auto& a, const auto& b) {
                               return a.max_error < b.max_error;
                             })->max_error, 1e-9);
  }
}

TEST(Sweep, C17Bound) {
  Analyzer an(fixtures::c17_branches());
  auto curve = an.sweep(parse_grid("0.005:0.2:0.005"));
  ASSERT_EQ(curve.points.size(), 40u);
  ASSERT_TRUE(curve.error_bound);
  EXPECT_NEAR(*curve.error_bound, 0.1055, 0.005 + 1e-12);
  ASSERT_TRUE(curve.refined_bound);
  EXPECT_NEAR(*curve.refined_bound, 0.1055, 0.002);
  for (std::size_t p = 1; p < curve.points.size(); ++p) {
    EXPECT_GE(curve.points[p].max_error, curve.points[p - 1].max_error);
    EXPECT_EQ(curve.points[p].worst_vector, curve.points[0].worst_vector);
  }
}

TEST(Sweep, BelowBound) {
  Analyzer an(fixtures::c17_branches());
  auto curve = an.sweep({0.01, 0.02, 0.03});
  EXPECT_FALSE(curve.error_bound);
  EXPECT_FALSE(curve.refined_bound);
}

TEST(Sweep, GridChecks) {
  Analyzer an(fixtures::nand1());
  EXPECT_THROW(an.sweep({}), std::invalid_argument);
  EXPECT_THROW(an.sweep({0.2, 0.1}), std::invalid_argument);
  EXPECT_THROW(an.sweep({0.0, 0.1}), std::invalid_argument);
  EXPECT_THROW(an.sweep({0.1, 0.6}), std::invalid_argument);
}

TEST(Grid, Parse) {
  auto g = parse_grid("0.005:0.2:0.005");
  EXPECT_EQ(g.size(), 40u);
  EXPECT_DOUBLE_EQ(g[20], 0.105);
  EXPECT_DOUBLE_EQ(g.back(), 0.2);
  EXPECT_EQ(parse_grid("0.1,0.2,0.3"), (std::vector<double>{0.1, 0.2, 0.3}));
  EXPECT_TRUE(parse_grid(",").empty());
  EXPECT_THROW(parse_grid("0.1:0.2"), std::invalid_argument);
  EXPECT_THROW(parse_grid("a,b"), std::invalid_argument);
}

TEST(Render, CsvJsonAgree) {
  auto c = fixtures::c17_branches();
  Analyzer an(c);
  auto curve = an.sweep(parse_grid("0.02:0.2:0.02"));
  auto csv = render_sweep_csv(c, curve, false);
  auto js = sweep_json(c, curve, false);
  std::istringstream in(csv);
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("epsilon", 0) == 0) continue;
    std::istringstream fields(line);
    std::string eps, mx, avg, vec, out;
    std::getline(fields, eps, ',');
    std::getline(fields, mx, ',');
    std::getline(fields, avg, ',');
    std::getline(fields, vec, ',');
    std::getline(fields, out, ',');
    const auto& p = js["points"][row++];
    EXPECT_EQ(std::stod(eps), p["epsilon"].get<double>());
    EXPECT_EQ(std::stod(mx), p["max_error"].get<double>());
    EXPECT_EQ(std::stod(avg), p["avg_error"].get<double>());
    EXPECT_EQ(vec, p["worst_vector"].get<std::string>());
    EXPECT_EQ(out, p["worst_output"].get<std::string>());
  }
  EXPECT_EQ(row, js["points"].size());
  EXPECT_NE(csv.find("epsilon,max_error,avg_error,worst_vector,worst_output\n"), std::string::npos);
  EXPECT_EQ(csv.rfind("# inputs: 1 2 3 6 7\n", 0), 0u);
}

TEST(Render, ReportFormats) {
  auto c = fixtures::c17_branches();
  auto r = Analyzer(c).max_error({0.05, {}});
  EXPECT_NE(render_report_text(c, r).find("max_error    0.311657"), std::string::npos);
  EXPECT_NE(render_report_csv(c, r).find("0.050000,0.311657,0.188241,01111,23"), std::string::npos);
  auto j = report_json(c, r);
  EXPECT_EQ(j["worst_vector"], "01111");
  EXPECT_DOUBLE_EQ(j["max_error"].get<double>(), 0.311657);
}
