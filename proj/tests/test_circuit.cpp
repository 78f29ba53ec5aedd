#include <gtest/gtest.h>

#include "fixtures.hpp"

using namespace maxerr;

TEST(Parse, SingleNand) {
  auto c = fixtures::nand1();
  EXPECT_EQ(c.num_inputs(), 2u);
  EXPECT_EQ(c.num_gates(), 1u);
  EXPECT_EQ(c.num_outputs(), 1u);
  EXPECT_EQ(c.gates()[0].func, GateFunc::Nand);
}

TEST(Parse, C17Counts) {
  auto c = fixtures::c17();
  EXPECT_EQ(c.num_inputs(), 5u);
  EXPECT_EQ(c.num_gates(), 6u);
  EXPECT_EQ(c.num_outputs(), 2u);
}

TEST(Parse, UndefinedNet) {
  try {
    parse_bench("INPUT(b)\nOUTPUT(z)\nz = NAND(a,b)\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("undefined net a"), std::string::npos);
  }
}

TEST(Parse, ErrorsCarryLineNumbers) {
  try {
    parse_bench("INPUT(a)\n\n# note\nOUTPUT(z)\nz = FROB(a)\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 5u);
    EXPECT_EQ(std::string(e.what()).rfind("line 5:", 0), 0u);
  }
}

TEST(Parse, Rejects) {
  EXPECT_THROW(parse_bench("INPUT(a)\nOUTPUT(z)\nz = NAND(a,a)\n"), ParseError);
  EXPECT_THROW(parse_bench("INPUT(a)\nOUTPUT(z)\nz = NOT(a)\nz = BUF(a)\n"), ParseError);
  EXPECT_THROW(parse_bench("INPUT(a)\nOUTPUT(z)\nz = NOT(a, a)\n"), ParseError);
  EXPECT_THROW(parse_bench("INPUT(a)\nOUTPUT(z)\nOUTPUT(z)\nz = NOT(a)\n"), ParseError);
  EXPECT_THROW(parse_bench("INPUT(a)\nOUTPUT(y)\nz = NOT(a)\n"), ParseError);
  EXPECT_THROW(parse_bench("OUTPUT(z)\nz = NOT(z)\n"), ParseError);
  EXPECT_THROW(parse_bench("INPUT(a)\nOUTPUT(a)\n"), ParseError);
}

TEST(Parse, Cycle) {
  try {
    parse_bench("INPUT(a)\nOUTPUT(y)\nx = AND(a, y)\ny = OR(a, x)\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("cycle"), std::string::npos);
  }
}

TEST(Parse, CrlfAndAliases) {
  auto c = parse_bench("INPUT(a)\r\nINPUT(b)\r\nOUTPUT(y)\r\nn = inv(a)\r\ny = BUFF(n)\r\n");
  EXPECT_EQ(c.gates()[0].func, GateFunc::Not);
  EXPECT_EQ(c.gates()[1].func, GateFunc::Buf);
}

TEST(Topo, SingleGate) { EXPECT_EQ(topo_order(fixtures::nand1()), std::vector<std::size_t>{0}); }

TEST(Topo, ReverseDeclaredChain) {
  auto c = parse_bench("INPUT(a)\nOUTPUT(g2)\ng2 = NOT(g1)\ng1 = NOT(g0)\ng0 = NOT(a)\n");
  // gate indices follow declaration: g2=0, g1=1, g0=2
  EXPECT_EQ(topo_order(c), (std::vector<std::size_t>{2, 1, 0}));
}

TEST(Topo, C17IsValid) {
  auto c = fixtures::c17();
  auto order = topo_order(c);
  std::vector<bool> done(c.num_gates(), false);
  for (std::size_t g : order) {
    for (const auto& r : c.fanin_refs(g))
      if (!r.is_input) {
        EXPECT_TRUE(done[r.index]);
      }
    done[g] = true;
  }
  EXPECT_EQ(order.size(), c.num_gates());
}

TEST(Eval, NandFaults) {
  auto c = fixtures::nand1();
  EXPECT_EQ(eval(c, {true, true}), std::vector<bool>{false});
  EXPECT_EQ(eval(c, {true, true}, {0}), std::vector<bool>{true});
}

TEST(Eval, C17Golden) {
  auto c = fixtures::c17();
  EXPECT_EQ(eval(c, bits_from_string("01111")), (std::vector<bool>{false, false}));
  EXPECT_EQ(eval(c, bits_from_string("00000")), (std::vector<bool>{false, false}));
  EXPECT_EQ(eval(c, bits_from_string("10101")), (std::vector<bool>{true, true}));
}

TEST(Eval, MatchesBooleanSimulation) {
  auto c = fixtures::c17();
  for (std::uint64_t v = 0; v < 32; ++v) {
    auto i = input_vector(v, 5);
    bool n10 = !(i[0] && i[2]), n11 = !(i[2] && i[3]);
    bool n16 = !(i[1] && n11), n19 = !(n11 && i[4]);
    EXPECT_EQ(eval(c, i), (std::vector<bool>{!(n10 && n16), !(n16 && n19)}));
  }
}

TEST(Eval, AllFaultsComplementsEveryGate) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto c = oracle::random_circuit(seed, fixtures::corpus_spec(seed));
    std::vector<Gate> flipped = c.gates();
    for (auto& g : flipped) {
      switch (g.func) {
        case GateFunc::And: g.func = GateFunc::Nand; break;
        case GateFunc::Nand: g.func = GateFunc::And; break;
        case GateFunc::Or: g.func = GateFunc::Nor; break;
        case GateFunc::Nor: g.func = GateFunc::Or; break;
        case GateFunc::Xor: g.func = GateFunc::Xnor; break;
        case GateFunc::Xnor: g.func = GateFunc::Xor; break;
        case GateFunc::Not: g.func = GateFunc::Buf; break;
        case GateFunc::Buf: g.func = GateFunc::Not; break;
      }
    }
    Circuit comp(c.inputs(), flipped, c.outputs());
    FaultSet all;
    for (std::size_t g = 0; g < c.num_gates(); ++g) all.insert(g);
    for (std::uint64_t v = 0; v < (1u << c.num_inputs()); ++v) {
      auto i = input_vector(v, c.num_inputs());
      EXPECT_EQ(eval(c, i, all), eval(comp, i));
    }
  }
}

TEST(Eval, PackedAgreesWithScalar) {
  auto c = fixtures::c17();
  std::vector<std::uint64_t> in(5, 0);
  for (std::uint64_t lane = 0; lane < 32; ++lane) {
    auto i = input_vector(lane, 5);
    for (std::size_t j = 0; j < 5; ++j)
      if (i[j]) in[j] |= std::uint64_t{1} << lane;
  }
  std::vector<std::uint64_t> masks(6, 0);
  masks[3] = 0xF0F0F0F0u;
  auto out = eval_packed(c, in, masks);
  for (std::uint64_t lane = 0; lane < 32; ++lane) {
    FaultSet f;
    if ((masks[3] >> lane) & 1U) f.insert(3);
    auto ref = eval(c, input_vector(lane, 5), f);
    for (std::size_t j = 0; j < 2; ++j) EXPECT_EQ(((out[j] >> lane) & 1U) != 0, ref[j]);
  }
}

TEST(Serialize, BenchFixedPoint) {
  auto c = fixtures::c17();
  auto once = to_bench(c);
  EXPECT_EQ(to_bench(parse_bench(once)), once);
}

TEST(Serialize, JsonRoundTrip) {
  auto c = fixtures::c17();
  auto j = to_json(c);
  EXPECT_EQ(j["format"], "circuit/1");
  EXPECT_EQ(to_bench(circuit_from_json(j)), to_bench(c));
  auto bad = j;
  bad["format"] = "circuit/9";
  EXPECT_THROW(circuit_from_json(bad), ParseError);
}

TEST(Serialize, LoadSamples) {
  auto c = load_circuit(std::string(MAXERR_SAMPLES) + "/c17.bench");
  EXPECT_EQ(to_bench(c), to_bench(fixtures::c17()));
  EXPECT_THROW(load_circuit(std::string(MAXERR_SAMPLES) + "/bad.bench"), ParseError);
  EXPECT_THROW(load_circuit(std::string(MAXERR_SAMPLES) + "/missing.bench"), ParseError);
}

TEST(Bits, DeclarationOrder) {
  EXPECT_EQ(bits_to_string(input_vector(15, 5)), "01111");
  EXPECT_EQ(bits_from_string("01111"), input_vector(15, 5));
  EXPECT_THROW(bits_from_string("0121"), std::invalid_argument);
}

TEST(Branches, C17) {
  auto c = fixtures::c17_branches();
  // nets 3, 11 and 16 each feed two gates
  EXPECT_EQ(c.num_gates(), 12u);
  for (std::uint64_t v = 0; v < 32; ++v)
    EXPECT_EQ(eval(c, input_vector(v, 5)), eval(fixtures::c17(), input_vector(v, 5)));
  EXPECT_TRUE(c.has_net("3~10"));
  EXPECT_TRUE(c.has_net("11~19"));
}
