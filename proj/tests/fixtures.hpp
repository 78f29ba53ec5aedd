#pragma once

#include <string>

#include "maxerr/maxerr.hpp"

namespace fixtures {

inline const char* kC17 =
    "INPUT(1)\nINPUT(2)\nINPUT(3)\nINPUT(6)\nINPUT(7)\n"
    "OUTPUT(22)\nOUTPUT(23)\n"
    "10 = NAND(1, 3)\n11 = NAND(3, 6)\n16 = NAND(2, 11)\n"
    "19 = NAND(11, 7)\n22 = NAND(10, 16)\n23 = NAND(16, 19)\n";

inline maxerr::Circuit c17() { return maxerr::parse_bench(kC17); }
inline maxerr::Circuit c17_branches() { return maxerr::expand_fanout_branches(c17()); }

inline maxerr::Circuit nand1() { return maxerr::parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(z)\nz = NAND(a,b)\n"); }

// three inputs, three gates, one output
inline maxerr::Circuit fig1() {
  return maxerr::parse_bench(
      "INPUT(a)\nINPUT(b)\nINPUT(c)\nOUTPUT(x3)\n"
      "x1 = AND(a, b)\nx2 = OR(b, c)\nx3 = NAND(x1, x2)\n");
}

inline std::vector<maxerr::VarId> all_vars(const maxerr::ErrorModelNet& net) {
  std::vector<maxerr::VarId> v;
  for (maxerr::VarId i = 0; i < net.size(); ++i) v.push_back(i);
  return v;
}

inline maxerr::oracle::RandomCircuitSpec corpus_spec(std::uint64_t seed) {
  maxerr::oracle::RandomCircuitSpec s;
  s.inputs = 2 + seed % 7;
  s.gates = 3 + (seed * 7) % 10;
  return s;
}

}  // namespace fixtures
