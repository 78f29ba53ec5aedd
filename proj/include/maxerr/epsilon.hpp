#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "circuit.hpp"

namespace maxerr {

/// Per-gate error probabilities. Gates missing from `per_gate` use `uniform`.
struct EpsilonSpec {
  double uniform = 0.0;
  std::map<std::string, double> per_gate;  // keyed by gate output net

  double for_gate(const std::string& net) const {
    auto it = per_gate.find(net);
    return it == per_gate.end() ? uniform : it->second;
  }

  /// One probability per gate of `c`, in gate index order.
  std::vector<double> per_gate_vector(const Circuit& c) const {
    std::vector<double> out;
    for (const auto& g : c.gates()) out.push_back(for_gate(g.output));
    return out;
  }
};

inline void check_epsilon(double eps) {
  if (!(eps >= 0.0 && eps <= 0.5))
    throw std::invalid_argument("gate error probability " + std::to_string(eps) + " outside [0, 0.5]");
}

}  // namespace maxerr
