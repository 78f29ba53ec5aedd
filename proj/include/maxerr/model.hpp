#pragma once

// Three-block probabilistic error model: an ideal copy of the circuit, an
// epsilon-faulty copy sharing the same primary inputs, and one XOR
// comparator per primary output. Comparator state 1 means "output wrong".

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "circuit.hpp"
#include "epsilon.hpp"

namespace maxerr {

using VarId = std::uint32_t;

enum class VarClass { Input, Internal, Comparator };

struct Var {
  VarId id = 0;
  std::string name;
  VarClass klass = VarClass::Internal;
};

/// P(child | parents) over binary variables. The table is laid out like a
/// valuation over (child, parents...) with the child as the most significant
/// bit and the first parent next: index = child << |parents| | parent_bits.
struct Cpt {
  VarId child = 0;
  std::vector<VarId> parents;
  std::vector<double> table;

  std::vector<VarId> scope() const {
    std::vector<VarId> s{child};
    s.insert(s.end(), parents.begin(), parents.end());
    return s;
  }
  /// `parent_bits` packs parent states with the first parent most significant.
  double prob(bool child_state, std::uint64_t parent_bits) const {
    return table[(static_cast<std::uint64_t>(child_state) << parents.size()) | parent_bits];
  }
};

/// Reads a JSON object {gate-output-net: epsilon}.
inline EpsilonSpec load_epsilon_map(const std::string& path, double uniform) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("malformed epsilon map " + path + ": " + e.what());
  }
  if (!j.is_object()) throw std::runtime_error("epsilon map must be a JSON object");
  EpsilonSpec spec{uniform, {}};
  for (auto it = j.begin(); it != j.end(); ++it) {
    double eps = it.value().get<double>();
    check_epsilon(eps);
    spec.per_gate[it.key()] = eps;
  }
  return spec;
}

/// CPT of a gate output given its fan-in. A faulty gate emits its correct
/// value with probability 1 - eps and the complement with probability eps;
/// an ideal gate is deterministic. Child/parent ids are left for the caller.
inline Cpt cpt_for_gate(GateFunc f, std::size_t fan_in, double eps, bool faulty) {
  if (faulty) check_epsilon(eps);
  if (fan_in == 0 || fan_in > 24) throw std::invalid_argument("unsupported fan-in");
  const double p_wrong = faulty ? eps : 0.0;
  Cpt cpt;
  cpt.parents.assign(fan_in, 0);
  const std::uint64_t rows = std::uint64_t{1} << fan_in;
  cpt.table.assign(2 * rows, 0.0);
  std::vector<bool> in(fan_in);
  for (std::uint64_t a = 0; a < rows; ++a) {
    for (std::size_t p = 0; p < fan_in; ++p) in[p] = (a >> (fan_in - 1 - p)) & 1U;
    const bool correct = apply_gate(f, in);
    cpt.table[(std::uint64_t{correct} << fan_in) | a] = 1.0 - p_wrong;
    cpt.table[(std::uint64_t{!correct} << fan_in) | a] = p_wrong;
  }
  return cpt;
}

/// Parentless prior with P(v = 1) = p1.
inline Cpt input_prior(VarId v, double p1) {
  if (!(p1 >= 0.0 && p1 <= 1.0)) throw std::invalid_argument("prior outside [0, 1]");
  return Cpt{v, {}, {1.0 - p1, p1}};
}

/// The probabilistic error network: variables, one CPT per variable, and
/// bookkeeping that links circuit nets to their ideal/faulty twins.
struct ErrorModelNet {
  std::vector<Var> vars;
  std::vector<Cpt> cpts;              // cpts[v] defines vars[v]
  std::vector<double> epsilon;        // per gate
  std::vector<VarId> input_vars;      // I, in INPUT declaration order
  std::vector<VarId> ideal_vars;      // per gate
  std::vector<VarId> faulty_vars;     // per gate
  std::vector<VarId> comparator_vars; // O, in OUTPUT declaration order
  std::vector<std::string> output_names;
  std::vector<std::string> input_names;

  std::size_t size() const { return vars.size(); }
  bool is_input(VarId v) const { return vars[v].klass == VarClass::Input; }
};

/// Builds the error model. Variables are numbered inputs first, then ideal
/// gate outputs, then faulty gate outputs, then comparators (N = k + 2G + n).
inline ErrorModelNet build_error_model(const Circuit& c, const EpsilonSpec& eps, double prior1 = 0.5) {
  ErrorModelNet net;
  const std::size_t k = c.num_inputs(), g_count = c.num_gates(), n = c.num_outputs();
  auto add_var = [&](std::string name, VarClass klass) {
    VarId id = static_cast<VarId>(net.vars.size());
    net.vars.push_back(Var{id, std::move(name), klass});
    return id;
  };
  for (const auto& in : c.inputs()) net.input_vars.push_back(add_var(in, VarClass::Input));
  for (const auto& g : c.gates()) net.ideal_vars.push_back(add_var(g.output, VarClass::Internal));
  for (const auto& g : c.gates()) net.faulty_vars.push_back(add_var(g.output + "*", VarClass::Internal));
  for (const auto& o : c.outputs()) net.comparator_vars.push_back(add_var("err(" + o + ")", VarClass::Comparator));
  net.input_names = c.inputs();
  net.output_names = c.outputs();

  net.cpts.resize(net.vars.size());
  for (std::size_t i = 0; i < k; ++i) net.cpts[net.input_vars[i]] = input_prior(net.input_vars[i], prior1);

  auto twin = [&](const Circuit::NetRef& r, bool faulty) {
    if (r.is_input) return net.input_vars[r.index];
    return faulty ? net.faulty_vars[r.index] : net.ideal_vars[r.index];
  };
  for (std::size_t g = 0; g < g_count; ++g) {
    const Gate& gate = c.gates()[g];
    const double e = eps.for_gate(gate.output);
    check_epsilon(e);
    net.epsilon.push_back(e);
    for (bool faulty : {false, true}) {
      Cpt cpt = cpt_for_gate(gate.func, gate.fanin.size(), e, faulty);
      cpt.child = faulty ? net.faulty_vars[g] : net.ideal_vars[g];
      for (std::size_t p = 0; p < gate.fanin.size(); ++p) cpt.parents[p] = twin(c.fanin_refs(g)[p], faulty);
      net.cpts[cpt.child] = std::move(cpt);
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    const auto& ref = c.output_ref(j);
    VarId ideal = twin(ref, false), faulty = twin(ref, true);
    Cpt cmp;
    cmp.child = net.comparator_vars[j];
    if (ideal == faulty) {
      // An output wired straight to a primary input can never disagree.
      cmp.parents = {ideal};
      cmp.table = {1.0, 1.0, 0.0, 0.0};
    } else {
      cmp = cpt_for_gate(GateFunc::Xor, 2, 0.0, false);
      cmp.child = net.comparator_vars[j];
      cmp.parents = {ideal, faulty};
    }
    net.cpts[cmp.child] = std::move(cmp);
  }
  return net;
}

inline ErrorModelNet build_error_model(const Circuit& c, double uniform_eps, double prior1 = 0.5) {
  return build_error_model(c, EpsilonSpec{uniform_eps, {}}, prior1);
}

/// Product of CPT entries for a complete assignment. Reference path for tests.
inline double joint_prob(const ErrorModelNet& net, const std::vector<bool>& assignment) {
  if (assignment.size() != net.size()) throw std::invalid_argument("joint_prob: incomplete assignment");
  double p = 1.0;
  for (const auto& cpt : net.cpts) {
    std::uint64_t bits = 0;
    for (VarId parent : cpt.parents) bits = (bits << 1) | std::uint64_t{assignment[parent]};
    p *= cpt.prob(assignment[cpt.child], bits);
  }
  return p;
}

}  // namespace maxerr
