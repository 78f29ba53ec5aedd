#pragma once

// Gate-level combinational netlists: parsing (.bench and circuit/1 JSON),
// topological ordering and fault-injected evaluation.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace maxerr {

enum class GateFunc { And, Nand, Or, Nor, Xor, Xnor, Not, Buf };

inline std::string_view to_string(GateFunc f) {
  switch (f) {
    case GateFunc::And: return "AND";
    case GateFunc::Nand: return "NAND";
    case GateFunc::Or: return "OR";
    case GateFunc::Nor: return "NOR";
    case GateFunc::Xor: return "XOR";
    case GateFunc::Xnor: return "XNOR";
    case GateFunc::Not: return "NOT";
    case GateFunc::Buf: return "BUF";
  }
  return "?";
}

inline std::optional<GateFunc> gate_func_from_string(std::string_view name) {
  std::string up(name);
  std::transform(up.begin(), up.end(), up.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  if (up == "AND") return GateFunc::And;
  if (up == "NAND") return GateFunc::Nand;
  if (up == "OR") return GateFunc::Or;
  if (up == "NOR") return GateFunc::Nor;
  if (up == "XOR") return GateFunc::Xor;
  if (up == "XNOR") return GateFunc::Xnor;
  if (up == "NOT" || up == "INV") return GateFunc::Not;
  if (up == "BUF" || up == "BUFF") return GateFunc::Buf;
  return std::nullopt;
}

inline bool is_unary(GateFunc f) { return f == GateFunc::Not || f == GateFunc::Buf; }

/// Boolean value of a gate for the given fan-in values.
inline bool apply_gate(GateFunc f, const std::vector<bool>& in) {
  switch (f) {
    case GateFunc::And:
    case GateFunc::Nand: {
      bool r = std::all_of(in.begin(), in.end(), [](bool b) { return b; });
      return f == GateFunc::And ? r : !r;
    }
    case GateFunc::Or:
    case GateFunc::Nor: {
      bool r = std::any_of(in.begin(), in.end(), [](bool b) { return b; });
      return f == GateFunc::Or ? r : !r;
    }
    case GateFunc::Xor:
    case GateFunc::Xnor: {
      bool r = false;
      for (bool b : in) r = r != b;
      return f == GateFunc::Xor ? r : !r;
    }
    case GateFunc::Not: return !in.at(0);
    case GateFunc::Buf: return in.at(0);
  }
  return false;
}

/// Bit-parallel variant of apply_gate: every bit lane is an independent evaluation.
inline std::uint64_t apply_gate_packed(GateFunc f, const std::vector<std::uint64_t>& in) {
  std::uint64_t r = 0;
  switch (f) {
    case GateFunc::And:
    case GateFunc::Nand:
      r = ~std::uint64_t{0};
      for (auto w : in) r &= w;
      return f == GateFunc::And ? r : ~r;
    case GateFunc::Or:
    case GateFunc::Nor:
      for (auto w : in) r |= w;
      return f == GateFunc::Or ? r : ~r;
    case GateFunc::Xor:
    case GateFunc::Xnor:
      for (auto w : in) r ^= w;
      return f == GateFunc::Xor ? r : ~r;
    case GateFunc::Not: return ~in.at(0);
    case GateFunc::Buf: return in.at(0);
  }
  return r;
}

struct Gate {
  std::string output;
  GateFunc func = GateFunc::Buf;
  std::vector<std::string> fanin;

  bool operator==(const Gate&) const = default;
};

/// Thrown for malformed netlists. `line()` is 0 when no source line applies.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// A set of gate indices whose outputs are inverted for one evaluation.
using FaultSet = std::set<std::size_t>;

/// Immutable combinational circuit. Gate indices follow declaration order;
/// `order()` gives an evaluation order where every gate follows its drivers.
class Circuit {
 public:
  Circuit() = default;

  /// Validates and indexes the netlist. `lines` optionally maps each gate
  /// to its source line for diagnostics.
  Circuit(std::vector<std::string> inputs, std::vector<Gate> gates,
          std::vector<std::string> outputs, std::vector<std::size_t> lines = {})
      : inputs_(std::move(inputs)), gates_(std::move(gates)), outputs_(std::move(outputs)) {
    if (lines.size() != gates_.size()) lines.assign(gates_.size(), 0);
    index(lines);
  }

  const std::vector<std::string>& inputs() const { return inputs_; }
  const std::vector<Gate>& gates() const { return gates_; }
  const std::vector<std::string>& outputs() const { return outputs_; }
  std::size_t num_inputs() const { return inputs_.size(); }
  std::size_t num_gates() const { return gates_.size(); }
  std::size_t num_outputs() const { return outputs_.size(); }

  const std::vector<std::size_t>& order() const { return order_; }

  /// Net reference: either a primary input or a gate output.
  struct NetRef {
    bool is_input = false;
    std::size_t index = 0;
  };
  const NetRef& net(const std::string& name) const {
    auto it = nets_.find(name);
    if (it == nets_.end()) throw std::out_of_range("unknown net " + name);
    return it->second;
  }
  bool has_net(const std::string& name) const { return nets_.count(name) != 0; }

  /// Fan-in references of gate g, resolved.
  const std::vector<NetRef>& fanin_refs(std::size_t g) const { return fanin_refs_[g]; }
  const NetRef& output_ref(std::size_t j) const { return output_refs_[j]; }

 private:
  void index(const std::vector<std::size_t>& lines) {
    if (inputs_.empty()) throw ParseError(0, "circuit has no inputs");
    if (outputs_.empty()) throw ParseError(0, "circuit has no outputs");
    if (gates_.empty()) throw ParseError(0, "circuit has no gates");
    for (std::size_t i = 0; i < inputs_.size(); ++i) {
      if (!nets_.emplace(inputs_[i], NetRef{true, i}).second)
        throw ParseError(0, "duplicate net definition " + inputs_[i]);
    }
    for (std::size_t g = 0; g < gates_.size(); ++g) {
      const Gate& gate = gates_[g];
      if (is_unary(gate.func) && gate.fanin.size() != 1)
        throw ParseError(lines[g], std::string(to_string(gate.func)) + " gate " + gate.output +
                                       " needs exactly one input");
      if (!is_unary(gate.func) && gate.fanin.size() < 2)
        throw ParseError(lines[g], std::string(to_string(gate.func)) + " gate " + gate.output +
                                       " needs at least two inputs");
      std::set<std::string> seen(gate.fanin.begin(), gate.fanin.end());
      if (seen.size() != gate.fanin.size())
        throw ParseError(lines[g], "gate " + gate.output + " repeats a fan-in net");
      if (!nets_.emplace(gate.output, NetRef{false, g}).second)
        throw ParseError(lines[g], "duplicate net definition " + gate.output);
    }
    fanin_refs_.resize(gates_.size());
    for (std::size_t g = 0; g < gates_.size(); ++g) {
      for (const auto& name : gates_[g].fanin) {
        auto it = nets_.find(name);
        if (it == nets_.end()) throw ParseError(lines[g], "undefined net " + name);
        fanin_refs_[g].push_back(it->second);
      }
    }
    std::set<std::string> seen_out;
    for (const auto& name : outputs_) {
      auto it = nets_.find(name);
      if (it == nets_.end()) throw ParseError(0, "undefined net " + name + " (declared OUTPUT)");
      if (!seen_out.insert(name).second) throw ParseError(0, "duplicate OUTPUT " + name);
      output_refs_.push_back(it->second);
    }
    topo_sort(lines);
  }

  // Kahn's algorithm; ready gates are released lowest index first.
  void topo_sort(const std::vector<std::size_t>& lines) {
    const std::size_t n = gates_.size();
    std::vector<std::size_t> pending(n, 0);
    std::vector<std::vector<std::size_t>> users(n);
    for (std::size_t g = 0; g < n; ++g) {
      for (const auto& ref : fanin_refs_[g]) {
        if (!ref.is_input) {
          ++pending[g];
          users[ref.index].push_back(g);
        }
      }
    }
    std::set<std::size_t> ready;
    for (std::size_t g = 0; g < n; ++g)
      if (pending[g] == 0) ready.insert(g);
    while (!ready.empty()) {
      std::size_t g = *ready.begin();
      ready.erase(ready.begin());
      order_.push_back(g);
      for (std::size_t u : users[g])
        if (--pending[u] == 0) ready.insert(u);
    }
    if (order_.size() != n) {
      for (std::size_t g = 0; g < n; ++g)
        if (pending[g] != 0)
          throw ParseError(lines[g], "cycle detected through gate " + gates_[g].output);
    }
  }

  std::vector<std::string> inputs_;
  std::vector<Gate> gates_;
  std::vector<std::string> outputs_;
  std::unordered_map<std::string, NetRef> nets_;
  std::vector<std::vector<NetRef>> fanin_refs_;
  std::vector<NetRef> output_refs_;
  std::vector<std::size_t> order_;
};

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

inline std::string upper(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return s;
}

// Splits "NAME(a, b, c)" into NAME and the argument list.
inline bool split_call(const std::string& text, std::string& name, std::vector<std::string>& args) {
  auto open = text.find('(');
  auto close = text.rfind(')');
  if (open == std::string::npos || close == std::string::npos || close < open) return false;
  if (!trim(text.substr(close + 1)).empty()) return false;
  name = trim(text.substr(0, open));
  args.clear();
  std::string inner = text.substr(open + 1, close - open - 1);
  std::stringstream ss(inner);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) return false;
    args.push_back(item);
  }
  return !name.empty();
}

}  // namespace detail

/// Parses ISCAS-style `.bench` text.
inline Circuit parse_bench(std::string_view text) {
  std::vector<std::string> inputs, outputs;
  std::vector<Gate> gates;
  std::vector<std::size_t> lines;
  std::map<std::string, std::size_t> defined;  // net -> line

  std::size_t lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    std::string_view raw = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++lineno;
    std::string line(raw);
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = detail::trim(line);
    if (line.empty()) continue;

    auto define = [&](const std::string& net) {
      if (auto [it, fresh] = defined.emplace(net, lineno); !fresh)
        throw ParseError(lineno, "duplicate net definition " + net + " (first defined on line " +
                                     std::to_string(it->second) + ")");
    };

    if (auto eq = line.find('='); eq != std::string::npos) {
      std::string lhs = detail::trim(line.substr(0, eq));
      std::string name;
      std::vector<std::string> args;
      if (lhs.empty() || !detail::split_call(line.substr(eq + 1), name, args))
        throw ParseError(lineno, "malformed gate definition: " + line);
      auto func = gate_func_from_string(name);
      if (!func) throw ParseError(lineno, "unknown gate function " + name);
      define(lhs);
      gates.push_back(Gate{lhs, *func, args});
      lines.push_back(lineno);
      continue;
    }
    std::string name;
    std::vector<std::string> args;
    if (!detail::split_call(line, name, args) || args.size() != 1)
      throw ParseError(lineno, "unrecognized statement: " + line);
    name = detail::upper(name);
    if (name == "INPUT") {
      define(args[0]);
      inputs.push_back(args[0]);
    } else if (name == "OUTPUT") {
      outputs.push_back(args[0]);
    } else {
      throw ParseError(lineno, "unrecognized statement: " + line);
    }
  }

  // Report undefined references against the line that uses them.
  for (std::size_t g = 0; g < gates.size(); ++g)
    for (const auto& in : gates[g].fanin)
      if (!defined.count(in)) throw ParseError(lines[g], "undefined net " + in);
  return Circuit(std::move(inputs), std::move(gates), std::move(outputs), std::move(lines));
}

/// Canonical `.bench` rendering: inputs, outputs, then gates in declaration order.
inline std::string to_bench(const Circuit& c) {
  std::ostringstream os;
  for (const auto& i : c.inputs()) os << "INPUT(" << i << ")\n";
  for (const auto& o : c.outputs()) os << "OUTPUT(" << o << ")\n";
  for (const auto& g : c.gates()) {
    os << g.output << " = " << to_string(g.func) << "(";
    for (std::size_t i = 0; i < g.fanin.size(); ++i) os << (i ? ", " : "") << g.fanin[i];
    os << ")\n";
  }
  return os.str();
}

inline nlohmann::json to_json(const Circuit& c) {
  nlohmann::json gates = nlohmann::json::array();
  for (const auto& g : c.gates())
    gates.push_back({{"output", g.output}, {"func", to_string(g.func)}, {"inputs", g.fanin}});
  return {{"format", "circuit/1"}, {"inputs", c.inputs()}, {"outputs", c.outputs()}, {"gates", gates}};
}

inline Circuit circuit_from_json(const nlohmann::json& j) {
  try {
    if (j.value("format", "") != "circuit/1")
      throw ParseError(0, "expected \"format\": \"circuit/1\"");
    std::vector<Gate> gates;
    for (const auto& g : j.at("gates")) {
      auto name = g.at("func").get<std::string>();
      auto func = gate_func_from_string(name);
      if (!func) throw ParseError(0, "unknown gate function " + name);
      gates.push_back(Gate{g.at("output").get<std::string>(), *func,
                           g.at("inputs").get<std::vector<std::string>>()});
    }
    return Circuit(j.at("inputs").get<std::vector<std::string>>(), std::move(gates),
                   j.at("outputs").get<std::vector<std::string>>());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(0, std::string("malformed circuit JSON: ") + e.what());
  }
}

/// Loads a `.bench` file, or a circuit/1 JSON document when the file starts with '{'.
inline Circuit load_circuit(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(0, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  std::string text = ss.str();
  auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(0, std::string("malformed circuit JSON: ") + e.what());
    }
    return circuit_from_json(j);
  }
  return parse_bench(text);
}

/// Gate indices in evaluation order.
inline std::vector<std::size_t> topo_order(const Circuit& c) { return c.order(); }

/// Evaluates the circuit with every gate in `faults` emitting the complement
/// of its Boolean function. Bit j of `input_bits` drives the j-th INPUT.
inline std::vector<bool> eval(const Circuit& c, const std::vector<bool>& input_bits,
                              const FaultSet& faults = {}) {
  if (input_bits.size() != c.num_inputs())
    throw std::invalid_argument("eval: expected " + std::to_string(c.num_inputs()) + " input bits");
  std::vector<bool> value(c.num_gates());
  auto read = [&](const Circuit::NetRef& r) { return r.is_input ? input_bits[r.index] : value[r.index]; };
  std::vector<bool> args;
  for (std::size_t g : c.order()) {
    args.clear();
    for (const auto& r : c.fanin_refs(g)) args.push_back(read(r));
    bool v = apply_gate(c.gates()[g].func, args);
    value[g] = faults.count(g) ? !v : v;
  }
  std::vector<bool> out;
  out.reserve(c.num_outputs());
  for (std::size_t j = 0; j < c.num_outputs(); ++j) out.push_back(read(c.output_ref(j)));
  return out;
}

/// 64-lane evaluation. `inputs[i]` holds input i for every lane and
/// `fault_masks[g]` flips gate g in the lanes where its bits are set
/// (an empty vector means no faults). Returns one word per output.
inline std::vector<std::uint64_t> eval_packed(const Circuit& c, const std::vector<std::uint64_t>& inputs,
                                              const std::vector<std::uint64_t>& fault_masks) {
  std::vector<std::uint64_t> value(c.num_gates());
  auto read = [&](const Circuit::NetRef& r) { return r.is_input ? inputs[r.index] : value[r.index]; };
  std::vector<std::uint64_t> args;
  for (std::size_t g : c.order()) {
    args.clear();
    for (const auto& r : c.fanin_refs(g)) args.push_back(read(r));
    std::uint64_t v = apply_gate_packed(c.gates()[g].func, args);
    value[g] = fault_masks.empty() ? v : v ^ fault_masks[g];
  }
  std::vector<std::uint64_t> out;
  for (std::size_t j = 0; j < c.num_outputs(); ++j) out.push_back(read(c.output_ref(j)));
  return out;
}

/// Input vector for integer `v`: the first INPUT is the most significant bit,
/// so the string rendering of `v` reads in declaration order.
inline std::vector<bool> input_vector(std::uint64_t v, std::size_t k) {
  std::vector<bool> bits(k);
  for (std::size_t j = 0; j < k; ++j) bits[j] = (v >> (k - 1 - j)) & 1U;
  return bits;
}

inline std::string bits_to_string(const std::vector<bool>& bits) {
  std::string s;
  for (bool b : bits) s.push_back(b ? '1' : '0');
  return s;
}

inline std::vector<bool> bits_from_string(std::string_view s) {
  std::vector<bool> bits;
  for (char ch : s) {
    if (ch != '0' && ch != '1') throw std::invalid_argument("bit string must contain only 0/1");
    bits.push_back(ch == '1');
  }
  return bits;
}

/// Makes every fanout branch an explicit BUF gate so that branches fail
/// independently of their stem, as in netlists that list fanout branches as
/// separate signals. A net read by two or more gate inputs gets one BUF per
/// reading pin, named `<stem>~<reader>`; primary outputs keep observing the
/// stem. Branch gates are appended after the original gates.
inline Circuit expand_fanout_branches(const Circuit& c) {
  std::map<std::string, std::size_t> readers;
  for (const auto& g : c.gates())
    for (const auto& in : g.fanin) ++readers[in];
  std::vector<Gate> gates = c.gates();
  std::vector<Gate> branches;
  for (auto& g : gates) {
    for (auto& in : g.fanin) {
      if (readers[in] < 2) continue;
      std::string branch = in + "~" + g.output;
      branches.push_back(Gate{branch, GateFunc::Buf, {in}});
      in = branch;
    }
  }
  gates.insert(gates.end(), branches.begin(), branches.end());
  return Circuit(c.inputs(), std::move(gates), c.outputs());
}

}  // namespace maxerr
