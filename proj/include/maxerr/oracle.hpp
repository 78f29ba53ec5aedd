#pragma once

// Ground truth that relies only on circuit evaluation: exhaustive fault-set
// enumeration, brute-force MAP, and seeded Monte Carlo fault injection.
// Nothing here touches the error model or the join-tree engine.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "circuit.hpp"
#include "epsilon.hpp"
#include "parallel.hpp"

namespace maxerr::oracle {

inline constexpr std::size_t kMaxExactGates = 22;
inline constexpr std::size_t kMaxExactInputs = 16;

/// Error probability per output for one input vector: the weight of every
/// fault set whose evaluation differs from the fault-free output.
inline std::vector<double> exact_cond_error(const Circuit& c, const std::vector<bool>& inputs,
                                            const std::vector<double>& eps) {
  const std::size_t g_count = c.num_gates();
  if (g_count > kMaxExactGates)
    throw std::invalid_argument("exact oracle limited to " + std::to_string(kMaxExactGates) + " gates");
  if (eps.size() != g_count) throw std::invalid_argument("need one epsilon per gate");
  const std::vector<bool> golden = eval(c, inputs);

  // Lane l of word w is fault set w * 64 + l: gates 0..5 follow the lane
  // bits, the remaining gates the word index.
  const std::size_t low = std::min<std::size_t>(g_count, 6);
  const std::uint64_t lanes = std::uint64_t{1} << low;
  const std::uint64_t words = std::uint64_t{1} << (g_count - low);
  const std::uint64_t lane_mask = lanes == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << lanes) - 1;

  std::vector<double> low_weight(lanes, 1.0);
  for (std::uint64_t l = 0; l < lanes; ++l)
    for (std::size_t g = 0; g < low; ++g) low_weight[l] *= (l >> g) & 1U ? eps[g] : 1.0 - eps[g];

  std::vector<std::uint64_t> in_words(c.num_inputs());
  for (std::size_t i = 0; i < in_words.size(); ++i) in_words[i] = inputs[i] ? ~std::uint64_t{0} : 0;

  std::vector<std::uint64_t> masks(g_count, 0);
  for (std::size_t g = 0; g < low; ++g)
    for (std::uint64_t l = 0; l < lanes; ++l)
      if ((l >> g) & 1U) masks[g] |= std::uint64_t{1} << l;

  std::vector<double> err(c.num_outputs(), 0.0);
  for (std::uint64_t w = 0; w < words; ++w) {
    double high_weight = 1.0;
    for (std::size_t g = low; g < g_count; ++g) {
      const bool on = (w >> (g - low)) & 1U;
      masks[g] = on ? ~std::uint64_t{0} : 0;
      high_weight *= on ? eps[g] : 1.0 - eps[g];
    }
    if (high_weight == 0.0) continue;
    auto out = eval_packed(c, in_words, masks);
    for (std::size_t j = 0; j < out.size(); ++j) {
      std::uint64_t diff = (golden[j] ? ~out[j] : out[j]) & lane_mask;
      double acc = 0.0;
      while (diff) {
        acc += low_weight[static_cast<std::size_t>(std::countr_zero(diff))];
        diff &= diff - 1;
      }
      err[j] += high_weight * acc;
    }
  }
  return err;
}

inline std::vector<double> exact_cond_error(const Circuit& c, const std::vector<bool>& inputs,
                                            const EpsilonSpec& eps) {
  return exact_cond_error(c, inputs, eps.per_gate_vector(c));
}

struct ExactMap {
  std::vector<bool> vector;
  double joint = 0.0;  // P(i, O_j = 1) with uniform input priors
};

/// Brute-force MAP for one output: argmax over all input vectors of
/// 0.5^k * P(O_j = 1 | i). Ties go to the lexicographically smallest vector.
inline ExactMap exact_map(const Circuit& c, const EpsilonSpec& eps, std::size_t output_index) {
  const std::size_t k = c.num_inputs();
  if (k > kMaxExactInputs) throw std::invalid_argument("exact MAP limited to 16 inputs");
  if (output_index >= c.num_outputs()) throw std::out_of_range("no such output");
  const auto per_gate = eps.per_gate_vector(c);
  const double prior = std::ldexp(1.0, -static_cast<int>(k));
  ExactMap best{input_vector(0, k), -1.0};
  for (std::uint64_t v = 0; v < (std::uint64_t{1} << k); ++v) {
    auto bits = input_vector(v, k);
    const double p = prior * exact_cond_error(c, bits, per_gate)[output_index];
    if (p > best.joint) best = {bits, p};
  }
  return best;
}

struct McConfig {
  std::uint64_t runs = 1'000'000;
  std::uint64_t seed = 1;
  std::vector<double> eps;  // per gate
};

struct McEstimate {
  double estimate = 0.0;
  double stderr_ = 0.0;
};

inline constexpr std::uint64_t kShardRuns = std::uint64_t{1} << 16;

/// Monte Carlo fault injection for one input vector. Runs are split into
/// fixed-size shards with seeds derived from (seed, stream, shard), so the
/// result does not depend on the number of worker threads.
inline std::vector<McEstimate> monte_carlo(const Circuit& c, const std::vector<bool>& inputs, const McConfig& cfg,
                                           std::uint64_t stream = 0, std::size_t workers = worker_count()) {
  if (cfg.runs == 0) throw std::invalid_argument("Monte Carlo needs at least one run");
  if (cfg.eps.size() != c.num_gates()) throw std::invalid_argument("need one epsilon per gate");
  const std::vector<bool> golden = eval(c, inputs);
  const std::size_t n = c.num_outputs();
  const std::uint64_t shards = (cfg.runs + kShardRuns - 1) / kShardRuns;
  std::vector<std::vector<std::uint64_t>> counts(shards, std::vector<std::uint64_t>(n, 0));

  std::vector<std::uint64_t> in_words(c.num_inputs());
  for (std::size_t i = 0; i < in_words.size(); ++i) in_words[i] = inputs[i] ? ~std::uint64_t{0} : 0;

  parallel_for(
      shards,
      [&](std::size_t shard) {
        std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                          static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                          static_cast<std::uint32_t>(shard)};
        std::mt19937_64 rng(seq);
        const std::uint64_t begin = shard * kShardRuns;
        const std::uint64_t runs = std::min(kShardRuns, cfg.runs - begin);
        const std::uint64_t words = (runs + 63) / 64;
        // Fault positions per gate, drawn by geometric skipping.
        std::vector<std::vector<std::uint64_t>> masks(c.num_gates(), std::vector<std::uint64_t>(words, 0));
        for (std::size_t g = 0; g < c.num_gates(); ++g) {
          const double p = cfg.eps[g];
          if (p <= 0.0) continue;
          if (p >= 1.0) {
            for (auto& w : masks[g]) w = ~std::uint64_t{0};
            continue;
          }
          std::geometric_distribution<std::uint64_t> gap(p);
          for (std::uint64_t pos = gap(rng); pos < runs; pos += gap(rng) + 1)
            masks[g][pos / 64] |= std::uint64_t{1} << (pos % 64);
        }
        std::vector<std::uint64_t> fault(c.num_gates());
        for (std::uint64_t w = 0; w < words; ++w) {
          for (std::size_t g = 0; g < fault.size(); ++g) fault[g] = masks[g][w];
          auto out = eval_packed(c, in_words, fault);
          const std::uint64_t valid = (w + 1) * 64 <= runs ? ~std::uint64_t{0}
                                                           : (std::uint64_t{1} << (runs - w * 64)) - 1;
          for (std::size_t j = 0; j < n; ++j) {
            std::uint64_t diff = (golden[j] ? ~out[j] : out[j]) & valid;
            counts[shard][j] += static_cast<std::uint64_t>(std::popcount(diff));
          }
        }
      },
      workers);

  std::vector<McEstimate> result(n);
  for (std::size_t j = 0; j < n; ++j) {
    std::uint64_t total = 0;
    for (const auto& sc : counts) total += sc[j];
    const double p = static_cast<double>(total) / static_cast<double>(cfg.runs);
    result[j] = {p, std::sqrt(p * (1.0 - p) / static_cast<double>(cfg.runs))};
  }
  return result;
}

/// Shape of a random test circuit.
struct RandomCircuitSpec {
  std::size_t inputs = 4;
  std::size_t gates = 6;
  std::size_t max_outputs = 3;
  std::size_t max_fanin = 3;
  double unary_fraction = 0.15;  // share of NOT/BUF gates
};

/// Seeded layered DAG: each gate reads distinct earlier nets (inputs or
/// gates), gate types drawn from the full library. Outputs are the sink
/// gates plus, possibly, a few random internal nets.
inline Circuit random_circuit(std::uint64_t seed, const RandomCircuitSpec& spec) {
  if (spec.inputs == 0 || spec.gates == 0) throw std::invalid_argument("random circuit needs inputs and gates");
  std::mt19937_64 rng(seed);
  auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
  std::vector<std::string> inputs;
  for (std::size_t i = 0; i < spec.inputs; ++i) inputs.push_back("i" + std::to_string(i));
  std::vector<std::string> nets = inputs;
  std::vector<Gate> gates;
  const GateFunc binary[] = {GateFunc::And, GateFunc::Nand, GateFunc::Or,
                             GateFunc::Nor, GateFunc::Xor,  GateFunc::Xnor};
  std::bernoulli_distribution unary(spec.unary_fraction);
  for (std::size_t g = 0; g < spec.gates; ++g) {
    Gate gate;
    gate.output = "g" + std::to_string(g);
    std::size_t fanin = 1;
    if (nets.size() >= 2 && !unary(rng)) {
      gate.func = binary[pick(6)];
      fanin = 2 + (spec.max_fanin > 2 && nets.size() > 2 ? pick(std::min(spec.max_fanin, nets.size()) - 1) : 0);
      fanin = std::min(fanin, nets.size());
    } else {
      gate.func = pick(2) ? GateFunc::Not : GateFunc::Buf;
    }
    // Bias toward recent nets so the circuit gets depth.
    std::vector<std::string> chosen;
    while (chosen.size() < fanin) {
      std::size_t idx = pick(2) ? nets.size() - 1 - pick(std::min<std::size_t>(nets.size(), 4)) : pick(nets.size());
      const auto& name = nets[idx];
      if (std::find(chosen.begin(), chosen.end(), name) == chosen.end()) chosen.push_back(name);
    }
    gate.fanin = std::move(chosen);
    nets.push_back(gate.output);
    gates.push_back(std::move(gate));
  }
  std::vector<bool> read(gates.size(), false);
  for (const auto& g : gates)
    for (const auto& in : g.fanin)
      if (in[0] == 'g') read[std::stoul(in.substr(1))] = true;
  std::vector<std::string> outputs;
  for (std::size_t g = gates.size(); g-- > 0 && outputs.size() < spec.max_outputs;)
    if (!read[g]) outputs.push_back(gates[g].output);
  if (outputs.size() < spec.max_outputs && gates.size() > outputs.size() && pick(2)) {
    const auto& extra = gates[pick(gates.size())].output;
    if (std::find(outputs.begin(), outputs.end(), extra) == outputs.end()) outputs.push_back(extra);
  }
  std::sort(outputs.begin(), outputs.end(), [](const std::string& a, const std::string& b) {
    return std::stoul(a.substr(1)) < std::stoul(b.substr(1));
  });
  return Circuit(std::move(inputs), std::move(gates), std::move(outputs));
}

}  // namespace maxerr::oracle
