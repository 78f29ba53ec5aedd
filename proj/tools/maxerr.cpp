// maxerr: worst-case output error analysis of gate-level circuits.

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include "maxerr/maxerr.hpp"

using namespace maxerr;

namespace {

constexpr int kExitParse = 1;
constexpr int kExitWidth = 2;
constexpr int kExitUnreachable = 3;
constexpr int kExitMismatch = 4;
constexpr int kExitUsage = 64;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string circuit;
  std::optional<double> epsilon;
  std::string epsilon_map;
  std::string fault_sites = "branches";
  std::string format = "text";
  std::string output;
  bool explain = false;
  bool no_prune = false;
  bool joint = false;
  bool log_space = false;
  std::size_t max_width = kDefaultMaxWidth;
};

void add_common(CLI::App* sub, Common& c, bool with_epsilon = true) {
  sub->add_option("circuit", c.circuit, "circuit file (.bench or circuit/1 JSON)")->required();
  if (with_epsilon) {
    sub->add_option("-e,--epsilon", c.epsilon, "uniform gate error probability");
    sub->add_option("--epsilon-map", c.epsilon_map, "JSON map {gate net: epsilon}; --epsilon is the fallback");
  }
  sub->add_option("--fault-sites", c.fault_sites, "gates, or branches (fanout branches fail too)")
      ->check(CLI::IsMember({"gates", "branches"}));
  sub->add_option("-f,--format", c.format, "text|csv|json")->check(CLI::IsMember({"text", "csv", "json"}));
  sub->add_option("-o,--output", c.output, "write the report to a file");
  sub->add_flag("--explain", c.explain, "print join tree and search statistics to stderr");
  sub->add_flag("--no-prune", c.no_prune, "disable branch-and-bound pruning");
  sub->add_flag("--joint-evidence", c.joint, "one MAP query with every comparator set to 1");
  sub->add_flag("--log-space", c.log_space, "propagate in log space");
  sub->add_option("--max-width", c.max_width, "largest allowed cluster");
}

Circuit load(const Common& c) {
  Circuit circuit = load_circuit(c.circuit);
  return c.fault_sites == "branches" ? expand_fanout_branches(circuit) : circuit;
}

EpsilonSpec epsilon_of(const Common& c, const Circuit& circuit) {
  if (c.epsilon_map.empty()) {
    if (!c.epsilon) throw UsageError("need --epsilon or --epsilon-map");
    check_epsilon(*c.epsilon);
    return EpsilonSpec{*c.epsilon, {}};
  }
  if (c.epsilon) check_epsilon(*c.epsilon);
  EpsilonSpec spec = load_epsilon_map(c.epsilon_map, c.epsilon.value_or(0.0));
  std::set<std::string> gates;
  for (const auto& g : circuit.gates()) gates.insert(g.output);
  for (const auto& [name, eps] : spec.per_gate)
    if (!gates.count(name)) throw std::runtime_error("epsilon map names unknown gate " + name);
  if (!c.epsilon)
    for (const auto& g : circuit.gates())
      if (!spec.per_gate.count(g.output))
        throw UsageError("gate " + g.output + " missing from epsilon map; pass --epsilon as fallback");
  return spec;
}

AnalysisOptions options_of(const Common& c) {
  AnalysisOptions o;
  o.prune = !c.no_prune;
  o.joint_evidence = c.joint;
  o.log_space = c.log_space;
  o.max_width = c.max_width;
  return o;
}

void emit(const Common& c, const std::string& text) {
  if (c.output.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(c.output, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + c.output);
  out << text;
}

void explain(const Analyzer& an, const ErrorReport* rep) {
  std::cerr << dump_tree(an.tree(), an.structure());
  if (!rep) return;
  for (const auto& o : rep->per_output) {
    std::cerr << "query " << o.output << ": ";
    if (o.unreachable)
      std::cerr << "unreachable evidence\n";
    else
      std::cerr << o.nodes_expanded << " nodes expanded, " << o.nodes_pruned << " pruned, P(i,o) = " << o.p_map
                << "\n";
  }
}

int cmd_analyze(const Common& c) {
  Circuit circuit = load(c);
  EpsilonSpec eps = epsilon_of(c, circuit);
  Analyzer an(circuit, options_of(c));
  auto rep = an.max_error(eps);
  if (c.explain) explain(an, &rep);
  if (c.format == "csv")
    emit(c, render_report_csv(circuit, rep));
  else if (c.format == "json")
    emit(c, report_json(circuit, rep).dump(2) + "\n");
  else
    emit(c, render_report_text(circuit, rep));
  if (rep.all_unreachable()) {
    std::cerr << "maxerr: unreachable evidence on all outputs\n";
    return kExitUnreachable;
  }
  return 0;
}

int cmd_sweep(const Common& c, const std::string& grid_spec, bool no_refine, bool timing) {
  Circuit circuit = load(c);
  std::vector<double> grid;
  try {
    grid = parse_grid(grid_spec);
    Analyzer::check_grid(grid);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  Analyzer an(circuit, options_of(c));
  auto curve = an.sweep(grid, !no_refine);
  if (c.explain) explain(an, nullptr);
  if (c.format == "csv")
    emit(c, render_sweep_csv(circuit, curve, timing));
  else if (c.format == "json")
    emit(c, sweep_json(circuit, curve, timing).dump(2) + "\n");
  else
    emit(c, render_sweep_text(circuit, curve, timing));
  return 0;
}

int cmd_spectrum(const Common& c, bool above) {
  Circuit circuit = load(c);
  EpsilonSpec eps = epsilon_of(c, circuit);
  Analyzer an(circuit, options_of(c));
  if (circuit.num_inputs() > kMaxSpectrumInputs) throw UsageError("spectrum needs at most 20 inputs");
  auto s = an.spectrum(eps);
  if (c.explain) explain(an, nullptr);
  std::optional<double> threshold;
  if (above) threshold = s.mean + s.stddev;
  if (c.format == "json")
    emit(c, spectrum_json(circuit, s, threshold).dump(2) + "\n");
  else
    emit(c, render_spectrum_csv(circuit, s, threshold));
  return 0;
}

int cmd_validate(const Common& c, std::uint64_t runs, std::uint64_t seed, bool worst_only) {
  Circuit circuit = load(c);
  EpsilonSpec eps = epsilon_of(c, circuit);
  if (runs == 0) throw UsageError("--runs must be at least 1");
  const std::size_t k = circuit.num_inputs();
  if (!worst_only && k > kMaxSpectrumInputs) throw UsageError("too many inputs to validate every vector; use --worst");
  Analyzer an(circuit, options_of(c));
  auto net = an.model(eps);

  std::vector<std::vector<bool>> vectors;
  if (worst_only) {
    auto rep = an.max_error(eps);
    if (rep.all_unreachable()) vectors.push_back(input_vector(0, k));
    else vectors.push_back(rep.worst_vector);
  } else {
    for (std::uint64_t v = 0; v < (std::uint64_t{1} << k); ++v) vectors.push_back(input_vector(v, k));
  }
  oracle::McConfig cfg{runs, seed, eps.per_gate_vector(circuit)};
  std::ostringstream os;
  os << input_order_comment(circuit);
  os << "vector,output,exact,mc_estimate,mc_stderr,abs_diff\n";
  double best_exact = -1.0, best_mc = -1.0;
  std::string best_exact_vec, best_mc_vec;
  Propagator<> prop(an.tree(), net, c.max_width);
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    auto exact = conditional_errors(prop, vectors[i]);
    auto mc = oracle::monte_carlo(circuit, vectors[i], cfg, i);
    const std::string vs = bits_to_string(vectors[i]);
    for (std::size_t j = 0; j < exact.size(); ++j) {
      os << vs << "," << circuit.outputs()[j] << "," << fmt6(exact[j]) << "," << fmt6(mc[j].estimate) << ","
         << fmt6(mc[j].stderr_) << "," << fmt6(std::fabs(exact[j] - mc[j].estimate)) << "\n";
      if (exact[j] > best_exact) best_exact = exact[j], best_exact_vec = vs;
      if (mc[j].estimate > best_mc) best_mc = mc[j].estimate, best_mc_vec = vs;
    }
  }
  const double rel = best_exact > 0 ? std::fabs(best_mc - best_exact) / best_exact : 0.0;
  os << "# max exact " << fmt6(best_exact) << " at " << best_exact_vec << "; max mc " << fmt6(best_mc) << " at "
     << best_mc_vec << "; relative difference " << fmt6(rel) << "\n";
  emit(c, os.str());
  return 0;
}

struct CheckResult {
  double max_cond_diff = 0.0;
  double max_map_diff = 0.0;
  std::size_t vectors = 0;
};

CheckResult check_against_oracle(const Circuit& circuit, const EpsilonSpec& eps, const AnalysisOptions& opts) {
  if (circuit.num_inputs() > oracle::kMaxExactInputs || circuit.num_gates() > oracle::kMaxExactGates)
    throw UsageError("oracle-check needs at most 16 inputs and 22 fault sites");
  Analyzer an(circuit, opts);
  auto net = an.model(eps);
  const auto per_gate = eps.per_gate_vector(circuit);
  CheckResult r;
  Propagator<> prop(an.tree(), net, opts.max_width);
  const std::size_t k = circuit.num_inputs();
  for (std::uint64_t v = 0; v < (std::uint64_t{1} << k); ++v) {
    auto bits = input_vector(v, k);
    auto engine = conditional_errors(prop, bits);
    auto exact = oracle::exact_cond_error(circuit, bits, per_gate);
    for (std::size_t j = 0; j < exact.size(); ++j)
      r.max_cond_diff = std::max(r.max_cond_diff, std::fabs(engine[j] - exact[j]));
    ++r.vectors;
  }
  for (std::size_t j = 0; j < circuit.num_outputs(); ++j) {
    auto ex = oracle::exact_map(circuit, eps, j);
    if (ex.joint <= 0.0) continue;
    MapQuery q{&net, &an.tree(), {{net.comparator_vars[j], true}}, var_order_heuristic(net)};
    SolveOptions so;
    so.prune = opts.prune;
    so.max_width = opts.max_width;
    auto m = solve(q, so);
    r.max_map_diff = std::max(r.max_map_diff, std::fabs(m.p_map - ex.joint));
  }
  return r;
}

int cmd_oracle_check(const Common& c, std::size_t random, std::uint64_t seed, double tolerance) {
  std::ostringstream os;
  bool ok = true;
  auto report = [&](const std::string& name, const CheckResult& r) {
    const bool pass = r.max_cond_diff <= tolerance && r.max_map_diff <= tolerance;
    ok = ok && pass;
    os << (pass ? "PASS " : "FAIL ") << name << ": " << r.vectors << " vectors, max |P diff| " << r.max_cond_diff
       << ", max |MAP diff| " << r.max_map_diff << "\n";
  };
  if (random > 0) {
    const double grid[] = {0.01, 0.05, 0.1, 0.2};
    for (std::size_t i = 0; i < random; ++i) {
      oracle::RandomCircuitSpec spec;
      spec.inputs = 2 + (seed + i) % 7;
      spec.gates = 3 + (seed + i) % 10;
      Circuit rc = oracle::random_circuit(seed + i, spec);
      const double e = grid[i % 4];
      report("random seed " + std::to_string(seed + i) + " eps " + fmt6(e), check_against_oracle(rc, {e, {}}, options_of(c)));
    }
  } else {
    if (c.circuit.empty()) throw UsageError("oracle-check needs a circuit or --random N");
    Circuit circuit = load(c);
    report(c.circuit, check_against_oracle(circuit, epsilon_of(c, circuit), options_of(c)));
  }
  emit(c, os.str());
  return ok ? 0 : kExitMismatch;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Worst-case output error probability of gate-level circuits"};
  app.require_subcommand(1);

  Common common;
  auto* analyze = app.add_subcommand("analyze", "maximum output error and worst-case vector");
  add_common(analyze, common);

  auto* sweep = app.add_subcommand("sweep", "maximum error over an epsilon grid, with the 0.5 error bound");
  add_common(sweep, common, false);
  std::string grid;
  bool no_refine = false, timing = false;
  sweep->add_option("-g,--grid", grid, "start:stop:step or a comma list")->required();
  sweep->add_flag("--no-refine", no_refine, "skip bisection of the error bound");
  sweep->add_flag("--timing", timing, "add wall-clock seconds per point");

  auto* spectrum = app.add_subcommand("spectrum", "error probability for every input vector");
  add_common(spectrum, common);
  bool above = false;
  spectrum->add_flag("--above-mean-sigma", above, "keep only vectors with error >= mean + stddev");

  auto* validate = app.add_subcommand("validate", "compare inference against Monte Carlo fault injection");
  add_common(validate, common);
  std::uint64_t runs = 1'000'000, seed = 1;
  bool worst_only = false;
  validate->add_option("--runs", runs, "Monte Carlo runs per vector");
  validate->add_option("--seed", seed, "random seed");
  validate->add_flag("--worst", worst_only, "only the worst-case vector");

  auto* check = app.add_subcommand("oracle-check", "compare inference and MAP against exact fault enumeration");
  Common check_common;
  std::size_t random = 0;
  std::uint64_t check_seed = 1;
  double tolerance = 1e-9;
  check->add_option("circuit", check_common.circuit, "circuit file");
  check->add_option("-e,--epsilon", check_common.epsilon, "uniform gate error probability");
  check->add_option("--epsilon-map", check_common.epsilon_map, "JSON map {gate net: epsilon}");
  check->add_option("--fault-sites", check_common.fault_sites, "gates|branches")
      ->check(CLI::IsMember({"gates", "branches"}));
  check->add_option("--random", random, "check N seeded random circuits instead");
  check->add_option("--seed", check_seed, "first random circuit seed");
  check->add_option("--tolerance", tolerance, "allowed absolute difference");
  check->add_option("-o,--output", check_common.output, "write the report to a file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*analyze) return cmd_analyze(common);
    if (*sweep) return cmd_sweep(common, grid, no_refine, timing);
    if (*spectrum) return cmd_spectrum(common, above);
    if (*validate) return cmd_validate(common, runs, seed, worst_only);
    if (*check) return cmd_oracle_check(check_common, random, check_seed, tolerance);
  } catch (const ParseError& e) {
    std::cerr << "maxerr: " << e.what() << "\n";
    return kExitParse;
  } catch (const WidthOverflow& e) {
    std::cerr << "maxerr: " << e.what() << "\n";
    return kExitWidth;
  } catch (const UsageError& e) {
    std::cerr << "maxerr: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "maxerr: " << e.what() << "\n";
    return kExitParse;
  }
  return 0;
}
