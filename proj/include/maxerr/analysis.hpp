#pragma once

// Reported quantities: worst-case output error per epsilon, the average
// (uniform-input) error, epsilon sweeps with the 0.5 error bound, and full
// input-space spectra for small circuits.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "circuit.hpp"
#include "epsilon.hpp"
#include "join_tree.hpp"
#include "mapsearch.hpp"
#include "model.hpp"
#include "parallel.hpp"
#include "propagation.hpp"

namespace maxerr {

struct AnalysisOptions {
  bool prune = true;
  bool seed = true;
  bool joint_evidence = false;  // one query with every comparator set to 1
  bool log_space = false;
  std::size_t max_width = kDefaultMaxWidth;
  std::size_t workers = worker_count();
};

struct OutputReport {
  std::string output;  // comparator's output net; "*" for the joint query
  bool unreachable = false;
  std::vector<bool> worst_vector;
  double p_map = 0.0;  // P(i_MAP, evidence)
  double error = 0.0;  // P(O = 1 | i_MAP) for this output
  std::size_t nodes_expanded = 0;
  std::size_t nodes_pruned = 0;
};

struct ErrorReport {
  EpsilonSpec epsilon;
  std::vector<OutputReport> per_output;
  double max_error = 0.0;
  double avg_error = 0.0;
  std::vector<bool> worst_vector;  // empty when every output is unreachable
  std::string worst_output;
  bool all_unreachable() const {
    for (const auto& o : per_output)
      if (!o.unreachable) return false;
    return true;
  }
};

struct SweepPoint {
  double epsilon = 0.0;
  double max_error = 0.0;
  double avg_error = 0.0;
  std::vector<bool> worst_vector;
  std::string worst_output;
  double seconds = 0.0;
};

struct SweepCurve {
  std::vector<SweepPoint> points;
  std::optional<double> error_bound;    // first grid epsilon with max_error >= 0.5
  std::optional<double> refined_bound;  // bisection midpoint, within 1e-4
};

struct SpectrumEntry {
  std::vector<bool> vector;
  std::vector<double> per_output;
  double max_error = 0.0;
};

struct Spectrum {
  std::vector<SpectrumEntry> entries;  // 2^k rows, vector value ascending
  double mean = 0.0;
  double stddev = 0.0;
  std::vector<const SpectrumEntry*> above(double threshold) const {
    std::vector<const SpectrumEntry*> out;
    for (const auto& e : entries)
      if (e.max_error >= threshold) out.push_back(&e);
    return out;
  }
};

inline constexpr double kHardBound = 0.5;
inline constexpr std::size_t kMaxSpectrumInputs = 20;

namespace detail {

template <class Space>
double average_error(const BinaryJoinTree& tree, const ErrorModelNet& net, std::size_t max_width) {
  Propagator<Space> prop(tree, net, max_width);
  double worst = 0.0;
  for (VarId o : net.comparator_vars) worst = std::max(worst, prop.joint_marginal(o).second);
  return worst;
}

template <class Space>
OutputReport query(const BinaryJoinTree& tree, const ErrorModelNet& net, const Evidence& evid,
                   const AnalysisOptions& opts) {
  OutputReport r;
  {
    Propagator<Space> prop(tree, net, opts.max_width);
    prop.set_evidence(evid);
    if (prop.prob_evidence() <= 0.0) {
      r.unreachable = true;
      return r;
    }
  }
  MapQuery q{&net, &tree, evid, var_order_heuristic(net)};
  SolveOptions so;
  so.prune = opts.prune;
  so.seed = opts.seed;
  so.max_width = opts.max_width;
  auto m = solve<Space>(q, so);
  r.worst_vector = m.i_map;
  r.p_map = m.p_map;
  r.nodes_expanded = m.nodes_expanded;
  r.nodes_pruned = m.nodes_pruned;
  return r;
}

template <class Space>
ErrorReport max_error(const BinaryJoinTree& tree, const ErrorModelNet& net, const AnalysisOptions& opts) {
  ErrorReport rep;
  const std::size_t n = net.comparator_vars.size();
  std::vector<Evidence> queries;
  if (opts.joint_evidence) {
    Evidence all;
    for (VarId o : net.comparator_vars) all[o] = true;
    queries.push_back(all);
  } else {
    for (VarId o : net.comparator_vars) queries.push_back({{o, true}});
  }
  rep.per_output.resize(queries.size());
  parallel_for(
      queries.size(), [&](std::size_t j) { rep.per_output[j] = query<Space>(tree, net, queries[j], opts); },
      opts.workers);

  Propagator<Space> prop(tree, net, opts.max_width);
  bool found = false;
  for (std::size_t j = 0; j < queries.size(); ++j) {
    auto& o = rep.per_output[j];
    o.output = opts.joint_evidence ? "*" : net.output_names[j];
    if (o.unreachable) continue;
    auto cond = conditional_errors(prop, o.worst_vector);
    o.error = opts.joint_evidence ? *std::max_element(cond.begin(), cond.end()) : cond[j];
    for (std::size_t m = 0; m < n; ++m) {
      if (!found || cond[m] > rep.max_error) {
        rep.max_error = cond[m];
        rep.worst_vector = o.worst_vector;
        rep.worst_output = net.output_names[m];
        found = true;
      }
    }
  }
  rep.avg_error = average_error<Space>(tree, net, opts.max_width);
  return rep;
}

}  // namespace detail

/// Holds a circuit's error-model structure and join tree. The tree depends
/// only on CPT scopes, so it is built once and reused for every epsilon.
class Analyzer {
 public:
  explicit Analyzer(Circuit circuit, AnalysisOptions opts = {})
      : circuit_(std::move(circuit)), opts_(opts), structure_(build_error_model(circuit_, 0.25)),
        tree_(build_tree(structure_, opts_.max_width)) {}

  const Circuit& circuit() const { return circuit_; }
  const BinaryJoinTree& tree() const { return tree_; }
  const ErrorModelNet& structure() const { return structure_; }
  const AnalysisOptions& options() const { return opts_; }

  ErrorModelNet model(const EpsilonSpec& eps) const { return build_error_model(circuit_, eps); }

  /// Worst-case output error: one MAP query per comparator, each resulting
  /// vector checked on every comparator, global maximum reported.
  ErrorReport max_error(const EpsilonSpec& eps, std::optional<std::size_t> workers = std::nullopt) const {
    auto net = model(eps);
    AnalysisOptions o = opts_;
    if (workers) o.workers = *workers;
    auto rep = opts_.log_space ? detail::max_error<LogSpace>(tree_, net, o)
                               : detail::max_error<LinearSpace>(tree_, net, o);
    rep.epsilon = eps;
    return rep;
  }

  /// Max over outputs of P(O_j = 1) with uniform input priors.
  double avg_error(const EpsilonSpec& eps) const {
    auto net = model(eps);
    return opts_.log_space ? detail::average_error<LogSpace>(tree_, net, opts_.max_width)
                           : detail::average_error<LinearSpace>(tree_, net, opts_.max_width);
  }

  /// Evaluates every grid point; grid must be ascending within (0, 0.5].
  /// With `refine`, bisects between the crossing point and its predecessor
  /// until the bracket is at most 2e-4 wide.
  SweepCurve sweep(const std::vector<double>& grid, bool refine = true) const {
    check_grid(grid);
    SweepCurve curve;
    curve.points.resize(grid.size());
    const std::size_t inner = grid.size() >= opts_.workers ? 1 : opts_.workers;
    parallel_for(
        grid.size(),
        [&](std::size_t p) {
          auto start = std::chrono::steady_clock::now();
          auto rep = max_error(EpsilonSpec{grid[p], {}}, inner);
          auto& pt = curve.points[p];
          pt.epsilon = grid[p];
          pt.max_error = rep.max_error;
          pt.avg_error = rep.avg_error;
          pt.worst_vector = rep.worst_vector;
          pt.worst_output = rep.worst_output;
          pt.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        },
        opts_.workers);
    for (std::size_t p = 0; p < grid.size(); ++p) {
      if (curve.points[p].max_error >= kHardBound) {
        curve.error_bound = grid[p];
        if (refine) curve.refined_bound = bisect(p == 0 ? 0.0 : grid[p - 1], grid[p]);
        break;
      }
    }
    return curve;
  }

  /// Smallest epsilon in (lo, hi] whose max_error reaches 0.5, to within 1e-4.
  /// Assumes max_error(lo) < 0.5 <= max_error(hi).
  double bisect(double lo, double hi, double tolerance = 1e-4) const {
    while (hi - lo > 2 * tolerance) {
      const double mid = 0.5 * (lo + hi);
      if (max_error(EpsilonSpec{mid, {}}).max_error >= kHardBound)
        hi = mid;
      else
        lo = mid;
    }
    return 0.5 * (lo + hi);
  }

  Spectrum spectrum(const EpsilonSpec& eps) const {
    const std::size_t k = circuit_.num_inputs();
    if (k == 0 || k > kMaxSpectrumInputs)
      throw std::invalid_argument("spectrum needs 1 to " + std::to_string(kMaxSpectrumInputs) + " inputs");
    auto net = model(eps);
    const std::uint64_t total = std::uint64_t{1} << k;
    Spectrum s;
    s.entries.resize(total);
    const std::uint64_t chunk = 256;
    const std::size_t chunks = (total + chunk - 1) / chunk;
    auto fill = [&](auto space_tag) {
      using Space = decltype(space_tag);
      parallel_for(
          chunks,
          [&](std::size_t c) {
            Propagator<Space> prop(tree_, net, opts_.max_width);
            for (std::uint64_t v = c * chunk; v < std::min(total, (c + 1) * chunk); ++v) {
              auto& e = s.entries[v];
              e.vector = input_vector(v, k);
              e.per_output = conditional_errors(prop, e.vector);
              e.max_error = *std::max_element(e.per_output.begin(), e.per_output.end());
            }
          },
          opts_.workers);
    };
    if (opts_.log_space)
      fill(LogSpace{});
    else
      fill(LinearSpace{});
    double sum = 0.0;
    for (const auto& e : s.entries) sum += e.max_error;
    s.mean = sum / static_cast<double>(total);
    double sq = 0.0;
    for (const auto& e : s.entries) sq += (e.max_error - s.mean) * (e.max_error - s.mean);
    s.stddev = std::sqrt(sq / static_cast<double>(total));
    return s;
  }

  static void check_grid(const std::vector<double>& grid) {
    if (grid.empty()) throw std::invalid_argument("empty epsilon grid");
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (!(grid[i] > 0.0 && grid[i] <= 0.5)) throw std::invalid_argument("grid values must lie in (0, 0.5]");
      if (i > 0 && grid[i] <= grid[i - 1]) throw std::invalid_argument("grid must be strictly ascending");
    }
  }

 private:
  Circuit circuit_;
  AnalysisOptions opts_;
  ErrorModelNet structure_;
  BinaryJoinTree tree_;
};

/// start:stop:step (inclusive stop, snapped to the step) or a comma list.
inline std::vector<double> parse_grid(const std::string& spec) {
  std::vector<double> grid;
  auto number = [](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size()) throw std::invalid_argument("bad number in grid: '" + s + "'");
    return v;
  };
  if (spec.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(spec);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    if (parts.size() != 3) throw std::invalid_argument("grid range must be start:stop:step");
    const double start = number(parts[0]), stop = number(parts[1]), step = number(parts[2]);
    if (!(step > 0.0)) throw std::invalid_argument("grid step must be positive");
    const auto count = static_cast<std::int64_t>(std::floor((stop - start) / step + 1e-9));
    for (std::int64_t i = 0; i <= count; ++i) {
      // Round to 12 decimals so 0.005 * 21 prints as 0.105.
      grid.push_back(std::round((start + static_cast<double>(i) * step) * 1e12) / 1e12);
    }
  } else {
    std::stringstream ss(spec);
    for (std::string p; std::getline(ss, p, ',');)
      if (!p.empty()) grid.push_back(number(p));
  }
  return grid;
}

// Rendering: 6 decimal places throughout; JSON carries the same rounded
// values as CSV.

inline std::string fmt6(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

inline double round6(double x) { return std::stod(fmt6(x)); }

inline std::string input_order_comment(const Circuit& c) {
  std::string s = "# inputs:";
  for (const auto& in : c.inputs()) s += " " + in;
  return s + "\n";
}

inline const char* kSweepHeader = "epsilon,max_error,avg_error,worst_vector,worst_output";

inline std::string epsilon_label(const EpsilonSpec& eps) {
  return eps.per_gate.empty() ? fmt6(eps.uniform) : "map";
}

inline std::string render_report_csv(const Circuit& c, const ErrorReport& r) {
  std::string s = input_order_comment(c);
  s += std::string(kSweepHeader) + "\n";
  s += epsilon_label(r.epsilon) + "," + fmt6(r.max_error) + "," + fmt6(r.avg_error) + "," +
       bits_to_string(r.worst_vector) + "," + r.worst_output + "\n";
  return s;
}

inline nlohmann::json report_json(const Circuit& c, const ErrorReport& r) {
  nlohmann::json j;
  j["inputs"] = c.inputs();
  if (r.epsilon.per_gate.empty()) {
    j["epsilon"] = round6(r.epsilon.uniform);
  } else {
    nlohmann::json m = nlohmann::json::object();
    for (const auto& [k, v] : r.epsilon.per_gate) m[k] = v;
    j["epsilon"] = {{"default", round6(r.epsilon.uniform)}, {"per_gate", m}};
  }
  j["max_error"] = round6(r.max_error);
  j["avg_error"] = round6(r.avg_error);
  j["worst_vector"] = bits_to_string(r.worst_vector);
  j["worst_output"] = r.worst_output;
  j["per_output"] = nlohmann::json::array();
  for (const auto& o : r.per_output) {
    nlohmann::json e{{"output", o.output}, {"unreachable", o.unreachable}};
    if (!o.unreachable) {
      e["worst_vector"] = bits_to_string(o.worst_vector);
      e["error"] = round6(o.error);
      e["p_map"] = o.p_map;
      e["nodes_expanded"] = o.nodes_expanded;
      e["nodes_pruned"] = o.nodes_pruned;
    }
    j["per_output"].push_back(e);
  }
  return j;
}

inline std::string render_report_text(const Circuit& c, const ErrorReport& r) {
  std::ostringstream os;
  os << input_order_comment(c);
  os << "epsilon      " << epsilon_label(r.epsilon) << "\n";
  for (const auto& o : r.per_output) {
    os << "output " << o.output << ": ";
    if (o.unreachable)
      os << "unreachable evidence\n";
    else
      os << "worst vector " << bits_to_string(o.worst_vector) << "  P(O=1|i) " << fmt6(o.error) << "\n";
  }
  os << "max_error    " << fmt6(r.max_error) << "\n";
  os << "worst_vector " << (r.worst_vector.empty() ? "-" : bits_to_string(r.worst_vector)) << "\n";
  os << "worst_output " << (r.worst_output.empty() ? "-" : r.worst_output) << "\n";
  os << "avg_error    " << fmt6(r.avg_error) << "\n";
  return os.str();
}

inline std::string render_sweep_csv(const Circuit& c, const SweepCurve& s, bool timing) {
  std::string out = input_order_comment(c);
  if (s.error_bound) out += "# error_bound: " + fmt6(*s.error_bound) + "\n";
  if (s.refined_bound) out += "# refined_bound: " + fmt6(*s.refined_bound) + "\n";
  out += std::string(kSweepHeader) + (timing ? ",seconds\n" : "\n");
  for (const auto& p : s.points) {
    out += fmt6(p.epsilon) + "," + fmt6(p.max_error) + "," + fmt6(p.avg_error) + "," +
           bits_to_string(p.worst_vector) + "," + p.worst_output;
    if (timing) out += "," + fmt6(p.seconds);
    out += "\n";
  }
  return out;
}

inline nlohmann::json sweep_json(const Circuit& c, const SweepCurve& s, bool timing) {
  nlohmann::json j;
  j["inputs"] = c.inputs();
  j["error_bound"] = s.error_bound ? nlohmann::json(round6(*s.error_bound)) : nlohmann::json(nullptr);
  j["refined_bound"] = s.refined_bound ? nlohmann::json(round6(*s.refined_bound)) : nlohmann::json(nullptr);
  j["points"] = nlohmann::json::array();
  for (const auto& p : s.points) {
    nlohmann::json e{{"epsilon", round6(p.epsilon)},
                     {"max_error", round6(p.max_error)},
                     {"avg_error", round6(p.avg_error)},
                     {"worst_vector", bits_to_string(p.worst_vector)},
                     {"worst_output", p.worst_output}};
    if (timing) e["seconds"] = round6(p.seconds);
    j["points"].push_back(e);
  }
  return j;
}

inline std::string render_sweep_text(const Circuit& c, const SweepCurve& s, bool timing) {
  std::ostringstream os;
  os << input_order_comment(c);
  for (const auto& p : s.points) {
    os << "eps " << fmt6(p.epsilon) << "  max " << fmt6(p.max_error) << "  avg " << fmt6(p.avg_error) << "  "
       << bits_to_string(p.worst_vector) << " @ " << p.worst_output;
    if (timing) os << "  " << fmt6(p.seconds) << " s";
    os << "\n";
  }
  os << "error bound: " << (s.error_bound ? fmt6(*s.error_bound) : std::string("none")) << "\n";
  if (s.refined_bound) os << "refined bound: " << fmt6(*s.refined_bound) << "\n";
  return os.str();
}

inline std::string render_spectrum_csv(const Circuit& c, const Spectrum& s, std::optional<double> threshold) {
  std::string out = input_order_comment(c);
  out += "# mean: " + fmt6(s.mean) + "\n# stddev: " + fmt6(s.stddev) + "\n";
  out += "vector";
  for (const auto& o : c.outputs()) out += "," + o;
  out += ",max_error\n";
  for (const auto& e : s.entries) {
    if (threshold && e.max_error < *threshold) continue;
    out += bits_to_string(e.vector);
    for (double p : e.per_output) out += "," + fmt6(p);
    out += "," + fmt6(e.max_error) + "\n";
  }
  return out;
}

inline nlohmann::json spectrum_json(const Circuit& c, const Spectrum& s, std::optional<double> threshold) {
  nlohmann::json j;
  j["inputs"] = c.inputs();
  j["outputs"] = c.outputs();
  j["mean"] = round6(s.mean);
  j["stddev"] = round6(s.stddev);
  j["entries"] = nlohmann::json::array();
  for (const auto& e : s.entries) {
    if (threshold && e.max_error < *threshold) continue;
    nlohmann::json per = nlohmann::json::array();
    for (double p : e.per_output) per.push_back(round6(p));
    j["entries"].push_back({{"vector", bits_to_string(e.vector)}, {"per_output", per}, {"max_error", round6(e.max_error)}});
  }
  return j;
}

}  // namespace maxerr
