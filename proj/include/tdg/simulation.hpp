#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tdg/core.hpp"

namespace tdg {

/// Simulation study: synthetic p-values with m1 false nulls, the four-stage
/// chain evaluated on the sets K_i of the i smallest p-values, averaged
/// across replicates.

enum class Method { Original, Coherent, Closed, Admissible };

const char* method_name(Method m);
Method parse_method(const std::string& name);

struct SimulationConfig {
  int m = 1000;
  int m1 = 0;
  double gamma = 0.0;
  int reps = 10000;
  std::uint64_t seed = 0;
  std::vector<int> report_sets;  // the i of each reported K_i
  std::vector<Method> methods = {Method::Original, Method::Coherent, Method::Closed,
                                 Method::Admissible};
  double alpha = 0.05;
  int threads = 0;  // 0 = hardware concurrency
};

struct TruthAssignment {
  IndexSet false_ids;
};

struct SimulationResult {
  SimulationConfig config;
  /// averages[method][set]: mean bound on K_{report_sets[set]}
  std::vector<std::vector<double>> averages;
  /// per method: fraction of replicates where some reported bound exceeded
  /// the true discovery count of its set
  std::vector<double> violation_rate;
  /// (replicate, set) pairs where the requested chain ordering failed
  std::int64_t chain_violations = 0;
};

/// False nulls are ids 1..m1 with p_i = Phi(Z_i - gamma); true nulls are iid
/// uniform. Deterministic given (seed, rep).
std::pair<PValueVector, TruthAssignment> generate_pvalues(const SimulationConfig& cfg,
                                                          int rep);

SimulationResult run_study(const SimulationConfig& cfg);

}  // namespace tdg
