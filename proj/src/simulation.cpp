#include "tdg/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "tdg/procedures.hpp"
#include "tdg/rng.hpp"

namespace tdg {

namespace {

constexpr int kBatches = 10;

int resolve_threads(int threads) {
  if (threads > 0) return threads;
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

void validate(const SimulationConfig& cfg) {
  if (cfg.m < 1) throw std::domain_error("simulation: m must be >= 1");
  if (cfg.m1 < 0 || cfg.m1 > cfg.m) {
    throw std::domain_error("simulation: m1 must lie in [0, m]");
  }
  if (cfg.reps < 1) throw std::domain_error("simulation: reps must be >= 1");
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) {
    throw std::domain_error("simulation: alpha must lie in (0,1)");
  }
  if (cfg.methods.empty()) throw std::domain_error("simulation: no methods requested");
  if (cfg.report_sets.empty()) {
    throw std::domain_error("simulation: no report sets requested");
  }
  for (int i : cfg.report_sets) {
    if (i < 1 || i > cfg.m) {
      throw std::domain_error("simulation: report set K_" + std::to_string(i) +
                              " outside {1..m}");
    }
  }
}

DiscoveryProcedure build_method(Method method, const PValueVector& p, double alpha) {
  switch (method) {
    case Method::Original: return kr_original_procedure(p, alpha);
    case Method::Coherent: return kr_coherent_procedure(p, alpha);
    case Method::Closed: return kr_closed_procedure(p, alpha);
    case Method::Admissible: return kr_admissible_procedure(p, alpha);
  }
  throw std::logic_error("build_method: unknown method");
}

/// Rank of a method in the chain ordering original <= coherent <= closed
/// <= admissible.
int chain_rank(Method m) { return static_cast<int>(m); }

struct BatchTotals {
  std::vector<std::vector<double>> sums;       // [method][set]
  std::vector<std::int64_t> violated_reps;     // [method]
  std::int64_t chain_violations = 0;
};

BatchTotals run_reps(const SimulationConfig& cfg, int rep_begin, int rep_end) {
  const std::size_t nmethods = cfg.methods.size();
  const std::size_t nsets = cfg.report_sets.size();
  BatchTotals totals;
  totals.sums.assign(nmethods, std::vector<double>(nsets, 0.0));
  totals.violated_reps.assign(nmethods, 0);

  std::vector<std::vector<int>> bounds(nmethods, std::vector<int>(nsets, 0));
  for (int rep = rep_begin; rep < rep_end; ++rep) {
    auto [p, truth] = generate_pvalues(cfg, rep);
    std::vector<int> order(static_cast<std::size_t>(cfg.m));
    std::iota(order.begin(), order.end(), 1);
    std::stable_sort(order.begin(), order.end(),
                     [&p](int a, int b) { return p.at(a) < p.at(b); });

    std::vector<IndexSet> sets;
    std::vector<int> true_counts;
    sets.reserve(nsets);
    for (int i : cfg.report_sets) {
      IndexSet K(std::vector<int>(order.begin(), order.begin() + i));
      true_counts.push_back(intersection_size(K, truth.false_ids));
      sets.push_back(std::move(K));
    }

    for (std::size_t mi = 0; mi < nmethods; ++mi) {
      DiscoveryProcedure proc = build_method(cfg.methods[mi], p, cfg.alpha);
      bool violated = false;
      for (std::size_t si = 0; si < nsets; ++si) {
        int b = proc.bound(sets[si]);
        bounds[mi][si] = b;
        totals.sums[mi][si] += b;
        if (b > true_counts[si]) violated = true;
      }
      if (violated) ++totals.violated_reps[mi];
    }

    // Chain ordering across the requested methods, per reported set.
    for (std::size_t si = 0; si < nsets; ++si) {
      for (std::size_t a = 0; a < nmethods; ++a) {
        for (std::size_t b = 0; b < nmethods; ++b) {
          if (chain_rank(cfg.methods[a]) < chain_rank(cfg.methods[b]) &&
              bounds[a][si] > bounds[b][si]) {
            ++totals.chain_violations;
          }
        }
      }
    }
  }
  return totals;
}

}  // namespace

const char* method_name(Method m) {
  switch (m) {
    case Method::Original: return "original";
    case Method::Coherent: return "coherent";
    case Method::Closed: return "closed";
    case Method::Admissible: return "admissible";
  }
  throw std::logic_error("method_name: unknown method");
}

Method parse_method(const std::string& name) {
  if (name == "original") return Method::Original;
  if (name == "coherent") return Method::Coherent;
  if (name == "closed") return Method::Closed;
  if (name == "admissible") return Method::Admissible;
  throw std::invalid_argument("unknown method: " + name);
}

std::pair<PValueVector, TruthAssignment> generate_pvalues(const SimulationConfig& cfg,
                                                          int rep) {
  CounterRng rng(cfg.seed, static_cast<std::uint64_t>(rep));
  std::vector<double> p(static_cast<std::size_t>(cfg.m));
  for (int i = 0; i < cfg.m1; ++i) {
    p[static_cast<std::size_t>(i)] = normal_cdf(rng.next_normal() - cfg.gamma);
  }
  for (int i = cfg.m1; i < cfg.m; ++i) {
    p[static_cast<std::size_t>(i)] = rng.next_uniform();
  }
  std::vector<int> false_ids(static_cast<std::size_t>(cfg.m1));
  std::iota(false_ids.begin(), false_ids.end(), 1);
  return {PValueVector(std::move(p)), TruthAssignment{IndexSet(std::move(false_ids))}};
}

SimulationResult run_study(const SimulationConfig& cfg) {
  validate(cfg);
  const std::size_t nmethods = cfg.methods.size();
  const std::size_t nsets = cfg.report_sets.size();

  std::vector<BatchTotals> batches(kBatches);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int b = next.fetch_add(1); b < kBatches; b = next.fetch_add(1)) {
      int begin = static_cast<int>(static_cast<std::int64_t>(cfg.reps) * b / kBatches);
      int end = static_cast<int>(static_cast<std::int64_t>(cfg.reps) * (b + 1) / kBatches);
      batches[static_cast<std::size_t>(b)] = run_reps(cfg, begin, end);
    }
  };
  int nthreads = std::min(resolve_threads(cfg.threads), kBatches);
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(nthreads));
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  SimulationResult res;
  res.config = cfg;
  res.averages.assign(nmethods, std::vector<double>(nsets, 0.0));
  res.violation_rate.assign(nmethods, 0.0);
  for (const BatchTotals& bt : batches) {
    for (std::size_t mi = 0; mi < nmethods; ++mi) {
      for (std::size_t si = 0; si < nsets; ++si) {
        res.averages[mi][si] += bt.sums[mi][si];
      }
      res.violation_rate[mi] += static_cast<double>(bt.violated_reps[mi]);
    }
    res.chain_violations += bt.chain_violations;
  }
  for (std::size_t mi = 0; mi < nmethods; ++mi) {
    for (std::size_t si = 0; si < nsets; ++si) {
      res.averages[mi][si] /= static_cast<double>(cfg.reps);
    }
    res.violation_rate[mi] /= static_cast<double>(cfg.reps);
  }
  return res;
}

}  // namespace tdg
