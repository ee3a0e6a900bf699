#pragma once

// Replicated simulation study: for every noise level and replication, draw a
// ground-truth network and a dataset, run each selection method and record
// which features it keeps.

#include <cstdint>
#include <exception>
#include <span>
#include <vector>

#include "agl/metrics.hpp"
#include "agl/parallel.hpp"
#include "agl/pipeline.hpp"
#include "agl/random.hpp"
#include "agl/simgen.hpp"

namespace agl {

/// Seeds of replication `rep`. They do not depend on the noise level or the
/// sample size, so cells that differ only in sigma2 or n are paired: same
/// generating network, same inputs, same (scaled) noise draws.
struct ReplicationSeeds {
  std::uint64_t model;
  std::uint64_t data;
  std::uint64_t train;
};

inline ReplicationSeeds replication_seeds(std::uint64_t base, int rep) {
  const auto r = static_cast<std::uint64_t>(rep);
  return {derive_seed(base, {stream::model, r}), derive_seed(base, {stream::inputs, r}),
          derive_seed(base, {stream::train, r})};
}

/// Records are ordered by (sigma2 index, replication, method index) regardless
/// of `jobs`. A failing fit is stored as a failed record.
inline ExperimentReport run_experiment(const SimConfig& cfg, std::span<const Method> methods,
                                       const PipelineConfig& pc, const TrainConfig& train_cfg,
                                       unsigned jobs = 1) {
  cfg.validate();
  pc.validate();
  train_cfg.validate();
  detail::require(!methods.empty(), "no methods requested");
  detail::require(train_cfg.n_hidden == cfg.n_hidden,
                  "training width must match the simulated network width");

  const std::size_t n_sigma = cfg.sigma2_list.size();
  const std::size_t n_rep = static_cast<std::size_t>(cfg.repeats);
  std::vector<std::vector<ReplicationRecord>> cells(n_sigma * n_rep);

  parallel_for(cells.size(), jobs, [&](std::size_t task) {
    const std::size_t s = task / n_rep;
    const int rep = static_cast<int>(task % n_rep);
    const double sigma2 = cfg.sigma2_list[s];
    const auto seeds = replication_seeds(cfg.seed, rep);

    GroundTruthModel model = generate_true_model(cfg, seeds.model, sigma2);
    const Dataset data = generate_dataset(model, cfg.n, seeds.data);
    const auto support = support_mask_true(model);

    auto& out = cells[task];
    auto blank = [&](Method m) {
      ReplicationRecord r;
      r.sigma2 = sigma2;
      r.method = m;
      r.replication = rep;
      r.support = support;
      return r;
    };
    try {
      const auto results = run_methods(data, methods, pc, train_cfg.with_seed(seeds.train));
      for (const auto& res : results) {
        ReplicationRecord r = blank(res.method);
        r.selected = res.selected;
        r.norms = res.norms;
        r.chosen_lambda = res.chosen_lambda;
        r.chosen_zeta = res.chosen_zeta;
        out.push_back(std::move(r));
      }
    } catch (const std::exception& e) {
      out.clear();
      for (Method m : methods) {
        ReplicationRecord r = blank(m);
        r.failed = true;
        r.error = e.what();
        out.push_back(std::move(r));
      }
    }
  });

  ExperimentReport report;
  for (auto& c : cells)
    for (auto& r : c) report.records.push_back(std::move(r));
  return report;
}

}  // namespace agl
