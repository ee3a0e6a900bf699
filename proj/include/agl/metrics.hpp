#pragma once

// Selection metrics over replicated experiments, and the held-out accuracy
// comparison between a full and a feature-reduced network.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "agl/core_net.hpp"
#include "agl/error.hpp"
#include "agl/optim.hpp"
#include "agl/parallel.hpp"
#include "agl/penalty.hpp"
#include "agl/pipeline.hpp"
#include "agl/random.hpp"

namespace agl {

/// One (noise level, method, replication) cell.
struct ReplicationRecord {
  double sigma2 = 0.0;
  Method method = Method::GL;
  int replication = 0;
  std::vector<bool> selected;
  std::vector<bool> support;
  std::vector<double> norms;
  double chosen_lambda = 0.0;
  std::optional<double> chosen_zeta;
  bool failed = false;
  std::string error;
};

struct ExperimentReport {
  std::vector<ReplicationRecord> records;

  /// Successful records of one cell.
  std::vector<const ReplicationRecord*> cell(double sigma2, Method method) const {
    std::vector<const ReplicationRecord*> out;
    for (const auto& r : records)
      if (r.sigma2 == sigma2 && r.method == method && !r.failed) out.push_back(&r);
    return out;
  }

  /// Distinct noise levels in first-appearance order.
  std::vector<double> sigma2_levels() const {
    std::vector<double> out;
    for (const auto& r : records)
      if (std::find(out.begin(), out.end(), r.sigma2) == out.end()) out.push_back(r.sigma2);
    return out;
  }

  std::vector<Method> methods() const {
    std::vector<Method> out;
    for (const auto& r : records)
      if (std::find(out.begin(), out.end(), r.method) == out.end()) out.push_back(r.method);
    return out;
  }
};

struct FeatureRate {
  std::size_t feature = 0;
  double rate = 0.0;
};

namespace detail {

inline std::vector<FeatureRate> selection_rates(const ExperimentReport& report, double sigma2,
                                                Method method, bool on_support) {
  const auto cell = report.cell(sigma2, method);
  if (cell.empty())
    throw ContractViolation("report has no successful records for sigma2=" +
                            std::to_string(sigma2) + " method=" + to_string(method));
  const auto& support = cell.front()->support;
  for (const auto* r : cell)
    require(r->support == support && r->selected.size() == support.size(),
            "inconsistent supports within one report cell");
  std::vector<FeatureRate> out;
  for (std::size_t k = 0; k < support.size(); ++k) {
    if (support[k] != on_support) continue;
    std::size_t hits = 0;
    for (const auto* r : cell) hits += r->selected[k];
    out.push_back({k, static_cast<double>(hits) / static_cast<double>(cell.size())});
  }
  return out;
}

}  // namespace detail

/// Per truly non-significant feature: fraction of replications selecting it.
inline std::vector<FeatureRate> fdr_per_feature(const ExperimentReport& report, double sigma2,
                                                Method method) {
  return detail::selection_rates(report, sigma2, method, false);
}

/// Per truly significant feature: fraction of replications selecting it.
inline std::vector<FeatureRate> tpr_per_feature(const ExperimentReport& report, double sigma2,
                                                Method method) {
  return detail::selection_rates(report, sigma2, method, true);
}

struct RateRow {
  double sigma2 = 0.0;
  Method method = Method::GL;
  std::size_t feature = 0;
  double rate = 0.0;
};

/// Long-format table, one row per (sigma2, method, non-significant feature).
inline std::vector<RateRow> fdr_table(const ExperimentReport& report) {
  std::vector<RateRow> rows;
  for (double s : report.sigma2_levels())
    for (Method m : report.methods()) {
      if (report.cell(s, m).empty()) continue;
      for (const auto& fr : fdr_per_feature(report, s, m)) rows.push_back({s, m, fr.feature, fr.rate});
    }
  return rows;
}

inline std::vector<RateRow> tpr_table(const ExperimentReport& report) {
  std::vector<RateRow> rows;
  for (double s : report.sigma2_levels())
    for (Method m : report.methods()) {
      if (report.cell(s, m).empty()) continue;
      for (const auto& fr : tpr_per_feature(report, s, m)) rows.push_back({s, m, fr.feature, fr.rate});
    }
  return rows;
}

inline double accuracy(const std::vector<bool>& predictions, const std::vector<bool>& truth) {
  detail::require(predictions.size() == truth.size(), "accuracy needs equal-length vectors");
  detail::require(!truth.empty(), "accuracy of an empty vector is undefined");
  std::size_t same = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) same += predictions[i] == truth[i];
  return static_cast<double>(same) / static_cast<double>(truth.size());
}

/// Test-set accuracy of a binary classifier, thresholding predict_prob at 0.5.
inline double classification_accuracy(const NetworkParams& params, const Dataset& test) {
  std::vector<bool> pred(test.size()), truth(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    pred[i] = predict_prob(params, test.row(i)) >= 0.5;
    truth[i] = test.target(i) == 1.0;
  }
  return accuracy(pred, truth);
}

struct ValidationResult {
  double mean_accuracy_full = 0.0;
  double mean_accuracy_selected = 0.0;
  std::vector<double> accuracy_full;      // per repeat
  std::vector<double> accuracy_selected;  // per repeat
};

inline constexpr double kTrainFraction = 0.75;

/// Repeated 75/25 split; fits an unpenalized network on all features and on
/// the masked features (non-selected columns removed) with the same split and
/// training seed, and averages test accuracy.
inline ValidationResult validation_study(const Dataset& data, const std::vector<bool>& mask,
                                         const TrainConfig& cfg, int repeats, unsigned jobs = 1) {
  detail::require(data.task() == Task::binary, "validation study needs a binary task");
  detail::require(repeats >= 1, "repeats must be >= 1");
  detail::require(mask.size() == data.n_inputs(), "mask length does not match dataset");
  detail::require(data.size() >= 2, "need at least two rows to split");
  const Dataset reduced = select_columns(data, mask);

  ValidationResult out;
  out.accuracy_full.resize(static_cast<std::size_t>(repeats));
  out.accuracy_selected.resize(static_cast<std::size_t>(repeats));
  const std::size_t n_train = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(kTrainFraction * static_cast<double>(data.size()))), 1,
      data.size() - 1);

  parallel_for(static_cast<std::size_t>(repeats), jobs, [&](std::size_t r) {
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(cfg.seed, {stream::split, r}));
    rng.shuffle(std::span<std::size_t>(order));
    const std::span<const std::size_t> tr(order.data(), n_train);
    const std::span<const std::size_t> te(order.data() + n_train, data.size() - n_train);
    const TrainConfig rcfg = cfg.with_seed(derive_seed(cfg.seed, {stream::train, r}));

    const auto full = fit_erm(subset(data, tr), rcfg);
    out.accuracy_full[r] = classification_accuracy(full.params, subset(data, te));
    const auto small = fit_erm(subset(reduced, tr), rcfg);
    out.accuracy_selected[r] = classification_accuracy(small.params, subset(reduced, te));
  });
  auto mean = [](const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  out.mean_accuracy_full = mean(out.accuracy_full);
  out.mean_accuracy_selected = mean(out.accuracy_selected);
  return out;
}

}  // namespace agl
