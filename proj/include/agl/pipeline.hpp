#pragma once

// Estimation pipelines built on `train`:
//
//   GL       cross-validate lambda, fit the group lasso, threshold group norms
//   ERM_AGL  fit the unpenalized network, use it to weight an adaptive group
//            lasso, cross-validate zeta, fit, threshold
//   GL_AGL   as ERM_AGL but the initial estimate is the cross-validated
//            group lasso fit
//
// A feature is selected when its first-layer group norm exceeds the cutoff.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "agl/core_net.hpp"
#include "agl/error.hpp"
#include "agl/optim.hpp"
#include "agl/parallel.hpp"
#include "agl/penalty.hpp"
#include "agl/random.hpp"

namespace agl {

enum class Method { GL, ERM_AGL, GL_AGL };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::GL:
      return "GL";
    case Method::ERM_AGL:
      return "ERM_AGL";
    case Method::GL_AGL:
      return "GL_AGL";
  }
  return "?";
}

inline std::optional<Method> parse_method(std::string_view s) {
  if (s == "GL" || s == "gl") return Method::GL;
  if (s == "ERM_AGL" || s == "erm_agl") return Method::ERM_AGL;
  if (s == "GL_AGL" || s == "gl_agl") return Method::GL_AGL;
  return std::nullopt;
}

inline constexpr double kDefaultCutoff = 1e-3;

inline std::vector<double> default_regression_grid() { return {0.001, 0.01, 0.1, 1.0}; }
inline std::vector<double> default_classification_grid() {
  return {0.001, 0.01, 0.1, 1.0, 2.0, 4.0, 8.0, 16.0};
}

struct PipelineConfig {
  std::vector<double> lambda_grid = default_regression_grid();
  /// Falls back to lambda_grid when empty.
  std::vector<double> zeta_grid;
  int folds = 3;
  double gamma = 2.0;
  double cutoff = kDefaultCutoff;
  double freeze_tol = kDefaultFreezeTol;

  std::span<const double> zetas() const {
    return zeta_grid.empty() ? std::span<const double>(lambda_grid)
                             : std::span<const double>(zeta_grid);
  }

  void validate() const {
    detail::require(!lambda_grid.empty(), "lambda grid is empty");
    for (double v : lambda_grid) detail::require(v >= 0.0, "grid values must be >= 0");
    for (double v : zeta_grid) detail::require(v >= 0.0, "grid values must be >= 0");
    detail::require(folds >= 2, "cross-validation needs at least 2 folds");
    detail::require(gamma > 0.0, "gamma must be positive");
    detail::require(cutoff > 0.0, "cutoff must be positive");
    detail::require(freeze_tol >= 0.0, "freeze tolerance must be >= 0");
  }
};

inline TrainResult fit_erm(const Dataset& data, const TrainConfig& cfg) {
  return train(data, PenaltySpec::none(), cfg);
}

inline TrainResult fit_group_lasso(const Dataset& data, double lambda, const TrainConfig& cfg) {
  detail::require(lambda >= 0.0, "lambda must be >= 0");
  return train(data, PenaltySpec::group_lasso(lambda), cfg);
}

/// Adaptive group lasso with weights from `init`, warm-started at `init`.
inline TrainResult fit_adaptive(const Dataset& data, double zeta, const AdaptiveWeights& weights,
                                const NetworkParams& init, const TrainConfig& cfg) {
  detail::require(zeta >= 0.0, "zeta must be >= 0");
  return train(data, PenaltySpec::adaptive(zeta, weights), cfg, init);
}

inline TrainResult fit_adaptive(const Dataset& data, double zeta, double gamma,
                                const NetworkParams& init, const TrainConfig& cfg,
                                double freeze_tol = kDefaultFreezeTol) {
  return fit_adaptive(data, zeta, adaptive_weights(init, gamma, freeze_tol), init, cfg);
}

/// mask[k] = group norm k > cutoff (strict).
inline std::vector<bool> select_features(const GroupNorms& norms, double cutoff) {
  detail::require(cutoff > 0.0, "cutoff must be positive");
  std::vector<bool> mask(norms.size());
  for (std::size_t k = 0; k < norms.size(); ++k) mask[k] = norms[k] > cutoff;
  return mask;
}

inline std::vector<bool> select_features(const NetworkParams& params, double cutoff) {
  return select_features(group_norms(params), cutoff);
}

struct CvEntry {
  double value = 0.0;
  double mean_loss = 0.0;
};

struct CvResult {
  double best = 0.0;
  std::vector<CvEntry> table;  // grid order
};

/// Row indices of each fold: a seeded shuffle cut into k contiguous blocks.
inline std::vector<std::vector<std::size_t>> make_folds(std::size_t n, int k, std::uint64_t seed) {
  detail::require(k >= 2, "cross-validation needs at least 2 folds");
  detail::require(n >= static_cast<std::size_t>(k), "fewer rows than folds");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  std::vector<std::vector<std::size_t>> folds(static_cast<std::size_t>(k));
  const std::size_t kk = static_cast<std::size_t>(k);
  for (std::size_t f = 0; f < kk; ++f)
    folds[f].assign(order.begin() + static_cast<std::ptrdiff_t>(f * n / kk),
                    order.begin() + static_cast<std::ptrdiff_t>((f + 1) * n / kk));
  return folds;
}

/// k-fold cross-validation of a one-parameter fitting procedure.
///
/// `fit(train_rows, value, cfg)` must return the fitted NetworkParams. Each
/// grid value is scored by the unpenalized validation loss averaged over
/// folds; fold f trains with the same derived seed for every grid value.
/// The smallest value wins ties.
template <typename Fit>
CvResult cross_validate(const Dataset& data, std::span<const double> grid, int k, Fit&& fit,
                        const TrainConfig& cfg) {
  detail::require(!grid.empty(), "cross-validation grid is empty");
  const auto folds = make_folds(data.size(), k, derive_seed(cfg.seed, {stream::cv_split}));

  std::vector<Dataset> train_sets, valid_sets;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::vector<std::size_t> rows;
    for (std::size_t g = 0; g < folds.size(); ++g)
      if (g != f) rows.insert(rows.end(), folds[g].begin(), folds[g].end());
    train_sets.push_back(subset(data, rows));
    valid_sets.push_back(subset(data, folds[f]));
  }

  CvResult result;
  for (double value : grid) {
    double total = 0.0;
    for (std::size_t f = 0; f < folds.size(); ++f) {
      const TrainConfig fold_cfg = cfg.with_seed(derive_seed(cfg.seed, {stream::cv_train, f}));
      const NetworkParams fitted = fit(train_sets[f], value, fold_cfg);
      total += empirical_risk(fitted, valid_sets[f], cfg.loss);
    }
    result.table.push_back({value, total / static_cast<double>(folds.size())});
  }
  const CvEntry* best = &result.table.front();
  for (const auto& e : result.table)
    if (e.mean_loss < best->mean_loss || (e.mean_loss == best->mean_loss && e.value < best->value))
      best = &e;
  result.best = best->value;
  return result;
}

struct SelectionResult {
  Method method = Method::GL;
  NetworkParams fitted;
  GroupNorms norms;
  std::vector<bool> selected;
  double chosen_lambda = 0.0;          // GL, GL_AGL
  std::optional<double> chosen_zeta;   // ERM_AGL, GL_AGL
  std::vector<CvEntry> cv_table;       // lambda table (GL) or zeta table (adaptive)
  std::vector<CvEntry> lambda_cv_table;  // GL_AGL only: the initializer's table
  std::vector<double> trace;
  std::vector<std::string> warnings;
};

namespace detail {

struct Stage {
  TrainResult fit;
  CvResult cv;
};

inline Stage group_lasso_stage(const Dataset& data, const PipelineConfig& pc,
                               const TrainConfig& cfg) {
  auto fit = [](const Dataset& d, double lambda, const TrainConfig& c) {
    return fit_group_lasso(d, lambda, c).params;
  };
  Stage s;
  s.cv = cross_validate(data, pc.lambda_grid, pc.folds, fit, cfg);
  s.fit = fit_group_lasso(data, s.cv.best, cfg);
  return s;
}

inline Stage adaptive_stage(const Dataset& data, const NetworkParams& init,
                            const PipelineConfig& pc, const TrainConfig& cfg) {
  const AdaptiveWeights weights = adaptive_weights(init, pc.gamma, pc.freeze_tol);
  auto fit = [&](const Dataset& d, double zeta, const TrainConfig& c) {
    return fit_adaptive(d, zeta, weights, init, c).params;
  };
  Stage s;
  s.cv = cross_validate(data, pc.zetas(), pc.folds, fit, cfg);
  s.fit = fit_adaptive(data, s.cv.best, weights, init, cfg);
  return s;
}

inline SelectionResult finish(Method method, TrainResult fit, const PipelineConfig& pc) {
  SelectionResult r;
  r.method = method;
  r.norms = group_norms(fit.params);
  r.selected = select_features(r.norms, pc.cutoff);
  r.fitted = std::move(fit.params);
  r.trace = std::move(fit.trace);
  return r;
}

inline void check_zeta_rate(SelectionResult& r, std::size_t n, double gamma) {
  if (!r.chosen_zeta) return;
  const double floor = std::pow(static_cast<double>(n), -gamma / 4.0);
  if (*r.chosen_zeta < floor)
    r.warnings.push_back("chosen zeta " + std::to_string(*r.chosen_zeta) +
                         " is below n^(-gamma/4) = " + std::to_string(floor));
}

}  // namespace detail

/// Runs several methods on one dataset. Equivalent to calling run_pipeline
/// for each method, but the group lasso stage is computed once and shared
/// between GL and GL_AGL (it is deterministic, so the results are identical).
inline std::vector<SelectionResult> run_methods(const Dataset& data,
                                                std::span<const Method> methods,
                                                const PipelineConfig& pc,
                                                const TrainConfig& cfg) {
  pc.validate();
  cfg.validate();
  std::optional<detail::Stage> gl;
  auto gl_stage = [&]() -> const detail::Stage& {
    if (!gl) gl = detail::group_lasso_stage(data, pc, cfg);
    return *gl;
  };

  std::vector<SelectionResult> out;
  for (Method m : methods) {
    SelectionResult r;
    switch (m) {
      case Method::GL: {
        const auto& s = gl_stage();
        r = detail::finish(m, s.fit, pc);
        r.chosen_lambda = s.cv.best;
        r.cv_table = s.cv.table;
        break;
      }
      case Method::ERM_AGL: {
        const TrainResult erm = fit_erm(data, cfg);
        auto s = detail::adaptive_stage(data, erm.params, pc, cfg);
        r = detail::finish(m, std::move(s.fit), pc);
        r.chosen_zeta = s.cv.best;
        r.cv_table = std::move(s.cv.table);
        break;
      }
      case Method::GL_AGL: {
        const auto& g = gl_stage();
        auto s = detail::adaptive_stage(data, g.fit.params, pc, cfg);
        r = detail::finish(m, std::move(s.fit), pc);
        r.chosen_lambda = g.cv.best;
        r.lambda_cv_table = g.cv.table;
        r.chosen_zeta = s.cv.best;
        r.cv_table = std::move(s.cv.table);
        break;
      }
    }
    detail::check_zeta_rate(r, data.size(), pc.gamma);
    out.push_back(std::move(r));
  }
  return out;
}

inline SelectionResult run_pipeline(const Dataset& data, Method method, const PipelineConfig& pc,
                                    const TrainConfig& cfg) {
  const Method ms[] = {method};
  return std::move(run_methods(data, ms, pc, cfg).front());
}

struct StabilityResult {
  std::vector<double> frequency;            // per feature
  std::vector<std::vector<bool>> masks;     // per repeat
  std::vector<std::uint64_t> seeds;         // per repeat
};

/// Refits the same data `repeats` times with seeds cfg.seed + r and counts how
/// often each feature is selected. Randomness comes only from initialization,
/// fold assignment and mini-batch order.
inline StabilityResult stability_run(const Dataset& data, Method method, const PipelineConfig& pc,
                                     const TrainConfig& cfg, int repeats, unsigned jobs = 1) {
  detail::require(repeats >= 1, "repeats must be >= 1");
  StabilityResult r;
  r.masks.resize(static_cast<std::size_t>(repeats));
  for (int i = 0; i < repeats; ++i) r.seeds.push_back(cfg.seed + static_cast<std::uint64_t>(i));
  parallel_for(r.masks.size(), jobs, [&](std::size_t i) {
    r.masks[i] = run_pipeline(data, method, pc, cfg.with_seed(r.seeds[i])).selected;
  });
  r.frequency.assign(data.n_inputs(), 0.0);
  for (const auto& m : r.masks)
    for (std::size_t k = 0; k < m.size(); ++k) r.frequency[k] += m[k];
  for (double& f : r.frequency) f /= static_cast<double>(repeats);
  return r;
}

struct ZetaPathReport {
  std::vector<double> zetas;               // ascending
  std::vector<std::vector<bool>> masks;
  /// indices i where masks[i] is not a subset of masks[i - 1]
  std::vector<std::size_t> violations;

  bool monotone() const noexcept { return violations.empty(); }
};

/// Fits the adaptive estimator along an increasing zeta path from the same
/// init and seed and flags every step whose selected set grows. Non-convexity
/// can legitimately cause such steps, so they are reported, not thrown.
inline ZetaPathReport zeta_path(const Dataset& data, std::vector<double> zetas,
                                const NetworkParams& init, const PipelineConfig& pc,
                                const TrainConfig& cfg) {
  std::sort(zetas.begin(), zetas.end());
  const AdaptiveWeights weights = adaptive_weights(init, pc.gamma, pc.freeze_tol);
  ZetaPathReport rep;
  rep.zetas = zetas;
  for (std::size_t i = 0; i < zetas.size(); ++i) {
    const auto fit = fit_adaptive(data, zetas[i], weights, init, cfg);
    rep.masks.push_back(select_features(fit.params, pc.cutoff));
    if (i > 0) {
      const auto& prev = rep.masks[i - 1];
      const auto& cur = rep.masks[i];
      for (std::size_t k = 0; k < cur.size(); ++k)
        if (cur[k] && !prev[k]) {
          rep.violations.push_back(i);
          break;
        }
    }
  }
  return rep;
}

}  // namespace agl
