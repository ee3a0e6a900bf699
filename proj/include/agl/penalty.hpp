#pragma once

// Group penalties on the first layer. One group per input feature: the
// column of first-layer weights leaving that input. Biases and output
// weights are never penalized.

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "agl/core_net.hpp"
#include "agl/error.hpp"

namespace agl {

/// Entry k is the Euclidean norm of first-layer column k.
using GroupNorms = std::vector<double>;

inline double column_norm(const NetworkParams& params, std::size_t feature) {
  double s = 0.0;
  for (std::size_t i = 0; i < params.n_hidden(); ++i) {
    const double v = params.weight(i, feature);
    s += v * v;
  }
  return std::sqrt(s);
}

inline GroupNorms group_norms(const NetworkParams& params) {
  GroupNorms norms(params.n_inputs());
  for (std::size_t k = 0; k < norms.size(); ++k) norms[k] = column_norm(params, k);
  return norms;
}

inline double group_lasso_penalty(const NetworkParams& params) {
  double s = 0.0;
  for (double n : group_norms(params)) s += n;
  return s;
}

/// Per-feature adaptive penalty factors ||init column||^-gamma. A feature
/// whose initial column is numerically zero is FROZEN (std::nullopt): its
/// column is pinned at zero by the trainer and contributes nothing to the
/// penalty. This realizes the 0/0 = 1 convention without infinities.
struct AdaptiveWeights {
  std::vector<std::optional<double>> factors;
  double gamma = 2.0;

  std::size_t size() const noexcept { return factors.size(); }
  bool frozen(std::size_t k) const { return !factors[k].has_value(); }
};

inline constexpr double kDefaultFreezeTol = 1e-12;

inline AdaptiveWeights adaptive_weights(const NetworkParams& init, double gamma,
                                        double freeze_tol = kDefaultFreezeTol) {
  detail::require(gamma > 0.0, "adaptive weights need gamma > 0");
  detail::require(freeze_tol >= 0.0, "freeze tolerance must be non-negative");
  AdaptiveWeights out;
  out.gamma = gamma;
  for (double norm : group_norms(init)) {
    if (norm > freeze_tol)
      out.factors.emplace_back(std::pow(norm, -gamma));
    else
      out.factors.emplace_back(std::nullopt);
  }
  return out;
}

inline double adaptive_penalty(const NetworkParams& params, const AdaptiveWeights& weights) {
  detail::require(weights.size() == params.n_inputs(),
                  "adaptive weights length does not match network inputs");
  double s = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    const double norm = column_norm(params, k);
    if (weights.frozen(k)) {
      detail::require(norm == 0.0, "frozen feature has a nonzero first-layer column");
      continue;
    }
    s += *weights.factors[k] * norm;
  }
  return s;
}

/// Proximal map of t * ||.||_2: zero when ||c|| <= t, otherwise c shrunk
/// toward the origin by t.
inline std::vector<double> block_soft_threshold(std::span<const double> column, double t) {
  detail::require(t >= 0.0, "threshold must be non-negative");
  double s = 0.0;
  for (double v : column) s += v * v;
  const double norm = std::sqrt(s);
  std::vector<double> out(column.size(), 0.0);
  if (norm <= t) return out;
  const double scale = 1.0 - t / norm;
  for (std::size_t i = 0; i < column.size(); ++i) out[i] = column[i] * scale;
  return out;
}

/// In-place block soft threshold of first-layer column `feature`.
inline void soft_threshold_column(NetworkParams& params, std::size_t feature, double t) {
  const double norm = column_norm(params, feature);
  if (norm <= t) {
    for (std::size_t i = 0; i < params.n_hidden(); ++i) params.weight(i, feature) = 0.0;
    return;
  }
  const double scale = 1.0 - t / norm;
  for (std::size_t i = 0; i < params.n_hidden(); ++i) params.weight(i, feature) *= scale;
}

enum class PenaltyKind { none, group_lasso, adaptive };

/// Which penalty a training run adds to the empirical risk.
struct PenaltySpec {
  PenaltyKind kind = PenaltyKind::none;
  double lambda = 0.0;  // lambda_n for group lasso, zeta_n for the adaptive penalty
  std::optional<AdaptiveWeights> weights;
  double gamma = 2.0;

  static PenaltySpec none() { return {}; }
  static PenaltySpec group_lasso(double lambda) {
    return {PenaltyKind::group_lasso, lambda, std::nullopt, 2.0};
  }
  static PenaltySpec adaptive(double zeta, AdaptiveWeights w) {
    const double g = w.gamma;
    return {PenaltyKind::adaptive, zeta, std::move(w), g};
  }

  void validate(std::size_t n_inputs) const {
    detail::require(lambda >= 0.0 && std::isfinite(lambda),
                    "regularization constant must be finite and non-negative");
    if (kind == PenaltyKind::adaptive) {
      detail::require(weights.has_value(), "adaptive penalty requires weights");
      detail::require(weights->size() == n_inputs,
                      "adaptive weights length does not match network inputs");
    }
  }

  bool frozen(std::size_t k) const {
    return kind == PenaltyKind::adaptive && weights->frozen(k);
  }

  /// Effective multiplier on ||column k||, i.e. lambda * weight_k (0 if frozen
  /// or unpenalized).
  double group_coefficient(std::size_t k) const {
    switch (kind) {
      case PenaltyKind::none:
        return 0.0;
      case PenaltyKind::group_lasso:
        return lambda;
      case PenaltyKind::adaptive:
        return weights->frozen(k) ? 0.0 : lambda * *weights->factors[k];
    }
    return 0.0;
  }

  /// lambda times the penalty value (0 for kind none).
  double value(const NetworkParams& params) const {
    switch (kind) {
      case PenaltyKind::none:
        return 0.0;
      case PenaltyKind::group_lasso:
        return lambda * group_lasso_penalty(params);
      case PenaltyKind::adaptive:
        return lambda * adaptive_penalty(params, *weights);
    }
    return 0.0;
  }
};

}  // namespace agl
