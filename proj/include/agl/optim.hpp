#pragma once

// Adam and the training loop for  R_n(params) + lambda * penalty(params).
//
// Two ways of handling the non-smooth group penalty:
//   subgradient  the penalty (sub)gradient is added to the mini-batch risk
//                gradient and Adam sees the sum; groups never become exactly 0.
//   proximal     Adam steps on the risk only, then every penalized column is
//                block soft-thresholded with t = lr * lambda * weight_k.
//                Adam rescales the risk step to about lr per coordinate while
//                the threshold stays at lr * lambda * weight_k, so small noise
//                columns can outlast the shrinkage; subgradient is the default.
// Frozen groups (adaptive weights with a zero initializer) are held at zero
// in both modes.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "agl/core_net.hpp"
#include "agl/error.hpp"
#include "agl/penalty.hpp"
#include "agl/random.hpp"

namespace agl {

struct AdamHyper {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamHyper hyper;
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;

  AdamState() = default;
  AdamState(std::size_t n, AdamHyper h) : hyper(h), m(n, 0.0), v(n, 0.0) {}
  AdamState(const NetworkParams& shape, AdamHyper h) : AdamState(shape.size(), h) {}
};

/// In-place bias-corrected Adam update.
inline void adam_update(AdamState& state, NetworkParams& params, const Gradient& grad) {
  detail::require(params.same_shape(grad), "gradient shape does not match parameters");
  detail::require(state.m.size() == params.size() && state.v.size() == params.size(),
                  "optimizer state shape does not match parameters");
  for (double g : grad.flat())
    if (!std::isfinite(g)) throw DivergenceError("non-finite gradient in optimizer step");

  const auto& h = state.hyper;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(h.beta1, t);
  const double c2 = 1.0 - std::pow(h.beta2, t);
  auto p = params.flat();
  auto g = grad.flat();
  for (std::size_t i = 0; i < p.size(); ++i) {
    state.m[i] = h.beta1 * state.m[i] + (1.0 - h.beta1) * g[i];
    state.v[i] = h.beta2 * state.v[i] + (1.0 - h.beta2) * g[i] * g[i];
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    p[i] -= h.learning_rate * m_hat / (std::sqrt(v_hat) + h.epsilon);
  }
}

/// Functional form of one Adam step.
inline std::pair<AdamState, NetworkParams> adam_step(AdamState state, NetworkParams params,
                                                     const Gradient& grad) {
  adam_update(state, params, grad);
  return {std::move(state), std::move(params)};
}

enum class TrainMode { subgradient, proximal };

inline const char* to_string(TrainMode m) {
  return m == TrainMode::subgradient ? "subgradient" : "proximal";
}

struct TrainConfig {
  int epochs = 10000;
  int batch_size = 200;
  double learning_rate = 1e-3;
  TrainMode mode = TrainMode::subgradient;
  std::uint64_t seed = 0;
  LossKind loss = LossKind::squared;
  double init_scale = 0.5;
  std::size_t n_hidden = 10;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  AdamHyper adam() const { return {learning_rate, beta1, beta2, epsilon}; }

  void validate() const {
    detail::require(epochs >= 1, "epochs must be positive");
    detail::require(batch_size >= 1, "batch size must be positive");
    detail::require(learning_rate > 0.0, "learning rate must be positive");
    detail::require(init_scale > 0.0, "init scale must be positive");
    detail::require(n_hidden >= 1, "hidden width must be positive");
  }

  TrainConfig with_seed(std::uint64_t s) const {
    TrainConfig c = *this;
    c.seed = s;
    return c;
  }
};

struct TrainResult {
  NetworkParams params;
  /// Full-data penalized objective after each epoch.
  std::vector<double> trace;
};

/// Full-data objective R_n + lambda * penalty.
inline double objective(const NetworkParams& params, const Dataset& data,
                        const PenaltySpec& spec, LossKind loss) {
  return empirical_risk(params, data, loss) + spec.value(params);
}

namespace detail {

inline void zero_column(NetworkParams& p, std::size_t k) {
  for (std::size_t i = 0; i < p.n_hidden(); ++i) p.weight(i, k) = 0.0;
}

inline void add_penalty_subgradient(const NetworkParams& params, const PenaltySpec& spec,
                                    Gradient& grad) {
  if (spec.kind == PenaltyKind::none) return;
  for (std::size_t k = 0; k < params.n_inputs(); ++k) {
    const double coef = spec.group_coefficient(k);
    if (coef == 0.0) continue;
    const double norm = column_norm(params, k);
    if (norm == 0.0) continue;  // subgradient 0 at the kink
    const double s = coef / norm;
    for (std::size_t i = 0; i < params.n_hidden(); ++i)
      grad.weight(i, k) += s * params.weight(i, k);
  }
}

}  // namespace detail

/// Minimizes the penalized empirical risk with mini-batch Adam. When `init`
/// is absent the network starts from i.i.d. uniform[-init_scale, init_scale]
/// weights drawn from the configured seed. Fully deterministic given
/// (data, spec, cfg, init).
inline TrainResult train(const Dataset& data, const PenaltySpec& spec, const TrainConfig& cfg,
                         const std::optional<NetworkParams>& init = std::nullopt) {
  cfg.validate();
  data.validate();
  spec.validate(data.n_inputs());
  detail::check_loss(data, cfg.loss);

  TrainResult out;
  if (init) {
    detail::require(init->n_inputs() == data.n_inputs(),
                    "initial parameters do not match dataset width");
    detail::require(init->all_finite(), "initial parameters must be finite");
    out.params = *init;
  } else {
    Rng init_rng(derive_seed(cfg.seed, {stream::init}));
    out.params = random_params(data.n_inputs(), cfg.n_hidden, cfg.init_scale, init_rng);
  }
  NetworkParams& params = out.params;

  std::vector<std::size_t> frozen;
  for (std::size_t k = 0; k < params.n_inputs(); ++k)
    if (spec.frozen(k)) frozen.push_back(k);
  for (std::size_t k : frozen) detail::zero_column(params, k);

  const std::size_t n = data.size();
  const std::size_t batch = std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size), n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng shuffle_rng(derive_seed(cfg.seed, {stream::shuffle}));

  AdamState state(params, cfg.adam());
  Gradient grad(params.n_inputs(), params.n_hidden());
  out.trace.reserve(static_cast<std::size_t>(cfg.epochs));

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t stop = std::min(start + batch, n);
      const std::span<const std::size_t> rows(order.data() + start, stop - start);
      risk_gradient(params, data, rows, cfg.loss, grad);
      if (cfg.mode == TrainMode::subgradient) detail::add_penalty_subgradient(params, spec, grad);
      for (std::size_t k : frozen)
        for (std::size_t i = 0; i < grad.n_hidden(); ++i) grad.weight(i, k) = 0.0;
      try {
        adam_update(state, params, grad);
      } catch (const DivergenceError&) {
        throw DivergenceError("training diverged at epoch " + std::to_string(epoch), epoch);
      }
      if (cfg.mode == TrainMode::proximal && spec.kind != PenaltyKind::none) {
        for (std::size_t k = 0; k < params.n_inputs(); ++k) {
          if (spec.frozen(k)) continue;
          soft_threshold_column(params, k, cfg.learning_rate * spec.group_coefficient(k));
        }
      }
    }
    const double obj = objective(params, data, spec, cfg.loss);
    if (!std::isfinite(obj))
      throw DivergenceError("non-finite objective at epoch " + std::to_string(epoch), epoch);
    out.trace.push_back(obj);
  }
  return out;
}

}  // namespace agl
