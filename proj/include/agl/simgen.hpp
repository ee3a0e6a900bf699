#pragma once

// Synthetic data from a known sparse network: significant inputs first,
// non-significant inputs (zero generating columns) last.

#include <cstdint>
#include <vector>

#include "agl/core_net.hpp"
#include "agl/equivalence.hpp"
#include "agl/error.hpp"
#include "agl/random.hpp"

namespace agl {

struct SimConfig {
  std::size_t n_significant = 1;
  std::size_t n_nonsignificant = 1;
  std::size_t n_hidden = 10;
  std::size_t n = 1000;
  std::vector<double> sigma2_list = {0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
  int repeats = 100;
  std::uint64_t seed = 0;

  std::size_t n_inputs() const { return n_significant + n_nonsignificant; }

  void validate() const {
    detail::require(n_significant >= 1, "need at least one significant feature");
    detail::require(n_hidden >= 1, "hidden width must be positive");
    detail::require(n >= 1, "sample size must be positive");
    detail::require(repeats >= 1, "repeats must be positive");
    detail::require(!sigma2_list.empty(), "noise variance list is empty");
    for (double s : sigma2_list) detail::require(s >= 0.0, "noise variance must be >= 0");
  }
};

inline constexpr int kMaxModelRejections = 100;

/// Significant columns of the first layer and the output weights ~ N(1, 1);
/// both biases ~ N(0, 1); non-significant columns exactly zero. Redraws
/// until the network is irreducible.
inline GroundTruthModel generate_true_model(const SimConfig& cfg, std::uint64_t seed,
                                            double sigma2 = 0.0) {
  cfg.validate();
  Rng rng(seed);
  for (int attempt = 0; attempt < kMaxModelRejections; ++attempt) {
    GroundTruthModel m;
    m.params = NetworkParams(cfg.n_inputs(), cfg.n_hidden);
    m.sigma2 = sigma2;
    for (std::size_t i = 0; i < cfg.n_hidden; ++i)
      for (std::size_t k = 0; k < cfg.n_significant; ++k) m.params.weight(i, k) = rng.normal(1.0, 1.0);
    for (double& b : m.params.bias1()) b = rng.normal();
    for (double& w : m.params.output_weights()) w = rng.normal(1.0, 1.0);
    m.params.bias2() = rng.normal();
    m.support.assign(cfg.n_inputs(), false);
    for (std::size_t k = 0; k < cfg.n_significant; ++k) m.support[k] = true;
    if (is_irreducible(m.params)) return m;
  }
  throw ContractViolation("could not draw an irreducible ground-truth model");
}

inline GroundTruthModel generate_true_model(const SimConfig& cfg) {
  return generate_true_model(cfg, cfg.seed);
}

/// X rows i.i.d. N(0, I); y = f(x) + e with e ~ N(0, sigma2). Inputs and
/// noise come from separate streams, so datasets that differ only in n share
/// a prefix and datasets that differ only in sigma2 share inputs.
inline Dataset generate_dataset(const GroundTruthModel& model, std::size_t n,
                                std::uint64_t seed) {
  detail::require(n >= 1, "sample size must be positive");
  detail::require(model.sigma2 >= 0.0, "noise variance must be >= 0");
  const std::size_t n_in = model.params.n_inputs();
  Rng x_rng(derive_seed(seed, {stream::inputs}));
  Rng e_rng(derive_seed(seed, {stream::noise}));
  const double sd = std::sqrt(model.sigma2);
  std::vector<double> x(n * n_in);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n_in; ++k) x[i * n_in + k] = x_rng.normal();
    const double noise = e_rng.normal();
    y[i] = forward(model.params, std::span<const double>(x.data() + i * n_in, n_in));
    if (model.sigma2 > 0.0) y[i] += sd * noise;
  }
  return Dataset(n_in, std::move(x), std::move(y), Task::regression);
}

}  // namespace agl
