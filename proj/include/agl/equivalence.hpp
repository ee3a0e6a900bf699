#pragma once

// Weight-space symmetries of the tanh network. Permuting hidden nodes and
// flipping the sign of a node's incoming weights, bias and outgoing weight
// leave the input-output map unchanged; for irreducible networks these
// generate the whole functional-equivalence class.

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "agl/assignment.hpp"
#include "agl/core_net.hpp"
#include "agl/error.hpp"
#include "agl/penalty.hpp"
#include "agl/random.hpp"

namespace agl {

/// Output node i takes node perm[i] of the input, multiplied by signs[i].
struct EquivTransform {
  std::vector<std::size_t> perm;
  std::vector<int> signs;

  static EquivTransform identity(std::size_t n_hidden) {
    EquivTransform t;
    t.perm.resize(n_hidden);
    for (std::size_t i = 0; i < n_hidden; ++i) t.perm[i] = i;
    t.signs.assign(n_hidden, 1);
    return t;
  }

  static EquivTransform random(std::size_t n_hidden, Rng& rng) {
    EquivTransform t = identity(n_hidden);
    rng.shuffle(std::span<std::size_t>(t.perm));
    for (int& s : t.signs) s = (rng.next_u64() & 1U) ? -1 : 1;
    return t;
  }

  void validate(std::size_t n_hidden) const {
    detail::require(perm.size() == n_hidden && signs.size() == n_hidden,
                    "transform size does not match hidden width");
    std::vector<char> seen(n_hidden, 0);
    for (std::size_t p : perm) {
      detail::require(p < n_hidden && !seen[p], "transform permutation is not a bijection");
      seen[p] = 1;
    }
    for (int s : signs) detail::require(s == 1 || s == -1, "transform signs must be +1 or -1");
  }

  EquivTransform inverse() const {
    validate(perm.size());
    EquivTransform inv;
    inv.perm.resize(perm.size());
    inv.signs.resize(perm.size());
    for (std::size_t i = 0; i < perm.size(); ++i) {
      inv.perm[perm[i]] = i;
      inv.signs[perm[i]] = signs[i];
    }
    return inv;
  }
};

inline NetworkParams apply_transform(const NetworkParams& params, const EquivTransform& t) {
  t.validate(params.n_hidden());
  NetworkParams out(params.n_inputs(), params.n_hidden());
  for (std::size_t i = 0; i < params.n_hidden(); ++i) {
    const std::size_t src = t.perm[i];
    const double s = static_cast<double>(t.signs[i]);
    for (std::size_t k = 0; k < params.n_inputs(); ++k)
      out.weight(i, k) = s * params.weight(src, k);
    out.bias1()[i] = s * params.bias1()[src];
    out.output_weights()[i] = s * params.output_weights()[src];
  }
  out.bias2() = params.bias2();
  return out;
}

enum class IrreducibilityCondition {
  /// (i): a node with zero incoming weights or zero outgoing weight
  inactive_node,
  /// (ii): two nodes whose (row, bias) agree up to sign
  duplicate_node,
};

struct IrreducibilityViolation {
  IrreducibilityCondition condition;
  std::size_t node = 0;
  std::optional<std::size_t> other;  // set for duplicate_node
  bool negated = false;              // duplicate_node: other == -node
  std::string message;
};

struct IrreducibilityReport {
  std::vector<IrreducibilityViolation> violations;

  bool irreducible() const noexcept { return violations.empty(); }
  explicit operator bool() const noexcept { return irreducible(); }
};

inline constexpr double kDefaultIrreducibilityTol = 1e-8;

/// Checks both irreducibility conditions. Node indices in the report are
/// 0-based. Row/bias comparisons use the max-abs entry difference.
inline IrreducibilityReport is_irreducible(const NetworkParams& params,
                                           double tol = kDefaultIrreducibilityTol) {
  detail::require(tol >= 0.0, "irreducibility tolerance must be non-negative");
  IrreducibilityReport report;
  const std::size_t n_h = params.n_hidden();
  const std::size_t n_in = params.n_inputs();

  for (std::size_t i = 0; i < n_h; ++i) {
    double s = 0.0;
    for (double v : params.row(i)) s += v * v;
    const double row_norm = std::sqrt(s);
    const double w = std::abs(params.output_weights()[i]);
    if (row_norm <= tol || w <= tol) {
      std::ostringstream msg;
      msg << "condition (i): node " << i << " has "
          << (row_norm <= tol ? "zero incoming weights" : "zero output weight");
      report.violations.push_back(
          {IrreducibilityCondition::inactive_node, i, std::nullopt, false, msg.str()});
    }
  }

  for (std::size_t i = 0; i < n_h; ++i) {
    for (std::size_t j = i + 1; j < n_h; ++j) {
      double same = std::abs(params.bias1()[i] - params.bias1()[j]);
      double flipped = std::abs(params.bias1()[i] + params.bias1()[j]);
      for (std::size_t k = 0; k < n_in; ++k) {
        same = std::max(same, std::abs(params.weight(i, k) - params.weight(j, k)));
        flipped = std::max(flipped, std::abs(params.weight(i, k) + params.weight(j, k)));
      }
      if (same <= tol || flipped <= tol) {
        const bool negated = same > tol;
        std::ostringstream msg;
        msg << "condition (ii): node " << i << " equals " << (negated ? "minus " : "")
            << "node " << j;
        report.violations.push_back(
            {IrreducibilityCondition::duplicate_node, i, j, negated, msg.str()});
      }
    }
  }
  return report;
}

/// Minimum Euclidean distance (flat layout) between `a` and any transform of
/// `b`. Sign flips act per node once a matching is fixed, so each pair cost
/// is the smaller of the unflipped and flipped squared distances and the
/// matching is a linear assignment problem.
inline double equiv_distance(const NetworkParams& a, const NetworkParams& b) {
  detail::require(a.same_shape(b), "equivalence distance needs identical architectures");
  const std::size_t n_h = a.n_hidden();
  const std::size_t n_in = a.n_inputs();
  std::vector<double> cost(n_h * n_h);
  for (std::size_t i = 0; i < n_h; ++i) {
    for (std::size_t j = 0; j < n_h; ++j) {
      double same = 0.0;
      double flipped = 0.0;
      auto acc = [&](double x, double y) {
        same += (x - y) * (x - y);
        flipped += (x + y) * (x + y);
      };
      for (std::size_t k = 0; k < n_in; ++k) acc(a.weight(i, k), b.weight(j, k));
      acc(a.bias1()[i], b.bias1()[j]);
      acc(a.output_weights()[i], b.output_weights()[j]);
      cost[i * n_h + j] = std::min(same, flipped);
    }
  }
  const double matched = solve_assignment(cost, n_h).cost;
  const double db2 = a.bias2() - b.bias2();
  return std::sqrt(matched + db2 * db2);
}

/// A generating network plus its true support. Non-support columns are
/// identically zero.
struct GroundTruthModel {
  NetworkParams params;
  std::vector<bool> support;
  double sigma2 = 0.0;
};

/// Features with a nonzero generating column. Every functionally equivalent
/// weight vector of an irreducible model has the same support, which is what
/// makes this the reference for selection metrics.
inline std::vector<bool> support_mask_true(const GroundTruthModel& model,
                                           double tol = kDefaultIrreducibilityTol) {
  const auto report = is_irreducible(model.params, tol);
  if (!report) throw ContractViolation("ground-truth model is reducible: " +
                                       report.violations.front().message);
  std::vector<bool> mask(model.params.n_inputs());
  for (std::size_t k = 0; k < mask.size(); ++k) mask[k] = column_norm(model.params, k) > 0.0;
  return mask;
}

}  // namespace agl
