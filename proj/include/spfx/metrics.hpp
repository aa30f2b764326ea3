#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "spfx/csv.hpp"
#include "spfx/errors.hpp"
#include "spfx/mat.hpp"

namespace spfx {

// Post-activation embeddings f(x_i), one row per input.
using ActivationBatch = Mat;

namespace detail {
inline void validate_batch(const ActivationBatch& batch) {
  if (batch.rows() < 1 || batch.cols() < 1) throw domain_error("activation batch must be non-empty");
  if (!batch.all_finite()) throw numeric_error("activation batch contains non-finite values");
}
}  // namespace detail

/// Empirical per-dimension activation probabilities: the fraction of rows
/// where |a_ij| > eps. The default eps = 0 is an exact zero test, since
/// ReLU/SThresh produce exact zeros; a positive eps is for analyzing
/// near-sparse dense baselines.
inline std::vector<double> activation_probabilities(const ActivationBatch& batch, double eps = 0.0) {
  detail::validate_batch(batch);
  const std::size_t n = batch.rows(), d = batch.cols();
  std::vector<double> p(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = batch.row(i);
    for (std::size_t j = 0; j < d; ++j)
      if (std::abs(row[j]) > eps) p[j] += 1.0;
  }
  for (double& x : p) x /= static_cast<double>(n);
  return p;
}

/// Per-dimension mean absolute activations.
inline std::vector<double> mean_abs_activations(const ActivationBatch& batch) {
  detail::validate_batch(batch);
  const std::size_t n = batch.rows(), d = batch.cols();
  std::vector<double> a(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = batch.row(i);
    for (std::size_t j = 0; j < d; ++j) a[j] += std::abs(row[j]);
  }
  for (double& x : a) x /= static_cast<double>(n);
  return a;
}

/// Mean FLOPs-per-row estimate: sum of squared activation probabilities.
inline double flops_per_row(const ActivationBatch& batch, double eps = 0.0) {
  double f = 0.0;
  for (double pj : activation_probabilities(batch, eps)) f += pj * pj;
  return f;
}

/// Continuous relaxation of flops_per_row: sum of squared mean absolute
/// activations.
inline double relaxed_flops(const ActivationBatch& batch) {
  double f = 0.0;
  for (double aj : mean_abs_activations(batch)) f += aj * aj;
  return f;
}

/// The l1 baseline regularizer: sum of mean absolute activations.
inline double l1_mean(const ActivationBatch& batch) {
  double s = 0.0;
  for (double aj : mean_abs_activations(batch)) s += aj;
  return s;
}

/// F / (d * p_mean^2). Equals 1 iff non-zeros are evenly distributed
/// across dimensions; >= 1 otherwise (Cauchy-Schwarz). Empty when
/// p_mean = 0 (all-zero batch), where the ratio is undefined.
inline std::optional<double> suboptimality_ratio(const ActivationBatch& batch, double eps = 0.0) {
  auto p = activation_probabilities(batch, eps);
  double p_mean = 0.0, f = 0.0;
  for (double pj : p) {
    p_mean += pj;
    f += pj * pj;
  }
  p_mean /= static_cast<double>(p.size());
  if (p_mean == 0.0) return std::nullopt;
  return f / (static_cast<double>(p.size()) * p_mean * p_mean);
}

/// Exclusive-lasso penalty over a partition of the column indices:
/// sum over groups of the squared l1 norm of all entries in the group's
/// columns. With singleton column groups this equals n^2 * relaxed_flops.
inline double exclusive_lasso(const ActivationBatch& batch, const std::vector<std::vector<std::uint32_t>>& groups) {
  detail::validate_batch(batch);
  const std::size_t n = batch.rows(), d = batch.cols();
  std::vector<char> seen(d, 0);
  std::size_t covered = 0;
  for (const auto& g : groups) {
    for (std::uint32_t j : g) {
      if (j >= d) throw domain_error("exclusive_lasso: group column " + std::to_string(j) + " out of range");
      if (seen[j]) throw domain_error("exclusive_lasso: column " + std::to_string(j) + " appears in two groups");
      seen[j] = 1;
      ++covered;
    }
  }
  if (covered != d) throw domain_error("exclusive_lasso: groups do not cover all columns");

  double total = 0.0;
  for (const auto& g : groups) {
    double l1 = 0.0;
    for (std::uint32_t j : g)
      for (std::size_t i = 0; i < n; ++i) l1 += std::abs(batch(i, j));
    total += l1 * l1;
  }
  return total;
}

/// The paper-style grouping: one group per activation column.
inline std::vector<std::vector<std::uint32_t>> column_groups(std::size_t d) {
  std::vector<std::vector<std::uint32_t>> g(d);
  for (std::size_t j = 0; j < d; ++j) g[j] = {static_cast<std::uint32_t>(j)};
  return g;
}

// Summary statistics of one activation batch.
struct SparsityReport {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<double> p_bar;
  std::vector<double> a_bar;
  double p_mean = 0.0;
  double flops_per_row = 0.0;
  double relaxed_flops = 0.0;
  double l1 = 0.0;
  double r_sub = std::numeric_limits<double>::quiet_NaN();  // NaN when p_mean = 0
  std::size_t dead_dims = 0;                                // dimensions with p_bar[j] == 0

  static std::string csv_header() { return "n,d,p_mean,flops_per_row,relaxed_flops,l1,r_sub"; }
  std::string csv_row() const {
    return csv_num(n) + "," + csv_num(d) + "," + csv_num(p_mean) + "," + csv_num(flops_per_row) + "," +
           csv_num(relaxed_flops) + "," + csv_num(l1) + "," + csv_num(r_sub);
  }
};

inline SparsityReport make_sparsity_report(const ActivationBatch& batch, double eps = 0.0) {
  SparsityReport r;
  r.n = batch.rows();
  r.d = batch.cols();
  r.p_bar = activation_probabilities(batch, eps);
  r.a_bar = mean_abs_activations(batch);
  for (double pj : r.p_bar) {
    r.p_mean += pj;
    r.flops_per_row += pj * pj;
    if (pj == 0.0) ++r.dead_dims;
  }
  r.p_mean /= static_cast<double>(r.d);
  for (double aj : r.a_bar) {
    r.relaxed_flops += aj * aj;
    r.l1 += aj;
  }
  if (r.p_mean > 0.0) r.r_sub = r.flops_per_row / (static_cast<double>(r.d) * r.p_mean * r.p_mean);
  return r;
}

}  // namespace spfx
