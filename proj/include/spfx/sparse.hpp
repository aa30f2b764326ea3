#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "spfx/errors.hpp"

namespace spfx {

// One stored non-zero of a sparse vector.
struct SparseEntry {
  std::uint32_t index;
  float value;
  friend bool operator==(const SparseEntry&, const SparseEntry&) = default;
};

/// Sparse embedding vector: strictly increasing indices, finite non-zero
/// values. The unit of query and storage for the inverted index.
class SparseVec {
 public:
  SparseVec() = default;
  explicit SparseVec(std::uint32_t dim) : dim_(dim) {}

  SparseVec(std::uint32_t dim, std::vector<SparseEntry> entries) : dim_(dim), entries_(std::move(entries)) {
    validate();
  }

  // Keeps entries with value != 0 exactly; zeros are dropped, not stored.
  static SparseVec from_dense(std::span<const float> dense) {
    SparseVec v(static_cast<std::uint32_t>(dense.size()));
    for (std::uint32_t j = 0; j < dense.size(); ++j) {
      if (dense[j] != 0.0f) v.entries_.push_back({j, dense[j]});
    }
    v.validate();
    return v;
  }

  static SparseVec from_dense(std::span<const double> dense) {
    SparseVec v(static_cast<std::uint32_t>(dense.size()));
    for (std::uint32_t j = 0; j < dense.size(); ++j) {
      float f = static_cast<float>(dense[j]);
      if (f != 0.0f) v.entries_.push_back({j, f});
    }
    v.validate();
    return v;
  }

  std::vector<float> to_dense() const {
    std::vector<float> out(dim_, 0.0f);
    for (const auto& e : entries_) out[e.index] = e.value;
    return out;
  }

  std::uint32_t dim() const { return dim_; }
  std::size_t nnz() const { return entries_.size(); }
  const std::vector<SparseEntry>& entries() const { return entries_; }

  double norm() const {
    double s = 0.0;
    for (const auto& e : entries_) s += static_cast<double>(e.value) * e.value;
    return std::sqrt(s);
  }

  // l2-normalized copy. A zero vector stays zero (sparsity pattern is
  // preserved either way: scaling by a positive scalar keeps non-zeros).
  SparseVec normalized() const {
    double n = norm();
    if (n == 0.0) return *this;
    SparseVec v(dim_);
    v.entries_.reserve(entries_.size());
    for (const auto& e : entries_) {
      float f = static_cast<float>(e.value / n);
      if (f != 0.0f) v.entries_.push_back({e.index, f});
    }
    return v;
  }

  friend bool operator==(const SparseVec&, const SparseVec&) = default;

 private:
  void validate() const {
    std::int64_t prev = -1;
    for (const auto& e : entries_) {
      if (e.index >= dim_) throw dimension_error("SparseVec: index " + std::to_string(e.index) + " out of range for dim " + std::to_string(dim_));
      if (static_cast<std::int64_t>(e.index) <= prev) throw dimension_error("SparseVec: indices not strictly increasing");
      if (!std::isfinite(e.value)) throw domain_error("SparseVec: non-finite value");
      if (e.value == 0.0f) throw domain_error("SparseVec: explicit zero entry");
      prev = e.index;
    }
  }

  std::uint32_t dim_ = 0;
  std::vector<SparseEntry> entries_;
};

/// Dense row-major f32 matrix, used for the re-ranking stage and as the
/// on-disk layout of embedding files.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::uint64_t rows, std::uint64_t cols, std::vector<float> values) : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (values_.size() != rows_ * cols_) throw dimension_error("DenseMatrix: value count does not match shape");
    for (float v : values_)
      if (!std::isfinite(v)) throw domain_error("DenseMatrix: non-finite value");
  }

  std::uint64_t rows() const { return rows_; }
  std::uint64_t cols() const { return cols_; }

  std::span<const float> row(std::uint64_t i) const { return {values_.data() + i * cols_, static_cast<std::size_t>(cols_)}; }
  float at(std::uint64_t i, std::uint64_t j) const { return values_[i * cols_ + j]; }
  const std::vector<float>& values() const { return values_; }

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::uint64_t rows_ = 0;
  std::uint64_t cols_ = 0;
  std::vector<float> values_;
};

}  // namespace spfx
