#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "spfx/errors.hpp"
#include "spfx/sparse.hpp"

namespace spfx {

// One posting: a row id and the stored value of that row in this column.
struct Posting {
  std::uint32_t row;
  float value;
  friend bool operator==(const Posting&, const Posting&) = default;
};

struct Candidate {
  std::uint32_t row;
  double score;
  friend bool operator==(const Candidate&, const Candidate&) = default;
};

struct SpmvResult {
  std::vector<double> scores;  // length num_rows
  std::uint64_t flops_used = 0;
};

struct QueryResult {
  std::vector<Candidate> candidates;  // descending score, ties by ascending row
  std::uint64_t flops_used = 0;
};

/// Per-column posting lists over a sparse row database. Immutable after
/// build; concurrent queries against one index are safe.
class InvertedIndex {
 public:
  InvertedIndex() = default;

  InvertedIndex(std::uint32_t dim, std::uint64_t num_rows, std::vector<std::vector<Posting>> postings)
      : dim_(dim), num_rows_(num_rows), postings_(std::move(postings)) {
    if (postings_.size() != dim_) throw dimension_error("InvertedIndex: posting list count != dim");
    recompute_row_norms();
  }

  std::uint32_t dim() const { return dim_; }
  std::uint64_t num_rows() const { return num_rows_; }
  const std::vector<Posting>& postings(std::uint32_t col) const { return postings_[col]; }
  const std::vector<std::vector<Posting>>& all_postings() const { return postings_; }
  const std::vector<float>& row_norms() const { return row_norms_; }

  std::uint64_t total_nnz() const {
    std::uint64_t s = 0;
    for (const auto& p : postings_) s += p.size();
    return s;
  }

  // Dense reconstruction of the indexed matrix, row-major.
  std::vector<float> densify() const {
    std::vector<float> out(num_rows_ * dim_, 0.0f);
    for (std::uint32_t j = 0; j < dim_; ++j)
      for (const auto& p : postings_[j]) out[static_cast<std::size_t>(p.row) * dim_ + j] = p.value;
    return out;
  }

 private:
  void recompute_row_norms() {
    std::vector<double> acc(num_rows_, 0.0);
    for (const auto& col : postings_)
      for (const auto& p : col) acc[p.row] += static_cast<double>(p.value) * p.value;
    row_norms_.resize(num_rows_);
    for (std::uint64_t i = 0; i < num_rows_; ++i) row_norms_[i] = static_cast<float>(std::sqrt(acc[i]));
  }

  std::uint32_t dim_ = 0;
  std::uint64_t num_rows_ = 0;
  std::vector<std::vector<Posting>> postings_;
  std::vector<float> row_norms_;
};

/// Build per-column posting lists from sparse rows. Row ids within each
/// list are ascending by construction.
inline InvertedIndex build_index(std::span<const SparseVec> rows, std::uint32_t dim) {
  if (dim < 1) throw dimension_error("build_index: dim must be >= 1");
  std::vector<std::vector<Posting>> postings(dim);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].dim() != dim)
      throw dimension_error("build_index: row " + std::to_string(i) + " has dim " + std::to_string(rows[i].dim()) + ", expected " + std::to_string(dim));
    for (const auto& e : rows[i].entries()) postings[e.index].push_back({static_cast<std::uint32_t>(i), e.value});
  }
  return InvertedIndex(dim, rows.size(), std::move(postings));
}

/// SpMV against the posting lists. scores[i] accumulates per row in
/// ascending column order, in double precision. flops_used counts every
/// multiply-accumulate coincidence, i.e. the summed posting-list lengths
/// of the query's non-zero columns.
inline SpmvResult spmv_query(const InvertedIndex& index, const SparseVec& query) {
  if (query.dim() != index.dim())
    throw dimension_error("spmv_query: query dim " + std::to_string(query.dim()) + " != index dim " + std::to_string(index.dim()));
  SpmvResult r;
  r.scores.assign(index.num_rows(), 0.0);
  for (const auto& e : query.entries()) {
    const auto& col = index.postings(e.index);
    const double q = e.value;
    for (const auto& p : col) r.scores[p.row] += q * static_cast<double>(p.value);
    r.flops_used += col.size();
  }
  return r;
}

namespace detail {
inline bool candidate_less(const Candidate& a, const Candidate& b) {
  if (a.score != b.score) return a.score > b.score;  // descending score
  return a.row < b.row;                              // ties: ascending row
}
}  // namespace detail

/// Keep rows with score >= threshold, then the k best by (score desc,
/// row asc). Partial selection, not a full sort: O(n + k log k) expected.
inline std::vector<Candidate> threshold_topk(std::span<const double> scores, double threshold, std::size_t k) {
  if (k < 1) throw domain_error("threshold_topk: k must be >= 1");
  std::vector<Candidate> survivors;
  for (std::size_t i = 0; i < scores.size(); ++i)
    if (scores[i] >= threshold) survivors.push_back({static_cast<std::uint32_t>(i), scores[i]});
  if (survivors.size() > k) {
    std::nth_element(survivors.begin(), survivors.begin() + k - 1, survivors.end(), detail::candidate_less);
    survivors.resize(k);
  }
  std::sort(survivors.begin(), survivors.end(), detail::candidate_less);
  return survivors;
}

/// Full query path of the sparse engine: SpMV, threshold, top-k.
inline QueryResult query_index(const InvertedIndex& index, const SparseVec& query, double threshold, std::size_t k) {
  SpmvResult s = spmv_query(index, query);
  return {threshold_topk(s.scores, threshold, k), s.flops_used};
}

/// Re-score a candidate shortlist with dense embeddings and return the
/// final_k best. Same ordering contract as threshold_topk.
inline std::vector<Candidate> rerank(std::span<const std::uint32_t> candidates, const DenseMatrix& dense_db,
                                     std::span<const float> dense_query, std::size_t final_k) {
  if (dense_query.size() != dense_db.cols()) throw dimension_error("rerank: query length != dense_db cols");
  std::vector<Candidate> scored;
  scored.reserve(candidates.size());
  for (std::uint32_t id : candidates) {
    if (id >= dense_db.rows()) throw index_error("rerank: row id " + std::to_string(id) + " out of range");
    auto row = dense_db.row(id);
    double s = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) s += static_cast<double>(row[j]) * dense_query[j];
    scored.push_back({id, s});
  }
  if (scored.size() > final_k) {
    std::nth_element(scored.begin(), scored.begin() + final_k - 1, scored.end(), detail::candidate_less);
    scored.resize(final_k);
  }
  std::sort(scored.begin(), scored.end(), detail::candidate_less);
  return scored;
}

}  // namespace spfx
