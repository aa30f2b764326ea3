#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "spfx/csv.hpp"
#include "spfx/errors.hpp"
#include "spfx/inverted_index.hpp"
#include "spfx/model.hpp"
#include "spfx/sparse.hpp"

namespace spfx {

// All binary formats are little-endian:
//   index       "SPFX" | u32 version | u64 n | u64 d | d x u64 posting
//               lengths | per column packed (u32 row, f32 value) pairs
//   embeddings  "SPFE" | u32 version | u64 n | u64 d | n*d f32 row-major
//   checkpoint  "SPFM" | u32 version | u32 input_dim | u32 num_layers |
//               per layer (u32 fan_in, u32 fan_out) | u32 hidden_act |
//               u32 output_act | u32 normalize | per layer weights
//               (row-major f32) then bias (f32)

inline constexpr std::uint32_t kFormatVersion = 1;

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

inline void put_f32(std::ostream& os, float v) { put_u32(os, std::bit_cast<std::uint32_t>(v)); }

inline std::uint32_t get_u32(std::istream& is, const char* what) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw format_error(std::string("truncated file while reading ") + what);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline std::uint64_t get_u64(std::istream& is, const char* what) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw format_error(std::string("truncated file while reading ") + what);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

inline float get_f32(std::istream& is, const char* what) { return std::bit_cast<float>(get_u32(is, what)); }

inline void expect_magic(std::istream& is, const char (&magic)[5], const char* format_name) {
  char got[4];
  if (!is.read(got, 4)) throw format_error(std::string("truncated file while reading ") + format_name + " magic");
  if (std::string_view(got, 4) != std::string_view(magic, 4))
    throw format_error(std::string("bad magic for ") + format_name + " file");
}

inline void expect_version(std::istream& is, const char* format_name) {
  const std::uint32_t v = get_u32(is, "version");
  if (v != kFormatVersion)
    throw format_error(std::string("unsupported ") + format_name + " version " + std::to_string(v));
}

}  // namespace detail

/// Write a file through a temp sibling + rename so partially written
/// outputs never appear under the final name.
template <typename Writer>
void atomic_write(const std::string& path, Writer&& writer) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw format_error("cannot open " + tmp.string() + " for writing");
    writer(os);
    os.flush();
    if (!os) throw format_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, target);
}

// ---------------------------------------------------------------------------
// Inverted index
// ---------------------------------------------------------------------------

inline void save_index(const InvertedIndex& index, std::ostream& os) {
  os.write("SPFX", 4);
  detail::put_u32(os, kFormatVersion);
  detail::put_u64(os, index.num_rows());
  detail::put_u64(os, index.dim());
  for (std::uint32_t j = 0; j < index.dim(); ++j) detail::put_u64(os, index.postings(j).size());
  for (std::uint32_t j = 0; j < index.dim(); ++j) {
    for (const auto& p : index.postings(j)) {
      detail::put_u32(os, p.row);
      detail::put_f32(os, p.value);
    }
  }
}

inline void save_index(const InvertedIndex& index, const std::string& path) {
  atomic_write(path, [&](std::ostream& os) { save_index(index, os); });
}

inline InvertedIndex load_index(std::istream& is) {
  detail::expect_magic(is, "SPFX", "index");
  detail::expect_version(is, "index");
  const std::uint64_t n = detail::get_u64(is, "row count");
  const std::uint64_t d = detail::get_u64(is, "dim");
  std::vector<std::uint64_t> lens(d);
  for (auto& l : lens) l = detail::get_u64(is, "posting length");
  std::vector<std::vector<Posting>> postings(d);
  for (std::uint64_t j = 0; j < d; ++j) {
    postings[j].resize(lens[j]);
    for (auto& p : postings[j]) {
      p.row = detail::get_u32(is, "posting row");
      p.value = detail::get_f32(is, "posting value");
      if (p.row >= n) throw format_error("index posting row out of range");
    }
  }
  return InvertedIndex(static_cast<std::uint32_t>(d), n, std::move(postings));
}

inline InvertedIndex load_index(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw format_error("cannot open index file " + path);
  return load_index(is);
}

// ---------------------------------------------------------------------------
// Embedding matrices
// ---------------------------------------------------------------------------

inline void save_embeddings(const DenseMatrix& m, std::ostream& os) {
  os.write("SPFE", 4);
  detail::put_u32(os, kFormatVersion);
  detail::put_u64(os, m.rows());
  detail::put_u64(os, m.cols());
  for (float v : m.values()) detail::put_f32(os, v);
}

inline void save_embeddings(const DenseMatrix& m, const std::string& path) {
  atomic_write(path, [&](std::ostream& os) { save_embeddings(m, os); });
}

inline DenseMatrix load_embeddings(std::istream& is) {
  detail::expect_magic(is, "SPFE", "embeddings");
  detail::expect_version(is, "embeddings");
  const std::uint64_t n = detail::get_u64(is, "row count");
  const std::uint64_t d = detail::get_u64(is, "dim");
  std::vector<float> values(n * d);
  for (auto& v : values) v = detail::get_f32(is, "embedding value");
  return DenseMatrix(n, d, std::move(values));
}

inline DenseMatrix load_embeddings(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw format_error("cannot open embeddings file " + path);
  return load_embeddings(is);
}

// ---------------------------------------------------------------------------
// Model checkpoints
// ---------------------------------------------------------------------------

inline void save_model(const EncoderModel& model, std::ostream& os) {
  os.write("SPFM", 4);
  detail::put_u32(os, kFormatVersion);
  detail::put_u32(os, static_cast<std::uint32_t>(model.input_dim()));
  detail::put_u32(os, static_cast<std::uint32_t>(model.layers().size()));
  for (const auto& layer : model.layers()) {
    detail::put_u32(os, static_cast<std::uint32_t>(layer.fan_in));
    detail::put_u32(os, static_cast<std::uint32_t>(layer.fan_out));
  }
  detail::put_u32(os, 0);  // hidden activation: ReLU
  detail::put_u32(os, model.output_activation() == Activation::ReLU ? 0 : 1);
  detail::put_u32(os, model.normalize_output() ? 1 : 0);
  for (const auto& layer : model.layers()) {
    for (std::size_t i = 0; i < layer.weights.size(); ++i)
      detail::put_f32(os, static_cast<float>(layer.weights.data()[i]));
    for (double b : layer.bias) detail::put_f32(os, static_cast<float>(b));
  }
}

inline void save_model(const EncoderModel& model, const std::string& path) {
  atomic_write(path, [&](std::ostream& os) { save_model(model, os); });
}

inline EncoderModel load_model(std::istream& is) {
  detail::expect_magic(is, "SPFM", "checkpoint");
  detail::expect_version(is, "checkpoint");
  const std::uint32_t input_dim = detail::get_u32(is, "input dim");
  const std::uint32_t num_layers = detail::get_u32(is, "layer count");
  std::vector<AffineLayer> layers(num_layers);
  for (auto& layer : layers) {
    layer.fan_in = detail::get_u32(is, "fan_in");
    layer.fan_out = detail::get_u32(is, "fan_out");
  }
  const std::uint32_t hidden_act = detail::get_u32(is, "hidden activation");
  if (hidden_act != 0) throw format_error("unsupported hidden activation code " + std::to_string(hidden_act));
  const std::uint32_t out_act = detail::get_u32(is, "output activation");
  if (out_act > 1) throw format_error("unsupported output activation code " + std::to_string(out_act));
  const std::uint32_t normalize = detail::get_u32(is, "normalize flag");
  for (auto& layer : layers) {
    layer.weights = Mat(layer.fan_in, layer.fan_out);
    for (std::size_t i = 0; i < layer.weights.size(); ++i) layer.weights.data()[i] = detail::get_f32(is, "weight");
    layer.bias.resize(layer.fan_out);
    for (auto& b : layer.bias) b = detail::get_f32(is, "bias");
  }
  EncoderModel model;
  model.set_structure(input_dim, std::move(layers), out_act == 0 ? Activation::ReLU : Activation::SThresh,
                      normalize != 0);
  return model;
}

inline EncoderModel load_model(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw format_error("cannot open checkpoint file " + path);
  return load_model(is);
}

// ---------------------------------------------------------------------------
// CSV exports for human inspection
// ---------------------------------------------------------------------------

inline void index_to_csv(const InvertedIndex& index, std::ostream& os) {
  os << "col,row,value\n";
  for (std::uint32_t j = 0; j < index.dim(); ++j)
    for (const auto& p : index.postings(j)) os << j << "," << p.row << "," << csv_num(p.value) << "\n";
}

inline void embeddings_to_csv(const DenseMatrix& m, std::ostream& os) {
  for (std::uint64_t i = 0; i < m.rows(); ++i) {
    auto row = m.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) os << (j ? "," : "") << csv_num(row[j]);
    os << "\n";
  }
}

/// Dense f32 matrix from double rows; the export boundary between the
/// double-precision trainer and the f32 retrieval formats.
inline DenseMatrix to_dense_matrix(const Mat& m) {
  std::vector<float> values(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) values[i] = static_cast<float>(m.data()[i]);
  return DenseMatrix(m.rows(), m.cols(), std::move(values));
}

/// Sparse rows of a dense embedding matrix (exact-zero test per entry).
inline std::vector<SparseVec> sparsify_rows(const DenseMatrix& m) {
  std::vector<SparseVec> rows;
  rows.reserve(m.rows());
  for (std::uint64_t i = 0; i < m.rows(); ++i) rows.push_back(SparseVec::from_dense(m.row(i)));
  return rows;
}

}  // namespace spfx
