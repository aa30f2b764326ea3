#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "spfx/errors.hpp"
#include "spfx/mat.hpp"

namespace spfx {

/// Class-labelled samples around unit-sphere centers. Evaluation classes
/// are disjoint from training classes; retrieval quality is always
/// measured on classes the encoder never saw.
struct SyntheticDataset {
  std::uint32_t num_classes = 0;
  std::uint32_t per_class = 0;
  std::uint32_t input_dim = 0;
  double noise = 0.0;
  Mat samples;                        // (num_classes * per_class) x input_dim
  std::vector<std::uint32_t> labels;  // row -> class
  std::vector<std::uint32_t> train_classes;
  std::vector<std::uint32_t> eval_classes;

  std::vector<std::uint32_t> class_rows(std::uint32_t c) const {
    std::vector<std::uint32_t> rows(per_class);
    std::iota(rows.begin(), rows.end(), c * per_class);
    return rows;
  }

  std::vector<std::uint32_t> rows_of(const std::vector<std::uint32_t>& classes) const {
    std::vector<std::uint32_t> rows;
    rows.reserve(static_cast<std::size_t>(classes.size()) * per_class);
    for (std::uint32_t c : classes)
      for (std::uint32_t s = 0; s < per_class; ++s) rows.push_back(c * per_class + s);
    return rows;
  }

  std::vector<std::uint32_t> train_rows() const { return rows_of(train_classes); }
  std::vector<std::uint32_t> eval_rows() const { return rows_of(eval_classes); }

  Mat gather(const std::vector<std::uint32_t>& rows) const {
    Mat out(rows.size(), input_dim);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      auto src = samples.row(rows[i]);
      std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
  }
};

/// Centers drawn uniformly on the unit sphere; samples are
/// normalize(center + noise * gaussian). eval_fraction of the classes is
/// held out for evaluation.
inline SyntheticDataset generate_synthetic(std::uint32_t num_classes, std::uint32_t per_class,
                                           std::uint32_t input_dim, double noise, std::uint64_t seed,
                                           double eval_fraction = 0.2) {
  if (num_classes < 2) throw config_error("generate_synthetic: need at least 2 classes");
  if (per_class < 1 || input_dim < 1) throw config_error("generate_synthetic: per_class and input_dim must be >= 1");
  if (noise < 0.0) throw config_error("generate_synthetic: noise must be >= 0");
  if (eval_fraction < 0.0 || eval_fraction >= 1.0) throw config_error("generate_synthetic: eval_fraction in [0,1)");

  SyntheticDataset ds;
  ds.num_classes = num_classes;
  ds.per_class = per_class;
  ds.input_dim = input_dim;
  ds.noise = noise;
  ds.samples = Mat(static_cast<std::size_t>(num_classes) * per_class, input_dim);
  ds.labels.resize(static_cast<std::size_t>(num_classes) * per_class);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  auto draw_unit = [&](std::span<double> out) {
    double norm = 0.0;
    do {
      norm = 0.0;
      for (double& x : out) {
        x = gauss(rng);
        norm += x * x;
      }
    } while (norm == 0.0);
    norm = std::sqrt(norm);
    for (double& x : out) x /= norm;
  };

  std::vector<double> center(input_dim);
  for (std::uint32_t c = 0; c < num_classes; ++c) {
    draw_unit(center);
    for (std::uint32_t s = 0; s < per_class; ++s) {
      const std::size_t row = static_cast<std::size_t>(c) * per_class + s;
      auto out = ds.samples.row(row);
      double norm = 0.0;
      for (std::uint32_t j = 0; j < input_dim; ++j) {
        out[j] = center[j] + noise * gauss(rng);
        norm += out[j] * out[j];
      }
      if (norm > 0.0) {
        norm = std::sqrt(norm);
        for (double& x : out) x /= norm;
      }
      ds.labels[row] = c;
    }
  }

  std::vector<std::uint32_t> order(num_classes);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const std::uint32_t num_eval = static_cast<std::uint32_t>(eval_fraction * num_classes);
  ds.eval_classes.assign(order.begin(), order.begin() + num_eval);
  ds.train_classes.assign(order.begin() + num_eval, order.end());
  std::sort(ds.eval_classes.begin(), ds.eval_classes.end());
  std::sort(ds.train_classes.begin(), ds.train_classes.end());
  return ds;
}

}  // namespace spfx
