#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "spfx/csv.hpp"
#include "spfx/errors.hpp"
#include "spfx/mat.hpp"
#include "spfx/metrics.hpp"
#include "spfx/model.hpp"
#include "spfx/synthetic.hpp"

namespace spfx {

enum class Regularizer { FLOPS, L1, NONE };

inline const char* to_string(Regularizer r) {
  switch (r) {
    case Regularizer::FLOPS: return "FLOPS";
    case Regularizer::L1: return "L1";
    case Regularizer::NONE: return "NONE";
  }
  return "?";
}

inline Regularizer regularizer_from_string(const std::string& s) {
  if (s == "FLOPS") return Regularizer::FLOPS;
  if (s == "L1") return Regularizer::L1;
  if (s == "NONE") return Regularizer::NONE;
  throw config_error("unknown regularizer '" + s + "' (expected FLOPS, L1, or NONE)");
}

inline Activation activation_from_string(const std::string& s) {
  if (s == "RELU") return Activation::ReLU;
  if (s == "STHRESH") return Activation::SThresh;
  throw config_error("unknown activation '" + s + "' (expected RELU or STHRESH)");
}

// All experiment knobs for one training run.
struct RunConfig {
  double lambda_max = 0.0;
  std::uint32_t anneal_steps = 1000;  // T of the quadratic ramp
  std::uint32_t steps = 3000;
  double lr = 0.01;
  double momentum = 0.9;
  double margin = 0.2;
  std::uint32_t batch_size = 128;
  std::uint64_t seed = 1;
  Regularizer regularizer = Regularizer::FLOPS;

  std::uint32_t embedding_dim = 64;
  std::uint32_t hidden_dim = 128;
  Activation output_activation = Activation::ReLU;
  bool normalize_output = true;

  std::uint32_t num_classes = 256;
  std::uint32_t per_class = 30;
  std::uint32_t input_dim = 128;
  double noise = 0.1;
  double eval_fraction = 0.2;

  std::uint32_t eval_interval = 200;
  double threshold = 0.25;      // retrieval confidence threshold
  std::uint32_t topk = 1000;    // retrieval shortlist size
  std::uint32_t rerank_k = 10;  // final neighbours after re-ranking

  void validate() const {
    if (lambda_max < 0.0) throw config_error("lambda_max must be >= 0");
    if (anneal_steps < 1) throw config_error("anneal_steps must be >= 1");
    if (anneal_steps > steps) throw config_error("anneal_steps must be <= steps");
    if (!(lr > 0.0)) throw config_error("lr must be > 0");
    if (momentum < 0.0 || momentum >= 1.0) throw config_error("momentum must be in [0,1)");
    if (!(margin > 0.0)) throw config_error("margin must be > 0");
    if (batch_size < 8) throw config_error("batch_size must be >= 8");
    if (embedding_dim < 1 || hidden_dim < 1) throw config_error("model dims must be >= 1");
    if (per_class < 2) throw config_error("per_class must be >= 2 (each anchor needs a positive)");
    if (eval_interval < 1) throw config_error("eval_interval must be >= 1");
  }
};

/// Quadratic ramp of the regularization weight: lambda * (t/T)^2 until
/// step T, then lambda.
inline double anneal_lambda(std::uint64_t t, double lambda_max, std::uint64_t anneal_steps) {
  if (t >= anneal_steps) return lambda_max;
  const double frac = static_cast<double>(t) / static_cast<double>(anneal_steps);
  return lambda_max * frac * frac;
}

inline double anneal_lambda(std::uint64_t t, const RunConfig& config) {
  return anneal_lambda(t, config.lambda_max, config.anneal_steps);
}

// ---------------------------------------------------------------------------
// Losses and regularizer gradients
// ---------------------------------------------------------------------------

struct TripletResult {
  double loss = 0.0;
  Mat d_anchor, d_positive, d_negative;
};

/// Mean over triplets of max(0, |a-p|^2 - |a-n|^2 + margin), with
/// gradients w.r.t. each embedding row. Inactive triplets (hinge at or
/// below zero) contribute zero loss and zero gradient.
inline TripletResult triplet_loss(const Mat& anchors, const Mat& positives, const Mat& negatives, double margin) {
  if (!(margin > 0.0)) throw domain_error("triplet margin must be > 0");
  if (anchors.rows() != positives.rows() || anchors.rows() != negatives.rows() || anchors.cols() != positives.cols() ||
      anchors.cols() != negatives.cols())
    throw dimension_error("triplet_loss: anchor/positive/negative shapes differ");

  const std::size_t t = anchors.rows(), d = anchors.cols();
  TripletResult res;
  res.d_anchor = Mat(t, d);
  res.d_positive = Mat(t, d);
  res.d_negative = Mat(t, d);
  const double inv_t = 1.0 / static_cast<double>(t);
  for (std::size_t i = 0; i < t; ++i) {
    auto a = anchors.row(i), p = positives.row(i), n = negatives.row(i);
    double dp = 0.0, dn = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double ep = a[j] - p[j], en = a[j] - n[j];
      dp += ep * ep;
      dn += en * en;
    }
    const double viol = dp - dn + margin;
    if (viol > 0.0) {
      res.loss += viol * inv_t;
      auto ga = res.d_anchor.row(i), gp = res.d_positive.row(i), gn = res.d_negative.row(i);
      for (std::size_t j = 0; j < d; ++j) {
        ga[j] = 2.0 * (n[j] - p[j]) * inv_t;
        gp[j] = -2.0 * (a[j] - p[j]) * inv_t;
        gn[j] = 2.0 * (a[j] - n[j]) * inv_t;
      }
    }
  }
  return res;
}

/// Analytic gradient of relaxed_flops: dF/da_ij = (2/n) a_bar_j sgn(a_ij),
/// with sgn(0) = 0.
inline Mat flops_reg_grad(const ActivationBatch& batch) {
  const auto a_bar = mean_abs_activations(batch);
  const std::size_t n = batch.rows(), d = batch.cols();
  Mat grad(n, d);
  const double scale = 2.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto src = batch.row(i);
    auto dst = grad.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      if (src[j] > 0.0) dst[j] = scale * a_bar[j];
      else if (src[j] < 0.0) dst[j] = -scale * a_bar[j];
    }
  }
  return grad;
}

/// Analytic gradient of l1_mean: (1/n) sgn(a_ij).
inline Mat l1_reg_grad(const ActivationBatch& batch) {
  const std::size_t n = batch.rows(), d = batch.cols();
  Mat grad(n, d);
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto src = batch.row(i);
    auto dst = grad.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      if (src[j] > 0.0) dst[j] = scale;
      else if (src[j] < 0.0) dst[j] = -scale;
    }
  }
  return grad;
}

inline double regularizer_value(Regularizer reg, const ActivationBatch& batch) {
  switch (reg) {
    case Regularizer::FLOPS: return relaxed_flops(batch);
    case Regularizer::L1: return l1_mean(batch);
    case Regularizer::NONE: return 0.0;
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

struct TrainLogRow {
  std::uint64_t step = 0;
  double loss = 0.0;
  double f_tilde = 0.0;
  double p_mean = 0.0;
  double r_sub = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t dead_dims = 0;
};

struct TrainLog {
  std::vector<TrainLogRow> rows;
  std::vector<std::string> warnings;

  static std::string csv_header() { return "step,loss,f_tilde,p_mean,r_sub,dead_dims"; }
  std::string csv() const {
    std::string out = csv_header() + "\n";
    for (const auto& r : rows) {
      out += csv_num(r.step) + "," + csv_num(r.loss) + "," + csv_num(r.f_tilde) + "," + csv_num(r.p_mean) + "," +
             csv_num(r.r_sub) + "," + csv_num(r.dead_dims) + "\n";
    }
    return out;
  }
};

struct TrainResult {
  EncoderModel model;
  TrainLog log;
};

namespace detail {

// P classes x K samples per batch; every element acts as an anchor with a
// random in-batch positive and the hardest in-batch negative.
struct BatchPlan {
  std::vector<std::uint32_t> rows;    // dataset row per batch element
  std::vector<std::uint32_t> labels;  // class per batch element
};

inline BatchPlan sample_batch(const SyntheticDataset& data, const RunConfig& config, std::mt19937_64& rng) {
  const std::uint32_t k = std::min<std::uint32_t>(4, data.per_class);
  const std::uint32_t p = std::max<std::uint32_t>(2, config.batch_size / k);
  BatchPlan plan;
  plan.rows.reserve(static_cast<std::size_t>(p) * k);
  plan.labels.reserve(static_cast<std::size_t>(p) * k);

  std::vector<std::uint32_t> classes = data.train_classes;
  for (std::uint32_t i = 0; i < p && i < classes.size(); ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, classes.size() - 1);
    std::swap(classes[i], classes[pick(rng)]);
  }
  const std::uint32_t num_classes = std::min<std::uint32_t>(p, static_cast<std::uint32_t>(classes.size()));

  std::vector<std::uint32_t> members(data.per_class);
  for (std::uint32_t ci = 0; ci < num_classes; ++ci) {
    const std::uint32_t c = classes[ci];
    std::iota(members.begin(), members.end(), 0u);
    for (std::uint32_t s = 0; s < k; ++s) {
      std::uniform_int_distribution<std::size_t> pick(s, members.size() - 1);
      std::swap(members[s], members[pick(rng)]);
      plan.rows.push_back(c * data.per_class + members[s]);
      plan.labels.push_back(c);
    }
  }
  return plan;
}

struct TripletIndices {
  std::vector<std::uint32_t> anchor, positive, negative;
};

// Random positive, hardest (closest) negative, both within the batch.
inline TripletIndices mine_triplets(const Mat& embeddings, const std::vector<std::uint32_t>& labels,
                                    std::mt19937_64& rng) {
  const std::size_t n = embeddings.rows();
  TripletIndices t;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::uint32_t> same;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i && labels[j] == labels[i]) same.push_back(static_cast<std::uint32_t>(j));
    if (same.empty()) continue;
    std::uniform_int_distribution<std::size_t> pick(0, same.size() - 1);
    const std::uint32_t pos = same[pick(rng)];

    double best = std::numeric_limits<double>::infinity();
    std::int64_t neg = -1;
    auto ai = embeddings.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      if (labels[j] == labels[i]) continue;
      auto aj = embeddings.row(j);
      double dist = 0.0;
      for (std::size_t m = 0; m < ai.size(); ++m) {
        const double e = ai[m] - aj[m];
        dist += e * e;
      }
      if (dist < best) {
        best = dist;
        neg = static_cast<std::int64_t>(j);
      }
    }
    if (neg < 0) continue;
    t.anchor.push_back(static_cast<std::uint32_t>(i));
    t.positive.push_back(pos);
    t.negative.push_back(static_cast<std::uint32_t>(neg));
  }
  return t;
}

inline Mat gather_rows(const Mat& src, const std::vector<std::uint32_t>& rows) {
  Mat out(rows.size(), src.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto s = src.row(rows[i]);
    std::copy(s.begin(), s.end(), out.row(i).begin());
  }
  return out;
}

}  // namespace detail

/// Compute embeddings for the given dataset rows (forward only).
inline Mat embed_rows(const EncoderModel& model, const SyntheticDataset& data,
                      const std::vector<std::uint32_t>& rows) {
  return model.forward(data.gather(rows)).embeddings;
}

/// Train the toy encoder: triplet loss + lambda(t) * regularizer, plain
/// SGD with momentum. Deterministic given config.seed. Logs batch loss
/// and full train-split sparsity statistics every eval_interval steps.
inline TrainResult train(const RunConfig& config, const SyntheticDataset& data) {
  config.validate();
  if (data.train_classes.size() < 2) throw config_error("train: need at least 2 training classes");
  if (data.per_class < 2) throw config_error("train: need per_class >= 2");

  TrainResult result;
  const std::size_t num_train_classes = data.train_classes.size();
  if (num_train_classes <= config.embedding_dim) {
    result.log.warnings.push_back("embedding_dim " + std::to_string(config.embedding_dim) +
                                  " >= training classes " + std::to_string(num_train_classes) +
                                  ": risk of trivial one-hot collapse");
  }

  std::mt19937_64 rng(config.seed);
  result.model = EncoderModel(config.input_dim, {config.hidden_dim, config.embedding_dim},
                              config.output_activation, config.normalize_output, rng());

  // Momentum buffers mirror the parameter layout.
  std::vector<Mat> vel_w;
  std::vector<std::vector<double>> vel_b;
  for (const auto& layer : result.model.layers()) {
    vel_w.emplace_back(layer.fan_in, layer.fan_out);
    vel_b.emplace_back(layer.fan_out, 0.0);
  }

  const auto train_rows = data.train_rows();
  const Mat train_inputs = data.gather(train_rows);

  auto log_eval = [&](std::uint64_t step, double batch_loss) {
    const Mat emb = result.model.forward(train_inputs).embeddings;
    const SparsityReport rep = make_sparsity_report(emb);
    result.log.rows.push_back({step, batch_loss, rep.relaxed_flops, rep.p_mean, rep.r_sub, rep.dead_dims});
  };

  double last_loss = 0.0;
  for (std::uint64_t t = 0; t < config.steps; ++t) {
    const auto plan = detail::sample_batch(data, config, rng);
    const Mat inputs = data.gather(plan.rows);
    const ForwardCache cache = result.model.forward(inputs);
    const Mat& emb = cache.embeddings;

    const auto trip = detail::mine_triplets(emb, plan.labels, rng);
    Mat d_emb(emb.rows(), emb.cols());
    double loss = 0.0;
    if (!trip.anchor.empty()) {
      const TripletResult tl = triplet_loss(detail::gather_rows(emb, trip.anchor),
                                            detail::gather_rows(emb, trip.positive),
                                            detail::gather_rows(emb, trip.negative), config.margin);
      loss += tl.loss;
      for (std::size_t i = 0; i < trip.anchor.size(); ++i) {
        auto add = [&](std::uint32_t row, const Mat& g) {
          auto dst = d_emb.row(row);
          auto src = g.row(i);
          for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
        };
        add(trip.anchor[i], tl.d_anchor);
        add(trip.positive[i], tl.d_positive);
        add(trip.negative[i], tl.d_negative);
      }
    }

    const double lambda_t = anneal_lambda(t, config);
    if (config.regularizer != Regularizer::NONE && lambda_t > 0.0) {
      loss += lambda_t * regularizer_value(config.regularizer, emb);
      const Mat rg = config.regularizer == Regularizer::FLOPS ? flops_reg_grad(emb) : l1_reg_grad(emb);
      for (std::size_t i = 0; i < d_emb.size(); ++i) d_emb.data()[i] += lambda_t * rg.data()[i];
    }

    if (!std::isfinite(loss))
      throw numeric_error("training diverged at step " + std::to_string(t) + ": loss = " + std::to_string(loss));
    last_loss = loss;

    const Gradients grads = result.model.backward(cache, d_emb);
    auto& layers = result.model.layers();
    for (std::size_t l = 0; l < layers.size(); ++l) {
      for (std::size_t i = 0; i < layers[l].weights.size(); ++i) {
        double& v = vel_w[l].data()[i];
        v = config.momentum * v - config.lr * grads.weights[l].data()[i];
        layers[l].weights.data()[i] += v;
      }
      for (std::size_t j = 0; j < layers[l].bias.size(); ++j) {
        double& v = vel_b[l][j];
        v = config.momentum * v - config.lr * grads.bias[l][j];
        layers[l].bias[j] += v;
      }
    }

    if ((t + 1) % config.eval_interval == 0 || t + 1 == config.steps) log_eval(t + 1, last_loss);
  }
  return result;
}

}  // namespace spfx
