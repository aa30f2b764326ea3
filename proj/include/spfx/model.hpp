#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "spfx/errors.hpp"
#include "spfx/mat.hpp"

namespace spfx {

enum class Activation { ReLU, SThresh };

inline const char* to_string(Activation a) { return a == Activation::ReLU ? "RELU" : "STHRESH"; }

/// Soft thresholding: sgn(x) * max(|x| - 1/2, 0). Produces exact zeros of
/// either sign; odd function.
inline double sthresh(double x) {
  const double m = std::abs(x) - 0.5;
  if (m <= 0.0) return 0.0;
  return x > 0.0 ? m : -m;
}

inline double apply_activation(Activation a, double x) {
  if (a == Activation::ReLU) return x > 0.0 ? x : 0.0;
  return sthresh(x);
}

// Subgradient; 0 at the kinks (x = 0 for ReLU, |x| = 1/2 for SThresh) so
// exact zeros stay stable.
inline double activation_subgrad(Activation a, double x) {
  if (a == Activation::ReLU) return x > 0.0 ? 1.0 : 0.0;
  return std::abs(x) > 0.5 ? 1.0 : 0.0;
}

struct AffineLayer {
  std::size_t fan_in = 0;
  std::size_t fan_out = 0;
  Mat weights;               // fan_in x fan_out
  std::vector<double> bias;  // fan_out
};

struct ForwardCache {
  Mat inputs;
  std::vector<Mat> pre;   // per layer, pre-activation
  std::vector<Mat> post;  // per layer, post-activation; back() is the
                          // pre-normalization embedding
  std::vector<double> norms;
  Mat embeddings;
  std::vector<std::uint32_t> dead_rows;  // all-zero pre-normalization rows
};

struct Gradients {
  std::vector<Mat> weights;
  std::vector<std::vector<double>> bias;
};

namespace detail {

// C += A^T * B, A: n x p, B: n x q, C: p x q
inline void add_at_b(const Mat& a, const Mat& b, Mat& c) {
  const std::size_t n = a.rows(), p = a.cols(), q = b.cols();
  for (std::size_t i = 0; i < n; ++i) {
    const double* ar = a.data() + i * p;
    const double* br = b.data() + i * q;
    for (std::size_t k = 0; k < p; ++k) {
      const double av = ar[k];
      if (av == 0.0) continue;
      double* cr = c.data() + k * q;
      for (std::size_t j = 0; j < q; ++j) cr[j] += av * br[j];
    }
  }
}

// C = A * B^T, A: n x q, B: p x q, C: n x p
inline void set_a_bt(const Mat& a, const Mat& b, Mat& c) {
  const std::size_t n = a.rows(), q = a.cols(), p = b.rows();
  for (std::size_t i = 0; i < n; ++i) {
    const double* ar = a.data() + i * q;
    double* cr = c.data() + i * p;
    for (std::size_t k = 0; k < p; ++k) {
      const double* br = b.data() + k * q;
      double s = 0.0;
      for (std::size_t j = 0; j < q; ++j) s += ar[j] * br[j];
      cr[k] = s;
    }
  }
}

}  // namespace detail

/// Small affine encoder: hidden layers use ReLU, the output layer the
/// configured activation, optionally followed by row-wise l2
/// normalization. Embedding rows with an all-zero pre-normalization
/// vector are left zero and flagged as dead.
class EncoderModel {
 public:
  EncoderModel() = default;

  EncoderModel(std::size_t input_dim, std::vector<std::size_t> layer_dims, Activation output_activation,
               bool normalize_output, std::uint64_t seed)
      : input_dim_(input_dim), output_activation_(output_activation), normalize_output_(normalize_output) {
    if (layer_dims.empty()) throw config_error("EncoderModel: needs at least one layer");
    std::mt19937_64 rng(seed);
    std::size_t fan_in = input_dim;
    for (std::size_t l = 0; l < layer_dims.size(); ++l) {
      const bool is_output = (l + 1 == layer_dims.size());
      init_layer(fan_in, layer_dims[l], is_output, rng);
      fan_in = layer_dims[l];
    }
  }

  std::size_t input_dim() const { return input_dim_; }
  std::size_t output_dim() const { return layers_.back().fan_out; }
  Activation output_activation() const { return output_activation_; }
  bool normalize_output() const { return normalize_output_; }
  std::vector<AffineLayer>& layers() { return layers_; }
  const std::vector<AffineLayer>& layers() const { return layers_; }

  // Used by checkpoint loading.
  void set_structure(std::size_t input_dim, std::vector<AffineLayer> layers, Activation output_activation,
                     bool normalize_output) {
    input_dim_ = input_dim;
    layers_ = std::move(layers);
    output_activation_ = output_activation;
    normalize_output_ = normalize_output;
  }

  ForwardCache forward(const Mat& inputs) const {
    if (inputs.cols() != input_dim_)
      throw dimension_error("forward: input dim " + std::to_string(inputs.cols()) + " != model fan-in " +
                            std::to_string(input_dim_));
    const std::size_t n = inputs.rows();
    ForwardCache cache;
    cache.inputs = inputs;
    const Mat* cur = &cache.inputs;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const AffineLayer& layer = layers_[l];
      Mat z(n, layer.fan_out);
      for (std::size_t i = 0; i < n; ++i) {
        double* zr = z.data() + i * layer.fan_out;
        for (std::size_t j = 0; j < layer.fan_out; ++j) zr[j] = layer.bias[j];
        const double* xr = cur->data() + i * layer.fan_in;
        for (std::size_t k = 0; k < layer.fan_in; ++k) {
          const double x = xr[k];
          if (x == 0.0) continue;
          const double* wr = layer.weights.data() + k * layer.fan_out;
          for (std::size_t j = 0; j < layer.fan_out; ++j) zr[j] += x * wr[j];
        }
      }
      const Activation act = (l + 1 == layers_.size()) ? output_activation_ : Activation::ReLU;
      Mat a(n, layer.fan_out);
      for (std::size_t i = 0; i < z.size(); ++i) a.data()[i] = apply_activation(act, z.data()[i]);
      cache.pre.push_back(std::move(z));
      cache.post.push_back(std::move(a));
      cur = &cache.post.back();
    }

    const Mat& out = cache.post.back();
    cache.norms.resize(n);
    cache.embeddings = out;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = l2_norm(out.row(i));
      cache.norms[i] = r;
      if (r == 0.0) {
        cache.dead_rows.push_back(static_cast<std::uint32_t>(i));
      } else if (normalize_output_) {
        auto row = cache.embeddings.row(i);
        for (double& x : row) x /= r;
      }
    }
    return cache;
  }

  /// Backpropagate dL/d(embeddings) through normalization, activations,
  /// and affine layers. Dead rows get a zero gradient.
  Gradients backward(const ForwardCache& cache, const Mat& d_embeddings) const {
    const std::size_t n = cache.embeddings.rows();
    Gradients grads;
    for (const auto& layer : layers_) {
      grads.weights.emplace_back(layer.fan_in, layer.fan_out);
      grads.bias.emplace_back(layer.fan_out, 0.0);
    }

    // Normalization backward: y = a / r, dL/da = (g - y (y . g)) / r.
    Mat d_out = d_embeddings;
    if (normalize_output_) {
      for (std::size_t i = 0; i < n; ++i) {
        const double r = cache.norms[i];
        auto g = d_out.row(i);
        if (r == 0.0) {
          for (double& x : g) x = 0.0;
          continue;
        }
        auto y = cache.embeddings.row(i);
        const double proj = dot(y, g);
        for (std::size_t j = 0; j < g.size(); ++j) g[j] = (g[j] - y[j] * proj) / r;
      }
    } else {
      for (std::uint32_t i : cache.dead_rows) {
        auto g = d_out.row(i);
        for (double& x : g) x = 0.0;
      }
    }

    // Layer chain, output to input.
    Mat d_z = std::move(d_out);
    for (std::size_t li = layers_.size(); li-- > 0;) {
      const AffineLayer& layer = layers_[li];
      const Activation act = (li + 1 == layers_.size()) ? output_activation_ : Activation::ReLU;
      const Mat& z = cache.pre[li];
      for (std::size_t i = 0; i < d_z.size(); ++i) d_z.data()[i] *= activation_subgrad(act, z.data()[i]);

      const Mat& a_prev = (li == 0) ? cache.inputs : cache.post[li - 1];
      detail::add_at_b(a_prev, d_z, grads.weights[li]);
      for (std::size_t i = 0; i < n; ++i) {
        const double* dz = d_z.data() + i * layer.fan_out;
        for (std::size_t j = 0; j < layer.fan_out; ++j) grads.bias[li][j] += dz[j];
      }
      if (li > 0) {
        Mat d_prev(n, layer.fan_in);
        detail::set_a_bt(d_z, layer.weights, d_prev);
        d_z = std::move(d_prev);
      }
    }
    return grads;
  }

 private:
  void init_layer(std::size_t fan_in, std::size_t fan_out, bool is_output, std::mt19937_64& rng) {
    AffineLayer layer;
    layer.fan_in = fan_in;
    layer.fan_out = fan_out;
    layer.weights = Mat(fan_in, fan_out);
    layer.bias.assign(fan_out, 0.0);
    // He init for the ReLU stack. The output layer gets a larger gain for
    // SThresh so pre-activations straddle the +-1/2 dead zone at init.
    double std_dev = std::sqrt(2.0 / static_cast<double>(fan_in));
    if (is_output && output_activation_ == Activation::SThresh) std_dev *= 8.0;
    std::normal_distribution<double> dist(0.0, std_dev);
    for (std::size_t i = 0; i < layer.weights.size(); ++i) layer.weights.data()[i] = dist(rng);
    layers_.push_back(std::move(layer));
  }

  std::size_t input_dim_ = 0;
  std::vector<AffineLayer> layers_;
  Activation output_activation_ = Activation::ReLU;
  bool normalize_output_ = true;
};

}  // namespace spfx
