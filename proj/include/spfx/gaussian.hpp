#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "spfx/errors.hpp"

namespace spfx {

inline constexpr double kInvSqrt2Pi = 0.3989422804014326779399461;
inline constexpr double kTrajectorySigmaMin = 1e-4;

// Standard Gaussian CDF via erfc; abs error well below 1e-12, which the
// 1e-6 finite-difference tolerances downstream rely on.
inline double gauss_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline double gauss_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

namespace detail {
inline void require_sigma(double sigma) {
  if (!(sigma > 0.0)) throw domain_error("sigma must be > 0, got " + std::to_string(sigma));
}
}  // namespace detail

/// E[max(Y,0)] for Y ~ N(mu, sigma^2).
inline double relu_gauss_mean(double mu, double sigma) {
  detail::require_sigma(sigma);
  const double z = mu / sigma;
  return sigma * kInvSqrt2Pi * std::exp(-0.5 * z * z) + mu * (1.0 - gauss_cdf(-z));
}

/// P(max(Y,0) > 0) for Y ~ N(mu, sigma^2).
inline double relu_gauss_prob(double mu, double sigma) {
  detail::require_sigma(sigma);
  return 1.0 - gauss_cdf(-mu / sigma);
}

struct Grad2 {
  double dmu;
  double dsigma;
};

/// d/d(mu,sigma) of P(Y+ > 0).
inline Grad2 grad_prob(double mu, double sigma) {
  detail::require_sigma(sigma);
  const double z = mu / sigma;
  const double e = kInvSqrt2Pi * std::exp(-0.5 * z * z);
  return {e / sigma, -mu * e / (sigma * sigma)};
}

/// d/d(mu,sigma) of E[Y+].
inline Grad2 grad_mean(double mu, double sigma) {
  detail::require_sigma(sigma);
  const double z = mu / sigma;
  return {1.0 - gauss_cdf(-z), kInvSqrt2Pi * std::exp(-0.5 * z * z)};
}

/// d/d(mu,sigma) of E[Y+]^2 (chain rule on grad_mean).
inline Grad2 grad_mean_sq(double mu, double sigma) {
  const double m = relu_gauss_mean(mu, sigma);
  const Grad2 g = grad_mean(mu, sigma);
  return {2.0 * m * g.dmu, 2.0 * m * g.dsigma};
}

/// d/d(mu,sigma) of P(Y+ > 0)^2 (chain rule on grad_prob).
inline Grad2 grad_prob_sq(double mu, double sigma) {
  const double p = relu_gauss_prob(mu, sigma);
  const Grad2 g = grad_prob(mu, sigma);
  return {2.0 * p * g.dmu, 2.0 * p * g.dsigma};
}

// ---------------------------------------------------------------------------
// Regularizer trajectories on (mu_j, sigma_j)
// ---------------------------------------------------------------------------

// Population regularizers over per-dimension ReLU-Gaussian activations:
// F = sum P(Y+>0)^2, F_TILDE = sum E[Y+]^2, L1 = sum E[Y+].
enum class PopRegularizer { F, F_TILDE, L1 };

inline const char* to_string(PopRegularizer r) {
  switch (r) {
    case PopRegularizer::F: return "F";
    case PopRegularizer::F_TILDE: return "F_TILDE";
    case PopRegularizer::L1: return "L1";
  }
  return "?";
}

struct GaussianDim {
  double mu;
  double sigma;
};

struct TrajectoryPoint {
  std::uint64_t step;
  std::vector<double> probs;
  std::vector<GaussianDim> dims;
};

struct TrajectoryState {
  std::vector<GaussianDim> dims;  // final parameters
  PopRegularizer regularizer = PopRegularizer::F_TILDE;
  double lr = 1e-3;
  std::vector<TrajectoryPoint> history;
  std::uint64_t steps_run = 0;
  bool sigma_clamped = false;  // some sigma hit the lower clamp
  bool converged = false;      // stop threshold reached before the step cap
};

namespace detail {
inline Grad2 regularizer_grad(PopRegularizer reg, double mu, double sigma) {
  switch (reg) {
    case PopRegularizer::F: return grad_prob_sq(mu, sigma);
    case PopRegularizer::F_TILDE: return grad_mean_sq(mu, sigma);
    case PopRegularizer::L1: return grad_mean(mu, sigma);
  }
  throw domain_error("unknown regularizer");
}
}  // namespace detail

/// Instantaneous dp_j/dt under gradient flow of the chosen regularizer.
inline std::vector<double> prob_rates(std::span<const GaussianDim> dims, PopRegularizer reg) {
  std::vector<double> rates;
  rates.reserve(dims.size());
  for (const auto& d : dims) {
    const Grad2 rg = detail::regularizer_grad(reg, d.mu, d.sigma);
    const Grad2 pg = grad_prob(d.mu, d.sigma);
    rates.push_back(-(rg.dmu * pg.dmu + rg.dsigma * pg.dsigma));
  }
  return rates;
}

/// dp_1/dt over dp_2/dt at the given state; the faster-sparsification
/// diagnostic for two-dimensional toy settings.
inline double rate_ratio(std::span<const GaussianDim> dims, PopRegularizer reg) {
  if (dims.size() != 2) throw dimension_error("rate_ratio requires exactly 2 dimensions");
  auto r = prob_rates(dims, reg);
  return r[0] / r[1];
}

/// Gradient descent on (mu_j, sigma_j) of the population regularizer.
/// Runs until every activation probability drops below prob_stop or
/// max_steps is hit; sigma is clamped at kTrajectorySigmaMin and flagged.
/// History records step 0, every record_every-th step, and the last step.
inline TrajectoryState run_trajectory_until(std::vector<GaussianDim> init, PopRegularizer reg, double lr,
                                            double prob_stop, std::uint64_t max_steps,
                                            std::uint64_t record_every = 1) {
  if (!(lr > 0.0)) throw domain_error("trajectory lr must be > 0");
  if (max_steps < 1) throw domain_error("trajectory needs at least one step");
  for (const auto& d : init) detail::require_sigma(d.sigma);
  if (record_every < 1) record_every = 1;

  TrajectoryState st;
  st.dims = std::move(init);
  st.regularizer = reg;
  st.lr = lr;

  auto probs_of = [&]() {
    std::vector<double> p;
    p.reserve(st.dims.size());
    for (const auto& d : st.dims) p.push_back(relu_gauss_prob(d.mu, d.sigma));
    return p;
  };
  auto record = [&](std::uint64_t step) { st.history.push_back({step, probs_of(), st.dims}); };

  record(0);
  for (std::uint64_t t = 1; t <= max_steps; ++t) {
    for (auto& d : st.dims) {
      const Grad2 g = detail::regularizer_grad(reg, d.mu, d.sigma);
      d.mu -= lr * g.dmu;
      d.sigma -= lr * g.dsigma;
      if (d.sigma < kTrajectorySigmaMin) {
        d.sigma = kTrajectorySigmaMin;
        st.sigma_clamped = true;
      }
    }
    st.steps_run = t;
    bool stopped = true;
    for (const auto& d : st.dims)
      if (relu_gauss_prob(d.mu, d.sigma) >= prob_stop) stopped = false;
    if (t % record_every == 0 || stopped || t == max_steps) record(t);
    if (stopped) {
      st.converged = true;
      break;
    }
  }
  return st;
}

/// Fixed-step variant (no probability stopping rule).
inline TrajectoryState run_trajectory(std::vector<GaussianDim> init, PopRegularizer reg, double lr,
                                      std::uint64_t steps, std::uint64_t record_every = 1) {
  return run_trajectory_until(std::move(init), reg, lr, -1.0, steps, record_every);
}

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov fit of the ReLU-Gaussian CDF
// ---------------------------------------------------------------------------

/// CDF of max(Y,0), Y ~ N(mu, sigma^2): point mass gauss_cdf(-mu/sigma)
/// at 0, then the Gaussian CDF for x > 0.
inline double relu_gauss_cdf(double mu, double sigma, double x) {
  if (x < 0.0) return 0.0;
  return gauss_cdf((x - mu) / sigma);
}

/// Exact sup-norm distance between the empirical CDF of sorted_samples
/// (ascending, all >= 0) and the ReLU-Gaussian CDF. Checks both sides of
/// every empirical jump; the model CDF's only jump (at 0) coincides with
/// a sample value whenever zeros are present.
inline double ks_distance_sorted(std::span<const double> sorted_samples, double mu, double sigma) {
  detail::require_sigma(sigma);
  const double n = static_cast<double>(sorted_samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted_samples.size(); ++i) {
    const double g = relu_gauss_cdf(mu, sigma, sorted_samples[i]);
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - g));
    d = std::max(d, std::abs(static_cast<double>(i) / n - g));
  }
  return d;
}

struct KsFit {
  double mu = 0.0;
  double sigma = 1.0;
  double ks = 1.0;
  bool degenerate = false;  // all-zero input: any (mu, sigma) with
                            // gauss_cdf(-mu/sigma) -> 1 fits in the limit
};

namespace detail {

// KS lower bound evaluated on a stride of order statistics; exact when
// stride == 1. Used to shortlist grid candidates cheaply on large inputs.
inline double ks_distance_strided(std::span<const double> sorted, double mu, double sigma, std::size_t stride) {
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); i += stride) {
    const double g = relu_gauss_cdf(mu, sigma, sorted[i]);
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - g));
    d = std::max(d, std::abs(static_cast<double>(i) / n - g));
  }
  {
    const std::size_t i = sorted.size() - 1;
    const double g = relu_gauss_cdf(mu, sigma, sorted[i]);
    d = std::max(d, std::abs(1.0 - g));
    d = std::max(d, std::abs(static_cast<double>(i) / n - g));
  }
  return d;
}

// Nelder-Mead on (mu, sigma) with a fixed iteration budget. sigma <= 0 is
// rejected with an infinite score.
inline void nelder_mead_2d(std::function<double(double, double)> f, double& mu, double& sigma, double step_mu,
                           double step_sigma, int iters) {
  struct Vertex {
    double mu, sigma, val;
  };
  auto eval = [&](double m, double s) { return s > 1e-6 ? f(m, s) : std::numeric_limits<double>::infinity(); };
  std::array<Vertex, 3> v{{{mu, sigma, eval(mu, sigma)},
                           {mu + step_mu, sigma, eval(mu + step_mu, sigma)},
                           {mu, sigma + step_sigma, eval(mu, sigma + step_sigma)}}};
  for (int it = 0; it < iters; ++it) {
    std::sort(v.begin(), v.end(), [](const Vertex& a, const Vertex& b) { return a.val < b.val; });
    const double cm = 0.5 * (v[0].mu + v[1].mu), cs = 0.5 * (v[0].sigma + v[1].sigma);
    Vertex refl{cm + (cm - v[2].mu), cs + (cs - v[2].sigma), 0.0};
    refl.val = eval(refl.mu, refl.sigma);
    if (refl.val < v[0].val) {
      Vertex exp{cm + 2.0 * (cm - v[2].mu), cs + 2.0 * (cs - v[2].sigma), 0.0};
      exp.val = eval(exp.mu, exp.sigma);
      v[2] = exp.val < refl.val ? exp : refl;
    } else if (refl.val < v[1].val) {
      v[2] = refl;
    } else {
      Vertex con{cm + 0.5 * (v[2].mu - cm), cs + 0.5 * (v[2].sigma - cs), 0.0};
      con.val = eval(con.mu, con.sigma);
      if (con.val < v[2].val) {
        v[2] = con;
      } else {
        for (int i = 1; i < 3; ++i) {
          v[i].mu = v[0].mu + 0.5 * (v[i].mu - v[0].mu);
          v[i].sigma = v[0].sigma + 0.5 * (v[i].sigma - v[0].sigma);
          v[i].val = eval(v[i].mu, v[i].sigma);
        }
      }
    }
  }
  std::sort(v.begin(), v.end(), [](const Vertex& a, const Vertex& b) { return a.val < b.val; });
  mu = v[0].mu;
  sigma = v[0].sigma;
}

}  // namespace detail

/// Fit (mu, sigma) of the ReLU-Gaussian CDF to non-negative samples by
/// minimizing the KS distance: 101x101 coarse grid over mu in [-5,5],
/// sigma in (0,5], then 200 Nelder-Mead refinement iterations from the
/// best exact-evaluated candidates.
inline KsFit ks_fit(std::span<const double> samples) {
  if (samples.size() < 100) throw domain_error("ks_fit needs at least 100 samples, got " + std::to_string(samples.size()));
  std::vector<double> sorted(samples.begin(), samples.end());
  for (double x : sorted) {
    if (!std::isfinite(x)) throw numeric_error("ks_fit: non-finite sample");
    if (x < 0.0) throw domain_error("ks_fit: samples must be >= 0 (post-ReLU values)");
  }
  std::sort(sorted.begin(), sorted.end());

  if (sorted.back() == 0.0) {
    // All mass at zero; report the most negative grid corner.
    KsFit fit;
    fit.mu = -5.0;
    fit.sigma = 5.0 / 101.0;
    fit.ks = ks_distance_sorted(sorted, fit.mu, fit.sigma);
    fit.degenerate = true;
    return fit;
  }

  constexpr int kGrid = 101;
  const std::size_t stride = std::max<std::size_t>(1, sorted.size() / 2048);

  // Coarse grid: keep the few best candidates for exact evaluation.
  struct Cand {
    double mu, sigma, approx;
  };
  std::vector<Cand> cands;
  for (int im = 0; im < kGrid; ++im) {
    const double mu = -5.0 + 10.0 * im / (kGrid - 1);
    for (int is = 1; is <= kGrid; ++is) {
      const double sigma = 5.0 * is / kGrid;
      cands.push_back({mu, sigma, detail::ks_distance_strided(sorted, mu, sigma, stride)});
    }
  }
  std::partial_sort(cands.begin(), cands.begin() + 5, cands.end(),
                    [](const Cand& a, const Cand& b) { return a.approx < b.approx; });

  KsFit best;
  for (int c = 0; c < 5; ++c) {
    const double ks = ks_distance_sorted(sorted, cands[c].mu, cands[c].sigma);
    if (ks < best.ks) {
      best.mu = cands[c].mu;
      best.sigma = cands[c].sigma;
      best.ks = ks;
    }
  }

  double mu = best.mu, sigma = best.sigma;
  detail::nelder_mead_2d([&](double m, double s) { return ks_distance_sorted(sorted, m, s); }, mu, sigma, 0.1, 0.05,
                         200);
  const double refined = ks_distance_sorted(sorted, mu, sigma);
  if (refined < best.ks) {
    best.mu = mu;
    best.sigma = sigma;
    best.ks = refined;
  }
  return best;
}

}  // namespace spfx
