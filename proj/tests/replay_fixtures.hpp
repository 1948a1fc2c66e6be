#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <cmath>
#include <random>
#include <vector>

#include "interocept/tracking.hpp"
#include "interocept/velocity_model.hpp"

namespace interocept::fixtures {

/// Slow block then fast block, Gaussian noise. Windows of the default
/// geometry fall on either side of the switch except the one or two that
/// straddle it.
inline VelocityProfile two_regime_profile(std::uint64_t seed, int samples = 210, double slow = 0.3, double fast = 1.5,
                                          double noise = 0.05, double rate_hz = 20.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, noise);
  VelocityProfile p{rate_hz, {}};
  for (int i = 0; i < samples; ++i) p.samples.push_back((i < samples / 2 ? slow : fast) + n(rng));
  return p;
}

/// 0 -> 1 m/s over 2 s, hold 4 s, 1 -> 0 over 2 s, sampled at 20 Hz (161 samples).
inline VelocityProfile trapezoid_profile() {
  VelocityProfile p{20.0, {}};
  for (int i = 0; i <= 160; ++i) {
    const double t = i / 20.0;
    p.samples.push_back(t < 2.0 ? t / 2.0 : (t <= 6.0 ? 1.0 : (8.0 - t) / 2.0));
  }
  return p;
}

/// Training setup for the two-regime data: negatives must be at least half
/// the window list apart, so every negative pair spans the regime switch.
inline VelocityModelConfig two_regime_config() {
  VelocityModelConfig cfg;
  cfg.window = 20;
  cfg.stride = 10;
  cfg.gap = 10;
  cfg.sigma = 1.0;
  cfg.negatives_per_window = 2;
  cfg.seed = 1;
  cfg.encoder.epochs = 500;
  cfg.encoder.lr = 0.2;
  cfg.decoder.epochs = 10;
  return cfg;
}

struct Separation {
  double mean_positive = 0.0;
  double mean_negative = 0.0;
  double margin_rate = 0.0;  // share of negatives with D >= margin
};

inline Separation measure_separation(const GruParams& params, const std::vector<Window>& windows,
                                     const std::vector<WindowPair>& pairs, double margin) {
  std::vector<Eigen::VectorXd> emb;
  for (const auto& w : windows) emb.push_back(gru_forward(params, w.values).embedding);
  Separation s;
  int np = 0;
  int nn = 0;
  int satisfied = 0;
  for (const auto& p : pairs) {
    const double d = (emb[p.a] - emb[p.b]).norm();
    if (p.label == PairLabel::Positive) {
      s.mean_positive += d;
      ++np;
    } else {
      s.mean_negative += d;
      satisfied += d >= margin ? 1 : 0;
      ++nn;
    }
  }
  s.mean_positive /= std::max(1, np);
  s.mean_negative /= std::max(1, nn);
  s.margin_rate = nn > 0 ? static_cast<double>(satisfied) / nn : 0.0;
  return s;
}

/// Worst per-tensor relative error between the analytic contrastive gradient
/// and central differences. `worst_tensor` names the offender.
struct GradientCheck {
  double worst_relative_error = 0.0;
  std::string worst_tensor;
  std::map<std::string, double> per_tensor;
};

inline GradientCheck check_contrastive_gradient(std::uint64_t seed, double eps = 1e-5, int hidden = 4,
                                                int embed_dim = 3, int window = 6) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> speed(0.0, 1.5);
  std::vector<std::vector<double>> windows(5, std::vector<double>(static_cast<std::size_t>(window)));
  for (auto& w : windows) {
    for (double& x : w) x = speed(rng);
  }
  const std::vector<WindowPair> pairs{{0, 1, PairLabel::Positive},
                                      {1, 2, PairLabel::Positive},
                                      {0, 3, PairLabel::Negative},
                                      {2, 4, PairLabel::Negative},
                                      {4, 1, PairLabel::Negative}};
  // Large init keeps embeddings apart from the hinge kink at D == margin.
  GruParams params = GruParams::random_uniform(hidden, embed_dim, seed, 0.5);
  const double margin = 5.0;
  GruParams analytic = contrastive_objective(params, windows, pairs, margin).gradient;

  GradientCheck out;
  auto ts = params.tensors();
  auto gs = analytic.tensors();
  for (std::size_t t = 0; t < ts.size(); ++t) {
    double diff2 = 0.0;
    double norm_a = 0.0;
    double norm_n = 0.0;
    for (Eigen::Index i = 0; i < ts[t].size(); ++i) {
      const double saved = ts[t].data[i];
      ts[t].data[i] = saved + eps;
      const double up = contrastive_objective(params, windows, pairs, margin).loss;
      ts[t].data[i] = saved - eps;
      const double down = contrastive_objective(params, windows, pairs, margin).loss;
      ts[t].data[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = gs[t].data[i];
      diff2 += (a - numeric) * (a - numeric);
      norm_a += a * a;
      norm_n += numeric * numeric;
    }
    // Distances ignore a shared bias, so some true gradients are exactly zero
    // and the difference quotient is pure rounding; floor the denominator.
    const double denom = std::max(std::sqrt(norm_a) + std::sqrt(norm_n), 1e-6);
    const double rel = std::sqrt(diff2) / denom;
    out.per_tensor[ts[t].name] = rel;
    if (rel >= out.worst_relative_error) {
      out.worst_relative_error = rel;
      out.worst_tensor = ts[t].name;
    }
  }
  return out;
}

}  // namespace interocept::fixtures
