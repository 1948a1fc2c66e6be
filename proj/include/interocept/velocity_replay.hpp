#pragma once

// Few-shot velocity replay: a single recorded velocity profile is cut into
// overlapping windows, smoothed, and paired (consecutive windows are
// positives, distant windows negatives). A shared GRU encoder is trained with
// a margin contrastive loss; a small tanh decoder maps embeddings back to
// windows, and replay stitches decoded windows by overlap averaging.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "interocept/error.hpp"
#include "interocept/gru.hpp"
#include "interocept/tracking.hpp"

namespace interocept {

struct Window {
  std::vector<double> values;
  int start_index = 0;
  std::string context_key;
};

enum class PairLabel { Positive, Negative };

/// Indices into the window list the pairs were drawn from.
struct WindowPair {
  std::size_t a = 0;
  std::size_t b = 0;
  PairLabel label = PairLabel::Positive;
};

struct Embedding {
  std::vector<double> vector;
  std::string context_key;
  int order_index = 0;
};

/// floor((N - W) / stride) + 1 windows; the ragged tail is dropped.
inline std::vector<Window> segment(const VelocityProfile& profile, int window, int stride,
                                   const std::string& context_key) {
  if (window < 2 || stride < 1 || stride > window) {
    throw Error(ErrorCode::InvalidArgument, "need W >= 2 and 1 <= stride <= W");
  }
  const auto n = static_cast<int>(profile.samples.size());
  if (n < window) {
    throw Error(ErrorCode::ProfileTooShort,
                std::to_string(n) + " samples < window " + std::to_string(window));
  }
  std::vector<Window> out;
  for (int start = 0; start + window <= n; start += stride) {
    out.push_back({std::vector<double>(profile.samples.begin() + start,
                                       profile.samples.begin() + start + window),
                   start, context_key});
  }
  return out;
}

/// Truncated Gaussian (radius ceil(3 sigma)) renormalized over the in-range taps.
inline Window gaussian_smooth(const Window& window, double sigma) {
  if (!(sigma > 0.0)) throw Error(ErrorCode::InvalidArgument, "sigma must be > 0");
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  for (int k = -radius; k <= radius; ++k) {
    kernel[static_cast<std::size_t>(k + radius)] = std::exp(-(k * k) / (2.0 * sigma * sigma));
  }
  const auto n = static_cast<int>(window.values.size());
  Window out{std::vector<double>(window.values.size()), window.start_index, window.context_key};
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    double norm = 0.0;
    for (int k = -radius; k <= radius; ++k) {
      const int j = i + k;
      if (j < 0 || j >= n) continue;
      const double w = kernel[static_cast<std::size_t>(k + radius)];
      acc += w * window.values[static_cast<std::size_t>(j)];
      norm += w;
    }
    out.values[static_cast<std::size_t>(i)] = acc / norm;
  }
  return out;
}

/// One positive per consecutive pair; `negatives_per_window` negatives for
/// each window, drawn uniformly among windows at least `gap` positions away.
inline std::vector<WindowPair> make_pairs(std::size_t window_count, int negatives_per_window,
                                          int gap, std::uint64_t seed) {
  if (gap < 2) throw Error(ErrorCode::InvalidArgument, "gap must be >= 2");
  if (negatives_per_window < 0) throw Error(ErrorCode::InvalidArgument, "negative count < 0");
  if (window_count < static_cast<std::size_t>(gap) + 2) {
    throw Error(ErrorCode::TooFewWindows, std::to_string(window_count) + " windows, gap " +
                                              std::to_string(gap));
  }
  std::vector<WindowPair> pairs;
  for (std::size_t i = 0; i + 1 < window_count; ++i) pairs.push_back({i, i + 1, PairLabel::Positive});

  std::mt19937_64 rng(seed);
  const auto g = static_cast<std::size_t>(gap);
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < window_count; ++i) {
    candidates.clear();
    for (std::size_t j = 0; j < window_count; ++j) {
      if ((i > j ? i - j : j - i) >= g) candidates.push_back(j);
    }
    if (candidates.empty()) continue;  // middle windows of a short list have no distant partner
    std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
    for (int k = 0; k < negatives_per_window; ++k) {
      pairs.push_back({i, candidates[pick(rng)], PairLabel::Negative});
    }
  }
  return pairs;
}

inline std::vector<WindowPair> make_pairs(std::span<const Window> windows, int negatives_per_window,
                                          int gap, std::uint64_t seed) {
  return make_pairs(windows.size(), negatives_per_window, gap, seed);
}

inline Embedding gru_encode(const GruParams& params, const Window& window, int order_index = 0) {
  const Eigen::VectorXd e = gru_encode_vector(params, window.values);
  return {std::vector<double>(e.data(), e.data() + e.size()), window.context_key, order_index};
}

/// Positive: D^2. Negative: max(0, margin - D)^2.
inline double contrastive_loss(std::span<const double> e1, std::span<const double> e2,
                               PairLabel label, double margin) {
  if (e1.size() != e2.size()) throw Error(ErrorCode::DimensionMismatch, "embedding sizes differ");
  if (!(margin > 0.0)) throw Error(ErrorCode::InvalidArgument, "margin must be > 0");
  double d2 = 0.0;
  for (std::size_t i = 0; i < e1.size(); ++i) d2 += (e1[i] - e2[i]) * (e1[i] - e2[i]);
  if (label == PairLabel::Positive) return d2;
  const double hinge = std::max(0.0, margin - std::sqrt(d2));
  return hinge * hinge;
}

inline double contrastive_loss(const Embedding& e1, const Embedding& e2, PairLabel label, double margin) {
  return contrastive_loss(e1.vector, e2.vector, label, margin);
}

struct LossAndGradient {
  double loss = 0.0;
  GruParams gradient;
};

/// Mean contrastive loss over `pairs` and its exact gradient. Each window is
/// encoded once; both branches of every pair share the parameters, so their
/// gradients add.
inline LossAndGradient contrastive_objective(const GruParams& params,
                                             std::span<const std::vector<double>> windows,
                                             std::span<const WindowPair> pairs, double margin) {
  if (pairs.empty()) throw Error(ErrorCode::EmptyTrainingSet, "no pairs");
  std::vector<GruTrace> traces;
  traces.reserve(windows.size());
  for (const auto& w : windows) traces.push_back(gru_forward(params, w));

  const int d = params.embed_dim();
  std::vector<Eigen::VectorXd> d_emb(windows.size(), Eigen::VectorXd::Zero(d));
  const double scale = 1.0 / static_cast<double>(pairs.size());
  double total = 0.0;
  for (const WindowPair& pair : pairs) {
    const Eigen::VectorXd delta = traces[pair.a].embedding - traces[pair.b].embedding;
    const double dist = delta.norm();
    Eigen::VectorXd grad_a;
    if (pair.label == PairLabel::Positive) {
      total += dist * dist;
      grad_a = 2.0 * delta;
    } else {
      const double hinge = std::max(0.0, margin - dist);
      total += hinge * hinge;
      // At D == 0 the direction is undefined; use the zero subgradient.
      grad_a = (hinge > 0.0 && dist > 0.0) ? Eigen::VectorXd(-2.0 * hinge / dist * delta)
                                           : Eigen::VectorXd::Zero(d);
    }
    d_emb[pair.a] += scale * grad_a;
    d_emb[pair.b] -= scale * grad_a;
  }

  LossAndGradient out{total * scale, GruParams::zeros(params.hidden(), d)};
  for (std::size_t i = 0; i < windows.size(); ++i) {
    if (d_emb[i].squaredNorm() == 0.0) continue;
    gru_backward(params, traces[i], d_emb[i], out.gradient);
  }
  return out;
}

struct EncoderHyper {
  double lr = 0.05;
  int epochs = 300;
  double margin = 1.0;
  std::uint64_t seed = 0;
  int hidden = 16;
  int embed_dim = 8;
};

struct EncoderTraining {
  GruParams params;
  std::vector<double> loss_curve;  // mean loss at the start of each epoch
};

/// Full-batch gradient descent from a uniform(-0.1, 0.1) initialization.
inline EncoderTraining train_encoder(std::span<const Window> windows, std::span<const WindowPair> pairs,
                                     const EncoderHyper& hyper) {
  if (pairs.empty()) throw Error(ErrorCode::EmptyTrainingSet, "no training pairs");
  std::vector<std::vector<double>> values;
  values.reserve(windows.size());
  for (const auto& w : windows) values.push_back(w.values);
  for (const auto& p : pairs) {
    if (p.a >= values.size() || p.b >= values.size()) {
      throw Error(ErrorCode::InvalidArgument, "pair index out of range");
    }
  }

  EncoderTraining out{GruParams::random_uniform(hyper.hidden, hyper.embed_dim, hyper.seed), {}};
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    LossAndGradient step = contrastive_objective(out.params, values, pairs, hyper.margin);
    if (!std::isfinite(step.loss) || !step.gradient.all_finite()) {
      throw Error(ErrorCode::DivergedLoss, "epoch " + std::to_string(epoch));
    }
    out.loss_curve.push_back(step.loss);
    out.params.axpy(-hyper.lr, step.gradient);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Decoder: window = L2 tanh(L1 e + b1) + b2

struct DecoderParams {
  Eigen::MatrixXd layer1;  // h_dec x d
  Eigen::VectorXd bias1;
  Eigen::MatrixXd layer2;  // W x h_dec
  Eigen::VectorXd bias2;

  int output_dim() const noexcept { return static_cast<int>(bias2.size()); }
  int input_dim() const noexcept { return static_cast<int>(layer1.cols()); }

  Eigen::VectorXd decode(const Eigen::VectorXd& e) const {
    if (e.size() != layer1.cols()) throw Error(ErrorCode::DimensionMismatch, "decoder input size");
    const Eigen::VectorXd hidden = (layer1 * e + bias1).array().tanh().matrix();
    return layer2 * hidden + bias2;
  }

  std::array<TensorRef, 4> tensors() {
    return {TensorRef{"layer1", layer1.data(), layer1.rows(), layer1.cols()},
            TensorRef{"bias1", bias1.data(), bias1.size(), 1},
            TensorRef{"layer2", layer2.data(), layer2.rows(), layer2.cols()},
            TensorRef{"bias2", bias2.data(), bias2.size(), 1}};
  }
  std::array<TensorRef, 4> tensors() const { return const_cast<DecoderParams*>(this)->tensors(); }

  /// Weights uniform(+-1/sqrt(fan_in)), biases zero.
  static DecoderParams init(int embed_dim, int hidden, int window, std::uint64_t seed) {
    DecoderParams p;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> d1(-1.0 / std::sqrt(embed_dim), 1.0 / std::sqrt(embed_dim));
    std::uniform_real_distribution<double> d2(-1.0 / std::sqrt(hidden), 1.0 / std::sqrt(hidden));
    p.layer1 = Eigen::MatrixXd::NullaryExpr(hidden, embed_dim, [&] { return d1(rng); });
    p.bias1 = Eigen::VectorXd::Zero(hidden);
    p.layer2 = Eigen::MatrixXd::NullaryExpr(window, hidden, [&] { return d2(rng); });
    p.bias2 = Eigen::VectorXd::Zero(window);
    return p;
  }
};

struct DecoderHyper {
  double lr = 0.05;
  int epochs = 2000;
  std::uint64_t seed = 0;
  int hidden = 32;
};

struct DecoderTraining {
  DecoderParams params;
  double final_mse = 0.0;
  std::vector<double> mse_curve;
};

namespace detail {

inline Eigen::VectorXd to_eigen(std::span<const double> v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline double decoder_mse(const DecoderParams& p, const std::vector<Eigen::VectorXd>& inputs,
                          const std::vector<Eigen::VectorXd>& targets) {
  double total = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) total += (p.decode(inputs[i]) - targets[i]).squaredNorm();
  return total / static_cast<double>(inputs.size() * static_cast<std::size_t>(targets.front().size()));
}

}  // namespace detail

/// Full-batch gradient descent on mean squared error over all window samples.
inline DecoderTraining train_decoder(std::span<const Embedding> embeddings, std::span<const Window> windows,
                                     const DecoderHyper& hyper) {
  if (embeddings.size() != windows.size() || embeddings.empty()) {
    throw Error(ErrorCode::Misaligned, std::to_string(embeddings.size()) + " embeddings vs " +
                                           std::to_string(windows.size()) + " windows");
  }
  const auto d = static_cast<int>(embeddings.front().vector.size());
  const auto w = static_cast<int>(windows.front().values.size());
  std::vector<Eigen::VectorXd> inputs, targets;
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    if (static_cast<int>(embeddings[i].vector.size()) != d ||
        static_cast<int>(windows[i].values.size()) != w) {
      throw Error(ErrorCode::DimensionMismatch, "inconsistent embedding or window size");
    }
    inputs.push_back(detail::to_eigen(embeddings[i].vector));
    targets.push_back(detail::to_eigen(windows[i].values));
  }

  DecoderTraining out{DecoderParams::init(d, hyper.hidden, w, hyper.seed), 0.0, {}};
  DecoderParams& p = out.params;
  const double norm = 2.0 / static_cast<double>(inputs.size() * static_cast<std::size_t>(w));
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    Eigen::MatrixXd g1 = Eigen::MatrixXd::Zero(p.layer1.rows(), p.layer1.cols());
    Eigen::VectorXd gb1 = Eigen::VectorXd::Zero(p.bias1.size());
    Eigen::MatrixXd g2 = Eigen::MatrixXd::Zero(p.layer2.rows(), p.layer2.cols());
    Eigen::VectorXd gb2 = Eigen::VectorXd::Zero(p.bias2.size());
    double total = 0.0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      const Eigen::VectorXd hidden = (p.layer1 * inputs[i] + p.bias1).array().tanh().matrix();
      const Eigen::VectorXd residual = p.layer2 * hidden + p.bias2 - targets[i];
      total += residual.squaredNorm();
      const Eigen::VectorXd d_out = norm * residual;
      g2.noalias() += d_out * hidden.transpose();
      gb2 += d_out;
      const Eigen::VectorXd d_hidden =
          (p.layer2.transpose() * d_out).cwiseProduct((1.0 - hidden.array().square()).matrix());
      g1.noalias() += d_hidden * inputs[i].transpose();
      gb1 += d_hidden;
    }
    const double mse = total / static_cast<double>(inputs.size() * static_cast<std::size_t>(w));
    if (!std::isfinite(mse)) throw Error(ErrorCode::DivergedLoss, "decoder epoch " + std::to_string(epoch));
    out.mse_curve.push_back(mse);
    p.layer1 -= hyper.lr * g1;
    p.bias1 -= hyper.lr * gb1;
    p.layer2 -= hyper.lr * g2;
    p.bias2 -= hyper.lr * gb2;
  }
  out.final_mse = detail::decoder_mse(p, inputs, targets);
  if (!std::isfinite(out.final_mse)) throw Error(ErrorCode::DivergedLoss, "decoder final MSE");
  return out;
}

// ---------------------------------------------------------------------------
// Store and replay

struct StoreMetadata {
  int window = 20;
  int stride = 10;
  double sample_rate_hz = 20.0;
  int embed_dim = 8;
};

class EmbeddingStore {
 public:
  EmbeddingStore() = default;
  explicit EmbeddingStore(StoreMetadata meta) : meta_(meta) {}

  const StoreMetadata& metadata() const noexcept { return meta_; }
  const std::map<std::string, std::vector<Embedding>>& entries() const noexcept { return entries_; }

  void add(Embedding e) {
    if (static_cast<int>(e.vector.size()) != meta_.embed_dim) {
      throw Error(ErrorCode::DimensionMismatch, "embedding dimension " + std::to_string(e.vector.size()));
    }
    auto& list = entries_[e.context_key];
    if (!list.empty() && e.order_index <= list.back().order_index) {
      throw Error(ErrorCode::InvalidArgument, "order_index must increase within a context");
    }
    list.push_back(std::move(e));
  }

  const std::vector<Embedding>& get(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) throw Error(ErrorCode::UnknownContext, key);
    return it->second;
  }

  std::vector<Embedding> all() const {
    std::vector<Embedding> out;
    for (const auto& [key, list] : entries_) out.insert(out.end(), list.begin(), list.end());
    return out;
  }

 private:
  StoreMetadata meta_;
  std::map<std::string, std::vector<Embedding>> entries_;
};

/// Decodes the context's windows in order and overlap-averages them into a
/// profile of W + stride * (k - 1) samples, clamped at zero.
inline VelocityProfile replay(const EmbeddingStore& store, const DecoderParams& decoder,
                              const std::string& context_key) {
  const auto& list = store.get(context_key);
  const StoreMetadata& meta = store.metadata();
  if (decoder.output_dim() != meta.window) {
    throw Error(ErrorCode::DimensionMismatch, "decoder output != window length");
  }
  const std::size_t length =
      static_cast<std::size_t>(meta.window + meta.stride * (static_cast<int>(list.size()) - 1));
  std::vector<double> sum(length, 0.0);
  std::vector<int> cover(length, 0);
  for (std::size_t k = 0; k < list.size(); ++k) {
    const Eigen::VectorXd values = decoder.decode(detail::to_eigen(list[k].vector));
    const std::size_t offset = k * static_cast<std::size_t>(meta.stride);
    for (int i = 0; i < meta.window; ++i) {
      sum[offset + static_cast<std::size_t>(i)] += values[i];
      ++cover[offset + static_cast<std::size_t>(i)];
    }
  }
  VelocityProfile out{meta.sample_rate_hz, std::vector<double>(length)};
  for (std::size_t i = 0; i < length; ++i) {
    out.samples[i] = std::max(0.0, sum[i] / cover[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json decoder_to_json(const DecoderParams& p) {
  nlohmann::json j;
  j["shapes"] = {{"embedding", p.input_dim()}, {"hidden", p.layer1.rows()}, {"window", p.output_dim()}};
  for (const TensorRef& t : p.tensors()) j[t.name] = tensor_to_json(t);
  return j;
}

inline DecoderParams decoder_from_json(const nlohmann::json& j) {
  try {
    const auto& s = j.at("shapes");
    const int d = s.at("embedding").get<int>();
    const int h = s.at("hidden").get<int>();
    const int w = s.at("window").get<int>();
    DecoderParams p{Eigen::MatrixXd::Zero(h, d), Eigen::VectorXd::Zero(h), Eigen::MatrixXd::Zero(w, h),
                    Eigen::VectorXd::Zero(w)};
    for (const TensorRef& t : p.tensors()) tensor_from_json(j.at(t.name), t);
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("decoder: ") + e.what());
  }
}

inline nlohmann::json store_to_json(const EmbeddingStore& store) {
  const auto& m = store.metadata();
  nlohmann::json contexts = nlohmann::json::object();
  for (const auto& [key, list] : store.entries()) {
    nlohmann::json items = nlohmann::json::array();
    for (const auto& e : list) items.push_back({{"order_index", e.order_index}, {"vector", e.vector}});
    contexts[key] = items;
  }
  return {{"metadata",
           {{"W", m.window}, {"stride", m.stride}, {"sample_rate_hz", m.sample_rate_hz}, {"d", m.embed_dim}}},
          {"contexts", contexts}};
}

inline EmbeddingStore store_from_json(const nlohmann::json& j) {
  try {
    const auto& m = j.at("metadata");
    EmbeddingStore store({m.at("W").get<int>(), m.at("stride").get<int>(),
                          m.at("sample_rate_hz").get<double>(), m.at("d").get<int>()});
    for (const auto& [key, items] : j.at("contexts").items()) {
      for (const auto& item : items) {
        store.add({item.at("vector").get<std::vector<double>>(), key, item.at("order_index").get<int>()});
      }
    }
    return store;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("store: ") + e.what());
  }
}

inline nlohmann::json profile_to_json(const VelocityProfile& p) {
  return {{"sample_rate_hz", p.sample_rate_hz}, {"samples", p.samples}};
}

inline VelocityProfile profile_from_json(const nlohmann::json& j) {
  try {
    VelocityProfile p{j.at("sample_rate_hz").get<double>(), j.at("samples").get<std::vector<double>>()};
    if (!(p.sample_rate_hz > 0.0)) throw Error(ErrorCode::InvalidArgument, "sample_rate_hz must be > 0");
    for (double v : p.samples) {
      if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteInput, "profile sample is not finite");
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("profile: ") + e.what());
  }
}

}  // namespace interocept
