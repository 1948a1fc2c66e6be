#pragma once

// Scalar-input GRU window encoder with a linear projection head, plus exact
// reverse-mode gradients through the recurrence.
//
//   z_t = sigmoid(Wz x_t + Uz h_{t-1} + bz)
//   r_t = sigmoid(Wr x_t + Ur h_{t-1} + br)
//   c_t = tanh(Wh x_t + Uh (r_t * h_{t-1}) + bh)
//   h_t = (1 - z_t) * h_{t-1} + z_t * c_t,    h_0 = 0
//   e   = P h_W + p
//
// Tensor names below follow roles: update_*, reset_*, candidate_*,
// projection*.

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "interocept/error.hpp"

namespace interocept {

struct TensorRef {
  const char* name;
  double* data;
  Eigen::Index rows;
  Eigen::Index cols;

  Eigen::Index size() const noexcept { return rows * cols; }
};

struct GruParams {
  Eigen::VectorXd update_input, reset_input, candidate_input;              // H
  Eigen::MatrixXd update_recurrent, reset_recurrent, candidate_recurrent;  // H x H
  Eigen::VectorXd update_bias, reset_bias, candidate_bias;                 // H
  Eigen::MatrixXd projection;                                              // d x H
  Eigen::VectorXd projection_bias;                                         // d

  int hidden() const noexcept { return static_cast<int>(update_input.size()); }
  int embed_dim() const noexcept { return static_cast<int>(projection_bias.size()); }

  static GruParams zeros(int hidden, int embed_dim) {
    if (hidden < 1 || embed_dim < 1) throw Error(ErrorCode::InvalidArgument, "GRU sizes must be >= 1");
    GruParams p;
    for (auto* v : {&p.update_input, &p.reset_input, &p.candidate_input, &p.update_bias,
                    &p.reset_bias, &p.candidate_bias}) {
      *v = Eigen::VectorXd::Zero(hidden);
    }
    for (auto* m : {&p.update_recurrent, &p.reset_recurrent, &p.candidate_recurrent}) {
      *m = Eigen::MatrixXd::Zero(hidden, hidden);
    }
    p.projection = Eigen::MatrixXd::Zero(embed_dim, hidden);
    p.projection_bias = Eigen::VectorXd::Zero(embed_dim);
    return p;
  }

  /// Every entry drawn from uniform(-scale, scale), in tensor order.
  static GruParams random_uniform(int hidden, int embed_dim, std::uint64_t seed, double scale = 0.1) {
    GruParams p = zeros(hidden, embed_dim);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-scale, scale);
    for (const TensorRef& t : p.tensors()) {
      for (Eigen::Index i = 0; i < t.size(); ++i) t.data[i] = dist(rng);
    }
    return p;
  }

  std::array<TensorRef, 11> tensors() {
    auto vec = [](const char* name, Eigen::VectorXd& v) {
      return TensorRef{name, v.data(), v.size(), 1};
    };
    auto mat = [](const char* name, Eigen::MatrixXd& m) {
      return TensorRef{name, m.data(), m.rows(), m.cols()};
    };
    return {vec("update_input", update_input),
            mat("update_recurrent", update_recurrent),
            vec("update_bias", update_bias),
            vec("reset_input", reset_input),
            mat("reset_recurrent", reset_recurrent),
            vec("reset_bias", reset_bias),
            vec("candidate_input", candidate_input),
            mat("candidate_recurrent", candidate_recurrent),
            vec("candidate_bias", candidate_bias),
            mat("projection", projection),
            vec("projection_bias", projection_bias)};
  }

  std::array<TensorRef, 11> tensors() const { return const_cast<GruParams*>(this)->tensors(); }

  bool all_finite() const {
    for (const TensorRef& t : tensors()) {
      for (Eigen::Index i = 0; i < t.size(); ++i) {
        if (!std::isfinite(t.data[i])) return false;
      }
    }
    return true;
  }

  /// this += scale * other, tensor by tensor.
  void axpy(double scale, const GruParams& other) {
    auto mine = tensors();
    const auto theirs = other.tensors();
    for (std::size_t k = 0; k < mine.size(); ++k) {
      for (Eigen::Index i = 0; i < mine[k].size(); ++i) mine[k].data[i] += scale * theirs[k].data[i];
    }
  }
};

namespace detail {

inline Eigen::VectorXd sigmoid(const Eigen::VectorXd& a) {
  return a.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

}  // namespace detail

/// Forward activations kept for backpropagation.
struct GruTrace {
  std::vector<double> inputs;
  std::vector<Eigen::VectorXd> hidden;  // h_0 .. h_W
  std::vector<Eigen::VectorXd> update, reset, candidate;
  Eigen::VectorXd embedding;
};

inline GruTrace gru_forward(const GruParams& p, std::span<const double> window) {
  for (double x : window) {
    if (!std::isfinite(x)) throw Error(ErrorCode::NonFiniteInput, "window contains non-finite value");
  }
  const int H = p.hidden();
  GruTrace tr;
  tr.inputs.assign(window.begin(), window.end());
  tr.hidden.reserve(window.size() + 1);
  tr.hidden.push_back(Eigen::VectorXd::Zero(H));
  for (double x : window) {
    const Eigen::VectorXd& h = tr.hidden.back();
    Eigen::VectorXd z = detail::sigmoid(p.update_input * x + p.update_recurrent * h + p.update_bias);
    Eigen::VectorXd r = detail::sigmoid(p.reset_input * x + p.reset_recurrent * h + p.reset_bias);
    Eigen::VectorXd c = (p.candidate_input * x +
                         p.candidate_recurrent * r.cwiseProduct(h) + p.candidate_bias)
                            .array()
                            .tanh()
                            .matrix();
    Eigen::VectorXd next = (Eigen::VectorXd::Ones(H) - z).cwiseProduct(h) + z.cwiseProduct(c);
    tr.update.push_back(std::move(z));
    tr.reset.push_back(std::move(r));
    tr.candidate.push_back(std::move(c));
    tr.hidden.push_back(std::move(next));
  }
  tr.embedding = p.projection * tr.hidden.back() + p.projection_bias;
  return tr;
}

inline Eigen::VectorXd gru_encode_vector(const GruParams& p, std::span<const double> window) {
  return gru_forward(p, window).embedding;
}

/// Accumulates dLoss/dparams into `grads` given dLoss/dembedding.
inline void gru_backward(const GruParams& p, const GruTrace& tr, const Eigen::VectorXd& d_embedding,
                         GruParams& grads) {
  const std::size_t steps = tr.inputs.size();
  grads.projection.noalias() += d_embedding * tr.hidden.back().transpose();
  grads.projection_bias += d_embedding;
  Eigen::VectorXd dh = p.projection.transpose() * d_embedding;

  for (std::size_t s = steps; s-- > 0;) {
    const double x = tr.inputs[s];
    const Eigen::VectorXd& h_prev = tr.hidden[s];
    const Eigen::VectorXd& z = tr.update[s];
    const Eigen::VectorXd& r = tr.reset[s];
    const Eigen::VectorXd& c = tr.candidate[s];

    const Eigen::VectorXd dz = dh.cwiseProduct(c - h_prev);
    const Eigen::VectorXd dc = dh.cwiseProduct(z);
    Eigen::VectorXd dh_prev = dh.cwiseProduct(Eigen::VectorXd::Ones(z.size()) - z);

    const Eigen::VectorXd dc_pre = dc.cwiseProduct((1.0 - c.array().square()).matrix());
    const Eigen::VectorXd gated = r.cwiseProduct(h_prev);
    grads.candidate_input += dc_pre * x;
    grads.candidate_recurrent.noalias() += dc_pre * gated.transpose();
    grads.candidate_bias += dc_pre;
    const Eigen::VectorXd d_gated = p.candidate_recurrent.transpose() * dc_pre;
    const Eigen::VectorXd dr = d_gated.cwiseProduct(h_prev);
    dh_prev += d_gated.cwiseProduct(r);

    const Eigen::VectorXd dz_pre = dz.cwiseProduct(z.cwiseProduct((1.0 - z.array()).matrix()));
    grads.update_input += dz_pre * x;
    grads.update_recurrent.noalias() += dz_pre * h_prev.transpose();
    grads.update_bias += dz_pre;
    dh_prev.noalias() += p.update_recurrent.transpose() * dz_pre;

    const Eigen::VectorXd dr_pre = dr.cwiseProduct(r.cwiseProduct((1.0 - r.array()).matrix()));
    grads.reset_input += dr_pre * x;
    grads.reset_recurrent.noalias() += dr_pre * h_prev.transpose();
    grads.reset_bias += dr_pre;
    dh_prev.noalias() += p.reset_recurrent.transpose() * dr_pre;

    dh = std::move(dh_prev);
  }
}

// ---------------------------------------------------------------------------
// JSON: tensors stored row-major as flat arrays.

inline nlohmann::json tensor_to_json(const TensorRef& t) {
  nlohmann::json values = nlohmann::json::array();
  for (Eigen::Index r = 0; r < t.rows; ++r) {
    for (Eigen::Index c = 0; c < t.cols; ++c) values.push_back(t.data[c * t.rows + r]);
  }
  return values;
}

inline void tensor_from_json(const nlohmann::json& j, const TensorRef& t) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != t.size()) {
    throw Error(ErrorCode::ParseError, std::string("tensor '") + t.name + "' has wrong size");
  }
  for (Eigen::Index r = 0; r < t.rows; ++r) {
    for (Eigen::Index c = 0; c < t.cols; ++c) {
      t.data[c * t.rows + r] = j[static_cast<std::size_t>(r * t.cols + c)].get<double>();
    }
  }
}

inline nlohmann::json gru_to_json(const GruParams& p) {
  nlohmann::json j;
  j["shapes"] = {{"input", 1}, {"hidden", p.hidden()}, {"embedding", p.embed_dim()}};
  for (const TensorRef& t : p.tensors()) j[t.name] = tensor_to_json(t);
  return j;
}

inline GruParams gru_from_json(const nlohmann::json& j) {
  try {
    const auto& shapes = j.at("shapes");
    GruParams p = GruParams::zeros(shapes.at("hidden").get<int>(), shapes.at("embedding").get<int>());
    for (const TensorRef& t : p.tensors()) tensor_from_json(j.at(t.name), t);
    if (!p.all_finite()) throw Error(ErrorCode::NonFiniteInput, "encoder weights not finite");
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("encoder: ") + e.what());
  }
}

}  // namespace interocept
