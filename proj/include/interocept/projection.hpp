#pragma once

// 2D view of embeddings: principal axes of the sample covariance by power
// iteration with deflation.

#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "interocept/error.hpp"
#include "interocept/velocity_replay.hpp"

namespace interocept {

struct PowerIterationConfig {
  double tolerance = 1e-10;
  int max_iterations = 10000;
};

namespace detail {

// Orthonormal axis for `cov` (already deflated), kept orthogonal to `previous`.
inline Eigen::VectorXd dominant_axis(const Eigen::MatrixXd& cov,
                                     const std::vector<Eigen::VectorXd>& previous,
                                     const PowerIterationConfig& cfg) {
  const Eigen::Index d = cov.rows();
  auto orthogonalize = [&previous](Eigen::VectorXd v) {
    for (const auto& p : previous) v -= p.dot(v) * p;
    return v;
  };
  Eigen::VectorXd v(d);
  for (Eigen::Index i = 0; i < d; ++i) v[i] = 1.0 + 0.1 * static_cast<double>(i);
  v = orthogonalize(v);
  if (v.norm() == 0.0) v = orthogonalize(Eigen::VectorXd::Unit(d, 0));
  v.normalize();

  for (int it = 0; it < cfg.max_iterations; ++it) {
    Eigen::VectorXd next = orthogonalize(cov * v);
    const double norm = next.norm();
    if (!(norm > 1e-300)) break;  // remaining variance is zero; any orthogonal axis will do
    next /= norm;
    if (next.dot(v) < 0.0) next = -next;
    const double change = (next - v).norm();
    v = std::move(next);
    if (change < cfg.tolerance) break;
  }
  // Fall back to a basis vector when orthogonalization wiped v out.
  if (!(v.norm() > 0.5)) {
    for (Eigen::Index i = 0; i < d; ++i) {
      Eigen::VectorXd e = orthogonalize(Eigen::VectorXd::Unit(d, i));
      if (e.norm() > 1e-6) {
        v = e.normalized();
        break;
      }
    }
  }
  for (Eigen::Index i = 0; i < d; ++i) {
    if (std::abs(v[i]) > 1e-12) {
      if (v[i] < 0.0) v = -v;
      break;
    }
  }
  return v;
}

}  // namespace detail

/// Coordinates of each embedding on the top-2 principal axes. Each axis is
/// sign-normalized so that its first nonzero loading is positive.
inline std::vector<std::pair<double, double>> project_2d(std::span<const Embedding> embeddings,
                                                         const PowerIterationConfig& cfg = {}) {
  if (embeddings.size() < 2) throw Error(ErrorCode::DegenerateData, "need at least 2 embeddings");
  const auto d = static_cast<Eigen::Index>(embeddings.front().vector.size());
  if (d < 1) throw Error(ErrorCode::DegenerateData, "zero-dimensional embeddings");
  const auto n = static_cast<Eigen::Index>(embeddings.size());
  Eigen::MatrixXd x(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& v = embeddings[static_cast<std::size_t>(i)].vector;
    if (static_cast<Eigen::Index>(v.size()) != d) throw Error(ErrorCode::DimensionMismatch, "embedding sizes differ");
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = v[static_cast<std::size_t>(j)];
  }
  const Eigen::RowVectorXd mean = x.colwise().mean();
  x.rowwise() -= mean;
  Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(n - 1);
  if (!(cov.trace() > 0.0)) throw Error(ErrorCode::DegenerateData, "embeddings have zero variance");

  std::vector<Eigen::VectorXd> axes;
  const int components = d >= 2 ? 2 : 1;
  for (int k = 0; k < components; ++k) {
    Eigen::VectorXd axis = detail::dominant_axis(cov, axes, cfg);
    const double lambda = axis.dot(cov * axis);
    cov -= lambda * axis * axis.transpose();
    axes.push_back(std::move(axis));
  }

  std::vector<std::pair<double, double>> out;
  out.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd row = x.row(i).transpose();
    out.emplace_back(axes[0].dot(row), axes.size() > 1 ? axes[1].dot(row) : 0.0);
  }
  return out;
}

/// Scatter export: one point per embedding, tagged with its context.
inline nlohmann::json embedding_scatter_json(std::span<const Embedding> embeddings) {
  const auto xy = project_2d(embeddings);
  nlohmann::json out = nlohmann::json::array();
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    out.push_back({{"context_key", embeddings[i].context_key},
                   {"order_index", embeddings[i].order_index},
                   {"x", xy[i].first},
                   {"y", xy[i].second}});
  }
  return out;
}

}  // namespace interocept
