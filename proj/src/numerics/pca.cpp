#include "eod/numerics/pca.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "eod/error.hpp"
#include "eod/numerics/distance.hpp"

namespace eod {

double PcaModel::explained_ratio(std::size_t i) const {
  return total_variance > 0 ? explained_variance.at(i) / total_variance : 0.0;
}

namespace {

// Eigenpairs of the covariance, descending. When there are fewer samples
// than dimensions the (n x n) Gram matrix is decomposed instead.
void covariance_eigen(const Matrix& centered, Vector& values, Eigen::MatrixXd& vectors) {
  const Eigen::Index n = centered.rows();
  const Eigen::Index d = centered.cols();
  const double denom = static_cast<double>(n - 1);
  if (d <= n - 1) {
    const Eigen::MatrixXd cov = (centered.transpose() * centered) / denom;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    values = es.eigenvalues().reverse();
    vectors = es.eigenvectors().rowwise().reverse();
    return;
  }
  const Eigen::MatrixXd gram = (centered * centered.transpose()) / denom;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  const Vector gv = es.eigenvalues().reverse();
  const Eigen::MatrixXd gu = es.eigenvectors().rowwise().reverse();
  values = gv;
  vectors = Eigen::MatrixXd::Zero(d, n);
  for (Eigen::Index c = 0; c < n; ++c) {
    if (gv(c) <= 0) continue;
    Eigen::VectorXd v = centered.transpose() * gu.col(c);
    const double norm = v.norm();
    if (norm > 0) vectors.col(c) = v / norm;
  }
}

}  // namespace

PcaModel pca_fit(const Matrix& points, PcaTarget target) {
  require(points.rows() >= 2, ErrorCode::invalid_argument, "pca_fit: need at least 2 points");
  require(points.cols() >= 1, ErrorCode::invalid_argument, "pca_fit: zero-dimensional points");
  require_finite(points, "pca_fit");
  const Eigen::Index d = points.cols();

  PcaModel model;
  model.mean = points.colwise().mean().transpose();
  const Matrix centered = points.rowwise() - model.mean.transpose();

  Vector values;
  Eigen::MatrixXd vectors;
  covariance_eigen(centered, values, vectors);
  for (Eigen::Index i = 0; i < values.size(); ++i) values(i) = std::max(values(i), 0.0);
  model.total_variance = (centered.array().square().sum()) / static_cast<double>(points.rows() - 1);

  const Eigen::Index available = values.size();
  Eigen::Index r = 0;
  if (const auto* fixed = std::get_if<std::size_t>(&target.value)) {
    require(*fixed <= static_cast<std::size_t>(d), ErrorCode::invalid_argument,
            "pca_fit: fixed rank " + std::to_string(*fixed) + " exceeds dimension " +
                std::to_string(d));
    r = std::min<Eigen::Index>(static_cast<Eigen::Index>(*fixed), available);
  } else {
    const double ratio = std::get<double>(target.value);
    require(ratio > 0 && ratio <= 1, ErrorCode::invalid_argument,
            "pca_fit: variance target must lie in (0, 1]");
    if (model.total_variance > 0) {
      double cumulative = 0;
      const double goal = ratio * model.total_variance * (1.0 - 1e-12);
      while (r < available && values(r) > 0) {
        cumulative += values(r++);
        if (cumulative >= goal) break;
      }
    }
  }
  if (model.total_variance <= 0) {
    model.degenerate = true;
    r = 0;
  }

  model.components.resize(r, d);
  model.explained_variance.resize(static_cast<std::size_t>(r));
  for (Eigen::Index c = 0; c < r; ++c) {
    Eigen::VectorXd v = vectors.col(c);
    Eigen::Index arg = 0;
    for (Eigen::Index k = 1; k < d; ++k)
      if (std::abs(v(k)) > std::abs(v(arg))) arg = k;
    if (v(arg) < 0) v = -v;
    model.components.row(c) = v.transpose();
    model.explained_variance[static_cast<std::size_t>(c)] = values(c);
  }
  return model;
}

Matrix pca_transform(const PcaModel& model, const Matrix& points) {
  require(static_cast<std::size_t>(points.cols()) == model.dim(), ErrorCode::dimension_mismatch,
          "pca_transform: point dimension " + std::to_string(points.cols()) +
              " differs from model dimension " + std::to_string(model.dim()));
  const Matrix centered = points.rowwise() - model.mean.transpose();
  return centered * model.components.transpose();
}

Matrix pca_reconstruct(const PcaModel& model, const Matrix& projected) {
  require(static_cast<std::size_t>(projected.cols()) == model.rank(),
          ErrorCode::dimension_mismatch, "pca_reconstruct: rank mismatch");
  Matrix out = projected * model.components;
  out.rowwise() += model.mean.transpose();
  return out;
}

}  // namespace eod
