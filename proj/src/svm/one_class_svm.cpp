#include "eod/svm/one_class_svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "eod/error.hpp"
#include "eod/numerics/distance.hpp"
#include "smo.hpp"

namespace eod::svm {

namespace {

double kernel_score(const OneClassSvmModel& m, std::span<const double> x) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < m.support_vectors.rows(); ++i)
    s += m.alphas[static_cast<std::size_t>(i)] * rbf(m.kernel, row_span(m.support_vectors, i), x);
  return s;
}

}  // namespace

double OneClassSvmModel::decision(std::span<const double> x) const {
  return kernel_score(*this, x) - rho;
}

OneClassTrainResult train_one_class(const Matrix& x, const OneClassParams& params) {
  const auto n = static_cast<std::size_t>(x.rows());
  require(n >= 2, ErrorCode::invalid_argument, "train_one_class: need at least 2 points");
  require(params.nu > 0 && params.nu <= 1, ErrorCode::invalid_argument,
          "train_one_class: nu must lie in (0, 1]");
  params.kernel.validate();
  require_finite(x, "train_one_class");

  const double cap = 1.0 / (params.nu * static_cast<double>(n));
  detail::SmoInput in;
  in.y.assign(n, 1.0);
  in.p.assign(n, 0.0);
  in.upper.assign(n, cap);
  in.alpha.assign(n, 0.0);
  // Feasible start: fill variables at the cap until the sum reaches 1.
  double remaining = 1.0;
  for (std::size_t i = 0; i < n && remaining > 0; ++i) {
    in.alpha[i] = std::min(cap, remaining);
    remaining -= in.alpha[i];
  }
  in.eps = params.tol;
  in.max_iterations = params.max_iterations;

  detail::KernelRows rows(x, params.kernel);
  detail::SmoOutput out = detail::solve_smo(rows, std::move(in));

  OneClassTrainResult r;
  r.alpha = out.alpha;
  r.iterations = out.iterations;
  r.status = out.converged ? SolverStatus::converged : SolverStatus::iteration_cap;

  OneClassSvmModel& m = r.model;
  m.kernel = params.kernel;
  m.nu = params.nu;
  std::size_t n_sv = 0;
  for (double a : r.alpha) n_sv += a > 0;
  m.support_vectors.resize(static_cast<Eigen::Index>(n_sv), x.cols());
  m.alphas.reserve(n_sv);
  Eigen::Index row = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (r.alpha[i] <= 0) continue;
    m.support_vectors.row(row++) = x.row(static_cast<Eigen::Index>(i));
    m.alphas.push_back(r.alpha[i]);
  }

  // Scores are recomputed through the prediction path so that the points
  // used to place rho evaluate to exactly rho or above.
  double below_cap = std::numeric_limits<double>::infinity();
  double at_cap = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double s = kernel_score(m, row_span(x, static_cast<Eigen::Index>(i)));
    if (r.alpha[i] < cap) below_cap = std::min(below_cap, s);
    else at_cap = std::max(at_cap, s);
  }
  m.rho = std::isfinite(below_cap) ? below_cap : at_cap;
  return r;
}

OneClassPrediction predict_one_class(const OneClassSvmModel& model, const Matrix& x) {
  require(static_cast<std::size_t>(x.cols()) == model.dim(), ErrorCode::dimension_mismatch,
          "predict_one_class: dimension " + std::to_string(x.cols()) + " differs from model " +
              std::to_string(model.dim()));
  OneClassPrediction p;
  p.inside.reserve(static_cast<std::size_t>(x.rows()));
  p.decision.reserve(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double d = model.decision(row_span(x, i));
    p.decision.push_back(d);
    p.inside.push_back(d >= 0);
  }
  return p;
}

}  // namespace eod::svm
