#include "eod/svm/grid_search.hpp"

#include <map>
#include <string>

#include "eod/error.hpp"
#include "eod/rng.hpp"

namespace eod::svm {

void GridSearchConfig::validate() const {
  require(!sigma_grid.empty() && !c_grid.empty(), ErrorCode::invalid_argument,
          "grid search: grids must be non-empty");
  require(outer_folds >= 2 && inner_folds >= 2, ErrorCode::invalid_argument,
          "grid search: folds must be at least 2");
  for (double s : sigma_grid)
    require(s > 0, ErrorCode::invalid_argument, "grid search: sigma values must be positive");
  for (double c : c_grid)
    require(c > 0, ErrorCode::invalid_argument, "grid search: C values must be positive");
}

double balanced_accuracy(std::span<const int> truth, std::span<const int> predicted) {
  require(truth.size() == predicted.size(), ErrorCode::dimension_mismatch,
          "balanced_accuracy: length mismatch");
  std::size_t tp = 0, pos = 0, tn = 0, neg = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] > 0) {
      ++pos;
      tp += predicted[i] > 0;
    } else {
      ++neg;
      tn += predicted[i] <= 0;
    }
  }
  if (pos == 0 && neg == 0) return 0.0;
  if (pos == 0) return static_cast<double>(tn) / static_cast<double>(neg);
  if (neg == 0) return static_cast<double>(tp) / static_cast<double>(pos);
  return 0.5 * (static_cast<double>(tp) / static_cast<double>(pos) +
                static_cast<double>(tn) / static_cast<double>(neg));
}

std::vector<std::size_t> stratified_folds(std::span<const int> y, std::size_t k,
                                          std::uint64_t seed) {
  require(k >= 2, ErrorCode::invalid_argument, "stratified_folds: k must be at least 2");
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < y.size(); ++i) (y[i] > 0 ? pos : neg).push_back(i);
  require(pos.size() >= k && neg.size() >= k, ErrorCode::fold_infeasible,
          "stratified_folds: each class needs at least " + std::to_string(k) +
              " samples (have " + std::to_string(pos.size()) + " positive, " +
              std::to_string(neg.size()) + " negative)");
  Rng rng(seed);
  std::vector<std::size_t> fold(y.size());
  std::size_t next = 0;
  for (auto* group : {&pos, &neg}) {
    rng.shuffle(std::span(*group));
    // Continue dealing where the previous class stopped so fold sizes stay balanced.
    for (std::size_t idx : *group) fold[idx] = next++ % k;
  }
  return fold;
}

namespace {

struct Subset {
  Matrix x;
  std::vector<int> y;
};

Subset select(const Matrix& x, std::span<const int> y, const std::vector<std::size_t>& rows) {
  Subset s;
  s.x.resize(static_cast<Eigen::Index>(rows.size()), x.cols());
  s.y.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    s.x.row(static_cast<Eigen::Index>(r)) = x.row(static_cast<Eigen::Index>(rows[r]));
    s.y.push_back(y[rows[r]]);
  }
  return s;
}

double fit_and_score(const Subset& train, const Subset& test, double sigma, double c, double tol) {
  BinarySvmParams p;
  p.c = c;
  p.kernel.sigma = sigma;
  p.tol = tol;
  const auto model = train_binary_svm(train.x, train.y, p).model;
  return balanced_accuracy(test.y, predict_binary(model, test.x).labels);
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_rows(
    const std::vector<std::size_t>& fold, std::size_t f) {
  std::vector<std::size_t> train, test;
  for (std::size_t i = 0; i < fold.size(); ++i) (fold[i] == f ? test : train).push_back(i);
  return {train, test};
}

}  // namespace

GridSearchResult grid_search_cv(const Matrix& x, std::span<const int> y,
                                const GridSearchConfig& cfg) {
  cfg.validate();
  require(static_cast<std::size_t>(x.rows()) == y.size(), ErrorCode::dimension_mismatch,
          "grid_search_cv: label count mismatch");

  const std::size_t n_cells = cfg.sigma_grid.size() * cfg.c_grid.size();
  auto cell_sigma = [&](std::size_t cell) { return cfg.sigma_grid[cell / cfg.c_grid.size()]; };
  auto cell_c = [&](std::size_t cell) { return cfg.c_grid[cell % cfg.c_grid.size()]; };

  const auto outer = stratified_folds(y, cfg.outer_folds, derive_seed(cfg.seed, "outer"));
  GridSearchResult result;
  std::vector<double> cell_total(n_cells, 0.0);
  std::vector<std::size_t> votes(n_cells, 0);

  for (std::size_t of = 0; of < cfg.outer_folds; ++of) {
    const auto [train_rows, test_rows] = split_rows(outer, of);
    const Subset train = select(x, y, train_rows);
    const Subset test = select(x, y, test_rows);
    const auto inner = stratified_folds(train.y, cfg.inner_folds, derive_seed(cfg.seed, "inner", of));

    std::vector<Subset> inner_train, inner_test;
    for (std::size_t inf = 0; inf < cfg.inner_folds; ++inf) {
      const auto [itr, ite] = split_rows(inner, inf);
      inner_train.push_back(select(train.x, train.y, itr));
      inner_test.push_back(select(train.x, train.y, ite));
    }

    std::size_t best_cell = 0;
    double best_score = -1.0;
    for (std::size_t cell = 0; cell < n_cells; ++cell) {
      double total = 0.0;
      for (std::size_t inf = 0; inf < cfg.inner_folds; ++inf)
        total += fit_and_score(inner_train[inf], inner_test[inf], cell_sigma(cell), cell_c(cell), cfg.tol);
      const double mean = total / static_cast<double>(cfg.inner_folds);
      cell_total[cell] += mean;
      if (mean > best_score) {
        best_score = mean;
        best_cell = cell;
      }
    }
    ++votes[best_cell];
    FoldScore fs;
    fs.fold = of;
    fs.sigma = cell_sigma(best_cell);
    fs.c = cell_c(best_cell);
    fs.inner_score = best_score;
    fs.outer_score = fit_and_score(train, test, fs.sigma, fs.c, cfg.tol);
    result.folds.push_back(fs);
  }

  std::size_t modal = 0;
  for (std::size_t cell = 1; cell < n_cells; ++cell)
    if (votes[cell] > votes[modal]) modal = cell;
  result.best_sigma = cell_sigma(modal);
  result.best_c = cell_c(modal);
  double outer_total = 0.0;
  for (const auto& f : result.folds) outer_total += f.outer_score;
  result.cv_score = outer_total / static_cast<double>(result.folds.size());
  for (std::size_t cell = 0; cell < n_cells; ++cell)
    result.cells.push_back({cell_sigma(cell), cell_c(cell),
                            cell_total[cell] / static_cast<double>(cfg.outer_folds)});
  return result;
}

}  // namespace eod::svm
