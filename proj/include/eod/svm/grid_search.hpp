#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "eod/svm/binary_svm.hpp"

namespace eod::svm {

struct GridSearchConfig {
  std::vector<double> sigma_grid{0.1, 0.5, 3, 10, 100, 1000};
  std::vector<double> c_grid{0.1, 0.5, 3, 10, 100, 1000};
  std::size_t outer_folds = 5;
  std::size_t inner_folds = 5;
  std::uint64_t seed = 0;
  double tol = 1e-3;

  void validate() const;
};

struct FoldScore {
  std::size_t fold = 0;
  double sigma = 0;
  double c = 0;
  double inner_score = 0;  // inner-CV balanced accuracy of the chosen cell
  double outer_score = 0;  // balanced accuracy on the held-out outer fold
};

struct CellScore {
  double sigma = 0;
  double c = 0;
  double mean_inner_score = 0;  // averaged over the outer folds
};

struct GridSearchResult {
  double best_sigma = 0;
  double best_c = 0;
  double cv_score = 0;  // mean outer balanced accuracy
  std::vector<FoldScore> folds;
  std::vector<CellScore> cells;
};

// Mean of sensitivity (label +1) and specificity (label -1).
double balanced_accuracy(std::span<const int> truth, std::span<const int> predicted);

// Fold id per sample; each class is shuffled with `seed` and dealt round-robin.
std::vector<std::size_t> stratified_folds(std::span<const int> y, std::size_t k,
                                          std::uint64_t seed);

// Nested cross-validation. Each outer fold picks the cell with the best
// inner-CV balanced accuracy (first in sigma-major grid order on ties); the
// result is the cell chosen by most outer folds (earliest grid cell on ties).
GridSearchResult grid_search_cv(const Matrix& x, std::span<const int> y,
                                const GridSearchConfig& cfg = {});

}  // namespace eod::svm
