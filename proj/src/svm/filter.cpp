#include "eod/svm/filter.hpp"

#include "eod/error.hpp"

namespace eod::svm {

Matrix feature_matrix(std::span<const Candidate> cands) {
  const std::size_t d = cands.empty() ? 0 : cands.front().features.size();
  Matrix m(static_cast<Eigen::Index>(cands.size()), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < cands.size(); ++i) {
    require(cands[i].features.size() == d, ErrorCode::dimension_mismatch,
            "candidate " + cands[i].id + " has a different feature dimension");
    for (std::size_t k = 0; k < d; ++k)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = cands[i].features[k];
  }
  return m;
}

std::vector<int> object_labels(std::span<const Candidate> cands) {
  std::vector<int> y;
  y.reserve(cands.size());
  for (const auto& c : cands) {
    require(c.gt_class.has_value(), ErrorCode::invalid_argument,
            "candidate " + c.id + " is not annotated");
    y.push_back(c.is_object() ? kObjectLabel : kNoObjectLabel);
  }
  return y;
}

FilterResult filter_no_objects(std::span<const Candidate> pool, const BinarySvmModel& model) {
  FilterResult r;
  if (pool.empty()) return r;
  const auto pred = predict_binary(model, feature_matrix(pool));
  for (std::size_t i = 0; i < pool.size(); ++i)
    (pred.labels[i] == kObjectLabel ? r.kept : r.removed).push_back(pool[i]);
  return r;
}

}  // namespace eod::svm
