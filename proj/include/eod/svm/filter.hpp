#pragma once

#include <span>
#include <vector>

#include "eod/dataset.hpp"
#include "eod/svm/binary_svm.hpp"

namespace eod::svm {

// Label convention for the 'Object' / 'No Object' filter.
inline constexpr int kObjectLabel = 1;
inline constexpr int kNoObjectLabel = -1;

struct FilterResult {
  std::vector<Candidate> kept;
  std::vector<Candidate> removed;  // retained for audit and metrics
};

FilterResult filter_no_objects(std::span<const Candidate> pool, const BinarySvmModel& model);

// +1 for annotated objects, -1 for "no_object". Candidates must be annotated.
std::vector<int> object_labels(std::span<const Candidate> cands);

Matrix feature_matrix(std::span<const Candidate> cands);

}  // namespace eod::svm
