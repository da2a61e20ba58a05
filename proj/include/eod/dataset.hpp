#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace eod {

// Reserved class for candidates that match no ground-truth object.
inline constexpr const char* kNoObject = "no_object";

struct BoundingBox {
  double x = 0;  // left
  double y = 0;  // top
  double w = 0;
  double h = 0;

  bool valid() const;
  double area() const { return w * h; }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

struct Candidate {
  std::string id;
  std::string image_id;
  BoundingBox box;
  double objectness = 0;
  std::vector<double> features;
  std::optional<std::vector<double>> scene_features;
  std::optional<std::string> gt_class;
  std::optional<std::string> crop_uri;

  bool is_object() const { return gt_class && *gt_class != kNoObject; }
};

struct GroundTruthObject {
  std::string image_id;
  BoundingBox box;
  std::string class_name;
};

struct MatchConfig {
  double os_threshold = 0.5;
};

struct DatasetSplit {
  std::vector<std::string> refill_bag_ids;
  std::vector<std::string> unlabeled_pool_ids;
  std::vector<std::string> heldout_classes;
  std::uint64_t seed = 0;
};

struct DatasetStats {
  std::size_t n_images = 0;
  std::size_t w_per_image = 0;  // largest number of candidates on one image
  std::size_t n_candidates = 0;
  std::size_t n_gt = 0;
  std::size_t feature_dim = 0;
  std::map<std::string, std::size_t> class_histogram;
};

// Intersection over union on continuous rectangles (w*h areas).
double overlap_score(const BoundingBox& a, const BoundingBox& b);

// Sets gt_class on every candidate to the best-overlapping GT class on the
// same image above the threshold, or "no_object". With `strict`, a candidate
// whose image has no GT record at all is an error.
std::vector<Candidate> annotate_candidates(std::vector<Candidate> cands,
                                           std::span<const GroundTruthObject> gts,
                                           const MatchConfig& cfg = {},
                                           bool strict = false);

DatasetSplit make_split(std::span<const Candidate> cands, double class_holdout_frac,
                        double refill_frac, std::uint64_t seed);

// Checks the DatasetSplit invariants against the candidate list.
void validate_split(const DatasetSplit& split, std::span<const Candidate> cands);

Candidate concat_scene_features(Candidate cand, std::span<const double> scene);

// Replaces every candidate's features by object++scene features. All
// candidates must carry scene features of one shared dimension.
std::vector<Candidate> concat_scene_features(std::vector<Candidate> cands);

DatasetStats compute_stats(std::span<const Candidate> cands,
                           std::span<const GroundTruthObject> gts);

// Candidates plus ground truth with an id lookup; the unit the engine and
// the service operate on.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<Candidate> candidates, std::vector<GroundTruthObject> gts);

  const std::vector<Candidate>& candidates() const { return candidates_; }
  const std::vector<GroundTruthObject>& ground_truth() const { return gts_; }
  std::size_t size() const { return candidates_.size(); }
  std::size_t feature_dim() const { return dim_; }

  const Candidate& operator[](std::size_t i) const { return candidates_[i]; }
  std::optional<std::size_t> find(const std::string& id) const;
  std::size_t index_of(const std::string& id) const;

  // Object class names present in the candidates' annotations, sorted.
  std::vector<std::string> object_classes() const;
  bool annotated() const;

 private:
  std::vector<Candidate> candidates_;
  std::vector<GroundTruthObject> gts_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::size_t dim_ = 0;
};

}  // namespace eod
