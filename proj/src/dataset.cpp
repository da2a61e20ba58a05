#include "eod/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "eod/error.hpp"
#include "eod/rng.hpp"

namespace eod {

bool BoundingBox::valid() const {
  return std::isfinite(x) && std::isfinite(y) && std::isfinite(w) &&
         std::isfinite(h) && w > 0 && h > 0 && x >= 0 && y >= 0;
}

double overlap_score(const BoundingBox& a, const BoundingBox& b) {
  const double iw = std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x);
  const double ih = std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y);
  if (iw <= 0 || ih <= 0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return inter / uni;
}

std::vector<Candidate> annotate_candidates(std::vector<Candidate> cands,
                                           std::span<const GroundTruthObject> gts,
                                           const MatchConfig& cfg, bool strict) {
  require(cfg.os_threshold > 0 && cfg.os_threshold <= 1, ErrorCode::invalid_argument,
          "os_threshold must lie in (0, 1]");
  std::unordered_map<std::string, std::vector<const GroundTruthObject*>> by_image;
  for (const auto& gt : gts) {
    require(gt.box.valid(), ErrorCode::invalid_box,
            "invalid GT box on image " + gt.image_id);
    by_image[gt.image_id].push_back(&gt);
  }

  for (auto& c : cands) {
    auto it = by_image.find(c.image_id);
    if (it == by_image.end()) {
      if (strict)
        fail(ErrorCode::not_found, "candidate " + c.id + " references image " +
                                       c.image_id + " with no ground truth");
      c.gt_class = kNoObject;
      continue;
    }
    double best = -1.0;
    const std::string* best_class = nullptr;
    for (const GroundTruthObject* gt : it->second) {
      const double os = overlap_score(c.box, gt->box);
      if (os <= cfg.os_threshold) continue;
      if (os > best || (os == best && gt->class_name < *best_class)) {
        best = os;
        best_class = &gt->class_name;
      }
    }
    c.gt_class = best_class ? *best_class : std::string(kNoObject);
  }
  return cands;
}

DatasetSplit make_split(std::span<const Candidate> cands, double class_holdout_frac,
                        double refill_frac, std::uint64_t seed) {
  require(class_holdout_frac >= 0 && class_holdout_frac <= 1 && refill_frac >= 0 &&
              refill_frac <= 1,
          ErrorCode::invalid_argument, "split fractions must lie in [0, 1]");

  std::map<std::string, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    require(cands[i].gt_class.has_value(), ErrorCode::invalid_argument,
            "make_split needs annotated candidates; " + cands[i].id + " is not");
    if (cands[i].is_object()) by_class[*cands[i].gt_class].push_back(i);
  }
  std::vector<std::string> classes;
  for (const auto& [name, _] : by_class) classes.push_back(name);

  if (class_holdout_frac > 0 && classes.size() < 2)
    fail(ErrorCode::single_class, "class holdout needs at least 2 object classes");

  Rng rng(seed);
  std::size_t n_hold = 0;
  if (class_holdout_frac > 0) {
    n_hold = static_cast<std::size_t>(
        std::floor(class_holdout_frac * static_cast<double>(classes.size()) + 1e-9));
    n_hold = std::max<std::size_t>(n_hold, 1);
  }
  std::vector<std::string> shuffled = classes;
  rng.shuffle(std::span(shuffled));
  std::set<std::string> heldout(shuffled.begin(), shuffled.begin() + n_hold);

  std::vector<bool> in_bag(cands.size(), false);
  for (const auto& name : classes) {
    if (heldout.count(name)) continue;
    std::vector<std::size_t> members = by_class[name];
    rng.shuffle(std::span(members));
    const auto take = static_cast<std::size_t>(
        std::floor(refill_frac * static_cast<double>(members.size()) + 0.5));
    for (std::size_t k = 0; k < take && k < members.size(); ++k) in_bag[members[k]] = true;
  }

  DatasetSplit split;
  split.seed = seed;
  split.heldout_classes.assign(heldout.begin(), heldout.end());
  for (std::size_t i = 0; i < cands.size(); ++i)
    (in_bag[i] ? split.refill_bag_ids : split.unlabeled_pool_ids).push_back(cands[i].id);
  return split;
}

void validate_split(const DatasetSplit& split, std::span<const Candidate> cands) {
  std::unordered_map<std::string, const Candidate*> by_id;
  for (const auto& c : cands) by_id[c.id] = &c;
  std::set<std::string> heldout(split.heldout_classes.begin(), split.heldout_classes.end());
  std::unordered_set<std::string> bag;
  for (const auto& id : split.refill_bag_ids) {
    auto it = by_id.find(id);
    require(it != by_id.end(), ErrorCode::not_found, "split references unknown id " + id);
    require(bag.insert(id).second, ErrorCode::invalid_argument, "duplicate bag id " + id);
    const Candidate& c = *it->second;
    require(c.is_object(), ErrorCode::invalid_argument,
            "refill bag entry " + id + " is not an annotated object");
    require(!heldout.count(*c.gt_class), ErrorCode::invalid_argument,
            "refill bag entry " + id + " belongs to heldout class " + *c.gt_class);
  }
  std::unordered_set<std::string> pool;
  for (const auto& id : split.unlabeled_pool_ids) {
    require(by_id.count(id), ErrorCode::not_found, "split references unknown id " + id);
    require(!bag.count(id), ErrorCode::invalid_argument,
            "id " + id + " is in both the bag and the pool");
    require(pool.insert(id).second, ErrorCode::invalid_argument, "duplicate pool id " + id);
  }
}

Candidate concat_scene_features(Candidate cand, std::span<const double> scene) {
  cand.features.insert(cand.features.end(), scene.begin(), scene.end());
  return cand;
}

std::vector<Candidate> concat_scene_features(std::vector<Candidate> cands) {
  std::optional<std::size_t> scene_dim;
  for (auto& c : cands) {
    require(c.scene_features.has_value(), ErrorCode::invalid_argument,
            "candidate " + c.id + " has no scene_features");
    if (!scene_dim) scene_dim = c.scene_features->size();
    require(c.scene_features->size() == *scene_dim, ErrorCode::dimension_mismatch,
            "candidate " + c.id + " scene dimension differs from the first candidate's");
    const std::vector<double> scene = *c.scene_features;
    c = concat_scene_features(std::move(c), scene);
  }
  return cands;
}

DatasetStats compute_stats(std::span<const Candidate> cands,
                           std::span<const GroundTruthObject> gts) {
  DatasetStats s;
  std::map<std::string, std::size_t> per_image;
  for (const auto& c : cands) {
    ++per_image[c.image_id];
    if (c.gt_class) ++s.class_histogram[*c.gt_class];
  }
  for (const auto& gt : gts) per_image.try_emplace(gt.image_id, 0);
  s.n_images = per_image.size();
  for (const auto& [_, n] : per_image) s.w_per_image = std::max(s.w_per_image, n);
  s.n_candidates = cands.size();
  s.n_gt = gts.size();
  s.feature_dim = cands.empty() ? 0 : cands.front().features.size();
  return s;
}

Dataset::Dataset(std::vector<Candidate> candidates, std::vector<GroundTruthObject> gts)
    : candidates_(std::move(candidates)), gts_(std::move(gts)) {
  if (!candidates_.empty()) dim_ = candidates_.front().features.size();
  by_id_.reserve(candidates_.size());
  for (std::size_t i = 0; i < candidates_.size(); ++i) {
    const auto& c = candidates_[i];
    require(c.features.size() == dim_, ErrorCode::dimension_mismatch,
            "candidate " + c.id + " has dimension " + std::to_string(c.features.size()) +
                ", expected " + std::to_string(dim_));
    require(by_id_.emplace(c.id, i).second, ErrorCode::invalid_argument,
            "duplicate candidate id " + c.id);
  }
}

std::optional<std::size_t> Dataset::find(const std::string& id) const {
  auto it = by_id_.find(id);
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

std::size_t Dataset::index_of(const std::string& id) const {
  auto i = find(id);
  if (!i) fail(ErrorCode::not_found, "unknown candidate id " + id);
  return *i;
}

std::vector<std::string> Dataset::object_classes() const {
  std::set<std::string> names;
  for (const auto& c : candidates_)
    if (c.is_object()) names.insert(*c.gt_class);
  return {names.begin(), names.end()};
}

bool Dataset::annotated() const {
  return std::all_of(candidates_.begin(), candidates_.end(),
                     [](const Candidate& c) { return c.gt_class.has_value(); });
}

}  // namespace eod
