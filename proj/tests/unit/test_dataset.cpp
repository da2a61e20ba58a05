#include <doctest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "eod/dataset.hpp"
#include "eod/error.hpp"
#include "eod/io.hpp"
#include "eod/rng.hpp"
#include "eod/synth.hpp"

using namespace eod;

namespace {

// Counts unit cells covered by both / either box; exact for integer boxes.
double cell_count_overlap(const BoundingBox& a, const BoundingBox& b) {
  int inter = 0, uni = 0;
  for (int x = 0; x < 64; ++x) {
    for (int y = 0; y < 64; ++y) {
      const bool in_a = x >= a.x && x < a.x + a.w && y >= a.y && y < a.y + a.h;
      const bool in_b = x >= b.x && x < b.x + b.w && y >= b.y && y < b.y + b.h;
      inter += in_a && in_b;
      uni += in_a || in_b;
    }
  }
  return static_cast<double>(inter) / uni;
}

Candidate cand(std::string id, std::string image, BoundingBox box, std::string gt = "") {
  Candidate c;
  c.id = std::move(id);
  c.image_id = std::move(image);
  c.box = box;
  c.objectness = 0.5;
  c.features = {0.0, 1.0};
  if (!gt.empty()) c.gt_class = gt;
  return c;
}

std::vector<Candidate> labelled(const std::vector<std::pair<std::string, int>>& classes) {
  std::vector<Candidate> out;
  for (const auto& [name, count] : classes)
    for (int i = 0; i < count; ++i)
      out.push_back(cand(name + std::to_string(i), "img", {0, 0, 1, 1}, name));
  return out;
}

}  // namespace

TEST_CASE("overlap_score basic cases") {
  const BoundingBox a{0, 0, 10, 10};
  CHECK(overlap_score(a, a) == 1.0);
  CHECK(overlap_score(a, {100, 100, 5, 5}) == 0.0);
  CHECK(overlap_score(a, {5, 0, 10, 10}) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  // Touching edges share no area.
  CHECK(overlap_score(a, {10, 0, 10, 10}) == 0.0);
}

TEST_CASE("overlap_score matches cell enumeration on integer boxes") {
  Rng rng(7);
  for (int t = 0; t < 200; ++t) {
    auto box = [&] {
      return BoundingBox{double(rng.uniform_index(30)), double(rng.uniform_index(30)),
                         double(1 + rng.uniform_index(30)), double(1 + rng.uniform_index(30))};
    };
    const BoundingBox a = box(), b = box();
    CHECK(overlap_score(a, b) == doctest::Approx(cell_count_overlap(a, b)).epsilon(1e-12));
    CHECK(overlap_score(a, b) == overlap_score(b, a));
    CHECK(overlap_score(a, a) == 1.0);
  }
}

TEST_CASE("annotate_candidates picks the best class above the threshold") {
  const std::vector<GroundTruthObject> gts = {
      {"i1", {0, 0, 6, 10}, "car"},     // OS 0.6 with the candidate
      {"i1", {0, 0, 7, 10}, "person"},  // OS 0.7
      {"i2", {0, 0, 6, 10}, "car"},
      {"i3", {0, 0, 4.9, 10}, "car"},  // OS 0.49
      {"i4", {0, 0, 10, 10}, "zebra"},
      {"i4", {0, 0, 10, 10}, "apple"},
  };
  std::vector<Candidate> cs = {cand("a", "i1", {0, 0, 10, 10}), cand("b", "i2", {0, 0, 10, 10}),
                               cand("c", "i3", {0, 0, 10, 10}), cand("d", "i4", {0, 0, 10, 10}),
                               cand("e", "i9", {0, 0, 10, 10})};
  const auto out = annotate_candidates(cs, gts);
  CHECK(*out[0].gt_class == "person");
  CHECK(*out[1].gt_class == "car");
  CHECK(*out[2].gt_class == kNoObject);
  CHECK(*out[3].gt_class == "apple");  // equal OS breaks lexicographically
  CHECK(*out[4].gt_class == kNoObject);

  SUBCASE("idempotent") {
    const auto again = annotate_candidates(out, gts);
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(again[i].gt_class == out[i].gt_class);
  }
  SUBCASE("strict mode rejects images without ground truth") {
    CHECK_THROWS_AS(annotate_candidates(cs, gts, {}, true), Error);
  }
  SUBCASE("exhaustive pairwise oracle") {
    // Brute force over all GT rows for each candidate.
    for (std::size_t i = 0; i < cs.size(); ++i) {
      std::string expect = kNoObject;
      double best = 0.5;
      for (const auto& g : gts) {
        if (g.image_id != cs[i].image_id) continue;
        const double os = overlap_score(g.box, cs[i].box);
        if (os > best || (os == best && os > 0.5 && g.class_name < expect)) {
          best = os;
          expect = g.class_name;
        }
      }
      CHECK(*out[i].gt_class == expect);
    }
  }
}

TEST_CASE("make_split holds out classes and fills the bag") {
  const auto cs = labelled({{"a", 10}, {"b", 10}, {"c", 10}, {"d", 10}});
  const auto split = make_split(cs, 0.5, 0.4, 3);
  REQUIRE(split.heldout_classes.size() == 2);
  std::map<std::string, int> bag_per_class;
  for (const auto& id : split.refill_bag_ids) ++bag_per_class[id.substr(0, 1)];
  CHECK(bag_per_class.size() == 2);
  for (const auto& [name, n] : bag_per_class) {
    CHECK(n == 4);
    CHECK(std::find(split.heldout_classes.begin(), split.heldout_classes.end(), name) ==
          split.heldout_classes.end());
  }
  CHECK(split.refill_bag_ids.size() + split.unlabeled_pool_ids.size() == cs.size());
  CHECK_NOTHROW(validate_split(split, cs));

  CHECK(make_split(cs, 0.5, 0.0, 3).refill_bag_ids.empty());
  CHECK(make_split(cs, 0.1, 0.4, 3).heldout_classes.size() == 1);  // at least one
  CHECK(make_split(cs, 0.0, 0.4, 3).heldout_classes.empty());
}

TEST_CASE("make_split keeps no_object in the pool and partitions every id") {
  auto cs = labelled({{"a", 7}, {"b", 5}, {"c", 9}, {"no_object", 12}});
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto split = make_split(cs, 0.5, 0.4, seed);
    std::set<std::string> bag(split.refill_bag_ids.begin(), split.refill_bag_ids.end());
    std::set<std::string> pool(split.unlabeled_pool_ids.begin(), split.unlabeled_pool_ids.end());
    CHECK(bag.size() + pool.size() == cs.size());
    for (const auto& c : cs) {
      CHECK(bag.count(c.id) + pool.count(c.id) == 1);
      if (bag.count(c.id)) {
        CHECK(c.is_object());
        CHECK(std::find(split.heldout_classes.begin(), split.heldout_classes.end(),
                        *c.gt_class) == split.heldout_classes.end());
      }
    }
  }
  const auto s1 = make_split(cs, 0.5, 0.4, 11);
  const auto s2 = make_split(cs, 0.5, 0.4, 11);
  CHECK(s1.refill_bag_ids == s2.refill_bag_ids);
  CHECK(s1.heldout_classes == s2.heldout_classes);
}

TEST_CASE("make_split error paths") {
  CHECK_THROWS_AS(make_split(labelled({{"a", 4}}), 0.5, 0.4, 1), Error);
  CHECK_NOTHROW(make_split(labelled({{"a", 4}}), 0.0, 0.4, 1));
  auto unannotated = labelled({{"a", 2}, {"b", 2}});
  unannotated[0].gt_class.reset();
  CHECK_THROWS_AS(make_split(unannotated, 0.5, 0.4, 1), Error);
  CHECK_THROWS_AS(make_split(labelled({{"a", 2}}), 1.5, 0.4, 1), Error);
}

TEST_CASE("concat_scene_features") {
  Candidate c = cand("x", "i", {0, 0, 1, 1});
  c.features = {1, 2, 3, 4};
  const std::vector<double> scene = {7, 8, 9};
  const auto out = concat_scene_features(c, scene);
  CHECK(out.features == std::vector<double>{1, 2, 3, 4, 7, 8, 9});
  const std::vector<double> zeros(3, 0.0);
  const auto z = concat_scene_features(c, zeros);
  CHECK(std::equal(c.features.begin(), c.features.end(), z.features.begin()));

  std::vector<Candidate> batch(3, c);
  for (auto& b : batch) b.scene_features = scene;
  batch[2].image_id = "other";
  batch[2].scene_features = std::vector<double>{1, 1, 1};
  const auto joined = concat_scene_features(batch);
  CHECK(std::equal(joined[0].features.begin() + 4, joined[0].features.end(),
                   joined[1].features.begin() + 4));
  CHECK(joined[0].features.size() == 7);

  batch[1].scene_features = std::vector<double>{1, 1};
  CHECK_THROWS_AS(concat_scene_features(batch), Error);
  batch[1].scene_features.reset();
  CHECK_THROWS_AS(concat_scene_features(batch), Error);
}

TEST_CASE("synth_generate") {
  SynthConfig cfg;
  cfg.n_classes = 2;
  cfg.samples_per_class = {10};
  cfg.dim = 5;
  cfg.noise_fraction = 0.0;

  SUBCASE("noiseless round trip") {
    const auto ds = synth_generate(cfg, 1);
    CHECK(ds.candidates.size() == 20);
    const auto ann = annotate_candidates(ds.candidates, ds.ground_truth);
    std::map<std::string, int> hist;
    for (const auto& c : ann) ++hist[*c.gt_class];
    CHECK(hist.size() == 2);
    CHECK(hist["class_00"] == 10);
    CHECK(hist["class_01"] == 10);
    // Every candidate maps back to the GT object it was generated from.
    for (const auto& c : ann) {
      int hits = 0;
      for (const auto& g : ds.ground_truth)
        if (g.image_id == c.image_id && overlap_score(g.box, c.box) > 0.5) ++hits;
      CHECK(hits == 1);
    }
  }
  SUBCASE("noise fraction") {
    cfg.noise_fraction = 0.9;
    const auto ann = [&] {
      auto ds = synth_generate(cfg, 2);
      return annotate_candidates(ds.candidates, ds.ground_truth);
    }();
    const auto n_no = std::count_if(ann.begin(), ann.end(),
                                    [](const Candidate& c) { return !c.is_object(); });
    CHECK(ann.size() == 200);
    CHECK(n_no == 180);
  }
  SUBCASE("determinism") {
    std::ostringstream a, b;
    write_candidates(a, synth_generate(cfg, 5).candidates);
    write_candidates(b, synth_generate(cfg, 5).candidates);
    CHECK(a.str() == b.str());
    std::ostringstream c;
    write_candidates(c, synth_generate(cfg, 6).candidates);
    CHECK(a.str() != c.str());
  }
  SUBCASE("degenerate configs") {
    cfg.dim = 0;
    CHECK_THROWS_AS(synth_generate(cfg, 1), Error);
    cfg.dim = 3;
    cfg.samples_per_class = {0};
    CHECK_THROWS_AS(synth_generate(cfg, 1), Error);
  }
  SUBCASE("config json round trip") {
    cfg.samples_per_class = {40, 40, 5};
    cfg.n_classes = 3;
    const auto back = synth_config_from_json(to_json(cfg));
    CHECK(back.samples_per_class == cfg.samples_per_class);
    CHECK(back.dim == cfg.dim);
  }
}

TEST_CASE("candidate file parsing") {
  SUBCASE("ids default to ingestion order") {
    std::istringstream in(
        R"({"image_id":"a","box":[0,0,5,5],"objectness":0.3,"features":[1,2]})"
        "\n\n"
        R"({"image_id":"a","box":[1,1,5,5],"objectness":0.4,"features":[3,4],"crop_uri":"x.png"})"
        "\n");
    const auto r = parse_candidates(in);
    REQUIRE(r.ok());
    CHECK(r.items[0].id == "0");
    CHECK(r.items[1].id == "1");
    CHECK(*r.items[1].crop_uri == "x.png");
  }
  SUBCASE("mixed dimensions are reported with line numbers") {
    std::istringstream in(
        R"({"image_id":"a","box":[0,0,5,5],"objectness":0.3,"features":[1,2]})"
        "\n"
        R"({"image_id":"a","box":[0,0,5,5],"objectness":0.3,"features":[1,2,3]})"
        "\n"
        R"({"image_id":"a","box":[0,0,-5,5],"objectness":1.3,"features":[1,2]})"
        "\n");
    const auto r = parse_candidates(in);
    REQUIRE(r.errors.size() == 2);
    CHECK(r.errors[0].line == 2);
    CHECK(r.errors[1].line == 3);
  }
  SUBCASE("ground truth rejects the reserved class") {
    std::istringstream in(R"({"image_id":"a","box":[0,0,5,5],"class":"no_object"})"
                          "\n"
                          R"({"image_id":"a","box":[0,0,5,5],"class":"cup"})");
    const auto r = parse_ground_truth(in);
    REQUIRE(r.errors.size() == 1);
    CHECK(r.errors[0].line == 1);
    CHECK(r.items.size() == 1);
  }
}

TEST_CASE("dataset stats") {
  std::vector<Candidate> cs = {cand("a", "i1", {0, 0, 1, 1}, "cup"), cand("b", "i1", {0, 0, 1, 1}, "no_object"),
                               cand("c", "i2", {0, 0, 1, 1}, "cup")};
  const std::vector<GroundTruthObject> gts = {{"i1", {0, 0, 1, 1}, "cup"}, {"i3", {0, 0, 1, 1}, "cup"}};
  const auto s = compute_stats(cs, gts);
  CHECK(s.n_images == 3);
  CHECK(s.w_per_image == 2);
  CHECK(s.n_candidates == 3);
  CHECK(s.n_gt == 2);
  CHECK(s.feature_dim == 2);
  CHECK(s.class_histogram.at("cup") == 2);
  CHECK(s.n_candidates <= s.n_images * s.w_per_image);
}
