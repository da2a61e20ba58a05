#include <doctest.h>

#include <cmath>
#include <set>

#include "eod/engine/engine.hpp"
#include "eod/error.hpp"
#include "eod/synth.hpp"
#include "oracles.hpp"

using namespace eod;
using namespace eod::engine;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected eod::Error");
  return ErrorCode::io_error;
}

std::shared_ptr<const Dataset> planted(std::size_t classes, std::size_t per_class, double noise, std::uint64_t seed,
                                       double sigma = 20.0) {
  SynthConfig sc;
  sc.n_classes = classes;
  sc.samples_per_class = {per_class};
  sc.noise_fraction = noise;
  sc.class_sigma = {sigma};
  auto ds = synth_generate(sc, seed);
  return std::make_shared<const Dataset>(annotate_candidates(ds.candidates, ds.ground_truth), ds.ground_truth);
}

Matrix blob(Rng& rng, int n, double cx, double cy, double spread) {
  Matrix m(n, 2);
  for (int i = 0; i < n; ++i) m.row(i) << cx + rng.normal(0, spread), cy + rng.normal(0, spread);
  return m;
}

}  // namespace

TEST_CASE("select_easiest") {
  SUBCASE("zero variance selects everything") {
    const std::vector<double> s(6, 0.4);
    const auto r = select_easiest(s, 1, {1.0, 0.1});
    CHECK(r.sigma == doctest::Approx(0.0));
    CHECK(r.selected.size() == 6);
  }
  SUBCASE("scores 1..5") {
    const std::vector<double> s{1, 2, 3, 4, 5};
    const auto r = select_easiest(s, 1, {0.5, 0.1});
    CHECK(r.mu == doctest::Approx(3.0));
    CHECK(r.sigma == doctest::Approx(std::sqrt(2.0)));
    CHECK(r.threshold == doctest::Approx(3 + 0.5 * std::sqrt(2.0) - 0.1));
    CHECK(r.selected == std::vector<std::size_t>{3, 4});
  }
  SUBCASE("strictly greater than the threshold") {
    const std::vector<double> s{0, 2};  // mu 1, sigma 1
    CHECK(select_easiest(s, 0, {1.0, 0.0}).selected.empty());
  }
  SUBCASE("nested in t for omega2 >= 0") {
    Rng rng(3);
    std::vector<double> s(50);
    for (auto& v : s) v = rng.uniform01();
    std::vector<std::size_t> prev;
    for (std::size_t t = 1; t < 30; ++t) {
      const auto r = select_easiest(s, t, {0.5, 0.02});
      CHECK(std::includes(r.selected.begin(), r.selected.end(), prev.begin(), prev.end()));
      prev = r.selected;
    }
  }
  SUBCASE("empty pool") { CHECK(code_of([] { select_easiest({}, 1, {}); }) == ErrorCode::invalid_argument); }
}

TEST_CASE("select_easiest matches the scalar oracle") {
  Rng rng(77);
  for (int pool = 0; pool < 20; ++pool) {
    std::vector<double> s(5 + rng.uniform_index(200));
    for (auto& v : s) v = rng.uniform01();
    const double w1 = rng.uniform01(), w2 = 0.05 * rng.uniform01();
    std::vector<std::size_t> prev;
    for (std::size_t t = 1; t <= 30; ++t) {
      const auto got = select_easiest(s, t, {w1, w2}).selected;
      CHECK(got == oracle::select_scalar(s, t, w1, w2));
      CHECK(std::includes(got.begin(), got.end(), prev.begin(), prev.end()));
      prev = got;
    }
  }
}

TEST_CASE("draw_refill") {
  Rng rng(1);
  RefillBag bag{{"a", {"a1", "a2", "a3", "a4", "a5"}}, {"b", {"b1", "b2", "b3", "b4", "b5"}}};
  CHECK(draw_refill({}, 10, 0.5, rng).empty());
  CHECK(draw_refill(bag, 10, 0.0, rng).empty());

  const auto two = draw_refill(bag, 8, 0.25, rng);
  REQUIRE(two.size() == 2);
  CHECK(two[0][0] != two[1][0]);  // one per class

  RefillBag lopsided{{"a", {"a1"}}, {"b", {"b1", "b2", "b3", "b4", "b5", "b6", "b7", "b8", "b9", "b10"}}};
  const auto ten = draw_refill(lopsided, 20, 0.5, rng);
  CHECK(ten.size() == 10);
  CHECK(std::set<std::string>(ten.begin(), ten.end()).size() == 10);
  CHECK(std::count(ten.begin(), ten.end(), "a1") == 1);

  CHECK(draw_refill(lopsided, 100, 1.0, rng).size() == 11);  // exhausts gracefully

  Rng r1(9), r2(9);
  CHECK(draw_refill(bag, 20, 0.3, r1) == draw_refill(bag, 20, 0.3, r2));
}

TEST_CASE("propose_best_cluster") {
  Rng rng(11);
  SUBCASE("two planted blobs") {
    Matrix easy(40, 2);
    easy << blob(rng, 20, 0, 0, 1), blob(rng, 20, 30, 30, 1);
    const auto p = propose_best_cluster(easy, Matrix(0, 2), 2);
    CHECK(p.silhouette_mean > 0.8);
    REQUIRE(p.easy_members.size() == 20);
    const bool first_blob = p.easy_members.front() < 20;
    for (auto i : p.easy_members) CHECK((i < 20) == first_blob);
  }
  SUBCASE("refill-only cluster is never proposed") {
    const Matrix easy = blob(rng, 10, 0, 0, 5);
    const Matrix refill = blob(rng, 10, 100, 100, 0.01);  // very tight, far away
    const auto p = propose_best_cluster(easy, refill, 2);
    CHECK(p.refill_members.empty());
    CHECK(p.easy_members.size() == 10);
    for (const auto& c : p.clusters)
      if (c.n_easy == 0) CHECK(!c.silhouette_mean.has_value());
  }
  SUBCASE("k clamped with a warning") {
    const Matrix easy = blob(rng, 3, 0, 0, 1);
    const auto p = propose_best_cluster(easy, Matrix(0, 2), 15);
    CHECK(p.k_used == 3);
    CHECK(p.warnings.size() == 1);
  }
  SUBCASE("single point") {
    const auto p = propose_best_cluster(blob(rng, 1, 0, 0, 1), Matrix(0, 2), 15);
    CHECK(p.k_used == 1);
    CHECK(p.silhouette_mean == 0.0);
    CHECK(p.easy_members == std::vector<std::size_t>{0});
  }
  SUBCASE("refill tightens a sparse class cluster") {
    // Three spread-out samples of a sparse class among background noise, then
    // the same with six labeled samples of that class added as refill.
    Matrix easy(23, 2);
    easy << blob(rng, 3, 60, 60, 6), blob(rng, 20, 0, 0, 25);
    const Matrix refill = blob(rng, 6, 60, 60, 1);
    auto mean_of_sparse = [&](const ProposalCore& p) {
      const std::size_t c = p.assignment.labels[0];
      for (std::size_t i = 1; i < 3; ++i) REQUIRE(p.assignment.labels[i] == c);
      return *p.clusters[c].silhouette_mean;
    };
    const auto without = propose_best_cluster(easy, Matrix(0, 2), 4);
    const auto with = propose_best_cluster(easy, refill, 4);
    CHECK(mean_of_sparse(with) > mean_of_sparse(without));
  }
}

TEST_CASE("majority vote") {
  auto vote = [](std::vector<std::string> v) { return majority_label(v); };
  CHECK(vote({"car", "car", kNoObject}) == "car");
  CHECK(vote({kNoObject, kNoObject}) == kNoObject);
  CHECK(vote({"person", "car", "person", "car"}) == "car");
  CHECK(vote({kNoObject, "zebra"}) == "zebra");
  CHECK(vote({kNoObject, kNoObject, "zebra"}) == kNoObject);
}

TEST_CASE("answers") {
  CHECK(parse_answer("skip").is_skip());
  CHECK(parse_answer("car").label == "car");
  CHECK(parse_answer(kNoObject).is_no_object());
  for (const char* bad : {"", " car", "car ", "a\tb"})
    CHECK(code_of([&] { parse_answer(bad); }) == ErrorCode::malformed_label);
  CHECK(code_of([] { answer_from_json({{"kind", "label"}, {"label", "skip"}}); }) == ErrorCode::malformed_label);
  CHECK(answer_from_json(to_json(OracleAnswer::with_label("mug"))) == OracleAnswer::with_label("mug"));
}

TEST_CASE("engine config") {
  EngineConfig c;
  c.omega2 = 0.01;
  CHECK(to_json(engine_config_from_json(to_json(c))) == to_json(c));
  CHECK(code_of([] { engine_config_from_json({{"k_clusterz", 3}}); }) == ErrorCode::invalid_argument);
  CHECK(code_of([] { engine_config_from_json({{"k_clusters", 1}}); }) == ErrorCode::invalid_argument);
  CHECK(code_of([] { engine_config_from_json({{"omega2", -0.1}}); }) == ErrorCode::invalid_argument);
  const auto s3 = apply_setting({}, Setting::S3);
  CHECK(s3.use_refill);
  CHECK(!s3.use_filter);
  const auto s2 = apply_setting({}, Setting::S2);
  CHECK(!s2.use_refill);
  CHECK(apply_setting({}, Setting::S6).use_pca);
  CHECK(apply_setting({}, Setting::S4).use_scene);
}

TEST_CASE("engine: noiseless two-class discovery") {
  const auto data = planted(2, 20, 0.0, 5, 5.0);
  const auto split = make_split(data->candidates(), 0.5, 0.4, 1);
  EngineConfig cfg;
  cfg.max_iterations = 2;
  auto e = Engine::create(data, split, cfg);
  MajorityVoteOracle oracle;
  e.run(oracle);
  CHECK(e.state().status == Status::finished);
  CHECK(e.state().history.size() <= 2);
  std::set<std::string> found;
  for (const auto& [id, label] : e.state().discovered) {
    CHECK(label == *(*data)[data->index_of(id)].gt_class);
    found.insert(label);
  }
  CHECK(found.size() == 2);
}

TEST_CASE("engine: state machine") {
  const auto data = planted(4, 20, 0.5, 8);
  const auto split = make_split(data->candidates(), 0.5, 0.4, 2);
  EngineConfig cfg;
  cfg.max_iterations = 10;

  SUBCASE("bookkeeping for label, no_object and skip") {
    auto e = Engine::create(data, split, cfg);
    CHECK(e.state().t == 0);
    CHECK(e.state().status == Status::running);
    CHECK(*e.state().config.omega2 > 0);

    auto p = e.advance();
    REQUIRE(p);
    CHECK(e.state().status == Status::awaiting_label);
    CHECK(code_of([&] { e.advance(); }) == ErrorCode::state_conflict);
    CHECK(code_of([&] { e.submit("nope", OracleAnswer::skip()); }) == ErrorCode::stale_proposal);

    const auto pool0 = e.state().pool.size();
    const auto& skip = e.submit(p->proposal_id, OracleAnswer::skip());
    CHECK(skip.t == 1);
    CHECK(e.state().t == 1);
    CHECK(e.state().pool.size() == pool0);
    CHECK(code_of([&] { e.submit(p->proposal_id, OracleAnswer::skip()); }) == ErrorCode::state_conflict);

    p = e.advance();
    REQUIRE(p);
    const auto bag_car0 = e.state().refill_bag.count("car") ? e.state().refill_bag.at("car").size() : 0;
    const auto& rec = e.submit(p->proposal_id, OracleAnswer::with_label("car"));
    CHECK(rec.labeled_ids == p->cluster_members);
    CHECK(e.state().pool.size() == pool0 - p->cluster_members.size() - rec.expanded_ids.size());
    CHECK(e.state().refill_bag.at("car").size() ==
          bag_car0 + p->cluster_members.size() + rec.expanded_ids.size());

    p = e.advance();
    REQUIRE(p);
    const auto bag = e.state().refill_bag;
    const auto pool1 = e.state().pool.size();
    const auto& no = e.submit(p->proposal_id, OracleAnswer::with_label(kNoObject));
    CHECK(no.expanded_ids.empty());
    CHECK(e.state().refill_bag == bag);
    CHECK(e.state().pool.size() == pool1 - p->cluster_members.size());
    CHECK(code_of([&] {
            auto q = e.advance();
            e.submit(q->proposal_id, OracleAnswer::with_label(" bad"));
          }) == ErrorCode::malformed_label);
  }
  SUBCASE("max_iterations = 1") {
    cfg.max_iterations = 1;
    auto e = Engine::create(data, split, cfg);
    MajorityVoteOracle oracle;
    e.run(oracle);
    CHECK(e.state().history.size() == 1);
    CHECK(e.state().status == Status::finished);
    CHECK(!e.advance().has_value());
  }
  SUBCASE("empty pool finishes immediately") {
    DatasetSplit empty = split;
    empty.unlabeled_pool_ids.clear();
    auto e = Engine::create(data, empty, cfg);
    CHECK(e.state().status == Status::finished);
    MajorityVoteOracle oracle;
    e.run(oracle);
    CHECK(e.state().history.empty());
    CHECK(e.state().discovered.empty());
  }
  SUBCASE("filter required and dimension-checked") {
    cfg.use_filter = true;
    CHECK(code_of([&] { Engine::create(data, split, cfg); }) == ErrorCode::invalid_argument);
    svm::BinarySvmModel wrong;
    wrong.support_vectors = Matrix::Zero(1, 3);
    wrong.coef = {1.0};
    CHECK(code_of([&] { Engine::create(data, split, cfg, &wrong); }) == ErrorCode::dimension_mismatch);
  }
  SUBCASE("scene setting needs scene features") {
    cfg.use_scene = true;
    CHECK(code_of([&] { Engine::create(data, split, cfg); }) == ErrorCode::invalid_argument);
  }
}

TEST_CASE("engine: run invariants") {
  const auto data = planted(6, 25, 0.6, 21);
  const auto split = make_split(data->candidates(), 0.5, 0.4, 4);
  EngineConfig cfg;
  cfg.max_iterations = 40;
  auto e = Engine::create(data, split, cfg);
  MajorityVoteOracle oracle;

  const std::set<std::string> heldout(split.heldout_classes.begin(), split.heldout_classes.end());
  for (const auto& [cls, ids] : e.state().refill_bag) CHECK(!heldout.count(cls));

  std::size_t prev_pool = e.state().pool.size();
  std::size_t prev_disc = 0;
  const std::set<std::string> initial_bag(split.refill_bag_ids.begin(), split.refill_bag_ids.end());
  while (const auto* rec = e.step(oracle)) {
    const auto& s = e.state();
    CHECK(s.pool.size() <= prev_pool);
    CHECK(s.discovered.size() >= prev_disc);
    prev_pool = s.pool.size();
    prev_disc = s.discovered.size();
    CHECK(s.history.size() == s.t);
    for (const auto& id : s.pool) CHECK(!s.discovered.count(id));
    for (const auto& id : rec->labeled_ids) CHECK(!initial_bag.count(id));
    const std::set<std::string> refill(rec->refill_ids.begin(), rec->refill_ids.end());
    for (const auto& id : rec->labeled_ids) CHECK(!refill.count(id));
    for (const auto& id : rec->expanded_ids) {
      CHECK(s.discovered.at(id) == rec->answer.label);
      CHECK(!refill.count(id));
    }
    CHECK(rec->selection.threshold ==
          rec->selection.mu + rec->selection.omega1 * rec->selection.sigma -
              rec->selection.omega2 * static_cast<double>(rec->t));
  }
  CHECK(e.state().status == Status::finished);
  CHECK(e.state().t <= cfg.max_iterations);
}

TEST_CASE("engine: determinism and resume") {
  const auto data = planted(5, 20, 0.6, 33);
  const auto split = make_split(data->candidates(), 0.4, 0.4, 9);
  EngineConfig cfg;
  cfg.max_iterations = 25;
  cfg.seed = 77;
  MajorityVoteOracle oracle;

  auto a = Engine::create(data, split, cfg);
  a.run(oracle);
  auto b = Engine::create(data, split, cfg);
  b.run(oracle);
  CHECK(a.checkpoint().dump() == b.checkpoint().dump());

  // Interrupt after 7 iterations, and once more while awaiting a label.
  auto c = Engine::create(data, split, cfg);
  for (int i = 0; i < 7; ++i) c.step(oracle);
  auto d = Engine::restore(data, nlohmann::json::parse(c.checkpoint().dump()));
  const auto p = d.advance();
  REQUIRE(p);
  auto f = Engine::restore(data, nlohmann::json::parse(d.checkpoint().dump()));
  f.submit(p->proposal_id, oracle.answer(*p, *data));
  f.run(oracle);
  CHECK(f.checkpoint().dump() == a.checkpoint().dump());

  const auto other = planted(5, 21, 0.6, 33);
  CHECK(code_of([&] { Engine::restore(other, a.checkpoint()); }) == ErrorCode::invalid_argument);
}

TEST_CASE("engine: PCA and filter settings run") {
  const auto data = planted(4, 20, 0.7, 41);
  const auto split = make_split(data->candidates(), 0.5, 0.4, 3);
  auto cfg = apply_setting({}, Setting::S6);
  cfg.max_iterations = 5;
  // A filter that accepts everything: constant positive decision.
  svm::BinarySvmModel accept;
  accept.support_vectors = Matrix::Zero(1, static_cast<Eigen::Index>(data->feature_dim()));
  accept.coef = {0.0};
  accept.bias = 1.0;
  auto e = Engine::create(data, split, cfg, &accept);
  CHECK(e.state().filter.applied);
  CHECK(e.state().filter.removed_ids.empty());
  CHECK(e.feature_dim() <= data->feature_dim());
  MajorityVoteOracle oracle;
  e.run(oracle);
  CHECK(!e.state().history.empty());
  auto r = Engine::restore(data, e.checkpoint());
  CHECK(r.feature_dim() == e.feature_dim());
}
