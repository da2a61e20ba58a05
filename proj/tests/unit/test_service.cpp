#include <doctest.h>

#include <unistd.h>

#include <fstream>
#include <sstream>
#include <thread>

#include "eod/error.hpp"
#include "eod/experiment.hpp"
#include "eod/io.hpp"
#include "eod/service/http_server.hpp"
#include "eod/service/session_manager.hpp"
#include "eod/svm/model_io.hpp"
#include "eod/synth.hpp"

// After Eigen: httplib pulls in <resolv.h>, whose _res macro breaks Eigen headers.
#include <httplib.h>

using namespace eod;
using namespace eod::service;
namespace fs = std::filesystem;

namespace {

struct Fixture {
  fs::path root;
  fs::path data;

  Fixture() {
    static int counter = 0;
    root = fs::temp_directory_path() / ("eod_service_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(root);
    data = root / "data";
    SynthConfig cfg;
    cfg.n_classes = 4;
    cfg.samples_per_class = {15};
    cfg.dim = 6;
    cfg.noise_fraction = 0.5;
    const auto ds = synth_generate(cfg, 11);
    save_candidates(data / "candidates.jsonl", ds.candidates);
    save_ground_truth(data / "gt.jsonl", ds.ground_truth);
  }
  ~Fixture() { fs::remove_all(root); }

  ServiceConfig config() const { return {root / "sessions", data}; }

  json request(std::uint64_t seed = 3) const {
    return {{"candidates", "candidates.jsonl"},
            {"ground_truth", "gt.jsonl"},
            {"setting", "S3"},
            {"config", {{"seed", seed}, {"k_clusters", 5}, {"max_iterations", 20}}}};
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no eod::Error thrown");
  return ErrorCode::io_error;
}

// Answers every proposal with its majority ground-truth label.
std::string majority_for(const json& advance_response, const Dataset& data) {
  std::vector<std::string> labels;
  for (const auto& id : advance_response["proposal"]["cluster_members"])
    labels.push_back(*data[data.index_of(id.get<std::string>())].gt_class);
  return engine::majority_label(labels);
}

}  // namespace

TEST_CASE("create") {
  Fixture fx;
  SessionManager sm(fx.config());
  const auto h = sm.create(fx.request());
  CHECK(h["status"] == "running");
  CHECK(fs::exists(fx.root / "sessions" / h["session_id"].get<std::string>() / "checkpoint.json"));

  SUBCASE("same inputs give distinct ids and identical checkpoints") {
    const auto h2 = sm.create(fx.request());
    CHECK(h2["session_id"] != h["session_id"]);
    CHECK(sm.snapshot(h["session_id"]) == sm.snapshot(h2["session_id"]));
  }
  SUBCASE("errors") {
    auto bad = fx.request();
    bad["candidates"] = "missing.jsonl";
    CHECK(code_of([&] { sm.create(bad); }) == ErrorCode::not_found);
    bad = fx.request();
    bad["config"]["nu"] = 2.0;
    CHECK(code_of([&] { sm.create(bad); }) == ErrorCode::invalid_argument);
    bad = fx.request();
    bad["config"]["no_such_key"] = 1;
    CHECK(code_of([&] { sm.create(bad); }) == ErrorCode::invalid_argument);
    bad = fx.request();
    bad["bogus"] = 1;
    CHECK(code_of([&] { sm.create(bad); }) == ErrorCode::invalid_argument);

    svm::BinarySvmModel m;
    m.support_vectors = Matrix::Zero(1, 3);
    m.coef = {1.0};
    m.kernel.sigma = 1.0;
    svm::save_model(fx.data / "model3.json", m);
    bad = fx.request();
    bad["filter_model"] = "model3.json";
    CHECK(code_of([&] { sm.create(bad); }) == ErrorCode::dimension_mismatch);
  }
}

TEST_CASE("advance and label") {
  Fixture fx;
  SessionManager sm(fx.config());
  const std::string id = sm.create(fx.request())["session_id"];
  const auto data = load_dataset(fx.data / "candidates.jsonl", fx.data / "gt.jsonl");

  SUBCASE("fresh report has empty curves") {
    const auto r = sm.report(id);
    CHECK(r["iteration_curve"].empty());
    CHECK(r["iterations"] == 0);
  }

  const auto a = sm.advance(id);
  CHECK(a["finished"] == false);
  CHECK(a["status"] == "awaiting_label");
  CHECK(!a["proposal"]["cluster_members"].empty());
  CHECK(a["crop_uris"].size() == a["proposal"]["cluster_members"].size());
  CHECK(a["projection"]["points"].size() >= a["proposal"]["cluster_members"].size());
  CHECK(code_of([&] { sm.advance(id); }) == ErrorCode::state_conflict);
  CHECK(sm.current(id) == a);

  const std::string pid = a["proposal"]["proposal_id"];
  const std::size_t pool_before = sm.snapshot(id)["pool"].size();

  SUBCASE("label shrinks the pool and replays idempotently") {
    const auto r = sm.label(id, {{"proposal_id", pid}, {"label", "car"}}, std::string("k1"));
    CHECK(r["pool_size"].get<std::size_t>() < pool_before);
    CHECK(r["pool_size"].get<std::size_t>() == sm.snapshot(id)["pool"].size());
    const auto snap = sm.snapshot(id);
    CHECK(sm.label(id, {{"proposal_id", pid}, {"label", "car"}}, std::string("k1")) == r);
    CHECK(sm.snapshot(id) == snap);
    CHECK(code_of([&] { sm.label(id, {{"proposal_id", pid}, {"label", "bus"}}, std::string("k1")); }) ==
          ErrorCode::idempotency_conflict);
    CHECK(code_of([&] { sm.label(id, {{"proposal_id", pid}, {"label", "car"}}); }) == ErrorCode::state_conflict);
    CHECK(sm.report(id)["iteration_curve"].size() == 1);
  }
  SUBCASE("skip advances t with the pool unchanged") {
    const auto r = sm.label(id, {{"proposal_id", pid}, {"label", "skip"}});
    CHECK(r["t"] == 1);
    CHECK(r["pool_size"] == pool_before);
    CHECK(r["status"] == "running");
  }
  SUBCASE("bad submissions leave the session waiting") {
    CHECK(code_of([&] { sm.label(id, {{"proposal_id", "p9-x"}, {"label", "car"}}); }) == ErrorCode::stale_proposal);
    CHECK(code_of([&] { sm.label(id, {{"proposal_id", pid}, {"label", " car"}}); }) == ErrorCode::malformed_label);
    CHECK(code_of([&] { sm.label(id, {{"label", "car"}}); }) == ErrorCode::invalid_argument);
    CHECK(sm.snapshot(id)["status"] == "awaiting_label");
  }
  SUBCASE("reads have no side effects") {
    const auto dir = fx.root / "sessions" / id;
    const auto before = slurp(dir / "checkpoint.json");
    const auto snap = sm.snapshot(id);
    sm.report(id);
    sm.current(id);
    sm.snapshot(id);
    CHECK(sm.snapshot(id) == snap);
    CHECK(slurp(dir / "checkpoint.json") == before);
    CHECK(json::parse(before) == snap);
  }
  SUBCASE("n labels give an n-point curve") {
    std::string p = pid;
    json cur = a;
    for (int n = 1; n <= 4; ++n) {
      sm.label(id, {{"proposal_id", p}, {"label", majority_for(cur, data)}});
      CHECK(sm.report(id)["iteration_curve"].size() == static_cast<std::size_t>(n));
      cur = sm.advance(id);
      if (cur["finished"] == true) break;
      p = cur["proposal"]["proposal_id"];
    }
  }
}

TEST_CASE("finished notice") {
  Fixture fx;
  SessionManager sm(fx.config());
  auto req = fx.request();
  req["config"]["max_iterations"] = 1;
  const std::string id = sm.create(req)["session_id"];
  const auto a = sm.advance(id);
  sm.label(id, {{"proposal_id", a["proposal"]["proposal_id"]}, {"label", "skip"}});
  const auto done = sm.advance(id);
  CHECK(done["finished"] == true);
  CHECK(done["status"] == "finished");
  CHECK(sm.advance(id)["finished"] == true);
}

TEST_CASE("sessions survive a restart and match the in-process run") {
  Fixture fx;
  const auto data = std::make_shared<const Dataset>(load_dataset(fx.data / "candidates.jsonl", fx.data / "gt.jsonl"));
  std::string id;
  {
    SessionManager sm(fx.config());
    id = sm.create(fx.request(9))["session_id"];
    for (int i = 0; i < 3; ++i) {
      const auto a = sm.advance(id);
      sm.label(id, {{"proposal_id", a["proposal"]["proposal_id"]}, {"label", majority_for(a, *data)}});
    }
    sm.advance(id);  // left awaiting a label
  }
  SessionManager sm(fx.config());
  CHECK(sm.snapshot(id)["status"] == "awaiting_label");
  for (json a = sm.current(id);;) {
    sm.label(id, {{"proposal_id", a["proposal"]["proposal_id"]}, {"label", majority_for(a, *data)}});
    a = sm.advance(id);
    if (a["finished"] == true) break;
  }
  CHECK(sm.create(fx.request())["session_id"] != id);

  const auto snap = sm.snapshot(id);
  auto eng = engine::Engine::create(data, split_from_json(snap["split"]),
                                    engine::engine_config_from_json(snap["config"]));
  engine::MajorityVoteOracle oracle;
  eng.run(oracle);
  CHECK(experiment::history_jsonl(eng.state().history) == slurp(fx.root / "sessions" / id / "history.jsonl"));
  CHECK(eng.checkpoint() == snap);
}

TEST_CASE("HTTP front end") {
  Fixture fx;
  SessionManager sm(fx.config());
  HttpServer server(sm);
  const int port = server.bind("127.0.0.1", 0);
  std::thread th([&] { server.listen(); });
  httplib::Client cli("127.0.0.1", port);
  for (int i = 0; i < 100 && !server.running(); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(10));

  auto created = cli.Post("/sessions", fx.request().dump(), "application/json");
  REQUIRE(created);
  CHECK(created->status == 201);
  const std::string id = json::parse(created->body)["session_id"];

  auto a = cli.Post("/sessions/" + id + "/advance", "", "application/json");
  CHECK(a->status == 200);
  const auto prop = json::parse(a->body);
  auto again = cli.Post("/sessions/" + id + "/advance", "", "application/json");
  CHECK(again->status == 409);
  CHECK(json::parse(again->body)["code"] == "state_conflict");
  CHECK(again->get_header_value("Content-Type") == "application/problem+json");

  const json body = {{"proposal_id", prop["proposal"]["proposal_id"]}, {"label", "car"}};
  httplib::Headers key{{"Idempotency-Key", "abc"}};
  auto l1 = cli.Post("/sessions/" + id + "/label", key, body.dump(), "application/json");
  auto l2 = cli.Post("/sessions/" + id + "/label", key, body.dump(), "application/json");
  CHECK(l1->status == 200);
  CHECK(l1->body == l2->body);

  CHECK(cli.Get("/sessions/" + id)->status == 200);
  CHECK(cli.Get("/sessions/" + id + "/report")->status == 200);
  CHECK(json::parse(cli.Get("/sessions/" + id + "/clusters/current")->body)["code"] == "state_conflict");
  auto missing = cli.Get("/sessions/nope");
  CHECK(missing->status == 404);
  CHECK(json::parse(missing->body)["code"] == "not_found");
  auto bad = cli.Post("/sessions", "{not json", "application/json");
  CHECK(bad->status == 400);
  CHECK(json::parse(bad->body)["code"] == "parse_error");
  CHECK(cli.Get("/sessions/" + id + "/crops/c000000")->status == 404);

  server.stop();
  th.join();
}

TEST_CASE("crop route serves local files") {
  Fixture fx;
  auto cands = load_candidates(fx.data / "candidates.jsonl");
  cands[0].crop_uri = "crops/a.png";
  cands[1].crop_uri = "https://example.org/b.png";
  save_candidates(fx.data / "candidates.jsonl", cands);
  fs::create_directories(fx.data / "crops");
  std::ofstream(fx.data / "crops" / "a.png") << "PNGDATA";
  SessionManager sm(fx.config());
  const std::string id = sm.create(fx.request())["session_id"];
  CHECK(sm.crop_file(id, cands[0].id).has_value());
  CHECK(!sm.crop_file(id, cands[1].id).has_value());
  CHECK(!sm.crop_file(id, cands[2].id).has_value());
}
