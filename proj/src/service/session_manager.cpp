#include "eod/service/session_manager.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>

#include "eod/error.hpp"
#include "eod/evaluation.hpp"
#include "eod/experiment.hpp"
#include "eod/io.hpp"
#include "eod/numerics/pca.hpp"
#include "eod/rng.hpp"
#include "eod/svm/model_io.hpp"

namespace eod::service {

namespace fs = std::filesystem;

struct SessionManager::Session {
  std::mutex mu;
  std::string id;
  fs::path dir;
  json meta;
  std::shared_ptr<const Dataset> data;
  std::optional<engine::Engine> engine;
  // key -> {"request": ..., "response": ...}
  json idempotency = json::object();
};

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

bool valid_id(const std::string& id) {
  if (id.empty() || id.size() > 64) return false;
  for (char c : id)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') return false;
  return true;
}

bool is_remote(const std::string& uri) {
  return uri.rfind("http://", 0) == 0 || uri.rfind("https://", 0) == 0;
}

// Replays a stored response for a repeated key; rejects a key reused for a
// different request.
std::optional<json> replay(const json& store, const std::optional<std::string>& key, const json& request) {
  if (!key) return std::nullopt;
  auto it = store.find(*key);
  if (it == store.end()) return std::nullopt;
  require(it->at("request") == request, ErrorCode::idempotency_conflict,
          "idempotency key '" + *key + "' was used for a different request");
  return it->at("response");
}

}  // namespace

SessionManager::SessionManager(ServiceConfig cfg) : cfg_(std::move(cfg)) {
  fs::create_directories(cfg_.sessions_dir);
  for (const auto& entry : fs::directory_iterator(cfg_.sessions_dir)) {
    const auto name = entry.path().filename().string();
    if (entry.is_directory() && name.size() > 1 && name[0] == 's') {
      try {
        next_id_ = std::max(next_id_, std::stoul(name.substr(1)) + 1);
      } catch (const std::exception&) {
      }
    }
  }
}

SessionManager::~SessionManager() = default;

fs::path SessionManager::resolve(const std::string& p) const {
  const fs::path path(p);
  return fs::absolute(path.is_absolute() ? path : cfg_.data_dir / path).lexically_normal();
}

std::shared_ptr<const Dataset> SessionManager::dataset(const fs::path& cands, const std::optional<fs::path>& gt) {
  const std::string key = cands.string() + "|" + (gt ? gt->string() : "");
  {
    std::lock_guard lock(mu_);
    if (auto it = datasets_.find(key); it != datasets_.end()) return it->second;
  }
  require(fs::exists(cands), ErrorCode::not_found, "dataset not found: " + cands.string());
  require(!gt || fs::exists(*gt), ErrorCode::not_found, "ground truth not found: " + gt->string());
  auto data = std::make_shared<const Dataset>(load_dataset(cands, gt));
  std::lock_guard lock(mu_);
  return datasets_.emplace(key, data).first->second;
}

json SessionManager::create(const json& request) {
  require(request.is_object(), ErrorCode::invalid_argument, "create: body must be a JSON object");
  static const std::set<std::string> known{"candidates", "ground_truth", "split", "split_params", "setting",
                                           "config", "filter_model", "filter_train"};
  for (const auto& [k, v] : request.items())
    require(known.count(k) > 0, ErrorCode::invalid_argument, "create: unknown field '" + k + "'");
  require(request.contains("candidates") && request["candidates"].is_string(), ErrorCode::invalid_argument,
          "create: 'candidates' path required");

  json resolved = request;
  const auto cands = resolve(request["candidates"]);
  resolved["candidates"] = cands.string();
  std::optional<fs::path> gt;
  if (request.contains("ground_truth")) {
    gt = resolve(request.at("ground_truth").get<std::string>());
    resolved["ground_truth"] = gt->string();
  }

  engine::EngineConfig cfg;
  try {
    cfg = engine::engine_config_from_json(request.value("config", json::object()));
    if (request.contains("setting"))
      cfg = engine::apply_setting(cfg, engine::parse_setting(request["setting"].get<std::string>()));
    cfg.validate();
  } catch (const json::exception& e) {
    fail(ErrorCode::invalid_argument, std::string("create: bad config: ") + e.what());
  }

  auto data = dataset(cands, gt);

  DatasetSplit split;
  try {
    if (request.contains("split")) {
      const auto& s = request["split"];
      if (s.is_string()) {
        const auto p = resolve(s.get<std::string>());
        require(fs::exists(p), ErrorCode::not_found, "split not found: " + p.string());
        split = split_from_json(read_json_file(p));
        resolved["split"] = p.string();
      } else {
        split = split_from_json(s);
      }
    } else {
      const auto sp = request.value("split_params", json::object());
      split = make_split(data->candidates(), sp.value("holdout_frac", 0.5), sp.value("refill_frac", 0.4),
                         sp.value("seed", derive_seed(cfg.seed, "split")));
      resolved["split"] = to_json(split);
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::invalid_argument, std::string("create: bad split: ") + e.what());
  }
  validate_split(split, data->candidates());

  const std::size_t base_dim =
      data->feature_dim() +
      (cfg.use_scene && !data->candidates().empty() && data->candidates()[0].scene_features
           ? data->candidates()[0].scene_features->size()
           : 0);
  std::optional<svm::BinarySvmModel> filter;
  if (request.contains("filter_model")) {
    const auto p = resolve(request["filter_model"].get<std::string>());
    require(fs::exists(p), ErrorCode::not_found, "filter model not found: " + p.string());
    filter = svm::load_binary_model(p);
    require(filter->dim() == base_dim, ErrorCode::dimension_mismatch,
            "filter model expects dimension " + std::to_string(filter->dim()) + ", dataset features have " +
                std::to_string(base_dim));
    resolved["filter_model"] = p.string();
  } else if (cfg.use_filter) {
    experiment::FilterTrainConfig ft;
    const auto j = request.value("filter_train", json::object());
    ft.fraction = j.value("fraction", ft.fraction);
    ft.max_samples = j.value("max_samples", ft.max_samples);
    ft.sigma = j.value("sigma", ft.sigma);
    ft.c = j.value("c", ft.c);
    filter = experiment::train_filter_on_sample(*data, ft, cfg.use_scene, derive_seed(cfg.seed, "filter"));
  }

  auto eng = engine::Engine::create(data, split, cfg, cfg.use_filter && filter ? &*filter : nullptr);

  auto s = std::make_shared<Session>();
  {
    std::lock_guard lock(mu_);
    char buf[16];
    std::snprintf(buf, sizeof buf, "s%06zu", next_id_++);
    s->id = buf;
  }
  s->dir = cfg_.sessions_dir / s->id;
  s->data = data;
  s->engine.emplace(std::move(eng));
  s->meta = {{"session_id", s->id}, {"created_at", utc_now()}, {"request", resolved}};
  fs::create_directories(s->dir);
  if (filter) svm::save_model(s->dir / "filter_model.json", *filter);
  {
    std::lock_guard lock(s->mu);
    persist(*s);
  }
  {
    std::lock_guard lock(mu_);
    sessions_[s->id] = s;
  }
  return {{"session_id", s->id},
          {"created_at", s->meta["created_at"]},
          {"config", engine::to_json(s->engine->state().config)},
          {"status", engine::to_string(s->engine->state().status)}};
}

void SessionManager::persist(Session& s) {
  const auto& st = s.engine->state();
  s.meta["status"] = engine::to_string(st.status);
  s.meta["t"] = st.t;
  write_json_file(s.dir / "checkpoint.json", s.engine->checkpoint());
  write_text_atomic(s.dir / "history.jsonl", experiment::history_jsonl(st.history));
  write_json_file(s.dir / "idempotency.json", s.idempotency);
  write_json_file(s.dir / "meta.json", s.meta);
}

std::shared_ptr<SessionManager::Session> SessionManager::get(const std::string& id) {
  require(valid_id(id), ErrorCode::not_found, "unknown session '" + id + "'");
  {
    std::lock_guard lock(mu_);
    if (auto it = sessions_.find(id); it != sessions_.end()) return it->second;
  }
  const auto dir = cfg_.sessions_dir / id;
  require(fs::exists(dir / "checkpoint.json") && fs::exists(dir / "meta.json"), ErrorCode::not_found,
          "unknown session '" + id + "'");
  auto s = std::make_shared<Session>();
  s->id = id;
  s->dir = dir;
  s->meta = read_json_file(dir / "meta.json");
  const auto& req = s->meta.at("request");
  std::optional<fs::path> gt;
  if (req.contains("ground_truth")) gt = fs::path(req["ground_truth"].get<std::string>());
  s->data = dataset(req.at("candidates").get<std::string>(), gt);
  s->engine.emplace(engine::Engine::restore(s->data, read_json_file(dir / "checkpoint.json")));
  if (fs::exists(dir / "idempotency.json")) s->idempotency = read_json_file(dir / "idempotency.json");
  std::lock_guard lock(mu_);
  return sessions_.emplace(id, s).first->second;
}

json SessionManager::snapshot(const std::string& id) {
  auto s = get(id);
  std::lock_guard lock(s->mu);
  return s->engine->checkpoint();
}

json SessionManager::proposal_payload(Session& s) {
  const auto* p = s.engine->current_proposal();
  require(p != nullptr, ErrorCode::state_conflict, "no proposal is pending");

  json crops = json::array();
  for (const auto& m : p->cluster_members) {
    const auto& c = s.data->candidates()[s.data->index_of(m)];
    if (c.crop_uri && is_remote(*c.crop_uri)) crops.push_back(*c.crop_uri);
    else if (crop_file_of(s, c)) crops.push_back("/sessions/" + s.id + "/crops/" + m);
    else crops.push_back(nullptr);
  }

  const auto [ids, x] = s.engine->iteration_points();
  std::set<std::string> members(p->cluster_members.begin(), p->cluster_members.end());
  std::set<std::string> refill_members(p->refill_members.begin(), p->refill_members.end());
  std::set<std::string> refill(s.engine->state().pending->refill_ids.begin(),
                               s.engine->state().pending->refill_ids.end());
  Matrix xy = Matrix::Zero(x.rows(), 2);
  json ratios = json::array();
  if (x.rows() >= 2) {
    const auto pca = pca_fit(x, PcaTarget::fixed(std::min<std::size_t>(2, static_cast<std::size_t>(x.rows()) - 1)));
    const Matrix proj = pca_transform(pca, x);
    xy.leftCols(proj.cols()) = proj;
    for (std::size_t i = 0; i < pca.rank(); ++i) ratios.push_back(pca.explained_ratio(i));
  }
  json points = json::array();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const char* role = members.count(ids[i])          ? "member"
                       : refill_members.count(ids[i]) ? "refill_member"
                       : refill.count(ids[i])         ? "refill"
                                                      : "easy";
    points.push_back({{"id", ids[i]},
                      {"x", xy(static_cast<Eigen::Index>(i), 0)},
                      {"y", xy(static_cast<Eigen::Index>(i), 1)},
                      {"role", role}});
  }
  return {{"finished", false},
          {"status", engine::to_string(s.engine->state().status)},
          {"proposal", engine::to_json(*p)},
          {"selection", engine::to_json(s.engine->state().pending->selection)},
          {"crop_uris", crops},
          {"projection", {{"points", points}, {"explained_ratio", ratios}}}};
}

json SessionManager::advance(const std::string& id, const std::optional<std::string>& key) {
  auto s = get(id);
  std::lock_guard lock(s->mu);
  const json request = {{"op", "advance"}};
  if (auto r = replay(s->idempotency, key, request)) return *r;

  const auto proposal = s->engine->advance();
  json response;
  if (proposal) {
    response = proposal_payload(*s);
  } else {
    const auto& st = s->engine->state();
    response = {{"finished", true}, {"status", engine::to_string(st.status)}, {"t", st.t},
                {"pool_size", st.pool.size()}};
  }
  if (key) s->idempotency[*key] = {{"request", request}, {"response", response}};
  persist(*s);
  return response;
}

json SessionManager::label(const std::string& id, const json& body, const std::optional<std::string>& key) {
  auto s = get(id);
  std::lock_guard lock(s->mu);
  require(body.is_object() && body.contains("proposal_id") && body["proposal_id"].is_string() &&
              body.contains("label") && body["label"].is_string(),
          ErrorCode::invalid_argument, "label: body needs string fields 'proposal_id' and 'label'");
  const json request = {{"op", "label"}, {"proposal_id", body["proposal_id"]}, {"label", body["label"]}};
  if (auto r = replay(s->idempotency, key, request)) return *r;

  const auto answer = engine::parse_answer(body["label"].get<std::string>());
  const auto& rec = s->engine->submit(body["proposal_id"].get<std::string>(), answer);
  const auto& st = s->engine->state();
  json response = {{"record", engine::to_json(rec)},
                   {"status", engine::to_string(st.status)},
                   {"t", st.t},
                   {"pool_size", st.pool.size()},
                   {"discovered", st.discovered.size()}};
  if (key) s->idempotency[*key] = {{"request", request}, {"response", response}};
  persist(*s);
  return response;
}

json SessionManager::report(const std::string& id) {
  auto s = get(id);
  std::lock_guard lock(s->mu);
  const auto& st = s->engine->state();
  if (!s->data->annotated())
    return {{"ground_truth", false}, {"iterations", st.history.size()}, {"discovered", st.discovered.size()}};
  return eval::to_json(eval::discovery_report(st.history, engine::pool_truth(*s->data, st.split), s->data.get()));
}

json SessionManager::current(const std::string& id) {
  auto s = get(id);
  std::lock_guard lock(s->mu);
  return proposal_payload(*s);
}

std::optional<fs::path> SessionManager::crop_file(const std::string& id, const std::string& candidate_id) {
  auto s = get(id);
  std::lock_guard lock(s->mu);
  const auto idx = s->data->find(candidate_id);
  if (!idx) return std::nullopt;
  return crop_file_of(*s, s->data->candidates()[*idx]);
}

std::optional<fs::path> SessionManager::crop_file_of(const Session& s, const Candidate& c) const {
  if (!c.crop_uri || is_remote(*c.crop_uri)) return std::nullopt;
  std::string uri = *c.crop_uri;
  if (uri.rfind("file://", 0) == 0) uri = uri.substr(7);
  fs::path p(uri);
  if (p.is_relative()) p = fs::path(s.meta.at("request").at("candidates").get<std::string>()).parent_path() / p;
  std::error_code ec;
  if (!fs::is_regular_file(p, ec)) return std::nullopt;
  return p;
}

}  // namespace eod::service
