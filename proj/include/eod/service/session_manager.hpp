#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include <json.hpp>

#include "eod/dataset.hpp"
#include "eod/engine/engine.hpp"

namespace eod::service {

using json = nlohmann::json;

struct ServiceConfig {
  std::filesystem::path sessions_dir = "sessions";
  // Relative dataset, split and model paths in create requests resolve here.
  std::filesystem::path data_dir = ".";
};

// Sessions live in `sessions_dir/<id>/` as checkpoint.json, history.jsonl,
// meta.json and idempotency.json. Every mutation is written there before the
// call returns, and sessions found on disk are reloaded on first use.
//
// Create request:
//   {"candidates": path, "ground_truth": path?,
//    "split": path | split object?, "split_params": {holdout_frac, refill_frac, seed}?,
//    "setting": "S2".."S6"?, "config": EngineConfig?,
//    "filter_model": path?, "filter_train": {fraction, max_samples, sigma, c}?}
// Without "split" a split is drawn from split_params (seed defaults to the
// config seed). With use_filter and no model file, a filter is trained on a
// sample using the "filter" sub-seed of the config seed.
class SessionManager {
 public:
  explicit SessionManager(ServiceConfig cfg);
  ~SessionManager();

  json create(const json& request);
  json snapshot(const std::string& id);
  json advance(const std::string& id, const std::optional<std::string>& idempotency_key = {});
  // Body: {"proposal_id": str, "label": token}; the token "skip" skips.
  json label(const std::string& id, const json& body,
             const std::optional<std::string>& idempotency_key = {});
  json report(const std::string& id);
  json current(const std::string& id);
  // Local file behind a candidate's crop_uri, if it exists.
  std::optional<std::filesystem::path> crop_file(const std::string& id, const std::string& candidate_id);

  const ServiceConfig& config() const { return cfg_; }

 private:
  struct Session;
  std::shared_ptr<Session> get(const std::string& id);
  std::shared_ptr<const Dataset> dataset(const std::filesystem::path& cands,
                                         const std::optional<std::filesystem::path>& gt);
  std::filesystem::path resolve(const std::string& p) const;
  void persist(Session& s);
  json proposal_payload(Session& s);
  std::optional<std::filesystem::path> crop_file_of(const Session& s, const Candidate& c) const;

  ServiceConfig cfg_;
  std::mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::map<std::string, std::shared_ptr<const Dataset>> datasets_;
  std::size_t next_id_ = 1;
};

}  // namespace eod::service
