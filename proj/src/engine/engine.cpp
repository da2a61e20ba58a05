#include "eod/engine/engine.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <unordered_set>

#include "eod/error.hpp"
#include "eod/io.hpp"
#include "eod/numerics/pca.hpp"
#include "eod/svm/one_class_svm.hpp"

namespace eod::engine {

namespace {

std::uint64_t fnv1a(std::uint64_t h, std::string_view s) {
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;

std::string hex16(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

std::optional<double> opt_double(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<double>();
}

SelectionReport selection_from_json(const nlohmann::json& j) {
  SelectionReport s;
  s.mu = j.at("mu");
  s.sigma = j.at("sigma");
  s.threshold = j.at("threshold");
  s.omega1 = j.at("omega1");
  s.omega2 = j.at("omega2");
  s.t = j.at("t");
  s.m = j.at("m");
  s.pool_size = j.at("pool_size");
  return s;
}

ClusterProposal proposal_from_json(const nlohmann::json& j) {
  ClusterProposal p;
  p.proposal_id = j.at("proposal_id");
  p.t = j.at("t");
  p.cluster_members = j.at("cluster_members").get<std::vector<std::string>>();
  p.refill_members = j.at("refill_members").get<std::vector<std::string>>();
  p.silhouette_mean = j.at("silhouette_mean");
  p.cluster_index = j.at("cluster_index");
  p.k_used = j.at("k_used");
  for (const auto& c : j.at("all_clusters")) {
    ClusterSummary s;
    s.index = c.at("index");
    s.n_easy = c.at("n_easy");
    s.n_refill = c.at("n_refill");
    s.silhouette_mean = opt_double(c, "silhouette_mean");
    p.all_clusters.push_back(s);
  }
  return p;
}

nlohmann::json to_json(const FilterAudit& f) {
  return {{"applied", f.applied},
          {"removed_ids", f.removed_ids},
          {"pool_before", f.pool_before},
          {"pool_after", f.pool_after},
          {"no_fraction_before", opt(f.no_fraction_before)},
          {"no_fraction_after", opt(f.no_fraction_after)}};
}

FilterAudit filter_from_json(const nlohmann::json& j) {
  FilterAudit f;
  f.applied = j.at("applied");
  f.removed_ids = j.at("removed_ids").get<std::vector<std::string>>();
  f.pool_before = j.at("pool_before");
  f.pool_after = j.at("pool_after");
  f.no_fraction_before = opt_double(j, "no_fraction_before");
  f.no_fraction_after = opt_double(j, "no_fraction_after");
  return f;
}

nlohmann::json to_json(const PendingIteration& p) {
  return {{"selection", to_json(p.selection)}, {"easy_ids", p.easy_ids},
          {"refill_ids", p.refill_ids},        {"proposal", to_json(p.proposal)},
          {"pool_fingerprint", p.pool_fingerprint}, {"warnings", p.warnings}};
}

PendingIteration pending_from_json(const nlohmann::json& j) {
  PendingIteration p;
  p.selection = selection_from_json(j.at("selection"));
  p.easy_ids = j.at("easy_ids").get<std::vector<std::string>>();
  p.refill_ids = j.at("refill_ids").get<std::vector<std::string>>();
  p.proposal = proposal_from_json(j.at("proposal"));
  p.pool_fingerprint = j.at("pool_fingerprint");
  p.warnings = j.at("warnings").get<std::vector<std::string>>();
  return p;
}

std::optional<double> no_fraction(const Dataset& data, const std::vector<std::string>& ids) {
  if (ids.empty()) return std::nullopt;
  std::size_t no = 0;
  for (const auto& id : ids) {
    const auto& c = data[data.index_of(id)];
    if (!c.gt_class) return std::nullopt;
    no += !c.is_object();
  }
  return static_cast<double>(no) / static_cast<double>(ids.size());
}

void remove_ids(std::vector<std::string>& pool, const std::vector<std::string>& gone) {
  const std::unordered_set<std::string> g(gone.begin(), gone.end());
  std::erase_if(pool, [&](const std::string& id) { return g.count(id) > 0; });
}

}  // namespace

std::string to_string(Status s) {
  switch (s) {
    case Status::running: return "running";
    case Status::awaiting_label: return "awaiting_label";
    case Status::finished: return "finished";
  }
  return "?";
}

Status parse_status(const std::string& s) {
  if (s == "running") return Status::running;
  if (s == "awaiting_label") return Status::awaiting_label;
  if (s == "finished") return Status::finished;
  fail(ErrorCode::parse_error, "unknown session status '" + s + "'");
}

nlohmann::json to_json(const SelectionReport& s) {
  return {{"mu", s.mu},         {"sigma", s.sigma}, {"threshold", s.threshold}, {"omega1", s.omega1},
          {"omega2", s.omega2}, {"t", s.t},         {"m", s.m},                 {"pool_size", s.pool_size}};
}

nlohmann::json to_json(const ClusterProposal& p) {
  nlohmann::json clusters = nlohmann::json::array();
  for (const auto& c : p.all_clusters)
    clusters.push_back({{"index", c.index},
                        {"n_easy", c.n_easy},
                        {"n_refill", c.n_refill},
                        {"silhouette_mean", opt(c.silhouette_mean)}});
  return {{"proposal_id", p.proposal_id},
          {"t", p.t},
          {"cluster_members", p.cluster_members},
          {"refill_members", p.refill_members},
          {"silhouette_mean", p.silhouette_mean},
          {"cluster_index", p.cluster_index},
          {"k_used", p.k_used},
          {"all_clusters", clusters}};
}

nlohmann::json to_json(const HistoryRecord& r) {
  return {{"t", r.t},
          {"selection", to_json(r.selection)},
          {"refill_ids", r.refill_ids},
          {"proposal", to_json(r.proposal)},
          {"answer", to_json(r.answer)},
          {"labeled_ids", r.labeled_ids},
          {"expanded_ids", r.expanded_ids},
          {"expansion_count", r.expanded_ids.size()},
          {"expansion_note", r.expansion_note},
          {"pool_size_after", r.pool_size_after},
          {"warnings", r.warnings}};
}

HistoryRecord history_record_from_json(const nlohmann::json& j) {
  try {
    HistoryRecord r;
    r.t = j.at("t");
    r.selection = selection_from_json(j.at("selection"));
    r.refill_ids = j.at("refill_ids").get<std::vector<std::string>>();
    r.proposal = proposal_from_json(j.at("proposal"));
    const auto& a = j.at("answer");
    r.answer = a.at("kind") == "skip" ? OracleAnswer::skip()
                                      : OracleAnswer::with_label(a.at("label").get<std::string>());
    r.labeled_ids = j.at("labeled_ids").get<std::vector<std::string>>();
    r.expanded_ids = j.at("expanded_ids").get<std::vector<std::string>>();
    r.expansion_note = j.at("expansion_note");
    r.pool_size_after = j.at("pool_size_after");
    r.warnings = j.at("warnings").get<std::vector<std::string>>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::parse_error, std::string("history record: ") + e.what());
  }
}

nlohmann::json to_json(const SessionState& s) {
  nlohmann::json history = nlohmann::json::array();
  for (const auto& r : s.history) history.push_back(to_json(r));
  nlohmann::json bag = nlohmann::json::object();
  for (const auto& [cls, ids] : s.refill_bag) bag[cls] = ids;
  return {{"format_version", kCheckpointVersion},
          {"config", to_json(s.config)},
          {"split", eod::to_json(s.split)},
          {"filter", to_json(s.filter)},
          {"pool", s.pool},
          {"refill_bag", bag},
          {"discovered", s.discovered},
          {"t", s.t},
          {"history", history},
          {"rng_state", s.rng_state},
          {"status", to_string(s.status)},
          {"pending", s.pending ? to_json(*s.pending) : nlohmann::json(nullptr)},
          {"dataset_fingerprint", s.dataset_fingerprint}};
}

std::string dataset_fingerprint(const Dataset& data) {
  std::uint64_t h = kFnvOffset;
  for (const auto& c : data.candidates()) {
    h = fnv1a(h, c.id);
    h = fnv1a(h, "|" + std::to_string(c.features.size()) + "|" +
                     std::to_string(c.scene_features ? c.scene_features->size() : 0) + "\n");
  }
  return hex16(h);
}

std::map<std::string, std::string> pool_truth(const Dataset& data, const DatasetSplit& split) {
  std::map<std::string, std::string> truth;
  for (const auto& id : split.unlabeled_pool_ids) {
    const auto& c = data[data.index_of(id)];
    require(c.gt_class.has_value(), ErrorCode::invalid_argument,
            "candidate '" + id + "' is not annotated");
    truth[id] = *c.gt_class;
  }
  return truth;
}

Engine::Engine(std::shared_ptr<const Dataset> data, SessionState state)
    : data_(std::move(data)), state_(std::move(state)) {}

Engine Engine::create(std::shared_ptr<const Dataset> data, const DatasetSplit& split,
                      EngineConfig config, const svm::BinarySvmModel* filter) {
  require(data != nullptr, ErrorCode::invalid_argument, "engine: no dataset");
  config.validate();
  validate_split(split, data->candidates());

  SessionState s;
  s.config = config;
  s.split = split;
  s.dataset_fingerprint = dataset_fingerprint(*data);
  for (const auto& id : split.refill_bag_ids) s.refill_bag[*(*data)[data->index_of(id)].gt_class].push_back(id);

  std::vector<std::size_t> pool_idx;
  for (const auto& id : split.unlabeled_pool_ids) pool_idx.push_back(data->index_of(id));
  std::sort(pool_idx.begin(), pool_idx.end());
  for (auto i : pool_idx) s.pool.push_back((*data)[i].id);

  Engine e(std::move(data), std::move(s));
  auto& st = e.state_;
  e.build_base_features();

  st.filter.pool_before = st.pool.size();
  st.filter.no_fraction_before = no_fraction(*e.data_, st.pool);
  if (config.use_filter) {
    require(filter != nullptr, ErrorCode::invalid_argument, "engine: use_filter set but no filter model");
    require(filter->dim() == e.feature_dim(), ErrorCode::dimension_mismatch,
            "engine: filter model expects dimension " + std::to_string(filter->dim()) + ", features have " +
                std::to_string(e.feature_dim()));
    st.filter.applied = true;
    std::vector<std::string> kept;
    for (const auto& id : st.pool) {
      const auto row = e.features_.row(static_cast<Eigen::Index>(e.data_->index_of(id)));
      if (filter->decision({row.data(), static_cast<std::size_t>(row.size())}) >= 0)
        kept.push_back(id);
      else
        st.filter.removed_ids.push_back(id);
    }
    st.pool = std::move(kept);
  }
  st.filter.pool_after = st.pool.size();
  st.filter.no_fraction_after = no_fraction(*e.data_, st.pool);
  if (config.use_pca) e.apply_pca();

  if (!st.config.omega2) {
    double sigma0 = 0;
    if (!st.pool.empty()) {
      std::vector<double> scores;
      for (const auto& id : st.pool) scores.push_back((*e.data_)[e.data_->index_of(id)].objectness);
      sigma0 = select_easiest(scores, 0, {}).sigma;
    }
    st.config.omega2 = 0.05 * sigma0;
  }

  e.rng_ = Rng(derive_seed(config.seed, "session"));
  st.rng_state = e.rng_.state();
  if (st.pool.empty()) e.finish();
  return e;
}

Engine Engine::restore(std::shared_ptr<const Dataset> data, const nlohmann::json& j) {
  require(data != nullptr, ErrorCode::invalid_argument, "engine: no dataset");
  SessionState s;
  try {
    require(j.value("format_version", 0) == kCheckpointVersion, ErrorCode::parse_error,
            "checkpoint: unsupported format_version");
    s.config = engine_config_from_json(j.at("config"));
    require(s.config.omega2.has_value(), ErrorCode::parse_error, "checkpoint: omega2 not resolved");
    s.split = split_from_json(j.at("split"));
    s.filter = filter_from_json(j.at("filter"));
    s.pool = j.at("pool").get<std::vector<std::string>>();
    for (const auto& [cls, ids] : j.at("refill_bag").items()) s.refill_bag[cls] = ids.get<std::vector<std::string>>();
    s.discovered = j.at("discovered").get<std::map<std::string, std::string>>();
    s.t = j.at("t");
    for (const auto& r : j.at("history")) s.history.push_back(history_record_from_json(r));
    s.rng_state = j.at("rng_state");
    s.status = parse_status(j.at("status"));
    if (!j.at("pending").is_null()) s.pending = pending_from_json(j.at("pending"));
    s.dataset_fingerprint = j.at("dataset_fingerprint");
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::parse_error, std::string("checkpoint: ") + e.what());
  }
  require(s.dataset_fingerprint == dataset_fingerprint(*data), ErrorCode::invalid_argument,
          "checkpoint was written for a different dataset");
  require((s.status == Status::awaiting_label) == s.pending.has_value(), ErrorCode::parse_error,
          "checkpoint: pending iteration does not match status");

  Engine e(std::move(data), std::move(s));
  e.build_base_features();
  if (e.state_.config.use_pca) e.apply_pca();
  e.rng_.restore(e.state_.rng_state);
  return e;
}

void Engine::build_base_features() {
  const auto& cands = data_->candidates();
  std::vector<std::vector<double>> rows;
  rows.reserve(cands.size());
  if (state_.config.use_scene) {
    for (const auto& c : concat_scene_features(cands)) rows.push_back(c.features);
  } else {
    for (const auto& c : cands) rows.push_back(c.features);
  }
  features_ = rows_to_matrix(rows);
}

void Engine::apply_pca() {
  // PCA is fitted once, on the filtered initial pool plus the initial bag.
  std::set<std::string> removed(state_.filter.removed_ids.begin(), state_.filter.removed_ids.end());
  std::vector<std::size_t> fit_rows;
  for (const auto& id : state_.split.unlabeled_pool_ids)
    if (!removed.count(id)) fit_rows.push_back(data_->index_of(id));
  for (const auto& id : state_.split.refill_bag_ids) fit_rows.push_back(data_->index_of(id));
  std::sort(fit_rows.begin(), fit_rows.end());
  if (fit_rows.size() < 2) return;
  Matrix fit(static_cast<Eigen::Index>(fit_rows.size()), features_.cols());
  for (std::size_t i = 0; i < fit_rows.size(); ++i)
    fit.row(static_cast<Eigen::Index>(i)) = features_.row(static_cast<Eigen::Index>(fit_rows[i]));
  const auto model = pca_fit(fit, PcaTarget::variance(state_.config.pca_variance));
  if (model.rank() == 0) return;
  features_ = pca_transform(model, features_);
}

Matrix Engine::rows_of(const std::vector<std::string>& ids) const {
  Matrix m(static_cast<Eigen::Index>(ids.size()), features_.cols());
  for (std::size_t i = 0; i < ids.size(); ++i)
    m.row(static_cast<Eigen::Index>(i)) = features_.row(static_cast<Eigen::Index>(data_->index_of(ids[i])));
  return m;
}

std::string Engine::pool_fingerprint() const {
  std::uint64_t h = fnv1a(kFnvOffset, std::to_string(state_.t) + ":");
  for (const auto& id : state_.pool) h = fnv1a(fnv1a(h, id), "\n");
  return hex16(h);
}

void Engine::finish() {
  state_.status = Status::finished;
  state_.pending.reset();
}

const ClusterProposal* Engine::current_proposal() const {
  return state_.pending ? &state_.pending->proposal : nullptr;
}

nlohmann::json Engine::checkpoint() const { return to_json(state_); }

std::pair<std::vector<std::string>, Matrix> Engine::iteration_points() const {
  require(state_.pending.has_value(), ErrorCode::state_conflict, "no iteration in progress");
  std::vector<std::string> ids = state_.pending->easy_ids;
  ids.insert(ids.end(), state_.pending->refill_ids.begin(), state_.pending->refill_ids.end());
  return {ids, rows_of(ids)};
}

std::optional<ClusterProposal> Engine::advance() {
  require(state_.status != Status::awaiting_label, ErrorCode::state_conflict,
          "a proposal is awaiting a label");
  if (state_.status == Status::finished) return std::nullopt;
  if (state_.pool.empty() || state_.t >= state_.config.max_iterations) {
    finish();
    return std::nullopt;
  }

  const std::size_t t = state_.t + 1;
  std::vector<double> scores;
  scores.reserve(state_.pool.size());
  for (const auto& id : state_.pool) scores.push_back((*data_)[data_->index_of(id)].objectness);
  const EasinessWeights w{state_.config.omega1, *state_.config.omega2};
  const auto sel = select_easiest(scores, t, w);
  if (sel.selected.empty()) {
    finish();
    return std::nullopt;
  }

  PendingIteration p;
  p.selection = {sel.mu, sel.sigma, sel.threshold, w.omega1, w.omega2, t, sel.selected.size(), state_.pool.size()};
  for (auto i : sel.selected) p.easy_ids.push_back(state_.pool[i]);
  if (state_.config.use_refill)
    p.refill_ids = draw_refill(state_.refill_bag, p.easy_ids.size(), state_.config.refill_pct, rng_);

  const auto core = propose_best_cluster(rows_of(p.easy_ids), rows_of(p.refill_ids), state_.config.k_clusters);
  auto& prop = p.proposal;
  prop.t = t;
  for (auto i : core.easy_members) prop.cluster_members.push_back(p.easy_ids[i]);
  for (auto i : core.refill_members) prop.refill_members.push_back(p.refill_ids[i]);
  prop.silhouette_mean = core.silhouette_mean;
  prop.cluster_index = core.best;
  prop.k_used = core.k_used;
  prop.all_clusters = core.clusters;
  std::uint64_t h = kFnvOffset;
  for (const auto& id : prop.cluster_members) h = fnv1a(fnv1a(h, id), "\n");
  prop.proposal_id = "p" + std::to_string(t) + "-" + hex16(h);
  p.pool_fingerprint = pool_fingerprint();
  p.warnings = core.warnings;

  state_.pending = std::move(p);
  state_.status = Status::awaiting_label;
  state_.rng_state = rng_.state();
  return state_.pending->proposal;
}

void Engine::expand(const std::string& label, const std::vector<std::string>& members,
                    const std::vector<std::string>& remaining_easy, HistoryRecord& rec) {
  if (members.size() < 2) {
    rec.expansion_note = "skipped: cluster has fewer than 2 members";
    return;
  }
  if (remaining_easy.empty()) {
    rec.expansion_note = "skipped: no remaining easy samples";
    return;
  }
  try {
    svm::OneClassParams params;
    params.nu = state_.config.nu;
    params.kernel.sigma = state_.config.expansion_sigma;
    const auto trained = svm::train_one_class(rows_of(members), params);
    if (trained.status == svm::SolverStatus::iteration_cap)
      rec.warnings.push_back("expansion: one-class solver stopped at the iteration cap");
    const auto pred = svm::predict_one_class(trained.model, rows_of(remaining_easy));
    for (std::size_t i = 0; i < remaining_easy.size(); ++i)
      if (pred.inside[i]) rec.expanded_ids.push_back(remaining_easy[i]);
  } catch (const Error& e) {
    rec.expansion_note = std::string("failed: ") + e.what();
    rec.expanded_ids.clear();
    return;
  }
  for (const auto& id : rec.expanded_ids) {
    state_.discovered[id] = label;
    state_.refill_bag[label].push_back(id);
  }
  remove_ids(state_.pool, rec.expanded_ids);
}

const HistoryRecord& Engine::submit(const std::string& proposal_id, const OracleAnswer& answer) {
  require(state_.status == Status::awaiting_label && state_.pending.has_value(), ErrorCode::state_conflict,
          "no proposal is awaiting a label");
  const auto& p = *state_.pending;
  require(proposal_id == p.proposal.proposal_id, ErrorCode::stale_proposal,
          "proposal '" + proposal_id + "' is not the current proposal");
  require(pool_fingerprint() == p.pool_fingerprint, ErrorCode::stale_proposal,
          "the pool changed since the proposal was made");
  if (!answer.is_skip()) {
    const auto checked = parse_answer(answer.label);
    require(!checked.is_skip(), ErrorCode::malformed_label, "'skip' is reserved");
  }

  HistoryRecord rec;
  rec.t = p.proposal.t;
  rec.selection = p.selection;
  rec.refill_ids = p.refill_ids;
  rec.proposal = p.proposal;
  rec.answer = answer;
  rec.warnings = p.warnings;

  if (answer.is_skip()) {
    rec.expansion_note = "skipped: no label";
  } else {
    const auto& members = p.proposal.cluster_members;
    rec.labeled_ids = members;
    for (const auto& id : members) state_.discovered[id] = answer.label;
    remove_ids(state_.pool, members);
    if (answer.is_no_object()) {
      rec.expansion_note = "skipped: no_object label";
    } else {
      auto& bag = state_.refill_bag[answer.label];
      bag.insert(bag.end(), members.begin(), members.end());
      const std::unordered_set<std::string> in_cluster(members.begin(), members.end());
      std::vector<std::string> remaining;
      for (const auto& id : p.easy_ids)
        if (!in_cluster.count(id)) remaining.push_back(id);
      expand(answer.label, members, remaining, rec);
    }
  }

  rec.pool_size_after = state_.pool.size();
  state_.t = rec.t;
  state_.history.push_back(std::move(rec));
  state_.pending.reset();
  state_.status = (state_.t >= state_.config.max_iterations || state_.pool.empty()) ? Status::finished
                                                                                      : Status::running;
  state_.rng_state = rng_.state();
  return state_.history.back();
}

const HistoryRecord* Engine::step(Oracle& oracle) {
  const auto proposal = advance();
  if (!proposal) return nullptr;
  const auto answer = oracle.answer(*proposal, *data_);
  return &submit(proposal->proposal_id, answer);
}

void Engine::run(Oracle& oracle) {
  while (step(oracle) != nullptr) {
  }
}

}  // namespace eod::engine
