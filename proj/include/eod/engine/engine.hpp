#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "eod/dataset.hpp"
#include "eod/engine/config.hpp"
#include "eod/engine/oracle.hpp"
#include "eod/engine/steps.hpp"
#include "eod/numerics/matrix.hpp"
#include "eod/rng.hpp"
#include "eod/svm/binary_svm.hpp"

namespace eod::engine {

inline constexpr int kCheckpointVersion = 1;

enum class Status { running, awaiting_label, finished };
std::string to_string(Status s);
Status parse_status(const std::string& s);

struct SelectionReport {
  double mu = 0;
  double sigma = 0;
  double threshold = 0;
  double omega1 = 0;
  double omega2 = 0;
  std::size_t t = 0;
  std::size_t m = 0;  // easy samples selected
  std::size_t pool_size = 0;
};

struct ClusterProposal {
  std::string proposal_id;
  std::size_t t = 0;                         // iteration this proposal belongs to
  std::vector<std::string> cluster_members;  // unlabeled pool ids
  std::vector<std::string> refill_members;
  double silhouette_mean = 0;
  std::size_t cluster_index = 0;
  std::size_t k_used = 0;
  std::vector<ClusterSummary> all_clusters;
};

struct HistoryRecord {
  std::size_t t = 0;
  SelectionReport selection;
  std::vector<std::string> refill_ids;
  ClusterProposal proposal;
  OracleAnswer answer;
  std::vector<std::string> labeled_ids;
  std::vector<std::string> expanded_ids;
  std::string expansion_note;  // why expansion was skipped or failed; empty otherwise
  std::size_t pool_size_after = 0;
  std::vector<std::string> warnings;
};

// Filter audit numbers; NO fractions are present when the pool is annotated.
struct FilterAudit {
  bool applied = false;
  std::vector<std::string> removed_ids;
  std::size_t pool_before = 0;
  std::size_t pool_after = 0;
  std::optional<double> no_fraction_before;
  std::optional<double> no_fraction_after;
};

// Work in flight between advance() and submit().
struct PendingIteration {
  SelectionReport selection;
  std::vector<std::string> easy_ids;
  std::vector<std::string> refill_ids;
  ClusterProposal proposal;
  std::string pool_fingerprint;
  std::vector<std::string> warnings;
};

struct SessionState {
  EngineConfig config;  // omega2 always resolved
  DatasetSplit split;
  FilterAudit filter;
  std::vector<std::string> pool;  // remaining unlabeled ids, dataset order
  RefillBag refill_bag;
  std::map<std::string, std::string> discovered;
  std::size_t t = 0;
  std::vector<HistoryRecord> history;
  std::string rng_state;
  Status status = Status::running;
  std::optional<PendingIteration> pending;
  std::string dataset_fingerprint;
};

nlohmann::json to_json(const SelectionReport& s);
nlohmann::json to_json(const ClusterProposal& p);
nlohmann::json to_json(const HistoryRecord& r);
HistoryRecord history_record_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SessionState& s);

// Hash of the candidate ids and feature dimensions, used to tie checkpoints
// to their dataset.
std::string dataset_fingerprint(const Dataset& data);

// One discovery session. Methods are not thread-safe; callers serialize
// access to a given engine.
class Engine {
 public:
  // The filter model is required when config.use_filter is set.
  static Engine create(std::shared_ptr<const Dataset> data, const DatasetSplit& split,
                       EngineConfig config, const svm::BinarySvmModel* filter = nullptr);
  static Engine restore(std::shared_ptr<const Dataset> data, const nlohmann::json& checkpoint);

  // Runs selection, refill and clustering for the next iteration and waits
  // for a label. Returns nothing (and finishes) when the pool is empty or no
  // easy sample remains.
  std::optional<ClusterProposal> advance();

  // Applies the answer to the pending proposal, expands it, and closes the
  // iteration.
  const HistoryRecord& submit(const std::string& proposal_id, const OracleAnswer& answer);

  // advance + oracle + submit. Returns nothing once finished.
  const HistoryRecord* step(Oracle& oracle);
  void run(Oracle& oracle);

  const SessionState& state() const { return state_; }
  const Dataset& data() const { return *data_; }
  const ClusterProposal* current_proposal() const;
  nlohmann::json checkpoint() const;

  // Feature-space rows of the pending iteration (easy samples then refill)
  // with their ids; used for display projections.
  std::pair<std::vector<std::string>, Matrix> iteration_points() const;

  std::size_t feature_dim() const { return static_cast<std::size_t>(features_.cols()); }

 private:
  Engine(std::shared_ptr<const Dataset> data, SessionState state);
  void build_base_features();
  void apply_pca();
  Matrix rows_of(const std::vector<std::string>& ids) const;
  std::string pool_fingerprint() const;
  void finish();
  void expand(const std::string& label, const std::vector<std::string>& members,
              const std::vector<std::string>& remaining_easy, HistoryRecord& rec);

  std::shared_ptr<const Dataset> data_;
  SessionState state_;
  Rng rng_;
  Matrix features_;  // one row per dataset candidate, in the session's feature space
};

// Maps each id of the session's initial unlabeled pool to its ground-truth
// class. Requires an annotated dataset.
std::map<std::string, std::string> pool_truth(const Dataset& data, const DatasetSplit& split);

}  // namespace eod::engine
