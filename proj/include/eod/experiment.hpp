#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

#include <json.hpp>

#include "eod/dataset.hpp"
#include "eod/engine/engine.hpp"
#include "eod/evaluation.hpp"
#include "eod/svm/binary_svm.hpp"

namespace eod::experiment {

// Filter trained on a random stratified sample of the annotated candidates
// (Object vs "no_object"), used when no model file is supplied.
struct FilterTrainConfig {
  double fraction = 0.2;
  std::size_t max_samples = 2000;
  double sigma = 100.0;
  double c = 3.0;
};

// Sorted row indices: the same fraction of objects and of "no_object"
// candidates (at least one of each), capped at max_samples overall.
std::vector<std::size_t> stratified_sample(const Dataset& data, double fraction, std::size_t max_samples,
                                           std::uint64_t seed);

// Object / "no_object" training candidates, with scene features appended
// when requested.
std::vector<Candidate> filter_training_set(const Dataset& data, std::span<const std::size_t> rows, bool use_scene);

svm::BinarySvmModel train_filter_on_sample(const Dataset& data, const FilterTrainConfig& cfg, bool use_scene,
                                           std::uint64_t seed);

struct RunSpec {
  engine::EngineConfig config;
  double holdout_frac = 0.5;
  double refill_frac = 0.4;
  std::optional<DatasetSplit> split;  // fixed split for every run instead of a seeded one
  std::optional<svm::BinarySvmModel> filter;
  FilterTrainConfig filter_train;
};

struct RunResult {
  std::size_t run = 0;
  DatasetSplit split;
  nlohmann::json checkpoint;  // final session state
  std::vector<engine::HistoryRecord> history;
  engine::FilterAudit filter;
  eval::EvaluationReport report;
};

// Sub-seeds per run: "split", "session" and "filter" streams of the master
// seed, indexed by run.
RunResult run_once(std::shared_ptr<const Dataset> data, const RunSpec& spec, std::uint64_t master_seed,
                   std::size_t run_index);

nlohmann::json aggregate(const std::vector<RunResult>& runs);
std::string aggregate_curve_csv(const std::vector<RunResult>& runs);

// Writes history.jsonl, report.json, per_class.csv, iterations.csv,
// split.json, filter.json and checkpoint.json into `dir`.
void write_run(const std::filesystem::path& dir, const RunResult& r);

std::string history_jsonl(std::span<const engine::HistoryRecord> history);
std::vector<engine::HistoryRecord> read_history_jsonl(const std::filesystem::path& path);

}  // namespace eod::experiment
