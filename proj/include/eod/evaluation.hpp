#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "eod/dataset.hpp"
#include "eod/engine/engine.hpp"

namespace eod::eval {

struct ClassScore {
  double precision = 0;
  double recall = 0;
  std::size_t support = 0;    // truth instances of the class
  std::size_t predicted = 0;  // discoveries carrying the class label
  std::size_t correct = 0;
};

struct MacroScores {
  double precision_m = 0;
  double recall_m = 0;
  double f_measure = 0;
  std::map<std::string, ClassScore> per_class;
};

// Macro precision / recall / F over the object classes of `truth`.
// "no_object" is not a class: pairs where either side is "no_object" only
// matter through the other side's class. Discovered ids must appear in truth.
// A class nobody predicted has precision 0.
MacroScores macro_f_measure(const std::map<std::string, std::string>& discovered,
                            const std::map<std::string, std::string>& truth);

struct DetectionReport {
  double no_pct = 0;
  std::optional<double> dr;  // absent without ground truth
  std::size_t n_candidates = 0;  // after per-image truncation
  std::size_t n_gt = 0;
};

// Keeps the top_w candidates per image by objectness (stable on ties), then
// counts candidates hitting no GT box and GT boxes hit by some candidate.
DetectionReport detection_metrics(std::span<const Candidate> cands,
                                  std::span<const GroundTruthObject> gts,
                                  const MatchConfig& cfg = {}, std::size_t top_w = 50);

struct EvaluationReport {
  MacroScores final_scores;
  std::vector<double> iteration_curve;  // cumulative F after each iteration
  std::map<std::string, std::size_t> first_discovery;     // class -> iteration
  std::map<std::string, std::size_t> clusters_per_class;  // includes no_object
  std::vector<double> unique_gt_curve;  // unique GT objects discovered, fraction, per iteration
  double unique_gt_discovered_pct = 0;  // fraction in [0, 1]
  std::size_t iterations = 0;
};

// Replays the history log against the truth map. When `gts` is given,
// "unique GT objects discovered" counts GT objects (in the truth map's
// images) matched by some candidate carrying its correct label.
EvaluationReport discovery_report(std::span<const engine::HistoryRecord> history,
                                  const std::map<std::string, std::string>& truth,
                                  const Dataset* data = nullptr, const MatchConfig& cfg = {});

nlohmann::json to_json(const MacroScores& m);
nlohmann::json to_json(const EvaluationReport& r);
nlohmann::json to_json(const DetectionReport& r);

// Per-class and per-iteration tables as CSV.
std::string per_class_csv(const EvaluationReport& r);
std::string iteration_csv(const EvaluationReport& r);

struct Summary {
  double mean = 0;
  double std = 0;  // population standard deviation over runs
  std::vector<double> values;
};

Summary summarize(std::vector<double> values);
nlohmann::json to_json(const Summary& s);

}  // namespace eod::eval
