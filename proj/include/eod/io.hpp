#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "eod/dataset.hpp"

namespace eod {

using json = nlohmann::json;

struct Diagnostic {
  std::size_t line = 0;  // 1-based; 0 for file-level problems
  std::string message;
};

template <class T>
struct ParseResult {
  std::vector<T> items;
  std::vector<Diagnostic> errors;

  bool ok() const { return errors.empty(); }
};

// Lenient readers: collect every problem with its line number.
ParseResult<Candidate> parse_candidates(std::istream& in);
ParseResult<GroundTruthObject> parse_ground_truth(std::istream& in);

// Strict loaders: throw eod::Error (parse_error) naming the first bad line.
std::vector<Candidate> load_candidates(const std::filesystem::path& path);
std::vector<GroundTruthObject> load_ground_truth(const std::filesystem::path& path);

// Candidates, annotated against the ground truth when a GT file is given.
Dataset load_dataset(const std::filesystem::path& candidates,
                     const std::optional<std::filesystem::path>& ground_truth,
                     const MatchConfig& cfg = {});

void write_candidates(std::ostream& out, const std::vector<Candidate>& cands);
void write_ground_truth(std::ostream& out, const std::vector<GroundTruthObject>& gts);
void save_candidates(const std::filesystem::path& path, const std::vector<Candidate>& cands);
void save_ground_truth(const std::filesystem::path& path,
                       const std::vector<GroundTruthObject>& gts);

json to_json(const BoundingBox& box);
BoundingBox box_from_json(const json& j);
json to_json(const Candidate& c);
json to_json(const GroundTruthObject& gt);
json to_json(const DatasetSplit& split);
DatasetSplit split_from_json(const json& j);
json to_json(const DatasetStats& stats);

json read_json_file(const std::filesystem::path& path);
// Writes and fsyncs a temporary file, then renames it over `path`.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);
void write_json_file(const std::filesystem::path& path, const json& j);

}  // namespace eod
