#pragma once

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "eod/dataset.hpp"

namespace eod::engine {

inline constexpr const char* kSkipToken = "skip";

struct OracleAnswer {
  enum class Kind { label, skip };
  Kind kind = Kind::skip;
  std::string label;  // set when kind == label; may be "no_object"

  static OracleAnswer skip() { return {}; }
  static OracleAnswer with_label(std::string l) { return {Kind::label, std::move(l)}; }
  bool is_skip() const { return kind == Kind::skip; }
  bool is_no_object() const { return kind == Kind::label && label == kNoObject; }

  friend bool operator==(const OracleAnswer&, const OracleAnswer&) = default;
};

// "skip" maps to a skip answer; anything else must be a label token: non-empty,
// at most 128 bytes, no surrounding whitespace, no control characters.
// Throws malformed_label otherwise.
OracleAnswer parse_answer(const std::string& token);

nlohmann::json to_json(const OracleAnswer& a);
OracleAnswer answer_from_json(const nlohmann::json& j);

struct ClusterProposal;

class Oracle {
 public:
  virtual ~Oracle() = default;
  virtual OracleAnswer answer(const ClusterProposal& proposal, const Dataset& data) = 0;
};

// Modal ground-truth class of the labels; ties prefer object classes over
// "no_object", then the lexicographically smallest name.
std::string majority_label(std::span<const std::string> labels);

// Answers with the majority ground-truth class of the proposal's unlabeled
// members. Members must be annotated.
class MajorityVoteOracle : public Oracle {
 public:
  OracleAnswer answer(const ClusterProposal& proposal, const Dataset& data) override;
};

}  // namespace eod::engine
