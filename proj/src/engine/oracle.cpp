#include "eod/engine/oracle.hpp"

#include <map>

#include "eod/engine/engine.hpp"
#include "eod/error.hpp"

namespace eod::engine {

OracleAnswer parse_answer(const std::string& token) {
  if (token == kSkipToken) return OracleAnswer::skip();
  require(!token.empty(), ErrorCode::malformed_label, "label must not be empty");
  require(token.size() <= 128, ErrorCode::malformed_label, "label longer than 128 bytes");
  require(token.front() != ' ' && token.back() != ' ', ErrorCode::malformed_label,
          "label has surrounding whitespace");
  for (unsigned char ch : token)
    require(ch >= 0x20 && ch != 0x7f, ErrorCode::malformed_label, "label contains control characters");
  return OracleAnswer::with_label(token);
}

nlohmann::json to_json(const OracleAnswer& a) {
  if (a.is_skip()) return {{"kind", "skip"}};
  return {{"kind", "label"}, {"label", a.label}};
}

OracleAnswer answer_from_json(const nlohmann::json& j) {
  require(j.is_object(), ErrorCode::malformed_label, "answer: expected an object");
  const std::string kind = j.value("kind", std::string("label"));
  if (kind == "skip") return OracleAnswer::skip();
  require(kind == "label", ErrorCode::malformed_label, "answer: kind must be 'label' or 'skip'");
  require(j.contains("label") && j["label"].is_string(), ErrorCode::malformed_label,
          "answer: missing string 'label'");
  auto a = parse_answer(j["label"].get<std::string>());
  require(!a.is_skip(), ErrorCode::malformed_label, "answer: 'skip' is reserved; use kind 'skip'");
  return a;
}

std::string majority_label(std::span<const std::string> labels) {
  require(!labels.empty(), ErrorCode::invalid_argument, "majority vote over no labels");
  std::map<std::string, std::size_t> counts;
  for (const auto& l : labels) ++counts[l];
  const std::string* best = nullptr;
  std::size_t best_n = 0;
  // Map order is lexicographic, so the first strict winner is the smallest name.
  for (const auto& [name, n] : counts) {
    const bool better = n > best_n || (n == best_n && *best == kNoObject && name != kNoObject);
    if (!best || better) {
      best = &name;
      best_n = n;
    }
  }
  return *best;
}

OracleAnswer MajorityVoteOracle::answer(const ClusterProposal& proposal, const Dataset& data) {
  std::vector<std::string> labels;
  labels.reserve(proposal.cluster_members.size());
  for (const auto& id : proposal.cluster_members) {
    const auto& c = data[data.index_of(id)];
    require(c.gt_class.has_value(), ErrorCode::invalid_argument,
            "majority vote: candidate '" + id + "' is not annotated");
    labels.push_back(*c.gt_class);
  }
  return OracleAnswer::with_label(majority_label(labels));
}

}  // namespace eod::engine
