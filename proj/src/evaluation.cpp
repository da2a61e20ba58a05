#include "eod/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>
#include <unordered_map>

#include "eod/error.hpp"

namespace eod::eval {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

MacroScores macro_f_measure(const std::map<std::string, std::string>& discovered,
                            const std::map<std::string, std::string>& truth) {
  require(!truth.empty(), ErrorCode::invalid_argument, "macro_f_measure: empty truth");
  MacroScores m;
  for (const auto& [id, cls] : truth)
    if (cls != kNoObject) m.per_class[cls].support++;
  for (const auto& [id, label] : discovered) {
    auto t = truth.find(id);
    require(t != truth.end(), ErrorCode::not_found, "macro_f_measure: no truth for '" + id + "'");
    auto c = m.per_class.find(label);
    if (c == m.per_class.end()) continue;  // no_object, or a label outside the class set
    c->second.predicted++;
    if (t->second == label) c->second.correct++;
  }
  if (m.per_class.empty()) return m;
  for (auto& [cls, s] : m.per_class) {
    s.recall = static_cast<double>(s.correct) / static_cast<double>(s.support);
    s.precision = s.predicted ? static_cast<double>(s.correct) / static_cast<double>(s.predicted) : 0.0;
    m.precision_m += s.precision;
    m.recall_m += s.recall;
  }
  m.precision_m /= static_cast<double>(m.per_class.size());
  m.recall_m /= static_cast<double>(m.per_class.size());
  const double denom = m.precision_m + m.recall_m;
  m.f_measure = denom > 0 ? 2 * m.precision_m * m.recall_m / denom : 0.0;
  return m;
}

DetectionReport detection_metrics(std::span<const Candidate> cands,
                                  std::span<const GroundTruthObject> gts, const MatchConfig& cfg,
                                  std::size_t top_w) {
  std::map<std::string, std::vector<std::size_t>> by_image;
  for (std::size_t i = 0; i < cands.size(); ++i) by_image[cands[i].image_id].push_back(i);
  std::unordered_map<std::string, std::vector<std::size_t>> gt_by_image;
  for (std::size_t g = 0; g < gts.size(); ++g) gt_by_image[gts[g].image_id].push_back(g);

  DetectionReport r;
  r.n_gt = gts.size();
  std::vector<bool> gt_hit(gts.size(), false);
  std::size_t misses = 0;
  for (auto& [image, idx] : by_image) {
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return cands[a].objectness > cands[b].objectness; });
    if (top_w > 0 && idx.size() > top_w) idx.resize(top_w);
    const auto git = gt_by_image.find(image);
    for (auto i : idx) {
      ++r.n_candidates;
      bool hit = false;
      if (git != gt_by_image.end())
        for (auto g : git->second)
          if (overlap_score(cands[i].box, gts[g].box) > cfg.os_threshold) {
            hit = true;
            gt_hit[g] = true;
          }
      misses += !hit;
    }
  }
  r.no_pct = r.n_candidates ? 100.0 * static_cast<double>(misses) / static_cast<double>(r.n_candidates) : 0.0;
  if (!gts.empty())
    r.dr = 100.0 * static_cast<double>(std::count(gt_hit.begin(), gt_hit.end(), true)) /
           static_cast<double>(gts.size());
  return r;
}

EvaluationReport discovery_report(std::span<const engine::HistoryRecord> history,
                                  const std::map<std::string, std::string>& truth, const Dataset* data,
                                  const MatchConfig& cfg) {
  EvaluationReport r;
  r.iterations = history.size();

  // For each pool object candidate: the GT objects of its own class it hits.
  std::map<std::string, std::vector<std::size_t>> hits;
  std::set<std::size_t> discoverable;
  if (data) {
    std::unordered_map<std::string, std::vector<std::size_t>> gt_by_image;
    const auto& gts = data->ground_truth();
    for (std::size_t g = 0; g < gts.size(); ++g) gt_by_image[gts[g].image_id].push_back(g);
    for (const auto& [id, cls] : truth) {
      if (cls == kNoObject) continue;
      const auto& c = (*data)[data->index_of(id)];
      auto it = gt_by_image.find(c.image_id);
      if (it == gt_by_image.end()) continue;
      for (auto g : it->second)
        if (gts[g].class_name == cls && overlap_score(c.box, gts[g].box) > cfg.os_threshold) {
          hits[id].push_back(g);
          discoverable.insert(g);
        }
    }
  }

  std::map<std::string, std::string> discovered;
  std::set<std::size_t> found_gt;
  for (const auto& rec : history) {
    require(rec.t >= 1, ErrorCode::parse_error, "history record with t = 0");
    if (!rec.answer.is_skip()) {
      const auto& label = rec.answer.label;
      r.clusters_per_class[label]++;
      if (label != kNoObject && !r.first_discovery.count(label)) r.first_discovery[label] = rec.t;
      for (const auto* ids : {&rec.labeled_ids, &rec.expanded_ids})
        for (const auto& id : *ids) {
          discovered[id] = label;
          auto t = truth.find(id);
          if (t != truth.end() && t->second == label)
            if (auto h = hits.find(id); h != hits.end()) found_gt.insert(h->second.begin(), h->second.end());
        }
    }
    r.iteration_curve.push_back(macro_f_measure(discovered, truth).f_measure);
    r.unique_gt_curve.push_back(discoverable.empty() ? 0.0
                                                     : static_cast<double>(found_gt.size()) /
                                                           static_cast<double>(discoverable.size()));
  }
  r.final_scores = macro_f_measure(discovered, truth);
  r.unique_gt_discovered_pct = r.unique_gt_curve.empty() ? 0.0 : r.unique_gt_curve.back();
  return r;
}

nlohmann::json to_json(const MacroScores& m) {
  nlohmann::json per = nlohmann::json::object();
  for (const auto& [cls, s] : m.per_class)
    per[cls] = {{"precision", s.precision},
                {"recall", s.recall},
                {"support", s.support},
                {"predicted", s.predicted},
                {"correct", s.correct}};
  return {{"precision_m", m.precision_m}, {"recall_m", m.recall_m}, {"f_measure", m.f_measure}, {"per_class", per}};
}

nlohmann::json to_json(const EvaluationReport& r) {
  auto j = to_json(r.final_scores);
  j["iterations"] = r.iterations;
  j["iteration_curve"] = r.iteration_curve;
  j["unique_gt_curve"] = r.unique_gt_curve;
  j["unique_gt_discovered_pct"] = r.unique_gt_discovered_pct;
  j["first_discovery"] = r.first_discovery;
  j["clusters_per_class"] = r.clusters_per_class;
  std::size_t discovered_classes = 0;
  for (const auto& [cls, s] : r.final_scores.per_class) discovered_classes += s.correct > 0;
  j["classes_discovered"] = discovered_classes;
  return j;
}

nlohmann::json to_json(const DetectionReport& r) {
  return {{"no_pct", r.no_pct},
          {"dr", r.dr ? nlohmann::json(*r.dr) : nlohmann::json(nullptr)},
          {"n_candidates", r.n_candidates},
          {"n_gt", r.n_gt}};
}

std::string per_class_csv(const EvaluationReport& r) {
  std::ostringstream out;
  out << "class,precision,recall,support,predicted,correct,first_discovery,clusters\n";
  std::set<std::string> names;
  for (const auto& [cls, _] : r.final_scores.per_class) names.insert(cls);
  for (const auto& [cls, _] : r.clusters_per_class) names.insert(cls);
  for (const auto& cls : names) {
    const auto s = r.final_scores.per_class.find(cls);
    const auto fd = r.first_discovery.find(cls);
    const auto cl = r.clusters_per_class.find(cls);
    out << cls << ',';
    if (s != r.final_scores.per_class.end())
      out << num(s->second.precision) << ',' << num(s->second.recall) << ',' << s->second.support << ','
          << s->second.predicted << ',' << s->second.correct << ',';
    else
      out << ",,,,,";
    out << (fd != r.first_discovery.end() ? std::to_string(fd->second) : "") << ','
        << (cl != r.clusters_per_class.end() ? cl->second : 0) << '\n';
  }
  return out.str();
}

std::string iteration_csv(const EvaluationReport& r) {
  std::ostringstream out;
  out << "t,f_measure,unique_gt_fraction\n";
  for (std::size_t i = 0; i < r.iteration_curve.size(); ++i)
    out << i + 1 << ',' << num(r.iteration_curve[i]) << ',' << num(r.unique_gt_curve[i]) << '\n';
  return out.str();
}

Summary summarize(std::vector<double> values) {
  Summary s;
  s.values = std::move(values);
  if (s.values.empty()) return s;
  for (double v : s.values) s.mean += v;
  s.mean /= static_cast<double>(s.values.size());
  double ss = 0;
  for (double v : s.values) ss += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(ss / static_cast<double>(s.values.size()));
  return s;
}

nlohmann::json to_json(const Summary& s) { return {{"mean", s.mean}, {"std", s.std}, {"values", s.values}}; }

}  // namespace eod::eval
