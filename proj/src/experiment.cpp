#include "eod/experiment.hpp"

#include <fstream>

#include "eod/error.hpp"
#include "eod/io.hpp"
#include "eod/rng.hpp"
#include "eod/svm/filter.hpp"

namespace eod::experiment {

std::vector<std::size_t> stratified_sample(const Dataset& data, double fraction, std::size_t max_samples,
                                           std::uint64_t seed) {
  require(fraction > 0 && fraction <= 1, ErrorCode::invalid_argument, "sample fraction must be in (0, 1]");
  require(data.annotated(), ErrorCode::invalid_argument, "sampling needs annotated candidates");
  std::vector<std::size_t> obj, no;
  for (std::size_t i = 0; i < data.size(); ++i) (data[i].is_object() ? obj : no).push_back(i);
  require(!obj.empty() && !no.empty(), ErrorCode::single_class,
          "filter training needs both objects and no_object candidates");

  Rng rng(seed);
  rng.shuffle(std::span(obj));
  rng.shuffle(std::span(no));
  const double total = static_cast<double>(data.size());
  const double frac = std::min(fraction, static_cast<double>(max_samples) / total);
  auto take = [&](std::vector<std::size_t>& v) {
    const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(frac * static_cast<double>(v.size()))));
    v.resize(std::min(n, v.size()));
  };
  take(obj);
  take(no);
  std::vector<std::size_t> idx = obj;
  idx.insert(idx.end(), no.begin(), no.end());
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<Candidate> filter_training_set(const Dataset& data, std::span<const std::size_t> rows, bool use_scene) {
  std::vector<Candidate> sample;
  for (auto i : rows) sample.push_back(data[i]);
  if (use_scene) sample = concat_scene_features(std::move(sample));
  return sample;
}

svm::BinarySvmModel train_filter_on_sample(const Dataset& data, const FilterTrainConfig& cfg, bool use_scene,
                                           std::uint64_t seed) {
  const auto sample =
      filter_training_set(data, stratified_sample(data, cfg.fraction, cfg.max_samples, seed), use_scene);
  svm::BinarySvmParams params;
  params.c = cfg.c;
  params.kernel.sigma = cfg.sigma;
  return svm::train_binary_svm(svm::feature_matrix(sample), svm::object_labels(sample), params).model;
}

RunResult run_once(std::shared_ptr<const Dataset> data, const RunSpec& spec, std::uint64_t master_seed,
                   std::size_t run_index) {
  RunResult r;
  r.run = run_index;
  r.split = spec.split ? *spec.split
                       : make_split(data->candidates(), spec.holdout_frac, spec.refill_frac,
                                    derive_seed(master_seed, "split", run_index));
  auto cfg = spec.config;
  cfg.seed = derive_seed(master_seed, "session", run_index);

  std::optional<svm::BinarySvmModel> filter = spec.filter;
  if (cfg.use_filter && !filter)
    filter = train_filter_on_sample(*data, spec.filter_train, cfg.use_scene,
                                    derive_seed(master_seed, "filter", run_index));

  auto eng = engine::Engine::create(data, r.split, cfg, filter ? &*filter : nullptr);
  engine::MajorityVoteOracle oracle;
  eng.run(oracle);

  r.checkpoint = eng.checkpoint();
  r.history = eng.state().history;
  r.filter = eng.state().filter;
  r.report = eval::discovery_report(r.history, engine::pool_truth(*data, r.split), data.get());
  return r;
}

nlohmann::json aggregate(const std::vector<RunResult>& runs) {
  std::vector<double> f, p, rc, classes, unique, iters, no_before, no_after;
  for (const auto& r : runs) {
    f.push_back(r.report.final_scores.f_measure);
    p.push_back(r.report.final_scores.precision_m);
    rc.push_back(r.report.final_scores.recall_m);
    std::size_t n = 0;
    for (const auto& [cls, s] : r.report.final_scores.per_class) n += s.correct > 0;
    classes.push_back(static_cast<double>(n));
    unique.push_back(r.report.unique_gt_discovered_pct);
    iters.push_back(static_cast<double>(r.report.iterations));
    if (r.filter.no_fraction_before) no_before.push_back(*r.filter.no_fraction_before);
    if (r.filter.no_fraction_after) no_after.push_back(*r.filter.no_fraction_after);
  }
  nlohmann::json run_ids = nlohmann::json::array();
  for (const auto& r : runs) run_ids.push_back(r.run);
  return {{"runs", run_ids},
          {"f_measure", to_json(eval::summarize(f))},
          {"precision_m", to_json(eval::summarize(p))},
          {"recall_m", to_json(eval::summarize(rc))},
          {"classes_discovered", to_json(eval::summarize(classes))},
          {"unique_gt_discovered_pct", to_json(eval::summarize(unique))},
          {"iterations", to_json(eval::summarize(iters))},
          {"pool_no_fraction_before_filter", to_json(eval::summarize(no_before))},
          {"pool_no_fraction_after_filter", to_json(eval::summarize(no_after))}};
}

std::string aggregate_curve_csv(const std::vector<RunResult>& runs) {
  // Runs that finish early hold their last value.
  std::size_t len = 0;
  for (const auto& r : runs) len = std::max(len, r.report.iteration_curve.size());
  std::string out = "t,f_mean,f_std,unique_gt_mean\n";
  for (std::size_t t = 0; t < len; ++t) {
    std::vector<double> f, u;
    for (const auto& r : runs) {
      const auto& c = r.report.iteration_curve;
      const auto& uc = r.report.unique_gt_curve;
      if (c.empty()) {
        f.push_back(0);
        u.push_back(0);
      } else {
        f.push_back(c[std::min(t, c.size() - 1)]);
        u.push_back(uc[std::min(t, uc.size() - 1)]);
      }
    }
    const auto fs = eval::summarize(f);
    const auto us = eval::summarize(u);
    char buf[128];
    std::snprintf(buf, sizeof buf, "%zu,%.10g,%.10g,%.10g\n", t + 1, fs.mean, fs.std, us.mean);
    out += buf;
  }
  return out;
}

std::string history_jsonl(std::span<const engine::HistoryRecord> history) {
  std::string out;
  for (const auto& r : history) out += engine::to_json(r).dump() + "\n";
  return out;
}

std::vector<engine::HistoryRecord> read_history_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::io_error, "cannot open " + path.string());
  std::vector<engine::HistoryRecord> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      out.push_back(engine::history_record_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::parse_error, path.string() + ":" + std::to_string(n) + ": " + e.what());
    } catch (const Error& e) {
      fail(ErrorCode::parse_error, path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

void write_run(const std::filesystem::path& dir, const RunResult& r) {
  std::filesystem::create_directories(dir);
  write_text_atomic(dir / "history.jsonl", history_jsonl(r.history));
  write_json_file(dir / "report.json", eval::to_json(r.report));
  write_text_atomic(dir / "per_class.csv", eval::per_class_csv(r.report));
  write_text_atomic(dir / "iterations.csv", eval::iteration_csv(r.report));
  write_json_file(dir / "split.json", to_json(r.split));
  write_json_file(dir / "filter.json", r.checkpoint.at("filter"));
  write_json_file(dir / "checkpoint.json", r.checkpoint);
}

}  // namespace eod::experiment
