#include "cli.hpp"

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "eod/error.hpp"
#include "eod/evaluation.hpp"
#include "eod/experiment.hpp"
#include "eod/io.hpp"
#include "eod/rng.hpp"
#include "eod/service/http_server.hpp"
#include "eod/svm/filter.hpp"
#include "eod/svm/grid_search.hpp"
#include "eod/svm/model_io.hpp"
#include "eod/synth.hpp"

namespace eod::cli {

namespace fs = std::filesystem;

namespace {

struct Globals {
  std::string data_dir;
};

fs::path input(const Globals& g, const std::string& p) {
  const fs::path path(p);
  if (path.is_absolute() || g.data_dir.empty()) return path;
  return fs::path(g.data_dir) / path;
}

std::optional<fs::path> optional_input(const Globals& g, const std::string& p) {
  if (p.empty()) return std::nullopt;
  return input(g, p);
}

std::shared_ptr<const Dataset> load(const Globals& g, const std::string& cands, const std::string& gt) {
  return std::make_shared<const Dataset>(load_dataset(input(g, cands), optional_input(g, gt)));
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

int cmd_validate(const Globals& g, const std::string& cands, const std::string& gt) {
  std::size_t problems = 0;
  auto report = [&](const fs::path& p, const std::vector<Diagnostic>& errs) {
    for (const auto& d : errs) std::cerr << p.string() << ":" << d.line << ": " << d.message << "\n";
    problems += errs.size();
  };
  const auto cpath = input(g, cands);
  std::ifstream cin_(cpath);
  require(cin_.good(), ErrorCode::not_found, "cannot open " + cpath.string());
  auto pc = parse_candidates(cin_);
  report(cpath, pc.errors);

  std::vector<GroundTruthObject> gts;
  if (!gt.empty()) {
    const auto gpath = input(g, gt);
    std::ifstream gin(gpath);
    require(gin.good(), ErrorCode::not_found, "cannot open " + gpath.string());
    auto pg = parse_ground_truth(gin);
    report(gpath, pg.errors);
    gts = std::move(pg.items);
  }
  if (problems) {
    std::cerr << problems << " problem(s)\n";
    return 1;
  }
  auto annotated = gts.empty() ? pc.items : annotate_candidates(pc.items, gts);
  std::cout << to_json(compute_stats(annotated, gts)).dump(2) << "\n";
  return 0;
}

int cmd_synth(const std::string& config, std::uint64_t seed, const fs::path& out) {
  SynthConfig cfg;
  if (!config.empty()) cfg = synth_config_from_json(read_json_file(config));
  const auto ds = synth_generate(cfg, seed);
  save_candidates(out / "candidates.jsonl", ds.candidates);
  save_ground_truth(out / "gt.jsonl", ds.ground_truth);
  auto j = to_json(cfg);
  j["seed"] = seed;
  write_json_file(out / "synth_config.json", j);
  std::cout << ds.candidates.size() << " candidates, " << ds.ground_truth.size() << " ground-truth objects -> "
            << out.string() << "\n";
  return 0;
}

int cmd_split(const Globals& g, const std::string& cands, const std::string& gt, double holdout, double refill,
              std::uint64_t seed, const fs::path& out) {
  const auto data = load(g, cands, gt);
  const auto split = make_split(data->candidates(), holdout, refill, seed);
  write_json_file(out, to_json(split));
  std::cout << split.refill_bag_ids.size() << " bag, " << split.unlabeled_pool_ids.size() << " pool, "
            << split.heldout_classes.size() << " held-out classes\n";
  return 0;
}

int cmd_train_filter(const Globals& g, const std::string& cands, const std::string& gt, const std::string& grid,
                     std::uint64_t seed, bool scene, double fraction, std::size_t max_samples, const fs::path& out,
                     std::string cv_out) {
  const auto data = load(g, cands, gt);
  svm::GridSearchConfig gc;
  if (!grid.empty()) {
    const auto j = read_json_file(input(g, grid));
    gc.sigma_grid = j.value("sigma_grid", gc.sigma_grid);
    gc.c_grid = j.value("c_grid", gc.c_grid);
    gc.outer_folds = j.value("outer_folds", gc.outer_folds);
    gc.inner_folds = j.value("inner_folds", gc.inner_folds);
  }
  gc.seed = derive_seed(seed, "folds");
  const auto rows = experiment::stratified_sample(*data, fraction, max_samples, derive_seed(seed, "filter"));
  const auto sample = experiment::filter_training_set(*data, rows, scene);
  const Matrix x = svm::feature_matrix(sample);
  const auto y = svm::object_labels(sample);
  const auto cv = svm::grid_search_cv(x, y, gc);

  svm::BinarySvmParams params;
  params.c = cv.best_c;
  params.kernel.sigma = cv.best_sigma;
  svm::save_model(out, svm::train_binary_svm(x, y, params).model);

  std::string table = "sigma,c,mean_inner_balanced_accuracy\n";
  for (const auto& c : cv.cells)
    table += fmt("%.10g", c.sigma) + "," + fmt("%.10g", c.c) + "," + fmt("%.10g", c.mean_inner_score) + "\n";
  table += "\nfold,sigma,c,inner_score,outer_score\n";
  for (const auto& f : cv.folds)
    table += std::to_string(f.fold) + "," + fmt("%.10g", f.sigma) + "," + fmt("%.10g", f.c) + "," +
             fmt("%.10g", f.inner_score) + "," + fmt("%.10g", f.outer_score) + "\n";
  if (cv_out.empty()) cv_out = out.string() + ".cv.csv";
  write_text_atomic(cv_out, table);
  std::cout << "sigma=" << cv.best_sigma << " C=" << cv.best_c << " cv_balanced_accuracy=" << fmt("%.4f", cv.cv_score)
            << " samples=" << sample.size() << " -> " << out.string() << "\n";
  return 0;
}

struct RunArgs {
  std::string candidates, gt, config, split, filter_model, setting = "S3";
  std::size_t runs = 5;
  std::uint64_t seed = 0;
  double holdout = 0.5, refill = 0.4;
  std::optional<std::size_t> max_iterations, k;
  fs::path out;
};

int cmd_run(const Globals& g, const RunArgs& a) {
  const auto data = load(g, a.candidates, a.gt);
  require(data->annotated(), ErrorCode::invalid_argument, "run needs ground truth (--gt or gt_class fields)");
  experiment::RunSpec spec;
  if (!a.config.empty()) spec.config = engine::engine_config_from_json(read_json_file(input(g, a.config)));
  if (a.max_iterations) spec.config.max_iterations = *a.max_iterations;
  if (a.k) spec.config.k_clusters = *a.k;
  const auto setting = engine::parse_setting(a.setting);
  spec.config = engine::apply_setting(spec.config, setting);
  spec.config.validate();
  spec.holdout_frac = a.holdout;
  spec.refill_frac = a.refill;
  if (!a.split.empty()) spec.split = split_from_json(read_json_file(input(g, a.split)));
  if (!a.filter_model.empty()) spec.filter = svm::load_binary_model(input(g, a.filter_model));
  require(a.runs >= 1, ErrorCode::invalid_argument, "--runs must be at least 1");

  std::vector<experiment::RunResult> results;
  nlohmann::json files = nlohmann::json::array(), seeds = nlohmann::json::array();
  for (std::size_t r = 0; r < a.runs; ++r) {
    results.push_back(experiment::run_once(data, spec, a.seed, r));
    char name[16];
    std::snprintf(name, sizeof name, "run_%02zu", r);
    experiment::write_run(a.out / name, results.back());
    files.push_back(std::string(name) + "/history.jsonl");
    files.push_back(std::string(name) + "/report.json");
    seeds.push_back({{"run", r},
                     {"split", spec.split ? nlohmann::json(nullptr) : nlohmann::json(derive_seed(a.seed, "split", r))},
                     {"session", derive_seed(a.seed, "session", r)},
                     {"filter", derive_seed(a.seed, "filter", r)}});
    const auto& rep = results.back().report;
    std::cout << name << ": F=" << fmt("%.4f", rep.final_scores.f_measure) << " iterations=" << rep.iterations
              << "\n";
  }

  auto agg = experiment::aggregate(results);
  const auto cfg_json = engine::to_json(spec.config);
  agg["setting"] = a.setting;
  agg["seed"] = a.seed;
  agg["config"] = cfg_json;
  write_json_file(a.out / "aggregate.json", agg);
  write_text_atomic(a.out / "curve.csv", experiment::aggregate_curve_csv(results));
  files.push_back("aggregate.json");
  files.push_back("curve.csv");

  nlohmann::json inputs = {{"candidates", a.candidates}, {"dataset_fingerprint", engine::dataset_fingerprint(*data)}};
  if (!a.gt.empty()) inputs["ground_truth"] = a.gt;
  if (!a.split.empty()) inputs["split"] = a.split;
  if (!a.filter_model.empty()) inputs["filter_model"] = a.filter_model;
  const nlohmann::json manifest = {{"command", "run"},
                                   {"setting", a.setting},
                                   {"seed", a.seed},
                                   {"runs", a.runs},
                                   {"holdout_frac", a.holdout},
                                   {"refill_frac", a.refill},
                                   {"config", cfg_json},
                                   {"inputs", inputs},
                                   {"sub_seeds", seeds},
                                   {"files", files}};
  write_json_file(a.out / "manifest.json", manifest);
  std::cout << a.setting << ": F mean=" << fmt("%.4f", agg["f_measure"]["mean"].get<double>())
            << " std=" << fmt("%.4f", agg["f_measure"]["std"].get<double>()) << " -> " << a.out.string() << "\n";
  return 0;
}

int cmd_bench(const Globals& g, const std::vector<std::string>& files, const std::string& gt, std::size_t top_w,
              double os, const std::string& out) {
  require(!gt.empty(), ErrorCode::invalid_argument, "--gt is required");
  const auto gts = load_ground_truth(input(g, gt));
  std::string csv = "method,n_candidates,n_gt,no_pct,dr\n";
  for (const auto& f : files) {
    const auto cands = load_candidates(input(g, f));
    const auto r = eval::detection_metrics(cands, gts, MatchConfig{os}, top_w);
    csv += fs::path(f).stem().string() + "," + std::to_string(r.n_candidates) + "," + std::to_string(r.n_gt) + "," +
           fmt("%.4f", r.no_pct) + "," + (r.dr ? fmt("%.4f", *r.dr) : "") + "\n";
  }
  if (out.empty()) std::cout << csv;
  else write_text_atomic(out, csv);
  return 0;
}

int cmd_report(const Globals& g, const std::string& history, const std::string& cands, const std::string& gt,
               const std::string& split, const fs::path& out) {
  const auto data = load(g, cands, gt);
  const auto log = experiment::read_history_jsonl(input(g, history));
  const auto sp = split_from_json(read_json_file(input(g, split)));
  const auto rep = eval::discovery_report(log, engine::pool_truth(*data, sp), data.get());
  write_json_file(out / "report.json", eval::to_json(rep));
  write_text_atomic(out / "per_class.csv", eval::per_class_csv(rep));
  write_text_atomic(out / "iterations.csv", eval::iteration_csv(rep));
  std::cout << "F=" << fmt("%.4f", rep.final_scores.f_measure) << " iterations=" << rep.iterations << " -> "
            << out.string() << "\n";
  return 0;
}

service::HttpServer* g_server = nullptr;

int cmd_serve(const Globals& g, const std::string& host, int port, const fs::path& sessions_dir) {
  service::SessionManager sessions({sessions_dir, g.data_dir.empty() ? fs::current_path() : fs::path(g.data_dir)});
  service::HttpServer server(sessions);
  const int bound = server.bind(host, port);
  std::cout << "listening on http://" << host << ":" << bound << std::endl;
  g_server = &server;
  std::signal(SIGINT, [](int) {
    if (g_server) g_server->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (g_server) g_server->stop();
  });
  server.listen();
  g_server = nullptr;
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"Object discovery from detector candidates: data tools, simulated runs and the labeling service."};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--data-dir", g.data_dir, "Base directory for relative input paths")->envname("EOD_DATA_DIR");

  std::string cands, gt, config, split, out, grid, history, cv_out;
  std::uint64_t seed = 0;
  double holdout = 0.5, refill = 0.4;

  auto* validate = app.add_subcommand("validate", "Check candidate (and ground-truth) files");
  validate->add_option("candidates", cands, "Candidate JSON Lines file")->required();
  validate->add_option("--gt", gt, "Ground-truth JSON Lines file");

  auto* synth = app.add_subcommand("synth", "Generate a planted-class dataset");
  synth->add_option("--config", config, "Synthetic config JSON");
  synth->add_option("--seed", seed);
  synth->add_option("--out", out, "Output directory")->required();

  auto* split_cmd = app.add_subcommand("split", "Draw a refill-bag / pool split");
  split_cmd->add_option("--candidates", cands)->required();
  split_cmd->add_option("--gt", gt);
  split_cmd->add_option("--holdout", holdout, "Fraction of classes held out of the bag")->capture_default_str();
  split_cmd->add_option("--refill", refill, "Fraction of non-held-out objects in the bag")->capture_default_str();
  split_cmd->add_option("--seed", seed);
  split_cmd->add_option("--out", out, "Split JSON file")->required();

  bool scene = false;
  double fraction = 1.0;
  std::size_t max_samples = 2000;
  auto* train = app.add_subcommand("train-filter", "Grid-search and train the Object / No Object SVM");
  train->add_option("--candidates", cands)->required();
  train->add_option("--gt", gt);
  train->add_option("--grid", grid, "JSON with sigma_grid, c_grid, outer_folds, inner_folds");
  train->add_option("--seed", seed);
  train->add_flag("--scene", scene, "Append scene features");
  train->add_option("--sample-fraction", fraction, "Stratified fraction of candidates used")->capture_default_str();
  train->add_option("--max-samples", max_samples)->capture_default_str();
  train->add_option("--out", out, "Model JSON file")->required();
  train->add_option("--cv-out", cv_out, "CV table CSV (default: <out>.cv.csv)");

  RunArgs ra;
  std::string run_out;
  auto* run_cmd = app.add_subcommand("run", "Seeded discovery runs with the majority-vote oracle");
  run_cmd->add_option("--candidates", ra.candidates)->required();
  run_cmd->add_option("--gt", ra.gt);
  run_cmd->add_option("--config", ra.config, "EngineConfig JSON");
  run_cmd->add_option("--setting", ra.setting)->check(CLI::IsMember({"S2", "S3", "S4", "S5", "S6"}))->capture_default_str();
  run_cmd->add_option("--runs", ra.runs)->capture_default_str();
  run_cmd->add_option("--seed", ra.seed);
  run_cmd->add_option("--holdout", ra.holdout)->capture_default_str();
  run_cmd->add_option("--refill", ra.refill)->capture_default_str();
  run_cmd->add_option("--split", ra.split, "Fixed split JSON for every run");
  run_cmd->add_option("--filter-model", ra.filter_model, "Filter model JSON (S5/S6); trained per run otherwise");
  run_cmd->add_option("--max-iterations", ra.max_iterations);
  run_cmd->add_option("--k", ra.k, "Clusters per iteration");
  run_cmd->add_option("--out", run_out, "Run directory")->required();

  std::vector<std::string> bench_files;
  std::size_t top_w = 50;
  double os = 0.5;
  auto* bench = app.add_subcommand("bench-detections", "NO% and DR table, one row per candidate file");
  bench->add_option("files", bench_files, "Candidate files, one per detector")->required();
  bench->add_option("--gt", gt)->required();
  bench->add_option("--top-w", top_w, "Candidates kept per image by objectness (0 keeps all)")->capture_default_str();
  bench->add_option("--os", os, "Overlap-score hit threshold")->capture_default_str();
  bench->add_option("--out", out, "CSV file (default: stdout)");

  auto* report = app.add_subcommand("report", "Rebuild report files from a history log");
  report->add_option("--history", history)->required();
  report->add_option("--candidates", cands)->required();
  report->add_option("--gt", gt);
  report->add_option("--split", split)->required();
  report->add_option("--out", out)->required();

  std::string host = "127.0.0.1", sessions_dir = "sessions";
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "Run the HTTP session API");
  serve->add_option("--host", host)->capture_default_str();
  serve->add_option("--port", port)->capture_default_str();
  serve->add_option("--sessions-dir", sessions_dir)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*validate) return cmd_validate(g, cands, gt);
    if (*synth) return cmd_synth(config.empty() ? "" : input(g, config).string(), seed, out);
    if (*split_cmd) return cmd_split(g, cands, gt, holdout, refill, seed, out);
    if (*train) return cmd_train_filter(g, cands, gt, grid, seed, scene, fraction, max_samples, out, cv_out);
    if (*run_cmd) {
      ra.out = run_out;
      return cmd_run(g, ra);
    }
    if (*bench) return cmd_bench(g, bench_files, gt, top_w, os, out);
    if (*report) return cmd_report(g, history, cands, gt, split, out);
    if (*serve) return cmd_serve(g, host, port, sessions_dir);
  } catch (const Error& e) {
    std::cerr << "eod: " << to_string(e.code()) << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "eod: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"eod"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace eod::cli
