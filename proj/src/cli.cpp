#include "sfda/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <set>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "CLI11.hpp"
#include "sfda/ensemble.hpp"
#include "sfda/hub_io.hpp"
#include "sfda/rank_eval.hpp"
#include "sfda/report.hpp"
#include "sfda/synthetic.hpp"

namespace sfda {

namespace fs = std::filesystem;

namespace {

struct CliConfig {
  std::string manifest_path;
  std::string output_path;
  std::string scores_path;
  std::string ground_truth_path;
  std::string spec_path;
  double a = 4.0;
  double r = 0.5;
  int k = 3;
  int n_ens = kDefaultEnsembleSamples;
  std::string lambda_variant = "main_text";
  bool no_normalize_ensemble = false;
  int power_steps = 3;
  int threads = 0;
};

int threads_from_env() {
  const char* value = std::getenv("SFDA_THREADS");
  if (value == nullptr || *value == '\0') return 0;
  int threads = 0;
  const char* end = value + std::char_traits<char>::length(value);
  const auto res = std::from_chars(value, end, threads);
  if (res.ec != std::errc() || res.ptr != end || threads < 0) {
    throw Error(ErrorCode::kInvalidArgument, std::string("SFDA_THREADS must be a non-negative integer, got '") +
                                                 value + "'");
  }
  return threads;
}

SfdaOptions pipeline_options(const CliConfig& cfg) {
  SfdaOptions options;
  options.fda.a = cfg.a;
  options.fda.power_steps = cfg.power_steps;
  options.fda.lambda_variant = cfg.lambda_variant == "algorithm1" ? LambdaVariant::kAlgorithm1 : LambdaVariant::kMainText;
  return options;
}

void emit(const Json& report, const CliConfig& cfg, std::ostream& out) {
  if (cfg.output_path.empty()) {
    out << canonical_json(report) << "\n";
  } else {
    write_report(cfg.output_path, report);
  }
}

void log_timings(const std::vector<FeatureSet>& hub, const std::vector<double>& elapsed_ms, std::ostream& err) {
  for (std::size_t m = 0; m < hub.size(); ++m) {
    fmt::print(err, "{}: {:.1f} ms\n", hub[m].model_id, elapsed_ms[m]);
  }
}

struct ScoredHub {
  HubManifest manifest;
  std::vector<FeatureSet> hub;
  std::vector<SfdaResult> results;
};

ScoredHub score_manifest(const CliConfig& cfg, const std::vector<std::string>* keep_ids, std::ostream& err) {
  ScoredHub s;
  s.manifest = read_manifest(cfg.manifest_path);
  s.hub = load_hub(s.manifest);
  if (keep_ids != nullptr) {
    std::vector<FeatureSet> kept;
    for (auto& fs : s.hub) {
      if (std::find(keep_ids->begin(), keep_ids->end(), fs.model_id) != keep_ids->end()) kept.push_back(std::move(fs));
    }
    s.hub = std::move(kept);
  }
  if (s.hub.empty()) throw Error(ErrorCode::kInvalidArgument, "no models to score");
  std::vector<double> elapsed_ms;
  s.results = run_hub(s.hub, pipeline_options(cfg), cfg.threads, &elapsed_ms);
  log_timings(s.hub, elapsed_ms, err);
  return s;
}

std::vector<TransferScore> scores_of(const std::vector<SfdaResult>& results) {
  std::vector<TransferScore> out;
  for (const auto& r : results) out.push_back(r.score);
  return out;
}

void cmd_score(const CliConfig& cfg, std::ostream& out, std::ostream& err) {
  const ScoredHub s = score_manifest(cfg, nullptr, err);
  emit(score_report(s.manifest.dataset_name, scores_of(s.results), pipeline_options(cfg)), cfg, out);
}

void cmd_rank(const CliConfig& cfg, std::ostream& out, std::ostream& err) {
  const ScoredHub s = score_manifest(cfg, nullptr, err);
  const auto scores = scores_of(s.results);
  std::vector<double> values;
  for (const auto& t : scores) values.push_back(t.score);
  const auto order = descending_order(values);
  for (std::size_t i = 0; i < order.size(); ++i) {
    fmt::print(out, "{}\t{}\t{:.9g}\n", i + 1, scores[order[i]].model_id, scores[order[i]].score);
  }
  if (!cfg.output_path.empty()) {
    write_report(cfg.output_path, score_report(s.manifest.dataset_name, scores, pipeline_options(cfg)));
  }
}

void cmd_ensemble(const CliConfig& cfg, std::ostream& out, std::ostream& err) {
  const HubManifest manifest = read_manifest(cfg.manifest_path);
  std::vector<std::string> kept;
  std::vector<std::string> excluded;
  for (const auto& m : manifest.models) {
    if (m.feature_dim < manifest.num_classes - 1) {
      excluded.push_back(m.model_id);
      fmt::print(err, "warning: excluding '{}': dimension {} < C - 1 = {}\n", m.model_id, m.feature_dim,
                 manifest.num_classes - 1);
    } else {
      kept.push_back(m.model_id);
    }
  }
  if (kept.size() < static_cast<std::size_t>(std::max(cfg.k, 2))) {
    throw Error(ErrorCode::kKTooLarge, fmt::format("{} eligible model(s) remain, need at least {}", kept.size(),
                                                   std::max(cfg.k, 2)));
  }
  const ScoredHub s = score_manifest(cfg, &kept, err);
  std::vector<FdaModel> stage1;
  for (const auto& r : s.results) stage1.push_back(r.stage1);
  const auto embeddings = fisher_embeddings(s.hub, stage1);
  const auto indices = ensemble_sample_indices(s.hub.front().num_samples(), cfg.n_ens);
  const Vector t_com = complementarity_scores(embeddings, indices, cfg.threads);
  EnsembleReport report = ensemble_rank(scores_of(s.results), t_com, cfg.r, cfg.k, !cfg.no_normalize_ensemble);
  report.n_ens = static_cast<int>(indices.size());
  emit(ensemble_report(manifest.dataset_name, report, excluded), cfg, out);
}

bool is_csv_path(const fs::path& path) {
  const auto ext = path.extension().string();
  return ext == ".csv" || ext == ".txt";
}

void cmd_eval(const CliConfig& cfg, std::ostream& out) {
  const auto scores = read_score_table(cfg.scores_path);
  const auto truth = read_ground_truth(cfg.ground_truth_path);
  std::map<std::string, double> score_by_id;
  for (const auto& s : scores) score_by_id[s.model_id] = s.score;
  std::set<std::string> truth_ids;
  for (const auto& g : truth) truth_ids.insert(g.model_id);
  std::vector<std::string> only_scores;
  std::vector<std::string> only_truth;
  for (const auto& [id, v] : score_by_id) {
    if (!truth_ids.count(id)) only_scores.push_back(id);
  }
  for (const auto& id : truth_ids) {
    if (!score_by_id.count(id)) only_truth.push_back(id);
  }
  if (!only_scores.empty() || !only_truth.empty()) {
    throw Error(ErrorCode::kLabelMismatch,
                fmt::format("model ids differ; only in scores: [{}]; only in ground truth: [{}]",
                            fmt::join(only_scores, ", "), fmt::join(only_truth, ", ")));
  }

  std::vector<EvaluationRow> rows;
  Vector t(static_cast<Eigen::Index>(truth.size()));
  Vector g(static_cast<Eigen::Index>(truth.size()));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double score = score_by_id.at(truth[i].model_id);
    t[static_cast<Eigen::Index>(i)] = score;
    g[static_cast<Eigen::Index>(i)] = truth[i].accuracy;
    rows.push_back({truth[i].model_id, score, truth[i].accuracy});
  }
  std::string dataset_name = fs::path(cfg.ground_truth_path).stem().string();
  if (!is_csv_path(cfg.scores_path)) {
    const Json report = read_report(cfg.scores_path);
    if (report.contains("dataset_name") && report["dataset_name"].is_string()) {
      dataset_name = report["dataset_name"].get<std::string>();
    }
  }
  emit(evaluation_report(dataset_name, evaluate_ranking(t, g), rows), cfg, out);
}

void cmd_gen(const CliConfig& cfg, std::ostream& out) {
  const SyntheticHub hub = generate_synthetic_hub(read_synthetic_spec(cfg.spec_path));
  write_synthetic_hub(hub, cfg.output_path);
  for (std::size_t m = 0; m < hub.models.size(); ++m) {
    fmt::print(out, "{}\t{:.9g}\n", hub.models[m].model_id, hub.oracle_accuracy[m]);
  }
}

void add_pipeline_flags(CLI::App* cmd, CliConfig& cfg) {
  cmd->add_option("--manifest", cfg.manifest_path, "Hub manifest (JSON)")->required();
  cmd->add_option("--out", cfg.output_path, "Report path; stdout when omitted");
  cmd->add_option("--a", cfg.a, "Regularization hyperparameter")->check(CLI::PositiveNumber);
  cmd->add_option("--lambda-variant", cfg.lambda_variant, "main_text or algorithm1")
      ->check(CLI::IsMember({"main_text", "algorithm1"}));
  cmd->add_option("--power-steps", cfg.power_steps, "Power-iteration steps")->check(CLI::Range(1, 1000000));
  cmd->add_option("--threads", cfg.threads, "Worker threads, 0 for all cores")->check(CLI::NonNegativeNumber);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CliConfig cfg;
  CLI::App app{"Transferability scoring, ensemble selection and rank evaluation for model hubs", "sfda"};
  app.require_subcommand(1);

  auto* score = app.add_subcommand("score", "Score every model of a hub");
  add_pipeline_flags(score, cfg);
  auto* rank = app.add_subcommand("rank", "List hub models by descending score");
  add_pipeline_flags(rank, cfg);
  auto* ensemble = app.add_subcommand("ensemble", "Select a top-k ensemble");
  add_pipeline_flags(ensemble, cfg);
  ensemble->add_option("--r", cfg.r, "Weight of the transferability score")->check(CLI::Range(0.0, 1.0));
  ensemble->add_option("--k", cfg.k, "Ensemble size")->check(CLI::PositiveNumber);
  ensemble->add_option("--n-ens", cfg.n_ens, "Samples used for complementarity")->check(CLI::PositiveNumber);
  ensemble->add_flag("--no-normalize-ensemble", cfg.no_normalize_ensemble, "Combine raw, unnormalized scores");
  auto* eval = app.add_subcommand("eval", "Compare scores with ground-truth accuracies");
  eval->add_option("--scores", cfg.scores_path, "Score report (JSON) or CSV model_id,score")->required();
  eval->add_option("--ground-truth", cfg.ground_truth_path, "CSV model_id,accuracy")->required();
  eval->add_option("--out", cfg.output_path, "Report path; stdout when omitted");
  auto* gen = app.add_subcommand("gen", "Generate a synthetic hub");
  gen->add_option("--spec", cfg.spec_path, "Synthetic hub spec (JSON)")->required();
  gen->add_option("--out", cfg.output_path, "Output directory")->required();

  try {
    cfg.threads = threads_from_env();
  } catch (const Error& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kExitValidation;
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*score) cmd_score(cfg, out, err);
    if (*rank) cmd_rank(cfg, out, err);
    if (*ensemble) cmd_ensemble(cfg, out, err);
    if (*eval) cmd_eval(cfg, out);
    if (*gen) cmd_gen(cfg, out);
  } catch (const Error& e) {
    fmt::print(err, "error: {}\n", e.what());
    return is_io_error(e.code()) ? kExitIo : kExitValidation;
  } catch (const fs::filesystem_error& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kExitIo;
  } catch (const std::exception& e) {
    fmt::print(err, "internal error: {}\n", e.what());
    return kExitInternal;
  }
  return kExitOk;
}

}  // namespace sfda
