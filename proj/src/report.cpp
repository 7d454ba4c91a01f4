#include "sfda/report.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

namespace sfda {

namespace {

void indent(std::string& out, int depth) { out.append(static_cast<std::size_t>(2 * depth), ' '); }

void dump(const Json& v, std::string& out, int depth) {
  switch (v.type()) {
    case Json::value_t::object: {
      if (v.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (const auto& [key, child] : v.items()) {
        if (!first) out += ",\n";
        first = false;
        indent(out, depth + 1);
        out += Json(key).dump();
        out += ": ";
        dump(child, out, depth + 1);
      }
      out += "\n";
      indent(out, depth);
      out += "}";
      return;
    }
    case Json::value_t::array: {
      if (v.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (i > 0) out += ",\n";
        indent(out, depth + 1);
        dump(v[i], out, depth + 1);
      }
      out += "\n";
      indent(out, depth);
      out += "]";
      return;
    }
    case Json::value_t::number_float: {
      const double d = v.get<double>();
      if (!std::isfinite(d)) throw Error(ErrorCode::kNonFiniteValue, "report contains a non-finite number");
      // -0 renders as "-0", which parses back as the integer 0.
      out += fmt::format("{:.9g}", d == 0.0 ? 0.0 : d);
      return;
    }
    default:
      out += v.dump();
  }
}

Json sorted_rows(std::vector<Json> rows, const std::vector<double>& keys) {
  Json out = Json::array();
  for (std::size_t i : descending_order(keys)) out.push_back(std::move(rows[i]));
  return out;
}

Json header(const char* kind, const std::string& dataset_name) {
  Json j;
  j["schema_version"] = kReportSchemaVersion;
  j["kind"] = kind;
  j["dataset_name"] = dataset_name;
  return j;
}

}  // namespace

std::string canonical_json(const Json& value) {
  std::string out;
  dump(value, out, 0);
  return out;
}

Json parse_report(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("report: ") + e.what());
  }
}

Json read_report(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_report(ss.str());
}

void write_report(const std::filesystem::path& path, const Json& report) {
  const std::string text = canonical_json(report) + "\n";
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot open '" + path.string() + "' for writing");
  out << text;
  out.close();
  if (!out) throw Error(ErrorCode::kIoError, "write failed for '" + path.string() + "'");
}

std::string_view to_string(LambdaVariant variant) noexcept {
  return variant == LambdaVariant::kMainText ? "main_text" : "algorithm1";
}

Json score_report(const std::string& dataset_name, const std::vector<TransferScore>& scores,
                  const SfdaOptions& options) {
  if (scores.empty()) throw Error(ErrorCode::kInvalidArgument, "no models to report");
  Json j = header("scores", dataset_name);
  Json params;
  params["a"] = options.fda.a;
  params["lambda_variant"] = to_string(options.fda.lambda_variant);
  params["power_steps"] = options.fda.power_steps;
  params["aggregation"] = options.aggregation == ScoreAggregation::kMean ? "mean" : "sum";
  j["parameters"] = std::move(params);

  std::vector<Json> rows;
  std::vector<double> keys;
  for (const auto& s : scores) {
    Json row;
    row["model_id"] = s.model_id;
    row["score"] = s.score;
    row["stage1_mean_logp"] = s.stage1_mean_logp;
    row["stage2_mean_logp"] = s.stage2_mean_logp;
    row["lambda_stage1"] = s.lambda_stage1;
    row["lambda_stage2"] = s.lambda_stage2;
    row["degenerate"] = s.degenerate;
    row["clamped"] = s.clamped;
    rows.push_back(std::move(row));
    keys.push_back(s.score);
  }
  j["rows"] = sorted_rows(std::move(rows), keys);
  return j;
}

Json ensemble_report(const std::string& dataset_name, const EnsembleReport& report,
                     const std::vector<std::string>& excluded) {
  if (report.per_model.empty()) throw Error(ErrorCode::kInvalidArgument, "no models to report");
  Json j = header("ensemble", dataset_name);
  Json params;
  params["r"] = report.r;
  params["k"] = report.selected_top_k.size();
  params["n_ens"] = report.n_ens;
  params["normalized"] = report.normalized;
  j["parameters"] = std::move(params);
  j["selected_top_k"] = report.selected_top_k;
  j["sfda_top_k"] = report.sfda_top_k;
  j["excluded"] = excluded;

  std::vector<Json> rows;
  std::vector<double> keys;
  for (const auto& r : report.per_model) {
    Json row;
    row["model_id"] = r.model_id;
    row["t_ens"] = r.t_ens;
    row["t_sfda"] = r.t_sfda;
    row["t_com"] = r.t_com;
    row["sfda_used"] = r.sfda_used;
    row["com_used"] = r.com_used;
    rows.push_back(std::move(row));
    keys.push_back(r.t_ens);
  }
  j["rows"] = sorted_rows(std::move(rows), keys);
  return j;
}

Json evaluation_report(const std::string& dataset_name, const RankEvaluation& evaluation,
                       const std::vector<EvaluationRow>& rows) {
  if (rows.empty()) throw Error(ErrorCode::kInvalidArgument, "no models to report");
  Json j = header("evaluation", dataset_name);
  Json metrics;
  metrics["tau"] = evaluation.tau;
  metrics["tau_w"] = evaluation.tau_w;
  metrics["pearson_r"] = evaluation.pearson_r;
  metrics["pearson_rw"] = evaluation.pearson_rw;
  for (const auto& [k, v] : evaluation.rel_at_k) metrics["rel_at_" + std::to_string(k)] = v;
  j["metrics"] = std::move(metrics);

  std::vector<Json> out;
  std::vector<double> keys;
  for (const auto& r : rows) {
    Json row;
    row["model_id"] = r.model_id;
    row["score"] = r.score;
    row["accuracy"] = r.accuracy;
    out.push_back(std::move(row));
    keys.push_back(r.score);
  }
  j["rows"] = sorted_rows(std::move(out), keys);
  return j;
}

}  // namespace sfda
