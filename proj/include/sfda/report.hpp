#pragma once

// JSON reports. Output is canonical: keys in a fixed order, two-space
// indentation, floating-point values with 9 significant digits. Parsing a
// report and serializing it again reproduces the same bytes.

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "sfda/ensemble.hpp"
#include "sfda/pipeline.hpp"
#include "sfda/rank_eval.hpp"

namespace sfda {

using Json = nlohmann::ordered_json;

inline constexpr int kReportSchemaVersion = 1;

std::string canonical_json(const Json& value);

/// Throws ParseError on malformed text.
Json parse_report(const std::string& text);
Json read_report(const std::filesystem::path& path);

/// Writes canonical_json(report) followed by a newline. IoError on failure.
void write_report(const std::filesystem::path& path, const Json& report);

std::string_view to_string(LambdaVariant variant) noexcept;

/// Rows sorted by descending score, ties in input order.
Json score_report(const std::string& dataset_name, const std::vector<TransferScore>& scores,
                  const SfdaOptions& options);

/// Rows sorted by descending T_ens, ties in input order.
Json ensemble_report(const std::string& dataset_name, const EnsembleReport& report,
                     const std::vector<std::string>& excluded);

struct EvaluationRow {
  std::string model_id;
  double score = 0.0;
  double accuracy = 0.0;
};

/// Rows sorted by descending score, ties in input order.
Json evaluation_report(const std::string& dataset_name, const RankEvaluation& evaluation,
                       const std::vector<EvaluationRow>& rows);

}  // namespace sfda
