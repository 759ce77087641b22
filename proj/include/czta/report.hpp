#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "czta/data_model.hpp"
#include "czta/engine.hpp"
#include "czta/metrics.hpp"

namespace czta {

/// One JSON-lines record per processed sample. Latencies are kept out of
/// this record so that reports of identical runs compare byte for byte;
/// see timing_record.
[[nodiscard]] nlohmann::json sample_record(std::size_t index, const SampleOutcome& outcome,
                                           const StreamSample& truth);

[[nodiscard]] nlohmann::json timing_record(std::size_t index, const SampleOutcome& outcome);

/// Top-k composition indices by probability, ties toward the lower index.
[[nodiscard]] std::vector<std::size_t> top_k(std::span<const double> probs, std::size_t k);

[[nodiscard]] ScoreTable score_table(const std::vector<SampleOutcome>& outcomes,
                                     const std::vector<StreamSample>& samples, const LabelSpace& labels);

/// Rebuilds the score table from the records of a saved report.
[[nodiscard]] ScoreTable score_table_from_report(const std::filesystem::path& report, const LabelSpace& labels);

/// AUC / HM / Seen / Unseen and top-1 triple, all in percent, plus the
/// prefix-accuracy series.
[[nodiscard]] nlohmann::json metrics_summary(const ScoreTable& table, const LabelSpace& labels,
                                             std::size_t prefix_points = 10);

[[nodiscard]] std::string sha256_file(const std::filesystem::path& path);

}  // namespace czta
