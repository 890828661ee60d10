#pragma once

#include "semidfl/orchestrator.hpp"

#include <json.hpp>

#include <ostream>
#include <span>
#include <string>

namespace semidfl {

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

inline constexpr std::string_view kMetricsCsvHeader =
    "round,client,acc,pl_count,pl_precision,a_i,disagreement";

/// One row per (round, client). Missing optional values are empty fields.
void write_metrics_csv(std::ostream& out, std::span<const RoundMetrics> rounds);
/// Array of per-round objects mirroring RoundMetrics; missing values are null.
nlohmann::json metrics_json(std::span<const RoundMetrics> rounds);

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows);
nlohmann::json sweep_json(std::span<const SweepRow> rows);

}  // namespace semidfl
