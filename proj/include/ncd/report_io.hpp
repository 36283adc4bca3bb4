#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ncd/episodic_harness.hpp"
#include "ncd/forgetting_calibrator.hpp"

namespace ncd {

inline constexpr int kReportSchemaVersion = 1;

nlohmann::ordered_json to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::ordered_json& doc);

/// Empty when `doc` follows the report.json schema; otherwise one message
/// per violation, each naming the offending JSON path.
std::vector<std::string> validate_report_json(const nlohmann::ordered_json& doc);

void write_per_episode_csv(const EvalReport& report, std::ostream& out);
void write_sweep_csv(SweepAxis axis, std::span<const SweepResult> results, std::ostream& out);

/// Terminal table in the BCR / V-NCR / NCR@xFOR layout, percentages.
void print_report_table(const EvalReport& report, std::ostream& out);

nlohmann::ordered_json calibration_to_json(const ForCurve& curve, std::span<const CalibrationResult> results);
void print_calibration_table(const ForCurve& curve, std::span<const CalibrationResult> results, std::ostream& out);

}  // namespace ncd
