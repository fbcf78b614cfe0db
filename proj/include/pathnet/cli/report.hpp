#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

namespace pathnet::cli {

inline constexpr int kReportSchemaVersion = 1;

/// Reads every fold under `<run_dir>/folds/` and writes report.json, one
/// confusion CSV per evaluation level, one ROC CSV per class and the paired
/// learning curves into `out_dir`. Returns the report JSON.
nlohmann::json build_report(const std::filesystem::path& run_dir, const std::filesystem::path& out_dir);

/// Checks `report` against the report schema (docs/report_schema.md).
/// Throws pathnet::DataError describing the first violation.
void validate_report(const nlohmann::json& report);

/// File-system safe rendering of a fold or class name.
std::string safe_name(const std::string& name);

}  // namespace pathnet::cli
