#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "sparsepr/harness.hpp"
#include "sparsepr/inference.hpp"

namespace sparsepr {

/// Parses `key = value` lines ('#' starts a comment). Unknown keys and
/// malformed values throw InvalidArgument naming the line. Does not validate
/// cross-field constraints; call ExperimentConfig::validate for that.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Inverse of parse_config (every field written explicitly).
std::string format_config(const ExperimentConfig& cfg);

/// Shortest decimal string that parses back to exactly x.
std::string format_double(double x);

nlohmann::json instance_to_json(const Instance& inst);
/// Expects fields p, n, sigma (number or null), optional beta, X (row-major, n*p), y.
Instance instance_from_json(const nlohmann::json& j);
void save_instance(const Instance& inst, const std::filesystem::path& path);
Instance load_instance(const std::filesystem::path& path);

void write_table1_csv(std::ostream& os, const SummaryTable& table);
void write_coverage_csv(std::ostream& os, const std::vector<CoverageRow>& rows);
void write_histograms_csv(std::ostream& os, const std::vector<HistogramRow>& rows);

nlohmann::json table1_json(const SummaryTable& table);
nlohmann::json coverage_json(const std::vector<CoverageRow>& rows);
nlohmann::json histograms_json(const std::vector<HistogramRow>& rows);

}  // namespace sparsepr
