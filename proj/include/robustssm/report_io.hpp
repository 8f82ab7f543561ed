#pragma once

#include <string>
#include <vector>

#include "robustssm/simlab.hpp"

namespace robustssm {

/// Shortest round-trip decimal form of a double; NaN serializes as "nan".
std::string format_double(double v);

/// RFC 4180 field quoting: fields containing commas, quotes or line breaks
/// are wrapped in quotes with embedded quotes doubled.
std::string csv_escape(const std::string& field);

/// results.csv body: header `run,method,mse,wall_time_s,bcrb_trace` plus one
/// row per record.
std::string results_csv_text(const std::vector<MethodRecord>& records);

/// Inverse of results_csv_text; numbers round-trip exactly.
std::vector<MethodRecord> parse_results_csv_text(const std::string& text);

void write_results_csv(const McReport& report, const std::string& path);
std::vector<MethodRecord> read_results_csv(const std::string& path);

/// report.json: scenario echo, per-method box statistics and failure info.
std::string report_json_text(const McReport& report);
void write_report_json(const McReport& report, const std::string& path);

}  // namespace robustssm
