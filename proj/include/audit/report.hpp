#pragma once

#include <string>

#include "audit/audit.hpp"

namespace audit {

// Writes report.csv (long form, one row per cell x metric), report.json
// (full report, round-trips through load_report), overfit.csv when overfit
// scores exist, and one SVG heatmap per metric. Each file is written to a
// temp name and renamed into place.
void emit_report(const AuditReport& r, const std::string& dir);

void save_report_json(const AuditReport& r, const std::string& path);
AuditReport load_report_json(const std::string& path);

}  // namespace audit
