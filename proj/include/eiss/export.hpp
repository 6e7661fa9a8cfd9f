#pragma once

#include <string>

#include "eiss/evaluation.hpp"

namespace eiss {

// Normative CSV schema: header `class,iteration,mean_blackened,mean_cropped,
// mean_iou,n`, then one row per (class, iteration), classes in sorted order,
// iterations 1-based. Byte-stable for fixed inputs.
void export_csv(const EvalReport& report, const std::string& path);
std::string report_to_csv(const EvalReport& report);

// Full report as JSON (classes, overall, per-image results, config, skips).
void export_json(const EvalReport& report, const std::string& path);
std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(const std::string& json_text);
EvalReport load_report(const std::string& path);

// Per-class two-column plot series (iteration <TAB> value), one file per
// curve, normalized to [0,1] with the raw series alongside.
void export_plot_series(const EvalReport& report, const std::string& dir);

// Dispatch on "csv" or "json". Throws EissError("export failed: ...") on I/O
// errors and unknown formats.
void export_report(const EvalReport& report, const std::string& format, const std::string& path);

}  // namespace eiss
