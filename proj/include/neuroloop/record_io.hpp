#pragma once

// CSV traces, metrics.json, and the per-run output directory.

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "neuroloop/scenario.hpp"

namespace neuroloop {

inline constexpr const char* kCsvHeader =
    "t,y0,y1,y2,y3,y4,ym,ymeas,ystar,u,p,fest,dest,interval,flag";

/// File-system failure; what() names the path.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Header plus one row per sample, every number as %.12g; undefined entries
/// (no reference, estimate not yet available, ...) are written as nan.
void write_csv(const RunRecord& record, std::ostream& out);
void write_csv(const RunRecord& record, const std::filesystem::path& path);

/// Inverse of write_csv. Only rows are restored; events and activation time
/// are not part of the format.
RunRecord read_csv(std::istream& in);
RunRecord read_csv(const std::filesystem::path& path);

std::string metrics_json(const Metrics& m);
void write_metrics(const Metrics& m, const std::filesystem::path& path);

enum class ExportFormat { csv, csv_svg };

/// Writes trace.csv and metrics.json into dir (created if needed), plus
/// states.svg, tracking.svg and control.svg for csv_svg.
void export_run(const RunRecord& record, const ScenarioSpec& spec,
                const std::filesystem::path& dir, ExportFormat format);

}  // namespace neuroloop
