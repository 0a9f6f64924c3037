#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "cvos/trainer.hpp"

namespace cvos {

// One line of the run comparison table, mirroring the experiment-grid
// columns (schedule, skip scheme and phases, resolution, clip length).
// Metrics are in percent and come from the run's last evaluated epoch.
struct ReportRow {
  std::string run_id;
  std::string schedule;
  std::string skip;
  bool skip_at_gt = false;
  bool skip_at_pred = false;
  int height = 0;
  int width = 0;
  int clip_length = 0;
  double smotsa = 0.0;
  double motsp = 0.0;
  double recall = 0.0;
  double precision = 0.0;
};

// A completed run read back from disk: the table row plus the full epoch
// log for plotting.
struct RunReport {
  ReportRow row;
  RunLog log;
};

// Scans runs_dir for subdirectories holding both runlog.csv and
// final.ckpt.meta, in directory-name order. Throws ParseError if a run's
// log has no evaluation rows, IoError if runs_dir is not a directory.
std::vector<RunReport> collect_runs(const std::filesystem::path& runs_dir);

void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows);

// Fixed-width text table; the best value in each metric column carries a
// trailing '*'.
std::string render_report_table(const std::vector<ReportRow>& rows);

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

// Self-contained SVG line chart, one polyline per series, epoch on the
// x axis.
std::string render_svg_chart(const std::string& title,
                             const std::string& y_label,
                             const std::vector<Series>& series);

// Writes report.csv, report.txt, schedules.svg, skips.svg, loss.svg and
// smotsa.svg into out_dir. The schedule and skip charts are deduplicated:
// runs sharing a curve contribute one polyline; same-named runs with
// different curves are disambiguated by run id.
void write_report(const std::filesystem::path& runs_dir,
                  const std::filesystem::path& out_dir);

}  // namespace cvos
