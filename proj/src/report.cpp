#include "cvos/report.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "cvos/errors.hpp"

namespace cvos {
namespace {

std::string g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string g6(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string fixed2(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string xml_escape(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

const std::string& meta_value(const std::map<std::string, std::string>& meta,
                              const std::string& key,
                              const std::filesystem::path& dir) {
  const auto it = meta.find(key);
  if (it == meta.end())
    throw ParseError(dir.string() + ": meta file is missing '" + key + "'");
  return it->second;
}

int meta_int(const std::string& value, const std::string& key,
             const std::filesystem::path& dir) {
  std::size_t pos = 0;
  int parsed = 0;
  try {
    parsed = std::stoi(value, &pos);
  } catch (const std::exception&) {
    pos = std::string::npos;
  }
  if (pos != value.size())
    throw ParseError(dir.string() + ": bad integer for '" + key + "': " +
                     value);
  return parsed;
}

}  // namespace

std::vector<RunReport> collect_runs(const std::filesystem::path& runs_dir) {
  if (!std::filesystem::is_directory(runs_dir))
    throw IoError("not a directory: " + runs_dir.string());

  std::vector<std::filesystem::path> dirs;
  for (const auto& entry : std::filesystem::directory_iterator(runs_dir)) {
    if (!entry.is_directory()) continue;
    if (std::filesystem::exists(entry.path() / "runlog.csv") &&
        std::filesystem::exists(entry.path() / "final.ckpt.meta"))
      dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end());

  std::vector<RunReport> runs;
  runs.reserve(dirs.size());
  for (const auto& dir : dirs) {
    const auto meta = read_meta_file(dir / "final.ckpt.meta");
    RunReport run;
    run.row.run_id = meta_value(meta, "run-id", dir);
    run.row.schedule = meta_value(meta, "schedule", dir);
    run.row.skip = meta_value(meta, "skip", dir);
    run.row.skip_at_gt = meta_value(meta, "skip-at-gt", dir) == "true";
    run.row.skip_at_pred = meta_value(meta, "skip-at-pred", dir) == "true";
    run.row.clip_length =
        meta_int(meta_value(meta, "clip-length", dir), "clip-length", dir);

    const std::string& size = meta_value(meta, "size", dir);
    const std::size_t cross = size.find('x');
    if (cross == std::string::npos)
      throw ParseError(dir.string() + ": bad size: " + size);
    run.row.height = meta_int(size.substr(0, cross), "size", dir);
    run.row.width = meta_int(size.substr(cross + 1), "size", dir);

    run.log = read_runlog_csv(dir / "runlog.csv");
    bool evaluated = false;
    for (auto it = run.log.records.rbegin(); it != run.log.records.rend();
         ++it) {
      if (!it->has_eval) continue;
      run.row.smotsa = it->smotsa;
      run.row.motsp = it->motsp;
      run.row.recall = it->recall;
      run.row.precision = it->precision;
      evaluated = true;
      break;
    }
    if (!evaluated)
      throw ParseError(dir.string() + ": runlog.csv has no evaluation rows");
    runs.push_back(std::move(run));
  }
  return runs;
}

void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows) {
  out << "run_id,schedule,skip,skip_at_gt,skip_at_pred,resolution,"
         "clip_length,smotsa,motsp,recall,precision\n";
  for (const auto& r : rows) {
    out << r.run_id << ',' << r.schedule << ',' << r.skip << ','
        << (r.skip_at_gt ? "true" : "false") << ','
        << (r.skip_at_pred ? "true" : "false") << ',' << r.height << 'x'
        << r.width << ',' << r.clip_length << ',' << g17(r.smotsa) << ','
        << g17(r.motsp) << ',' << g17(r.recall) << ',' << g17(r.precision)
        << '\n';
  }
}

std::string render_report_table(const std::vector<ReportRow>& rows) {
  constexpr int kColumns = 11;
  constexpr int kFirstMetric = 7;
  const std::array<const char*, kColumns> headers = {
      "run",  "schedule", "skip",  "skip@GT", "skip@Pred", "size",
      "clip", "sMOTSA",   "MOTSP", "Recall",  "Precision"};

  std::array<double, 4> best;
  best.fill(-std::numeric_limits<double>::infinity());
  for (const auto& r : rows) {
    best[0] = std::max(best[0], r.smotsa);
    best[1] = std::max(best[1], r.motsp);
    best[2] = std::max(best[2], r.recall);
    best[3] = std::max(best[3], r.precision);
  }

  std::vector<std::array<std::string, kColumns>> cells;
  cells.reserve(rows.size());
  for (const auto& r : rows) {
    std::array<std::string, kColumns> c;
    c[0] = r.run_id;
    c[1] = r.schedule;
    c[2] = r.skip;
    c[3] = r.skip_at_gt ? "yes" : "no";
    c[4] = r.skip_at_pred ? "yes" : "no";
    c[5] = std::to_string(r.height) + "x" + std::to_string(r.width);
    c[6] = std::to_string(r.clip_length);
    const std::array<double, 4> metrics = {r.smotsa, r.motsp, r.recall,
                                           r.precision};
    for (int j = 0; j < 4; ++j) {
      c[kFirstMetric + j] = fixed2(metrics[j]);
      if (metrics[j] == best[j]) c[kFirstMetric + j] += " *";
    }
    cells.push_back(std::move(c));
  }

  std::array<std::size_t, kColumns> widths;
  for (int j = 0; j < kColumns; ++j) {
    widths[j] = std::string(headers[j]).size();
    for (const auto& c : cells) widths[j] = std::max(widths[j], c[j].size());
  }

  std::ostringstream out;
  auto emit_row = [&](const std::array<std::string, kColumns>& c) {
    for (int j = 0; j < kColumns; ++j) {
      if (j > 0) out << "  ";
      // Right-align the numeric columns, left-align the rest.
      const bool numeric = j >= 6;
      const std::size_t pad = widths[j] - c[j].size();
      if (numeric) out << std::string(pad, ' ');
      out << c[j];
      if (!numeric && j + 1 < kColumns) out << std::string(pad, ' ');
    }
    out << '\n';
  };

  std::array<std::string, kColumns> header_row;
  for (int j = 0; j < kColumns; ++j) header_row[j] = headers[j];
  emit_row(header_row);
  for (int j = 0; j < kColumns; ++j) {
    if (j > 0) out << "  ";
    out << std::string(widths[j], '-');
  }
  out << '\n';
  for (const auto& c : cells) emit_row(c);
  return out.str();
}

std::string render_svg_chart(const std::string& title,
                             const std::string& y_label,
                             const std::vector<Series>& series) {
  constexpr double kWidth = 720.0;
  constexpr double kHeight = 440.0;
  constexpr double kLeft = 64.0;
  constexpr double kRight = 704.0;
  constexpr double kTop = 40.0;
  constexpr double kBottom = 396.0;
  static const std::array<const char*, 8> kPalette = {
      "#4363d8", "#e6194b", "#3cb44b", "#f58231",
      "#911eb4", "#0082c8", "#9a6324", "#808000"};

  double xmin = std::numeric_limits<double>::infinity();
  double xmax = -xmin, ymin = xmin, ymax = -xmin;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  if (!(xmin <= xmax)) {
    xmin = 0.0;
    xmax = 1.0;
    ymin = 0.0;
    ymax = 1.0;
  }
  if (xmin == xmax) {
    xmin -= 0.5;
    xmax += 0.5;
  }
  if (ymin == ymax) {
    ymin -= 0.5;
    ymax += 0.5;
  }
  const double ypad = 0.05 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;

  const auto sx = [&](double x) {
    return kLeft + (x - xmin) / (xmax - xmin) * (kRight - kLeft);
  };
  const auto sy = [&](double y) {
    return kBottom - (y - ymin) / (ymax - ymin) * (kBottom - kTop);
  };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << g6(kWidth)
      << "\" height=\"" << g6(kHeight) << "\" viewBox=\"0 0 " << g6(kWidth)
      << ' ' << g6(kHeight) << "\" font-family=\"sans-serif\">\n";
  out << "<rect x=\"0\" y=\"0\" width=\"" << g6(kWidth) << "\" height=\""
      << g6(kHeight) << "\" fill=\"white\"/>\n";
  out << "<text x=\"" << g6(kWidth / 2)
      << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
      << xml_escape(title) << "</text>\n";

  for (int i = 0; i < 5; ++i) {
    const double xv = xmin + (xmax - xmin) * i / 4.0;
    const double yv = ymin + (ymax - ymin) * i / 4.0;
    out << "<line x1=\"" << g6(sx(xv)) << "\" y1=\"" << g6(kBottom)
        << "\" x2=\"" << g6(sx(xv)) << "\" y2=\"" << g6(kBottom + 5)
        << "\" stroke=\"#333333\"/>\n";
    out << "<text x=\"" << g6(sx(xv)) << "\" y=\"" << g6(kBottom + 18)
        << "\" text-anchor=\"middle\" font-size=\"11\">" << g6(xv)
        << "</text>\n";
    out << "<line x1=\"" << g6(kLeft - 5) << "\" y1=\"" << g6(sy(yv))
        << "\" x2=\"" << g6(kLeft) << "\" y2=\"" << g6(sy(yv))
        << "\" stroke=\"#333333\"/>\n";
    out << "<text x=\"" << g6(kLeft - 8) << "\" y=\"" << g6(sy(yv) + 4)
        << "\" text-anchor=\"end\" font-size=\"11\">" << g6(yv)
        << "</text>\n";
  }
  out << "<line x1=\"" << g6(kLeft) << "\" y1=\"" << g6(kBottom)
      << "\" x2=\"" << g6(kRight) << "\" y2=\"" << g6(kBottom)
      << "\" stroke=\"#333333\"/>\n";
  out << "<line x1=\"" << g6(kLeft) << "\" y1=\"" << g6(kTop) << "\" x2=\""
      << g6(kLeft) << "\" y2=\"" << g6(kBottom)
      << "\" stroke=\"#333333\"/>\n";
  out << "<text x=\"" << g6((kLeft + kRight) / 2) << "\" y=\""
      << g6(kHeight - 6)
      << "\" text-anchor=\"middle\" font-size=\"12\">epoch</text>\n";
  out << "<text transform=\"translate(16 " << g6((kTop + kBottom) / 2)
      << ") rotate(-90)\" text-anchor=\"middle\" font-size=\"12\">"
      << xml_escape(y_label) << "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const char* color = kPalette[k % kPalette.size()];
    out << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < series[k].x.size(); ++i) {
      if (i > 0) out << ' ';
      out << g6(sx(series[k].x[i])) << ',' << g6(sy(series[k].y[i]));
    }
    out << "\"/>\n";
    const double ly = kTop + 10.0 + 16.0 * static_cast<double>(k);
    out << "<line x1=\"" << g6(kRight - 150) << "\" y1=\"" << g6(ly)
        << "\" x2=\"" << g6(kRight - 128) << "\" y2=\"" << g6(ly)
        << "\" stroke=\"" << color << "\" stroke-width=\"1.5\"/>\n";
    out << "<text x=\"" << g6(kRight - 122) << "\" y=\"" << g6(ly + 4)
        << "\" font-size=\"11\">" << xml_escape(series[k].label)
        << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

namespace {

// Adds a curve unless an identical one is already present under the same
// label; a same-named but different curve gets the run id appended.
void add_unique_series(std::vector<Series>* out, Series series,
                       const std::string& run_id) {
  for (const auto& existing : *out) {
    if (existing.label != series.label) continue;
    if (existing.x == series.x && existing.y == series.y) return;
    series.label += " (" + run_id + ")";
    break;
  }
  out->push_back(std::move(series));
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

}  // namespace

void write_report(const std::filesystem::path& runs_dir,
                  const std::filesystem::path& out_dir) {
  const std::vector<RunReport> runs = collect_runs(runs_dir);
  std::filesystem::create_directories(out_dir);

  std::vector<ReportRow> rows;
  rows.reserve(runs.size());
  for (const auto& run : runs) rows.push_back(run.row);

  std::ostringstream csv;
  write_report_csv(csv, rows);
  write_text_file(out_dir / "report.csv", csv.str());
  write_text_file(out_dir / "report.txt", render_report_table(rows));

  std::vector<Series> loss, smotsa, schedules, skips;
  for (const auto& run : runs) {
    Series l, m;
    l.label = run.row.run_id;
    m.label = run.row.run_id;
    Series p, s;
    p.label = run.row.schedule;
    if (run.row.skip == "none" ||
        (!run.row.skip_at_gt && !run.row.skip_at_pred)) {
      s.label = "none";
    } else {
      s.label = run.row.skip + "@";
      if (run.row.skip_at_gt) s.label += "GT";
      if (run.row.skip_at_gt && run.row.skip_at_pred) s.label += "+";
      if (run.row.skip_at_pred) s.label += "Pred";
    }
    for (const auto& rec : run.log.records) {
      const double epoch = rec.epoch;
      l.x.push_back(epoch);
      l.y.push_back(rec.loss);
      p.x.push_back(epoch);
      p.y.push_back(rec.p_gt);
      s.x.push_back(epoch);
      s.y.push_back(rec.skip);
      if (rec.has_eval) {
        m.x.push_back(epoch);
        m.y.push_back(rec.smotsa);
      }
    }
    loss.push_back(std::move(l));
    smotsa.push_back(std::move(m));
    add_unique_series(&schedules, std::move(p), run.row.run_id);
    add_unique_series(&skips, std::move(s), run.row.run_id);
  }

  write_text_file(out_dir / "loss.svg",
                  render_svg_chart("training loss", "loss", loss));
  write_text_file(out_dir / "smotsa.svg",
                  render_svg_chart("evaluation sMOTSA", "sMOTSA", smotsa));
  write_text_file(
      out_dir / "schedules.svg",
      render_svg_chart("ground-truth probability", "p", schedules));
  write_text_file(out_dir / "skips.svg",
                  render_svg_chart("frame skip", "skip", skips));
}

}  // namespace cvos
