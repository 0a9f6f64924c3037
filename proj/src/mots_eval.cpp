#include "cvos/mots_eval.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>

#include "cvos/errors.hpp"
#include "cvos/mots_io.hpp"
#include "cvos/parallel.hpp"

namespace cvos {

std::vector<Match> match_frame(const FrameAnnotation& gt,
                               const FrameAnnotation& pred, int class_id,
                               int* kept_predictions) {
  if (!gt.entries.empty() && !pred.entries.empty() &&
      (gt.height != pred.height || gt.width != pred.width))
    throw std::invalid_argument("match_frame: image size mismatch");

  std::vector<const MaskEntry*> gt_masks, ignore_regions, preds;
  for (const MaskEntry& entry : gt.entries) {
    if (entry.is_ignore_region())
      ignore_regions.push_back(&entry);
    else if (entry.class_id == class_id)
      gt_masks.push_back(&entry);
  }
  for (const MaskEntry& entry : pred.entries)
    if (!entry.is_ignore_region() && entry.class_id == class_id)
      preds.push_back(&entry);

  // Predictions mostly inside ignore regions never take part in scoring.
  std::vector<const MaskEntry*> kept;
  for (const MaskEntry* p : preds) {
    std::int64_t covered = 0;
    for (const MaskEntry* ign : ignore_regions)
      covered += intersection_area(p->mask, ign->mask);
    if (2 * covered > p->mask.area()) continue;
    kept.push_back(p);
  }
  if (kept_predictions) *kept_predictions = static_cast<int>(kept.size());

  std::vector<Match> matches;
  for (const MaskEntry* g : gt_masks) {
    for (const MaskEntry* p : kept) {
      const double iou = mask_iou(g->mask, p->mask);
      if (iou > 0.5) {
        matches.push_back({g->track_id, p->track_id, iou});
        break;  // disjointness makes a second match impossible
      }
    }
  }
  std::sort(matches.begin(), matches.end(),
            [](const Match& a, const Match& b) {
              return a.gt_track_id < b.gt_track_id;
            });
  return matches;
}

long long count_id_switches(
    const std::vector<std::vector<Match>>& per_frame) {
  long long switches = 0;
  std::map<int, int> last_matched;  // gt track id -> pred track id
  for (const std::vector<Match>& matches : per_frame) {
    for (const Match& m : matches) {
      const auto it = last_matched.find(m.gt_track_id);
      if (it != last_matched.end() && it->second != m.pred_track_id)
        ++switches;
      last_matched[m.gt_track_id] = m.pred_track_id;
    }
  }
  return switches;
}

namespace {

SequenceMetrics metrics_from_tallies(const SequenceTallies& t) {
  SequenceMetrics m;
  m.tallies = t;
  const double gt_total = static_cast<double>(t.gt_total);
  m.smotsa = 100.0 * (t.soft_tp - t.fp - t.ids) / gt_total;
  m.motsa = 100.0 * static_cast<double>(t.tp - t.fp - t.ids) / gt_total;
  m.motsp = t.tp == 0 ? 0.0 : 100.0 * t.soft_tp / static_cast<double>(t.tp);
  m.recall = 100.0 * static_cast<double>(t.tp) / gt_total;
  m.precision = t.tp + t.fp == 0
                    ? 0.0
                    : 100.0 * static_cast<double>(t.tp) /
                          static_cast<double>(t.tp + t.fp);
  return m;
}

}  // namespace

SequenceMetrics sequence_metrics(const SequenceAnnotation& gt,
                                 const SequenceAnnotation& pred,
                                 int class_id) {
  if (gt.height > 0 && pred.height > 0 &&
      (gt.height != pred.height || gt.width != pred.width))
    throw std::invalid_argument("sequence_metrics: image size mismatch for " +
                                gt.sequence_id);

  std::set<int> frame_indices;
  for (const auto& [index, frame] : gt.frames) frame_indices.insert(index);
  for (const auto& [index, frame] : pred.frames) frame_indices.insert(index);

  const FrameAnnotation empty_frame{0, gt.height, gt.width, {}};
  SequenceTallies t;
  std::vector<std::vector<Match>> per_frame;
  per_frame.reserve(frame_indices.size());
  for (const int index : frame_indices) {
    const auto git = gt.frames.find(index);
    const auto pit = pred.frames.find(index);
    const FrameAnnotation& gframe =
        git != gt.frames.end() ? git->second : empty_frame;
    const FrameAnnotation& pframe =
        pit != pred.frames.end() ? pit->second : empty_frame;

    int kept = 0;
    std::vector<Match> matches = match_frame(gframe, pframe, class_id, &kept);
    for (const MaskEntry& entry : gframe.entries)
      if (!entry.is_ignore_region() && entry.class_id == class_id)
        ++t.gt_total;
    t.tp += static_cast<long long>(matches.size());
    t.fp += kept - static_cast<long long>(matches.size());
    for (const Match& m : matches) t.soft_tp += m.iou;
    per_frame.push_back(std::move(matches));
  }
  t.fn = t.gt_total - t.tp;
  t.ids = count_id_switches(per_frame);

  if (t.gt_total == 0)
    throw EmptyGroundTruth("sequence " + gt.sequence_id +
                           " has no ground-truth masks of class " +
                           std::to_string(class_id));
  return metrics_from_tallies(t);
}

SequenceMetrics average_by_sequence(const std::vector<SequenceMetrics>& rows) {
  if (rows.empty())
    throw std::invalid_argument("average_by_sequence: no sequences");
  SequenceMetrics avg;
  for (const SequenceMetrics& m : rows) {
    avg.smotsa += m.smotsa;
    avg.motsp += m.motsp;
    avg.recall += m.recall;
    avg.precision += m.precision;
    avg.motsa += m.motsa;
    avg.tallies.tp += m.tallies.tp;
    avg.tallies.fp += m.tallies.fp;
    avg.tallies.fn += m.tallies.fn;
    avg.tallies.ids += m.tallies.ids;
    avg.tallies.soft_tp += m.tallies.soft_tp;
    avg.tallies.gt_total += m.tallies.gt_total;
  }
  const double n = static_cast<double>(rows.size());
  avg.smotsa /= n;
  avg.motsp /= n;
  avg.recall /= n;
  avg.precision /= n;
  avg.motsa /= n;
  return avg;
}

MetricsReport evaluate(const std::map<std::string, SequenceAnnotation>& gt,
                       const std::map<std::string, SequenceAnnotation>& pred,
                       int class_id, bool pooled) {
  std::vector<const SequenceAnnotation*> gt_seqs;
  for (const auto& [id, seq] : gt) gt_seqs.push_back(&seq);

  struct Slot {
    SequenceMetrics metrics;
    bool valid = false;
    std::vector<std::string> warnings;
  };
  std::vector<Slot> slots(gt_seqs.size());
  static const SequenceAnnotation kEmpty{};

  parallel_for(gt_seqs.size(), [&](std::size_t i) {
    const SequenceAnnotation& g = *gt_seqs[i];
    const auto pit = pred.find(g.sequence_id);
    const SequenceAnnotation& p = pit != pred.end() ? pit->second : kEmpty;
    if (pit == pred.end())
      slots[i].warnings.push_back("sequence " + g.sequence_id +
                                  ": no predictions found, scoring as empty");
    try {
      slots[i].metrics = sequence_metrics(g, p, class_id);
      slots[i].valid = true;
      if (slots[i].metrics.tallies.tp == 0)
        slots[i].warnings.push_back(
            "sequence " + g.sequence_id +
            ": no true positives, MOTSP and Precision reported as 0");
    } catch (const EmptyGroundTruth& err) {
      slots[i].warnings.push_back(std::string(err.what()) +
                                  "; excluded from the average");
    }
  });

  MetricsReport report;
  report.pooled = pooled;
  std::vector<SequenceMetrics> rows;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    for (std::string& w : slots[i].warnings)
      report.warnings.push_back(std::move(w));
    if (!slots[i].valid) continue;
    rows.push_back(slots[i].metrics);
    report.per_sequence.emplace(gt_seqs[i]->sequence_id, slots[i].metrics);
  }
  for (const auto& [id, seq] : pred)
    if (!gt.count(id))
      report.warnings.push_back("sequence " + id +
                                ": predictions without ground truth, ignored");

  if (rows.empty())
    throw EmptyGroundTruth("no sequence has ground-truth masks of class " +
                           std::to_string(class_id));
  report.averaged = average_by_sequence(rows);
  if (pooled) {
    const SequenceTallies sums = report.averaged.tallies;
    report.averaged = metrics_from_tallies(sums);
  }
  return report;
}

MetricsReport evaluate_paths(const std::filesystem::path& gt_path,
                             const std::filesystem::path& pred_path,
                             int class_id, bool pooled) {
  const auto gt = load_mots_path(gt_path);
  const auto pred = load_mots_path(pred_path);
  return evaluate(gt, pred, class_id, pooled);
}

namespace {

void write_row(std::ostream& out, const std::string& id,
               const SequenceMetrics& m) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "%.17g,%.17g,%.17g,%.17g,%.17g,%lld,%lld,%lld,%lld,%.17g,%lld",
                m.smotsa, m.motsp, m.recall, m.precision, m.motsa,
                m.tallies.tp, m.tallies.fp, m.tallies.fn, m.tallies.ids,
                m.tallies.soft_tp, m.tallies.gt_total);
  out << id << ',' << buf << '\n';
}

}  // namespace

void write_metrics_csv(std::ostream& out, const MetricsReport& report) {
  out << "sequence_id,sMOTSA,MOTSP,Recall,Precision,MOTSA,tp,fp,fn,ids,"
         "soft_tp,gt_total\n";
  for (const auto& [id, metrics] : report.per_sequence)
    write_row(out, id, metrics);
  write_row(out, "AVERAGE", report.averaged);
}

void write_metrics_csv(const std::filesystem::path& path,
                       const MetricsReport& report) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_metrics_csv(out, report);
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace cvos
