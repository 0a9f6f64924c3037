#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "cvos/mask.hpp"

namespace cvos {

// Raised by sequence_metrics when a sequence has no ground-truth masks of
// the class under evaluation; evaluate() catches it and excludes the
// sequence from the average with a warning.
class EmptyGroundTruth : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SequenceTallies {
  long long tp = 0;
  long long fp = 0;
  long long fn = 0;
  long long ids = 0;
  double soft_tp = 0.0;
  long long gt_total = 0;

  bool operator==(const SequenceTallies&) const = default;
};

// All metrics in percent.
struct SequenceMetrics {
  double smotsa = 0.0;
  double motsp = 0.0;
  double recall = 0.0;
  double precision = 0.0;
  double motsa = 0.0;
  SequenceTallies tallies;
};

struct Match {
  int gt_track_id = 0;
  int pred_track_id = 0;
  double iou = 0.0;

  bool operator==(const Match&) const = default;
};

struct MetricsReport {
  // Keyed by sequence id; only sequences with non-empty ground truth.
  std::map<std::string, SequenceMetrics> per_sequence;
  // Metric fields are unweighted per-sequence means (or pooled-tally
  // recomputations when pooled=true); tallies are sums over sequences.
  SequenceMetrics averaged;
  bool pooled = false;
  std::vector<std::string> warnings;
};

// Matches GT to prediction masks of one class within a frame. Predictions
// with strictly more than half of their area inside GT ignore regions are
// dropped beforehand; `kept_predictions` (when given) receives the number
// of predictions that survived. A pair matches iff IoU > 0.5; disjointness
// makes the matching unique. Matches are ordered by gt_track_id.
std::vector<Match> match_frame(const FrameAnnotation& gt,
                               const FrameAnnotation& pred, int class_id,
                               int* kept_predictions = nullptr);

// Counts ID switches over per-frame match lists in temporal order. A GT
// track switches at frame t when it matches prediction q there but was last
// matched to q' != q at some earlier frame; unmatched frames in between do
// not reset the last-matched id.
long long count_id_switches(const std::vector<std::vector<Match>>& per_frame);

// sMOTSA = 100*(soft_tp - fp - ids)/gt_total, MOTSA = 100*(tp - fp - ids)/
// gt_total, MOTSP = 100*soft_tp/tp (0 when tp = 0), Recall = 100*tp/
// gt_total, Precision = 100*tp/(tp+fp) (0 when tp+fp = 0).
SequenceMetrics sequence_metrics(const SequenceAnnotation& gt,
                                 const SequenceAnnotation& pred, int class_id);

// Unweighted arithmetic mean of each metric; tallies are summed. Throws
// std::invalid_argument on empty input.
SequenceMetrics average_by_sequence(const std::vector<SequenceMetrics>& rows);

// Evaluates every GT sequence against the prediction set; missing
// prediction sequences count as empty (with a warning), prediction
// sequences without GT are ignored (with a warning). Sequences are
// processed in parallel; results and warnings are merged in sequence-id
// order, so the report does not depend on thread count.
MetricsReport evaluate(const std::map<std::string, SequenceAnnotation>& gt,
                       const std::map<std::string, SequenceAnnotation>& pred,
                       int class_id, bool pooled = false);

// Loads KITTI-MOTS files or directories of them, then evaluates.
MetricsReport evaluate_paths(const std::filesystem::path& gt_path,
                             const std::filesystem::path& pred_path,
                             int class_id, bool pooled = false);

// CSV: sequence_id,sMOTSA,MOTSP,Recall,Precision,MOTSA,tp,fp,fn,ids,
// soft_tp,gt_total; one row per sequence plus a final AVERAGE row.
void write_metrics_csv(std::ostream& out, const MetricsReport& report);
void write_metrics_csv(const std::filesystem::path& path,
                       const MetricsReport& report);

}  // namespace cvos
