#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "cvos/curriculum.hpp"
#include "cvos/mask.hpp"
#include "cvos/model.hpp"

namespace cvos {

struct TrainConfig {
  std::filesystem::path data_dir;
  std::filesystem::path out_dir = "runs";
  std::string run_id = "run";
  ScheduleSpec schedule;
  // skip.phase_length == 0 means "total_epochs / 2", resolved at train time.
  SkipSchedule skip = {.phase_length = 0};
  int total_epochs = 40;
  int clips_per_epoch = 0;  // 0: one clip per training sequence
  int batch_size = 4;
  int clip_length = 5;
  int height = 0;  // 0: taken from the dataset
  int width = 0;
  int channels = 8;
  int hidden_channels = 8;
  double learning_rate = 1e-3;
  int eval_every = 5;
  std::uint64_t seed = 1;

  void validate() const;  // throws std::invalid_argument
};

// Applies one key=value setting using the CLI flag names (data, out,
// run-id, schedule, skip, skip-at-gt, skip-at-pred, phase-length, epochs,
// clips-per-epoch, batch, clip-length, size, channels, hidden-channels,
// lr, eval-every, seed). Throws ParseError on unknown keys or bad values.
void set_config_value(TrainConfig* config, const std::string& key,
                      const std::string& value);

// Flat key=value file, '#' comments; errors carry path and line number.
void load_config_file(TrainConfig* config,
                      const std::filesystem::path& path);

struct RunRecord {
  int epoch = 0;
  double p_gt = 0.0;
  int skip = 0;
  double loss = 0.0;
  double wall_seconds = 0.0;
  bool has_eval = false;
  double smotsa = 0.0;
  double motsp = 0.0;
  double recall = 0.0;
  double precision = 0.0;
};

struct RunLog {
  std::vector<RunRecord> records;  // one per epoch, in epoch order
};

// CSV header: epoch,p_gt,skip,loss,smotsa,motsp,recall,precision. The four
// evaluation fields are empty on epochs without an evaluation pass.
void write_runlog_csv(std::ostream& out, const RunLog& log);
RunLog read_runlog_csv(const std::filesystem::path& path);

// Sidecar next to each checkpoint: the resolved config as key=value lines
// plus size=HxW and epochs-completed.
void write_meta_file(const std::filesystem::path& path,
                     const TrainConfig& config, int epochs_completed,
                     int height, int width);
std::map<std::string, std::string> read_meta_file(
    const std::filesystem::path& path);

// Held-out split: the last max(1, n/5) sequences of the dataset are
// reserved for evaluation. Requires n >= 2.
struct DatasetSplit {
  int train_count = 0;
  int eval_count = 0;
};
DatasetSplit split_counts(int num_sequences);

struct TrainResult {
  RunLog log;
  ModelParams params;
  std::filesystem::path run_dir;
  std::filesystem::path final_checkpoint;
  std::filesystem::path best_checkpoint;  // empty if never evaluated
  double best_smotsa = 0.0;
};

// Runs the full experiment into out_dir/run_id: final.ckpt(.meta),
// best.ckpt(.meta) at the best averaged sMOTSA seen, and runlog.csv.
// Deterministic for a fixed config: the training Rng is seeded with
// seed+1 (weight init consumes its own stream), and per epoch each clip
// draws its start first, then its use-GT booleans for steps t >= 2.
TrainResult train(const TrainConfig& config);

// One-shot inference over a full sequence: frame 0 of the result repeats
// the given first-frame object entries verbatim (ignore regions and empty
// masks are not tracked); each later frame carries the per-object
// predictions binarized by resolve_overlaps under the same track and
// class ids. The soft probability map (not the resolved mask) is fed
// back as the recurrent input.
SequenceAnnotation infer_sequence(const ModelParams& params,
                                  const std::vector<Image>& frames,
                                  const FrameAnnotation& first_frame);

}  // namespace cvos
