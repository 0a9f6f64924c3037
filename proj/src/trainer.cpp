#include "cvos/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "cvos/dataset.hpp"
#include "cvos/errors.hpp"
#include "cvos/mots_eval.hpp"
#include "cvos/parallel.hpp"

namespace cvos {

namespace {

std::string g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

long long parse_ll(const std::string& text, const std::string& key) {
  std::size_t pos = 0;
  long long value = 0;
  try {
    value = std::stoll(text, &pos);
  } catch (const std::exception&) {
    throw ParseError("bad integer for " + key + ": '" + text + "'");
  }
  if (pos != text.size())
    throw ParseError("bad integer for " + key + ": '" + text + "'");
  return value;
}

int parse_int(const std::string& text, const std::string& key) {
  const long long v = parse_ll(text, key);
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
    throw ParseError("integer out of range for " + key + ": '" + text + "'");
  return static_cast<int>(v);
}

double parse_double(const std::string& text, const std::string& key) {
  std::size_t pos = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &pos);
  } catch (const std::exception&) {
    throw ParseError("bad number for " + key + ": '" + text + "'");
  }
  if (pos != text.size())
    throw ParseError("bad number for " + key + ": '" + text + "'");
  return value;
}

bool parse_bool(const std::string& text, const std::string& key) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ParseError("bad boolean for " + key + ": '" + text + "'");
}

void parse_size(const std::string& text, int* height, int* width) {
  const std::size_t x = text.find('x');
  if (x == std::string::npos || x == 0 || x + 1 == text.size())
    throw ParseError("bad size, expected HxW: '" + text + "'");
  *height = parse_int(text.substr(0, x), "size");
  *width = parse_int(text.substr(x + 1), "size");
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

void add_params(ModelParams* into, const ModelParams& from) {
  const auto ri = tensor_refs(*into);
  const auto rf = tensor_refs(from);
  for (std::size_t k = 0; k < ri.size(); ++k) {
    std::vector<double>& a = *ri[k].data;
    const std::vector<double>& b = *rf[k].data;
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  }
}

void scale_params(ModelParams* p, double s) {
  for (const TensorRef& ref : tensor_refs(*p))
    for (double& v : *ref.data) v *= s;
}

// Resolves the defaults that depend on other fields.
TrainConfig resolved(const TrainConfig& config) {
  TrainConfig c = config;
  c.schedule.total_epochs = c.total_epochs;
  if (c.skip.phase_length == 0)
    c.skip.phase_length = std::max(1, c.total_epochs / 2);
  return c;
}

ClipData assemble_clip(const VideoSequence& seq, const ClipIndices& ci,
                       int height, int width) {
  ClipData clip;
  for (const int idx : ci.indices) clip.frames.push_back(seq.frames[idx]);
  const auto first = seq.annotation.frames.find(ci.indices[0]);
  if (first == seq.annotation.frames.end()) return clip;
  for (const MaskEntry& entry : first->second.entries) {
    if (entry.is_ignore_region() || entry.mask.area() == 0) continue;
    std::vector<Image> targets;
    for (const int idx : ci.indices) {
      const auto fa = seq.annotation.frames.find(idx);
      const MaskEntry* found = nullptr;
      if (fa != seq.annotation.frames.end())
        for (const MaskEntry& candidate : fa->second.entries)
          if (candidate.track_id == entry.track_id) {
            found = &candidate;
            break;
          }
      targets.push_back(found ? mask_to_image(found->mask)
                              : Image(height, width));
    }
    clip.targets.push_back(std::move(targets));
  }
  return clip;
}

SequenceMetrics evaluate_split(const ModelParams& params, const Dataset& data,
                               const DatasetSplit& split) {
  const int offset = split.train_count;
  std::vector<SequenceAnnotation> preds(split.eval_count);
  parallel_for(split.eval_count, [&](std::size_t i) {
    const VideoSequence& seq = data.sequences[offset + i];
    FrameAnnotation first;
    first.height = data.height;
    first.width = data.width;
    const auto it = seq.annotation.frames.find(0);
    if (it != seq.annotation.frames.end()) first = it->second;
    preds[i] = infer_sequence(params, seq.frames, first);
    preds[i].sequence_id = seq.id;
  });
  std::map<std::string, SequenceAnnotation> gt, pred;
  for (int i = 0; i < split.eval_count; ++i) {
    const VideoSequence& seq = data.sequences[offset + i];
    gt[seq.id] = seq.annotation;
    pred[seq.id] = preds[i];
  }
  return evaluate(gt, pred, 1).averaged;
}

}  // namespace

void TrainConfig::validate() const {
  if (run_id.empty() ||
      run_id.find_first_of("/\\") != std::string::npos ||
      run_id.find("..") != std::string::npos)
    throw std::invalid_argument("run-id must be a plain directory name");
  if (total_epochs < 1)
    throw std::invalid_argument("epochs must be at least 1");
  if (clips_per_epoch < 0)
    throw std::invalid_argument("clips-per-epoch must not be negative");
  if (batch_size < 1) throw std::invalid_argument("batch must be at least 1");
  if (clip_length < 2)
    throw std::invalid_argument("clip-length must be at least 2");
  if (eval_every < 1)
    throw std::invalid_argument("eval-every must be at least 1");
  if (channels < 1 || hidden_channels < 1)
    throw std::invalid_argument("channel counts must be positive");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw std::invalid_argument("lr must be a positive finite number");
  if (height < 0 || width < 0 || (height == 0) != (width == 0) ||
      height % 4 != 0 || width % 4 != 0)
    throw std::invalid_argument(
        "size must give both dimensions, each divisible by 4");
  const TrainConfig r = resolved(*this);
  r.schedule.validate();
  r.skip.validate();
}

void set_config_value(TrainConfig* config, const std::string& key,
                      const std::string& value) {
  if (key == "data") {
    config->data_dir = value;
  } else if (key == "out") {
    config->out_dir = value;
  } else if (key == "run-id") {
    config->run_id = value;
  } else if (key == "schedule") {
    if (!schedule_kind_from_name(value, &config->schedule.kind))
      throw ParseError("unknown schedule '" + value + "'");
  } else if (key == "skip") {
    if (!skip_scheme_from_name(value, &config->skip.scheme))
      throw ParseError("unknown skip scheme '" + value + "'");
  } else if (key == "skip-at-gt") {
    config->skip.apply_at_gt_phase = parse_bool(value, key);
  } else if (key == "skip-at-pred") {
    config->skip.apply_at_pred_phase = parse_bool(value, key);
  } else if (key == "phase-length") {
    config->skip.phase_length = parse_int(value, key);
  } else if (key == "epochs") {
    config->total_epochs = parse_int(value, key);
  } else if (key == "clips-per-epoch") {
    config->clips_per_epoch = parse_int(value, key);
  } else if (key == "batch") {
    config->batch_size = parse_int(value, key);
  } else if (key == "clip-length") {
    config->clip_length = parse_int(value, key);
  } else if (key == "size") {
    parse_size(value, &config->height, &config->width);
  } else if (key == "channels") {
    config->channels = parse_int(value, key);
  } else if (key == "hidden-channels") {
    config->hidden_channels = parse_int(value, key);
  } else if (key == "lr") {
    config->learning_rate = parse_double(value, key);
  } else if (key == "eval-every") {
    config->eval_every = parse_int(value, key);
  } else if (key == "seed") {
    const long long v = parse_ll(value, key);
    if (v < 0) throw ParseError("seed must not be negative: '" + value + "'");
    config->seed = static_cast<std::uint64_t>(v);
  } else {
    throw ParseError("unknown config key '" + key + "'");
  }
}

void load_config_file(TrainConfig* config,
                      const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": expected key=value, got '" + stripped + "'");
    try {
      set_config_value(config, trim(stripped.substr(0, eq)),
                       trim(stripped.substr(eq + 1)));
    } catch (const ParseError& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " +
                       e.what());
    }
  }
}

void write_runlog_csv(std::ostream& out, const RunLog& log) {
  out << "epoch,p_gt,skip,loss,smotsa,motsp,recall,precision\n";
  for (const RunRecord& r : log.records) {
    out << r.epoch << ',' << g17(r.p_gt) << ',' << r.skip << ','
        << g17(r.loss) << ',';
    if (r.has_eval)
      out << g17(r.smotsa) << ',' << g17(r.motsp) << ',' << g17(r.recall)
          << ',' << g17(r.precision);
    else
      out << ",,,";
    out << '\n';
  }
}

RunLog read_runlog_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open run log " + path.string());
  std::string line;
  if (!std::getline(in, line) ||
      trim(line) != "epoch,p_gt,skip,loss,smotsa,motsp,recall,precision")
    throw ParseError(path.string() + ": missing run-log header");
  RunLog log;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = stripped.find(',', start);
      fields.push_back(stripped.substr(
          start, comma == std::string::npos ? comma : comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    const auto fail = [&](const std::string& what) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " +
                       what);
    };
    if (fields.size() != 8) fail("expected 8 fields");
    RunRecord r;
    try {
      r.epoch = parse_int(fields[0], "epoch");
      r.p_gt = parse_double(fields[1], "p_gt");
      r.skip = parse_int(fields[2], "skip");
      r.loss = parse_double(fields[3], "loss");
      const bool any = !fields[4].empty() || !fields[5].empty() ||
                       !fields[6].empty() || !fields[7].empty();
      const bool all = !fields[4].empty() && !fields[5].empty() &&
                       !fields[6].empty() && !fields[7].empty();
      if (any != all) fail("partial evaluation fields");
      r.has_eval = all;
      if (all) {
        r.smotsa = parse_double(fields[4], "smotsa");
        r.motsp = parse_double(fields[5], "motsp");
        r.recall = parse_double(fields[6], "recall");
        r.precision = parse_double(fields[7], "precision");
      }
    } catch (const ParseError& e) {
      fail(e.what());
    }
    log.records.push_back(r);
  }
  return log;
}

void write_meta_file(const std::filesystem::path& path,
                     const TrainConfig& config, int epochs_completed,
                     int height, int width) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "run-id=" << config.run_id << '\n';
  out << "data=" << config.data_dir.string() << '\n';
  out << "schedule=" << schedule_kind_name(config.schedule.kind) << '\n';
  out << "skip=" << skip_scheme_name(config.skip.scheme) << '\n';
  out << "skip-at-gt=" << (config.skip.apply_at_gt_phase ? "true" : "false")
      << '\n';
  out << "skip-at-pred="
      << (config.skip.apply_at_pred_phase ? "true" : "false") << '\n';
  out << "phase-length=" << config.skip.phase_length << '\n';
  out << "epochs=" << config.total_epochs << '\n';
  out << "clips-per-epoch=" << config.clips_per_epoch << '\n';
  out << "batch=" << config.batch_size << '\n';
  out << "clip-length=" << config.clip_length << '\n';
  out << "size=" << height << 'x' << width << '\n';
  out << "channels=" << config.channels << '\n';
  out << "hidden-channels=" << config.hidden_channels << '\n';
  out << "lr=" << g17(config.learning_rate) << '\n';
  out << "eval-every=" << config.eval_every << '\n';
  out << "seed=" << config.seed << '\n';
  out << "epochs-completed=" << epochs_completed << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

std::map<std::string, std::string> read_meta_file(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open meta file " + path.string());
  std::map<std::string, std::string> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": expected key=value, got '" + stripped + "'");
    out[trim(stripped.substr(0, eq))] = trim(stripped.substr(eq + 1));
  }
  return out;
}

DatasetSplit split_counts(int num_sequences) {
  if (num_sequences < 2)
    throw std::invalid_argument(
        "dataset needs at least 2 sequences for a train/eval split");
  DatasetSplit split;
  split.eval_count = std::max(1, num_sequences / 5);
  split.train_count = num_sequences - split.eval_count;
  return split;
}

TrainResult train(const TrainConfig& config_in) {
  TrainConfig config = resolved(config_in);
  if (config.data_dir.empty())
    throw std::invalid_argument("data directory is required");
  config.validate();
  if (config.data_dir.empty())
    throw std::invalid_argument("no dataset directory configured");

  const Dataset data = load_dataset(config.data_dir);
  if (config.height != 0 &&
      (data.height != config.height || data.width != config.width))
    throw std::invalid_argument(
        "dataset is " + std::to_string(data.height) + "x" +
        std::to_string(data.width) + " but the config says " +
        std::to_string(config.height) + "x" + std::to_string(config.width));
  if (data.height % 4 != 0 || data.width % 4 != 0)
    throw std::invalid_argument("dataset frame size must be divisible by 4");
  const DatasetSplit split = split_counts(
      static_cast<int>(data.sequences.size()));
  for (int i = 0; i < split.train_count; ++i)
    if (static_cast<int>(data.sequences[i].frames.size()) <
        config.clip_length)
      throw std::invalid_argument(
          "sequence " + data.sequences[i].id + " is shorter than clip-length");

  const int clips = config.clips_per_epoch > 0 ? config.clips_per_epoch
                                               : split.train_count;
  config.clips_per_epoch = clips;
  const int E = config.total_epochs;

  ModelParams params =
      init_params(config.channels, config.hidden_channels, config.seed);
  AdamState adam = make_adam(params);
  Rng rng(config.seed + 1);

  TrainResult result;
  result.run_dir = config.out_dir / config.run_id;
  std::filesystem::create_directories(result.run_dir);
  result.best_smotsa = -std::numeric_limits<double>::infinity();

  struct ClipJob {
    int seq_index = 0;
    ClipIndices indices;
    std::vector<bool> draws;
  };

  for (int e = 0; e < E; ++e) {
    const auto epoch_start = std::chrono::steady_clock::now();
    const double p = gt_probability(config.schedule, e);
    const Phase phase = e < E / 2 ? Phase::GtPhase : Phase::PredPhase;
    const int s = skip_for_epoch(config.skip, e, phase);

    std::vector<ClipJob> jobs(clips);
    for (int i = 0; i < clips; ++i) {
      jobs[i].seq_index = i % split.train_count;
      jobs[i].indices = sample_clip(
          static_cast<int>(data.sequences[jobs[i].seq_index].frames.size()),
          config.clip_length, s, rng);
      jobs[i].draws.assign(config.clip_length, true);
      for (int t = 2; t < config.clip_length; ++t)
        jobs[i].draws[t] = sample_use_gt(p, rng);
    }

    double loss_sum = 0.0;
    int loss_count = 0;
    for (int batch_start = 0, batch_no = 0; batch_start < clips;
         batch_start += config.batch_size, ++batch_no) {
      const int batch_len =
          std::min(config.batch_size, clips - batch_start);
      struct Slot {
        ModelParams grads;
        double loss = 0.0;
        bool used = false;
      };
      std::vector<Slot> slots(batch_len);
      parallel_for(batch_len, [&](std::size_t b) {
        const ClipJob& job = jobs[batch_start + b];
        const ClipData clip = assemble_clip(data.sequences[job.seq_index],
                                            job.indices, data.height,
                                            data.width);
        if (clip.targets.empty()) return;  // nothing visible in frame 0
        slots[b].grads = zeros_like(params);
        slots[b].loss =
            backward_clip(clip, job.draws, params, &slots[b].grads).loss;
        slots[b].used = true;
      });
      ModelParams grads = zeros_like(params);
      double batch_loss = 0.0;
      int used = 0;
      for (const Slot& slot : slots) {
        if (!slot.used) continue;
        add_params(&grads, slot.grads);
        batch_loss += slot.loss;
        ++used;
      }
      if (used == 0) continue;
      batch_loss /= used;
      if (!std::isfinite(batch_loss))
        throw std::runtime_error(
            "training diverged: non-finite loss at epoch " +
            std::to_string(e) + ", batch " + std::to_string(batch_no));
      scale_params(&grads, 1.0 / used);
      adam_step(params, grads, adam, config.learning_rate);
      loss_sum += batch_loss * used;
      loss_count += used;
    }

    RunRecord record;
    record.epoch = e;
    record.p_gt = p;
    record.skip = s;
    record.loss = loss_count > 0 ? loss_sum / loss_count : 0.0;
    if ((e + 1) % config.eval_every == 0 || e == E - 1) {
      const SequenceMetrics metrics = evaluate_split(params, data, split);
      record.has_eval = true;
      record.smotsa = metrics.smotsa;
      record.motsp = metrics.motsp;
      record.recall = metrics.recall;
      record.precision = metrics.precision;
      if (metrics.smotsa > result.best_smotsa) {
        result.best_smotsa = metrics.smotsa;
        result.best_checkpoint = result.run_dir / "best.ckpt";
        save_checkpoint(result.best_checkpoint, params);
        write_meta_file(result.run_dir / "best.ckpt.meta", config, e + 1,
                        data.height, data.width);
      }
    }
    record.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      epoch_start)
            .count();
    result.log.records.push_back(record);
  }

  result.params = params;
  result.final_checkpoint = result.run_dir / "final.ckpt";
  save_checkpoint(result.final_checkpoint, params);
  write_meta_file(result.run_dir / "final.ckpt.meta", config, E, data.height,
                  data.width);
  std::ofstream runlog(result.run_dir / "runlog.csv");
  if (!runlog)
    throw IoError("cannot write " + (result.run_dir / "runlog.csv").string());
  write_runlog_csv(runlog, result.log);
  return result;
}

SequenceAnnotation infer_sequence(const ModelParams& params,
                                  const std::vector<Image>& frames,
                                  const FrameAnnotation& first_frame) {
  if (frames.empty())
    throw std::invalid_argument("infer_sequence: no frames given");
  const int H = frames[0].height, W = frames[0].width;
  if (H % 4 != 0 || W % 4 != 0)
    throw std::invalid_argument(
        "infer_sequence: frame size must be divisible by 4");
  for (const Image& frame : frames)
    if (frame.height != H || frame.width != W)
      throw std::invalid_argument("infer_sequence: frames differ in size");
  if (first_frame.height != H || first_frame.width != W)
    throw std::invalid_argument(
        "infer_sequence: first-frame masks do not match the frame size");

  SequenceAnnotation out;
  out.height = H;
  out.width = W;

  struct TrackedObject {
    int track_id = 0;
    int class_id = 0;
    RecurrentState state;
    Image prev;
  };
  std::vector<TrackedObject> objects;
  FrameAnnotation given;
  given.frame_index = 0;
  given.height = H;
  given.width = W;
  for (const MaskEntry& entry : first_frame.entries) {
    if (entry.is_ignore_region() || entry.mask.area() == 0) continue;
    given.entries.push_back(entry);
    objects.push_back(
        {entry.track_id, entry.class_id, {}, mask_to_image(entry.mask)});
  }
  out.frames[0] = given;

  for (std::size_t t = 1; t < frames.size(); ++t) {
    const Tensor3 features = encode(frames[t], params);
    std::vector<MaskProposal> proposals;
    proposals.reserve(objects.size());
    for (TrackedObject& object : objects) {
      const Image prob = step(features, downsample_quarter(object.prev),
                              object.state, params);
      object.prev = prob;
      proposals.push_back({object.track_id, object.class_id, prob.pixels});
    }
    FrameAnnotation frame = resolve_overlaps(proposals, H, W);
    frame.frame_index = static_cast<int>(t);
    out.frames[static_cast<int>(t)] = frame;
  }
  return out;
}

}  // namespace cvos
