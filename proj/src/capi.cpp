#include "cvos/cvos.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <stdexcept>
#include <string>
#include <vector>

#include "cvos/curriculum.hpp"
#include "cvos/errors.hpp"
#include "cvos/mask.hpp"
#include "cvos/mots_eval.hpp"
#include "cvos/report.hpp"
#include "cvos/synthgen.hpp"
#include "cvos/trainer.hpp"

struct cvos_config {
  cvos::TrainConfig config;
};

struct cvos_metrics {
  cvos::MetricsReport report;
  std::vector<std::string> ids;  // per_sequence keys, in map order
};

namespace {

thread_local std::string t_error;

cvos_status fail(cvos_status code, const std::string& what) {
  t_error = what;
  return code;
}

template <typename Fn>
cvos_status guarded(Fn&& fn) {
  try {
    fn();
  } catch (const cvos::ParseError& e) {
    return fail(CVOS_PARSE_ERROR, e.what());
  } catch (const cvos::IoError& e) {
    return fail(CVOS_IO_ERROR, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(CVOS_INVALID_ARGUMENT, e.what());
  } catch (const std::out_of_range& e) {
    return fail(CVOS_INVALID_ARGUMENT, e.what());
  } catch (const std::exception& e) {
    return fail(CVOS_RUNTIME_ERROR, e.what());
  }
  t_error.clear();
  return CVOS_OK;
}

cvos_status require(bool ok, const char* what) {
  return ok ? CVOS_OK : fail(CVOS_INVALID_ARGUMENT, what);
}

}  // namespace

extern "C" {

const char* cvos_version(void) { return "1.0.0"; }

const char* cvos_last_error(void) { return t_error.c_str(); }

int cvos_schedule_count(void) { return 7; }

const char* cvos_schedule_name(int index) {
  if (index < 0 || index >= cvos_schedule_count()) return nullptr;
  return cvos::schedule_kind_name(static_cast<cvos::ScheduleKind>(index));
}

int cvos_skip_scheme_count(void) { return 3; }

const char* cvos_skip_scheme_name(int index) {
  if (index < 0 || index >= cvos_skip_scheme_count()) return nullptr;
  return cvos::skip_scheme_name(static_cast<cvos::SkipScheme>(index));
}

cvos_status cvos_gt_probability(const char* schedule, int total_epochs,
                                int epoch, double* out_p) {
  if (require(schedule && out_p, "null argument") != CVOS_OK)
    return CVOS_INVALID_ARGUMENT;
  return guarded([&] {
    cvos::ScheduleSpec spec;
    if (!cvos::schedule_kind_from_name(schedule, &spec.kind))
      throw std::invalid_argument("unknown schedule: " +
                                  std::string(schedule));
    spec.total_epochs = total_epochs;
    spec.validate();
    *out_p = cvos::gt_probability(spec, epoch);
  });
}

cvos_status cvos_skip_for_epoch(const char* scheme, int apply_at_gt,
                                int apply_at_pred, int phase_length,
                                int epoch, int pred_phase, int* out_skip) {
  if (require(scheme && out_skip, "null argument") != CVOS_OK)
    return CVOS_INVALID_ARGUMENT;
  return guarded([&] {
    cvos::SkipSchedule schedule;
    if (!cvos::skip_scheme_from_name(scheme, &schedule.scheme))
      throw std::invalid_argument("unknown skip scheme: " +
                                  std::string(scheme));
    schedule.apply_at_gt_phase = apply_at_gt != 0;
    schedule.apply_at_pred_phase = apply_at_pred != 0;
    schedule.phase_length = phase_length;
    *out_skip = cvos::skip_for_epoch(
        schedule, epoch,
        pred_phase ? cvos::Phase::PredPhase : cvos::Phase::GtPhase);
  });
}

cvos_status cvos_rle_encode(const uint8_t* mask, int height, int width,
                            char** out) {
  if (require(mask && out, "null argument") != CVOS_OK)
    return CVOS_INVALID_ARGUMENT;
  if (require(height > 0 && width > 0,
              "height and width must be positive") != CVOS_OK)
    return CVOS_INVALID_ARGUMENT;
  return guarded([&] {
    cvos::InstanceMask m(height, width);
    for (int r = 0; r < height; ++r)
      for (int c = 0; c < width; ++c)
        if (mask[static_cast<std::size_t>(r) * width + c]) m.set(r, c, true);
    const std::string rle = cvos::rle_encode(m);
    char* buffer = static_cast<char*>(std::malloc(rle.size() + 1));
    if (!buffer) throw std::bad_alloc();
    std::memcpy(buffer, rle.c_str(), rle.size() + 1);
    *out = buffer;
  });
}

cvos_status cvos_rle_decode(const char* rle, int height, int width,
                            uint8_t** out) {
  if (require(rle && out, "null argument") != CVOS_OK)
    return CVOS_INVALID_ARGUMENT;
  if (require(height > 0 && width > 0,
              "height and width must be positive") != CVOS_OK)
    return CVOS_INVALID_ARGUMENT;
  return guarded([&] {
    const cvos::InstanceMask m = cvos::rle_decode(rle, height, width);
    const std::size_t n =
        static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
    uint8_t* buffer = static_cast<uint8_t*>(std::malloc(n));
    if (!buffer) throw std::bad_alloc();
    for (int r = 0; r < height; ++r)
      for (int c = 0; c < width; ++c)
        buffer[static_cast<std::size_t>(r) * width + c] =
            m.get(r, c) ? 1 : 0;
    *out = buffer;
  });
}

void cvos_free(void* ptr) { std::free(ptr); }

cvos_status cvos_generate(const char* out_dir, int sequences, int frames,
                          int height, int width, int objects,
                          double speed_min, double speed_max,
                          uint64_t seed) {
  if (require(out_dir != nullptr, "null out_dir") != CVOS_OK)
    return CVOS_INVALID_ARGUMENT;
  return guarded([&] {
    cvos::SynthConfig config;
    if (sequences > 0) config.num_sequences = sequences;
    if (frames > 0) config.frames_per_sequence = frames;
    if (height > 0) config.height = height;
    if (width > 0) config.width = width;
    if (objects > 0) config.num_objects = objects;
    if (speed_min > 0) config.speed_min = speed_min;
    if (speed_max > 0) config.speed_max = speed_max;
    config.seed = seed;
    // The segmentation model downsamples twice, so datasets meant for
    // training must have both dimensions divisible by 4.
    if (config.height % 4 != 0 || config.width % 4 != 0)
      throw std::invalid_argument("size must be divisible by 4");
    cvos::generate(config, out_dir);
  });
}

cvos_config* cvos_config_new(void) { return new (std::nothrow) cvos_config; }

void cvos_config_free(cvos_config* config) { delete config; }

cvos_status cvos_config_set(cvos_config* config, const char* key,
                            const char* value) {
  if (require(config && key && value, "null argument") != CVOS_OK)
    return CVOS_INVALID_ARGUMENT;
  return guarded(
      [&] { cvos::set_config_value(&config->config, key, value); });
}

cvos_status cvos_config_load_file(cvos_config* config, const char* path) {
  if (require(config && path, "null argument") != CVOS_OK)
    return CVOS_INVALID_ARGUMENT;
  return guarded([&] { cvos::load_config_file(&config->config, path); });
}

cvos_status cvos_train(const cvos_config* config, double* out_best_smotsa) {
  if (require(config != nullptr, "null config") != CVOS_OK)
    return CVOS_INVALID_ARGUMENT;
  return guarded([&] {
    const cvos::TrainResult result = cvos::train(config->config);
    if (out_best_smotsa) *out_best_smotsa = result.best_smotsa;
  });
}

cvos_status cvos_evaluate(const char* gt_path, const char* pred_path,
                          int class_id, cvos_metrics** out) {
  if (require(gt_path && pred_path && out, "null argument") != CVOS_OK)
    return CVOS_INVALID_ARGUMENT;
  return guarded([&] {
    auto metrics = std::make_unique<cvos_metrics>();
    metrics->report = cvos::evaluate_paths(gt_path, pred_path, class_id);
    for (const auto& [id, row] : metrics->report.per_sequence)
      metrics->ids.push_back(id);
    *out = metrics.release();
  });
}

int cvos_metrics_sequence_count(const cvos_metrics* metrics) {
  return metrics ? static_cast<int>(metrics->ids.size()) : 0;
}

const char* cvos_metrics_sequence_id(const cvos_metrics* metrics,
                                     int index) {
  if (!metrics || index < 0 ||
      index >= static_cast<int>(metrics->ids.size()))
    return nullptr;
  return metrics->ids[index].c_str();
}

cvos_status cvos_metrics_row(const cvos_metrics* metrics, int index,
                             double* smotsa, double* motsp, double* recall,
                             double* precision, double* motsa) {
  if (require(metrics != nullptr, "null metrics") != CVOS_OK)
    return CVOS_INVALID_ARGUMENT;
  if (require(index >= -1 && index < static_cast<int>(metrics->ids.size()),
              "metrics row index out of range") != CVOS_OK)
    return CVOS_INVALID_ARGUMENT;
  const cvos::SequenceMetrics& row =
      index < 0 ? metrics->report.averaged
                : metrics->report.per_sequence.at(metrics->ids[index]);
  if (smotsa) *smotsa = row.smotsa;
  if (motsp) *motsp = row.motsp;
  if (recall) *recall = row.recall;
  if (precision) *precision = row.precision;
  if (motsa) *motsa = row.motsa;
  t_error.clear();
  return CVOS_OK;
}

int cvos_metrics_warning_count(const cvos_metrics* metrics) {
  return metrics ? static_cast<int>(metrics->report.warnings.size()) : 0;
}

const char* cvos_metrics_warning(const cvos_metrics* metrics, int index) {
  if (!metrics || index < 0 ||
      index >= static_cast<int>(metrics->report.warnings.size()))
    return nullptr;
  return metrics->report.warnings[index].c_str();
}

cvos_status cvos_metrics_write_csv(const cvos_metrics* metrics,
                                   const char* path) {
  if (require(metrics && path, "null argument") != CVOS_OK)
    return CVOS_INVALID_ARGUMENT;
  return guarded([&] { cvos::write_metrics_csv(path, metrics->report); });
}

void cvos_metrics_free(cvos_metrics* metrics) { delete metrics; }

cvos_status cvos_report(const char* runs_dir, const char* out_dir) {
  if (require(runs_dir && out_dir, "null argument") != CVOS_OK)
    return CVOS_INVALID_ARGUMENT;
  return guarded([&] { cvos::write_report(runs_dir, out_dir); });
}

}  // extern "C"
