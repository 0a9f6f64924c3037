#include "cvos/curriculum.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace cvos {

void ScheduleSpec::validate() const {
  if (total_epochs < 2)
    throw std::invalid_argument("schedule: total_epochs must be >= 2");
  if (!(epsilon >= 0.0 && epsilon < 1.0))
    throw std::invalid_argument("schedule: epsilon must be in [0, 1)");
  if (!(k > 0.0)) throw std::invalid_argument("schedule: k must be > 0");
}

void SkipSchedule::validate() const {
  if (phase_length < 1)
    throw std::invalid_argument("skip: phase_length must be >= 1");
  const int steps = scheme == SkipScheme::ZeroToNine  ? 10
                    : scheme == SkipScheme::OneToFive ? 5
                                                      : 0;
  if (phase_length < steps)
    throw std::invalid_argument(
        "skip: phase_length shorter than the scheme's " +
        std::to_string(steps) + " skipping steps");
}

double gt_probability(const ScheduleSpec& spec, int epoch) {
  spec.validate();
  const int total = spec.total_epochs;
  if (epoch < 0 || epoch >= total)
    throw std::out_of_range("gt_probability: epoch " + std::to_string(epoch) +
                            " outside [0, " + std::to_string(total) + ")");
  const double progress = static_cast<double>(epoch) / (total - 1);
  switch (spec.kind) {
    case ScheduleKind::TeacherForcing:
      return 1.0;
    case ScheduleKind::ForwardStep:
      return 2 * epoch < total ? 1.0 : 0.0;
    case ScheduleKind::InverseStep:
      return 2 * epoch < total ? 0.0 : 1.0;
    case ScheduleKind::ForwardLinear:
      return 1.0 - progress;
    case ScheduleKind::InverseLinear:
      return progress;
    case ScheduleKind::ForwardExponential:
      return std::max(spec.epsilon, std::pow(spec.epsilon, progress));
    case ScheduleKind::InverseSigmoidDecay: {
      const double p = spec.k / (spec.k + std::exp(epoch / spec.k));
      return std::clamp(p, 0.0, 1.0);
    }
  }
  throw std::invalid_argument("gt_probability: unknown schedule kind");
}

bool sample_use_gt(double p, Rng& rng) {
  if (!(p >= 0.0 && p <= 1.0))
    throw std::invalid_argument("sample_use_gt: p must be in [0, 1]");
  return uniform_unit(rng) < p;
}

int skip_for_epoch(const SkipSchedule& schedule, int epoch, Phase phase) {
  schedule.validate();
  if (epoch < 0) throw std::out_of_range("skip_for_epoch: negative epoch");
  if (schedule.scheme == SkipScheme::NoSkip) return 0;
  const bool applied = phase == Phase::GtPhase ? schedule.apply_at_gt_phase
                                               : schedule.apply_at_pred_phase;
  if (!applied) return 0;
  const int e = epoch % schedule.phase_length;
  switch (schedule.scheme) {
    case SkipScheme::ZeroToNine:
      return std::min(9, e / 2);
    case SkipScheme::OneToFive:
      return std::min(5, 1 + e / 4);
    case SkipScheme::NoSkip:
      break;
  }
  return 0;
}

ClipIndices sample_clip(int sequence_length, int clip_length, int skip,
                        Rng& rng) {
  if (clip_length < 1)
    throw std::invalid_argument("sample_clip: clip_length must be >= 1");
  if (skip < 0) throw std::invalid_argument("sample_clip: negative skip");
  if (sequence_length < clip_length)
    throw std::invalid_argument(
        "sample_clip: sequence of " + std::to_string(sequence_length) +
        " frames cannot hold a clip of " + std::to_string(clip_length));

  // Largest feasible skip: (clip_length-1)*(skip+1)+1 <= sequence_length.
  if (clip_length > 1) {
    const int max_skip = (sequence_length - clip_length) / (clip_length - 1);
    skip = std::min(skip, max_skip);
  }
  const int stride = skip + 1;
  const int span = (clip_length - 1) * stride + 1;

  ClipIndices clip;
  clip.start = static_cast<int>(uniform_int(rng, 0, sequence_length - span));
  clip.stride = stride;
  clip.length = clip_length;
  clip.indices.reserve(clip_length);
  for (int i = 0; i < clip_length; ++i)
    clip.indices.push_back(clip.start + i * stride);
  return clip;
}

namespace {

struct ScheduleName {
  ScheduleKind kind;
  const char* name;
};
constexpr ScheduleName kScheduleNames[] = {
    {ScheduleKind::TeacherForcing, "teacher-forcing"},
    {ScheduleKind::ForwardStep, "forward-step"},
    {ScheduleKind::InverseStep, "inverse-step"},
    {ScheduleKind::ForwardLinear, "forward-linear"},
    {ScheduleKind::InverseLinear, "inverse-linear"},
    {ScheduleKind::ForwardExponential, "forward-exponential"},
    {ScheduleKind::InverseSigmoidDecay, "inverse-sigmoid"},
};

struct SkipName {
  SkipScheme scheme;
  const char* name;
};
constexpr SkipName kSkipNames[] = {
    {SkipScheme::NoSkip, "none"},
    {SkipScheme::ZeroToNine, "0to9"},
    {SkipScheme::OneToFive, "1to5"},
};

}  // namespace

const char* schedule_kind_name(ScheduleKind kind) {
  for (const auto& entry : kScheduleNames)
    if (entry.kind == kind) return entry.name;
  return "?";
}

bool schedule_kind_from_name(const std::string& name, ScheduleKind* out) {
  for (const auto& entry : kScheduleNames) {
    if (name == entry.name) {
      *out = entry.kind;
      return true;
    }
  }
  return false;
}

const char* skip_scheme_name(SkipScheme scheme) {
  for (const auto& entry : kSkipNames)
    if (entry.scheme == scheme) return entry.name;
  return "?";
}

bool skip_scheme_from_name(const std::string& name, SkipScheme* out) {
  for (const auto& entry : kSkipNames) {
    if (name == entry.name) {
      *out = entry.scheme;
      return true;
    }
  }
  return false;
}

}  // namespace cvos
