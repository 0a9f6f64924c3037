#pragma once

#include <string>
#include <vector>

#include "cvos/rng.hpp"

namespace cvos {

// Decay schedules for the probability of feeding the ground-truth previous
// mask (rather than the model's own prediction) into the recurrent input.
// Forward schedules start at ground truth and hand over to predictions;
// inverse schedules run the other way. InverseSigmoidDecay is the classic
// k/(k+exp(e/k)) decay, a forward-style curve despite its name.
enum class ScheduleKind {
  TeacherForcing,
  ForwardStep,
  InverseStep,
  ForwardLinear,
  InverseLinear,
  ForwardExponential,
  InverseSigmoidDecay,
};

struct ScheduleSpec {
  ScheduleKind kind = ScheduleKind::TeacherForcing;
  int total_epochs = 40;
  double epsilon = 0.01;  // floor of the exponential decay, in [0, 1)
  double k = 5.0;         // inverse-sigmoid shape parameter, > 0

  void validate() const;  // throws std::invalid_argument
};

// Progressive frame-skipping schemes. ZeroToNine raises the skip step by 1
// every 2 epochs from 0 up to 9; OneToFive raises it every 4 epochs from 1
// up to 5.
enum class SkipScheme {
  NoSkip,
  ZeroToNine,
  OneToFive,
};

struct SkipSchedule {
  SkipScheme scheme = SkipScheme::NoSkip;
  bool apply_at_gt_phase = true;
  bool apply_at_pred_phase = false;
  int phase_length = 20;

  void validate() const;  // throws std::invalid_argument
};

// Training phase: ground-truth recurrent inputs vs the model's predictions.
enum class Phase { GtPhase, PredPhase };

// A temporally subsampled clip: indices start, start+stride, ...
struct ClipIndices {
  int start = 0;
  int stride = 1;  // stride = skip + 1
  int length = 0;
  std::vector<int> indices;
};

// Probability that a recurrent mask input uses the ground-truth previous
// mask at the given epoch. Throws std::out_of_range for epoch outside
// [0, total_epochs).
double gt_probability(const ScheduleSpec& spec, int epoch);

// One Bernoulli draw: true (use ground truth) with probability p.
bool sample_use_gt(double p, Rng& rng);

// Skip step for the epoch under the given schedule and phase. The phase a
// global epoch belongs to is the caller's decision; the progression restarts
// from its lowest value at each phase boundary (epoch mod phase_length).
int skip_for_epoch(const SkipSchedule& schedule, int epoch, Phase phase);

// Samples a clip of `clip_length` frames with the requested skip from a
// sequence of `sequence_length` frames. If the skipped clip does not fit,
// the skip is reduced to the largest feasible value (possibly 0). Throws
// std::invalid_argument when sequence_length < clip_length.
ClipIndices sample_clip(int sequence_length, int clip_length, int skip,
                        Rng& rng);

// Name mappings used by CLI flags and config files: "teacher-forcing",
// "forward-step", "inverse-step", "forward-linear", "inverse-linear",
// "forward-exponential", "inverse-sigmoid" / "none", "0to9", "1to5".
const char* schedule_kind_name(ScheduleKind kind);
bool schedule_kind_from_name(const std::string& name, ScheduleKind* out);
const char* skip_scheme_name(SkipScheme scheme);
bool skip_scheme_from_name(const std::string& name, SkipScheme* out);

}  // namespace cvos
