#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cvos/image.hpp"
#include "cvos/mask.hpp"

namespace cvos {

struct SynthConfig {
  int num_sequences = 4;
  int frames_per_sequence = 30;
  int height = 32;
  int width = 32;
  int num_objects = 2;  // 1..4
  bool rectangles = true;
  bool disks = true;
  double speed_min = 0.5;  // pixels/frame
  double speed_max = 2.0;
  int size_min = 3;  // object half-extent / radius, pixels
  int size_max = 6;
  bool occlusion_allowed = true;
  double background_noise_sigma = 0.05;
  std::uint64_t seed = 1;

  void validate() const;  // throws std::invalid_argument
};

struct SynthSequence {
  std::string id;
  std::vector<Image> frames;
  SequenceAnnotation annotation;
};

// Generates sequence `index` of the config deterministically; the
// per-sequence seed is config.seed + index. Track ids are 1001, 1002, ...
// (class 1); objects follow constant-velocity motion with elastic
// reflection at the borders, and higher track ids occlude lower ones.
// Fully occluded objects are omitted from that frame's annotation.
// With occlusion_allowed=false, objects are confined to disjoint
// horizontal lanes so their masks can never touch.
SynthSequence generate_sequence(const SynthConfig& config, int index);

// Writes the full dataset:
//   <root>/<seq_id>/frames/%06d.pgm
//   <root>/instances_txt/<seq_id>.txt
//   <root>/manifest.json
// Sequences are generated in parallel (their seeds are independent).
void generate(const SynthConfig& config, const std::filesystem::path& root);

}  // namespace cvos
