#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cvos/image.hpp"
#include "cvos/mask.hpp"

namespace cvos {

struct VideoSequence {
  std::string id;
  std::vector<Image> frames;
  SequenceAnnotation annotation;
};

struct Dataset {
  std::vector<VideoSequence> sequences;  // sorted by id
  int height = 0;
  int width = 0;
};

Image mask_to_image(const InstanceMask& mask);

// Loads a dataset laid out as written by generate():
//   <root>/<seq_id>/frames/%06d.pgm  (contiguous from 000000)
//   <root>/instances_txt/<seq_id>.txt
// Every sequence directory must have a matching annotation file; image
// sizes must agree across frames, annotations and sequences.
Dataset load_dataset(const std::filesystem::path& root);

}  // namespace cvos
