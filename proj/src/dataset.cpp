#include "cvos/dataset.hpp"

#include <algorithm>
#include <cstdio>

#include "cvos/errors.hpp"
#include "cvos/mots_io.hpp"

namespace cvos {

Image mask_to_image(const InstanceMask& mask) {
  Image image(mask.height(), mask.width());
  for (int r = 0; r < mask.height(); ++r)
    for (int c = 0; c < mask.width(); ++c)
      if (mask.get(r, c)) image.at(r, c) = 1.0;
  return image;
}

Dataset load_dataset(const std::filesystem::path& root) {
  if (!std::filesystem::is_directory(root))
    throw IoError("dataset root is not a directory: " + root.string());

  std::vector<std::string> ids;
  for (const auto& entry : std::filesystem::directory_iterator(root)) {
    if (!entry.is_directory()) continue;
    const std::string name = entry.path().filename().string();
    if (name == "instances_txt") continue;
    if (!std::filesystem::is_directory(entry.path() / "frames"))
      throw IoError("sequence " + name + " has no frames/ directory");
    ids.push_back(name);
  }
  std::sort(ids.begin(), ids.end());
  if (ids.empty())
    throw IoError("no sequence directories under " + root.string());

  Dataset dataset;
  for (const std::string& id : ids) {
    VideoSequence seq;
    seq.id = id;
    const auto frames_dir = root / id / "frames";
    for (int t = 0;; ++t) {
      char name[32];
      std::snprintf(name, sizeof name, "%06d.pgm", t);
      const auto path = frames_dir / name;
      if (!std::filesystem::exists(path)) break;
      seq.frames.push_back(read_pgm(path));
    }
    if (seq.frames.empty())
      throw IoError("sequence " + id + " has no frames");
    std::size_t extra = 0;
    for (const auto& entry : std::filesystem::directory_iterator(frames_dir))
      if (entry.is_regular_file()) ++extra;
    if (extra != seq.frames.size())
      throw IoError("sequence " + id +
                    ": frame files are not contiguous %06d.pgm names");

    const int h = seq.frames[0].height, w = seq.frames[0].width;
    for (const Image& frame : seq.frames)
      if (frame.height != h || frame.width != w)
        throw ParseError("sequence " + id + ": frame sizes differ");

    const auto ann_path = root / "instances_txt" / (id + ".txt");
    if (!std::filesystem::exists(ann_path))
      throw IoError("missing annotation file " + ann_path.string());
    seq.annotation = load_mots_file(ann_path);
    seq.annotation.sequence_id = id;
    if (seq.annotation.height == 0) {
      seq.annotation.height = h;
      seq.annotation.width = w;
    } else if (seq.annotation.height != h || seq.annotation.width != w) {
      throw ParseError("sequence " + id +
                       ": annotation size does not match the frames");
    }
    if (!seq.annotation.frames.empty() &&
        seq.annotation.frames.rbegin()->first >=
            static_cast<int>(seq.frames.size()))
      throw ParseError("sequence " + id +
                       ": annotation refers to a frame beyond the video");

    if (dataset.height == 0) {
      dataset.height = h;
      dataset.width = w;
    } else if (dataset.height != h || dataset.width != w) {
      throw ParseError("sequence " + id +
                       ": image size differs from the rest of the dataset");
    }
    dataset.sequences.push_back(std::move(seq));
  }
  return dataset;
}

}  // namespace cvos
