#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace cvos {

// Track id reserved by the KITTI-MOTS format for ignore regions.
inline constexpr int kIgnoreTrackId = 10000;

// A binary mask over a height x width pixel grid. Bits are stored row-major
// in packed 64-bit words; set-algebra helpers run word-wise.
class InstanceMask {
 public:
  InstanceMask() = default;
  InstanceMask(int height, int width);

  int height() const { return height_; }
  int width() const { return width_; }
  bool empty_dims() const { return height_ == 0 || width_ == 0; }

  bool get(int row, int col) const {
    const std::size_t i = index(row, col);
    return (words_[i >> 6] >> (i & 63)) & 1;
  }
  void set(int row, int col, bool value) {
    const std::size_t i = index(row, col);
    const std::uint64_t bit = std::uint64_t{1} << (i & 63);
    if (value)
      words_[i >> 6] |= bit;
    else
      words_[i >> 6] &= ~bit;
  }

  std::int64_t area() const;
  bool operator==(const InstanceMask& other) const = default;

  friend std::int64_t intersection_area(const InstanceMask& a,
                                        const InstanceMask& b);
  friend bool masks_disjoint(const InstanceMask& a, const InstanceMask& b);

 private:
  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * width_ + col;
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint64_t> words_;
};

std::int64_t intersection_area(const InstanceMask& a, const InstanceMask& b);
bool masks_disjoint(const InstanceMask& a, const InstanceMask& b);

// |a n b| / |a u b|; 0 when both masks are empty. Throws
// std::invalid_argument on dimension mismatch.
double mask_iou(const InstanceMask& a, const InstanceMask& b);

// COCO-style compressed RLE over column-major pixel order. decode throws
// ParseError (with the character offset) on malformed input or counts that
// do not sum to height*width.
std::string rle_encode(const InstanceMask& mask);
InstanceMask rle_decode(const std::string& rle, int height, int width);

// One annotated object in a frame.
struct MaskEntry {
  int track_id = 0;
  int class_id = 0;
  InstanceMask mask;

  bool is_ignore_region() const { return track_id == kIgnoreTrackId; }
  bool operator==(const MaskEntry& other) const = default;
};

// All objects of one frame. MOTS requires the masks to be pairwise
// disjoint; parsers and resolve_overlaps enforce this.
struct FrameAnnotation {
  int frame_index = 0;
  int height = 0;
  int width = 0;
  std::vector<MaskEntry> entries;

  bool operator==(const FrameAnnotation& other) const = default;
};

// Frames of one video sequence, keyed by frame index.
struct SequenceAnnotation {
  std::string sequence_id;
  int height = 0;
  int width = 0;
  std::map<int, FrameAnnotation> frames;

  bool operator==(const SequenceAnnotation& other) const = default;
};

// A per-object confidence map proposal prior to binarization.
struct MaskProposal {
  int track_id = 0;
  int class_id = 0;
  std::vector<double> confidence;  // row-major, height*width, values in [0,1]
};

// Assigns each pixel to the proposal with maximal confidence when that
// confidence reaches `threshold`; ties go to the lowest track id. The
// resulting masks are pairwise disjoint. Entries that end up empty are kept
// out of the frame.
FrameAnnotation resolve_overlaps(const std::vector<MaskProposal>& proposals,
                                 int height, int width,
                                 double threshold = 0.5);

}  // namespace cvos
