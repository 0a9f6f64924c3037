#include "cvos/mask.hpp"

#include <algorithm>
#include <bit>
#include <stdexcept>

#include "cvos/errors.hpp"

namespace cvos {

InstanceMask::InstanceMask(int height, int width)
    : height_(height), width_(width) {
  if (height <= 0 || width <= 0)
    throw std::invalid_argument("InstanceMask: dimensions must be positive");
  const std::size_t pixels = static_cast<std::size_t>(height) * width;
  words_.assign((pixels + 63) / 64, 0);
}

std::int64_t InstanceMask::area() const {
  std::int64_t n = 0;
  for (const std::uint64_t w : words_) n += std::popcount(w);
  return n;
}

std::int64_t intersection_area(const InstanceMask& a, const InstanceMask& b) {
  std::int64_t n = 0;
  for (std::size_t i = 0; i < a.words_.size(); ++i)
    n += std::popcount(a.words_[i] & b.words_[i]);
  return n;
}

bool masks_disjoint(const InstanceMask& a, const InstanceMask& b) {
  for (std::size_t i = 0; i < a.words_.size(); ++i)
    if (a.words_[i] & b.words_[i]) return false;
  return true;
}

double mask_iou(const InstanceMask& a, const InstanceMask& b) {
  if (a.height() != b.height() || a.width() != b.width())
    throw std::invalid_argument("mask_iou: dimension mismatch");
  const std::int64_t inter = intersection_area(a, b);
  const std::int64_t uni = a.area() + b.area() - inter;
  if (uni == 0) return 0.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

namespace {

// Run lengths over column-major pixel order, starting with a zero-run.
std::vector<std::int64_t> mask_to_counts(const InstanceMask& mask) {
  std::vector<std::int64_t> counts;
  bool prev = false;
  std::int64_t run = 0;
  for (int col = 0; col < mask.width(); ++col) {
    for (int row = 0; row < mask.height(); ++row) {
      const bool bit = mask.get(row, col);
      if (bit != prev) {
        counts.push_back(run);
        run = 0;
        prev = bit;
      }
      ++run;
    }
  }
  counts.push_back(run);
  return counts;
}

}  // namespace

std::string rle_encode(const InstanceMask& mask) {
  const std::vector<std::int64_t> counts = mask_to_counts(mask);
  std::string out;
  out.reserve(counts.size() * 2);
  for (std::size_t i = 0; i < counts.size(); ++i) {
    std::int64_t x = counts[i];
    if (i > 2) x -= counts[i - 2];
    bool more = true;
    while (more) {
      char c = static_cast<char>(x & 0x1f);
      x >>= 5;
      more = (c & 0x10) ? x != -1 : x != 0;
      if (more) c |= 0x20;
      out.push_back(static_cast<char>(c + 48));
    }
  }
  return out;
}

InstanceMask rle_decode(const std::string& rle, int height, int width) {
  if (height <= 0 || width <= 0)
    throw std::invalid_argument("rle_decode: dimensions must be positive");
  const std::int64_t pixels = static_cast<std::int64_t>(height) * width;

  std::vector<std::int64_t> counts;
  std::size_t p = 0;
  while (p < rle.size()) {
    std::int64_t x = 0;
    int k = 0;
    bool more = true;
    while (more) {
      if (p >= rle.size())
        throw ParseError("rle_decode: truncated count group at offset " +
                         std::to_string(p));
      const char raw = rle[p];
      if (raw < 48 || raw > 111)
        throw ParseError("rle_decode: invalid character at offset " +
                         std::to_string(p));
      const int c = raw - 48;
      x |= static_cast<std::int64_t>(c & 0x1f) << (5 * k);
      more = (c & 0x20) != 0;
      ++p;
      ++k;
      if (!more && (c & 0x10)) x |= ~std::int64_t{0} << (5 * k);
    }
    if (counts.size() > 2) x += counts[counts.size() - 2];
    counts.push_back(x);
  }

  InstanceMask mask(height, width);
  std::int64_t pixel = 0;
  bool value = false;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const std::int64_t run = counts[i];
    if (run < 0)
      throw ParseError("rle_decode: negative run at count index " +
                       std::to_string(i));
    if (pixel + run > pixels)
      throw ParseError("rle_decode: counts overflow " +
                       std::to_string(pixels) + " pixels at count index " +
                       std::to_string(i));
    if (value) {
      for (std::int64_t j = pixel; j < pixel + run; ++j) {
        const int col = static_cast<int>(j / height);
        const int row = static_cast<int>(j % height);
        mask.set(row, col, true);
      }
    }
    pixel += run;
    value = !value;
  }
  if (pixel != pixels)
    throw ParseError("rle_decode: counts sum to " + std::to_string(pixel) +
                     ", expected " + std::to_string(pixels));
  return mask;
}

FrameAnnotation resolve_overlaps(const std::vector<MaskProposal>& proposals,
                                 int height, int width, double threshold) {
  if (height <= 0 || width <= 0)
    throw std::invalid_argument("resolve_overlaps: bad dimensions");
  const std::size_t pixels = static_cast<std::size_t>(height) * width;
  for (const auto& prop : proposals)
    if (prop.confidence.size() != pixels)
      throw std::invalid_argument(
          "resolve_overlaps: confidence map size mismatch");

  // Proposals sorted by track id so equal confidences fall to the lowest id.
  std::vector<std::size_t> order(proposals.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return proposals[a].track_id < proposals[b].track_id;
                   });

  std::vector<InstanceMask> masks(proposals.size(),
                                  InstanceMask(height, width));
  for (std::size_t p = 0; p < pixels; ++p) {
    double best = -1.0;
    std::size_t best_idx = proposals.size();
    for (const std::size_t i : order) {
      const double c = proposals[i].confidence[p];
      if (c > best) {
        best = c;
        best_idx = i;
      }
    }
    if (best_idx < proposals.size() && best >= threshold) {
      masks[best_idx].set(static_cast<int>(p) / width,
                          static_cast<int>(p) % width, true);
    }
  }

  FrameAnnotation frame;
  frame.height = height;
  frame.width = width;
  for (const std::size_t i : order) {
    if (masks[i].area() == 0) continue;
    frame.entries.push_back(
        {proposals[i].track_id, proposals[i].class_id, std::move(masks[i])});
  }
  return frame;
}

}  // namespace cvos
