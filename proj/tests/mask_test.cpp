#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

#include "cvos/errors.hpp"
#include "cvos/mask.hpp"
#include "cvos/rng.hpp"
#include "rle_fixtures.h"

using namespace cvos;

namespace {

InstanceMask from_bits(int h, int w, const char* bits) {
  REQUIRE(std::strlen(bits) == static_cast<std::size_t>(h) * w);
  InstanceMask mask(h, w);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      if (bits[r * w + c] == '1') mask.set(r, c, true);
  return mask;
}

InstanceMask random_mask(int h, int w, double density, Rng& rng) {
  InstanceMask mask(h, w);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      if (uniform_unit(rng) < density) mask.set(r, c, true);
  return mask;
}

}  // namespace

TEST_CASE("area counts set bits") {
  InstanceMask mask(3, 4);
  CHECK(mask.area() == 0);
  mask.set(0, 0, true);
  mask.set(2, 3, true);
  mask.set(1, 2, true);
  CHECK(mask.area() == 3);
  mask.set(1, 2, false);
  CHECK(mask.area() == 2);
  CHECK(mask.get(0, 0));
  CHECK_FALSE(mask.get(1, 2));
}

TEST_CASE("iou of identical non-empty masks is 1") {
  Rng rng(11);
  const InstanceMask a = random_mask(9, 13, 0.4, rng);
  CHECK(mask_iou(a, a) == 1.0);
}

TEST_CASE("iou of disjoint masks is 0") {
  InstanceMask a(4, 4), b(4, 4);
  a.set(0, 0, true);
  b.set(3, 3, true);
  CHECK(mask_iou(a, b) == 0.0);
}

TEST_CASE("iou of a 4-pixel square against its shifted copy is 3/5") {
  // a: rows 0-1 x cols 0-1; b: same square shifted to overlap 3 pixels is
  // not possible on a grid, so b is an L of 4 pixels sharing 3 with a.
  InstanceMask a(3, 3), b(3, 3);
  a.set(0, 0, true);
  a.set(0, 1, true);
  a.set(1, 0, true);
  a.set(1, 1, true);
  b.set(0, 1, true);
  b.set(1, 0, true);
  b.set(1, 1, true);
  b.set(2, 2, true);
  CHECK(mask_iou(a, b) == doctest::Approx(0.6).epsilon(1e-15));
}

TEST_CASE("iou of two empty masks is 0") {
  InstanceMask a(5, 5), b(5, 5);
  CHECK(mask_iou(a, b) == 0.0);
}

TEST_CASE("iou rejects mismatched dimensions") {
  InstanceMask a(4, 4), b(4, 5);
  CHECK_THROWS_AS(mask_iou(a, b), std::invalid_argument);
}

TEST_CASE("iou is symmetric and within [0,1] on random pairs") {
  Rng rng(12);
  for (int i = 0; i < 300; ++i) {
    const int h = 1 + static_cast<int>(uniform_int(rng, 0, 15));
    const int w = 1 + static_cast<int>(uniform_int(rng, 0, 15));
    const InstanceMask a = random_mask(h, w, uniform_unit(rng), rng);
    const InstanceMask b = random_mask(h, w, uniform_unit(rng), rng);
    const double iou = mask_iou(a, b);
    CHECK(iou == mask_iou(b, a));
    CHECK(iou >= 0.0);
    CHECK(iou <= 1.0);
    if (iou == 1.0) CHECK(a == b);
  }
}

TEST_CASE("all-zero 2x2 mask encodes as a single count of 4") {
  const InstanceMask mask(2, 2);
  CHECK(rle_encode(mask) == "4");
}

TEST_CASE("encoded strings match the frozen reference codec byte for byte") {
  for (const auto& fx : rle_fixtures::kFixtures) {
    const InstanceMask mask = from_bits(fx.height, fx.width, fx.bits);
    CHECK(rle_encode(mask) == fx.rle);
    CHECK(rle_decode(fx.rle, fx.height, fx.width) == mask);
  }
}

TEST_CASE("random masks round-trip through the codec") {
  Rng rng(13);
  for (int i = 0; i < 1000; ++i) {
    const int h = 1 + static_cast<int>(uniform_int(rng, 0, 63));
    const int w = 1 + static_cast<int>(uniform_int(rng, 0, 63));
    const double density = uniform_unit(rng);
    const InstanceMask mask = random_mask(h, w, density, rng);
    const std::string rle = rle_encode(mask);
    for (const char c : rle) {
      CHECK(c >= 48);
      CHECK(c <= 111);
    }
    CHECK(rle_decode(rle, h, w) == mask);
  }
}

TEST_CASE("decode rejects malformed input with an offset") {
  // Character outside the 48..111 alphabet.
  CHECK_THROWS_AS(rle_decode("4\x07", 2, 2), ParseError);
  CHECK_THROWS_WITH_AS(rle_decode("0#", 2, 2),
                       doctest::Contains("offset 1"), ParseError);
  // Continuation bit set on the final character.
  CHECK_THROWS_AS(rle_decode("e", 2, 2), ParseError);
  // Counts that do not cover height*width.
  CHECK_THROWS_AS(rle_decode("2", 2, 2), ParseError);
  // Counts that overflow height*width.
  CHECK_THROWS_AS(rle_decode("8", 2, 2), ParseError);
  CHECK_THROWS_AS(rle_decode("44", 2, 2), ParseError);
  // Valid string, wrong geometry.
  const std::string rle = rle_encode(InstanceMask(4, 4));
  CHECK_THROWS_AS(rle_decode(rle, 4, 5), ParseError);
}

TEST_CASE("decode validates dimensions") {
  CHECK_THROWS_AS(rle_decode("4", 0, 2), std::invalid_argument);
  CHECK_THROWS_AS(rle_decode("4", 2, -1), std::invalid_argument);
}

TEST_CASE("single proposal above threshold claims the full frame") {
  MaskProposal prop;
  prop.track_id = 1001;
  prop.confidence.assign(6 * 4, 0.9);
  const FrameAnnotation frame = resolve_overlaps({prop}, 6, 4, 0.5);
  REQUIRE(frame.entries.size() == 1);
  CHECK(frame.entries[0].track_id == 1001);
  CHECK(frame.entries[0].mask.area() == 24);
}

TEST_CASE("contested pixels go to the higher confidence") {
  MaskProposal a, b;
  a.track_id = 1;
  b.track_id = 2;
  a.confidence.assign(1, 0.8);
  b.confidence.assign(1, 0.6);
  const FrameAnnotation frame = resolve_overlaps({b, a}, 1, 1, 0.5);
  REQUIRE(frame.entries.size() == 1);
  CHECK(frame.entries[0].track_id == 1);
}

TEST_CASE("confidence ties break toward the lowest track id") {
  MaskProposal a, b;
  a.track_id = 5;
  b.track_id = 2;
  a.confidence.assign(1, 0.7);
  b.confidence.assign(1, 0.7);
  const FrameAnnotation frame = resolve_overlaps({a, b}, 1, 1, 0.5);
  REQUIRE(frame.entries.size() == 1);
  CHECK(frame.entries[0].track_id == 2);
}

TEST_CASE("sub-threshold pixels stay unassigned and empty masks drop out") {
  MaskProposal a;
  a.track_id = 3;
  a.confidence.assign(4, 0.49);
  const FrameAnnotation frame = resolve_overlaps({a}, 2, 2, 0.5);
  CHECK(frame.entries.empty());
}

TEST_CASE("resolved masks are always pairwise disjoint") {
  Rng rng(14);
  for (int iter = 0; iter < 100; ++iter) {
    const int h = 2 + static_cast<int>(uniform_int(rng, 0, 10));
    const int w = 2 + static_cast<int>(uniform_int(rng, 0, 10));
    const int n = 1 + static_cast<int>(uniform_int(rng, 0, 3));
    std::vector<MaskProposal> props(n);
    for (int i = 0; i < n; ++i) {
      props[i].track_id = i + 1;
      props[i].confidence.resize(static_cast<std::size_t>(h) * w);
      for (auto& c : props[i].confidence) c = uniform_unit(rng);
    }
    const FrameAnnotation frame = resolve_overlaps(props, h, w, 0.5);
    for (std::size_t i = 0; i < frame.entries.size(); ++i)
      for (std::size_t j = i + 1; j < frame.entries.size(); ++j)
        CHECK(masks_disjoint(frame.entries[i].mask, frame.entries[j].mask));
  }
}

TEST_CASE("resolve_overlaps validates input sizes") {
  MaskProposal p;
  p.confidence.assign(3, 0.9);
  CHECK_THROWS_AS(resolve_overlaps({p}, 2, 2, 0.5), std::invalid_argument);
}
