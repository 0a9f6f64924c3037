#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cvos/dataset.hpp"
#include "cvos/errors.hpp"
#include "cvos/mots_io.hpp"
#include "cvos/synthgen.hpp"
#include "tmpdir.hpp"

using namespace cvos;

namespace {

SynthConfig small_config() {
  SynthConfig config;
  config.num_sequences = 2;
  config.frames_per_sequence = 12;
  config.height = 24;
  config.width = 24;
  config.num_objects = 2;
  config.size_min = 2;
  config.size_max = 4;
  config.seed = 99;
  return config;
}

std::pair<double, double> centroid(const InstanceMask& mask) {
  double sr = 0.0, sc = 0.0;
  long long n = 0;
  for (int r = 0; r < mask.height(); ++r)
    for (int c = 0; c < mask.width(); ++c)
      if (mask.get(r, c)) {
        sr += r;
        sc += c;
        ++n;
      }
  return {sr / n, sc / n};
}

std::string file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

}  // namespace

TEST_CASE("pgm files round-trip") {
  const TmpDir tmp;
  Image image(5, 7);
  for (int r = 0; r < 5; ++r)
    for (int c = 0; c < 7; ++c) image.at(r, c) = (r * 7 + c) / 34.0;
  write_pgm(tmp / "x.pgm", image);
  const Image back = read_pgm(tmp / "x.pgm");
  REQUIRE(back.height == 5);
  REQUIRE(back.width == 7);
  for (int r = 0; r < 5; ++r)
    for (int c = 0; c < 7; ++c)
      CHECK(back.at(r, c) == doctest::Approx(image.at(r, c)).epsilon(1e-2));
}

TEST_CASE("pgm reader rejects other formats and truncation") {
  const TmpDir tmp;
  std::ofstream(tmp / "a.pgm") << "P2\n2 2\n255\n0 0 0 0\n";
  CHECK_THROWS_AS(read_pgm(tmp / "a.pgm"), ParseError);
  std::ofstream(tmp / "b.pgm", std::ios::binary) << "P5\n4 4\n255\nab";
  CHECK_THROWS_AS(read_pgm(tmp / "b.pgm"), ParseError);
  CHECK_THROWS_AS(read_pgm(tmp / "c.pgm"), IoError);
}

TEST_CASE("config validation rejects unsatisfiable geometry") {
  SynthConfig config = small_config();
  config.size_max = 12;  // 2*12+1 > 24
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);

  config = small_config();
  config.occlusion_allowed = false;
  config.num_objects = 4;
  config.size_max = 4;  // lane height 6 < 9
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);

  config = small_config();
  config.rectangles = false;
  config.disks = false;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);

  config = small_config();
  config.speed_max = config.speed_min - 1.0;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
}

TEST_CASE("a speed-zero object keeps the same mask in every frame") {
  SynthConfig config = small_config();
  config.num_objects = 1;
  config.speed_min = config.speed_max = 0.0;
  const SynthSequence seq = generate_sequence(config, 0);
  REQUIRE(static_cast<int>(seq.frames.size()) == config.frames_per_sequence);
  REQUIRE(seq.annotation.frames.size() ==
          static_cast<std::size_t>(config.frames_per_sequence));
  const InstanceMask& first = seq.annotation.frames.at(0).entries[0].mask;
  for (const auto& [t, frame] : seq.annotation.frames) {
    REQUIRE(frame.entries.size() == 1);
    CHECK(frame.entries[0].mask == first);
    CHECK(frame.entries[0].track_id == 1001);
    CHECK(frame.entries[0].class_id == 1);
  }
}

TEST_CASE("double generation from the same seed is identical") {
  const SynthConfig config = small_config();
  const SynthSequence a = generate_sequence(config, 1);
  const SynthSequence b = generate_sequence(config, 1);
  CHECK(a.annotation == b.annotation);
  REQUIRE(a.frames.size() == b.frames.size());
  for (std::size_t t = 0; t < a.frames.size(); ++t)
    CHECK(a.frames[t] == b.frames[t]);

  SynthConfig other = config;
  other.seed += 1;
  const SynthSequence c = generate_sequence(other, 1);
  CHECK(c.annotation != a.annotation);
}

TEST_CASE("masks stay disjoint and ids stable across frames") {
  SynthConfig config = small_config();
  config.num_objects = 4;
  config.size_min = 2;
  config.size_max = 3;
  config.frames_per_sequence = 40;
  for (int index = 0; index < 2; ++index) {
    const SynthSequence seq = generate_sequence(config, index);
    for (const auto& [t, frame] : seq.annotation.frames) {
      for (std::size_t i = 0; i < frame.entries.size(); ++i) {
        CHECK(frame.entries[i].mask.area() > 0);
        CHECK(frame.entries[i].track_id >= 1001);
        CHECK(frame.entries[i].track_id <= 1004);
        for (std::size_t j = i + 1; j < frame.entries.size(); ++j)
          CHECK(masks_disjoint(frame.entries[i].mask, frame.entries[j].mask));
      }
    }
  }
}

TEST_CASE("without occlusion every object is fully visible in every frame") {
  SynthConfig config = small_config();
  config.occlusion_allowed = false;
  config.num_objects = 2;
  config.size_min = 2;
  config.size_max = 3;
  config.frames_per_sequence = 60;
  const SynthSequence seq = generate_sequence(config, 0);
  REQUIRE(seq.annotation.frames.size() == 60);
  for (const auto& [t, frame] : seq.annotation.frames)
    CHECK(frame.entries.size() == 2);
}

TEST_CASE("constant-velocity drift is visible in mask centroids") {
  // One disk at speed 1 on a roomy 48x48 frame. The mask centroid tracks
  // the true center within pixel-quantization jitter, so per-frame
  // displacements stay near 1 and, without a reflection, the 9-step path
  // is a straight line of length ~9. Seed 11 is reflection-free.
  SynthConfig config = small_config();
  config.num_objects = 1;
  config.rectangles = false;
  config.speed_min = config.speed_max = 1.0;
  config.frames_per_sequence = 10;
  config.height = config.width = 48;
  config.size_min = config.size_max = 4;
  config.seed = 11;
  const SynthSequence seq = generate_sequence(config, 0);

  std::vector<std::pair<double, double>> centers;
  for (int t = 0; t < 10; ++t)
    centers.push_back(centroid(seq.annotation.frames.at(t).entries[0].mask));
  double mean_step = 0.0;
  for (int t = 1; t < 10; ++t) {
    const double dr = centers[t].first - centers[t - 1].first;
    const double dc = centers[t].second - centers[t - 1].second;
    const double step = std::sqrt(dr * dr + dc * dc);
    CHECK(step >= 0.6);
    CHECK(step <= 1.4);
    mean_step += step / 9.0;
  }
  CHECK(mean_step == doctest::Approx(1.0).epsilon(0.1));
  const double total =
      std::hypot(centers[9].first - centers[0].first,
                 centers[9].second - centers[0].second);
  CHECK(total >= 8.4);  // straight line: no direction change between frames
}

TEST_CASE("generate writes the documented layout") {
  const TmpDir tmp;
  const SynthConfig config = small_config();
  generate(config, tmp / "data");

  CHECK(std::filesystem::exists(tmp / "data" / "manifest.json"));
  for (const std::string id : {"0000", "0001"}) {
    CHECK(std::filesystem::exists(tmp / "data" / "instances_txt" /
                                  (id + ".txt")));
    for (int t = 0; t < config.frames_per_sequence; ++t) {
      char name[32];
      std::snprintf(name, sizeof name, "%06d.pgm", t);
      CHECK(std::filesystem::exists(tmp / "data" / id / "frames" / name));
    }
  }

  const auto manifest =
      nlohmann::json::parse(std::ifstream(tmp / "data" / "manifest.json"));
  CHECK(manifest["seed"] == 99);
  CHECK(manifest["sequences"].size() == 2);

  // In-memory annotation equals what round-trips from disk.
  const auto on_disk = load_mots_path(tmp / "data" / "instances_txt");
  const SynthSequence mem = generate_sequence(config, 0);
  CHECK(on_disk.at("0000") == mem.annotation);
}

TEST_CASE("regenerating a dataset produces byte-identical files") {
  const TmpDir tmp;
  const SynthConfig config = small_config();
  generate(config, tmp / "a");
  generate(config, tmp / "b");
  CHECK(file_bytes(tmp / "a" / "manifest.json") ==
        file_bytes(tmp / "b" / "manifest.json"));
  for (const std::string id : {"0000", "0001"}) {
    CHECK(file_bytes(tmp / "a" / "instances_txt" / (id + ".txt")) ==
          file_bytes(tmp / "b" / "instances_txt" / (id + ".txt")));
    for (int t = 0; t < config.frames_per_sequence; ++t) {
      char name[32];
      std::snprintf(name, sizeof name, "%06d.pgm", t);
      CHECK(file_bytes(tmp / "a" / id / "frames" / name) ==
            file_bytes(tmp / "b" / id / "frames" / name));
    }
  }
}

TEST_CASE("load_dataset reads back what generate wrote") {
  const TmpDir tmp;
  const SynthConfig config = small_config();
  generate(config, tmp / "data");
  const Dataset dataset = load_dataset(tmp / "data");
  REQUIRE(dataset.sequences.size() == 2);
  CHECK(dataset.height == config.height);
  CHECK(dataset.width == config.width);
  CHECK(dataset.sequences[0].id == "0000");
  CHECK(dataset.sequences[1].id == "0001");
  for (const VideoSequence& seq : dataset.sequences) {
    CHECK(static_cast<int>(seq.frames.size()) == config.frames_per_sequence);
    CHECK(seq.annotation.height == config.height);
  }
  const SynthSequence mem = generate_sequence(config, 0);
  CHECK(dataset.sequences[0].annotation == mem.annotation);
  // PGM quantization: loaded pixels are within half a grey level.
  for (int t = 0; t < config.frames_per_sequence; ++t)
    for (int r = 0; r < config.height; ++r)
      for (int c = 0; c < config.width; ++c)
        CHECK(std::abs(dataset.sequences[0].frames[t].at(r, c) -
                       mem.frames[t].at(r, c)) <= 0.5 / 255.0 + 1e-12);
}

TEST_CASE("load_dataset validates the layout") {
  const TmpDir tmp;
  CHECK_THROWS_AS(load_dataset(tmp / "missing"), IoError);

  std::filesystem::create_directories(tmp / "bad" / "0000" / "frames");
  std::filesystem::create_directories(tmp / "bad" / "instances_txt");
  CHECK_THROWS_AS(load_dataset(tmp / "bad"), IoError);  // no frames

  Image im(8, 8);
  write_pgm(tmp / "bad" / "0000" / "frames" / "000000.pgm", im);
  CHECK_THROWS_AS(load_dataset(tmp / "bad"), IoError);  // no annotation

  std::ofstream(tmp / "bad" / "instances_txt" / "0000.txt") << "";
  const Dataset ok = load_dataset(tmp / "bad");
  CHECK(ok.sequences.size() == 1);
  CHECK(ok.sequences[0].annotation.height == 8);

  // Non-contiguous frame numbering.
  write_pgm(tmp / "bad" / "0000" / "frames" / "000002.pgm", im);
  CHECK_THROWS_AS(load_dataset(tmp / "bad"), IoError);
}

TEST_CASE("mask_to_image maps bits to 0/1 intensities") {
  InstanceMask mask(2, 3);
  mask.set(0, 1, true);
  mask.set(1, 2, true);
  const Image image = mask_to_image(mask);
  CHECK(image.at(0, 1) == 1.0);
  CHECK(image.at(1, 2) == 1.0);
  CHECK(image.at(0, 0) == 0.0);
  double sum = 0.0;
  for (const double p : image.pixels) sum += p;
  CHECK(sum == 2.0);
}
