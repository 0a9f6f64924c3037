#include "cvos/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include <json.hpp>

#include "cvos/errors.hpp"
#include "cvos/mots_io.hpp"
#include "cvos/parallel.hpp"
#include "cvos/rng.hpp"

namespace cvos {

namespace {

constexpr double kBackgroundLevel = 0.1;

struct ObjectState {
  bool disk = true;
  int half_rows = 3;
  int half_cols = 3;
  double row = 0.0, col = 0.0;
  double vrow = 0.0, vcol = 0.0;
  double intensity = 0.7;
  double row_lo = 0.0, row_hi = 0.0, col_lo = 0.0, col_hi = 0.0;
};

void reflect(double& pos, double& vel, double lo, double hi) {
  if (hi - lo < 1e-9) {
    pos = lo;
    return;
  }
  while (pos < lo || pos > hi) {
    if (pos < lo) {
      pos = 2.0 * lo - pos;
      vel = -vel;
    } else {
      pos = 2.0 * hi - pos;
      vel = -vel;
    }
  }
}

InstanceMask support_mask(const ObjectState& obj, int height, int width) {
  InstanceMask mask(height, width);
  const int r0 = std::max(0, static_cast<int>(std::floor(obj.row - obj.half_rows)));
  const int r1 = std::min(height - 1,
                          static_cast<int>(std::ceil(obj.row + obj.half_rows)));
  const int c0 = std::max(0, static_cast<int>(std::floor(obj.col - obj.half_cols)));
  const int c1 = std::min(width - 1,
                          static_cast<int>(std::ceil(obj.col + obj.half_cols)));
  for (int r = r0; r <= r1; ++r) {
    for (int c = c0; c <= c1; ++c) {
      bool inside;
      if (obj.disk) {
        const double dr = r - obj.row, dc = c - obj.col;
        inside = dr * dr + dc * dc <=
                 static_cast<double>(obj.half_rows) * obj.half_rows;
      } else {
        inside = std::abs(r - obj.row) <= obj.half_rows &&
                 std::abs(c - obj.col) <= obj.half_cols;
      }
      if (inside) mask.set(r, c, true);
    }
  }
  return mask;
}

std::string sequence_name(int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d", index);
  return buf;
}

SynthSequence run_simulation(const SynthConfig& config, const std::string& id,
                             std::vector<ObjectState> objects, Rng& rng) {
  SynthSequence seq;
  seq.id = id;
  seq.annotation.sequence_id = id;
  seq.annotation.height = config.height;
  seq.annotation.width = config.width;

  const int n = static_cast<int>(objects.size());
  for (int t = 0; t < config.frames_per_sequence; ++t) {
    Image frame(config.height, config.width);
    for (double& p : frame.pixels)
      p = kBackgroundLevel + config.background_noise_sigma * normal_unit(rng);

    std::vector<InstanceMask> supports;
    supports.reserve(objects.size());
    for (const ObjectState& obj : objects)
      supports.push_back(support_mask(obj, config.height, config.width));

    // Higher index = closer to the camera: paint back to front, later
    // objects replacing earlier ones on shared pixels.
    const Image noise = frame;
    for (int i = 0; i < n; ++i)
      for (int r = 0; r < config.height; ++r)
        for (int c = 0; c < config.width; ++c)
          if (supports[i].get(r, c))
            frame.at(r, c) = noise.at(r, c) + objects[i].intensity;
    for (double& p : frame.pixels) p = std::clamp(p, 0.0, 1.0);

    FrameAnnotation fa;
    fa.frame_index = t;
    fa.height = config.height;
    fa.width = config.width;
    for (int i = 0; i < n; ++i) {
      InstanceMask visible = supports[i];
      for (int j = i + 1; j < n; ++j) {
        for (int r = 0; r < config.height; ++r)
          for (int c = 0; c < config.width; ++c)
            if (supports[j].get(r, c)) visible.set(r, c, false);
      }
      if (visible.area() == 0) continue;
      fa.entries.push_back({1000 + i + 1, 1, std::move(visible)});
    }
    if (!fa.entries.empty()) seq.annotation.frames[t] = std::move(fa);
    seq.frames.push_back(std::move(frame));

    for (ObjectState& obj : objects) {
      obj.row += obj.vrow;
      obj.col += obj.vcol;
      reflect(obj.row, obj.vrow, obj.row_lo, obj.row_hi);
      reflect(obj.col, obj.vcol, obj.col_lo, obj.col_hi);
    }
  }
  return seq;
}

}  // namespace

void SynthConfig::validate() const {
  if (num_sequences < 1)
    throw std::invalid_argument("synth: num_sequences must be >= 1");
  if (frames_per_sequence < 1)
    throw std::invalid_argument("synth: frames_per_sequence must be >= 1");
  if (height < 1 || width < 1)
    throw std::invalid_argument("synth: frame size must be positive");
  if (num_objects < 1 || num_objects > 4)
    throw std::invalid_argument("synth: num_objects must be in 1..4");
  if (!rectangles && !disks)
    throw std::invalid_argument("synth: no shape kind enabled");
  if (speed_min < 0.0 || speed_max < speed_min)
    throw std::invalid_argument("synth: bad speed range");
  if (size_min < 1 || size_max < size_min)
    throw std::invalid_argument("synth: bad size range");
  if (background_noise_sigma < 0.0)
    throw std::invalid_argument("synth: negative noise sigma");
  if (2 * size_max + 1 > std::min(height, width))
    throw std::invalid_argument("synth: objects of size " +
                                std::to_string(size_max) +
                                " cannot fit in the frame");
  if (!occlusion_allowed && 2 * size_max + 1 > height / num_objects)
    throw std::invalid_argument(
        "synth: objects of size " + std::to_string(size_max) +
        " do not fit " + std::to_string(num_objects) +
        " disjoint lanes; shrink them or allow occlusion");
}

SynthSequence generate_sequence(const SynthConfig& config, int index) {
  config.validate();
  if (index < 0 || index >= config.num_sequences)
    throw std::invalid_argument("synth: sequence index out of range");
  Rng rng(config.seed + static_cast<std::uint64_t>(index));

  std::vector<ObjectState> objects;
  for (int i = 0; i < config.num_objects; ++i) {
    ObjectState obj;
    if (config.rectangles && config.disks)
      obj.disk = uniform_int(rng, 0, 1) == 1;
    else
      obj.disk = config.disks;
    obj.half_rows =
        static_cast<int>(uniform_int(rng, config.size_min, config.size_max));
    obj.half_cols =
        obj.disk ? obj.half_rows
                 : static_cast<int>(
                       uniform_int(rng, config.size_min, config.size_max));
    obj.intensity = uniform_real(rng, 0.4, 0.95);

    if (config.occlusion_allowed) {
      obj.row_lo = obj.half_rows;
      obj.row_hi = config.height - 1 - obj.half_rows;
    } else {
      const int lane = config.height / config.num_objects;
      obj.row_lo = i * lane + obj.half_rows;
      obj.row_hi = i * lane + lane - 1 - obj.half_rows;
    }
    obj.col_lo = obj.half_cols;
    obj.col_hi = config.width - 1 - obj.half_cols;

    obj.row = uniform_real(rng, obj.row_lo, obj.row_hi);
    obj.col = uniform_real(rng, obj.col_lo, obj.col_hi);
    const double angle = uniform_real(rng, 0.0, 2.0 * std::numbers::pi);
    const double speed = uniform_real(rng, config.speed_min, config.speed_max);
    obj.vrow = speed * std::sin(angle);
    obj.vcol = speed * std::cos(angle);
    objects.push_back(obj);
  }
  return run_simulation(config, sequence_name(index), std::move(objects), rng);
}

void generate(const SynthConfig& config, const std::filesystem::path& root) {
  config.validate();
  std::filesystem::create_directories(root / "instances_txt");

  parallel_for(static_cast<std::size_t>(config.num_sequences),
               [&](std::size_t i) {
                 const SynthSequence seq =
                     generate_sequence(config, static_cast<int>(i));
                 const auto frames_dir = root / seq.id / "frames";
                 std::filesystem::create_directories(frames_dir);
                 for (std::size_t t = 0; t < seq.frames.size(); ++t) {
                   char name[32];
                   std::snprintf(name, sizeof name, "%06zu.pgm", t);
                   write_pgm(frames_dir / name, seq.frames[t]);
                 }
                 write_mots_file(root / "instances_txt" / (seq.id + ".txt"),
                                 seq.annotation);
               });

  nlohmann::json manifest;
  manifest["num_sequences"] = config.num_sequences;
  manifest["frames_per_sequence"] = config.frames_per_sequence;
  manifest["height"] = config.height;
  manifest["width"] = config.width;
  manifest["num_objects"] = config.num_objects;
  manifest["rectangles"] = config.rectangles;
  manifest["disks"] = config.disks;
  manifest["speed_min"] = config.speed_min;
  manifest["speed_max"] = config.speed_max;
  manifest["size_min"] = config.size_min;
  manifest["size_max"] = config.size_max;
  manifest["occlusion_allowed"] = config.occlusion_allowed;
  manifest["background_noise_sigma"] = config.background_noise_sigma;
  manifest["seed"] = config.seed;
  std::vector<std::string> ids;
  for (int i = 0; i < config.num_sequences; ++i) ids.push_back(sequence_name(i));
  manifest["sequences"] = ids;

  std::ofstream out(root / "manifest.json");
  if (!out) throw IoError("cannot write " + (root / "manifest.json").string());
  out << manifest.dump(2) << '\n';
}

}  // namespace cvos
