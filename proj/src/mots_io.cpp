#include "cvos/mots_io.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

#include "cvos/errors.hpp"

namespace cvos {

namespace {

[[noreturn]] void fail(int line_no, const std::string& what) {
  throw ParseError("line " + std::to_string(line_no) + ": " + what);
}

}  // namespace

SequenceAnnotation parse_mots_text(std::istream& in,
                                   const std::string& sequence_id) {
  SequenceAnnotation seq;
  seq.sequence_id = sequence_id;

  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();

    std::istringstream iss(line);
    long long frame_id, track_id;
    int class_id, height, width;
    std::string rle;
    if (!(iss >> frame_id >> track_id >> class_id >> height >> width >> rle))
      fail(line_no, "expected 'frame track class height width rle'");
    std::string extra;
    if (iss >> extra) fail(line_no, "trailing field '" + extra + "'");

    if (frame_id < 0) fail(line_no, "negative frame id");
    if (track_id <= 0) fail(line_no, "track id must be positive");
    if (height <= 0 || width <= 0) fail(line_no, "non-positive image size");
    if (track_id != kIgnoreTrackId && track_id / 1000 != class_id)
      fail(line_no, "track id " + std::to_string(track_id) +
                        " does not encode class " + std::to_string(class_id));

    if (seq.height == 0) {
      seq.height = height;
      seq.width = width;
    } else if (seq.height != height || seq.width != width) {
      fail(line_no, "image size " + std::to_string(height) + "x" +
                        std::to_string(width) + " conflicts with " +
                        std::to_string(seq.height) + "x" +
                        std::to_string(seq.width));
    }

    MaskEntry entry;
    entry.track_id = static_cast<int>(track_id);
    entry.class_id = class_id;
    try {
      entry.mask = rle_decode(rle, height, width);
    } catch (const ParseError& err) {
      fail(line_no, err.what());
    }

    FrameAnnotation& frame = seq.frames[static_cast<int>(frame_id)];
    frame.frame_index = static_cast<int>(frame_id);
    frame.height = height;
    frame.width = width;
    for (const MaskEntry& other : frame.entries) {
      if (other.track_id == entry.track_id)
        fail(line_no, "duplicate track id " + std::to_string(entry.track_id) +
                          " in frame " + std::to_string(frame_id));
      if (!masks_disjoint(other.mask, entry.mask))
        fail(line_no, "mask of track " + std::to_string(entry.track_id) +
                          " overlaps track " + std::to_string(other.track_id) +
                          " in frame " + std::to_string(frame_id));
    }
    frame.entries.push_back(std::move(entry));
  }

  for (auto& [index, frame] : seq.frames)
    std::sort(frame.entries.begin(), frame.entries.end(),
              [](const MaskEntry& a, const MaskEntry& b) {
                return a.track_id < b.track_id;
              });
  return seq;
}

SequenceAnnotation load_mots_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return parse_mots_text(in, path.stem().string());
  } catch (const ParseError& err) {
    throw ParseError(path.string() + " " + err.what());
  }
}

std::map<std::string, SequenceAnnotation> load_mots_path(
    const std::filesystem::path& path) {
  std::map<std::string, SequenceAnnotation> out;
  if (std::filesystem::is_directory(path)) {
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(path))
      if (entry.is_regular_file() && entry.path().extension() == ".txt")
        files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty())
      throw IoError("no .txt annotation files in " + path.string());
    for (const auto& file : files) {
      SequenceAnnotation seq = load_mots_file(file);
      out.emplace(seq.sequence_id, std::move(seq));
    }
  } else if (std::filesystem::exists(path)) {
    SequenceAnnotation seq = load_mots_file(path);
    out.emplace(seq.sequence_id, std::move(seq));
  } else {
    throw IoError("no such file or directory: " + path.string());
  }
  return out;
}

void write_mots_text(std::ostream& out, const SequenceAnnotation& seq) {
  for (const auto& [index, frame] : seq.frames) {
    std::vector<const MaskEntry*> entries;
    entries.reserve(frame.entries.size());
    for (const MaskEntry& entry : frame.entries) entries.push_back(&entry);
    std::sort(entries.begin(), entries.end(),
              [](const MaskEntry* a, const MaskEntry* b) {
                return a->track_id < b->track_id;
              });
    for (const MaskEntry* entry : entries) {
      out << index << ' ' << entry->track_id << ' ' << entry->class_id << ' '
          << frame.height << ' ' << frame.width << ' '
          << rle_encode(entry->mask) << '\n';
    }
  }
}

void write_mots_file(const std::filesystem::path& path,
                     const SequenceAnnotation& seq) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_mots_text(out, seq);
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace cvos
