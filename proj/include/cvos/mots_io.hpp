#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

#include "cvos/mask.hpp"

namespace cvos {

// KITTI-MOTS annotation text, one object per line:
//   frame_id track_id class_id img_height img_width rle_string
// track_id encodes the class as class_id*1000 + instance; track_id 10000
// marks an ignore region. Frames without objects have no lines.
//
// Parsers throw ParseError tagged with the line number (and file path for
// the file loaders) on malformed lines, inconsistent image sizes, duplicate
// track ids within a frame, or overlapping masks within a frame.

SequenceAnnotation parse_mots_text(std::istream& in,
                                   const std::string& sequence_id);

// Loads one sequence; sequence_id is the filename stem.
SequenceAnnotation load_mots_file(const std::filesystem::path& path);

// Loads a directory of per-sequence .txt files (sorted by name), or a
// single file. Keys are sequence ids.
std::map<std::string, SequenceAnnotation> load_mots_path(
    const std::filesystem::path& path);

// Writes frames in index order, entries sorted by track id.
void write_mots_text(std::ostream& out, const SequenceAnnotation& seq);
void write_mots_file(const std::filesystem::path& path,
                     const SequenceAnnotation& seq);

}  // namespace cvos
