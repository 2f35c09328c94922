// Copyright 2026 The longconv Authors
// SPDX-License-Identifier: Apache-2.0
//
// Frame matrices (acoustic features or speaker embeddings), voice activity
// segments and the map between the full timeline and the speech-only one.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "longconv/transcript.hpp"

namespace longconv {

/// Row-major frames x dim matrix of float32 values with a frame rate.
class FrameMatrix {
 public:
  FrameMatrix() = default;
  FrameMatrix(std::size_t frames, std::size_t dim, double frame_rate);
  FrameMatrix(std::size_t frames, std::size_t dim, double frame_rate, std::vector<float> values);

  std::size_t frames() const { return frames_; }
  std::size_t dim() const { return dim_; }
  double frame_rate() const { return frame_rate_; }

  std::span<const float> row(std::size_t frame) const { return {&values_[frame * dim_], dim_}; }
  std::span<float> row(std::size_t frame) { return {&values_[frame * dim_], dim_}; }
  std::span<const float> values() const { return values_; }

  /// Rows [first, first + count) as a new matrix.
  FrameMatrix slice(std::size_t first, std::size_t count) const;

  bool operator==(const FrameMatrix&) const = default;

 private:
  std::size_t frames_ = 0;
  std::size_t dim_ = 0;
  double frame_rate_ = 100.0;
  std::vector<float> values_;
};

/// Binary layout (little endian): "LCFM", u32 version = 1, u64 frames,
/// u32 dim, f64 frame rate, then frames * dim float32 values.
void write_frames_binary(std::ostream& out, const FrameMatrix& m);
FrameMatrix read_frames_binary(std::istream& in, std::string_view source);

/// Text layout: a header line "frames dim frame_rate" then one row per line.
void write_frames_text(std::ostream& out, const FrameMatrix& m);
FrameMatrix read_frames_text(std::istream& in, std::string_view source);

/// Sniffs the binary magic and falls back to the text layout.
FrameMatrix load_frames(const std::filesystem::path& path);
void save_frames(const std::filesystem::path& path, const FrameMatrix& m, bool binary = true);

/// Frame i carries its own index in column 0; other columns are zero.
FrameMatrix make_position_features(std::size_t frames, std::size_t dim, double frame_rate);

struct VadSegment {
  TimeSpan span;
};

/// Lines of "start end" seconds; '#' starts a comment. Segments must be
/// sorted and non-overlapping.
std::vector<VadSegment> parse_vad(std::istream& in, std::string_view source);
std::vector<VadSegment> load_vad(const std::filesystem::path& path);
void validate_vad(std::span<const VadSegment> segments);

/// Speech-only frames of a recording and their original positions. Frame i
/// is speech when its start time i / frame_rate lies inside a segment.
class ExcisionMap {
 public:
  ExcisionMap() = default;
  ExcisionMap(std::size_t total_frames, double frame_rate, std::span<const VadSegment> segments);

  /// Every frame is speech.
  static ExcisionMap identity(std::size_t total_frames);

  std::size_t speech_frames() const { return kept_.size(); }
  std::size_t total_frames() const { return total_frames_; }

  std::size_t to_original(std::size_t speech_frame) const { return kept_.at(speech_frame); }
  /// Real-valued speech position to original position, interpolating within
  /// a frame.
  double to_original(double speech_position) const;
  std::optional<std::size_t> to_speech(std::size_t original_frame) const;

  FrameMatrix excise(const FrameMatrix& features) const;

 private:
  std::size_t total_frames_ = 0;
  std::vector<std::size_t> kept_;  // sorted original frame indices
};

}  // namespace longconv
