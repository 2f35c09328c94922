// Copyright 2026 The longconv Authors
// SPDX-License-Identifier: Apache-2.0
//
// Training-example builders that cut random 10 to 30 second spans out of an
// episode. ShiftAug truncates partially covered utterances in proportion to
// the covered audio; AlignAug keeps the words whose forced alignment lies
// inside the span.
//
// Times are compared in whole microseconds so that the proportional rule is
// exact and reproducible.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "longconv/transcript.hpp"

namespace longconv::augment {

inline constexpr double kMinSpanSeconds = 10.0;
inline constexpr double kMaxSpanSeconds = 30.0;

/// Seconds to integer microseconds, rounded to nearest.
std::int64_t to_micros(double seconds);

/// Deterministic uniform doubles on [0, 1) from a 64-bit Mersenne Twister,
/// using the top 53 bits so that results do not depend on the standard
/// library's distribution implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::mt19937_64 engine_;
};

/// `count` spans with durations uniform on [10, 30] s and starts uniform over
/// [0, duration - span]. Throws RefusalError unless the episode is longer
/// than 30 s.
std::vector<TimeSpan> sample_spans(const Conversation& conversation, std::size_t count, std::uint64_t seed);

struct Provenance {
  std::size_t utterance = 0;
  std::size_t first_word = 0;  // kept words [first_word, last_word)
  std::size_t last_word = 0;

  bool operator==(const Provenance&) const = default;
};

struct TrainingExample {
  std::string conversation_id;
  TimeSpan span;
  std::vector<std::string> target;  // words, speaker token, separator per utterance
  std::vector<Provenance> provenance;

  bool operator==(const TrainingExample&) const = default;
};

/// round(covered * n / duration) with halves rounded up, in exact integer
/// arithmetic on microseconds.
std::size_t proportional_count(std::int64_t covered, std::int64_t duration, std::size_t n);

/// Kept word range [first, last) of one utterance under ShiftAug, or an empty
/// range when the utterance is excluded.
std::pair<std::size_t, std::size_t> shift_kept_range(const Utterance& utterance, const TimeSpan& span);

TrainingExample shift_aug(const Conversation& conversation, const TimeSpan& span);

/// Forced word alignment per utterance index.
using WordAlignmentTrack = std::map<std::size_t, std::vector<TimeSpan>>;

/// Lines of "utteranceIdx wordIdx start end"; '#' starts a comment. Word
/// indices of an utterance must run 0, 1, 2, ... in order.
WordAlignmentTrack parse_alignment_track(std::istream& in, std::string_view source);
WordAlignmentTrack load_alignment_track(const std::filesystem::path& path);

/// Track built from word spans stored in the transcript; utterances without
/// timed words are left out.
WordAlignmentTrack track_from_word_spans(const Conversation& conversation);

/// Throws DataError when an entry refers to a missing utterance, has the
/// wrong word count, leaves its utterance span or has decreasing starts.
void validate_track(const Conversation& conversation, const WordAlignmentTrack& track);

/// Keeps exactly the words whose aligned span lies inside `span`. Throws
/// DataError naming the utterance when an intersecting utterance has no
/// alignment.
TrainingExample align_aug(const Conversation& conversation, const TimeSpan& span, const WordAlignmentTrack& track);

/// One JSON object per line: conversation_id, audio, start, end, target,
/// provenance.
void write_manifest_line(std::ostream& out, const TrainingExample& example, const std::string& audio);

}  // namespace longconv::augment
