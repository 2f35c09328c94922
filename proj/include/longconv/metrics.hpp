// Copyright 2026 The longconv Authors
// SPDX-License-Identifier: Apache-2.0
//
// Word alignment and the transcription / word-diarization error rates.

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "longconv/transcript.hpp"

namespace longconv::metrics {

enum class OpKind : std::uint8_t { kCorrect, kSubstitute, kInsert, kDelete };

struct AlignOp {
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

  OpKind kind;
  std::size_t hyp = kNone;  // kNone for deletions
  std::size_t ref = kNone;  // kNone for insertions

  bool matched() const { return kind == OpKind::kCorrect || kind == OpKind::kSubstitute; }
  bool operator==(const AlignOp&) const = default;
};

struct AlignCounts {
  std::size_t correct = 0;
  std::size_t substitutions = 0;
  std::size_t insertions = 0;
  std::size_t deletions = 0;

  std::size_t errors() const { return substitutions + insertions + deletions; }
  std::size_t ref_length() const { return correct + substitutions + deletions; }
  std::size_t hyp_length() const { return correct + substitutions + insertions; }
  std::size_t matched() const { return correct + substitutions; }

  AlignCounts& operator+=(const AlignCounts& other);
  bool operator==(const AlignCounts&) const = default;
};

struct WordAlignment {
  std::vector<AlignOp> ops;  // in sequence order
  AlignCounts counts;
};

enum class CaseMode { kSensitive, kInsensitive };

/// Minimum-edit-distance alignment with unit costs. Among minimal alignments
/// the backtrace prefers Correct, then Substitute, then Delete, then Insert.
WordAlignment align_words(std::span<const std::string> hyp, std::span<const std::string> ref,
                          CaseMode mode = CaseMode::kSensitive);

/// Concatenates alignments whose hyp/ref indices are local to each part into
/// one alignment over the concatenated sequences.
WordAlignment concatenate(std::span<const WordAlignment> parts);

/// (S + I + D) / (C + S + D). Throws UndefinedRateError for an empty reference.
double wer(const AlignCounts& counts);
double wer(const WordAlignment& alignment);

// Injective partial map from hypothesis speaker ids to reference speaker ids.
class SpeakerMapping {
 public:
  SpeakerMapping() = default;

  /// Throws ValidationError if two hyp speakers share a ref speaker.
  explicit SpeakerMapping(std::map<std::string, std::string> pairs);

  /// Maps every hyp speaker whose id also occurs among the ref speakers.
  static SpeakerMapping identity(std::span<const std::string> hyp_speakers,
                                 std::span<const std::string> ref_speakers);

  const std::map<std::string, std::string>& pairs() const { return pairs_; }
  const std::string* find(const std::string& hyp) const;
  std::size_t size() const { return pairs_.size(); }

  bool operator==(const SpeakerMapping&) const = default;

 private:
  std::map<std::string, std::string> pairs_;
};

struct DiarizationCounts {
  std::size_t wrong_correct = 0;       // C_w
  std::size_t wrong_substituted = 0;   // S_w
  std::size_t correct = 0;             // C
  std::size_t substitutions = 0;       // S

  std::size_t wrong() const { return wrong_correct + wrong_substituted; }
  std::size_t matched() const { return correct + substitutions; }

  DiarizationCounts& operator+=(const DiarizationCounts& other);
  bool operator==(const DiarizationCounts&) const = default;
};

/// Per-word speaker check over matched (Correct / Substitute) ops. Hyp speakers
/// absent from the mapping always count as wrong. Insertions and deletions are
/// ignored.
DiarizationCounts wder_counts(const WordAlignment& alignment,
                              std::span<const std::string> hyp_speakers,
                              std::span<const std::string> ref_speakers,
                              const SpeakerMapping& mapping);

/// (S_w + C_w) / (S + C). Throws UndefinedRateError when S + C = 0.
double wder(const DiarizationCounts& counts);
double wder(const WordAlignment& alignment, std::span<const std::string> hyp_speakers,
            std::span<const std::string> ref_speakers, const SpeakerMapping& mapping);

struct MwdeResult {
  double rate = 0.0;
  SpeakerMapping mapping;
  DiarizationCounts counts;  // under `mapping`
};

/// Minimum WDER over all injective partial speaker mappings, found as a
/// maximum-weight assignment on the hyp x ref matrix of matched-word counts.
/// The returned mapping holds only pairs that share at least one matched word.
MwdeResult mwde(const WordAlignment& alignment, std::span<const std::string> hyp_speakers,
                std::span<const std::string> ref_speakers);

/// Exhaustive search over injective partial mappings. Refuses more than
/// kBruteForceMaxSpeakers distinct speakers on either side.
inline constexpr std::size_t kBruteForceMaxSpeakers = 8;
MwdeResult mwde_bruteforce(const WordAlignment& alignment,
                           std::span<const std::string> hyp_speakers,
                           std::span<const std::string> ref_speakers);

/// Column assigned to each row of a square matrix so that the sum of the
/// chosen weights is maximal (Hungarian method, O(n^3)).
std::vector<std::size_t> max_weight_assignment(const std::vector<std::vector<std::int64_t>>& weights);

}  // namespace longconv::metrics
