// Copyright 2026 The longconv Authors
// SPDX-License-Identifier: Apache-2.0
//
// In-memory transcript model: conversations made of speaker-attributed
// utterances, each an ordered list of word tokens.

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace longconv {

/// Half-open interval of seconds. Construction validates 0 <= start <= end.
class TimeSpan {
 public:
  TimeSpan() = default;
  TimeSpan(double start, double end);

  double start() const { return start_; }
  double end() const { return end_; }
  double duration() const { return end_ - start_; }

  bool operator==(const TimeSpan&) const = default;

 private:
  double start_ = 0.0;
  double end_ = 0.0;
};

enum class Role { kHost, kInterviewer, kSubject };

const char* to_string(Role role);
std::optional<Role> parse_role(std::string_view text);

struct SpeakerId {
  std::string id;
  std::optional<Role> role;

  bool operator==(const SpeakerId&) const = default;
};

/// Speaker label used when a joint-format segment carries no speaker token.
inline constexpr std::string_view kUnknownSpeaker = "<unknown>";

class WordToken {
 public:
  WordToken() = default;
  explicit WordToken(std::string text, std::optional<TimeSpan> span = std::nullopt);

  const std::string& text() const { return text_; }
  const std::optional<TimeSpan>& span() const { return span_; }

  bool operator==(const WordToken&) const = default;

 private:
  std::string text_;
  std::optional<TimeSpan> span_;
};

struct Utterance {
  SpeakerId speaker;
  std::vector<WordToken> words;
  TimeSpan span;
  // False when generation stopped before emitting the closing separator.
  bool terminated = true;
  // Per-word labels from a separate diarizer; empty when every word belongs
  // to `speaker`.
  std::vector<std::string> word_speakers;

  const std::string& word_speaker(std::size_t k) const {
    return word_speakers.empty() ? speaker.id : word_speakers[k];
  }

  bool operator==(const Utterance&) const = default;
};

class Conversation {
 public:
  Conversation() = default;

  /// Validates ordering, span containment and speaker-role consistency.
  /// Throws ValidationError naming the first offending utterance index.
  Conversation(std::string id, std::vector<Utterance> utterances,
               std::optional<double> duration = std::nullopt);

  const std::string& id() const { return id_; }
  const std::vector<Utterance>& utterances() const { return utterances_; }
  double duration() const { return duration_; }

  /// Speaker inventory in order of first appearance.
  const std::vector<SpeakerId>& speakers() const { return speakers_; }

  std::size_t word_count() const;

  /// Reference transcripts must not contain empty utterances.
  void require_nonempty_utterances() const;

  bool operator==(const Conversation&) const = default;

 private:
  std::string id_;
  std::vector<Utterance> utterances_;
  std::vector<SpeakerId> speakers_;
  double duration_ = 0.0;
};

std::vector<std::string> word_texts(const std::vector<WordToken>& words);

}  // namespace longconv
