// Copyright 2026 The longconv Authors
// SPDX-License-Identifier: Apache-2.0

#include "longconv/joint.hpp"

#include "longconv/error.hpp"
#include "longconv/text.hpp"
#include "longconv/transcript.hpp"

namespace longconv {

namespace {

bool valid_label(std::string_view label) {
  if (label.empty()) return false;
  std::size_t pos = 0;
  while (pos < label.size()) {
    const char32_t cp = utf8::next(label, pos);
    if (cp == U'[' || cp == U']' || utf8::is_space(cp)) return false;
  }
  return true;
}

}  // namespace

bool is_separator_token(std::string_view token) { return token == kSeparatorToken; }

bool is_speaker_token(std::string_view token) {
  if (token.size() < 3 || token.front() != '[' || token.back() != ']') return false;
  if (is_separator_token(token)) return false;
  return valid_label(token.substr(1, token.size() - 2));
}

bool is_control_token(std::string_view token) {
  return is_separator_token(token) || is_speaker_token(token);
}

std::string speaker_token(std::string_view speaker_id) {
  if (!valid_label(speaker_id) || speaker_id == "US") {
    throw ValidationError("speaker id '" + std::string(speaker_id) +
                          "' cannot be written as a speaker token");
  }
  return "[" + std::string(speaker_id) + "]";
}

std::string speaker_from_token(std::string_view token) {
  if (!is_speaker_token(token)) {
    throw ValidationError("'" + std::string(token) + "' is not a speaker token");
  }
  return std::string(token.substr(1, token.size() - 2));
}

std::vector<std::string> strip_control_tokens(std::span<const std::string> tokens) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const std::string& t : tokens) {
    if (!is_control_token(t)) out.push_back(t);
  }
  return out;
}

std::vector<JointSegment> segment_joint_stream(std::span<const std::string> tokens) {
  std::vector<JointSegment> segments;
  JointSegment current;
  std::size_t speaker_tokens = 0;
  bool speaker_last = false;  // previous token was a speaker token
  bool open = false;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const std::string& t = tokens[i];
    if (!open) current.first = i;
    current.last = i;
    if (is_separator_token(t)) {
      if (current.speaker.empty()) current.speaker = kUnknownSpeaker;
      current.malformed = speaker_tokens > 1 || (speaker_tokens == 1 && !speaker_last);
      current.terminated = true;
      segments.push_back(std::move(current));
      current = JointSegment{};
      speaker_tokens = 0;
      speaker_last = false;
      open = false;
      continue;
    }
    open = true;
    if (is_speaker_token(t)) {
      current.speaker = speaker_from_token(t);
      ++speaker_tokens;
      speaker_last = true;
    } else {
      current.word_positions.push_back(i);
      speaker_last = false;
    }
  }
  if (open) {
    if (current.speaker.empty()) current.speaker = kUnknownSpeaker;
    current.malformed = speaker_tokens > 1;
    current.terminated = false;
    segments.push_back(std::move(current));
  }
  return segments;
}

}  // namespace longconv
