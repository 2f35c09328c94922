// Copyright 2026 The longconv Authors
// SPDX-License-Identifier: Apache-2.0
//
// Joint ASR + speaker token format: every utterance is serialized as its
// words, then a speaker token such as `[Ira]`, then the `[US]` separator.

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace longconv {

inline constexpr std::string_view kSeparatorToken = "[US]";

bool is_separator_token(std::string_view token);
/// `[label]` with a non-empty label free of brackets and whitespace, other
/// than the separator.
bool is_speaker_token(std::string_view token);
bool is_control_token(std::string_view token);

/// Throws ValidationError if the id cannot be carried inside a token.
std::string speaker_token(std::string_view speaker_id);
std::string speaker_from_token(std::string_view token);

/// Removes separator and speaker tokens, keeping the order of the rest.
std::vector<std::string> strip_control_tokens(std::span<const std::string> tokens);

struct JointSegment {
  std::size_t first = 0;  // first token position of the segment
  std::size_t last = 0;   // last token position (the separator when terminated)
  std::vector<std::size_t> word_positions;  // indices into the token stream
  std::string speaker;                      // kUnknownSpeaker when absent
  bool terminated = true;                   // closed by a separator
  bool malformed = false;  // speaker token not directly before the separator,
                           // or more than one speaker token
};

/// Splits a token stream at separators. The last speaker token of a segment
/// labels all of its words. A trailing segment without a separator is
/// reported with terminated = false; an empty trailing segment is dropped.
std::vector<JointSegment> segment_joint_stream(std::span<const std::string> tokens);

}  // namespace longconv
