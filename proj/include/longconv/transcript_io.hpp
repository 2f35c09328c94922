// Copyright 2026 The longconv Authors
// SPDX-License-Identifier: Apache-2.0
//
// Transcript interchange format. One utterance per line, UTF-8 JSON objects:
//
//   {"conversation_id": "ep1", "utterance_index": 0, "speaker_id": "Ira",
//    "role": "host", "start": 0.0, "end": 4.2, "text": "Hello , world ."}
//
// Optional fields: "role", "terminated" (default true), "word_spans", a list
// of [start, end] pairs parallel to the tokenized text, and "word_speakers",
// per-word speaker ids from a separate diarizer. A CSV file with a header row
// naming the same columns (minus the two per-word lists) is also read.

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "longconv/transcript.hpp"

namespace longconv {

enum class TranscriptFormat { kJsonLines, kCsv };

/// Picks kCsv for a `.csv` extension, kJsonLines otherwise.
TranscriptFormat format_for_path(const std::filesystem::path& path);

/// All conversations of a file, in order of first appearance. Records of one
/// conversation must be contiguous with utterance_index 0, 1, 2, ...
std::vector<Conversation> parse_corpus(std::istream& in, std::string_view source,
                                       TranscriptFormat format = TranscriptFormat::kJsonLines);
std::vector<Conversation> parse_corpus(const std::filesystem::path& path);

/// Exactly one conversation; anything else is a ValidationError.
Conversation parse_conversation(std::istream& in, std::string_view source,
                                TranscriptFormat format = TranscriptFormat::kJsonLines);
Conversation parse_conversation(const std::filesystem::path& path);

void write_conversation(std::ostream& out, const Conversation& conversation);
void write_corpus(const std::filesystem::path& path, const std::vector<Conversation>& corpus);

std::string serialize_conversation(const Conversation& conversation);

}  // namespace longconv
