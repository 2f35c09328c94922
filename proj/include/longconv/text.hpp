// Copyright 2026 The longconv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "longconv/transcript.hpp"

namespace longconv {

/// Rule-based word tokenizer.
///
/// 1. Split on Unicode whitespace.
/// 2. A chunk of the form `[label]` (no brackets or whitespace inside) is a
///    control token and is kept whole.
/// 3. Otherwise punctuation is detached: each run of one repeated punctuation
///    character becomes its own token. Apostrophes and hyphens between two
///    letters or digits stay attached, as do `.`, `,` and `:` between two
///    digits.
///
/// Joining the output with single spaces and tokenizing again is the identity.
std::vector<WordToken> tokenize_words(std::string_view text);

std::vector<std::string> tokenize(std::string_view text);

/// Unicode simple case folding, code point by code point.
std::string fold_case(std::string_view text);

/// True when every code point of a non-empty token is punctuation or symbol.
bool is_punctuation_only(std::string_view token);

enum class NormalizeMode { kRich, kSimulated };

NormalizeMode parse_normalize_mode(std::string_view text);
const char* to_string(NormalizeMode mode);

/// kRich is the identity. kSimulated lower-cases tokens and drops tokens that
/// are punctuation only; utterances that become empty are kept.
Conversation normalize(const Conversation& conversation, NormalizeMode mode);

namespace utf8 {

/// Decodes one code point starting at `pos` and advances `pos`. An ill-formed
/// sequence decodes to a lone surrogate.
char32_t next(std::string_view text, std::size_t& pos);
bool is_space(char32_t cp);

}  // namespace utf8

}  // namespace longconv
