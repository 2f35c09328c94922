// Copyright 2026 The longconv Authors
// SPDX-License-Identifier: Apache-2.0

#include "longconv/text.hpp"

#include <unicode/uchar.h>
#include <unicode/utf8.h>

#include <cstdint>

#include "longconv/error.hpp"
#include "longconv/joint.hpp"

namespace longconv {

namespace utf8 {

char32_t next(std::string_view text, std::size_t& pos) {
  const auto* bytes = reinterpret_cast<const std::uint8_t*>(text.data());
  const std::uint8_t lead = bytes[pos];
  auto i = static_cast<std::int32_t>(pos);
  UChar32 cp = 0;
  U8_NEXT(bytes, i, static_cast<std::int32_t>(text.size()), cp);
  pos = static_cast<std::size_t>(i);
  // Lone surrogate range: cannot collide with a valid decoded code point.
  return cp < 0 ? 0xDC00 | lead : static_cast<char32_t>(cp);
}

bool is_space(char32_t cp) { return u_isUWhiteSpace(static_cast<UChar32>(cp)); }

}  // namespace utf8

namespace {

bool is_punct(char32_t cp) {
  return (U_GET_GC_MASK(static_cast<UChar32>(cp)) & (U_GC_P_MASK | U_GC_S_MASK)) != 0;
}

bool is_word_joiner(char32_t cp) {
  return cp == U'\'' || cp == 0x2019 || cp == U'-' || cp == 0x2010 || cp == 0x2011;
}

bool is_digit_joiner(char32_t cp) { return cp == U'.' || cp == U',' || cp == U':'; }

bool is_ascii_digit(char32_t cp) { return cp >= U'0' && cp <= U'9'; }

struct CodePoint {
  char32_t cp;
  std::size_t begin;  // byte offset
  std::size_t end;
};

bool is_bracket_token(std::string_view chunk) {
  if (chunk.size() < 3 || chunk.front() != '[' || chunk.back() != ']') return false;
  return chunk.substr(1, chunk.size() - 2).find_first_of("[]") == std::string_view::npos;
}

void tokenize_chunk(std::string_view text, const std::vector<CodePoint>& chunk,
                    std::vector<std::string>& out) {
  const std::size_t n = chunk.size();
  std::vector<bool> word(n);
  for (std::size_t i = 0; i < n; ++i) word[i] = !is_punct(chunk[i].cp);
  std::vector<bool> joined = word;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (word[i] || !word[i - 1] || !word[i + 1]) continue;
    const char32_t cp = chunk[i].cp;
    if (is_word_joiner(cp) ||
        (is_digit_joiner(cp) && is_ascii_digit(chunk[i - 1].cp) && is_ascii_digit(chunk[i + 1].cp))) {
      joined[i] = true;
    }
  }
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    if (joined[i]) {
      while (j < n && joined[j]) ++j;
    } else {
      while (j < n && !joined[j] && chunk[j].cp == chunk[i].cp) ++j;
    }
    out.emplace_back(text.substr(chunk[i].begin, chunk[j - 1].end - chunk[i].begin));
    i = j;
  }
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::vector<CodePoint> chunk;
  const auto flush = [&](std::size_t chunk_end) {
    if (chunk.empty()) return;
    const std::size_t begin = chunk.front().begin;
    const std::string_view whole = text.substr(begin, chunk_end - begin);
    if (is_bracket_token(whole)) {
      out.emplace_back(whole);
    } else {
      tokenize_chunk(text, chunk, out);
    }
    chunk.clear();
  };
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t begin = pos;
    const char32_t cp = utf8::next(text, pos);
    if (utf8::is_space(cp)) {
      flush(begin);
    } else {
      chunk.push_back({cp, begin, pos});
    }
  }
  flush(text.size());
  return out;
}

std::vector<WordToken> tokenize_words(std::string_view text) {
  std::vector<WordToken> out;
  for (std::string& t : tokenize(text)) out.emplace_back(std::move(t));
  return out;
}

std::string fold_case(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t begin = pos;
    const char32_t cp = utf8::next(text, pos);
    const auto folded = u_foldCase(static_cast<UChar32>(cp), U_FOLD_CASE_DEFAULT);
    if (folded == static_cast<UChar32>(cp)) {
      out.append(text.substr(begin, pos - begin));
    } else {
      char buf[U8_MAX_LENGTH];
      std::int32_t len = 0;
      U8_APPEND_UNSAFE(buf, len, folded);
      out.append(buf, static_cast<std::size_t>(len));
    }
  }
  return out;
}

bool is_punctuation_only(std::string_view token) {
  if (token.empty()) return false;
  std::size_t pos = 0;
  while (pos < token.size()) {
    if (!is_punct(utf8::next(token, pos))) return false;
  }
  return true;
}

NormalizeMode parse_normalize_mode(std::string_view text) {
  if (text == "rich") return NormalizeMode::kRich;
  if (text == "simulated") return NormalizeMode::kSimulated;
  throw ValidationError("unknown normalization mode '" + std::string(text) + "'");
}

const char* to_string(NormalizeMode mode) {
  return mode == NormalizeMode::kRich ? "rich" : "simulated";
}

Conversation normalize(const Conversation& conversation, NormalizeMode mode) {
  if (mode == NormalizeMode::kRich) return conversation;
  std::vector<Utterance> utterances = conversation.utterances();
  for (Utterance& u : utterances) {
    std::vector<WordToken> kept;
    kept.reserve(u.words.size());
    for (const WordToken& w : u.words) {
      if (is_punctuation_only(w.text())) continue;
      kept.emplace_back(fold_case(w.text()), w.span());
    }
    u.words = std::move(kept);
  }
  return Conversation(conversation.id(), std::move(utterances), conversation.duration());
}

}  // namespace longconv
