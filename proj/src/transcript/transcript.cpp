// Copyright 2026 The longconv Authors
// SPDX-License-Identifier: Apache-2.0

#include "longconv/transcript.hpp"

#include <cmath>
#include <unordered_map>

#include "longconv/error.hpp"
#include "longconv/text.hpp"

namespace longconv {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kParse: return "parse";
    case ErrorKind::kValidation: return "validation";
    case ErrorKind::kContract: return "contract";
    case ErrorKind::kUndefinedRate: return "undefined_rate";
    case ErrorKind::kRefusal: return "refusal";
    case ErrorKind::kData: return "data";
    case ErrorKind::kIo: return "io";
  }
  return "unknown";
}

TimeSpan::TimeSpan(double start, double end) : start_(start), end_(end) {
  if (!std::isfinite(start) || !std::isfinite(end)) {
    throw ValidationError("time span bounds must be finite");
  }
  if (start < 0.0) {
    throw ValidationError("time span starts before 0: " + std::to_string(start));
  }
  if (end < start) {
    throw ValidationError("time span ends before it starts: [" + std::to_string(start) + ", " +
                          std::to_string(end) + "]");
  }
}

const char* to_string(Role role) {
  switch (role) {
    case Role::kHost: return "host";
    case Role::kInterviewer: return "interviewer";
    case Role::kSubject: return "subject";
  }
  return "unknown";
}

std::optional<Role> parse_role(std::string_view text) {
  if (text == "host") return Role::kHost;
  if (text == "interviewer") return Role::kInterviewer;
  if (text == "subject") return Role::kSubject;
  return std::nullopt;
}

WordToken::WordToken(std::string text, std::optional<TimeSpan> span)
    : text_(std::move(text)), span_(span) {
  if (text_.empty()) throw ValidationError("word token text is empty");
  std::size_t pos = 0;
  while (pos < text_.size()) {
    if (utf8::is_space(utf8::next(text_, pos))) {
      throw ValidationError("word token contains whitespace: '" + text_ + "'");
    }
  }
}

namespace {

constexpr double kSpanSlack = 1e-9;

std::string at_utterance(std::size_t index) {
  return "utterance " + std::to_string(index) + ": ";
}

}  // namespace

Conversation::Conversation(std::string id, std::vector<Utterance> utterances,
                           std::optional<double> duration)
    : id_(std::move(id)), utterances_(std::move(utterances)) {
  std::unordered_map<std::string, std::size_t> inventory;
  double max_end = 0.0;
  for (std::size_t i = 0; i < utterances_.size(); ++i) {
    const Utterance& u = utterances_[i];
    if (u.speaker.id.empty()) throw ValidationError(at_utterance(i) + "empty speaker id");
    if (i > 0 && u.span.start() < utterances_[i - 1].span.start()) {
      throw ValidationError(at_utterance(i) + "starts at " + std::to_string(u.span.start()) +
                            " before the previous utterance");
    }
    if (!u.word_speakers.empty()) {
      if (u.word_speakers.size() != u.words.size()) {
        throw ValidationError(at_utterance(i) + std::to_string(u.word_speakers.size()) + " word speakers for " +
                              std::to_string(u.words.size()) + " words");
      }
      for (const std::string& s : u.word_speakers) {
        if (s.empty()) throw ValidationError(at_utterance(i) + "empty word speaker id");
      }
    }
    bool all_timed = !u.words.empty();
    for (const WordToken& w : u.words) all_timed = all_timed && w.span().has_value();
    if (all_timed) {
      for (std::size_t k = 0; k < u.words.size(); ++k) {
        const TimeSpan& ws = *u.words[k].span();
        if (ws.start() + kSpanSlack < u.span.start() || ws.end() > u.span.end() + kSpanSlack) {
          throw ValidationError(at_utterance(i) + "word " + std::to_string(k) +
                                " lies outside the utterance span");
        }
      }
    }
    auto [it, inserted] = inventory.emplace(u.speaker.id, speakers_.size());
    if (inserted) {
      speakers_.push_back(u.speaker);
    } else {
      SpeakerId& known = speakers_[it->second];
      if (u.speaker.role && known.role && *u.speaker.role != *known.role) {
        throw ValidationError(at_utterance(i) + "speaker '" + u.speaker.id +
                              "' appears with conflicting roles");
      }
      if (!known.role) known.role = u.speaker.role;
    }
    max_end = std::max(max_end, u.span.end());
  }
  if (duration) {
    if (!std::isfinite(*duration) || *duration + kSpanSlack < max_end) {
      throw ValidationError("conversation '" + id_ + "' duration is shorter than its last utterance");
    }
    duration_ = *duration;
  } else {
    duration_ = max_end;
  }
}

std::size_t Conversation::word_count() const {
  std::size_t n = 0;
  for (const Utterance& u : utterances_) n += u.words.size();
  return n;
}

void Conversation::require_nonempty_utterances() const {
  for (std::size_t i = 0; i < utterances_.size(); ++i) {
    if (utterances_[i].words.empty()) {
      throw ValidationError(at_utterance(i) + "reference utterance has no words");
    }
  }
}

std::vector<std::string> word_texts(const std::vector<WordToken>& words) {
  std::vector<std::string> out;
  out.reserve(words.size());
  for (const WordToken& w : words) out.push_back(w.text());
  return out;
}

}  // namespace longconv
