// Copyright 2026 The longconv Authors
// SPDX-License-Identifier: Apache-2.0

#include "longconv/augment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "longconv/error.hpp"
#include "longconv/joint.hpp"

namespace longconv::augment {

std::int64_t to_micros(double seconds) { return std::llround(seconds * 1e6); }

Rng::Rng(std::uint64_t seed) : engine_(seed) {}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::vector<TimeSpan> sample_spans(const Conversation& conversation, std::size_t count, std::uint64_t seed) {
  const double total = conversation.duration();
  if (!(total > kMaxSpanSeconds)) {
    throw RefusalError("conversation '" + conversation.id() + "' lasts " + std::to_string(total) +
                       " s; sampling needs more than " + std::to_string(kMaxSpanSeconds) + " s");
  }
  Rng rng(seed);
  std::vector<TimeSpan> spans;
  spans.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    // Quantize to microseconds so that written manifests round-trip exactly.
    const std::int64_t length = to_micros(rng.uniform(kMinSpanSeconds, kMaxSpanSeconds));
    const std::int64_t latest = to_micros(total) - length;
    const std::int64_t start = std::min(latest, to_micros(rng.uniform(0.0, static_cast<double>(latest) / 1e6)));
    spans.emplace_back(static_cast<double>(start) / 1e6, static_cast<double>(start + length) / 1e6);
  }
  return spans;
}

std::size_t proportional_count(std::int64_t covered, std::int64_t duration, std::size_t n) {
  if (duration <= 0) throw ContractError("proportional count over a non-positive duration");
  covered = std::clamp<std::int64_t>(covered, 0, duration);
  const auto words = static_cast<std::int64_t>(n);
  return static_cast<std::size_t>((2 * covered * words + duration) / (2 * duration));
}

std::pair<std::size_t, std::size_t> shift_kept_range(const Utterance& utterance, const TimeSpan& span) {
  const std::int64_t s = to_micros(utterance.span.start());
  const std::int64_t e = to_micros(utterance.span.end());
  const std::int64_t lo = to_micros(span.start());
  const std::int64_t hi = to_micros(span.end());
  const std::size_t n = utterance.words.size();

  if (s >= lo && e <= hi) return {0, n};
  const std::int64_t covered = std::min(e, hi) - std::max(s, lo);
  if (covered <= 0) return {0, 0};

  const std::int64_t duration = e - s;
  const std::size_t k = proportional_count(covered, duration, n);
  if (s < lo && e <= hi) return {n - k, n};  // left edge: the audible tail
  if (s >= lo) return {0, k};                // right edge: the audible head
  // The utterance covers the whole span: keep the words under it.
  const std::size_t offset = std::min(proportional_count(lo - s, duration, n), n - k);
  return {offset, offset + k};
}

namespace {

void append_utterance(TrainingExample& ex, const Utterance& u, std::size_t index,
                      const std::vector<std::size_t>& kept) {
  for (std::size_t w : kept) ex.target.push_back(u.words[w].text());
  ex.target.push_back(speaker_token(u.speaker.id));
  ex.target.emplace_back(kSeparatorToken);
  for (std::size_t i = 0; i < kept.size();) {
    std::size_t j = i + 1;
    while (j < kept.size() && kept[j] == kept[j - 1] + 1) ++j;
    ex.provenance.push_back({index, kept[i], kept[j - 1] + 1});
    i = j;
  }
}

bool intersects(const Utterance& u, const TimeSpan& span) {
  const std::int64_t s = to_micros(u.span.start());
  const std::int64_t e = to_micros(u.span.end());
  const std::int64_t lo = to_micros(span.start());
  const std::int64_t hi = to_micros(span.end());
  if (s >= lo && e <= hi) return true;
  return std::min(e, hi) - std::max(s, lo) > 0;
}

[[noreturn]] void track_fail(std::string_view source, std::size_t line, const std::string& message) {
  throw ParseError(std::string(source), line, message);
}

}  // namespace

TrainingExample shift_aug(const Conversation& conversation, const TimeSpan& span) {
  TrainingExample ex{conversation.id(), span, {}, {}};
  const auto& utts = conversation.utterances();
  for (std::size_t i = 0; i < utts.size(); ++i) {
    const auto [first, last] = shift_kept_range(utts[i], span);
    if (first == last) continue;
    std::vector<std::size_t> kept;
    for (std::size_t w = first; w < last; ++w) kept.push_back(w);
    append_utterance(ex, utts[i], i, kept);
  }
  return ex;
}

WordAlignmentTrack parse_alignment_track(std::istream& in, std::string_view source) {
  WordAlignmentTrack track;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    long long utt = 0;
    long long word = 0;
    double start = 0.0;
    double end = 0.0;
    if (!(fields >> utt)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      track_fail(source, line_no, "expected 'utteranceIdx wordIdx start end'");
    }
    if (!(fields >> word >> start >> end)) track_fail(source, line_no, "expected 'utteranceIdx wordIdx start end'");
    std::string extra;
    if (fields >> extra) track_fail(source, line_no, "unexpected trailing field '" + extra + "'");
    if (utt < 0 || word < 0) track_fail(source, line_no, "indices must be non-negative");
    auto& words = track[static_cast<std::size_t>(utt)];
    if (static_cast<std::size_t>(word) != words.size()) {
      track_fail(source, line_no,
                 "utterance " + std::to_string(utt) + " expects word " + std::to_string(words.size()) + " next");
    }
    try {
      words.emplace_back(start, end);
    } catch (const ValidationError& e) {
      track_fail(source, line_no, e.what());
    }
  }
  return track;
}

WordAlignmentTrack load_alignment_track(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open alignment track " + path.string());
  return parse_alignment_track(in, path.string());
}

WordAlignmentTrack track_from_word_spans(const Conversation& conversation) {
  WordAlignmentTrack track;
  const auto& utts = conversation.utterances();
  for (std::size_t i = 0; i < utts.size(); ++i) {
    std::vector<TimeSpan> spans;
    for (const WordToken& w : utts[i].words) {
      if (!w.span()) break;
      spans.push_back(*w.span());
    }
    if (spans.size() == utts[i].words.size()) track.emplace(i, std::move(spans));
  }
  return track;
}

void validate_track(const Conversation& conversation, const WordAlignmentTrack& track) {
  const auto& utts = conversation.utterances();
  for (const auto& [index, spans] : track) {
    const std::string name = "utterance " + std::to_string(index);
    if (index >= utts.size()) throw DataError("alignment track refers to missing " + name);
    const Utterance& u = utts[index];
    if (spans.size() != u.words.size()) {
      throw DataError("alignment track has " + std::to_string(spans.size()) + " words for " + name + ", which has " +
                      std::to_string(u.words.size()));
    }
    const std::int64_t lo = to_micros(u.span.start());
    const std::int64_t hi = to_micros(u.span.end());
    for (std::size_t w = 0; w < spans.size(); ++w) {
      if (to_micros(spans[w].start()) < lo || to_micros(spans[w].end()) > hi) {
        throw DataError("aligned word " + std::to_string(w) + " of " + name + " leaves the utterance span");
      }
      if (w > 0 && spans[w].start() < spans[w - 1].start()) {
        throw DataError("aligned word starts decrease at word " + std::to_string(w) + " of " + name);
      }
    }
  }
}

TrainingExample align_aug(const Conversation& conversation, const TimeSpan& span, const WordAlignmentTrack& track) {
  TrainingExample ex{conversation.id(), span, {}, {}};
  const std::int64_t lo = to_micros(span.start());
  const std::int64_t hi = to_micros(span.end());
  const auto& utts = conversation.utterances();
  for (std::size_t i = 0; i < utts.size(); ++i) {
    if (!intersects(utts[i], span)) continue;
    auto it = track.find(i);
    if (it == track.end()) {
      throw DataError("no word alignment for utterance " + std::to_string(i) + " of conversation '" +
                      conversation.id() + "'");
    }
    if (it->second.size() != utts[i].words.size()) {
      throw DataError("word alignment of utterance " + std::to_string(i) + " of conversation '" + conversation.id() +
                      "' has the wrong word count");
    }
    std::vector<std::size_t> kept;
    for (std::size_t w = 0; w < it->second.size(); ++w) {
      const TimeSpan& ws = it->second[w];
      if (to_micros(ws.start()) >= lo && to_micros(ws.end()) <= hi) kept.push_back(w);
    }
    if (!kept.empty()) append_utterance(ex, utts[i], i, kept);
  }
  return ex;
}

void write_manifest_line(std::ostream& out, const TrainingExample& example, const std::string& audio) {
  nlohmann::ordered_json j;
  j["conversation_id"] = example.conversation_id;
  j["audio"] = audio;
  j["start"] = example.span.start();
  j["end"] = example.span.end();
  j["target"] = example.target;
  auto prov = nlohmann::ordered_json::array();
  for (const Provenance& p : example.provenance) {
    prov.push_back({{"utterance", p.utterance}, {"words", {p.first_word, p.last_word}}});
  }
  j["provenance"] = std::move(prov);
  out << j.dump() << '\n';
}

}  // namespace longconv::augment
