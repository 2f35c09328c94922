// Copyright 2026 The longconv Authors
// SPDX-License-Identifier: Apache-2.0

#include "longconv/diarize.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "longconv/error.hpp"
#include "longconv/joint.hpp"

namespace longconv::diarize {

Embedding word_embedding_from_af(const FrameMatrix& frames, const decoder::AttentionSnapshot& attention,
                                 std::size_t window_start) {
  if (attention.empty()) throw ContractError("word embedding from an empty attention snapshot");
  if (window_start + attention.frames() > frames.frames()) {
    throw ContractError("attention window [" + std::to_string(window_start) + ", " +
                        std::to_string(window_start + attention.frames()) + ") exceeds " +
                        std::to_string(frames.frames()) + " embedding frames");
  }
  const std::vector<double> w = attention.averaged();
  Embedding out(frames.dim(), 0.0);
  for (std::size_t p = 0; p < w.size(); ++p) {
    if (w[p] == 0.0) continue;
    const auto row = frames.row(window_start + p);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += w[p] * static_cast<double>(row[k]);
  }
  return out;
}

Embedding utterance_embedding(std::span<const Embedding> word_embeddings) {
  if (word_embeddings.empty()) throw ContractError("utterance embedding of an utterance without words");
  Embedding mean(word_embeddings.front().size(), 0.0);
  for (const Embedding& e : word_embeddings) {
    if (e.size() != mean.size()) throw ContractError("word embeddings of different sizes");
    for (std::size_t k = 0; k < e.size(); ++k) mean[k] += e[k];
  }
  for (double& v : mean) v /= static_cast<double>(word_embeddings.size());
  return mean;
}

std::vector<DiarizationSegment> parse_segments(std::istream& in, std::string_view source) {
  std::vector<DiarizationSegment> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    double start = 0.0;
    double end = 0.0;
    std::string cluster;
    if (!(fields >> start)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      throw ParseError(std::string(source), line_no, "expected 'start end clusterId'");
    }
    if (!(fields >> end >> cluster)) throw ParseError(std::string(source), line_no, "expected 'start end clusterId'");
    std::string extra;
    if (fields >> extra) throw ParseError(std::string(source), line_no, "unexpected trailing field '" + extra + "'");
    try {
      out.push_back({TimeSpan(start, end), cluster});
    } catch (const ValidationError& e) {
      throw ParseError(std::string(source), line_no, e.what());
    }
    if (out.size() > 1 && out[out.size() - 2].span.end() > start) {
      throw ParseError(std::string(source), line_no, "segments must be sorted and must not overlap");
    }
  }
  return out;
}

std::vector<DiarizationSegment> load_segments(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open diarization segments " + path.string());
  return parse_segments(in, path.string());
}

const std::string& segment_label(std::span<const DiarizationSegment> segments, const TimeSpan& word) {
  if (segments.empty()) throw ValidationError("reconciliation needs at least one diarization segment");
  std::size_t best = 0;
  double best_overlap = 0.0;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const double overlap = std::min(word.end(), segments[i].span.end()) - std::max(word.start(), segments[i].span.start());
    if (overlap > best_overlap) {
      best_overlap = overlap;
      best = i;
    }
  }
  if (best_overlap > 0.0) return segments[best].cluster;
  double best_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const double gap =
        std::max({0.0, segments[i].span.start() - word.end(), word.start() - segments[i].span.end()});
    if (gap < best_gap) {
      best_gap = gap;
      best = i;
    }
  }
  return segments[best].cluster;
}

Conversation reconcile_separate(const Conversation& asr, std::span<const DiarizationSegment> segments) {
  if (segments.empty()) throw ValidationError("reconciliation needs at least one diarization segment");
  std::vector<Utterance> out = asr.utterances();
  for (std::size_t i = 0; i < out.size(); ++i) {
    Utterance& u = out[i];
    u.word_speakers.clear();
    std::map<std::string, std::size_t> votes;
    std::vector<std::string> order;
    for (std::size_t k = 0; k < u.words.size(); ++k) {
      if (!u.words[k].span()) {
        throw ValidationError("word " + std::to_string(k) + " of utterance " + std::to_string(i) + " of '" +
                              asr.id() + "' has no time span");
      }
      const std::string& label = segment_label(segments, *u.words[k].span());
      u.word_speakers.push_back(label);
      if (votes[label]++ == 0) order.push_back(label);
    }
    if (!order.empty()) {
      std::string majority = order.front();
      for (const std::string& l : order) {
        if (votes[l] > votes[majority]) majority = l;
      }
      u.speaker = SpeakerId{majority, std::nullopt};
    }
  }
  return Conversation(asr.id(), std::move(out), asr.duration());
}

JointExtraction extract_joint_speakers(std::span<const std::string> tokens) {
  JointExtraction out;
  for (const JointSegment& seg : segment_joint_stream(tokens)) {
    Utterance u;
    u.speaker.id = seg.speaker;
    u.terminated = seg.terminated;
    for (std::size_t pos : seg.word_positions) u.words.emplace_back(tokens[pos]);
    if (seg.speaker == kUnknownSpeaker) ++out.unknown;
    if (seg.malformed) ++out.malformed;
    out.utterances.push_back(std::move(u));
  }
  return out;
}

JointExtraction extract_joint_speakers(const Conversation& conversation) {
  std::vector<std::string> tokens;
  std::vector<const WordToken*> source;
  std::vector<TimeSpan> anchor;
  for (const Utterance& u : conversation.utterances()) {
    for (const WordToken& w : u.words) {
      tokens.push_back(w.text());
      source.push_back(&w);
      anchor.push_back(w.span().value_or(u.span));
    }
  }
  JointExtraction out;
  double previous_start = 0.0;
  for (const JointSegment& seg : segment_joint_stream(tokens)) {
    Utterance u;
    u.speaker.id = seg.speaker;
    u.terminated = seg.terminated;
    double start = anchor[seg.first].start();
    double end = anchor[seg.first].end();
    for (std::size_t i = seg.first; i <= seg.last; ++i) {
      start = std::min(start, anchor[i].start());
      end = std::max(end, anchor[i].end());
    }
    start = std::max(start, previous_start);
    end = std::max(end, start);
    previous_start = start;
    u.span = TimeSpan(start, end);
    bool all_timed = true;
    for (std::size_t pos : seg.word_positions) all_timed = all_timed && source[pos]->span().has_value();
    for (std::size_t pos : seg.word_positions) {
      if (all_timed) {
        const TimeSpan& s = *source[pos]->span();
        const double ws = std::clamp(s.start(), start, end);
        u.words.emplace_back(tokens[pos], TimeSpan(ws, std::clamp(s.end(), ws, end)));
      } else {
        u.words.emplace_back(tokens[pos]);
      }
    }
    if (seg.speaker == kUnknownSpeaker) ++out.unknown;
    if (seg.malformed) ++out.malformed;
    out.utterances.push_back(std::move(u));
  }
  return out;
}

WordAttention uniform_word_attention(const TimeSpan& span, double frame_rate, std::size_t total_frames) {
  if (total_frames == 0) throw ContractError("no embedding frames");
  const double first_f = std::ceil(span.start() * frame_rate - 1e-9);
  const double end_f = std::ceil(span.end() * frame_rate - 1e-9);
  auto first = static_cast<std::size_t>(std::max(0.0, first_f));
  auto end = static_cast<std::size_t>(std::max(0.0, end_f));
  first = std::min(first, total_frames - 1);
  end = std::clamp(end, first + 1, total_frames);
  return {decoder::AttentionSnapshot::uniform(1, 1, end - first), first};
}

std::string cluster_label(std::size_t cluster) { return "spk" + std::to_string(cluster); }

std::vector<Utterance> sd_plus(const std::vector<Utterance>& utterances, const FrameMatrix& frames,
                               const std::vector<std::vector<WordAttention>>& attention,
                               const ClusterConfig& config) {
  if (attention.size() != utterances.size()) throw ContractError("one attention list per utterance is required");
  std::vector<Embedding> embeddings;
  std::vector<std::size_t> owner;
  for (std::size_t i = 0; i < utterances.size(); ++i) {
    if (attention[i].size() != utterances[i].words.size()) {
      throw ContractError("utterance " + std::to_string(i) + " has " + std::to_string(utterances[i].words.size()) +
                          " words but " + std::to_string(attention[i].size()) + " attention entries");
    }
    if (utterances[i].words.empty()) continue;
    std::vector<Embedding> words;
    words.reserve(attention[i].size());
    for (const WordAttention& a : attention[i]) words.push_back(word_embedding_from_af(frames, a.attention, a.window_start));
    embeddings.push_back(utterance_embedding(words));
    owner.push_back(i);
  }

  std::vector<Utterance> out = utterances;
  for (Utterance& u : out) {
    u.word_speakers.clear();
    if (u.words.empty()) u.speaker = SpeakerId{std::string(kUnknownSpeaker), std::nullopt};
  }
  if (embeddings.empty()) return out;
  const std::vector<std::size_t> labels = cluster_speakers(embeddings, config);
  for (std::size_t j = 0; j < owner.size(); ++j) out[owner[j]].speaker = SpeakerId{cluster_label(labels[j]), std::nullopt};
  return out;
}

}  // namespace longconv::diarize
