// Copyright 2026 The longconv Authors
// SPDX-License-Identifier: Apache-2.0

#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

#include "longconv/joint.hpp"
#include "longconv/text.hpp"

namespace longconv::testing {

Conversation make_conversation(const std::string& id, const std::vector<UttSpec>& utterances) {
  std::vector<Utterance> out;
  for (const UttSpec& s : utterances) {
    Utterance u;
    u.speaker.id = s.speaker;
    u.span = TimeSpan(s.start, s.end);
    u.words = tokenize_words(s.text);
    u.terminated = s.terminated;
    out.push_back(std::move(u));
  }
  return Conversation(id, std::move(out));
}

std::size_t edit_distance(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::size_t> prev(b.size() + 1);
  std::vector<std::size_t> cur(b.size() + 1);
  std::iota(prev.begin(), prev.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::vector<std::string> random_words(std::mt19937_64& rng, std::size_t max_len, std::size_t vocab) {
  std::uniform_int_distribution<std::size_t> len(0, max_len);
  std::uniform_int_distribution<std::size_t> word(0, vocab - 1);
  std::vector<std::string> out(len(rng));
  for (auto& w : out) w = "w" + std::to_string(word(rng));
  return out;
}

SpeakerInstance random_instance(std::mt19937_64& rng, std::size_t max_hyp_speakers, std::size_t max_ref_speakers,
                                std::size_t max_matched) {
  std::uniform_int_distribution<std::size_t> hs(1, max_hyp_speakers);
  std::uniform_int_distribution<std::size_t> rs(1, max_ref_speakers);
  std::uniform_int_distribution<std::size_t> len(1, max_matched);
  std::uniform_int_distribution<int> edit(0, 9);
  std::uniform_int_distribution<std::size_t> vocab(0, 5);
  const std::size_t nh = hs(rng);
  const std::size_t nr = rs(rng);

  SpeakerInstance inst;
  const std::size_t n = len(rng);
  for (std::size_t i = 0; i < n; ++i) inst.ref_words.push_back("w" + std::to_string(vocab(rng)));
  for (const std::string& w : inst.ref_words) {
    const int e = edit(rng);
    if (e == 0) continue;                                              // deletion
    if (e == 1) inst.hyp_words.push_back("w" + std::to_string(vocab(rng)));  // substitution (maybe)
    else inst.hyp_words.push_back(w);
    if (e == 2) inst.hyp_words.push_back("x" + std::to_string(vocab(rng)));  // insertion
  }
  std::uniform_int_distribution<std::size_t> hpick(0, nh - 1);
  std::uniform_int_distribution<std::size_t> rpick(0, nr - 1);
  // Speakers in runs so that good mappings exist.
  std::size_t h = hpick(rng);
  for (std::size_t i = 0; i < inst.hyp_words.size(); ++i) {
    if (edit(rng) < 3) h = hpick(rng);
    inst.hyp_speakers.push_back("h" + std::to_string(h));
  }
  std::size_t r = rpick(rng);
  for (std::size_t i = 0; i < inst.ref_words.size(); ++i) {
    if (edit(rng) < 3) r = rpick(rng);
    inst.ref_speakers.push_back("r" + std::to_string(r));
  }
  inst.alignment = metrics::align_words(inst.hyp_words, inst.ref_words);
  return inst;
}

namespace {

std::vector<std::pair<std::string, std::string>> matched_pairs(const SpeakerInstance& inst) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& op : inst.alignment.ops) {
    if (op.matched()) out.emplace_back(inst.hyp_speakers[op.hyp], inst.ref_speakers[op.ref]);
  }
  return out;
}

}  // namespace

Fraction oracle_wder(const SpeakerInstance& inst, const std::map<std::string, std::string>& mapping) {
  Fraction f;
  for (const auto& [hs, rs] : matched_pairs(inst)) {
    ++f.den;
    auto it = mapping.find(hs);
    if (it == mapping.end() || it->second != rs) ++f.num;
  }
  return f;
}

Fraction oracle_min_wder(const SpeakerInstance& inst) {
  const auto pairs = matched_pairs(inst);
  std::vector<std::string> hyp;
  std::vector<std::string> ref;
  for (const auto& [h, r] : pairs) {
    if (std::find(hyp.begin(), hyp.end(), h) == hyp.end()) hyp.push_back(h);
    if (std::find(ref.begin(), ref.end(), r) == ref.end()) ref.push_back(r);
  }
  std::vector<std::vector<std::size_t>> agree(hyp.size(), std::vector<std::size_t>(ref.size(), 0));
  for (const auto& [h, r] : pairs) {
    const auto hi = static_cast<std::size_t>(std::find(hyp.begin(), hyp.end(), h) - hyp.begin());
    const auto ri = static_cast<std::size_t>(std::find(ref.begin(), ref.end(), r) - ref.begin());
    ++agree[hi][ri];
  }
  std::size_t best = 0;
  std::vector<bool> used(ref.size(), false);
  std::function<void(std::size_t, std::size_t)> go = [&](std::size_t i, std::size_t correct) {
    if (i == hyp.size()) {
      best = std::max(best, correct);
      return;
    }
    go(i + 1, correct);  // leave hyp speaker i unmapped
    for (std::size_t j = 0; j < ref.size(); ++j) {
      if (used[j]) continue;
      used[j] = true;
      go(i + 1, correct + agree[i][j]);
      used[j] = false;
    }
  };
  go(0, 0);
  return {pairs.size() - best, pairs.size()};
}

namespace {

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

std::vector<double> softmax(const std::vector<double>& logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) sum += p[i] = std::exp(logits[i] - m);
  for (double& v : p) v /= sum;
  return p;
}

}  // namespace

RandomModel::RandomModel(std::uint64_t seed, std::size_t words, bool with_eos, double eos_bias)
    : seed_(seed), eos_bias_(eos_bias) {
  std::vector<std::string> tokens{"[US]", "[A]", "[B]"};
  if (with_eos) tokens.emplace_back("</s>");
  for (std::size_t i = 0; i < words; ++i) tokens.push_back("w" + std::to_string(i));
  vocab_ = decoder::Vocabulary(std::move(tokens));
}

decoder::StepOutput RandomModel::step(const decoder::FeatureWindow& window, const decoder::ContextView& context) {
  std::uint64_t h = mix(seed_, context.position);
  for (decoder::TokenId t : context.tokens) h = mix(h, static_cast<std::uint64_t>(t));
  std::mt19937_64 rng(h);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::vector<double> logits(vocab_.size());
  for (double& l : logits) l = u(rng);
  if (vocab_.end_of_stream()) logits[static_cast<std::size_t>(*vocab_.end_of_stream())] += eos_bias_;
  decoder::StepOutput out;
  out.distribution = softmax(logits);
  out.attention = decoder::AttentionSnapshot::uniform(2, 2, window.frames);
  return out;
}

TableModel::TableModel(std::vector<std::string> tokens, std::vector<std::vector<double>> rows)
    : vocab_(std::move(tokens)), rows_(std::move(rows)) {
  if (rows_.size() != vocab_.size()) throw std::invalid_argument("one row per token");
}

decoder::StepOutput TableModel::step(const decoder::FeatureWindow& window, const decoder::ContextView& context) {
  const decoder::TokenId last = context.tokens.empty() ? vocab_.separator() : context.tokens.back();
  decoder::StepOutput out;
  out.distribution = rows_.at(static_cast<std::size_t>(last));
  out.attention = decoder::AttentionSnapshot::uniform(1, 1, window.frames);
  return out;
}

BrokenModel::BrokenModel(Fault fault, std::size_t good_steps)
    : fault_(fault), good_steps_(good_steps), vocab_(std::vector<std::string>{"[US]", "a", "b"}) {}

decoder::StepOutput BrokenModel::step(const decoder::FeatureWindow& window, const decoder::ContextView&) {
  decoder::StepOutput out;
  out.distribution = {0.1, 0.6, 0.3};
  out.attention = decoder::AttentionSnapshot::uniform(1, 2, window.frames);
  if (calls_++ < good_steps_) return out;
  switch (fault_) {
    case Fault::kDistributionSum:
      out.distribution = {0.1, 0.6, 0.2};
      break;
    case Fault::kNegative:
      out.distribution = {-0.1, 0.8, 0.3};
      break;
    case Fault::kAttentionSum: {
      std::vector<double> w(2 * window.frames, 0.0);
      w[0] = 1.0;
      w[window.frames] = 0.5;
      out.attention = decoder::AttentionSnapshot(1, 2, window.frames, w);
      break;
    }
    case Fault::kWrongSize:
      out.distribution = {0.5, 0.5};
      break;
  }
  return out;
}

decoder::Script script_for(const std::vector<ScriptedUtterance>& utterances) {
  decoder::Script script;
  for (const ScriptedUtterance& u : utterances) {
    std::vector<std::string> tokens = u.words;
    tokens.push_back(speaker_token(u.speaker));
    tokens.emplace_back(kSeparatorToken);
    const double gap = tokens.size() > 1 ? (u.last_frame - u.first_frame) / double(tokens.size() - 1) : 0.0;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      script.tokens.push_back({tokens[i], std::round(u.first_frame + gap * double(i))});
    }
  }
  return script;
}

std::vector<ScriptedUtterance> three_utterance_episode() {
  return {
      {"Ann", {"welcome", "back", "to", "the", "show"}, 100, 1300},
      {"Bo", {"thanks", "for", "having", "me", "it", "is", "good", "to", "be", "here", "again"}, 1500, 3000},
      {"Ann", {"so", "tell", "us", "about", "the", "trip"}, 3200, 4400},
  };
}

std::vector<std::string> script_tokens(const decoder::Script& script) {
  std::vector<std::string> out;
  for (const auto& t : script.tokens) out.push_back(t.token);
  return out;
}

std::pair<std::vector<decoder::TokenId>, double> exhaustive_best(const std::vector<std::vector<double>>& rows,
                                                                 decoder::TokenId separator, std::size_t max_len) {
  std::vector<decoder::TokenId> best;
  double best_score = -std::numeric_limits<double>::infinity();
  std::vector<decoder::TokenId> cur;
  std::function<void(decoder::TokenId, double)> go = [&](decoder::TokenId last, double score) {
    if (cur.size() == max_len) return;
    const auto& row = rows[static_cast<std::size_t>(last)];
    for (std::size_t t = 0; t < row.size(); ++t) {
      const auto id = static_cast<decoder::TokenId>(t);
      const double s = score + std::log(row[t]);
      cur.push_back(id);
      if (id == separator) {
        if (s > best_score) {
          best_score = s;
          best = cur;
        }
      } else {
        go(id, s);
      }
      cur.pop_back();
    }
  };
  go(separator, 0.0);
  return {best, best_score};
}

std::size_t longest_repeat_run(const std::vector<decoder::TokenId>& tokens, std::size_t max_n) {
  std::size_t longest = tokens.empty() ? 0 : 1;
  for (std::size_t n = 1; n <= max_n; ++n) {
    for (std::size_t start = 0; start + n <= tokens.size(); ++start) {
      std::size_t run = 1;
      while (start + (run + 1) * n <= tokens.size() &&
             std::equal(tokens.begin() + std::ptrdiff_t(start), tokens.begin() + std::ptrdiff_t(start + n),
                        tokens.begin() + std::ptrdiff_t(start + run * n))) {
        ++run;
      }
      longest = std::max(longest, run);
    }
  }
  return longest;
}

TwoSpeakerEpisode two_speaker_episode(std::uint64_t seed, std::size_t utterances, double separation,
                                      std::size_t dim) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> words(2, 8);
  std::uniform_int_distribution<std::size_t> word_frames(3, 12);
  std::bernoulli_distribution flip(0.5);

  // Centers at +-separation/2 along a random unit direction.
  std::vector<double> dir(dim);
  double norm = 0.0;
  for (double& d : dir) {
    d = noise(rng);
    norm += d * d;
  }
  for (double& d : dir) d /= std::sqrt(norm);

  TwoSpeakerEpisode ep;
  std::vector<std::size_t> speaker_of_frame;
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> word_ranges;  // [first, end) frames
  std::vector<std::size_t> speakers;
  std::size_t speaker = 0;
  for (std::size_t u = 0; u < utterances; ++u) {
    if (u > 0 && flip(rng)) speaker = 1 - speaker;
    speakers.push_back(speaker);
    word_ranges.emplace_back();
    for (std::size_t w = words(rng); w > 0; --w) {
      const std::size_t first = speaker_of_frame.size();
      speaker_of_frame.insert(speaker_of_frame.end(), word_frames(rng), speaker);
      word_ranges.back().emplace_back(first, speaker_of_frame.size());
    }
  }

  const double rate = 100.0;
  ep.frames = FrameMatrix(speaker_of_frame.size(), dim, rate);
  for (std::size_t f = 0; f < speaker_of_frame.size(); ++f) {
    const double sign = speaker_of_frame[f] == 0 ? -0.5 : 0.5;
    auto row = ep.frames.row(f);
    for (std::size_t d = 0; d < dim; ++d) row[d] = static_cast<float>(sign * separation * dir[d] + noise(rng));
  }
  for (std::size_t u = 0; u < utterances; ++u) {
    Utterance utt;
    utt.speaker.id = speakers[u] == 0 ? "alice" : "bob";
    const auto& ranges = word_ranges[u];
    utt.span = TimeSpan(double(ranges.front().first) / rate, double(ranges.back().second) / rate);
    std::vector<diarize::WordAttention> att;
    for (std::size_t w = 0; w < ranges.size(); ++w) {
      const auto [first, end] = ranges[w];
      utt.words.emplace_back("w" + std::to_string(w), TimeSpan(double(first) / rate, double(end) / rate));
      att.push_back({decoder::AttentionSnapshot::uniform(1, 1, end - first), first});
    }
    ep.utterances.push_back(std::move(utt));
    ep.attention.push_back(std::move(att));
  }
  return ep;
}

}  // namespace longconv::testing
