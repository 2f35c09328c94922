// Copyright 2026 The longconv Authors
// SPDX-License-Identifier: Apache-2.0

#include "longconv/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "longconv/error.hpp"
#include "longconv/joint.hpp"
#include "longconv/text.hpp"

namespace longconv::decoder {

// ---- Vocabulary -------------------------------------------------------------

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  bool have_separator = false;
  kinds_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    const std::string& t = tokens_[i];
    if (t.empty()) throw ValidationError("vocabulary entry " + std::to_string(i) + " is empty");
    for (std::size_t pos = 0; pos < t.size();) {
      if (utf8::is_space(utf8::next(t, pos))) {
        throw ValidationError("vocabulary entry '" + t + "' contains whitespace");
      }
    }
    const auto id = static_cast<TokenId>(i);
    if (!index_.emplace(t, id).second) throw ValidationError("duplicate vocabulary entry '" + t + "'");
    if (is_separator_token(t)) {
      kinds_.push_back(TokenKind::kSeparator);
      separator_ = id;
      have_separator = true;
    } else if (t == kEndOfStreamToken) {
      kinds_.push_back(TokenKind::kEndOfStream);
      end_of_stream_ = id;
    } else if (is_speaker_token(t)) {
      kinds_.push_back(TokenKind::kSpeaker);
    } else {
      kinds_.push_back(TokenKind::kWord);
    }
  }
  if (!have_separator) throw ValidationError("vocabulary lacks the separator token " + std::string(kSeparatorToken));
}

std::optional<TokenId> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> Vocabulary::tokens(std::span<const TokenId> ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (TokenId id : ids) out.push_back(token(id));
  return out;
}

// ---- Attention --------------------------------------------------------------

AttentionSnapshot::AttentionSnapshot(std::size_t layers, std::size_t heads, std::size_t frames,
                                     std::vector<double> weights)
    : layers_(layers), heads_(heads), frames_(frames), weights_(std::move(weights)) {
  if (weights_.size() != layers * heads * frames) {
    throw ContractError("attention snapshot expects " + std::to_string(layers * heads * frames) +
                        " weights, got " + std::to_string(weights_.size()));
  }
}

AttentionSnapshot AttentionSnapshot::one_hot(std::size_t layers, std::size_t heads, std::size_t frames,
                                             std::size_t position) {
  if (position >= frames) throw ContractError("one-hot position outside the window");
  std::vector<double> w(layers * heads * frames, 0.0);
  for (std::size_t k = 0; k < layers * heads; ++k) w[k * frames + position] = 1.0;
  return AttentionSnapshot(layers, heads, frames, std::move(w));
}

AttentionSnapshot AttentionSnapshot::uniform(std::size_t layers, std::size_t heads, std::size_t frames) {
  if (frames == 0) throw ContractError("uniform attention over zero frames");
  return AttentionSnapshot(layers, heads, frames,
                           std::vector<double>(layers * heads * frames, 1.0 / static_cast<double>(frames)));
}

std::vector<double> AttentionSnapshot::averaged() const {
  std::vector<double> avg(frames_, 0.0);
  const std::size_t n = layers_ * heads_;
  if (n == 0) return avg;
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t p = 0; p < frames_; ++p) avg[p] += weights_[k * frames_ + p];
  }
  for (double& v : avg) v /= static_cast<double>(n);
  return avg;
}

std::optional<std::string> AttentionSnapshot::check(double tolerance) const {
  if (empty()) return "attention snapshot is empty";
  for (std::size_t l = 0; l < layers_; ++l) {
    for (std::size_t h = 0; h < heads_; ++h) {
      double sum = 0.0;
      for (double w : head(l, h)) {
        if (!std::isfinite(w) || w < 0.0) {
          return "attention weight in layer " + std::to_string(l) + " head " + std::to_string(h) +
                 " is negative or not finite";
        }
        sum += w;
      }
      if (std::abs(sum - 1.0) > tolerance) {
        return "attention in layer " + std::to_string(l) + " head " + std::to_string(h) + " sums to " +
               std::to_string(sum);
      }
    }
  }
  return std::nullopt;
}

double attention_focus(const AttentionSnapshot& snapshot, double window_start) {
  if (snapshot.empty()) throw ContractError("attention focus of an empty snapshot");
  double total = 0.0;
  for (std::size_t l = 0; l < snapshot.layers(); ++l) {
    for (std::size_t h = 0; h < snapshot.heads(); ++h) {
      const auto w = snapshot.head(l, h);
      double expected = 0.0;
      for (std::size_t p = 0; p < w.size(); ++p) expected += static_cast<double>(p) * w[p];
      total += expected;
    }
  }
  return window_start + total / static_cast<double>(snapshot.layers() * snapshot.heads());
}

// ---- Config -----------------------------------------------------------------

void StridingConfig::validate() const {
  auto fail = [](const std::string& what) { throw ValidationError("striding config: " + what); };
  if (!(window_seconds > 0.0) || !std::isfinite(window_seconds)) fail("window_seconds must be positive");
  if (!(advance_fraction > 0.0 && advance_fraction < 1.0)) fail("advance_fraction must lie in (0, 1)");
  if (!(stride_fraction > 0.0 && stride_fraction < 1.0)) fail("stride_fraction must lie in (0, 1)");
  if (max_ngram == 0) fail("max_ngram must be positive");
  if (repeat_threshold < 2) fail("repeat_threshold must be at least 2");
  if (af_stall_window == 0) fail("af_stall_window must be positive");
  if (!(af_stall_epsilon > 0.0)) fail("af_stall_epsilon must be positive");
  if (beam_size == 0) fail("beam_size must be positive");
  if (max_utterance_tokens == 0) fail("max_utterance_tokens must be positive");
  if (!(max_steps_per_frame > 0.0) || !std::isfinite(max_steps_per_frame)) {
    fail("max_steps_per_frame must be positive");
  }
}

std::size_t StridingConfig::window_frames(double frame_rate) const {
  return static_cast<std::size_t>(std::max<long long>(1, std::llround(window_seconds * frame_rate)));
}

// ---- Session ----------------------------------------------------------------

DecoderSession::DecoderSession(std::size_t total_frames, std::size_t window_length, StridingConfig config,
                               std::optional<TokenId> start_symbol)
    : total_frames_(total_frames),
      window_length_(window_length),
      config_(std::move(config)),
      start_symbol_(start_symbol),
      start_in_context_(start_symbol.has_value()) {
  config_.validate();
  if (window_length_ == 0 || window_length_ > total_frames_) {
    throw ContractError("window of " + std::to_string(window_length_) + " frames does not fit " +
                        std::to_string(total_frames_) + " frames");
  }
}

std::vector<TokenId> DecoderSession::model_context() const {
  std::vector<TokenId> ctx;
  ctx.reserve(context_.size() + 1);
  if (start_in_context_) ctx.push_back(*start_symbol_);
  ctx.insert(ctx.end(), context_.begin(), context_.end());
  return ctx;
}

void DecoderSession::push(TokenId token, double focus) {
  context_.push_back(token);
  context_focus_.push_back(focus);
}

TokenId DecoderSession::at(std::size_t index) const {
  return index < committed_.size() ? committed_[index] : context_[index - committed_.size()];
}

double DecoderSession::focus_at(std::size_t index) const {
  return index < committed_.size() ? committed_focus_[index] : context_focus_[index - committed_.size()];
}

bool DecoderSession::should_advance() const {
  if (decoded_count() == 0) return false;
  const double latest = focus_at(decoded_count() - 1);
  return latest - static_cast<double>(window_start_) >
         config_.advance_fraction * static_cast<double>(window_length_);
}

StrideEvent DecoderSession::advance_window(bool forced) {
  StrideEvent event;
  event.step = step_;
  event.from = window_start_;
  event.forced = forced;
  const auto stride = static_cast<std::size_t>(
      std::max<long long>(1, std::llround(config_.stride_fraction * static_cast<double>(window_length_))));
  window_start_ = std::min(window_start_ + stride, total_frames_ - window_length_);
  event.to = window_start_;

  std::size_t drop = 0;
  while (drop < context_.size() && context_focus_[drop] < static_cast<double>(window_start_)) ++drop;
  committed_.insert(committed_.end(), context_.begin(), context_.begin() + static_cast<std::ptrdiff_t>(drop));
  committed_focus_.insert(committed_focus_.end(), context_focus_.begin(),
                          context_focus_.begin() + static_cast<std::ptrdiff_t>(drop));
  context_.erase(context_.begin(), context_.begin() + static_cast<std::ptrdiff_t>(drop));
  context_focus_.erase(context_focus_.begin(), context_focus_.begin() + static_cast<std::ptrdiff_t>(drop));
  event.committed = drop;
  if (drop > 0) start_in_context_ = false;
  return event;
}

std::optional<RepetitionEvent> DecoderSession::detect_repetition() const {
  const std::size_t total = decoded_count();
  if (total == 0) return std::nullopt;

  const std::size_t span = std::min(config_.af_stall_window, total);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = total - span; i < total; ++i) {
    lo = std::min(lo, focus_at(i));
    hi = std::max(hi, focus_at(i));
  }
  if (!(hi - lo < config_.af_stall_epsilon)) return std::nullopt;

  for (std::size_t n = 1; n <= config_.max_ngram && n <= total; ++n) {
    std::size_t repeats = 1;
    while ((repeats + 1) * n <= total) {
      const std::size_t base = total - (repeats + 1) * n;
      bool same = true;
      for (std::size_t k = 0; k < n && same; ++k) same = at(base + k) == at(total - n + k);
      if (!same) break;
      ++repeats;
    }
    if (repeats < config_.repeat_threshold) continue;
    const std::size_t removable = std::min((repeats - 1) * n, context_.size()) / n * n;
    if (removable == 0) continue;
    RepetitionEvent event;
    event.step = step_;
    for (std::size_t k = 0; k < n; ++k) event.ngram.push_back(at(total - n + k));
    event.repeats = repeats;
    event.removable = removable;
    return event;
  }
  return std::nullopt;
}

StrideEvent DecoderSession::prune_repeats(const RepetitionEvent& event) {
  if (event.removable > context_.size()) throw ContractError("repetition event does not match the session");
  context_.resize(context_.size() - event.removable);
  context_focus_.resize(context_focus_.size() - event.removable);
  if (!can_advance()) {
    StrideEvent none;
    none.step = step_;
    none.from = none.to = window_start_;
    none.forced = true;
    return none;
  }
  return advance_window(true);
}

std::vector<TokenId> DecoderSession::output() const {
  std::vector<TokenId> out(committed_);
  out.insert(out.end(), context_.begin(), context_.end());
  return out;
}

std::vector<double> DecoderSession::output_focus() const {
  std::vector<double> out(committed_focus_);
  out.insert(out.end(), context_focus_.begin(), context_focus_.end());
  return out;
}

// ---- Decoding ---------------------------------------------------------------

namespace {

void validate_output(const StepOutput& out, std::size_t vocab_size, std::size_t window_frames, std::size_t step) {
  if (out.distribution.size() != vocab_size) {
    throw ModelContractError(step, "distribution has " + std::to_string(out.distribution.size()) +
                                       " entries for a vocabulary of " + std::to_string(vocab_size));
  }
  double sum = 0.0;
  for (double p : out.distribution) {
    if (!std::isfinite(p) || p < 0.0) throw ModelContractError(step, "distribution entry is negative or not finite");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-6) throw ModelContractError(step, "distribution sums to " + std::to_string(sum));
  if (out.attention.frames() != window_frames) {
    throw ModelContractError(step, "attention covers " + std::to_string(out.attention.frames()) +
                                       " frames, window has " + std::to_string(window_frames));
  }
  if (auto problem = out.attention.check(1e-6)) throw ModelContractError(step, *problem);
}

// Lowest id wins ties so that greedy and beam-1 agree.
TokenId argmax(std::span<const double> p, std::optional<TokenId> skip) {
  TokenId best = -1;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto id = static_cast<TokenId>(i);
    if (skip && id == *skip) continue;
    if (best < 0 || p[i] > p[static_cast<std::size_t>(best)]) best = id;
  }
  return best;
}

std::size_t step_cap(const StridingConfig& config, std::size_t frames) {
  const double scaled = std::ceil(config.max_steps_per_frame * static_cast<double>(frames));
  return std::max(config.min_step_cap, static_cast<std::size_t>(scaled));
}

}  // namespace

std::vector<Utterance> utterances_from_stream(const Vocabulary& vocabulary, std::span<const TokenId> tokens,
                                              std::span<const double> focus, const ExcisionMap& excision,
                                              double frame_rate) {
  if (tokens.size() != focus.size()) throw ContractError("one focus value per token is required");
  const std::vector<std::string> text = vocabulary.tokens(tokens);
  const double duration = static_cast<double>(excision.total_frames()) / frame_rate;

  auto seconds = [&](std::size_t index) { return excision.to_original(focus[index]) / frame_rate; };

  std::vector<Utterance> out;
  double previous_start = 0.0;
  for (const JointSegment& seg : segment_joint_stream(text)) {
    // A token attending to frame f covers [f, f + 1) / rate.
    double start = std::max(seconds(seg.first), previous_start);
    double end = std::min(std::max(seconds(seg.last) + 1.0 / frame_rate, start), duration);
    start = std::min(start, end);
    previous_start = start;

    Utterance u;
    u.speaker.id = seg.speaker;
    u.terminated = seg.terminated;
    u.span = TimeSpan(start, end);
    for (std::size_t pos : seg.word_positions) {
      const double ws = std::clamp(seconds(pos), start, end);
      const double we = std::clamp(seconds(pos) + 1.0 / frame_rate, ws, end);
      u.words.emplace_back(text[pos], TimeSpan(ws, we));
    }
    out.push_back(std::move(u));
  }
  return out;
}

UnalignedResult decode_unaligned(Model& model, const FrameMatrix& features, std::span<const VadSegment> vad,
                                 const StridingConfig& config, std::string conversation_id,
                                 const DecodeObserver& observer) {
  config.validate();
  const Vocabulary& vocab = model.vocabulary();
  const double rate = features.frame_rate();
  const ExcisionMap excision =
      vad.empty() ? ExcisionMap::identity(features.frames()) : ExcisionMap(features.frames(), rate, vad);
  const FrameMatrix speech = excision.excise(features);
  const double duration = static_cast<double>(features.frames()) / rate;

  UnalignedResult result{Conversation(conversation_id, {}, duration), {}, {}, {}, {}, 0, false, false};
  if (speech.frames() == 0) return result;

  const std::size_t window = std::min(config.window_frames(rate), speech.frames());
  DecoderSession session(speech.frames(), window, config, vocab.separator());
  const std::size_t cap = step_cap(config, speech.frames());

  std::size_t step = 0;
  for (;; ++step) {
    if (step >= cap) {
      result.hit_step_cap = true;
      break;
    }
    session.set_step(step);
    const std::vector<TokenId> ctx = session.model_context();
    const FeatureWindow fw{&speech, session.window_start(), window};
    const StepOutput out = model.step(fw, ContextView{ctx, session.decoded_count()});
    validate_output(out, vocab.size(), window, step);

    const TokenId token = argmax(out.distribution, std::nullopt);
    if (vocab.end_of_stream() && token == *vocab.end_of_stream()) {
      ++step;
      break;
    }
    session.push(token, attention_focus(out.attention, static_cast<double>(session.window_start())));

    if (auto rep = session.detect_repetition()) {
      result.repetitions.push_back(*rep);
      if (observer.on_repetition) observer.on_repetition(*rep);
      const bool stuck = !session.can_advance();
      StrideEvent stride = session.prune_repeats(*rep);
      if (stuck) {
        result.stopped_in_loop = true;
        ++step;
        break;
      }
      result.strides.push_back(stride);
      if (observer.on_stride) observer.on_stride(stride);
    } else if (session.should_advance() && session.can_advance()) {
      StrideEvent stride = session.advance_window(false);
      result.strides.push_back(stride);
      if (observer.on_stride) observer.on_stride(stride);
    }
  }

  result.steps = step;
  result.tokens = session.output();
  result.focus = session.output_focus();
  result.conversation = Conversation(std::move(conversation_id),
                                     utterances_from_stream(vocab, result.tokens, result.focus, excision, rate),
                                     duration);
  return result;
}

std::vector<TokenId> greedy_decode_window(Model& model, const FrameMatrix& features, std::size_t max_steps) {
  const Vocabulary& vocab = model.vocabulary();
  const FeatureWindow fw{&features, 0, features.frames()};
  std::vector<TokenId> ctx{vocab.separator()};
  for (std::size_t step = 0; step < max_steps; ++step) {
    const StepOutput out = model.step(fw, ContextView{ctx, ctx.size() - 1});
    validate_output(out, vocab.size(), features.frames(), step);
    const TokenId token = argmax(out.distribution, std::nullopt);
    if (vocab.end_of_stream() && token == *vocab.end_of_stream()) break;
    ctx.push_back(token);
  }
  return {ctx.begin() + 1, ctx.end()};
}

namespace {

AlignedResult finish_aligned(const Vocabulary& vocab, std::vector<TokenId> tokens, double log_prob,
                             bool terminated, const FrameMatrix& features) {
  AlignedResult r;
  r.tokens = std::move(tokens);
  r.log_prob = log_prob;
  r.terminated = terminated;
  const std::vector<std::string> text = vocab.tokens(r.tokens);
  const auto segments = segment_joint_stream(text);
  r.utterance.span = TimeSpan(0.0, static_cast<double>(features.frames()) / features.frame_rate());
  r.utterance.terminated = terminated;
  r.utterance.speaker.id = std::string(kUnknownSpeaker);
  if (!segments.empty()) {
    r.utterance.speaker.id = segments.front().speaker;
    for (std::size_t pos : segments.front().word_positions) r.utterance.words.emplace_back(text[pos]);
  }
  return r;
}

struct Hypothesis {
  std::vector<TokenId> tokens;
  double score = 0.0;
};

StepOutput aligned_step(Model& model, const FrameMatrix& features, const std::vector<TokenId>& tokens,
                        std::size_t step) {
  const Vocabulary& vocab = model.vocabulary();
  std::vector<TokenId> ctx;
  ctx.reserve(tokens.size() + 1);
  ctx.push_back(vocab.separator());
  ctx.insert(ctx.end(), tokens.begin(), tokens.end());
  StepOutput out = model.step(FeatureWindow{&features, 0, features.frames()}, ContextView{ctx, tokens.size()});
  validate_output(out, vocab.size(), features.frames(), step);
  return out;
}

}  // namespace

AlignedResult decode_aligned(Model& model, const FrameMatrix& utterance_features, const StridingConfig& config) {
  config.validate();
  if (utterance_features.frames() == 0) throw ContractError("utterance has no frames");
  const Vocabulary& vocab = model.vocabulary();
  const TokenId sep = vocab.separator();
  const std::optional<TokenId> eos = vocab.end_of_stream();

  struct Candidate {
    double score;
    std::size_t parent;
    TokenId token;
  };

  std::vector<Hypothesis> beam{Hypothesis{}};
  std::optional<Hypothesis> best_finished;
  std::size_t step = 0;

  for (std::size_t length = 0; length < config.max_utterance_tokens && !beam.empty(); ++length) {
    std::vector<Candidate> candidates;
    for (std::size_t b = 0; b < beam.size(); ++b) {
      const StepOutput out = aligned_step(model, utterance_features, beam[b].tokens, step++);
      for (std::size_t i = 0; i < out.distribution.size(); ++i) {
        const auto id = static_cast<TokenId>(i);
        if ((eos && id == *eos) || out.distribution[i] <= 0.0) continue;
        candidates.push_back({beam[b].score + std::log(out.distribution[i]), b, id});
      }
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
      if (a.score != b.score) return a.score > b.score;
      if (a.parent != b.parent) return a.parent < b.parent;
      return a.token < b.token;
    });
    if (candidates.size() > config.beam_size) candidates.resize(config.beam_size);

    std::vector<Hypothesis> next;
    for (const Candidate& c : candidates) {
      Hypothesis h{beam[c.parent].tokens, c.score};
      h.tokens.push_back(c.token);
      if (c.token == sep) {
        if (!best_finished || h.score > best_finished->score) best_finished = std::move(h);
      } else {
        next.push_back(std::move(h));
      }
    }
    beam = std::move(next);
    // Scores only decrease with length, so no live hypothesis can overtake.
    if (best_finished && (beam.empty() || best_finished->score >= beam.front().score)) break;
  }

  if (best_finished) {
    return finish_aligned(vocab, std::move(best_finished->tokens), best_finished->score, true, utterance_features);
  }
  if (beam.empty()) return finish_aligned(vocab, {}, 0.0, false, utterance_features);
  return finish_aligned(vocab, std::move(beam.front().tokens), beam.front().score, false, utterance_features);
}

AlignedResult decode_greedy(Model& model, const FrameMatrix& utterance_features, const StridingConfig& config) {
  config.validate();
  if (utterance_features.frames() == 0) throw ContractError("utterance has no frames");
  const Vocabulary& vocab = model.vocabulary();
  std::vector<TokenId> tokens;
  double score = 0.0;
  for (std::size_t step = 0; step < config.max_utterance_tokens; ++step) {
    const StepOutput out = aligned_step(model, utterance_features, tokens, step);
    const TokenId token = argmax(out.distribution, vocab.end_of_stream());
    if (out.distribution[static_cast<std::size_t>(token)] <= 0.0) break;
    score += std::log(out.distribution[static_cast<std::size_t>(token)]);
    tokens.push_back(token);
    if (token == vocab.separator()) return finish_aligned(vocab, std::move(tokens), score, true, utterance_features);
  }
  return finish_aligned(vocab, std::move(tokens), score, false, utterance_features);
}

}  // namespace longconv::decoder
