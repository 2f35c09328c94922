// Copyright 2026 The longconv Authors
// SPDX-License-Identifier: Apache-2.0
//
// Long-form decoding with a striding attention window.
//
// The decoder attends to a fixed window of feature frames. After every
// token it estimates the attention focus (AF), the expected frame position
// of the cross-attention averaged over all layers and heads. Once the AF
// moves past `advance_fraction` of the window, the window slides forward by
// `stride_fraction` of its length and context tokens whose AF lies before
// the new window are committed and dropped from the decoder context.
// Repetition loops (a repeating n-gram while the AF stalls) are pruned and
// followed by a forced stride.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "longconv/features.hpp"
#include "longconv/transcript.hpp"

namespace longconv::decoder {

using TokenId = std::int32_t;

inline constexpr std::string_view kEndOfStreamToken = "</s>";

enum class TokenKind { kWord, kSpeaker, kSeparator, kEndOfStream };

/// Output vocabulary: words, speaker tokens, the separator (required) and an
/// optional end-of-stream token.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  const std::string& token(TokenId id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::optional<TokenId> find(std::string_view token) const;
  TokenKind kind(TokenId id) const { return kinds_.at(static_cast<std::size_t>(id)); }
  TokenId separator() const { return separator_; }
  std::optional<TokenId> end_of_stream() const { return end_of_stream_; }

  std::vector<std::string> tokens(std::span<const TokenId> ids) const;

 private:
  std::vector<std::string> tokens_;
  std::vector<TokenKind> kinds_;
  std::unordered_map<std::string, TokenId> index_;
  TokenId separator_ = 0;
  std::optional<TokenId> end_of_stream_;
};

/// Cross-attention weights indexed (layer, head, window frame).
class AttentionSnapshot {
 public:
  AttentionSnapshot() = default;
  AttentionSnapshot(std::size_t layers, std::size_t heads, std::size_t frames, std::vector<double> weights);

  static AttentionSnapshot one_hot(std::size_t layers, std::size_t heads, std::size_t frames,
                                   std::size_t position);
  static AttentionSnapshot uniform(std::size_t layers, std::size_t heads, std::size_t frames);

  std::size_t layers() const { return layers_; }
  std::size_t heads() const { return heads_; }
  std::size_t frames() const { return frames_; }
  bool empty() const { return weights_.empty(); }

  std::span<const double> head(std::size_t layer, std::size_t h) const {
    return {&weights_[(layer * heads_ + h) * frames_], frames_};
  }
  std::span<const double> weights() const { return weights_; }

  /// Weights averaged over layers and heads.
  std::vector<double> averaged() const;

  /// Throws a message when any head is negative, non-finite or does not sum
  /// to one within `tolerance`.
  std::optional<std::string> check(double tolerance = 1e-6) const;

 private:
  std::size_t layers_ = 0;
  std::size_t heads_ = 0;
  std::size_t frames_ = 0;
  std::vector<double> weights_;
};

/// Mean over layers and heads of sum_p p * w[p], offset by window_start.
/// Throws ContractError for an empty snapshot.
double attention_focus(const AttentionSnapshot& snapshot, double window_start);

/// Rows [start, start + frames) of a feature matrix.
struct FeatureWindow {
  const FrameMatrix* features = nullptr;
  std::size_t start = 0;
  std::size_t frames = 0;

  std::span<const float> row(std::size_t i) const { return features->row(start + i); }
  std::size_t dim() const { return features->dim(); }
};

struct ContextView {
  std::span<const TokenId> tokens;  // may begin with the separator as start symbol
  std::size_t position = 0;         // output index of the token being predicted
};

struct StepOutput {
  std::vector<double> distribution;  // over the vocabulary, sums to one
  AttentionSnapshot attention;       // over the window frames
};

/// Pluggable sequence model: dec(enc(window), context) -> next-token
/// distribution plus the cross-attention used to produce it.
class Model {
 public:
  virtual ~Model() = default;
  virtual const Vocabulary& vocabulary() const = 0;
  virtual StepOutput step(const FeatureWindow& window, const ContextView& context) = 0;
};

struct StridingConfig {
  double window_seconds = 30.0;
  double advance_fraction = 0.75;
  double stride_fraction = 0.5;
  std::size_t max_ngram = 4;
  std::size_t repeat_threshold = 3;
  std::size_t af_stall_window = 20;  // tokens
  double af_stall_epsilon = 25.0;    // frames
  std::size_t beam_size = 5;
  std::size_t max_utterance_tokens = 256;
  double max_steps_per_frame = 1.0;
  std::size_t min_step_cap = 1024;

  /// Throws ValidationError on out-of-range fields.
  void validate() const;
  std::size_t window_frames(double frame_rate) const;
};

struct StrideEvent {
  std::size_t step = 0;
  std::size_t from = 0;
  std::size_t to = 0;
  std::size_t committed = 0;  // tokens moved out of the context
  bool forced = false;
};

struct RepetitionEvent {
  std::size_t step = 0;
  std::vector<TokenId> ngram;
  std::size_t repeats = 0;  // consecutive occurrences at the tail
  std::size_t removable = 0;  // trailing tokens that pruning will drop
};

/// Mutable state of one striding decode. Positions are speech-frame indices.
class DecoderSession {
 public:
  DecoderSession(std::size_t total_frames, std::size_t window_length, StridingConfig config,
                 std::optional<TokenId> start_symbol = std::nullopt);

  std::size_t window_start() const { return window_start_; }
  std::size_t window_length() const { return window_length_; }
  std::size_t total_frames() const { return total_frames_; }
  const StridingConfig& config() const { return config_; }

  std::span<const TokenId> context() const { return context_; }
  std::span<const double> context_focus() const { return context_focus_; }
  std::span<const TokenId> committed() const { return committed_; }
  std::span<const double> committed_focus() const { return committed_focus_; }
  std::size_t decoded_count() const { return committed_.size() + context_.size(); }

  /// Context as the model sees it, with the start symbol until it is dropped
  /// by the first stride.
  std::vector<TokenId> model_context() const;

  void push(TokenId token, double focus);

  /// Latest AF strictly beyond advance_fraction of the window.
  bool should_advance() const;
  bool can_advance() const { return window_start_ + window_length_ < total_frames_; }

  /// Slides the window by one stride (clamped to the last full window) and
  /// commits the longest context prefix whose AF lies before the new start.
  StrideEvent advance_window(bool forced = false);

  /// A run of >= repeat_threshold copies of an n-gram (n <= max_ngram, the
  /// smallest n wins) at the tail of the decoded stream while the AF range
  /// over the last af_stall_window tokens is below af_stall_epsilon. Only
  /// copies still in the context can be pruned; a run with nothing prunable
  /// is not reported.
  std::optional<RepetitionEvent> detect_repetition() const;

  /// Drops every copy after the first (context only) and forces a stride.
  StrideEvent prune_repeats(const RepetitionEvent& event);

  std::vector<TokenId> output() const;
  std::vector<double> output_focus() const;

  /// Steps taken so far, used to stamp events.
  std::size_t step() const { return step_; }
  void set_step(std::size_t step) { step_ = step; }

 private:
  TokenId at(std::size_t index) const;  // decoded stream
  double focus_at(std::size_t index) const;

  std::size_t total_frames_;
  std::size_t window_length_;
  StridingConfig config_;
  std::optional<TokenId> start_symbol_;
  bool start_in_context_ = false;
  std::size_t window_start_ = 0;
  std::size_t step_ = 0;
  std::vector<TokenId> committed_;
  std::vector<double> committed_focus_;
  std::vector<TokenId> context_;
  std::vector<double> context_focus_;
};

struct DecodeObserver {
  std::function<void(const StrideEvent&)> on_stride;
  std::function<void(const RepetitionEvent&)> on_repetition;
};

struct UnalignedResult {
  Conversation conversation;
  std::vector<TokenId> tokens;
  std::vector<double> focus;  // speech-frame AF per token
  std::vector<StrideEvent> strides;
  std::vector<RepetitionEvent> repetitions;
  std::size_t steps = 0;
  bool hit_step_cap = false;
  bool stopped_in_loop = false;  // loop detected with no window left to stride to
};

/// Greedy striding-window decode of a full recording. Non-speech frames are
/// removed per `vad` first; utterances are split at separators and labeled
/// by their speaker token; utterance spans come from token AFs mapped back to
/// the original timeline.
UnalignedResult decode_unaligned(Model& model, const FrameMatrix& features, std::span<const VadSegment> vad,
                                 const StridingConfig& config, std::string conversation_id = "decoded",
                                 const DecodeObserver& observer = {});

/// Greedy decoding over a fixed window with no striding or repetition
/// handling; stops at end-of-stream or after `max_steps`.
std::vector<TokenId> greedy_decode_window(Model& model, const FrameMatrix& features, std::size_t max_steps);

struct AlignedResult {
  Utterance utterance;
  std::vector<TokenId> tokens;
  double log_prob = 0.0;
  bool terminated = false;
};

/// Beam search over a single utterance (beam width config.beam_size, length
/// bound config.max_utterance_tokens). Returns the best hypothesis ending in
/// the separator; if none does, the best one at the length bound with
/// terminated = false.
AlignedResult decode_aligned(Model& model, const FrameMatrix& utterance_features, const StridingConfig& config);

/// Step-wise argmax with the same stopping rules as decode_aligned.
AlignedResult decode_greedy(Model& model, const FrameMatrix& utterance_features, const StridingConfig& config);

/// Builds utterances from a decoded stream. `focus` holds one speech-frame AF
/// per token; spans are mapped through `excision` into seconds.
std::vector<Utterance> utterances_from_stream(const Vocabulary& vocabulary, std::span<const TokenId> tokens,
                                              std::span<const double> focus, const ExcisionMap& excision,
                                              double frame_rate);

}  // namespace longconv::decoder
