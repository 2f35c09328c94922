// Copyright 2026 The longconv Authors
// SPDX-License-Identifier: Apache-2.0
//
// Fixtures, independent oracles and toy models shared by the test binaries.

#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "longconv/decoder.hpp"
#include "longconv/diarize.hpp"
#include "longconv/metrics.hpp"
#include "longconv/scripted_model.hpp"
#include "longconv/transcript.hpp"

namespace longconv::testing {

struct UttSpec {
  std::string speaker;
  std::string text;
  double start = 0.0;
  double end = 0.0;
  bool terminated = true;
};

Conversation make_conversation(const std::string& id, const std::vector<UttSpec>& utterances);

/// Plain Wagner-Fischer distance over two rows, written independently of the
/// library's backtrace implementation.
std::size_t edit_distance(const std::vector<std::string>& a, const std::vector<std::string>& b);

std::vector<std::string> random_words(std::mt19937_64& rng, std::size_t max_len, std::size_t vocab);

struct SpeakerInstance {
  std::vector<std::string> hyp_words;
  std::vector<std::string> ref_words;
  std::vector<std::string> hyp_speakers;
  std::vector<std::string> ref_speakers;
  metrics::WordAlignment alignment;
};

/// Random words and speakers; matched words are at most `max_matched`.
SpeakerInstance random_instance(std::mt19937_64& rng, std::size_t max_hyp_speakers, std::size_t max_ref_speakers,
                                std::size_t max_matched);

/// Exact minimum over injective partial mappings as a fraction
/// wrong / matched, by direct enumeration over the alignment's matched pairs.
struct Fraction {
  std::size_t num = 0;
  std::size_t den = 0;
};
Fraction oracle_min_wder(const SpeakerInstance& inst);

/// Wrong / matched under a mapping given as (hyp, ref) pairs.
Fraction oracle_wder(const SpeakerInstance& inst, const std::map<std::string, std::string>& mapping);

/// Context-dependent model with pseudo-random distributions. Stateless: the
/// output is a pure function of the seed, the context and the position.
class RandomModel : public decoder::Model {
 public:
  RandomModel(std::uint64_t seed, std::size_t words, bool with_eos, double eos_bias = 0.0);
  const decoder::Vocabulary& vocabulary() const override { return vocab_; }
  decoder::StepOutput step(const decoder::FeatureWindow& window, const decoder::ContextView& context) override;

 private:
  std::uint64_t seed_;
  double eos_bias_;
  decoder::Vocabulary vocab_;
};

/// Distribution chosen by the previous token (the start symbol at first).
class TableModel : public decoder::Model {
 public:
  /// rows[t] is the distribution after token t.
  TableModel(std::vector<std::string> tokens, std::vector<std::vector<double>> rows);
  const decoder::Vocabulary& vocabulary() const override { return vocab_; }
  decoder::StepOutput step(const decoder::FeatureWindow& window, const decoder::ContextView& context) override;

 private:
  decoder::Vocabulary vocab_;
  std::vector<std::vector<double>> rows_;
};

/// Model returning a fixed, possibly broken, output at every step after
/// `good_steps` valid ones.
class BrokenModel : public decoder::Model {
 public:
  enum class Fault { kDistributionSum, kNegative, kAttentionSum, kWrongSize };
  BrokenModel(Fault fault, std::size_t good_steps);
  const decoder::Vocabulary& vocabulary() const override { return vocab_; }
  decoder::StepOutput step(const decoder::FeatureWindow& window, const decoder::ContextView& context) override;

 private:
  Fault fault_;
  std::size_t good_steps_;
  std::size_t calls_ = 0;
  decoder::Vocabulary vocab_;
};

struct ScriptedUtterance {
  std::string speaker;
  std::vector<std::string> words;
  double first_frame = 0.0;
  double last_frame = 0.0;  // frame of the separator
};

/// Stream script for a sequence of utterances: words, speaker token and
/// separator evenly spaced between the utterance's first and last frame.
decoder::Script script_for(const std::vector<ScriptedUtterance>& utterances);

/// Three utterances over 45 s at 100 frames/s, so two 30 s windows.
std::vector<ScriptedUtterance> three_utterance_episode();

/// Script tokens as strings.
std::vector<std::string> script_tokens(const decoder::Script& script);

/// Best terminated sequence of at most `max_len` tokens under a table model,
/// by enumerating every sequence. Returns tokens and log probability.
std::pair<std::vector<decoder::TokenId>, double> exhaustive_best(const std::vector<std::vector<double>>& rows,
                                                                 decoder::TokenId separator, std::size_t max_len);

/// Longest run of consecutive copies of any n-gram (n <= max_n) anywhere in
/// the sequence.
std::size_t longest_repeat_run(const std::vector<decoder::TokenId>& tokens, std::size_t max_n);

/// Two speakers whose frame embeddings are Gaussian around centers that lie
/// `separation` standard deviations apart. Utterances alternate speakers at
/// random and each word attends uniformly to its own frames.
struct TwoSpeakerEpisode {
  FrameMatrix frames;
  std::vector<Utterance> utterances;  // speakers hold the ground truth
  std::vector<std::vector<diarize::WordAttention>> attention;
};
TwoSpeakerEpisode two_speaker_episode(std::uint64_t seed, std::size_t utterances, double separation,
                                      std::size_t dim = 16);

}  // namespace longconv::testing
