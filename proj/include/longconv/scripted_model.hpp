// Copyright 2026 The longconv Authors
// SPDX-License-Identifier: Apache-2.0
//
// Oracle model driven by a declarative script, for exercising the decoders
// without a neural network. Features must carry the original frame index in
// column 0 (see make_position_features); the model looks up each token's
// target frame in the window and attends to it one-hot.
//
// Script (JSON):
//   {
//     "tokens": [{"token": "hi", "frame": 120}, ...],
//     "loops": [{"at": 3, "ngram": ["la", "di"], "frame": 500, "escape_frame": 1600}],
//     "layers": 2, "heads": 4, "confidence": 0.9,
//     "extra_vocabulary": ["[Ann]"],
//     "addressing": "stream"
//   }
//
// With stream addressing the model emits the script in order. A loop fires
// once the first `at` script tokens are out, emits its n-gram over and over
// with attention parked on `frame`, and lets go once the window starts at or
// after `escape_frame`. After the script the model emits the end-of-stream
// token. The model keeps a log of what it emitted per output position, so
// it follows the decoder when tokens are pruned.
//
// With window addressing the model is stateless: output position p gets the
// p-th script token whose frame lies in the window, then the separator.

#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "longconv/decoder.hpp"

namespace longconv::decoder {

struct ScriptToken {
  std::string token;
  double frame = 0.0;
};

struct ScriptLoop {
  std::size_t at = 0;
  std::vector<std::string> ngram;
  double frame = 0.0;
  double escape_frame = 0.0;
};

enum class Addressing { kStream, kWindow };

struct Script {
  std::vector<ScriptToken> tokens;
  std::vector<ScriptLoop> loops;
  std::size_t layers = 1;
  std::size_t heads = 1;
  double confidence = 1.0;
  std::vector<std::string> extra_vocabulary;
  Addressing addressing = Addressing::kStream;
};

/// Throws ParseError on malformed JSON or unknown keys, ValidationError on
/// inconsistent values.
Script parse_script(std::istream& in, std::string_view source);
Script load_script(const std::filesystem::path& path);

class ScriptedModel : public Model {
 public:
  explicit ScriptedModel(Script script);

  const Vocabulary& vocabulary() const override { return vocabulary_; }
  StepOutput step(const FeatureWindow& window, const ContextView& context) override;

  const Script& script() const { return script_; }
  void set_addressing(Addressing addressing) { script_.addressing = addressing; }
  void reset() { log_.clear(); }

 private:
  struct Emitted {
    TokenId token;
    std::ptrdiff_t script_index;  // -1 inside a loop
  };

  StepOutput emit(const FeatureWindow& window, TokenId token, double frame) const;
  StepOutput step_stream(const FeatureWindow& window, const ContextView& context);
  StepOutput step_window(const FeatureWindow& window, const ContextView& context) const;

  Script script_;
  Vocabulary vocabulary_;
  std::vector<TokenId> script_ids_;
  std::vector<std::vector<TokenId>> loop_ids_;
  std::vector<Emitted> log_;
};

}  // namespace longconv::decoder
