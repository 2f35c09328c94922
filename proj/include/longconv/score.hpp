// Copyright 2026 The longconv Authors
// SPDX-License-Identifier: Apache-2.0
//
// Conversation- and corpus-level scoring.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "longconv/metrics.hpp"
#include "longconv/text.hpp"
#include "longconv/transcript.hpp"

namespace longconv::metrics {

/// kAligned compares utterance i of the hypothesis with utterance i of the
/// reference. kUnaligned compares the flattened word sequences.
enum class TaskMode { kAligned, kUnaligned };

TaskMode parse_task_mode(std::string_view text);
const char* to_string(TaskMode mode);

struct WerTotals {
  AlignCounts counts;                   // from terminated utterances
  std::size_t unterminated = 0;         // hypothesis utterances without a separator
  std::size_t unterminated_ref_words = 0;

  std::size_t errors() const { return counts.errors() + unterminated_ref_words; }
  std::size_t ref_words() const { return counts.ref_length() + unterminated_ref_words; }
};

/// Word sequence and parallel speaker labels of a conversation, with
/// separator and speaker tokens removed.
struct LabeledWords {
  std::vector<std::string> words;
  std::vector<std::string> speakers;
};

LabeledWords flatten(const Conversation& conversation);
LabeledWords flatten(const Utterance& utterance);

/// Pooled WER. In aligned mode an unterminated hypothesis utterance counts its
/// whole reference length as errors, whatever it contains.
WerTotals conversation_wer_totals(const Conversation& hyp, const Conversation& ref, TaskMode mode,
                                  CaseMode case_mode = CaseMode::kSensitive);
double conversation_wer(const Conversation& hyp, const Conversation& ref, TaskMode mode,
                        CaseMode case_mode = CaseMode::kSensitive);

struct ScoreOptions {
  TaskMode mode = TaskMode::kAligned;
  NormalizeMode normalize = NormalizeMode::kRich;
  CaseMode case_mode = CaseMode::kSensitive;
};

struct ConversationScore {
  std::string conversation_id;
  WerTotals wer_totals;
  std::optional<double> wer;  // nullopt when the reference has no words
  DiarizationCounts identity_counts;
  std::optional<double> wder_identity;
  MwdeResult mwde;
  std::optional<double> mwde_rate;  // nullopt when no words were matched
};

ConversationScore score_conversation(const Conversation& hyp, const Conversation& ref,
                                     const ScoreOptions& options);

struct CorpusScore {
  std::vector<ConversationScore> conversations;
  std::vector<std::string> missing_hypotheses;  // ref ids without a hypothesis
  std::vector<std::string> extra_hypotheses;    // hyp ids without a reference
};

/// Pairs conversations by id. A reference without a hypothesis is scored
/// against an empty hypothesis.
CorpusScore score_corpus(const std::vector<Conversation>& hyps, const std::vector<Conversation>& refs,
                         const ScoreOptions& options);

inline constexpr int kReportSchemaVersion = 1;

nlohmann::ordered_json report_json(const CorpusScore& score, const ScoreOptions& options);

}  // namespace longconv::metrics
