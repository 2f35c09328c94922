// Copyright 2026 The longconv Authors
// SPDX-License-Identifier: Apache-2.0

#include "longconv/score.hpp"

#include <map>

#include "longconv/error.hpp"
#include "longconv/joint.hpp"

namespace longconv::metrics {

TaskMode parse_task_mode(std::string_view text) {
  if (text == "aligned") return TaskMode::kAligned;
  if (text == "unaligned") return TaskMode::kUnaligned;
  throw ValidationError("unknown task mode '" + std::string(text) + "'");
}

const char* to_string(TaskMode mode) { return mode == TaskMode::kAligned ? "aligned" : "unaligned"; }

LabeledWords flatten(const Utterance& utterance) {
  LabeledWords out;
  for (std::size_t k = 0; k < utterance.words.size(); ++k) {
    const std::string& w = utterance.words[k].text();
    if (is_control_token(w)) continue;
    out.words.push_back(w);
    out.speakers.push_back(utterance.word_speaker(k));
  }
  return out;
}

LabeledWords flatten(const Conversation& conversation) {
  LabeledWords out;
  for (const Utterance& u : conversation.utterances()) {
    LabeledWords part = flatten(u);
    out.words.insert(out.words.end(), part.words.begin(), part.words.end());
    out.speakers.insert(out.speakers.end(), part.speakers.begin(), part.speakers.end());
  }
  return out;
}

namespace {

struct Scored {
  WerTotals totals;
  WordAlignment alignment;  // whole conversation
  LabeledWords hyp;
  LabeledWords ref;
};

Scored score_words(const Conversation& hyp, const Conversation& ref, TaskMode mode, CaseMode case_mode) {
  Scored out;
  if (mode == TaskMode::kUnaligned) {
    out.hyp = flatten(hyp);
    out.ref = flatten(ref);
    out.alignment = align_words(out.hyp.words, out.ref.words, case_mode);
    out.totals.counts = out.alignment.counts;
    return out;
  }
  const auto& hu = hyp.utterances();
  const auto& ru = ref.utterances();
  if (hu.size() != ru.size()) {
    throw ContractError("aligned scoring of '" + ref.id() + "' needs matching utterance counts: hypothesis has " +
                        std::to_string(hu.size()) + ", reference has " + std::to_string(ru.size()));
  }
  std::vector<WordAlignment> parts;
  parts.reserve(hu.size());
  for (std::size_t i = 0; i < hu.size(); ++i) {
    LabeledWords h = flatten(hu[i]);
    LabeledWords r = flatten(ru[i]);
    parts.push_back(align_words(h.words, r.words, case_mode));
    if (hu[i].terminated) {
      out.totals.counts += parts.back().counts;
    } else {
      ++out.totals.unterminated;
      out.totals.unterminated_ref_words += r.words.size();
    }
    out.hyp.words.insert(out.hyp.words.end(), h.words.begin(), h.words.end());
    out.hyp.speakers.insert(out.hyp.speakers.end(), h.speakers.begin(), h.speakers.end());
    out.ref.words.insert(out.ref.words.end(), r.words.begin(), r.words.end());
    out.ref.speakers.insert(out.ref.speakers.end(), r.speakers.begin(), r.speakers.end());
  }
  out.alignment = concatenate(parts);
  return out;
}

std::optional<double> rate_or_null(std::size_t numerator, std::size_t denominator) {
  if (denominator == 0) return std::nullopt;
  return static_cast<double>(numerator) / static_cast<double>(denominator);
}

nlohmann::ordered_json json_rate(const std::optional<double>& rate) {
  return rate ? nlohmann::ordered_json(*rate) : nlohmann::ordered_json(nullptr);
}

nlohmann::ordered_json diarization_json(const DiarizationCounts& c) {
  return {{"S_w", c.wrong_substituted}, {"C_w", c.wrong_correct}, {"S", c.substitutions}, {"C", c.correct}};
}

nlohmann::ordered_json wer_json(const WerTotals& t) {
  return {{"C", t.counts.correct},
          {"S", t.counts.substitutions},
          {"I", t.counts.insertions},
          {"D", t.counts.deletions},
          {"unterminated_utterances", t.unterminated},
          {"unterminated_ref_words", t.unterminated_ref_words},
          {"errors", t.errors()},
          {"ref_words", t.ref_words()}};
}

}  // namespace

WerTotals conversation_wer_totals(const Conversation& hyp, const Conversation& ref, TaskMode mode,
                                  CaseMode case_mode) {
  return score_words(hyp, ref, mode, case_mode).totals;
}

double conversation_wer(const Conversation& hyp, const Conversation& ref, TaskMode mode, CaseMode case_mode) {
  const WerTotals totals = conversation_wer_totals(hyp, ref, mode, case_mode);
  if (totals.ref_words() == 0) {
    throw UndefinedRateError("WER is undefined: reference '" + ref.id() + "' has no words");
  }
  return static_cast<double>(totals.errors()) / static_cast<double>(totals.ref_words());
}

ConversationScore score_conversation(const Conversation& hyp, const Conversation& ref,
                                     const ScoreOptions& options) {
  const Conversation h = normalize(hyp, options.normalize);
  const Conversation r = normalize(ref, options.normalize);
  const Scored s = score_words(h, r, options.mode, options.case_mode);

  ConversationScore out;
  out.conversation_id = ref.id();
  out.wer_totals = s.totals;
  out.wer = rate_or_null(s.totals.errors(), s.totals.ref_words());
  const SpeakerMapping identity = SpeakerMapping::identity(s.hyp.speakers, s.ref.speakers);
  out.identity_counts = wder_counts(s.alignment, s.hyp.speakers, s.ref.speakers, identity);
  out.wder_identity = rate_or_null(out.identity_counts.wrong(), out.identity_counts.matched());
  if (s.alignment.counts.matched() > 0) {
    out.mwde = mwde(s.alignment, s.hyp.speakers, s.ref.speakers);
    out.mwde_rate = out.mwde.rate;
  }
  return out;
}

CorpusScore score_corpus(const std::vector<Conversation>& hyps, const std::vector<Conversation>& refs,
                         const ScoreOptions& options) {
  std::map<std::string, const Conversation*> by_id;
  for (const Conversation& c : hyps) by_id[c.id()] = &c;
  CorpusScore out;
  for (const Conversation& ref : refs) {
    auto it = by_id.find(ref.id());
    if (it == by_id.end()) {
      out.missing_hypotheses.push_back(ref.id());
      std::vector<Utterance> empty;
      for (const Utterance& u : ref.utterances()) empty.push_back(Utterance{u.speaker, {}, u.span, true, {}});
      out.conversations.push_back(score_conversation(Conversation(ref.id(), std::move(empty)), ref, options));
      continue;
    }
    out.conversations.push_back(score_conversation(*it->second, ref, options));
    by_id.erase(it);
  }
  for (const auto& [id, conv] : by_id) out.extra_hypotheses.push_back(id);
  return out;
}

nlohmann::ordered_json report_json(const CorpusScore& score, const ScoreOptions& options) {
  using nlohmann::ordered_json;
  ordered_json report;
  report["schema_version"] = kReportSchemaVersion;
  report["mode"] = to_string(options.mode);
  report["normalize"] = to_string(options.normalize);
  report["case_sensitive"] = options.case_mode == CaseMode::kSensitive;

  WerTotals pooled_wer;
  DiarizationCounts pooled_identity, pooled_mwde;
  double sum_wer = 0.0, sum_wder = 0.0, sum_mwde = 0.0;
  std::size_t n_wer = 0, n_wder = 0, n_mwde = 0;
  ordered_json conversations = ordered_json::array();
  for (const ConversationScore& c : score.conversations) {
    ordered_json mapping = ordered_json::object();
    for (const auto& [h, r] : c.mwde.mapping.pairs()) mapping[h] = r;
    conversations.push_back({{"conversation_id", c.conversation_id},
                             {"wer", json_rate(c.wer)},
                             {"wer_counts", wer_json(c.wer_totals)},
                             {"wder_identity", json_rate(c.wder_identity)},
                             {"wder_identity_counts", diarization_json(c.identity_counts)},
                             {"mwde", json_rate(c.mwde_rate)},
                             {"mwde_counts", diarization_json(c.mwde.counts)},
                             {"speaker_mapping", std::move(mapping)}});
    pooled_wer.counts += c.wer_totals.counts;
    pooled_wer.unterminated += c.wer_totals.unterminated;
    pooled_wer.unterminated_ref_words += c.wer_totals.unterminated_ref_words;
    pooled_identity += c.identity_counts;
    pooled_mwde += c.mwde.counts;
    if (c.wer) sum_wer += *c.wer, ++n_wer;
    if (c.wder_identity) sum_wder += *c.wder_identity, ++n_wder;
    if (c.mwde_rate) sum_mwde += *c.mwde_rate, ++n_mwde;
  }
  report["conversations"] = std::move(conversations);

  const auto mean = [](double sum, std::size_t n) -> ordered_json {
    return n == 0 ? ordered_json(nullptr) : ordered_json(sum / static_cast<double>(n));
  };
  report["corpus"] = {
      {"pooled",
       {{"wer", json_rate(rate_or_null(pooled_wer.errors(), pooled_wer.ref_words()))},
        {"wer_counts", wer_json(pooled_wer)},
        {"wder_identity", json_rate(rate_or_null(pooled_identity.wrong(), pooled_identity.matched()))},
        {"wder_identity_counts", diarization_json(pooled_identity)},
        {"mwde", json_rate(rate_or_null(pooled_mwde.wrong(), pooled_mwde.matched()))},
        {"mwde_counts", diarization_json(pooled_mwde)}}},
      {"mean",
       {{"wer", mean(sum_wer, n_wer)},
        {"wder_identity", mean(sum_wder, n_wder)},
        {"mwde", mean(sum_mwde, n_mwde)}}},
      {"conversations", score.conversations.size()}};
  report["missing_hypotheses"] = score.missing_hypotheses;
  report["extra_hypotheses"] = score.extra_hypotheses;
  return report;
}

}  // namespace longconv::metrics
