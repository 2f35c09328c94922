// Copyright 2026 The longconv Authors
// SPDX-License-Identifier: Apache-2.0

#include "longconv/cli.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "longconv/augment.hpp"
#include "longconv/decoder.hpp"
#include "longconv/diarize.hpp"
#include "longconv/error.hpp"
#include "longconv/features.hpp"
#include "longconv/score.hpp"
#include "longconv/scripted_model.hpp"
#include "longconv/transcript_io.hpp"

namespace longconv::cli {

namespace {

struct Global {
  std::string output = "-";
  std::uint64_t seed = 0;
  int verbose = 0;
  bool quiet = false;
};

struct ScoreArgs {
  std::string hyp;
  std::string ref;
  std::string mode = "aligned";
  std::string normalize = "rich";
  bool case_insensitive = false;
};

struct DecodeArgs {
  std::string features;
  std::string vad;
  std::string model;
  std::string mode = "unaligned";
  std::string search = "beam";
  std::string conversation_id = "decoded";
  decoder::StridingConfig striding;
};

struct AugmentArgs {
  std::string transcript;
  std::string mode = "shift";
  std::string alignments;
  std::size_t count = 10;
  std::string audio = "{id}.wav";
};

struct ReconcileArgs {
  std::string transcript;
  std::string strategy = "separate";
  std::string segments;
  std::string embeddings;
  std::string report;
  std::string algorithm = "hdbscan";
  std::string distance = "euclidean";
  diarize::ClusterConfig cluster;
};

// Writes to the output file, or to `out` for "-".
void emit(const Global& g, std::ostream& out, const std::function<void(std::ostream&)>& write) {
  if (g.output == "-") {
    write(out);
    out.flush();
    return;
  }
  std::ofstream file(g.output);
  if (!file) throw IoError("cannot open '" + g.output + "' for writing");
  write(file);
  if (!file) throw IoError("failed writing '" + g.output + "'");
}

int cmd_score(const Global& g, const ScoreArgs& a, std::ostream& out) {
  metrics::ScoreOptions options;
  options.mode = metrics::parse_task_mode(a.mode);
  options.normalize = parse_normalize_mode(a.normalize);
  options.case_mode = a.case_insensitive ? metrics::CaseMode::kInsensitive : metrics::CaseMode::kSensitive;
  const auto hyps = parse_corpus(std::filesystem::path(a.hyp));
  const auto refs = parse_corpus(std::filesystem::path(a.ref));
  for (const Conversation& r : refs) r.require_nonempty_utterances();
  const metrics::CorpusScore score = metrics::score_corpus(hyps, refs, options);
  for (const std::string& id : score.missing_hypotheses) spdlog::warn("no hypothesis for conversation '{}'", id);
  for (const std::string& id : score.extra_hypotheses) spdlog::warn("hypothesis '{}' has no reference", id);
  const auto report = metrics::report_json(score, options);
  emit(g, out, [&](std::ostream& o) { o << report.dump(2) << '\n'; });
  return kOk;
}

int cmd_decode(const Global& g, const DecodeArgs& a, std::ostream& out) {
  a.striding.validate();
  const FrameMatrix features = load_frames(a.features);
  std::vector<VadSegment> vad;
  if (!a.vad.empty()) vad = load_vad(a.vad);
  decoder::ScriptedModel model(decoder::load_script(a.model));
  const double duration = static_cast<double>(features.frames()) / features.frame_rate();

  if (a.mode == "unaligned") {
    decoder::DecodeObserver observer;
    observer.on_stride = [](const decoder::StrideEvent& e) {
      spdlog::info("stride at step {}: window {} -> {}, {} tokens committed{}", e.step, e.from, e.to, e.committed,
                   e.forced ? " (forced)" : "");
    };
    observer.on_repetition = [&model](const decoder::RepetitionEvent& e) {
      std::string gram;
      for (decoder::TokenId t : e.ngram) gram += (gram.empty() ? "" : " ") + model.vocabulary().token(t);
      spdlog::info("repetition at step {}: '{}' x{}, pruning {} tokens", e.step, gram, e.repeats, e.removable);
    };
    const auto result = decoder::decode_unaligned(model, features, vad, a.striding, a.conversation_id, observer);
    if (result.hit_step_cap) spdlog::warn("decoding stopped at the step cap after {} steps", result.steps);
    if (result.stopped_in_loop) spdlog::warn("decoding stopped in a loop at the end of the recording");
    spdlog::info("decoded {} tokens in {} steps, {} strides, {} repetitions", result.tokens.size(), result.steps,
                 result.strides.size(), result.repetitions.size());
    emit(g, out, [&](std::ostream& o) { write_conversation(o, result.conversation); });
    return kOk;
  }
  if (a.mode != "aligned") throw ValidationError("unknown decode mode '" + a.mode + "'");
  if (a.search != "beam" && a.search != "greedy") throw ValidationError("unknown search '" + a.search + "'");
  if (vad.empty()) throw ValidationError("aligned decoding needs --vad segments as utterance bounds");

  model.set_addressing(decoder::Addressing::kWindow);
  const double rate = features.frame_rate();
  std::vector<Utterance> utterances;
  for (std::size_t i = 0; i < vad.size(); ++i) {
    const auto first = static_cast<std::size_t>(std::max(0.0, std::ceil(vad[i].span.start() * rate - 1e-9)));
    const auto end = std::min(features.frames(),
                              static_cast<std::size_t>(std::max(0.0, std::ceil(vad[i].span.end() * rate - 1e-9))));
    if (end <= first) throw ValidationError("VAD segment " + std::to_string(i) + " covers no feature frames");
    const FrameMatrix slice = features.slice(first, end - first);
    auto result = a.search == "beam" ? decoder::decode_aligned(model, slice, a.striding)
                                     : decoder::decode_greedy(model, slice, a.striding);
    if (!result.terminated) spdlog::warn("utterance {} hit the length bound without a separator", i);
    Utterance u = std::move(result.utterance);
    u.span = vad[i].span;
    utterances.push_back(std::move(u));
  }
  const Conversation conv(a.conversation_id, std::move(utterances), std::max(duration, vad.back().span.end()));
  emit(g, out, [&](std::ostream& o) { write_conversation(o, conv); });
  return kOk;
}

std::string audio_for(const std::string& pattern, const std::string& id) {
  std::string out = pattern;
  for (std::size_t pos = out.find("{id}"); pos != std::string::npos; pos = out.find("{id}", pos + id.size())) {
    out.replace(pos, 4, id);
  }
  return out;
}

int cmd_augment(const Global& g, const AugmentArgs& a, std::ostream& out) {
  if (a.mode != "shift" && a.mode != "align") throw ValidationError("unknown augment mode '" + a.mode + "'");
  const auto corpus = parse_corpus(std::filesystem::path(a.transcript));
  augment::WordAlignmentTrack track;
  if (a.mode == "align") {
    if (a.alignments.empty()) throw ValidationError("align mode needs --alignments");
    if (corpus.size() != 1) throw ValidationError("align mode takes a transcript with exactly one conversation");
    track = augment::load_alignment_track(a.alignments);
    augment::validate_track(corpus.front(), track);
  }
  std::vector<augment::TrainingExample> examples;
  for (std::size_t c = 0; c < corpus.size(); ++c) {
    const auto spans = augment::sample_spans(corpus[c], a.count, g.seed + c);
    for (const TimeSpan& span : spans) {
      examples.push_back(a.mode == "shift" ? augment::shift_aug(corpus[c], span)
                                           : augment::align_aug(corpus[c], span, track));
    }
  }
  spdlog::info("wrote {} training examples", examples.size());
  emit(g, out, [&](std::ostream& o) {
    for (const auto& ex : examples) augment::write_manifest_line(o, ex, audio_for(a.audio, ex.conversation_id));
  });
  return kOk;
}

int cmd_reconcile(const Global& g, ReconcileArgs a, std::ostream& out) {
  a.cluster.algorithm = diarize::parse_cluster_algorithm(a.algorithm);
  a.cluster.distance = diarize::parse_distance(a.distance);
  a.cluster.validate();
  const auto corpus = parse_corpus(std::filesystem::path(a.transcript));

  nlohmann::ordered_json report;
  report["schema_version"] = metrics::kReportSchemaVersion;
  report["strategy"] = a.strategy;
  report["conversations"] = nlohmann::ordered_json::array();
  std::vector<Conversation> result;

  if (a.strategy == "separate") {
    if (a.segments.empty()) throw ValidationError("separate reconciliation needs --segments");
    const auto segments = diarize::load_segments(a.segments);
    for (const Conversation& c : corpus) {
      result.push_back(diarize::reconcile_separate(c, segments));
      report["conversations"].push_back({{"conversation_id", c.id()}, {"words", c.word_count()}});
    }
  } else if (a.strategy == "joint" || a.strategy == "sd-plus") {
    FrameMatrix embeddings;
    if (a.strategy == "sd-plus") {
      if (a.embeddings.empty()) throw ValidationError("sd-plus reconciliation needs --embeddings");
      if (corpus.size() != 1) throw ValidationError("sd-plus takes a transcript with exactly one conversation");
      embeddings = load_frames(a.embeddings);
    }
    for (const Conversation& c : corpus) {
      diarize::JointExtraction joint = diarize::extract_joint_speakers(c);
      if (joint.unknown > 0 || joint.malformed > 0) {
        spdlog::warn("conversation '{}': {} utterances without a speaker token, {} malformed", c.id(), joint.unknown,
                     joint.malformed);
      }
      std::vector<Utterance> utterances = std::move(joint.utterances);
      if (a.strategy == "sd-plus") {
        std::vector<std::vector<diarize::WordAttention>> attention;
        for (const Utterance& u : utterances) {
          attention.emplace_back();
          for (const WordToken& w : u.words) {
            attention.back().push_back(diarize::uniform_word_attention(w.span().value_or(u.span),
                                                                       embeddings.frame_rate(), embeddings.frames()));
          }
        }
        utterances = diarize::sd_plus(utterances, embeddings, attention, a.cluster);
      }
      report["conversations"].push_back({{"conversation_id", c.id()},
                                         {"utterances", utterances.size()},
                                         {"unknown_speaker", joint.unknown},
                                         {"malformed", joint.malformed}});
      result.emplace_back(c.id(), std::move(utterances), c.duration());
    }
  } else {
    throw ValidationError("unknown reconcile strategy '" + a.strategy + "'");
  }

  if (!a.report.empty()) {
    std::ofstream rf(a.report);
    if (!rf) throw IoError("cannot open '" + a.report + "' for writing");
    rf << report.dump(2) << '\n';
  }
  emit(g, out, [&](std::ostream& o) {
    for (const Conversation& c : result) write_conversation(o, c);
  });
  return kOk;
}

void add_striding_options(CLI::App* app, decoder::StridingConfig& s) {
  app->add_option("--window-seconds", s.window_seconds, "Attention window length in seconds")->capture_default_str();
  app->add_option("--advance-fraction", s.advance_fraction, "AF share of the window that triggers a stride")
      ->capture_default_str();
  app->add_option("--stride-fraction", s.stride_fraction, "Stride as a share of the window")->capture_default_str();
  app->add_option("--max-ngram", s.max_ngram, "Longest repeating n-gram looked for")->capture_default_str();
  app->add_option("--repeat-threshold", s.repeat_threshold, "Consecutive copies that count as a loop")
      ->capture_default_str();
  app->add_option("--af-stall-window", s.af_stall_window, "Tokens over which the AF must stall")
      ->capture_default_str();
  app->add_option("--af-stall-epsilon", s.af_stall_epsilon, "AF range in frames that counts as stalled")
      ->capture_default_str();
  app->add_option("--beam-size", s.beam_size, "Beam width for aligned decoding")->capture_default_str();
  app->add_option("--max-utterance-tokens", s.max_utterance_tokens, "Length bound for aligned decoding")
      ->capture_default_str();
  app->add_option("--max-steps-per-frame", s.max_steps_per_frame, "Step cap per speech frame")
      ->capture_default_str();
  app->add_option("--min-step-cap", s.min_step_cap, "Lower bound of the step cap")->capture_default_str();
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err, true);
  auto logger = std::make_shared<spdlog::logger>("longconv", sink);
  logger->set_pattern("[%l] %v");
  auto previous = spdlog::default_logger();
  spdlog::set_default_logger(logger);
  struct Restore {
    std::shared_ptr<spdlog::logger> logger;
    ~Restore() { spdlog::set_default_logger(logger); }
  } restore{previous};

  Global g;
  ScoreArgs score;
  DecodeArgs decode;
  AugmentArgs aug;
  ReconcileArgs rec;

  CLI::App app{"Long-conversation transcription and speaker attribution toolkit", "longconv"};
  app.allow_config_extras(false);
  app.set_config("--config", "", "Read options from a TOML/INI file; flags override it");
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("-o,--output", g.output, "Output path, '-' for standard output")->capture_default_str();
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_flag("-v,--verbose", g.verbose, "More log output");
  app.add_flag("-q,--quiet", g.quiet, "Only warnings and errors");

  CLI::App* s = app.add_subcommand("score", "Score hypotheses against references (WER, WDER, MWDE)");
  s->add_option("--hyp", score.hyp, "Hypothesis transcript")->required();
  s->add_option("--ref", score.ref, "Reference transcript")->required();
  s->add_option("--mode", score.mode, "aligned or unaligned")
      ->check(CLI::IsMember({"aligned", "unaligned"}))
      ->capture_default_str();
  s->add_option("--normalize", score.normalize, "rich or simulated")
      ->check(CLI::IsMember({"rich", "simulated"}))
      ->capture_default_str();
  s->add_flag("--case-insensitive", score.case_insensitive, "Compare words case-insensitively");

  CLI::App* d = app.add_subcommand("decode", "Decode features with a scripted model");
  d->add_option("--features", decode.features, "Feature matrix file")->required();
  d->add_option("--vad", decode.vad, "Speech segments, 'start end' per line");
  d->add_option("--model", decode.model, "Model script")->required();
  d->add_option("--mode", decode.mode, "unaligned or aligned")
      ->check(CLI::IsMember({"aligned", "unaligned"}))
      ->capture_default_str();
  d->add_option("--search", decode.search, "beam or greedy (aligned mode)")
      ->check(CLI::IsMember({"beam", "greedy"}))
      ->capture_default_str();
  d->add_option("--conversation-id", decode.conversation_id, "Id of the decoded conversation")
      ->capture_default_str();
  add_striding_options(d, decode.striding);

  CLI::App* a = app.add_subcommand("augment", "Write a training-example manifest");
  a->add_option("--transcript", aug.transcript, "Reference transcript")->required();
  a->add_option("--mode", aug.mode, "shift or align")->check(CLI::IsMember({"shift", "align"}))->capture_default_str();
  a->add_option("--alignments", aug.alignments, "Word alignments, 'utteranceIdx wordIdx start end' per line");
  a->add_option("--count", aug.count, "Spans per conversation")->capture_default_str();
  a->add_option("--audio", aug.audio, "Audio path written to the manifest; {id} is the conversation id")
      ->capture_default_str();

  CLI::App* r = app.add_subcommand("reconcile", "Assign speakers to ASR output");
  r->add_option("--transcript", rec.transcript, "ASR transcript")->required();
  r->add_option("--strategy", rec.strategy, "separate, joint or sd-plus")
      ->check(CLI::IsMember({"separate", "joint", "sd-plus"}))
      ->capture_default_str();
  r->add_option("--segments", rec.segments, "Diarization segments, 'start end clusterId' per line");
  r->add_option("--embeddings", rec.embeddings, "Speaker embedding matrix (sd-plus)");
  r->add_option("--report", rec.report, "Write speaker-token counts as JSON");
  r->add_option("--cluster", rec.algorithm, "hdbscan or agglomerative")
      ->check(CLI::IsMember({"hdbscan", "agglomerative"}))
      ->capture_default_str();
  r->add_option("--distance", rec.distance, "euclidean or cosine")
      ->check(CLI::IsMember({"euclidean", "cosine"}))
      ->capture_default_str();
  r->add_option("--min-cluster-size", rec.cluster.min_cluster_size, "Smallest HDBSCAN cluster")->capture_default_str();
  r->add_option("--min-samples", rec.cluster.min_samples, "0 uses the minimum cluster size")->capture_default_str();
  r->add_option("--distance-threshold", rec.cluster.distance_threshold, "Agglomerative merge threshold")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::Error& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  }

  logger->set_level(g.quiet ? spdlog::level::warn : g.verbose > 0 ? spdlog::level::debug : spdlog::level::info);

  const bool decoding = d->parsed();
  try {
    if (s->parsed()) return cmd_score(g, score, out);
    if (d->parsed()) return cmd_decode(g, decode, out);
    if (a->parsed()) return cmd_augment(g, aug, out);
    return cmd_reconcile(g, rec, out);
  } catch (const ModelContractError& e) {
    err << "error: " << e.what() << '\n';
    return kModelContract;
  } catch (const ContractError& e) {
    err << "error: " << e.what() << '\n';
    return decoding ? kModelContract : kValidation;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kIo;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  }
}

}  // namespace longconv::cli
