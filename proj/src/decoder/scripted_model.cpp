// Copyright 2026 The longconv Authors
// SPDX-License-Identifier: Apache-2.0

#include "longconv/scripted_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "longconv/error.hpp"
#include "longconv/joint.hpp"

namespace longconv::decoder {

namespace {

using nlohmann::json;

[[noreturn]] void fail(std::string_view source, const std::string& message) {
  throw ParseError(std::string(source), 1, message);
}

void check_keys(const json& obj, const std::set<std::string>& allowed, std::string_view source,
                const std::string& where) {
  if (!obj.is_object()) fail(source, where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) fail(source, "unknown key '" + key + "' in " + where);
  }
}

double get_frame(const json& v, std::string_view source, const std::string& where) {
  if (!v.is_number()) fail(source, where + " must be a number");
  const double f = v.get<double>();
  if (!std::isfinite(f) || f < 0.0) fail(source, where + " must be a non-negative frame index");
  return f;
}

std::size_t get_count(const json& v, std::string_view source, const std::string& where) {
  if (!v.is_number_unsigned()) fail(source, where + " must be a non-negative integer");
  return v.get<std::size_t>();
}

// Row of the window whose original frame (column 0) is the first at or after
// `frame`; the last row when the target lies past the window.
std::size_t locate(const FeatureWindow& window, double frame) {
  std::size_t lo = 0;
  std::size_t hi = window.frames;
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (static_cast<double>(window.row(mid)[0]) < frame) {
      lo = mid + 1;
    } else {
      hi = mid;
    }
  }
  return std::min(lo, window.frames - 1);
}

}  // namespace

Script parse_script(std::istream& in, std::string_view source) {
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + upto, '\n'));
    throw ParseError(std::string(source), line, e.what());
  }
  check_keys(doc, {"tokens", "loops", "layers", "heads", "confidence", "extra_vocabulary", "addressing"}, source,
             "script");

  Script s;
  if (!doc.contains("tokens") || !doc["tokens"].is_array()) fail(source, "script needs a 'tokens' array");
  for (std::size_t i = 0; i < doc["tokens"].size(); ++i) {
    const json& t = doc["tokens"][i];
    const std::string where = "tokens[" + std::to_string(i) + "]";
    check_keys(t, {"token", "frame"}, source, where);
    if (!t.contains("token") || !t["token"].is_string()) fail(source, where + " needs a string 'token'");
    if (!t.contains("frame")) fail(source, where + " needs a 'frame'");
    s.tokens.push_back({t["token"].get<std::string>(), get_frame(t["frame"], source, where + ".frame")});
  }
  if (doc.contains("loops")) {
    if (!doc["loops"].is_array()) fail(source, "'loops' must be an array");
    for (std::size_t i = 0; i < doc["loops"].size(); ++i) {
      const json& l = doc["loops"][i];
      const std::string where = "loops[" + std::to_string(i) + "]";
      check_keys(l, {"at", "ngram", "frame", "escape_frame"}, source, where);
      for (const char* key : {"at", "ngram", "frame", "escape_frame"}) {
        if (!l.contains(key)) fail(source, where + " needs '" + key + "'");
      }
      ScriptLoop loop;
      loop.at = get_count(l["at"], source, where + ".at");
      if (!l["ngram"].is_array() || l["ngram"].empty()) fail(source, where + ".ngram must be a non-empty array");
      for (const json& g : l["ngram"]) {
        if (!g.is_string()) fail(source, where + ".ngram entries must be strings");
        loop.ngram.push_back(g.get<std::string>());
      }
      loop.frame = get_frame(l["frame"], source, where + ".frame");
      loop.escape_frame = get_frame(l["escape_frame"], source, where + ".escape_frame");
      s.loops.push_back(std::move(loop));
    }
  }
  if (doc.contains("layers")) s.layers = get_count(doc["layers"], source, "layers");
  if (doc.contains("heads")) s.heads = get_count(doc["heads"], source, "heads");
  if (doc.contains("confidence")) {
    if (!doc["confidence"].is_number()) fail(source, "confidence must be a number");
    s.confidence = doc["confidence"].get<double>();
  }
  if (doc.contains("extra_vocabulary")) {
    if (!doc["extra_vocabulary"].is_array()) fail(source, "extra_vocabulary must be an array");
    for (const json& v : doc["extra_vocabulary"]) {
      if (!v.is_string()) fail(source, "extra_vocabulary entries must be strings");
      s.extra_vocabulary.push_back(v.get<std::string>());
    }
  }
  if (doc.contains("addressing")) {
    const json& a = doc["addressing"];
    if (a == "stream") {
      s.addressing = Addressing::kStream;
    } else if (a == "window") {
      s.addressing = Addressing::kWindow;
    } else {
      fail(source, "addressing must be 'stream' or 'window'");
    }
  }
  return s;
}

Script load_script(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open model script " + path.string());
  return parse_script(in, path.string());
}

ScriptedModel::ScriptedModel(Script script) : script_(std::move(script)) {
  if (script_.layers == 0 || script_.heads == 0) throw ValidationError("script needs at least one layer and head");
  if (!(script_.confidence > 0.0 && script_.confidence <= 1.0)) {
    throw ValidationError("script confidence must lie in (0, 1]");
  }
  std::set<std::size_t> loop_starts;
  for (const ScriptLoop& loop : script_.loops) {
    if (loop.at > script_.tokens.size()) throw ValidationError("loop starts past the end of the script");
    if (!loop_starts.insert(loop.at).second) {
      throw ValidationError("two loops start at script token " + std::to_string(loop.at));
    }
  }

  std::vector<std::string> entries{std::string(kSeparatorToken), std::string(kEndOfStreamToken)};
  std::unordered_set<std::string> seen(entries.begin(), entries.end());
  auto add = [&](const std::string& t) {
    if (seen.insert(t).second) entries.push_back(t);
  };
  for (const ScriptToken& t : script_.tokens) add(t.token);
  for (const ScriptLoop& loop : script_.loops) {
    for (const std::string& t : loop.ngram) add(t);
  }
  for (const std::string& t : script_.extra_vocabulary) add(t);
  vocabulary_ = Vocabulary(std::move(entries));

  if (vocabulary_.size() > 1) {
    const double rest = (1.0 - script_.confidence) / static_cast<double>(vocabulary_.size() - 1);
    if (!(script_.confidence > rest)) throw ValidationError("script confidence does not single out the target");
  }
  for (const ScriptToken& t : script_.tokens) {
    if (*vocabulary_.find(t.token) == *vocabulary_.end_of_stream()) {
      throw ValidationError("the end-of-stream token cannot appear in a script");
    }
    script_ids_.push_back(*vocabulary_.find(t.token));
  }
  for (const ScriptLoop& loop : script_.loops) {
    std::vector<TokenId> ids;
    for (const std::string& t : loop.ngram) ids.push_back(*vocabulary_.find(t));
    loop_ids_.push_back(std::move(ids));
  }
}

StepOutput ScriptedModel::emit(const FeatureWindow& window, TokenId token, double frame) const {
  StepOutput out;
  const std::size_t v = vocabulary_.size();
  const double rest = v > 1 ? (1.0 - script_.confidence) / static_cast<double>(v - 1) : 0.0;
  out.distribution.assign(v, rest);
  out.distribution[static_cast<std::size_t>(token)] = v > 1 ? script_.confidence : 1.0;
  out.attention = AttentionSnapshot::one_hot(script_.layers, script_.heads, window.frames, locate(window, frame));
  return out;
}

StepOutput ScriptedModel::step(const FeatureWindow& window, const ContextView& context) {
  if (window.frames == 0) throw ContractError("scripted model got an empty window");
  return script_.addressing == Addressing::kStream ? step_stream(window, context) : step_window(window, context);
}

StepOutput ScriptedModel::step_stream(const FeatureWindow& window, const ContextView& context) {
  const std::size_t p = context.position;
  if (p > log_.size()) {
    throw ContractError("scripted model asked for position " + std::to_string(p) + " after emitting " +
                        std::to_string(log_.size()) + " tokens");
  }
  log_.resize(p);
  // The context must be a suffix of what was emitted, optionally behind a
  // leading separator used as start symbol.
  const std::size_t tail = std::min(context.tokens.size(), p);
  if (context.tokens.size() > p + 1 ||
      (context.tokens.size() == p + 1 && context.tokens.front() != vocabulary_.separator())) {
    throw ContractError("scripted model context is longer than the emitted stream");
  }
  for (std::size_t k = 0; k < tail; ++k) {
    if (context.tokens[context.tokens.size() - tail + k] != log_[p - tail + k].token) {
      throw ContractError("scripted model context does not match the emitted stream at position " +
                          std::to_string(p - tail + k));
    }
  }

  std::ptrdiff_t last_script = -1;
  std::size_t in_loop = 0;
  for (auto it = log_.rbegin(); it != log_.rend(); ++it) {
    if (it->script_index >= 0) {
      last_script = it->script_index;
      break;
    }
    ++in_loop;
  }
  const auto next = static_cast<std::size_t>(last_script + 1);
  const double window_first = static_cast<double>(window.row(0)[0]);

  for (std::size_t i = 0; i < script_.loops.size(); ++i) {
    const ScriptLoop& loop = script_.loops[i];
    if (loop.at != next || window_first >= loop.escape_frame) continue;
    const TokenId token = loop_ids_[i][in_loop % loop_ids_[i].size()];
    log_.push_back({token, -1});
    return emit(window, token, loop.frame);
  }
  if (next < script_ids_.size()) {
    log_.push_back({script_ids_[next], static_cast<std::ptrdiff_t>(next)});
    return emit(window, script_ids_[next], script_.tokens[next].frame);
  }
  const TokenId eos = *vocabulary_.end_of_stream();
  log_.push_back({eos, last_script});
  return emit(window, eos, script_.tokens.empty() ? 0.0 : script_.tokens.back().frame);
}

StepOutput ScriptedModel::step_window(const FeatureWindow& window, const ContextView& context) const {
  const double first = static_cast<double>(window.row(0)[0]);
  const double last = static_cast<double>(window.row(window.frames - 1)[0]);
  std::size_t seen = 0;
  for (std::size_t i = 0; i < script_.tokens.size(); ++i) {
    const double f = script_.tokens[i].frame;
    if (f < first || f > last) continue;
    if (seen++ == context.position) return emit(window, script_ids_[i], f);
  }
  return emit(window, vocabulary_.separator(), last);
}

}  // namespace longconv::decoder
