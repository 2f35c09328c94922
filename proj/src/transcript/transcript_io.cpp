// Copyright 2026 The longconv Authors
// SPDX-License-Identifier: Apache-2.0

#include "longconv/transcript_io.hpp"

#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include <nlohmann/json.hpp>

#include "longconv/error.hpp"
#include "longconv/text.hpp"

namespace longconv {

namespace {

using nlohmann::json;

struct Record {
  std::size_t line = 0;
  std::string conversation_id;
  std::size_t utterance_index = 0;
  std::string speaker_id;
  std::optional<Role> role;
  double start = 0.0;
  double end = 0.0;
  std::string text;
  bool terminated = true;
  std::optional<std::vector<std::pair<double, double>>> word_spans;
  std::optional<std::vector<std::string>> word_speakers;
};

const std::vector<std::string>& known_fields() {
  static const std::vector<std::string> fields = {
      "conversation_id", "utterance_index", "speaker_id", "role", "start",
      "end",             "text",            "terminated", "word_spans", "word_speakers"};
  return fields;
}

bool is_known(const std::string& key) {
  for (const std::string& f : known_fields()) {
    if (f == key) return true;
  }
  return false;
}

[[noreturn]] void fail(std::string_view source, std::size_t line, const std::string& message) {
  throw ParseError(std::string(source), line, message);
}

Record record_from_json(const json& j, std::string_view source, std::size_t line) {
  if (!j.is_object()) fail(source, line, "record is not a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!is_known(key)) fail(source, line, "unknown field '" + key + "'");
  }
  const auto require = [&](const char* key) -> const json& {
    auto it = j.find(key);
    if (it == j.end()) fail(source, line, std::string("missing field '") + key + "'");
    return *it;
  };
  Record r;
  r.line = line;
  const json& cid = require("conversation_id");
  if (!cid.is_string()) fail(source, line, "conversation_id must be a string");
  r.conversation_id = cid.get<std::string>();
  const json& idx = require("utterance_index");
  if (!idx.is_number_unsigned()) fail(source, line, "utterance_index must be a non-negative integer");
  r.utterance_index = idx.get<std::size_t>();
  const json& spk = require("speaker_id");
  if (!spk.is_string() || spk.get<std::string>().empty()) {
    fail(source, line, "speaker_id must be a non-empty string");
  }
  r.speaker_id = spk.get<std::string>();
  if (auto it = j.find("role"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) fail(source, line, "role must be a string");
    r.role = parse_role(it->get<std::string>());
    if (!r.role) fail(source, line, "unknown role '" + it->get<std::string>() + "'");
  }
  const json& start = require("start");
  const json& end = require("end");
  if (!start.is_number() || !end.is_number()) fail(source, line, "start and end must be numbers");
  r.start = start.get<double>();
  r.end = end.get<double>();
  const json& text = require("text");
  if (!text.is_string()) fail(source, line, "text must be a string");
  r.text = text.get<std::string>();
  if (auto it = j.find("terminated"); it != j.end()) {
    if (!it->is_boolean()) fail(source, line, "terminated must be a boolean");
    r.terminated = it->get<bool>();
  }
  if (auto it = j.find("word_spans"); it != j.end()) {
    if (!it->is_array()) fail(source, line, "word_spans must be an array");
    std::vector<std::pair<double, double>> spans;
    for (const json& s : *it) {
      if (!s.is_array() || s.size() != 2 || !s[0].is_number() || !s[1].is_number()) {
        fail(source, line, "word_spans entries must be [start, end] pairs");
      }
      spans.emplace_back(s[0].get<double>(), s[1].get<double>());
    }
    r.word_spans = std::move(spans);
  }
  if (auto it = j.find("word_speakers"); it != j.end()) {
    if (!it->is_array()) fail(source, line, "word_speakers must be an array");
    std::vector<std::string> speakers;
    for (const json& s : *it) {
      if (!s.is_string()) fail(source, line, "word_speakers entries must be strings");
      speakers.push_back(s.get<std::string>());
    }
    r.word_speakers = std::move(speakers);
  }
  return r;
}

std::vector<std::string> split_csv_line(std::string_view line, std::string_view source,
                                        std::size_t line_no) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      if (!field.empty() || was_quoted) fail(source, line_no, "stray quote in CSV field");
      quoted = was_quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
      was_quoted = false;
    } else if (c != '\r') {
      if (was_quoted) fail(source, line_no, "text after closing quote in CSV field");
      field.push_back(c);
    }
  }
  if (quoted) fail(source, line_no, "unterminated quoted CSV field");
  fields.push_back(std::move(field));
  return fields;
}

std::vector<Record> read_csv(std::istream& in, std::string_view source) {
  std::vector<Record> records;
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<std::string> fields = split_csv_line(line, source, line_no);
    if (header.empty()) {
      for (const std::string& f : fields) {
        if (!is_known(f) || f == "word_spans" || f == "word_speakers") fail(source, line_no, "unknown CSV column '" + f + "'");
      }
      header = std::move(fields);
      continue;
    }
    if (fields.size() != header.size()) {
      fail(source, line_no, "expected " + std::to_string(header.size()) + " CSV fields, got " +
                                std::to_string(fields.size()));
    }
    json j = json::object();
    for (std::size_t c = 0; c < header.size(); ++c) {
      const std::string& key = header[c];
      const std::string& value = fields[c];
      try {
        if (key == "utterance_index") {
          std::size_t used = 0;
          const unsigned long long v = std::stoull(value, &used);
          if (used != value.size() || value.front() == '-') throw std::invalid_argument(value);
          j[key] = v;
        } else if (key == "start" || key == "end") {
          std::size_t used = 0;
          j[key] = std::stod(value, &used);
          if (used != value.size()) throw std::invalid_argument(value);
        } else if (key == "terminated") {
          if (value != "true" && value != "false") throw std::invalid_argument(value);
          j[key] = value == "true";
        } else if (key == "role") {
          if (!value.empty()) j[key] = value;
        } else {
          j[key] = value;
        }
      } catch (const std::logic_error&) {
        fail(source, line_no, "bad value '" + value + "' for column '" + key + "'");
      }
    }
    records.push_back(record_from_json(j, source, line_no));
  }
  return records;
}

std::vector<Record> read_json_lines(std::istream& in, std::string_view source) {
  std::vector<Record> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      fail(source, line_no, std::string("malformed JSON: ") + e.what());
    }
    records.push_back(record_from_json(j, source, line_no));
  }
  return records;
}

Utterance utterance_from_record(const Record& r, std::string_view source) {
  const std::string where = std::string(source) + ":" + std::to_string(r.line) + ": utterance " +
                            std::to_string(r.utterance_index) + ": ";
  try {
    Utterance u;
    u.speaker = SpeakerId{r.speaker_id, r.role};
    u.span = TimeSpan(r.start, r.end);
    u.terminated = r.terminated;
    std::vector<std::string> tokens = tokenize(r.text);
    if (r.word_spans && r.word_spans->size() != tokens.size()) {
      throw ValidationError("word_spans has " + std::to_string(r.word_spans->size()) +
                            " entries for " + std::to_string(tokens.size()) + " tokens");
    }
    for (std::size_t k = 0; k < tokens.size(); ++k) {
      std::optional<TimeSpan> span;
      if (r.word_spans) span = TimeSpan((*r.word_spans)[k].first, (*r.word_spans)[k].second);
      u.words.emplace_back(std::move(tokens[k]), span);
    }
    if (r.word_speakers) {
      if (r.word_speakers->size() != u.words.size()) {
        throw ValidationError("word_speakers has " + std::to_string(r.word_speakers->size()) + " entries for " +
                              std::to_string(u.words.size()) + " tokens");
      }
      u.word_speakers = *r.word_speakers;
    }
    return u;
  } catch (const ValidationError& e) {
    throw ValidationError(where + e.what());
  }
}

std::vector<Conversation> build_corpus(const std::vector<Record>& records, std::string_view source) {
  std::vector<Conversation> corpus;
  std::map<std::string, bool> seen;
  std::size_t i = 0;
  while (i < records.size()) {
    const std::string& id = records[i].conversation_id;
    if (seen.count(id)) {
      throw ValidationError(std::string(source) + ":" + std::to_string(records[i].line) +
                            ": records of conversation '" + id + "' are not contiguous");
    }
    seen[id] = true;
    std::vector<Utterance> utterances;
    for (; i < records.size() && records[i].conversation_id == id; ++i) {
      const Record& r = records[i];
      if (r.utterance_index != utterances.size()) {
        throw ValidationError(std::string(source) + ":" + std::to_string(r.line) +
                              ": expected utterance_index " + std::to_string(utterances.size()) +
                              ", got " + std::to_string(r.utterance_index));
      }
      utterances.push_back(utterance_from_record(r, source));
    }
    try {
      corpus.emplace_back(id, std::move(utterances));
    } catch (const ValidationError& e) {
      throw ValidationError(std::string(source) + ": conversation '" + id + "': " + e.what());
    }
  }
  return corpus;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

}  // namespace

TranscriptFormat format_for_path(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? TranscriptFormat::kCsv : TranscriptFormat::kJsonLines;
}

std::vector<Conversation> parse_corpus(std::istream& in, std::string_view source,
                                       TranscriptFormat format) {
  const std::vector<Record> records =
      format == TranscriptFormat::kCsv ? read_csv(in, source) : read_json_lines(in, source);
  return build_corpus(records, source);
}

std::vector<Conversation> parse_corpus(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  return parse_corpus(in, path.string(), format_for_path(path));
}

Conversation parse_conversation(std::istream& in, std::string_view source, TranscriptFormat format) {
  std::vector<Conversation> corpus = parse_corpus(in, source, format);
  if (corpus.size() != 1) {
    throw ValidationError(std::string(source) + ": expected exactly one conversation, found " +
                          std::to_string(corpus.size()));
  }
  return std::move(corpus.front());
}

Conversation parse_conversation(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  return parse_conversation(in, path.string(), format_for_path(path));
}

void write_conversation(std::ostream& out, const Conversation& conversation) {
  const auto& utterances = conversation.utterances();
  for (std::size_t i = 0; i < utterances.size(); ++i) {
    const Utterance& u = utterances[i];
    nlohmann::ordered_json j;
    j["conversation_id"] = conversation.id();
    j["utterance_index"] = i;
    j["speaker_id"] = u.speaker.id;
    if (u.speaker.role) j["role"] = to_string(*u.speaker.role);
    j["start"] = u.span.start();
    j["end"] = u.span.end();
    std::string text;
    bool all_timed = !u.words.empty();
    for (const WordToken& w : u.words) {
      if (!text.empty()) text.push_back(' ');
      text += w.text();
      all_timed = all_timed && w.span().has_value();
    }
    j["text"] = text;
    if (!u.terminated) j["terminated"] = false;
    if (all_timed) {
      nlohmann::ordered_json spans = nlohmann::ordered_json::array();
      for (const WordToken& w : u.words) spans.push_back({w.span()->start(), w.span()->end()});
      j["word_spans"] = std::move(spans);
    }
    if (!u.word_speakers.empty()) j["word_speakers"] = u.word_speakers;
    out << j.dump() << '\n';
  }
}

void write_corpus(const std::filesystem::path& path, const std::vector<Conversation>& corpus) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  for (const Conversation& c : corpus) write_conversation(out, c);
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::string serialize_conversation(const Conversation& conversation) {
  std::ostringstream out;
  write_conversation(out, conversation);
  return out.str();
}

}  // namespace longconv
