// Copyright 2026 The longconv Authors
// SPDX-License-Identifier: Apache-2.0

#include "longconv/features.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "longconv/error.hpp"

namespace longconv {

static_assert(std::endian::native == std::endian::little, "frame files are little endian");

namespace {

constexpr char kMagic[4] = {'L', 'C', 'F', 'M'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in, std::string_view source) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw ParseError(std::string(source), 1, "truncated frame matrix header");
  }
  return value;
}

void check_rate(double frame_rate) {
  if (!std::isfinite(frame_rate) || frame_rate <= 0.0) {
    throw ValidationError("frame rate must be positive, got " + std::to_string(frame_rate));
  }
}

}  // namespace

FrameMatrix::FrameMatrix(std::size_t frames, std::size_t dim, double frame_rate)
    : FrameMatrix(frames, dim, frame_rate, std::vector<float>(frames * dim, 0.0f)) {}

FrameMatrix::FrameMatrix(std::size_t frames, std::size_t dim, double frame_rate, std::vector<float> values)
    : frames_(frames), dim_(dim), frame_rate_(frame_rate), values_(std::move(values)) {
  check_rate(frame_rate);
  if (dim == 0) throw ValidationError("frame matrix dimension must be positive");
  if (values_.size() != frames * dim) {
    throw ValidationError("frame matrix has " + std::to_string(values_.size()) + " values, expected " +
                          std::to_string(frames * dim));
  }
  for (float v : values_) {
    if (!std::isfinite(v)) throw ValidationError("frame matrix contains a non-finite value");
  }
}

FrameMatrix FrameMatrix::slice(std::size_t first, std::size_t count) const {
  if (first + count > frames_) throw ContractError("frame slice out of range");
  std::vector<float> values(values_.begin() + static_cast<std::ptrdiff_t>(first * dim_),
                            values_.begin() + static_cast<std::ptrdiff_t>((first + count) * dim_));
  return FrameMatrix(count, dim_, frame_rate_, std::move(values));
}

void write_frames_binary(std::ostream& out, const FrameMatrix& m) {
  out.write(kMagic, 4);
  put<std::uint32_t>(out, kVersion);
  put<std::uint64_t>(out, m.frames());
  put<std::uint32_t>(out, static_cast<std::uint32_t>(m.dim()));
  put<double>(out, m.frame_rate());
  out.write(reinterpret_cast<const char*>(m.values().data()),
            static_cast<std::streamsize>(m.values().size() * sizeof(float)));
}

FrameMatrix read_frames_binary(std::istream& in, std::string_view source) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw ParseError(std::string(source), 1, "not a binary frame matrix");
  }
  if (get<std::uint32_t>(in, source) != kVersion) {
    throw ParseError(std::string(source), 1, "unsupported frame matrix version");
  }
  const auto frames = get<std::uint64_t>(in, source);
  const auto dim = get<std::uint32_t>(in, source);
  const auto rate = get<double>(in, source);
  std::vector<float> values(frames * dim);
  if (!in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(float)))) {
    throw ParseError(std::string(source), 1, "frame matrix data is truncated");
  }
  return FrameMatrix(frames, dim, rate, std::move(values));
}

void write_frames_text(std::ostream& out, const FrameMatrix& m) {
  out << m.frames() << ' ' << m.dim() << ' ' << m.frame_rate() << '\n';
  out.precision(9);
  for (std::size_t f = 0; f < m.frames(); ++f) {
    const auto row = m.row(f);
    for (std::size_t d = 0; d < row.size(); ++d) out << (d ? " " : "") << row[d];
    out << '\n';
  }
}

FrameMatrix read_frames_text(std::istream& in, std::string_view source) {
  std::string line;
  std::size_t line_no = 0;
  const auto next_line = [&]() {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
    }
    return false;
  };
  if (!next_line()) throw ParseError(std::string(source), 1, "missing frame matrix header");
  std::istringstream header(line);
  std::size_t frames = 0, dim = 0;
  double rate = 0.0;
  std::string extra;
  if (!(header >> frames >> dim >> rate) || (header >> extra)) {
    throw ParseError(std::string(source), line_no, "header must be 'frames dim frame_rate'");
  }
  std::vector<float> values;
  values.reserve(frames * dim);
  for (std::size_t f = 0; f < frames; ++f) {
    if (!next_line()) throw ParseError(std::string(source), line_no + 1, "missing frame rows");
    std::istringstream row(line);
    for (std::size_t d = 0; d < dim; ++d) {
      float v = 0.0f;
      if (!(row >> v)) throw ParseError(std::string(source), line_no, "expected " + std::to_string(dim) + " values");
      values.push_back(v);
    }
    if (row >> extra) throw ParseError(std::string(source), line_no, "too many values in row");
  }
  if (next_line()) throw ParseError(std::string(source), line_no, "unexpected rows after the matrix");
  try {
    return FrameMatrix(frames, dim, rate, std::move(values));
  } catch (const ValidationError& e) {
    throw ParseError(std::string(source), 1, e.what());
  }
}

FrameMatrix load_frames(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  char magic[4] = {};
  in.read(magic, 4);
  const bool binary = in.gcount() == 4 && std::memcmp(magic, kMagic, 4) == 0;
  in.clear();
  in.seekg(0);
  return binary ? read_frames_binary(in, path.string()) : read_frames_text(in, path.string());
}

void save_frames(const std::filesystem::path& path, const FrameMatrix& m, bool binary) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  if (binary) {
    write_frames_binary(out, m);
  } else {
    write_frames_text(out, m);
  }
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

FrameMatrix make_position_features(std::size_t frames, std::size_t dim, double frame_rate) {
  FrameMatrix m(frames, dim, frame_rate);
  for (std::size_t f = 0; f < frames; ++f) m.row(f)[0] = static_cast<float>(f);
  return m;
}

void validate_vad(std::span<const VadSegment> segments) {
  for (std::size_t i = 1; i < segments.size(); ++i) {
    if (segments[i].span.start() < segments[i - 1].span.end()) {
      throw ValidationError("VAD segment " + std::to_string(i) + " overlaps or precedes segment " +
                            std::to_string(i - 1));
    }
  }
}

std::vector<VadSegment> parse_vad(std::istream& in, std::string_view source) {
  std::vector<VadSegment> segments;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream fields(line);
    double start = 0.0, end = 0.0;
    std::string extra;
    if (!(fields >> start)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      throw ParseError(std::string(source), line_no, "expected 'start end'");
    }
    if (!(fields >> end) || (fields >> extra)) throw ParseError(std::string(source), line_no, "expected 'start end'");
    try {
      segments.push_back({TimeSpan(start, end)});
    } catch (const ValidationError& e) {
      throw ValidationError(std::string(source) + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  validate_vad(segments);
  return segments;
}

std::vector<VadSegment> load_vad(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return parse_vad(in, path.string());
}

ExcisionMap::ExcisionMap(std::size_t total_frames, double frame_rate, std::span<const VadSegment> segments)
    : total_frames_(total_frames) {
  check_rate(frame_rate);
  validate_vad(segments);
  for (const VadSegment& s : segments) {
    // Frames whose start time lies in [start, end).
    const auto first = static_cast<std::size_t>(std::max(0.0, std::ceil(s.span.start() * frame_rate - 1e-9)));
    const auto last = static_cast<std::size_t>(std::max(0.0, std::ceil(s.span.end() * frame_rate - 1e-9)));
    for (std::size_t f = first; f < std::min(last, total_frames); ++f) {
      if (kept_.empty() || kept_.back() < f) kept_.push_back(f);
    }
  }
}

ExcisionMap ExcisionMap::identity(std::size_t total_frames) {
  ExcisionMap map;
  map.total_frames_ = total_frames;
  map.kept_.resize(total_frames);
  for (std::size_t f = 0; f < total_frames; ++f) map.kept_[f] = f;
  return map;
}

double ExcisionMap::to_original(double speech_position) const {
  if (kept_.empty()) throw ContractError("excision map has no speech frames");
  const double clamped = std::clamp(speech_position, 0.0, static_cast<double>(kept_.size() - 1));
  const auto frame = static_cast<std::size_t>(std::floor(clamped));
  return static_cast<double>(kept_[frame]) + (clamped - static_cast<double>(frame));
}

std::optional<std::size_t> ExcisionMap::to_speech(std::size_t original_frame) const {
  auto it = std::lower_bound(kept_.begin(), kept_.end(), original_frame);
  if (it == kept_.end() || *it != original_frame) return std::nullopt;
  return static_cast<std::size_t>(it - kept_.begin());
}

FrameMatrix ExcisionMap::excise(const FrameMatrix& features) const {
  if (features.frames() != total_frames_) {
    throw ContractError("excision map covers " + std::to_string(total_frames_) + " frames, features have " +
                        std::to_string(features.frames()));
  }
  std::vector<float> values;
  values.reserve(kept_.size() * features.dim());
  for (std::size_t f : kept_) {
    const auto row = features.row(f);
    values.insert(values.end(), row.begin(), row.end());
  }
  return FrameMatrix(kept_.size(), features.dim(), features.frame_rate(), std::move(values));
}

}  // namespace longconv
