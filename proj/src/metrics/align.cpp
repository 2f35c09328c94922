// Copyright 2026 The longconv Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cstdint>
#include <unordered_map>

#include "longconv/error.hpp"
#include "longconv/metrics.hpp"
#include "longconv/text.hpp"

namespace longconv::metrics {

namespace {

// Backpointer codes, ordered by tie-breaking preference.
enum Move : std::uint8_t { kDiagCorrect, kDiagSubstitute, kLeftDelete, kUpInsert };

constexpr std::size_t kMaxCells = std::size_t{3} << 30;

}  // namespace

AlignCounts& AlignCounts::operator+=(const AlignCounts& other) {
  correct += other.correct;
  substitutions += other.substitutions;
  insertions += other.insertions;
  deletions += other.deletions;
  return *this;
}

WordAlignment align_words(std::span<const std::string> hyp, std::span<const std::string> ref,
                          CaseMode mode) {
  const std::size_t H = hyp.size();
  const std::size_t R = ref.size();
  if ((H + 1) > kMaxCells / (R + 1)) {
    throw RefusalError("alignment of " + std::to_string(H) + " x " + std::to_string(R) +
                       " words exceeds the backtrace memory guard");
  }

  std::unordered_map<std::string, std::uint32_t> vocab;
  const auto intern = [&](const std::string& word) {
    std::string key = mode == CaseMode::kInsensitive ? fold_case(word) : word;
    return vocab.emplace(std::move(key), static_cast<std::uint32_t>(vocab.size())).first->second;
  };
  std::vector<std::uint32_t> h(H), r(R);
  for (std::size_t i = 0; i < H; ++i) h[i] = intern(hyp[i]);
  for (std::size_t j = 0; j < R; ++j) r[j] = intern(ref[j]);

  const std::size_t width = R + 1;
  std::vector<std::uint8_t> moves((H + 1) * width);
  std::vector<std::uint32_t> prev(width), cur(width);
  for (std::size_t j = 0; j <= R; ++j) {
    prev[j] = static_cast<std::uint32_t>(j);
    moves[j] = kLeftDelete;
  }
  for (std::size_t i = 1; i <= H; ++i) {
    std::uint8_t* row = &moves[i * width];
    cur[0] = static_cast<std::uint32_t>(i);
    row[0] = kUpInsert;
    const std::uint32_t hw = h[i - 1];
    for (std::size_t j = 1; j <= R; ++j) {
      const bool same = hw == r[j - 1];
      std::uint32_t best = prev[j - 1] + (same ? 0 : 1);
      std::uint8_t move = same ? kDiagCorrect : kDiagSubstitute;
      if (cur[j - 1] + 1 < best) {
        best = cur[j - 1] + 1;
        move = kLeftDelete;
      }
      if (prev[j] + 1 < best) {
        best = prev[j] + 1;
        move = kUpInsert;
      }
      cur[j] = best;
      row[j] = move;
    }
    std::swap(prev, cur);
  }

  WordAlignment out;
  out.ops.reserve(std::max(H, R));
  std::size_t i = H, j = R;
  while (i > 0 || j > 0) {
    switch (moves[i * width + j]) {
      case kDiagCorrect:
        --i, --j;
        out.ops.push_back({OpKind::kCorrect, i, j});
        ++out.counts.correct;
        break;
      case kDiagSubstitute:
        --i, --j;
        out.ops.push_back({OpKind::kSubstitute, i, j});
        ++out.counts.substitutions;
        break;
      case kLeftDelete:
        --j;
        out.ops.push_back({OpKind::kDelete, AlignOp::kNone, j});
        ++out.counts.deletions;
        break;
      default:
        --i;
        out.ops.push_back({OpKind::kInsert, i, AlignOp::kNone});
        ++out.counts.insertions;
        break;
    }
  }
  std::reverse(out.ops.begin(), out.ops.end());
  return out;
}

WordAlignment concatenate(std::span<const WordAlignment> parts) {
  WordAlignment out;
  std::size_t hyp_offset = 0;
  std::size_t ref_offset = 0;
  for (const WordAlignment& part : parts) {
    for (AlignOp op : part.ops) {
      if (op.hyp != AlignOp::kNone) op.hyp += hyp_offset;
      if (op.ref != AlignOp::kNone) op.ref += ref_offset;
      out.ops.push_back(op);
    }
    out.counts += part.counts;
    hyp_offset += part.counts.hyp_length();
    ref_offset += part.counts.ref_length();
  }
  return out;
}

double wer(const AlignCounts& counts) {
  if (counts.ref_length() == 0) throw UndefinedRateError("WER is undefined for an empty reference");
  return static_cast<double>(counts.errors()) / static_cast<double>(counts.ref_length());
}

double wer(const WordAlignment& alignment) { return wer(alignment.counts); }

}  // namespace longconv::metrics
