// Copyright 2026 The longconv Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <limits>
#include <set>
#include <unordered_map>

#include "longconv/error.hpp"
#include "longconv/metrics.hpp"

namespace longconv::metrics {

SpeakerMapping::SpeakerMapping(std::map<std::string, std::string> pairs) : pairs_(std::move(pairs)) {
  std::set<std::string> targets;
  for (const auto& [hyp, ref] : pairs_) {
    if (!targets.insert(ref).second) {
      throw ValidationError("speaker mapping is not injective: '" + ref +
                            "' is the target of several hypothesis speakers");
    }
  }
}

SpeakerMapping SpeakerMapping::identity(std::span<const std::string> hyp_speakers,
                                        std::span<const std::string> ref_speakers) {
  const std::set<std::string> refs(ref_speakers.begin(), ref_speakers.end());
  std::map<std::string, std::string> pairs;
  for (const std::string& h : hyp_speakers) {
    if (refs.count(h)) pairs.emplace(h, h);
  }
  return SpeakerMapping(std::move(pairs));
}

const std::string* SpeakerMapping::find(const std::string& hyp) const {
  auto it = pairs_.find(hyp);
  return it == pairs_.end() ? nullptr : &it->second;
}

DiarizationCounts& DiarizationCounts::operator+=(const DiarizationCounts& other) {
  wrong_correct += other.wrong_correct;
  wrong_substituted += other.wrong_substituted;
  correct += other.correct;
  substitutions += other.substitutions;
  return *this;
}

namespace {

void check_parallel(const WordAlignment& alignment, std::span<const std::string> hyp_speakers,
                    std::span<const std::string> ref_speakers) {
  for (const AlignOp& op : alignment.ops) {
    if ((op.hyp != AlignOp::kNone && op.hyp >= hyp_speakers.size()) ||
        (op.ref != AlignOp::kNone && op.ref >= ref_speakers.size())) {
      throw ContractError("speaker labels are not parallel to the aligned word sequences");
    }
  }
}

// Dense speaker indices for the matched ops of an alignment.
struct MatchedSpeakers {
  std::vector<std::string> hyp_names;
  std::vector<std::string> ref_names;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // one per matched op
};

MatchedSpeakers index_matched(const WordAlignment& alignment, std::span<const std::string> hyp_speakers,
                              std::span<const std::string> ref_speakers) {
  MatchedSpeakers out;
  std::unordered_map<std::string, std::size_t> hyp_index, ref_index;
  const auto intern = [](std::unordered_map<std::string, std::size_t>& index,
                         std::vector<std::string>& names, const std::string& name) {
    auto [it, inserted] = index.emplace(name, names.size());
    if (inserted) names.push_back(name);
    return it->second;
  };
  for (const AlignOp& op : alignment.ops) {
    if (!op.matched()) continue;
    out.pairs.emplace_back(intern(hyp_index, out.hyp_names, hyp_speakers[op.hyp]),
                           intern(ref_index, out.ref_names, ref_speakers[op.ref]));
  }
  return out;
}

MwdeResult finish(const WordAlignment& alignment, std::span<const std::string> hyp_speakers,
                  std::span<const std::string> ref_speakers, std::map<std::string, std::string> pairs) {
  MwdeResult result;
  result.mapping = SpeakerMapping(std::move(pairs));
  result.counts = wder_counts(alignment, hyp_speakers, ref_speakers, result.mapping);
  result.rate = wder(result.counts);
  return result;
}

}  // namespace

DiarizationCounts wder_counts(const WordAlignment& alignment, std::span<const std::string> hyp_speakers,
                              std::span<const std::string> ref_speakers, const SpeakerMapping& mapping) {
  check_parallel(alignment, hyp_speakers, ref_speakers);
  DiarizationCounts counts;
  for (const AlignOp& op : alignment.ops) {
    if (!op.matched()) continue;
    const std::string* mapped = mapping.find(hyp_speakers[op.hyp]);
    const bool wrong = mapped == nullptr || *mapped != ref_speakers[op.ref];
    if (op.kind == OpKind::kCorrect) {
      ++counts.correct;
      counts.wrong_correct += wrong;
    } else {
      ++counts.substitutions;
      counts.wrong_substituted += wrong;
    }
  }
  return counts;
}

double wder(const DiarizationCounts& counts) {
  if (counts.matched() == 0) {
    throw UndefinedRateError("WDER is undefined without correct or substituted words");
  }
  return static_cast<double>(counts.wrong()) / static_cast<double>(counts.matched());
}

double wder(const WordAlignment& alignment, std::span<const std::string> hyp_speakers,
            std::span<const std::string> ref_speakers, const SpeakerMapping& mapping) {
  return wder(wder_counts(alignment, hyp_speakers, ref_speakers, mapping));
}

std::vector<std::size_t> max_weight_assignment(const std::vector<std::vector<std::int64_t>>& weights) {
  const std::size_t n = weights.size();
  for (const auto& row : weights) {
    if (row.size() != n) throw ContractError("assignment matrix must be square");
  }
  if (n == 0) return {};
  // Potentials-based Hungarian method minimizing the negated weights.
  // Rows and columns are 1-based below; index 0 is the virtual start column.
  constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max() / 4;
  std::vector<std::int64_t> u(n + 1, 0), v(n + 1, 0);
  std::vector<std::size_t> row_of(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    row_of[0] = i;
    std::size_t col = 0;
    std::vector<std::int64_t> min_slack(n + 1, kInf);
    std::vector<bool> used(n + 1, false);
    do {
      used[col] = true;
      const std::size_t row = row_of[col];
      std::int64_t delta = kInf;
      std::size_t next = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const std::int64_t slack = -weights[row - 1][j - 1] - u[row] - v[j];
        if (slack < min_slack[j]) {
          min_slack[j] = slack;
          way[j] = col;
        }
        if (min_slack[j] < delta) {
          delta = min_slack[j];
          next = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[row_of[j]] += delta;
          v[j] -= delta;
        } else {
          min_slack[j] -= delta;
        }
      }
      col = next;
    } while (row_of[col] != 0);
    do {
      const std::size_t prev = way[col];
      row_of[col] = row_of[prev];
      col = prev;
    } while (col != 0);
  }
  std::vector<std::size_t> assignment(n);
  for (std::size_t j = 1; j <= n; ++j) assignment[row_of[j] - 1] = j - 1;
  return assignment;
}

MwdeResult mwde(const WordAlignment& alignment, std::span<const std::string> hyp_speakers,
                std::span<const std::string> ref_speakers) {
  check_parallel(alignment, hyp_speakers, ref_speakers);
  const MatchedSpeakers matched = index_matched(alignment, hyp_speakers, ref_speakers);
  const std::size_t n = std::max(matched.hyp_names.size(), matched.ref_names.size());
  std::vector<std::vector<std::int64_t>> weights(n, std::vector<std::int64_t>(n, 0));
  for (const auto& [h, r] : matched.pairs) ++weights[h][r];

  const std::vector<std::size_t> assignment = max_weight_assignment(weights);
  std::map<std::string, std::string> pairs;
  for (std::size_t h = 0; h < matched.hyp_names.size(); ++h) {
    const std::size_t r = assignment[h];
    if (r < matched.ref_names.size() && weights[h][r] > 0) {
      pairs.emplace(matched.hyp_names[h], matched.ref_names[r]);
    }
  }
  return finish(alignment, hyp_speakers, ref_speakers, std::move(pairs));
}

MwdeResult mwde_bruteforce(const WordAlignment& alignment, std::span<const std::string> hyp_speakers,
                           std::span<const std::string> ref_speakers) {
  check_parallel(alignment, hyp_speakers, ref_speakers);
  const std::set<std::string> hyp_set(hyp_speakers.begin(), hyp_speakers.end());
  const std::set<std::string> ref_set(ref_speakers.begin(), ref_speakers.end());
  if (hyp_set.size() > kBruteForceMaxSpeakers || ref_set.size() > kBruteForceMaxSpeakers) {
    throw RefusalError("brute-force MWDE is limited to " + std::to_string(kBruteForceMaxSpeakers) +
                       " speakers per side");
  }
  const std::vector<std::string> hyp_names(hyp_set.begin(), hyp_set.end());
  const std::vector<std::string> ref_names(ref_set.begin(), ref_set.end());

  // Per matched word: dense (hyp, ref) speaker indices.
  std::vector<std::pair<std::size_t, std::size_t>> words;
  for (const AlignOp& op : alignment.ops) {
    if (!op.matched()) continue;
    const auto h = std::lower_bound(hyp_names.begin(), hyp_names.end(), hyp_speakers[op.hyp]);
    const auto r = std::lower_bound(ref_names.begin(), ref_names.end(), ref_speakers[op.ref]);
    words.emplace_back(h - hyp_names.begin(), r - ref_names.begin());
  }

  constexpr std::size_t kUnmapped = static_cast<std::size_t>(-1);
  std::vector<std::size_t> target(hyp_names.size(), kUnmapped);
  std::vector<bool> taken(ref_names.size(), false);
  std::vector<std::size_t> best_target = target;
  std::size_t best_right = 0;
  bool have_best = false;

  // Depth-first over hyp speakers: each is left unmapped or takes a free ref.
  const auto search = [&](auto&& self, std::size_t h) -> void {
    if (h == hyp_names.size()) {
      std::size_t right = 0;
      for (const auto& [wh, wr] : words) right += target[wh] == wr;
      if (!have_best || right > best_right) {
        best_right = right;
        best_target = target;
        have_best = true;
      }
      return;
    }
    target[h] = kUnmapped;
    self(self, h + 1);
    for (std::size_t r = 0; r < ref_names.size(); ++r) {
      if (taken[r]) continue;
      taken[r] = true;
      target[h] = r;
      self(self, h + 1);
      taken[r] = false;
    }
    target[h] = kUnmapped;
  };
  search(search, 0);

  std::vector<std::vector<std::size_t>> shared(hyp_names.size(), std::vector<std::size_t>(ref_names.size()));
  for (const auto& [wh, wr] : words) ++shared[wh][wr];
  std::map<std::string, std::string> pairs;
  for (std::size_t h = 0; h < hyp_names.size(); ++h) {
    if (best_target[h] != kUnmapped && shared[h][best_target[h]] > 0) {
      pairs.emplace(hyp_names[h], ref_names[best_target[h]]);
    }
  }
  return finish(alignment, hyp_speakers, ref_speakers, std::move(pairs));
}

}  // namespace longconv::metrics
