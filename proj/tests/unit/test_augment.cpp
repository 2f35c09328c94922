// Copyright 2026 The longconv Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include <nlohmann/json.hpp>
#include <random>
#include <set>
#include <sstream>

#include "longconv/augment.hpp"
#include "longconv/error.hpp"
#include "support.hpp"

using namespace longconv;
using namespace longconv::augment;
using Strings = std::vector<std::string>;

namespace {

std::string words_text(std::size_t n, const std::string& prefix = "w") {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s += prefix + std::to_string(i) + " ";
  return s;
}

// Kept count under round-half-up, checked by the defining inequality
// (2k - 1) d <= 2 c n < (2k + 1) d instead of by computing it.
bool is_rounded_share(std::size_t k, std::int64_t c, std::int64_t d, std::size_t n) {
  const auto kk = static_cast<std::int64_t>(k);
  const auto nn = static_cast<std::int64_t>(n);
  return (2 * kk - 1) * d <= 2 * c * nn && 2 * c * nn < (2 * kk + 1) * d;
}

Conversation long_episode() {
  std::vector<testing::UttSpec> specs;
  for (int i = 0; i < 12; ++i) {
    specs.push_back({i % 2 ? "B" : "A", words_text(5 + i % 4, "u" + std::to_string(i) + "w"), 5.0 * i,
                     5.0 * i + 4.5});
  }
  return testing::make_conversation("ep", specs);
}

}  // namespace

TEST_CASE("to_micros rounds to the nearest microsecond") {
  CHECK(to_micros(1.0) == 1000000);
  CHECK(to_micros(0.1) == 100000);
  CHECK(to_micros(2.9999996) == 3000000);
}

TEST_CASE("proportional_count rounds half up") {
  CHECK(proportional_count(4, 10, 10) == 4);
  CHECK(proportional_count(5, 10, 1) == 1);   // 0.5 -> 1
  CHECK(proportional_count(1, 4, 2) == 1);    // 0.5 -> 1
  CHECK(proportional_count(1, 3, 1) == 0);    // 0.33 -> 0
  CHECK(proportional_count(10, 10, 7) == 7);
  CHECK_THROWS_AS(proportional_count(1, 0, 1), ContractError);
}

TEST_CASE("shift_aug on hand fixtures") {
  // 10 words over [10, 20); the span [0, 14) covers 40% at its right edge.
  const auto c = testing::make_conversation(
      "c", {{"A", "zero one two", 0, 3}, {"B", words_text(10), 10, 20}, {"A", "far away", 40, 45}});
  const TrainingExample ex = shift_aug(c, TimeSpan(0, 14));
  CHECK(ex.target == Strings{"zero", "one", "two", "[A]", "[US]", "w0", "w1", "w2", "w3", "[B]", "[US]"});
  REQUIRE(ex.provenance.size() == 2);
  CHECK(ex.provenance[1] == Provenance{1, 0, 4});

  // Left edge keeps the tail.
  const TrainingExample left = shift_aug(c, TimeSpan(16, 30));
  CHECK(left.target == Strings{"w6", "w7", "w8", "w9", "[B]", "[US]"});

  // An utterance wider than the span keeps the words under it.
  const TrainingExample inner = shift_aug(c, TimeSpan(12, 15));
  CHECK(inner.target == Strings{"w2", "w3", "w4", "[B]", "[US]"});

  // Nothing intersects.
  CHECK(shift_aug(c, TimeSpan(25, 35)).target.empty());
  // Touching at a boundary is not an intersection.
  CHECK(shift_aug(c, TimeSpan(20, 40)).target.empty());
}

TEST_CASE("shift_aug keeps round(f n) words on random pairs") {
  std::mt19937_64 rng(41);
  std::uniform_int_distribution<int> ms(0, 60000);
  std::uniform_int_distribution<std::size_t> nwords(1, 30);
  for (int trial = 0; trial < 3000; ++trial) {
    int a = ms(rng);
    int b = ms(rng);
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    int lo = ms(rng);
    int hi = ms(rng);
    if (lo == hi) continue;
    if (lo > hi) std::swap(lo, hi);
    const std::size_t n = nwords(rng);
    const auto c = testing::make_conversation("c", {{"A", words_text(n), a / 1000.0, b / 1000.0}});
    const auto [first, last] = shift_kept_range(c.utterances()[0], TimeSpan(lo / 1000.0, hi / 1000.0));
    const std::int64_t covered = std::max(0, std::min(b, hi) - std::max(a, lo));
    INFO(a << " " << b << " / " << lo << " " << hi << " n=" << n);
    if (a >= lo && b <= hi) {
      CHECK(last - first == n);
    } else if (covered == 0) {
      CHECK(first == last);
    } else {
      CHECK(is_rounded_share(last - first, covered, b - a, n));
      if (a < lo && b <= hi) CHECK(last == n);
      if (a >= lo && b > hi) CHECK(first == 0);
    }
  }
}

TEST_CASE("sample_spans bounds, determinism and uniformity") {
  const Conversation c = long_episode();
  CHECK(sample_spans(c, 50, 7) == sample_spans(c, 50, 7));
  CHECK(sample_spans(c, 50, 7) != sample_spans(c, 50, 8));

  const auto spans = sample_spans(c, 10000, 2024);
  std::vector<int> bins(10, 0);
  for (const TimeSpan& s : spans) {
    REQUIRE(s.duration() >= kMinSpanSeconds - 1e-6);
    REQUIRE(s.duration() <= kMaxSpanSeconds + 1e-6);
    REQUIRE(s.start() >= 0.0);
    REQUIRE(s.end() <= c.duration() + 1e-9);
    const auto bin = std::min<std::size_t>(9, static_cast<std::size_t>((s.duration() - 10.0) / 2.0));
    ++bins[bin];
  }
  double chi2 = 0.0;
  for (int b : bins) chi2 += (b - 1000.0) * (b - 1000.0) / 1000.0;
  CHECK(chi2 < 21.666);  // 9 degrees of freedom at the 0.01 level

  const auto short_c = testing::make_conversation("s", {{"A", "x", 0, 30}});
  CHECK_THROWS_AS(sample_spans(short_c, 1, 0), RefusalError);
}

TEST_CASE("alignment track parsing") {
  std::istringstream in("# utt word start end\n0 0 0.0 0.5\n0 1 0.5 1.0\n2 0 3 4\n");
  const auto track = parse_alignment_track(in, "t");
  CHECK(track.at(0).size() == 2);
  CHECK(track.at(2)[0] == TimeSpan(3, 4));
  std::istringstream skip("0 1 0 1\n");
  CHECK_THROWS_AS(parse_alignment_track(skip, "s"), ParseError);
  std::istringstream extra("0 0 0 1 x\n");
  CHECK_THROWS_AS(parse_alignment_track(extra, "e"), ParseError);
}

TEST_CASE("validate_track checks coverage") {
  const auto c = testing::make_conversation("c", {{"A", "a b", 0, 2}});
  CHECK_NOTHROW(validate_track(c, {{0, {TimeSpan(0, 1), TimeSpan(1, 2)}}}));
  CHECK_THROWS_AS(validate_track(c, {{0, {TimeSpan(0, 1)}}}), DataError);
  CHECK_THROWS_AS(validate_track(c, {{0, {TimeSpan(0, 1), TimeSpan(1, 3)}}}), DataError);
  CHECK_THROWS_AS(validate_track(c, {{0, {TimeSpan(1, 2), TimeSpan(0, 1)}}}), DataError);
  CHECK_THROWS_AS(validate_track(c, {{5, {}}}), DataError);
}

TEST_CASE("align_aug keeps fully contained words") {
  const auto c = testing::make_conversation("c", {{"A", "a b c d", 0, 4}, {"B", "e f", 5, 7}});
  const WordAlignmentTrack track{{0, {TimeSpan(0, 1), TimeSpan(1, 2), TimeSpan(2, 3), TimeSpan(3, 4)}},
                                 {1, {TimeSpan(5, 6), TimeSpan(6, 7)}}};
  SECTION("straddling words are dropped") {
    const auto ex = align_aug(c, TimeSpan(1.5, 6.5), track);
    CHECK(ex.target == Strings{"c", "d", "[A]", "[US]", "e", "[B]", "[US]"});
  }
  SECTION("everything inside matches shift_aug") {
    CHECK(align_aug(c, TimeSpan(0, 10), track) == shift_aug(c, TimeSpan(0, 10)));
  }
  SECTION("missing alignment names the utterance") {
    const WordAlignmentTrack partial{{0, track.at(0)}};
    CHECK_THROWS_WITH(align_aug(c, TimeSpan(0, 10), partial), Catch::Matchers::ContainsSubstring("utterance 1"));
    // Not needed when the utterance is outside the span.
    CHECK_NOTHROW(align_aug(c, TimeSpan(0, 4.5), partial));
  }
}

TEST_CASE("align_aug matches a per-word containment oracle") {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> gap(0, 400);
  std::uniform_int_distribution<int> len(1, 800);
  std::uniform_int_distribution<std::size_t> nwords(1, 12);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<testing::UttSpec> specs;
    WordAlignmentTrack track;
    int t = 0;
    for (std::size_t u = 0; u < 6; ++u) {
      const std::size_t n = nwords(rng);
      const int s = t + gap(rng);
      int w = s;
      std::vector<TimeSpan> words;
      for (std::size_t k = 0; k < n; ++k) {
        const int ws = w + gap(rng) / 4;
        const int we = ws + len(rng);
        words.emplace_back(ws / 1000.0, we / 1000.0);
        w = we;
      }
      specs.push_back({u % 2 ? "B" : "A", words_text(n), s / 1000.0, w / 1000.0});
      track[u] = words;
      t = w;
    }
    const auto c = testing::make_conversation("c", specs);
    std::uniform_int_distribution<int> pos(0, t);
    int lo = pos(rng);
    int hi = pos(rng);
    if (lo > hi) std::swap(lo, hi);
    const TimeSpan span(lo / 1000.0, hi / 1000.0);
    const auto ex = align_aug(c, span, track);

    std::set<std::pair<std::size_t, std::size_t>> got;
    for (const auto& p : ex.provenance) {
      for (std::size_t k = p.first_word; k < p.last_word; ++k) got.emplace(p.utterance, k);
    }
    std::set<std::pair<std::size_t, std::size_t>> expect;
    for (const auto& [u, words] : track) {
      for (std::size_t k = 0; k < words.size(); ++k) {
        if (words[k].start() >= span.start() && words[k].end() <= span.end()) expect.emplace(u, k);
      }
    }
    INFO("trial " << trial);
    CHECK(got == expect);
  }
}

TEST_CASE("manifest lines are JSON with provenance") {
  const auto c = testing::make_conversation("ep", {{"A", "a b c", 0, 3}});
  const auto ex = shift_aug(c, TimeSpan(1, 3));
  std::ostringstream out;
  write_manifest_line(out, ex, "ep.wav");
  const auto j = nlohmann::json::parse(out.str());
  CHECK(j.at("conversation_id") == "ep");
  CHECK(j.at("audio") == "ep.wav");
  CHECK(j.at("start") == 1.0);
  CHECK(j.at("target") == Strings{"b", "c", "[A]", "[US]"});
  CHECK(j.at("provenance")[0].at("words") == std::vector<int>{1, 3});
  CHECK(out.str().back() == '\n');
}

TEST_CASE("examples are deterministic and provenance indexes real words") {
  const Conversation c = long_episode();
  const auto track = track_from_word_spans(c);
  CHECK(track.empty());  // the fixture has no word timing
  for (const TimeSpan& span : sample_spans(c, 200, 3)) {
    const auto a = shift_aug(c, span);
    CHECK(a == shift_aug(c, span));
    std::size_t words = 0;
    for (const auto& p : a.provenance) {
      REQUIRE(p.utterance < c.utterances().size());
      REQUIRE(p.first_word < p.last_word);
      REQUIRE(p.last_word <= c.utterances()[p.utterance].words.size());
      words += p.last_word - p.first_word;
    }
    std::size_t plain = 0;
    for (const auto& tok : a.target) plain += tok.front() == '[' ? 0 : 1;
    CHECK(plain == words);
  }
}
