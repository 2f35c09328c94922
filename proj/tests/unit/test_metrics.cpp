// Copyright 2026 The longconv Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "longconv/error.hpp"
#include "longconv/metrics.hpp"
#include "longconv/score.hpp"
#include "longconv/text.hpp"
#include "support.hpp"

using namespace longconv;
using namespace longconv::metrics;
using Strings = std::vector<std::string>;

namespace {

// Checks the structural invariants of an alignment against its inputs.
void check_alignment(const WordAlignment& a, const Strings& hyp, const Strings& ref) {
  std::vector<int> hyp_seen(hyp.size(), 0);
  std::vector<int> ref_seen(ref.size(), 0);
  AlignCounts tally;
  std::size_t last_hyp = 0;
  std::size_t last_ref = 0;
  for (const AlignOp& op : a.ops) {
    switch (op.kind) {
      case OpKind::kCorrect:
        ++tally.correct;
        REQUIRE(hyp[op.hyp] == ref[op.ref]);
        break;
      case OpKind::kSubstitute:
        ++tally.substitutions;
        REQUIRE(hyp[op.hyp] != ref[op.ref]);
        break;
      case OpKind::kInsert:
        ++tally.insertions;
        REQUIRE(op.ref == AlignOp::kNone);
        break;
      case OpKind::kDelete:
        ++tally.deletions;
        REQUIRE(op.hyp == AlignOp::kNone);
        break;
    }
    if (op.hyp != AlignOp::kNone) {
      REQUIRE(op.hyp >= last_hyp);
      last_hyp = op.hyp;
      ++hyp_seen.at(op.hyp);
    }
    if (op.ref != AlignOp::kNone) {
      REQUIRE(op.ref >= last_ref);
      last_ref = op.ref;
      ++ref_seen.at(op.ref);
    }
  }
  REQUIRE(std::all_of(hyp_seen.begin(), hyp_seen.end(), [](int c) { return c == 1; }));
  REQUIRE(std::all_of(ref_seen.begin(), ref_seen.end(), [](int c) { return c == 1; }));
  REQUIRE(tally == a.counts);
  REQUIRE(a.counts.ref_length() == ref.size());
  REQUIRE(a.counts.hyp_length() == hyp.size());
}

}  // namespace

TEST_CASE("align_words basic cases") {
  const Strings ab{"a", "b"};
  const auto same = align_words(ab, ab);
  CHECK(same.counts == AlignCounts{2, 0, 0, 0});

  const auto cased = align_words(Strings{"Hello"}, Strings{"hello"});
  CHECK(cased.counts.substitutions == 1);
  const auto folded = align_words(Strings{"Hello"}, Strings{"hello"}, CaseMode::kInsensitive);
  CHECK(folded.counts.correct == 1);

  const Strings hyp{"a", "x", "b"};
  const Strings ref{"a", "b", "c"};
  const auto a = align_words(hyp, ref);
  CHECK(a.counts.errors() == 2);
  CHECK(testing::edit_distance(hyp, ref) == 2);
  check_alignment(a, hyp, ref);

  const auto empty = align_words(Strings{}, Strings{});
  CHECK(empty.ops.empty());
}

TEST_CASE("align_words tie-break prefers correct, then substitute, then delete") {
  // "a" vs "b a": match the a, delete the b.
  const auto a = align_words(Strings{"a"}, Strings{"b", "a"});
  REQUIRE(a.ops.size() == 2);
  CHECK(a.ops[0].kind == OpKind::kDelete);
  CHECK(a.ops[1].kind == OpKind::kCorrect);
  // "x" vs "y z": one substitution plus one deletion.
  const auto b = align_words(Strings{"x"}, Strings{"y", "z"});
  CHECK(b.counts.substitutions == 1);
  CHECK(b.counts.deletions == 1);
  // Deterministic: same call twice gives the same ops.
  CHECK(align_words(Strings{"x"}, Strings{"y", "z"}).ops == b.ops);
}

TEST_CASE("align_words matches an independent DP on fuzzed pairs") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 2000; ++trial) {
    const Strings hyp = testing::random_words(rng, 20, 4);
    const Strings ref = testing::random_words(rng, 20, 4);
    const auto a = align_words(hyp, ref);
    INFO("trial " << trial);
    REQUIRE(a.counts.errors() == testing::edit_distance(hyp, ref));
    check_alignment(a, hyp, ref);
  }
}

TEST_CASE("wer arithmetic") {
  const Strings ref{"a", "b", "c", "d", "e"};
  CHECK(wer(align_words(ref, ref)) == 0.0);
  CHECK(wer(align_words(Strings{}, Strings{"a", "b", "c", "d"})) == 1.0);
  // 2 substitutions and 1 insertion over 5 reference words.
  const Strings hyp{"a", "X", "c", "Y", "e", "Z"};
  const auto al = align_words(hyp, ref);
  CHECK(al.counts.substitutions == 2);
  CHECK(al.counts.insertions == 1);
  CHECK(wer(al) == Catch::Approx(0.6).margin(1e-15));
  CHECK(wer(align_words(Strings{"a", "b", "c"}, Strings{"a"})) == 2.0);
  CHECK_THROWS_AS(wer(align_words(Strings{"a"}, Strings{})), UndefinedRateError);
}

TEST_CASE("concatenate offsets local indices") {
  const WordAlignment p = align_words(Strings{"a"}, Strings{"a", "b"});
  const WordAlignment q = align_words(Strings{"c", "d"}, Strings{"c"});
  const std::vector<WordAlignment> parts{p, q};
  const WordAlignment all = concatenate(parts);
  check_alignment(all, Strings{"a", "c", "d"}, Strings{"a", "b", "c"});
  CHECK(all.counts.errors() == 2);
}

TEST_CASE("speaker mapping is injective") {
  CHECK_THROWS_AS(SpeakerMapping(std::map<std::string, std::string>{{"h1", "r"}, {"h2", "r"}}), ValidationError);
  const SpeakerMapping m(std::map<std::string, std::string>{{"h1", "r1"}});
  REQUIRE(m.find("h1") != nullptr);
  CHECK(*m.find("h1") == "r1");
  CHECK(m.find("h2") == nullptr);
  const Strings hs{"A", "B", "C"};
  const Strings rs{"B", "A", "D"};
  CHECK(SpeakerMapping::identity(hs, rs).size() == 2);
}

TEST_CASE("wder fixtures") {
  const Strings words(10, "w");
  const auto al = align_words(words, words);
  const Strings ref_spk{"A", "A", "A", "A", "A", "B", "B", "B", "B", "B"};
  Strings hyp_spk = ref_spk;
  CHECK(wder(al, hyp_spk, ref_spk, SpeakerMapping::identity(hyp_spk, ref_spk)) == 0.0);
  CHECK(wder(al, hyp_spk, ref_spk, SpeakerMapping{}) == 1.0);
  hyp_spk[0] = "B";
  hyp_spk[1] = "B";
  hyp_spk[9] = "A";
  CHECK(wder(al, hyp_spk, ref_spk, SpeakerMapping::identity(hyp_spk, ref_spk)) == Catch::Approx(0.3).margin(1e-15));

  const auto none = align_words(Strings{}, Strings{"a"});
  CHECK_THROWS_AS(wder(none, Strings{}, Strings{"A"}, SpeakerMapping{}), UndefinedRateError);
}

TEST_CASE("wder ignores insertions and deletions and counts substituted words") {
  const Strings hyp{"a", "X", "c", "extra"};
  const Strings ref{"a", "b", "c"};
  const auto al = align_words(hyp, ref);
  const Strings hs{"A", "B", "A", "B"};
  const Strings rs{"A", "A", "A"};
  const auto counts = wder_counts(al, hs, rs, SpeakerMapping(std::map<std::string, std::string>{{"A", "A"}}));
  CHECK(counts.correct == 2);
  CHECK(counts.substitutions == 1);
  CHECK(counts.wrong_correct == 0);
  CHECK(counts.wrong_substituted == 1);
}

TEST_CASE("mwde fixtures") {
  const Strings words(10, "w");
  const auto al = align_words(words, words);
  SECTION("relabeled speakers") {
    const Strings rs{"A", "A", "B", "B", "C", "C", "A", "B", "C", "A"};
    Strings hs;
    const std::map<std::string, std::string> perm{{"A", "x"}, {"B", "y"}, {"C", "z"}};
    for (const auto& s : rs) hs.push_back(perm.at(s));
    const auto r = mwde(al, hs, rs);
    CHECK(r.rate == 0.0);
    CHECK(*r.mapping.find("y") == "B");
    CHECK(wder(al, hs, rs, SpeakerMapping::identity(hs, rs)) == 1.0);
  }
  SECTION("one hypothesis speaker against a 7/3 split") {
    const Strings rs{"A", "A", "A", "A", "A", "A", "A", "B", "B", "B"};
    const Strings hs(10, "h");
    const auto r = mwde(al, hs, rs);
    CHECK(r.rate == Catch::Approx(0.3).margin(1e-15));
    CHECK(*r.mapping.find("h") == "A");
    CHECK(mwde_bruteforce(al, hs, rs).rate == r.rate);
  }
  SECTION("bruteforce refuses large speaker sets") {
    Strings many;
    for (int i = 0; i < 10; ++i) many.push_back("s" + std::to_string(i));
    const auto big = align_words(many, many);
    CHECK_THROWS_AS(mwde_bruteforce(big, many, many), RefusalError);
    CHECK(mwde(big, many, many).rate == 0.0);
  }
}

TEST_CASE("mwde equals the enumeration oracle") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    const auto inst = testing::random_instance(rng, 5, 5, 25);
    if (inst.alignment.counts.matched() == 0) continue;
    const auto r = mwde(inst.alignment, inst.hyp_speakers, inst.ref_speakers);
    const auto b = mwde_bruteforce(inst.alignment, inst.hyp_speakers, inst.ref_speakers);
    const auto o = testing::oracle_min_wder(inst);
    INFO("trial " << trial);
    REQUIRE(r.counts.wrong() == o.num);
    REQUIRE(r.counts.matched() == o.den);
    REQUIRE(b.counts.wrong() == o.num);
    REQUIRE(r.rate == b.rate);
    // The returned mapping achieves the returned rate.
    REQUIRE(wder(inst.alignment, inst.hyp_speakers, inst.ref_speakers, r.mapping) == r.rate);
  }
}

TEST_CASE("max_weight_assignment against permutation enumeration") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::int64_t> w(0, 20);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + trial % 6;
    std::vector<std::vector<std::int64_t>> m(n, std::vector<std::int64_t>(n));
    for (auto& row : m)
      for (auto& v : row) v = w(rng);
    const auto assign = max_weight_assignment(m);
    std::set<std::size_t> cols(assign.begin(), assign.end());
    REQUIRE(cols.size() == n);
    std::int64_t got = 0;
    for (std::size_t i = 0; i < n; ++i) got += m[i][assign[i]];
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::int64_t best = 0;
    do {
      std::int64_t s = 0;
      for (std::size_t i = 0; i < n; ++i) s += m[i][perm[i]];
      best = std::max(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    REQUIRE(got == best);
  }
}

TEST_CASE("conversation_wer applies the unterminated rule") {
  using testing::UttSpec;
  std::vector<UttSpec> ref_specs;
  std::vector<UttSpec> hyp_specs;
  for (int i = 0; i < 10; ++i) {
    const std::string text = "one two three four five six seven eight nine ten";
    ref_specs.push_back({"A", text, double(i), double(i + 1)});
    hyp_specs.push_back({"A", text, double(i), double(i + 1), i != 3});
  }
  const auto ref = testing::make_conversation("c", ref_specs);
  const auto hyp = testing::make_conversation("c", hyp_specs);
  CHECK(conversation_wer(ref, ref, TaskMode::kAligned) == 0.0);
  CHECK(conversation_wer(hyp, ref, TaskMode::kAligned) == 0.1);
  const auto totals = conversation_wer_totals(hyp, ref, TaskMode::kAligned);
  CHECK(totals.unterminated == 1);
  CHECK(totals.unterminated_ref_words == 10);

  auto short_hyp = hyp_specs;
  short_hyp.pop_back();
  CHECK_THROWS_AS(conversation_wer(testing::make_conversation("c", short_hyp), ref, TaskMode::kAligned),
                  ContractError);
}

TEST_CASE("unaligned conversation_wer equals flatten-then-wer") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<testing::UttSpec> hs;
    std::vector<testing::UttSpec> rs;
    for (int i = 0; i < 4; ++i) {
      auto join = [](const Strings& w) {
        std::string s;
        for (const auto& x : w) s += x + " ";
        return s;
      };
      hs.push_back({"A", join(testing::random_words(rng, 6, 5)), double(i), double(i + 1)});
      rs.push_back({"B", join(testing::random_words(rng, 6, 5)) + "end", double(i), double(i + 1)});
    }
    const auto hyp = testing::make_conversation("c", hs);
    const auto ref = testing::make_conversation("c", rs);
    const auto hw = flatten(hyp).words;
    const auto rw = flatten(ref).words;
    REQUIRE(conversation_wer(hyp, ref, TaskMode::kUnaligned) ==
            double(testing::edit_distance(hw, rw)) / double(rw.size()));
  }
}

TEST_CASE("flatten drops control tokens") {
  const auto c = testing::make_conversation("c", {{"A", "hi [Ira] [US]", 0, 1}, {"B", "yes", 1, 2}});
  const auto f = flatten(c);
  CHECK(f.words == Strings{"hi", "yes"});
  CHECK(f.speakers == Strings{"A", "B"});
}

TEST_CASE("score_conversation reports identity and optimal rates") {
  const auto ref = testing::make_conversation("c", {{"A", "a b c", 0, 1}, {"B", "d e", 1, 2}});
  const auto hyp = testing::make_conversation("c", {{"x", "a b c", 0, 1}, {"y", "d e", 1, 2}});
  ScoreOptions opts;
  const auto s = score_conversation(hyp, ref, opts);
  REQUIRE(s.wer);
  CHECK(*s.wer == 0.0);
  REQUIRE(s.mwde_rate);
  CHECK(*s.mwde_rate == 0.0);
  REQUIRE(s.wder_identity);
  CHECK(*s.wder_identity == 1.0);

  const auto corpus = score_corpus({hyp}, {ref}, opts);
  const auto json = report_json(corpus, opts);
  CHECK(json.at("schema_version") == kReportSchemaVersion);
}

TEST_CASE("score_corpus pairs by id") {
  const auto a = testing::make_conversation("a", {{"A", "x", 0, 1}});
  const auto b = testing::make_conversation("b", {{"A", "y", 0, 1}});
  ScoreOptions opts;
  opts.mode = TaskMode::kUnaligned;
  const auto s = score_corpus({b}, {a}, opts);
  CHECK(s.missing_hypotheses == Strings{"a"});
  CHECK(s.extra_hypotheses == Strings{"b"});
  REQUIRE(s.conversations.size() == 1);
  CHECK(*s.conversations[0].wer == 1.0);
  CHECK_FALSE(s.conversations[0].mwde_rate);
}
