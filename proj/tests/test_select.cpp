#include <gtest/gtest.h>

#include <random>

#include "autorank/autorank.hpp"
#include "autorank/select.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace autorank;
using autorank::select::select_for_humeval;

namespace {

struct Fixture {
  RankingResult ranking;
  std::vector<SystemMeta> meta;
  std::vector<oracle::Candidate> candidates;
};

// Systems ranked 1..N in order, constrained flags as given.
Fixture make(const std::vector<bool>& constrained, const std::vector<double>& ranks = {}) {
  const std::size_t n = constrained.size();
  std::vector<SystemRanking> rows;
  std::vector<SystemMeta> meta;
  std::vector<oracle::Candidate> cands;
  for (std::size_t i = 0; i < n; ++i) {
    char id[24];
    std::snprintf(id, sizeof id, "s%02zu", i);
    const double rank = ranks.empty() ? static_cast<double>(i + 1) : ranks[i];
    SystemRanking r;
    r.system_id = id;
    r.system_scores = {{"m", -rank}};
    r.robust_scores = {{"m", -rank}};
    r.mean_robust = -rank;
    r.autorank = rank;
    rows.push_back(r);
    meta.emplace_back(id, constrained[i], std::nullopt, std::nullopt, false);
    cands.push_back({id, rank, constrained[i]});
  }
  return {RankingResult("lp", {"m"}, 1e-6, rows, {{"m", RobustStats{0, -1, 1, 2}}}), meta, cands};
}

std::set<std::string> ids(const SelectionResult& s) {
  std::set<std::string> out;
  for (const auto& x : s.selected()) out.insert(x.system_id);
  return out;
}

}  // namespace

TEST(SelectForHumeval, TwentySystemsTenConstrained) {
  std::vector<bool> c(20);
  for (std::size_t i = 0; i < 20; ++i) c[i] = i % 2 == 1;
  const auto f = make(c);
  const auto s = select_for_humeval(f.ranking, f.meta);
  EXPECT_EQ(s.selected().size(), 18u);
  EXPECT_EQ(ids(s), oracle::select(f.candidates, 8, 18));
  int top = 0;
  for (const auto& x : s.selected()) top += x.reason == SelectionReason::TopConstrained;
  EXPECT_EQ(top, 8);
}

TEST(SelectForHumeval, FewerSystemsThanTotalSelectsAll) {
  const auto f = make({true, false, true, false, false});
  const auto s = select_for_humeval(f.ranking, f.meta);
  EXPECT_EQ(s.selected().size(), 5u);
  EXPECT_EQ(s.n_candidates(), 5u);
}

TEST(SelectForHumeval, NoConstrainedSystemsIsPureTopTotal) {
  const auto f = make(std::vector<bool>(25, false));
  const auto s = select_for_humeval(f.ranking, f.meta);
  ASSERT_EQ(s.selected().size(), 18u);
  for (std::size_t i = 0; i < 18; ++i) {
    EXPECT_EQ(s.selected()[i].system_id, f.candidates[i].id);
    EXPECT_EQ(s.selected()[i].reason, SelectionReason::FillTop);
  }
}

TEST(SelectForHumeval, LowConstrainedSystemsDisplaceFillers) {
  // Constrained systems sit at the bottom; all eight still get in.
  std::vector<bool> c(30, false);
  for (std::size_t i = 22; i < 30; ++i) c[i] = true;
  const auto f = make(c);
  const auto s = select_for_humeval(f.ranking, f.meta);
  for (std::size_t i = 22; i < 30; ++i) EXPECT_TRUE(s.contains(f.candidates[i].id));
  for (std::size_t i = 0; i < 10; ++i) EXPECT_TRUE(s.contains(f.candidates[i].id));
  EXPECT_FALSE(s.contains(f.candidates[10].id));
}

TEST(SelectForHumeval, OutputOrderedByAutoRank) {
  std::mt19937_64 rng(5);
  std::vector<bool> c(40);
  for (auto&& x : c) x = rng() % 3 == 0;
  const auto f = make(c);
  const auto s = select_for_humeval(f.ranking, f.meta);
  for (std::size_t i = 1; i < s.selected().size(); ++i) {
    EXPECT_LT(f.ranking.find(s.selected()[i - 1].system_id)->autorank,
              f.ranking.find(s.selected()[i].system_id)->autorank);
  }
}

TEST(SelectForHumeval, TiesBreakBySystemId) {
  // s01 and s02 tie; with total 2 and no constrained systems s01 wins.
  const auto f = make({false, false, false}, {1.0, 3.0, 3.0});
  const auto s = select_for_humeval(f.ranking, f.meta, 0, 2);
  EXPECT_EQ(ids(s), (std::set<std::string>{"s00", "s01"}));
}

TEST(SelectForHumeval, MatchesOracleAndIsMonotoneInTotal) {
  std::mt19937_64 rng(17);
  for (int t = 0; t < 300; ++t) {
    const std::size_t n = 1 + rng() % 45;
    std::vector<bool> c(n);
    for (auto&& x : c) x = rng() % 2 == 0;
    const auto f = make(c);
    const int k = static_cast<int>(rng() % 10);
    std::set<std::string> prev;
    for (int total = k; total <= k + 25; ++total) {
      const auto s = select_for_humeval(f.ranking, f.meta, k, total);
      const auto got = ids(s);
      ASSERT_EQ(got, oracle::select(f.candidates, k, total)) << "k=" << k << " total=" << total;
      ASSERT_EQ(got.size(), std::min<std::size_t>(static_cast<std::size_t>(total), n));
      ASSERT_TRUE(std::includes(got.begin(), got.end(), prev.begin(), prev.end()));
      prev = got;
    }
  }
}

TEST(SelectForHumeval, TopConstrainedAlwaysContained) {
  std::mt19937_64 rng(23);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 1 + rng() % 40;
    std::vector<bool> c(n);
    for (auto&& x : c) x = rng() % 4 == 0;
    const auto f = make(c);
    const auto s = select_for_humeval(f.ranking, f.meta);
    int seen = 0;
    for (const auto& cand : f.candidates) {
      if (cand.constrained && seen < 8) {
        ++seen;
        ASSERT_TRUE(s.contains(cand.id));
      }
    }
  }
}

TEST(SelectForHumeval, Errors) {
  auto f = make({true, false});
  f.meta.pop_back();
  try {
    select_for_humeval(f.ranking, f.meta);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::MissingMeta);
    EXPECT_EQ(e.subject(), "s01");
  }
  const auto g = make({true});
  EXPECT_THROW(select_for_humeval(g.ranking, g.meta, 5, 3), Error);
  EXPECT_THROW(select_for_humeval(g.ranking, g.meta, -1, 3), Error);
}

TEST(SelectForHumeval, GoldenPairsMatchPublishedMarks) {
  const auto recs = fixtures::golden_scores();
  const auto policy = fixtures::golden_policy();
  const auto meta = fixtures::golden_systems();
  for (const std::string lp : {"en-bho_IN", "en-mas_KE", "en-is_IS", "en-cs_CZ"}) {
    const auto r = rank_language_pair(recs, *policy.find(lp), policy.metrics);
    const auto s = select_for_humeval(r, meta);
    const auto pub = fixtures::published(lp);
    ASSERT_EQ(s.selected().size(), 18u) << lp;
    std::set<std::string> marked;
    for (const auto& [sys, he] : pub.humeval) {
      if (he) marked.insert(sys);
    }
    const auto got = ids(s);
    if (lp == "en-cs_CZ") {
      // One extra system was added by hand for Czech.
      EXPECT_TRUE(std::includes(marked.begin(), marked.end(), got.begin(), got.end()));
      EXPECT_EQ(marked.size(), 19u);
    } else {
      EXPECT_EQ(got, marked) << lp;
    }
  }
}
