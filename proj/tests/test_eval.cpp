#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "test_util.hpp"
#include "topicforge/eval.hpp"
#include "topicforge/synth.hpp"

using namespace topicforge;

namespace {

struct OracleCounts {
  std::uint64_t windows = 0;
  std::map<std::uint32_t, std::uint64_t> single;
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint64_t> pair;
};

// Enumerates every window explicitly.
OracleCounts window_oracle(const TokenStreams& docs, const std::vector<std::uint32_t>& words,
                           std::size_t w) {
  OracleCounts out;
  const std::set<std::uint32_t> wanted(words.begin(), words.end());
  for (const auto& doc : docs) {
    if (doc.empty()) continue;
    const std::size_t n = doc.size() < w ? 1 : doc.size() - w + 1;
    for (std::size_t s = 0; s < n; ++s) {
      ++out.windows;
      std::set<std::uint32_t> in;
      for (std::size_t i = s; i < std::min(doc.size(), s + w); ++i)
        if (wanted.contains(doc[i])) in.insert(doc[i]);
      for (auto a : in) {
        ++out.single[a];
        for (auto b : in)
          if (a < b) ++out.pair[{a, b}];
      }
    }
  }
  return out;
}

double npmi_oracle(double pi, double pj, double pij) {
  if (pij == 0.0) return -1.0;
  return std::log(pij / (pi * pj)) / -std::log(pij);
}

KSelectionRun run(std::size_t k, double c, double s) {
  KSelectionRun r;
  r.k = k;
  r.coherence = c;
  r.similarity = s;
  return r;
}

}  // namespace

TEST(WindowCounts, SingleShortDocument) {
  const TokenStreams docs{{0, 1}};
  const std::vector<std::uint32_t> words{0, 1};
  const auto c = window_counts(docs, words, 2);
  EXPECT_EQ(c.total_windows(), 1u);
  EXPECT_EQ(c.probability(0), 1.0);
  EXPECT_EQ(c.probability(1), 1.0);
  EXPECT_EQ(c.joint_probability(0, 1), 1.0);
}

TEST(WindowCounts, NeverTogetherGivesZeroJoint) {
  const TokenStreams docs{{0, 2, 2, 1}};
  const std::vector<std::uint32_t> words{0, 1};
  const auto c = window_counts(docs, words, 2);
  EXPECT_EQ(c.total_windows(), 3u);
  EXPECT_EQ(c.joint_probability(0, 1), 0.0);
}

TEST(WindowCounts, Preconditions) {
  const std::vector<std::uint32_t> words{0};
  EXPECT_THROW(window_counts(TokenStreams{{0}}, words, 1), UsageError);
  EXPECT_THROW(window_counts(TokenStreams{}, words, 2), DataError);
}

TEST(WindowCountsProperty, MatchesExhaustiveEnumeration) {
  Rng rng(41);
  for (int trial = 0; trial < 300; ++trial) {
    TokenStreams docs(1 + rng.below(5));
    std::size_t budget = 100;
    for (auto& d : docs) {
      const std::size_t len = std::min<std::size_t>(budget, rng.below(30));
      budget -= len;
      for (std::size_t i = 0; i < len; ++i) d.push_back(static_cast<std::uint32_t>(rng.below(9)));
    }
    std::vector<std::uint32_t> words;
    for (std::uint32_t t = 0; t < 9; ++t)
      if (rng.uniform() < 0.6) words.push_back(t);
    if (words.empty()) words.push_back(0);
    const std::size_t w = 2 + rng.below(12);
    const auto oracle = window_oracle(docs, words, w);
    for (unsigned threads : {1u, 3u})
      for (std::size_t dense_limit : {std::size_t{0}, std::size_t{64}}) {
        const auto c = window_counts(docs, words, w, threads, dense_limit);
        ASSERT_EQ(c.total_windows(), oracle.windows);
        for (std::size_t i = 0; i < c.words().size(); ++i) {
          const auto wi = c.words()[i];
          EXPECT_EQ(c.word_windows(i), oracle.single.contains(wi) ? oracle.single.at(wi) : 0u);
          for (std::size_t j = i + 1; j < c.words().size(); ++j) {
            const auto key = std::minmax(wi, c.words()[j]);
            const auto it = oracle.pair.find({key.first, key.second});
            EXPECT_EQ(c.pair_windows(i, j), it == oracle.pair.end() ? 0u : it->second);
          }
        }
      }
  }
}

TEST(Npmi, Identities) {
  for (double p : {0.001, 0.2, 0.5, 0.99}) EXPECT_EQ(*npmi(p, p, p), 1.0);
  for (double a : {0.01, 0.3, 0.7})
    for (double b : {0.02, 0.5, 0.9}) EXPECT_NEAR(*npmi(a, b, a * b), 0.0, 1e-9);
  EXPECT_EQ(*npmi(0.5, 0.5, 0.0), -1.0);
  EXPECT_FALSE(npmi(0.0, 0.5, 0.0));
}

TEST(Npmi, HandExample) {
  EXPECT_NEAR(*npmi(0.5, 0.5, 0.1), std::log(0.4) / -std::log(0.1), 1e-12);
  EXPECT_NEAR(*npmi(0.5, 0.5, 0.1), -0.398, 5e-4);
}

TEST(NpmiProperty, AlwaysInUnitInterval) {
  Rng rng(2);
  for (int i = 0; i < 10000; ++i) {
    const double pi = rng.uniform_open(), pj = rng.uniform_open();
    const double pij = std::min(pi, pj) * rng.uniform();
    const double v = *npmi(pi, pj, pij);
    EXPECT_GE(v, -1.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Coherence, PerfectCooccurrenceScoresOne) {
  const TokenStreams docs{{0, 1, 2}, {3, 3}, {0, 1, 2}};
  const auto c = topic_coherence(std::vector<std::vector<std::uint32_t>>{{0, 1, 2}}, docs,
                                 CoherenceConfig{3, 5, 1e-12});
  EXPECT_NEAR(*c.scores[0], 1.0, 1e-12);
}

TEST(Coherence, MatchesHandRolledOracleOnToyCorpus) {
  const TokenStreams docs{{0, 1, 2, 3, 0}, {1, 3}, {2, 2, 0}, {3, 1, 0, 2, 1, 1}};
  const std::vector<std::uint32_t> words{0, 1, 2, 3};
  const std::size_t w = 3;
  const auto o = window_oracle(docs, words, w);
  const double N = static_cast<double>(o.windows);
  auto p = [&](std::uint32_t a) { return o.single.at(a) / N; };
  auto pp = [&](std::uint32_t a, std::uint32_t b) {
    auto it = o.pair.find(std::minmax(a, b));
    return it == o.pair.end() ? 0.0 : it->second / N;
  };
  double v[4][4], total[4] = {0, 0, 0, 0};
  for (std::uint32_t a = 0; a < 4; ++a)
    for (std::uint32_t b = 0; b < 4; ++b) {
      v[a][b] = a == b ? 1.0 : npmi_oracle(p(a), p(b), pp(a, b));
      total[b] += v[a][b];
    }
  double expected = 0.0;
  for (int a = 0; a < 4; ++a) {
    double dot = 0, na = 0, nt = 0;
    for (int b = 0; b < 4; ++b) {
      dot += v[a][b] * total[b];
      na += v[a][b] * v[a][b];
      nt += total[b] * total[b];
    }
    expected += dot / std::sqrt(na * nt) / 4.0;
  }
  const auto c = topic_coherence(std::vector<std::vector<std::uint32_t>>{words}, docs,
                                 CoherenceConfig{4, w, 1e-12});
  EXPECT_NEAR(*c.scores[0], expected, 1e-12);
  EXPECT_NEAR(c.mean, expected, 1e-12);
}

TEST(Coherence, UnusableTopicIsSkippedAndFlagged) {
  const TokenStreams docs{{0, 1}};
  const Vocabulary vocab({"a", "b", "c"});
  ScopedWarningCapture cap;
  const auto c = topic_coherence(std::vector<std::vector<std::string>>{{"a", "b"}, {"a", "zzz"}, {"c", "a"}},
                                 vocab, docs, CoherenceConfig{});
  EXPECT_TRUE(c.scores[0].has_value());
  EXPECT_FALSE(c.scores[1].has_value());
  EXPECT_FALSE(c.scores[2].has_value());  // "c" never appears
  EXPECT_EQ(c.skipped, 2u);
  EXPECT_EQ(c.mean, *c.scores[0]);
  EXPECT_GE(cap.messages().size(), 3u);
}

TEST(Coherence, GeneratingTopicsBeatRandomWordSets) {
  SynthSpec s;
  s.num_topics = 5;
  s.vocab_size = 100;
  s.docs = 400;
  s.min_tokens = s.max_tokens = 60;
  const auto data = generate(s);
  std::vector<std::vector<std::uint32_t>> truth;
  for (std::size_t k = 0; k < 5; ++k) {
    std::vector<std::uint32_t> ids(100);
    std::iota(ids.begin(), ids.end(), 0u);
    std::sort(ids.begin(), ids.end(), [&](auto a, auto b) {
      return data.true_beta[k * 100 + a] > data.true_beta[k * 100 + b];
    });
    ids.resize(10);
    truth.push_back(ids);
  }
  const CoherenceConfig cfg{10, 110, 1e-12};
  const double true_c = topic_coherence(truth, data.tokens, cfg).mean;
  Rng rng(99);
  int wins = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::vector<std::uint32_t>> random(5);
    for (auto& t : random) {
      std::vector<std::uint32_t> ids(100);
      std::iota(ids.begin(), ids.end(), 0u);
      rng.shuffle(std::span<std::uint32_t>(ids));
      t.assign(ids.begin(), ids.begin() + 10);
    }
    wins += true_c > topic_coherence(random, data.tokens, cfg).mean;
  }
  EXPECT_GE(wins, 95);
}

TEST(Jaccard, Basics) {
  const std::vector<std::string> a{"x", "y", "z"}, b{"y", "z", "w"}, c{"q"};
  EXPECT_DOUBLE_EQ(jaccard(a, a), 1.0);
  EXPECT_DOUBLE_EQ(jaccard(a, b), 0.5);
  EXPECT_DOUBLE_EQ(jaccard(b, a), 0.5);
  EXPECT_DOUBLE_EQ(jaccard(a, c), 0.0);
}

TEST(Similarity, HandExamples) {
  using L = std::vector<std::vector<std::string>>;
  EXPECT_DOUBLE_EQ(topic_similarity(L{{"a", "b"}, {"a", "b"}, {"a", "b"}}), 1.0);
  EXPECT_DOUBLE_EQ(topic_similarity(L{{"a", "b"}, {"c", "d"}, {"e"}}), 0.0);
  // J12 = 1/3, J13 = 0, J23 = 1/3
  const L three{{"a", "b"}, {"b", "c"}, {"c", "d"}};
  EXPECT_DOUBLE_EQ(topic_similarity(three), (1.0 / 3 + 0.0 + 1.0 / 3) / 3.0);
  EXPECT_DOUBLE_EQ(topic_similarity(three, SimilarityAggregate::kMax), 1.0 / 3);
  const L reordered{three[2], three[0], three[1]};
  EXPECT_DOUBLE_EQ(topic_similarity(reordered), topic_similarity(three));
  EXPECT_THROW(topic_similarity(L{{"a"}}), DataError);
}

TEST(RankSweep, DominantCandidateWins) {
  const auto sel = rank_sweep({run(10, 0.4, 0.2), run(11, 0.6, 0.05), run(12, 0.5, 0.1)});
  EXPECT_EQ(sel.chosen_k, 11u);
  EXPECT_EQ(sel.runs[1].rank_sum(), 2u);
}

TEST(RankSweep, CompetitionRanksForTiesAndNanLast) {
  const auto sel = rank_sweep({run(5, 0.3, 0.0), run(6, 0.5, 0.0), run(7, std::nan(""), 0.1),
                               run(8, 0.5, 0.2)});
  EXPECT_EQ(sel.runs[0].rank_coherence, 3u);
  EXPECT_EQ(sel.runs[1].rank_coherence, 1u);
  EXPECT_EQ(sel.runs[2].rank_coherence, 4u);
  EXPECT_EQ(sel.runs[3].rank_coherence, 1u);
  EXPECT_EQ(sel.runs[0].rank_similarity, 1u);
  EXPECT_EQ(sel.runs[1].rank_similarity, 1u);
  EXPECT_EQ(sel.runs[3].rank_similarity, 4u);
  EXPECT_EQ(sel.chosen_k, 6u);
}

TEST(RankSweep, RankSumTieGoesToSmallerK) {
  const auto sel = rank_sweep({run(20, 0.9, 0.3), run(15, 0.1, 0.1)});
  EXPECT_EQ(sel.chosen_k, 15u);
  EXPECT_THROW(rank_sweep({run(3, 0, 0), run(3, 1, 1)}), UsageError);
}

TEST(RankSweepProperty, CandidateOrderDoesNotMatter) {
  Rng rng(14);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<KSelectionRun> runs;
    for (std::size_t k = 2; k < 2 + 3 + rng.below(8); ++k)
      runs.push_back(run(k, std::round(rng.uniform() * 5) / 5, std::round(rng.uniform() * 4) / 4));
    auto shuffled = runs;
    rng.shuffle(std::span<KSelectionRun>(shuffled));
    const auto a = rank_sweep(runs), b = rank_sweep(shuffled);
    EXPECT_EQ(a.chosen_k, b.chosen_k);
    std::size_t min_sum = 1000;
    for (std::size_t i = 0; i < a.runs.size(); ++i) {
      EXPECT_EQ(a.runs[i].rank_sum(), b.runs[i].rank_sum());
      EXPECT_GE(a.runs[i].rank_coherence, 1u);
      EXPECT_LE(a.runs[i].rank_coherence, a.runs.size());
      min_sum = std::min(min_sum, a.runs[i].rank_sum());
    }
    for (const auto& r : a.runs)
      if (r.rank_sum() == min_sum) {
        EXPECT_EQ(r.k, a.chosen_k);
        break;
      }
  }
}

TEST(RankSweepProperty, DistinctValuesGiveAPermutation) {
  Rng rng(15);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<KSelectionRun> runs;
    for (std::size_t k = 2; k < 12; ++k) runs.push_back(run(k, rng.uniform(), rng.uniform()));
    const auto sel = rank_sweep(runs);
    std::set<std::size_t> ci, si;
    for (const auto& r : sel.runs) {
      ci.insert(r.rank_coherence);
      si.insert(r.rank_similarity);
    }
    EXPECT_EQ(ci.size(), 10u);
    EXPECT_EQ(*ci.rbegin(), 10u);
    EXPECT_EQ(si.size(), 10u);
  }
}

TEST(SelectK, DefaultCandidatesAndSeedPolicy) {
  const auto ks = default_k_candidates();
  EXPECT_EQ(ks.front(), 10u);
  EXPECT_EQ(ks.back(), 50u);
  EXPECT_EQ(ks.size(), 41u);
  EXPECT_NE(candidate_seed(1, 10, 0), candidate_seed(1, 11, 0));
  EXPECT_NE(candidate_seed(1, 10, 0), candidate_seed(1, 10, 1));
}

TEST(SelectK, OrderAndThreadIndependentOnSmallSweep) {
  SynthSpec s;
  s.num_topics = 4;
  s.vocab_size = 80;
  s.docs = 300;
  s.min_tokens = s.max_tokens = 50;
  const auto data = generate(s);
  LdaConfig base;
  base.batch_size = 100;
  base.passes = 4;
  base.seed = 3;
  const CoherenceConfig coh;
  const auto a = select_k(data.matrix, data.tokens, {2, 4, 6}, base, coh);
  SelectKOptions opts;
  opts.threads = 3;
  const auto b = select_k(data.matrix, data.tokens, {6, 2, 4, 4}, base, coh, opts);
  EXPECT_EQ(a.chosen_k, b.chosen_k);
  ASSERT_EQ(a.runs.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(a.runs[i].coherence, b.runs[i].coherence);
    EXPECT_EQ(a.runs[i].similarity, b.runs[i].similarity);
  }
}

TEST(SelectK, FailuresAreDroppedAndAllFailingIsFatal) {
  const auto m = DocTermMatrix(Vocabulary({"a", "b"}), {{{0, 1}, {1, 1}}});
  LdaConfig bad;
  bad.kappa = 2.0;
  ScopedWarningCapture cap;
  EXPECT_THROW(select_k(m, TokenStreams{{0, 1}}, {2, 3}, bad, CoherenceConfig{}), DataError);
  EXPECT_EQ(cap.messages().size(), 2u);
  EXPECT_THROW(select_k(m, TokenStreams{{0, 1}}, {2}, LdaConfig{}, CoherenceConfig{}), UsageError);
}
