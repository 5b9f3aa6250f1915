#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <limits>
#include <map>
#include <random>

#include <boost/math/distributions/chi_squared.hpp>

#include "deeptarget/error.hpp"
#include "deeptarget/mockgen.hpp"
#include "oracles.hpp"

namespace dt = deeptarget;

namespace {

dt::RnaSequence rna(const std::string& id, const std::string& s) { return dt::RnaSequence::from_string(id, s); }

std::string sorted_letters(const dt::RnaSequence& s) {
  std::string l = s.letters();
  std::sort(l.begin(), l.end());
  return l;
}

// Biased base draw, for A-rich miRNAs and U-rich windows.
std::string biased_rna(std::mt19937_64& rng, std::size_t n, char major, double share) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::string s = oracle::random_rna(rng, n);
  for (auto& c : s) {
    if (u(rng) < share) c = major;
  }
  return s;
}

}  // namespace

TEST(FisherYates, SingleBaseIsFixed) {
  dt::Rng rng(1);
  EXPECT_EQ(dt::fisher_yates(rna("a", "A"), rng).letters(), "A");
}

TEST(FisherYates, PreservesMultiset) {
  std::mt19937_64 gen(8);
  dt::Rng rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    const auto s = rna("s", oracle::random_rna(gen, 1 + gen() % 40));
    const auto shuffled = dt::fisher_yates(s, rng);
    EXPECT_EQ(shuffled.size(), s.size());
    EXPECT_EQ(sorted_letters(shuffled), sorted_letters(s));
    EXPECT_EQ(shuffled.id(), s.id());
  }
}

TEST(FisherYates, UniformOverPermutationsOfFourBases) {
  dt::Rng rng(20240601);
  const auto acgu = rna("p", "ACGU");
  std::map<std::string, int> counts;
  constexpr int kDraws = 24000;
  for (int i = 0; i < kDraws; ++i) ++counts[dt::fisher_yates(acgu, rng).letters()];
  ASSERT_EQ(counts.size(), 24u);
  double stat = 0.0;
  for (const auto& [perm, n] : counts) {
    const double expected = kDraws / 24.0;
    stat += (n - expected) * (n - expected) / expected;
  }
  const boost::math::chi_squared dist(23);
  const double p = 1.0 - boost::math::cdf(dist, stat);
  EXPECT_GT(p, 0.001) << "chi-square " << stat;
}

TEST(FisherYates, SameSeedSameShuffle) {
  const auto s = rna("s", "UGAGGUAGUAGGUUGUAUAGUU");
  dt::Rng a(77), b(77);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(dt::fisher_yates(s, a), dt::fisher_yates(s, b));
}

TEST(SeedIndex, KeysPositionsTwoToEight) {
  const auto a = rna("a", "UGAGGUAGUAGG");
  const auto b = rna("b", "CGAGGUAGCCCC");  // same 2-8, different elsewhere
  const auto c = rna("c", "UGAGGUAAUAGG");  // differs at 8
  const std::vector<dt::RnaSequence> reals{a};
  const dt::SeedIndex index(reals);
  EXPECT_TRUE(index.contains_seed_of(b));
  EXPECT_FALSE(index.contains_seed_of(c));
  EXPECT_FALSE(dt::SeedIndex::seed_key(rna("short", "ACGUACG")).has_value());
  EXPECT_FALSE(index.contains_seed_of(rna("short", "ACGUACG")));
}

TEST(GenerateMock, HomopolymerExhaustsRetries) {
  const auto poly = rna("poly", "AAAAAAAA");
  const std::vector<dt::RnaSequence> reals{poly};
  const dt::SeedIndex index(reals);
  dt::MockConfig cfg;
  cfg.max_retries = 25;
  dt::Rng rng(1);
  EXPECT_THROW(dt::generate_mock(poly, index, cfg, rng), dt::MockGenerationError);
}

TEST(GenerateMock, EmptyIndexAcceptsFirstShuffle) {
  const auto real = rna("r", "ACGUACGUAC");
  dt::MockConfig cfg;
  cfg.max_retries = 1;
  dt::Rng a(5), b(5);
  const auto mock = dt::generate_mock(real, dt::SeedIndex{}, cfg, a);
  EXPECT_EQ(mock.bases(), dt::fisher_yates(real, b).bases());
}

TEST(GenerateMock, ShortInputIsRejected) {
  dt::Rng rng(1);
  EXPECT_THROW(dt::generate_mock(rna("s", "ACGU"), dt::SeedIndex{}, {}, rng), dt::DataError);
}

TEST(GenerateMock, NoSeedCollisionsWithRealIndex) {
  std::mt19937_64 gen(31);
  std::vector<dt::RnaSequence> reals;
  for (int i = 0; i < 200; ++i) reals.push_back(rna("r" + std::to_string(i), oracle::random_rna(gen, 22)));
  const dt::SeedIndex index(reals);
  // Independent membership check on the letters of positions 2-8.
  std::set<std::string> seeds;
  for (const auto& r : reals) seeds.insert(r.letters().substr(1, 7));
  dt::Rng rng(4);
  for (int i = 0; i < 100; ++i) {
    const auto& real = reals[static_cast<std::size_t>(i) % reals.size()];
    const auto mock = dt::generate_mock(real, index, {}, rng);
    EXPECT_EQ(seeds.count(mock.letters().substr(1, 7)), 0u);
    EXPECT_EQ(sorted_letters(mock), sorted_letters(real));
  }
}

TEST(Complementarity, Examples) {
  const auto mi = rna("mi", "UGAGGUAG");
  EXPECT_EQ(dt::complementarity_score(mi, mi.reverse_complement("w")), 40.0);
  EXPECT_EQ(dt::complementarity_score(rna("a", "A"), rna("u", "U")), 5.0);
  EXPECT_EQ(dt::complementarity_score(rna("a", "A"), rna("g", "G")), 0.0);
  const auto planted_mi = rna("mi", "CCCCAUUAUACCCC");
  const auto planted_w = rna("w", "CCCUAUAAUCCCCC");
  EXPECT_EQ(dt::complementarity_score(planted_mi, planted_w), 30.0);
  EXPECT_EQ(oracle::local_alignment(planted_mi.letters(), planted_w.letters()), 30.0);
}

TEST(Complementarity, WobbleScoresOne) {
  EXPECT_EQ(dt::complementarity_score(rna("g", "G"), rna("u", "U")), 1.0);
  EXPECT_EQ(dt::complementarity_score(rna("u", "U"), rna("g", "G")), 1.0);
}

TEST(Complementarity, MatchesExplicitGapOracle) {
  std::mt19937_64 rng(555);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::string a = oracle::random_rna(rng, 1 + rng() % 12);
    const std::string b = oracle::random_rna(rng, 1 + rng() % 12);
    const double got = dt::complementarity_score(rna("a", a), rna("b", b));
    ASSERT_DOUBLE_EQ(got, oracle::local_alignment(a, b)) << a << " vs " << b;
    ASSERT_GE(got, 0.0);
  }
}

TEST(Complementarity, GappedAlignmentUsesAffineCost) {
  // Ten pairs split by a two-base bulge in the window: 50 - 8 - 2 = 40.
  const std::string mirna = "AAAAAUUUUU";
  const std::string rc = oracle::reverse_complement(mirna);
  const std::string window = rc.substr(0, 5) + "CC" + rc.substr(5);
  EXPECT_EQ(oracle::local_alignment(mirna, window), 40.0);
  EXPECT_EQ(dt::complementarity_score(rna("m", mirna), rna("w", window)), 40.0);
}

class NegativePairs : public ::testing::Test {
 protected:
  void SetUp() override {
    std::mt19937_64 gen(13);
    for (int i = 0; i < 60; ++i) {
      const auto mi = rna("mi" + std::to_string(i), biased_rna(gen, 22, 'A', 0.6));
      const auto window = rna("w" + std::to_string(i), biased_rna(gen, 30, 'U', 0.7));
      dt::CandidateTargetSite cts{"gene" + std::to_string(i), 0, 30, dt::SeedMatchType::Sixmer, window};
      positives.push_back({mi, cts, 1, dt::Provenance::Real});
    }
    index.insert(rna("other", "GCGCGCGCGCGCGCGC"));
  }
  std::vector<dt::PairExample> positives;
  dt::SeedIndex index;
};

TEST_F(NegativePairs, CountsAndLabels) {
  const std::span<const dt::PairExample> ten(positives.data(), 10);
  const auto r = dt::build_negative_pairs(ten, index, {});
  EXPECT_LE(r.pairs.size(), 10u);
  EXPECT_EQ(r.pairs.size() + r.generation_failures + r.below_threshold + r.no_seed_match, 10u);
  for (const auto& p : r.pairs) {
    EXPECT_EQ(p.label, 0);
    EXPECT_EQ(p.provenance, dt::Provenance::Mock);
  }
}

TEST_F(NegativePairs, InfiniteThresholdRejectsAll) {
  dt::MockConfig cfg;
  cfg.score_threshold = std::numeric_limits<double>::infinity();
  const auto r = dt::build_negative_pairs(positives, index, cfg);
  EXPECT_TRUE(r.pairs.empty());
}

TEST_F(NegativePairs, EmittedDecoysRescoreAboveThreshold) {
  dt::MockConfig cfg;
  cfg.score_threshold = 30.0;
  const auto r = dt::build_negative_pairs(positives, index, cfg);
  EXPECT_GT(r.pairs.size(), 0u);
  for (const auto& p : r.pairs) {
    EXPECT_GE(oracle::local_alignment(p.mirna.letters(), p.cts.window.letters()), 30.0);
    bool any = false;
    for (long a = 7; a < 30; ++a) any = any || !oracle::seed_class(p.mirna.letters(), p.cts.window.letters(), a).empty();
    EXPECT_TRUE(any);
    EXPECT_FALSE(index.contains_seed_of(p.mirna));
  }
}

TEST_F(NegativePairs, SeededDeterminism) {
  dt::MockConfig cfg;
  cfg.rng_seed = 99;
  const auto a = dt::build_negative_pairs(positives, index, cfg);
  const auto b = dt::build_negative_pairs(positives, index, cfg);
  ASSERT_EQ(a.pairs.size(), b.pairs.size());
  for (std::size_t i = 0; i < a.pairs.size(); ++i) {
    EXPECT_EQ(a.pairs[i].mirna, b.pairs[i].mirna);
    EXPECT_EQ(a.pairs[i].cts.match, b.pairs[i].cts.match);
  }
}

TEST_F(NegativePairs, PerExampleStreamsDoNotDependOnNeighbours) {
  dt::MockConfig cfg;
  cfg.rng_seed = 5;
  const auto full = dt::build_negative_pairs(positives, index, cfg);
  // Only the first positive: its mock must equal the one built in the full run.
  const auto first = dt::build_negative_pairs(std::span<const dt::PairExample>(positives.data(), 1), index, cfg);
  if (!first.pairs.empty()) {
    ASSERT_FALSE(full.pairs.empty());
    EXPECT_EQ(first.pairs[0].mirna, full.pairs[0].mirna);
  }
}

TEST_F(NegativePairs, RejectsUnlabelledInput) {
  auto bad = positives;
  bad[0].label = 0;
  EXPECT_THROW(dt::build_negative_pairs(bad, index, {}), dt::DataError);
}

TEST(MockConfig, Validation) {
  dt::MockConfig cfg;
  cfg.max_retries = 0;
  EXPECT_THROW(cfg.validate(), dt::DataError);
}
