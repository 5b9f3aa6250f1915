#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "deeptarget/cts.hpp"
#include "deeptarget/error.hpp"
#include "oracles.hpp"

namespace dt = deeptarget;
using dt::SeedMatchType;

namespace {

const std::string kLet7a = "UGAGGUAGUAGGUUGUAUAGUU";

dt::RnaSequence rna(const std::string& id, const std::string& s) { return dt::RnaSequence::from_string(id, s); }

std::set<std::pair<std::size_t, std::string>> library_scan(const std::string& mirna, const std::string& mrna,
                                                           std::size_t k) {
  std::set<std::pair<std::size_t, std::string>> out;
  for (const auto& c : dt::scan_cts(rna("mi", mirna), rna("m", mrna), k)) {
    out.emplace(c.start, std::string(dt::to_string(c.match)));
  }
  return out;
}

}  // namespace

TEST(SeedMatch, Let7aEightmer) {
  const std::string mrna = "GGGCUACCUCA";
  const auto m = dt::seed_match_at(rna("let-7a", kLet7a), rna("m", mrna), 10);
  ASSERT_TRUE(m.has_value());
  EXPECT_EQ(*m, SeedMatchType::Eightmer);
  EXPECT_EQ(oracle::seed_class(kLet7a, mrna, 10), "8mer");
}

TEST(SeedMatch, Let7aSevenmerM8WhenA1Broken) {
  const auto m = dt::seed_match_at(rna("let-7a", kLet7a), rna("m", "GGGCUACCUCC"), 10);
  ASSERT_TRUE(m.has_value());
  EXPECT_EQ(*m, SeedMatchType::SevenmerM8);
}

TEST(SeedMatch, AllAWindowNeverMatchesSeedWithC) {
  const std::string mirna = "UACGUAGCUAGCUAGCUA";
  const auto mrna = rna("m", std::string(40, 'A'));
  for (std::int64_t a = -3; a < 45; ++a) EXPECT_FALSE(dt::seed_match_at(rna("mi", mirna), mrna, a));
}

TEST(SeedMatch, OutOfBoundsAnchorsAreNoMatch) {
  const auto mi = rna("let-7a", kLet7a);
  const auto m = rna("m", "CUACCUCA");
  EXPECT_TRUE(dt::seed_match_at(mi, m, 7));
  EXPECT_FALSE(dt::seed_match_at(mi, m, 6));
  EXPECT_FALSE(dt::seed_match_at(mi, m, 8));
  EXPECT_FALSE(dt::seed_match_at(mi, m, -1));
}

TEST(SeedMatch, TypeLattice) {
  std::mt19937_64 rng(17);
  const auto mi = rna("let-7a", kLet7a);
  for (int trial = 0; trial < 200; ++trial) {
    std::string m = oracle::random_rna(rng, 30) + "CUACCUCA" + oracle::random_rna(rng, 5);
    const std::int64_t anchor = 37;
    ASSERT_EQ(dt::seed_match_at(mi, rna("m", m), anchor), SeedMatchType::Eightmer);
    std::string a1 = m;
    a1[anchor] = 'U';
    EXPECT_EQ(dt::seed_match_at(mi, rna("m", a1), anchor), SeedMatchType::SevenmerM8);
    std::string m8 = m;
    m8[anchor - 7] = 'A';
    EXPECT_EQ(dt::seed_match_at(mi, rna("m", m8), anchor), SeedMatchType::SevenmerA1);
    a1[anchor - 7] = 'A';
    EXPECT_EQ(dt::seed_match_at(mi, rna("m", a1), anchor), SeedMatchType::Sixmer);
  }
}

TEST(ScanCts, SingleEightmerInAFlanks) {
  const std::string mrna = std::string(22, 'A') + "CUACCUCA" + std::string(20, 'A');
  const auto sites = dt::scan_cts(rna("let-7a", kLet7a), rna("m", mrna), 30);
  ASSERT_EQ(sites.size(), 1u);
  EXPECT_EQ(sites[0].match, SeedMatchType::Eightmer);
  EXPECT_EQ(sites[0].anchor(), 29u);
  EXPECT_EQ(sites[0].window.size(), 30u);
  EXPECT_EQ(sites[0].window.letters().substr(22), "CUACCUCA");
  EXPECT_EQ(library_scan(kLet7a, mrna, 30), oracle::brute_force_scan(kLet7a, mrna, 30));
}

TEST(ScanCts, ShortMrnaGivesNothing) {
  EXPECT_TRUE(dt::scan_cts(rna("let-7a", kLet7a), rna("m", "CUACCUCA"), 30).empty());
}

TEST(ScanCts, TwoDisjointSixmers) {
  const std::string six = "AUACCUCC";
  const std::string mrna = std::string(30, 'A') + six + std::string(12, 'A') + six + std::string(4, 'A');
  const auto sites = dt::scan_cts(rna("let-7a", kLet7a), rna("m", mrna), 30);
  ASSERT_EQ(sites.size(), 2u);
  EXPECT_LT(sites[0].start, sites[1].start);
  for (const auto& s : sites) EXPECT_EQ(s.match, SeedMatchType::Sixmer);
  EXPECT_EQ(library_scan(kLet7a, mrna, 30), oracle::brute_force_scan(kLet7a, mrna, 30));
}

TEST(ScanCts, RejectsTinyK) { EXPECT_THROW(dt::scan_cts(rna("mi", kLet7a), rna("m", "ACGU"), 7), dt::DataError); }

TEST(ScanCts, MatchesBruteForceOracle) {
  std::mt19937_64 rng(2024);
  std::size_t total_sites = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto c = oracle::random_scan_case(rng);
    const auto expected = oracle::brute_force_scan(c.mirna, c.mrna, c.k);
    ASSERT_EQ(library_scan(c.mirna, c.mrna, c.k), expected) << c.mirna << " / " << c.mrna << " k=" << c.k;
    total_sites += expected.size();
  }
  EXPECT_GT(total_sites, 200u);
}

TEST(ScanCts, EmittedSitesAreSelfConsistent) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 300; ++trial) {
    const auto c = oracle::random_scan_case(rng);
    const auto mi = rna("mi", c.mirna);
    const auto m = rna("m", c.mrna);
    const auto sites = dt::scan_cts(mi, m, c.k);
    for (std::size_t i = 0; i < sites.size(); ++i) {
      const auto& s = sites[i];
      EXPECT_EQ(dt::seed_match_at(mi, m, static_cast<std::int64_t>(s.anchor())), s.match);
      EXPECT_EQ(s.window.letters(), c.mrna.substr(s.start, c.k));
      EXPECT_EQ(dt::seed_match_at(mi, s.window, static_cast<std::int64_t>(c.k - 1)), s.match);
      if (i > 0) EXPECT_LT(sites[i - 1].start, s.start);
    }
  }
}

TEST(SiteDataset, CountsLabelsAndDeterminism) {
  const std::vector<dt::RnaSequence> mirnas{rna("let-7a", kLet7a)};
  const auto lookup = dt::make_lookup(mirnas);
  const std::string w8 = std::string(22, 'G') + "CUACCUCA";
  const std::string w6 = std::string(22, 'C') + "AUACCUCC";
  const std::vector<dt::SiteRecord> pos{{"let-7a", "g1", 0, w8}, {"let-7a", "g2", 5, w8}};
  const std::vector<dt::SiteRecord> neg{{"let-7a", "g3", 1, w6}, {"let-7a", "g4", 2, w6}};
  const auto a = dt::build_site_dataset(pos, neg, lookup, 30, 4);
  ASSERT_EQ(a.size(), 4u);
  int ones = 0;
  for (const auto& p : a) ones += p.label;
  EXPECT_EQ(ones, 2);
  const auto b = dt::build_site_dataset(pos, neg, lookup, 30, 4);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].cts.mrna_id, b[i].cts.mrna_id);
    EXPECT_EQ(a[i].label, b[i].label);
  }
  EXPECT_THROW(dt::build_site_dataset(pos, {}, lookup, 30, 4), dt::DataError);
  const std::vector<dt::SiteRecord> unknown{{"miR-x", "g", 0, w8}};
  EXPECT_THROW(dt::build_site_dataset(unknown, neg, lookup, 30, 4), dt::DataError);
  const std::vector<dt::SiteRecord> wrong_k{{"let-7a", "g", 0, w8.substr(1)}};
  EXPECT_THROW(dt::build_site_dataset(wrong_k, neg, lookup, 30, 4), dt::DataError);
}

TEST(GeneLabel, Disjunction) {
  EXPECT_EQ(dt::gene_level_label(std::vector<int>{0, 1, 0}), 1);
  EXPECT_EQ(dt::gene_level_label(std::vector<int>{0, 0}), 0);
  EXPECT_EQ(dt::gene_level_label(std::vector<int>{1}), 1);
  EXPECT_THROW(dt::gene_level_label(std::vector<int>{}), dt::DataError);
}

TEST(PairsTsv, RoundTrip) {
  const auto mi = rna("let-7a", kLet7a);
  const auto m = rna("gene", std::string(22, 'A') + "CUACCUCA" + std::string(20, 'A'));
  const auto sites = dt::scan_cts(mi, m, 30);
  ASSERT_EQ(sites.size(), 1u);
  const std::vector<dt::PairExample> pairs{
      {mi, sites[0], 1, dt::Provenance::Real},
      {rna("mock-1", "GAUGUGGAGAUUAUGGUAGUAG"), sites[0], 0, dt::Provenance::Mock}};
  std::stringstream buf;
  dt::write_pairs_tsv(buf, pairs);
  const std::string text = buf.str();
  EXPECT_EQ(text.substr(0, dt::kPairsHeader.size()), dt::kPairsHeader);
  EXPECT_EQ(text.find('\r'), std::string::npos);
  const auto back = dt::read_pairs_tsv(buf);
  ASSERT_EQ(back.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(back[i].mirna, pairs[i].mirna);
    EXPECT_EQ(back[i].cts.mrna_id, pairs[i].cts.mrna_id);
    EXPECT_EQ(back[i].cts.start, pairs[i].cts.start);
    EXPECT_EQ(back[i].cts.window.letters(), pairs[i].cts.window.letters());
    EXPECT_EQ(back[i].cts.match, pairs[i].cts.match);
    EXPECT_EQ(back[i].label, pairs[i].label);
    EXPECT_EQ(back[i].provenance, pairs[i].provenance);
  }
  std::stringstream again;
  dt::write_pairs_tsv(again, back);
  EXPECT_EQ(again.str(), text);
}

TEST(PairsTsv, RejectsBadInput) {
  std::stringstream no_header("x\ty\n");
  EXPECT_THROW(dt::read_pairs_tsv(no_header), dt::DataError);
  std::stringstream bad_label(std::string(dt::kPairsHeader) + "\nm\tACGUACGU\tg\t0\tACGUACGU\t6mer\t2\tREAL\n");
  EXPECT_THROW(dt::read_pairs_tsv(bad_label), dt::DataError);
  std::stringstream mock_pos(std::string(dt::kPairsHeader) + "\nm\tACGUACGU\tg\t0\tACGUACGU\t6mer\t1\tMOCK\n");
  EXPECT_THROW(dt::read_pairs_tsv(mock_pos), dt::DataError);
  std::stringstream short_row(std::string(dt::kPairsHeader) + "\nm\tACGU\n");
  EXPECT_THROW(dt::read_pairs_tsv(short_row), dt::DataError);
}
