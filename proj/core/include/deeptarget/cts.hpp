#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "deeptarget/seq.hpp"

namespace deeptarget {

inline constexpr std::size_t kDefaultSiteLength = 30;

/// Canonical seed-match classes, ordered from least to most specific.
enum class SeedMatchType : std::uint8_t { Sixmer, SevenmerA1, SevenmerM8, Eightmer };

std::string_view to_string(SeedMatchType type);
SeedMatchType parse_seed_match_type(std::string_view text);

/// A length-k mRNA window whose 3'-most eight positions hold the seed site.
struct CandidateTargetSite {
  std::string mrna_id;
  std::size_t start = 0;
  std::size_t k = 0;
  SeedMatchType match = SeedMatchType::Sixmer;
  RnaSequence window;

  /// mRNA position facing miRNA nucleotide 1.
  std::size_t anchor() const { return start + k - 1; }
};

enum class Provenance : std::uint8_t { Real, Mock };

std::string_view to_string(Provenance p);

struct PairExample {
  RnaSequence mirna;
  CandidateTargetSite cts;
  int label = 0;  // 1 = target
  Provenance provenance = Provenance::Real;
};

/// Seed match with miRNA nucleotide 1 facing mRNA position `anchor`;
/// nucleotide i pairs with position anchor - (i - 1). Reports the most
/// specific satisfied class. Requires the octamer [anchor-7, anchor] to lie
/// inside the mRNA; anything else is no match.
std::optional<SeedMatchType> seed_match_at(const RnaSequence& mirna, const RnaSequence& mrna,
                                           std::int64_t anchor);

/// Every CTS of length k; seeds sit at the window's 3' end and windows that
/// would run past the 5' end are dropped. Sorted by start.
std::vector<CandidateTargetSite> scan_cts(const RnaSequence& mirna, const RnaSequence& mrna,
                                          std::size_t k = kDefaultSiteLength);

/// Labelled window as it arrives from an external source.
struct SiteRecord {
  std::string mirna_id;
  std::string mrna_id;
  std::size_t start = 0;
  std::string window;
};

using MirnaLookup = std::map<std::string, RnaSequence, std::less<>>;

MirnaLookup make_lookup(std::span<const RnaSequence> mirnas);

/// Resolves, labels and shuffles (seeded) positive and negative site records.
std::vector<PairExample> build_site_dataset(std::span<const SiteRecord> positives,
                                            std::span<const SiteRecord> negatives,
                                            const MirnaLookup& mirnas, std::size_t k,
                                            std::uint64_t seed);

/// A gene is a predicted target when any of its sites is.
int gene_level_label(std::span<const int> site_predictions);

/// Pair dataset TSV (header line, tab separated, LF endings).
void write_pairs_tsv(std::ostream& out, std::span<const PairExample> pairs);
std::vector<PairExample> read_pairs_tsv(std::istream& in);
void write_pairs_file(const std::string& path, std::span<const PairExample> pairs);
std::vector<PairExample> read_pairs_file(const std::string& path);

inline constexpr std::string_view kPairsHeader =
    "mirna_id\tmirna_seq\tmrna_id\tcts_start\tcts_seq\tmatch_type\tlabel\tprovenance";

}  // namespace deeptarget
