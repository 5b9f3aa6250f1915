#include "deeptarget/cts.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "deeptarget/error.hpp"

namespace deeptarget {

namespace {

// Does miRNA nucleotide i (1-based) pair with its facing mRNA base?
bool pairs_at(const RnaSequence& mirna, const RnaSequence& mrna, std::int64_t anchor, int i) {
  return wc_pair(mirna[static_cast<std::size_t>(i - 1)],
                 mrna[static_cast<std::size_t>(anchor - (i - 1))]);
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto tab = line.find('\t', pos);
    out.push_back(line.substr(pos, tab == std::string_view::npos ? std::string_view::npos : tab - pos));
    if (tab == std::string_view::npos) break;
    pos = tab + 1;
  }
  return out;
}

std::size_t parse_count(std::string_view text, std::size_t line_no, const char* column) {
  std::size_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw DataError("pairs TSV line " + std::to_string(line_no) + ": bad " + column + " '" +
                    std::string(text) + "'");
  }
  return value;
}

}  // namespace

std::string_view to_string(SeedMatchType type) {
  switch (type) {
    case SeedMatchType::Sixmer: return "6mer";
    case SeedMatchType::SevenmerA1: return "7mer-A1";
    case SeedMatchType::SevenmerM8: return "7mer-m8";
    case SeedMatchType::Eightmer: return "8mer";
  }
  return "?";
}

SeedMatchType parse_seed_match_type(std::string_view text) {
  for (auto t : {SeedMatchType::Sixmer, SeedMatchType::SevenmerA1, SeedMatchType::SevenmerM8,
                 SeedMatchType::Eightmer}) {
    if (text == to_string(t)) return t;
  }
  throw DataError("unknown seed match type '" + std::string(text) + "'");
}

std::string_view to_string(Provenance p) { return p == Provenance::Real ? "REAL" : "MOCK"; }

std::optional<SeedMatchType> seed_match_at(const RnaSequence& mirna, const RnaSequence& mrna,
                                           std::int64_t anchor) {
  if (mirna.size() < 8) throw DataError("seed_match_at: miRNA '" + mirna.id() + "' shorter than 8");
  if (anchor < 7 || anchor >= static_cast<std::int64_t>(mrna.size())) return std::nullopt;
  for (int i = 2; i <= 7; ++i) {
    if (!pairs_at(mirna, mrna, anchor, i)) return std::nullopt;
  }
  const bool m8 = pairs_at(mirna, mrna, anchor, 8);
  const bool a1 = mrna[static_cast<std::size_t>(anchor)] == Nucleotide::A;
  if (m8 && a1) return SeedMatchType::Eightmer;
  if (m8) return SeedMatchType::SevenmerM8;
  if (a1) return SeedMatchType::SevenmerA1;
  return SeedMatchType::Sixmer;
}

std::vector<CandidateTargetSite> scan_cts(const RnaSequence& mirna, const RnaSequence& mrna,
                                          std::size_t k) {
  if (k < 8) throw DataError("scan_cts: k must be >= 8");
  std::vector<CandidateTargetSite> out;
  if (mrna.size() < k) return out;
  for (std::size_t anchor = k - 1; anchor < mrna.size(); ++anchor) {
    const auto match = seed_match_at(mirna, mrna, static_cast<std::int64_t>(anchor));
    if (!match) continue;
    const std::size_t start = anchor + 1 - k;
    out.push_back(CandidateTargetSite{mrna.id(), start, k, *match,
                                      mrna.slice(start, k, mrna.id() + ":" + std::to_string(start))});
  }
  return out;
}

MirnaLookup make_lookup(std::span<const RnaSequence> mirnas) {
  MirnaLookup out;
  for (const RnaSequence& m : mirnas) out.insert_or_assign(m.id(), m);
  return out;
}

std::vector<PairExample> build_site_dataset(std::span<const SiteRecord> positives,
                                            std::span<const SiteRecord> negatives,
                                            const MirnaLookup& mirnas, std::size_t k,
                                            std::uint64_t seed) {
  if (positives.empty() || negatives.empty()) {
    throw DataError("build_site_dataset: one-class dataset");
  }
  std::vector<PairExample> out;
  out.reserve(positives.size() + negatives.size());
  auto add = [&](const SiteRecord& r, int label) {
    auto it = mirnas.find(r.mirna_id);
    if (it == mirnas.end()) throw DataError("build_site_dataset: unknown miRNA id '" + r.mirna_id + "'");
    if (r.window.size() != k) {
      throw DataError("build_site_dataset: window of length " + std::to_string(r.window.size()) +
                      " for '" + r.mrna_id + "', expected " + std::to_string(k));
    }
    RnaSequence window = RnaSequence::from_string(r.mrna_id + ":" + std::to_string(r.start), r.window);
    const auto match = seed_match_at(it->second, window, static_cast<std::int64_t>(k - 1));
    if (!match) {
      throw DataError("build_site_dataset: window at " + r.mrna_id + ":" + std::to_string(r.start) +
                      " has no seed match for '" + r.mirna_id + "'");
    }
    out.push_back(PairExample{it->second, CandidateTargetSite{r.mrna_id, r.start, k, *match, std::move(window)},
                              label, Provenance::Real});
  };
  for (const SiteRecord& r : positives) add(r, 1);
  for (const SiteRecord& r : negatives) add(r, 0);
  Rng rng(seed);
  for (std::size_t i = out.size() - 1; i > 0; --i) {
    std::swap(out[i], out[uniform_index(rng, i)]);
  }
  return out;
}

int gene_level_label(std::span<const int> site_predictions) {
  if (site_predictions.empty()) throw DataError("gene_level_label: no site predictions");
  return std::ranges::any_of(site_predictions, [](int p) { return p == 1; }) ? 1 : 0;
}

void write_pairs_tsv(std::ostream& out, std::span<const PairExample> pairs) {
  out << kPairsHeader << '\n';
  for (const PairExample& p : pairs) {
    out << p.mirna.id() << '\t' << p.mirna.letters() << '\t' << p.cts.mrna_id << '\t'
        << p.cts.start << '\t' << p.cts.window.letters() << '\t' << to_string(p.cts.match) << '\t'
        << p.label << '\t' << to_string(p.provenance) << '\n';
  }
}

std::vector<PairExample> read_pairs_tsv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("pairs TSV: missing header line");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kPairsHeader) throw DataError("pairs TSV: unexpected header '" + line + "'");
  std::vector<PairExample> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cols = split_tabs(line);
    if (cols.size() != 8) {
      throw DataError("pairs TSV line " + std::to_string(line_no) + ": expected 8 columns, got " +
                      std::to_string(cols.size()));
    }
    RnaSequence mirna = RnaSequence::from_string(std::string(cols[0]), cols[1]);
    const std::size_t start = parse_count(cols[3], line_no, "cts_start");
    RnaSequence window =
        RnaSequence::from_string(std::string(cols[2]) + ":" + std::string(cols[3]), cols[4]);
    const SeedMatchType match = parse_seed_match_type(cols[5]);
    int label;
    if (cols[6] == "1") {
      label = 1;
    } else if (cols[6] == "0") {
      label = 0;
    } else {
      throw DataError("pairs TSV line " + std::to_string(line_no) + ": label must be 0 or 1");
    }
    Provenance prov;
    if (cols[7] == "REAL") {
      prov = Provenance::Real;
    } else if (cols[7] == "MOCK") {
      prov = Provenance::Mock;
    } else {
      throw DataError("pairs TSV line " + std::to_string(line_no) + ": provenance must be REAL or MOCK");
    }
    if (prov == Provenance::Mock && label != 0) {
      throw DataError("pairs TSV line " + std::to_string(line_no) + ": MOCK pair labelled 1");
    }
    const std::size_t k = window.size();
    out.push_back(PairExample{std::move(mirna),
                              CandidateTargetSite{std::string(cols[2]), start, k, match, std::move(window)},
                              label, prov});
  }
  return out;
}

void write_pairs_file(const std::string& path, std::span<const PairExample> pairs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  write_pairs_tsv(out, pairs);
  if (!out) throw DataError("write failed for '" + path + "'");
}

std::vector<PairExample> read_pairs_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open pairs TSV '" + path + "'");
  return read_pairs_tsv(in);
}

}  // namespace deeptarget
