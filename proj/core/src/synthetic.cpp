#include "deeptarget/synthetic.hpp"

#include <numeric>

#include "deeptarget/error.hpp"
#include "deeptarget/mockgen.hpp"

namespace deeptarget {

namespace {

Nucleotide random_base(Rng& rng) { return static_cast<Nucleotide>(uniform_index(rng, 3)); }

Nucleotide random_base_except(Nucleotide avoid, Rng& rng) {
  auto n = static_cast<Nucleotide>(uniform_index(rng, 2));
  if (static_cast<int>(n) >= static_cast<int>(avoid)) n = static_cast<Nucleotide>(static_cast<int>(n) + 1);
  return n;
}

RnaSequence random_sequence(std::string id, std::size_t length, Rng& rng) {
  std::vector<Nucleotide> bases(length);
  for (auto& b : bases) b = random_base(rng);
  return RnaSequence(std::move(id), std::move(bases));
}

// Window with a seed match of a random canonical type at anchor k-1, plus
// the complement of miRNA nucleotides 9.. when `extend` is set.
std::pair<RnaSequence, std::vector<bool>> plant_site(const RnaSequence& mirna, std::size_t k,
                                                     bool extend, double mismatch_rate,
                                                     std::string id, Rng& rng) {
  std::vector<Nucleotide> w(k);
  for (auto& b : w) b = random_base(rng);
  std::vector<bool> planted(k, false);
  const std::size_t anchor = k - 1;
  auto facing = [&](std::size_t i) { return anchor - (i - 1); };  // i is 1-based

  const auto type = static_cast<SeedMatchType>(uniform_index(rng, 3));
  const bool m8 = type == SeedMatchType::Eightmer || type == SeedMatchType::SevenmerM8;
  const bool a1 = type == SeedMatchType::Eightmer || type == SeedMatchType::SevenmerA1;
  w[anchor] = a1 ? Nucleotide::A : random_base_except(Nucleotide::A, rng);
  if (a1) planted[anchor] = true;
  for (std::size_t i = 2; i <= 7; ++i) {
    w[facing(i)] = complement(mirna[i - 1]);
    planted[facing(i)] = true;
  }
  const Nucleotide c8 = complement(mirna[7]);
  w[facing(8)] = m8 ? c8 : random_base_except(c8, rng);
  if (m8) planted[facing(8)] = true;
  if (extend) {
    for (std::size_t i = 9; i <= mirna.size() && i <= k; ++i) {
      const Nucleotide c = complement(mirna[i - 1]);
      w[facing(i)] = uniform_unit(rng) < mismatch_rate ? random_base_except(c, rng) : c;
      planted[facing(i)] = true;
    }
  }
  RnaSequence window(std::move(id), std::move(w));
  if (seed_match_at(mirna, window, static_cast<std::int64_t>(anchor)) != type) {
    throw DataError("synthetic benchmark: planted seed type did not survive construction");
  }
  return {std::move(window), std::move(planted)};
}

}  // namespace

SyntheticBenchmark make_synthetic_benchmark(const SyntheticConfig& cfg) {
  if (cfg.mirna_length < 8 || cfg.mirna_length > cfg.k) {
    throw DataError("synthetic benchmark: miRNA length must lie in [8, k]");
  }
  if (cfg.mirna_pool == 0 || cfg.positives == 0 || cfg.negatives == 0) {
    throw DataError("synthetic benchmark: pool and both classes must be non-empty");
  }
  if (!(cfg.mismatch_rate >= 0.0 && cfg.mismatch_rate <= 1.0)) {
    throw DataError("synthetic benchmark: mismatch_rate must lie in [0, 1]");
  }
  Rng rng(derive_seed(cfg.seed, 0));
  SyntheticBenchmark out;
  SeedIndex index;
  while (out.mirnas.size() < cfg.mirna_pool) {
    RnaSequence m = random_sequence("syn-miR-" + std::to_string(out.mirnas.size() + 1), cfg.mirna_length, rng);
    if (index.contains_seed_of(m)) continue;
    index.insert(m);
    out.mirnas.push_back(std::move(m));
  }

  struct Item {
    PairExample pair;
    std::vector<bool> planted;
  };
  std::vector<Item> items;
  items.reserve(cfg.positives + cfg.negatives);
  for (std::size_t n = 0; n < cfg.positives; ++n) {
    Rng r(derive_seed(cfg.seed, 1 + n));
    const RnaSequence& mirna = out.mirnas[uniform_index(r, out.mirnas.size() - 1)];
    const std::string mrna_id = "syn-pos-" + std::to_string(n);
    auto [window, planted] = plant_site(mirna, cfg.k, true, cfg.mismatch_rate, mrna_id + ":0", r);
    const auto match = *seed_match_at(mirna, window, static_cast<std::int64_t>(cfg.k - 1));
    items.push_back({PairExample{mirna, CandidateTargetSite{mrna_id, 0, cfg.k, match, std::move(window)}, 1,
                                 Provenance::Real},
                     std::move(planted)});
  }
  MockConfig mock_cfg;
  for (std::size_t n = 0; n < cfg.negatives; ++n) {
    Rng r(derive_seed(cfg.seed, 1 + cfg.positives + n));
    const RnaSequence& real = out.mirnas[uniform_index(r, out.mirnas.size() - 1)];
    const RnaSequence mock = generate_mock(real, index, mock_cfg, r);
    const std::string mrna_id = "syn-neg-" + std::to_string(n);
    auto [window, planted] = plant_site(mock, cfg.k, false, 0.0, mrna_id + ":0", r);
    const auto match = *seed_match_at(mock, window, static_cast<std::int64_t>(cfg.k - 1));
    items.push_back({PairExample{mock, CandidateTargetSite{mrna_id, 0, cfg.k, match, std::move(window)}, 0,
                                 Provenance::Mock},
                     std::move(planted)});
  }
  for (std::size_t i = items.size() - 1; i > 0; --i) std::swap(items[i], items[uniform_index(rng, i)]);
  for (auto& it : items) {
    out.pairs.push_back(std::move(it.pair));
    out.planted.push_back(std::move(it.planted));
  }
  return out;
}

}  // namespace deeptarget
