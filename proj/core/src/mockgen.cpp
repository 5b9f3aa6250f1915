#include "deeptarget/mockgen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace deeptarget {

void MockConfig::validate() const {
  if (max_retries < 1) throw DataError("MockConfig: max_retries must be >= 1");
  if (std::isnan(score_threshold) || score_threshold == -std::numeric_limits<double>::infinity()) {
    throw DataError("MockConfig: score_threshold must be a number");
  }
}

SeedIndex::SeedIndex(std::span<const RnaSequence> mirnas) {
  for (const RnaSequence& m : mirnas) insert(m);
}

std::optional<std::uint16_t> SeedIndex::seed_key(const RnaSequence& seq) {
  if (seq.size() < 8) return std::nullopt;
  std::uint16_t key = 0;
  for (std::size_t i = 1; i <= 7; ++i) {
    key = static_cast<std::uint16_t>((key << 2) | static_cast<std::uint16_t>(seq[i]));
  }
  return key;
}

void SeedIndex::insert(const RnaSequence& mirna) {
  if (auto key = seed_key(mirna)) keys_.insert(*key);
}

bool SeedIndex::contains_seed_of(const RnaSequence& seq) const {
  const auto key = seed_key(seq);
  return key && keys_.contains(*key);
}

RnaSequence fisher_yates(const RnaSequence& seq, Rng& rng) {
  std::vector<Nucleotide> bases = seq.bases();
  for (std::size_t i = bases.size() - 1; i > 0; --i) {
    std::swap(bases[i], bases[uniform_index(rng, i)]);
  }
  return RnaSequence(seq.id(), std::move(bases));
}

RnaSequence generate_mock(const RnaSequence& real, const SeedIndex& index, const MockConfig& cfg,
                          Rng& rng) {
  if (real.size() < 8) throw DataError("generate_mock: '" + real.id() + "' shorter than 8");
  for (std::size_t attempt = 0; attempt < cfg.max_retries; ++attempt) {
    RnaSequence candidate = fisher_yates(real, rng);
    if (!index.contains_seed_of(candidate)) {
      return RnaSequence(real.id() + "_mock", candidate.bases());
    }
  }
  throw MockGenerationError("generate_mock: no shuffle of '" + real.id() + "' escaped the seed index in " +
                            std::to_string(cfg.max_retries) + " attempts");
}

double complementarity_score(const RnaSequence& mirna, const RnaSequence& window,
                             const AlignmentScoring& scoring) {
  const std::size_t n = mirna.size();
  const std::size_t m = window.size();
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  // Rolling rows of the Gotoh recurrences: h (any), e (gap along window), f (gap along miRNA).
  std::vector<double> h_prev(m + 1, 0.0), h_cur(m + 1, 0.0);
  std::vector<double> f_prev(m + 1, kNegInf), f_cur(m + 1, kNegInf);
  double best = 0.0;
  for (std::size_t i = 1; i <= n; ++i) {
    const Nucleotide a = mirna[n - i];  // reverse(mirna)[i-1]
    h_cur[0] = 0.0;
    f_cur[0] = kNegInf;
    double e = kNegInf;
    for (std::size_t j = 1; j <= m; ++j) {
      const Nucleotide b = window[j - 1];
      const double pair = wc_pair(a, b) ? scoring.watson_crick
                          : wobble_pair(a, b) ? scoring.wobble
                                              : scoring.mismatch;
      e = std::max(h_cur[j - 1] + scoring.gap_open, e + scoring.gap_extend);
      f_cur[j] = std::max(h_prev[j] + scoring.gap_open, f_prev[j] + scoring.gap_extend);
      const double h = std::max({0.0, h_prev[j - 1] + pair, e, f_cur[j]});
      h_cur[j] = h;
      best = std::max(best, h);
    }
    std::swap(h_prev, h_cur);
    std::swap(f_prev, f_cur);
  }
  return best;
}

NegativeBuildResult build_negative_pairs(std::span<const PairExample> positives,
                                         const SeedIndex& index, const MockConfig& cfg) {
  cfg.validate();
  NegativeBuildResult result;
  for (std::size_t ordinal = 0; ordinal < positives.size(); ++ordinal) {
    const PairExample& pos = positives[ordinal];
    if (pos.label != 1) throw DataError("build_negative_pairs: input pair is not labelled positive");
    Rng rng(derive_seed(cfg.rng_seed, ordinal));
    std::optional<RnaSequence> mock;
    try {
      mock = generate_mock(pos.mirna, index, cfg, rng);
    } catch (const MockGenerationError&) {
      ++result.generation_failures;
      continue;
    }
    const RnaSequence& window = pos.cts.window;
    std::optional<SeedMatchType> best;
    for (std::size_t anchor = 7; anchor < window.size(); ++anchor) {
      const auto match = seed_match_at(*mock, window, static_cast<std::int64_t>(anchor));
      if (match && (!best || *match > *best)) best = match;
    }
    if (!best) {
      ++result.no_seed_match;
      continue;
    }
    if (complementarity_score(*mock, window) < cfg.score_threshold) {
      ++result.below_threshold;
      continue;
    }
    CandidateTargetSite cts = pos.cts;
    cts.match = *best;
    result.pairs.push_back(PairExample{std::move(*mock), std::move(cts), 0, Provenance::Mock});
  }
  return result;
}

}  // namespace deeptarget
