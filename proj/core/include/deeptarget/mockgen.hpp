#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <unordered_set>
#include <vector>

#include "deeptarget/cts.hpp"
#include "deeptarget/error.hpp"
#include "deeptarget/rng.hpp"
#include "deeptarget/seq.hpp"

namespace deeptarget {

struct MockConfig {
  std::size_t max_retries = 100;
  double score_threshold = 0.0;
  std::uint64_t rng_seed = 1;

  void validate() const;
};

/// Thrown when no shuffle escapes the seed index within the retry budget.
class MockGenerationError : public DataError {
 public:
  using DataError::DataError;
};

/// Positions 2-8 seed 7-mers of a set of real miRNAs, packed two bits per base.
class SeedIndex {
 public:
  SeedIndex() = default;
  explicit SeedIndex(std::span<const RnaSequence> mirnas);

  /// Packed 7-mer at positions 2-8, or nullopt for sequences shorter than 8.
  static std::optional<std::uint16_t> seed_key(const RnaSequence& seq);

  void insert(const RnaSequence& mirna);
  bool contains_seed_of(const RnaSequence& seq) const;
  std::size_t size() const { return keys_.size(); }

 private:
  std::unordered_set<std::uint16_t> keys_;
};

/// Uniform random permutation: for i from n-1 down to 1 swap i with j ~ U[0, i].
RnaSequence fisher_yates(const RnaSequence& seq, Rng& rng);

/// Shuffles `real` until its seed is absent from `index`.
RnaSequence generate_mock(const RnaSequence& real, const SeedIndex& index, const MockConfig& cfg,
                          Rng& rng);

/// Pairing scores for the complementarity alignment.
struct AlignmentScoring {
  double watson_crick = 5.0;
  double wobble = 1.0;
  double mismatch = -4.0;
  double gap_open = -8.0;    // first position of a gap
  double gap_extend = -2.0;  // each further position
};

/// Best local alignment (affine gaps) of reverse(mirna) against `window`,
/// where aligned columns score by base pairing. Never negative.
double complementarity_score(const RnaSequence& mirna, const RnaSequence& window,
                             const AlignmentScoring& scoring = {});

struct NegativeBuildResult {
  std::vector<PairExample> pairs;
  std::size_t generation_failures = 0;
  std::size_t below_threshold = 0;
  std::size_t no_seed_match = 0;
};

/// One mock per positive replaces its miRNA; kept when the mock still has a
/// seed match in the window and clears the score threshold. Each positive
/// draws from its own stream derived from (cfg.rng_seed, ordinal).
NegativeBuildResult build_negative_pairs(std::span<const PairExample> positives,
                                         const SeedIndex& index, const MockConfig& cfg);

}  // namespace deeptarget
