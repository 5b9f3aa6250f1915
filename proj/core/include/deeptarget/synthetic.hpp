#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "deeptarget/cts.hpp"
#include "deeptarget/seq.hpp"

namespace deeptarget {

/// Planted-complement benchmark. Positives pair a real miRNA with a window
/// holding a canonical seed match at its 3' end plus a noisy complement of
/// the miRNA's 3' part; negatives pair a mock miRNA with a window holding only
/// the mock's seed match. Every base not planted is uniform random.
struct SyntheticConfig {
  std::size_t positives = 2000;
  std::size_t negatives = 2000;
  std::size_t mirna_pool = 40;
  std::size_t mirna_length = 22;
  std::size_t k = kDefaultSiteLength;
  double mismatch_rate = 0.2;  // per planted base beyond the seed
  std::uint64_t seed = 7;
};

struct SyntheticBenchmark {
  std::vector<RnaSequence> mirnas;  // the real pool
  std::vector<PairExample> pairs;   // shuffled
  /// Per pair, one flag per window position: part of the planted binding site.
  std::vector<std::vector<bool>> planted;
};

SyntheticBenchmark make_synthetic_benchmark(const SyntheticConfig& cfg);

}  // namespace deeptarget
