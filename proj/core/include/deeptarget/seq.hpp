#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "deeptarget/nn/array.hpp"
#include "deeptarget/nn/param_store.hpp"
#include "deeptarget/nn/recurrent.hpp"
#include "deeptarget/rng.hpp"

namespace deeptarget {

/// Index mapping is fixed: A=0, C=1, G=2, U=3, PAD=4.
enum class Nucleotide : std::uint8_t { A = 0, C = 1, G = 2, U = 3, Pad = 4 };

inline constexpr std::size_t kBaseCount = 4;
inline constexpr std::size_t kAlphabetSize = 5;  // including PAD
inline constexpr std::size_t kEmbedDim = 4;
inline constexpr std::uint8_t kPadIndex = 4;

char to_char(Nucleotide n);
/// Accepts ACGU and T (as U), case-insensitive. Throws DataError otherwise.
Nucleotide nucleotide_from_char(char c);

Nucleotide complement(Nucleotide n);
/// Watson-Crick pair: {A,U} or {C,G}. Throws on PAD.
bool wc_pair(Nucleotide a, Nucleotide b);
/// G-U wobble pair. Throws on PAD.
bool wobble_pair(Nucleotide a, Nucleotide b);

/// Biological RNA sequence, 5' to 3', never empty, never containing PAD.
class RnaSequence {
 public:
  RnaSequence(std::string id, std::vector<Nucleotide> bases);
  /// Parses `letters` (ACGU/T, any case).
  static RnaSequence from_string(std::string id, std::string_view letters);

  const std::string& id() const { return id_; }
  const std::vector<Nucleotide>& bases() const { return bases_; }
  std::size_t size() const { return bases_.size(); }
  Nucleotide operator[](std::size_t i) const { return bases_[i]; }

  std::string letters() const;
  /// Slice [start, start + length) under a new id.
  RnaSequence slice(std::size_t start, std::size_t length, std::string id) const;
  RnaSequence reverse_complement(std::string id) const;

  friend bool operator==(const RnaSequence&, const RnaSequence&) = default;

 private:
  std::string id_;
  std::vector<Nucleotide> bases_;
};

struct FastaParseResult {
  std::vector<RnaSequence> records;
  std::size_t rejected = 0;  // records dropped because they contain N
};

/// FASTA reader. Headers start with '>' and the id runs to the first
/// whitespace; sequence lines are concatenated, uppercased and T becomes U.
FastaParseResult parse_fasta(std::istream& in);
FastaParseResult parse_fasta_text(std::string_view text);
FastaParseResult read_fasta_file(const std::string& path);

/// FASTA with 60-column sequence lines.
std::string to_fasta(std::span<const RnaSequence> records);

/// n x 4 indicator matrix, one 1 per row.
nn::NumericArray one_hot_encode(const RnaSequence& seq);

using IndexSeq = std::vector<std::uint8_t>;

/// Indices of `seq` right-padded with PAD to `length`. Throws if seq is longer.
IndexSeq pad_to(const RnaSequence& seq, std::size_t length);

/// Non-owning view of a 5 x 4 trainable embedding parameter (one row per
/// code, PAD included).
class EmbeddingTable {
 public:
  explicit EmbeddingTable(nn::Param& param);
  /// Read-only view; the backward passes throw.
  explicit EmbeddingTable(const nn::Param& param);

  static void add_param(nn::ParamStore& store, const std::string& name);
  /// Uniform on [-0.5, 0.5].
  static void init(nn::Param& param, Rng& rng);

  const nn::NumericArray& weights() const { return param_->value; }
  bool trainable() const { return param_->trainable; }
  void set_trainable(bool on) { param_->trainable = on; }

  /// L x 4 rows looked up from the table.
  nn::NumericArray embed(std::span<const std::uint8_t> indices) const;
  /// Adds d_out rows into the gradient of the used rows; no-op when frozen.
  void backward(std::span<const std::uint8_t> indices, const nn::NumericArray& d_out);

  /// Batched lookup: 4 x (steps * batch) in SeqBatch layout.
  nn::SeqBatch embed_batch(std::span<const IndexSeq> batch) const;
  void backward_batch(std::span<const IndexSeq> batch, const nn::SeqBatch& d_out);

 private:
  void require_writable() const;

  nn::Param* param_;
  bool writable_;
};

/// Free-function form of `EmbeddingTable::embed`.
nn::NumericArray embed(std::span<const std::uint8_t> indices, const EmbeddingTable& table);

}  // namespace deeptarget
