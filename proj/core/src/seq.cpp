#include "deeptarget/seq.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <sstream>

#include "deeptarget/error.hpp"
#include "deeptarget/nn/init.hpp"

namespace deeptarget {

namespace {

void require_biological(Nucleotide n, const char* what) {
  if (n == Nucleotide::Pad) throw DataError(std::string(what) + ": PAD is not a biological base");
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

char to_char(Nucleotide n) {
  switch (n) {
    case Nucleotide::A: return 'A';
    case Nucleotide::C: return 'C';
    case Nucleotide::G: return 'G';
    case Nucleotide::U: return 'U';
    case Nucleotide::Pad: return '-';
  }
  return '?';
}

Nucleotide nucleotide_from_char(char c) {
  switch (std::toupper(static_cast<unsigned char>(c))) {
    case 'A': return Nucleotide::A;
    case 'C': return Nucleotide::C;
    case 'G': return Nucleotide::G;
    case 'U':
    case 'T': return Nucleotide::U;
    default: break;
  }
  throw DataError(std::string("illegal nucleotide character '") + c + "'");
}

Nucleotide complement(Nucleotide n) {
  switch (n) {
    case Nucleotide::A: return Nucleotide::U;
    case Nucleotide::C: return Nucleotide::G;
    case Nucleotide::G: return Nucleotide::C;
    case Nucleotide::U: return Nucleotide::A;
    case Nucleotide::Pad: break;
  }
  throw DataError("complement: PAD has no complement");
}

bool wc_pair(Nucleotide a, Nucleotide b) {
  require_biological(a, "wc_pair");
  require_biological(b, "wc_pair");
  return complement(a) == b;
}

bool wobble_pair(Nucleotide a, Nucleotide b) {
  require_biological(a, "wobble_pair");
  require_biological(b, "wobble_pair");
  return (a == Nucleotide::G && b == Nucleotide::U) || (a == Nucleotide::U && b == Nucleotide::G);
}

RnaSequence::RnaSequence(std::string id, std::vector<Nucleotide> bases)
    : id_(std::move(id)), bases_(std::move(bases)) {
  if (bases_.empty()) throw DataError("sequence '" + id_ + "' is empty");
  if (std::ranges::find(bases_, Nucleotide::Pad) != bases_.end()) {
    throw DataError("sequence '" + id_ + "' contains PAD");
  }
}

RnaSequence RnaSequence::from_string(std::string id, std::string_view letters) {
  std::vector<Nucleotide> bases;
  bases.reserve(letters.size());
  for (char c : letters) bases.push_back(nucleotide_from_char(c));
  return RnaSequence(std::move(id), std::move(bases));
}

std::string RnaSequence::letters() const {
  std::string out;
  out.reserve(bases_.size());
  for (Nucleotide n : bases_) out.push_back(to_char(n));
  return out;
}

RnaSequence RnaSequence::slice(std::size_t start, std::size_t length, std::string id) const {
  if (start + length > bases_.size()) throw DataError("slice out of range for '" + id_ + "'");
  return RnaSequence(std::move(id), std::vector<Nucleotide>(bases_.begin() + start,
                                                           bases_.begin() + start + length));
}

RnaSequence RnaSequence::reverse_complement(std::string id) const {
  std::vector<Nucleotide> out(bases_.rbegin(), bases_.rend());
  for (Nucleotide& n : out) n = complement(n);
  return RnaSequence(std::move(id), std::move(out));
}

FastaParseResult parse_fasta(std::istream& in) {
  FastaParseResult result;
  std::string line;
  std::string id;
  std::string letters;
  bool in_record = false;
  bool has_n = false;
  std::size_t line_no = 0;

  auto flush = [&] {
    if (!in_record) return;
    if (has_n) {
      ++result.rejected;
    } else if (letters.empty()) {
      throw DataError("FASTA record '" + id + "' has an empty sequence");
    } else {
      result.records.push_back(RnaSequence::from_string(id, letters));
    }
    letters.clear();
    has_n = false;
  };

  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = trim(line);
    if (view.empty()) continue;
    if (view.front() == '>') {
      flush();
      const std::string_view header = trim(view.substr(1));
      const auto end = header.find_first_of(" \t");
      id = std::string(header.substr(0, end));
      if (id.empty()) throw DataError("FASTA line " + std::to_string(line_no) + ": empty header");
      in_record = true;
      continue;
    }
    if (!in_record) {
      throw DataError("FASTA line " + std::to_string(line_no) + ": sequence before any header");
    }
    for (char c : view) {
      const char u = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      if (u == 'N') {
        has_n = true;
      } else if (u == 'A' || u == 'C' || u == 'G' || u == 'U' || u == 'T') {
        letters.push_back(u == 'T' ? 'U' : u);
      } else {
        throw DataError("FASTA line " + std::to_string(line_no) + ": illegal character '" +
                        std::string(1, c) + "' in record '" + id + "'");
      }
    }
  }
  flush();
  return result;
}

FastaParseResult parse_fasta_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_fasta(in);
}

FastaParseResult read_fasta_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open FASTA file '" + path + "'");
  return parse_fasta(in);
}

std::string to_fasta(std::span<const RnaSequence> records) {
  constexpr std::size_t kWidth = 60;
  std::string out;
  for (const RnaSequence& r : records) {
    out += '>';
    out += r.id();
    out += '\n';
    const std::string letters = r.letters();
    for (std::size_t i = 0; i < letters.size(); i += kWidth) {
      out.append(letters, i, kWidth);
      out += '\n';
    }
  }
  return out;
}

nn::NumericArray one_hot_encode(const RnaSequence& seq) {
  nn::NumericArray out({seq.size(), kBaseCount});
  for (std::size_t t = 0; t < seq.size(); ++t) {
    out.at(t, static_cast<std::size_t>(seq[t])) = 1.0;
  }
  return out;
}

IndexSeq pad_to(const RnaSequence& seq, std::size_t length) {
  if (seq.size() > length) {
    throw DataError("pad_to: sequence '" + seq.id() + "' of length " + std::to_string(seq.size()) +
                    " exceeds target length " + std::to_string(length));
  }
  IndexSeq out(length, kPadIndex);
  for (std::size_t t = 0; t < seq.size(); ++t) out[t] = static_cast<std::uint8_t>(seq[t]);
  return out;
}

EmbeddingTable::EmbeddingTable(nn::Param& param) : param_(&param), writable_(true) {
  if (param.value.rows() != kAlphabetSize || param.value.cols() != kEmbedDim) {
    throw ShapeError("EmbeddingTable: expected a 5x4 parameter, got " +
                     param.value.shape_string());
  }
}

EmbeddingTable::EmbeddingTable(const nn::Param& param)
    : EmbeddingTable(const_cast<nn::Param&>(param)) {
  writable_ = false;
}

void EmbeddingTable::require_writable() const {
  if (!writable_) throw ShapeError("EmbeddingTable: view is read-only");
}

void EmbeddingTable::add_param(nn::ParamStore& store, const std::string& name) {
  store.add(name, {kAlphabetSize, kEmbedDim});
}

void EmbeddingTable::init(nn::Param& param, Rng& rng) {
  nn::uniform_fill(param.value, -0.5, 0.5, rng);
}

nn::NumericArray EmbeddingTable::embed(std::span<const std::uint8_t> indices) const {
  nn::NumericArray out({indices.size(), kEmbedDim});
  for (std::size_t t = 0; t < indices.size(); ++t) {
    if (indices[t] >= kAlphabetSize) {
      throw ShapeError("embed: index " + std::to_string(indices[t]) + " out of range");
    }
    for (std::size_t d = 0; d < kEmbedDim; ++d) out.at(t, d) = param_->value.at(indices[t], d);
  }
  return out;
}

void EmbeddingTable::backward(std::span<const std::uint8_t> indices, const nn::NumericArray& d_out) {
  require_writable();
  if (!param_->trainable) return;
  if (d_out.rows() != indices.size() || d_out.cols() != kEmbedDim) {
    throw ShapeError("EmbeddingTable::backward: gradient shape " + d_out.shape_string());
  }
  for (std::size_t t = 0; t < indices.size(); ++t) {
    for (std::size_t d = 0; d < kEmbedDim; ++d) param_->grad.at(indices[t], d) += d_out.at(t, d);
  }
}

nn::SeqBatch EmbeddingTable::embed_batch(std::span<const IndexSeq> batch) const {
  if (batch.empty()) throw ShapeError("embed_batch: empty batch");
  const auto steps = static_cast<Eigen::Index>(batch.front().size());
  const auto size = static_cast<Eigen::Index>(batch.size());
  nn::SeqBatch out(kEmbedDim, steps, size);
  const auto table = param_->value.matrix();
  for (Eigen::Index b = 0; b < size; ++b) {
    const IndexSeq& seq = batch[static_cast<std::size_t>(b)];
    if (static_cast<Eigen::Index>(seq.size()) != steps) {
      throw ShapeError("embed_batch: sequences must share one padded length");
    }
    for (Eigen::Index t = 0; t < steps; ++t) {
      const std::uint8_t idx = seq[static_cast<std::size_t>(t)];
      if (idx >= kAlphabetSize) throw ShapeError("embed_batch: index out of range");
      out.data().col(t * size + b) = table.row(idx).transpose();
    }
  }
  return out;
}

void EmbeddingTable::backward_batch(std::span<const IndexSeq> batch, const nn::SeqBatch& d_out) {
  require_writable();
  if (!param_->trainable) return;
  auto grad = param_->grad.matrix();
  const auto size = static_cast<Eigen::Index>(batch.size());
  for (Eigen::Index b = 0; b < size; ++b) {
    const IndexSeq& seq = batch[static_cast<std::size_t>(b)];
    for (Eigen::Index t = 0; t < static_cast<Eigen::Index>(seq.size()); ++t) {
      grad.row(seq[static_cast<std::size_t>(t)]) += d_out.data().col(t * size + b).transpose();
    }
  }
}

nn::NumericArray embed(std::span<const std::uint8_t> indices, const EmbeddingTable& table) {
  return table.embed(indices);
}

}  // namespace deeptarget
