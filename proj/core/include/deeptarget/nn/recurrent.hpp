#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "deeptarget/nn/array.hpp"
#include "deeptarget/nn/param_store.hpp"
#include "deeptarget/rng.hpp"

namespace deeptarget::nn {

enum class CellKind { Gru, Lstm };
enum class Direction { Uni, Bi };

std::string_view to_string(CellKind kind);
CellKind parse_cell_kind(std::string_view text);
std::size_t gate_count(CellKind kind);

/// A batch of equal-length sequences stored as one features x (steps*batch)
/// matrix; column `t * batch + b` holds step t of example b.
class SeqBatch {
 public:
  SeqBatch() = default;
  SeqBatch(Eigen::Index features, Eigen::Index steps, Eigen::Index batch);
  SeqBatch(Mat data, Eigen::Index steps, Eigen::Index batch);

  /// Single-example batch from per-step vectors.
  static SeqBatch from_steps(const std::vector<Vec>& steps);

  Eigen::Index features() const { return data_.rows(); }
  Eigen::Index steps() const { return steps_; }
  Eigen::Index batch() const { return batch_; }

  auto step(Eigen::Index t) { return data_.middleCols(t * batch_, batch_); }
  auto step(Eigen::Index t) const { return data_.middleCols(t * batch_, batch_); }
  Vec at(Eigen::Index t, Eigen::Index b) const { return data_.col(t * batch_ + b); }

  Mat& data() { return data_; }
  const Mat& data() const { return data_; }

  /// Same batch with the time axis reversed.
  SeqBatch reversed() const;

 private:
  Mat data_;
  Eigen::Index steps_ = 0;
  Eigen::Index batch_ = 0;
};

/// Forward-pass cache needed by `RecurrentCell::backward`.
struct RecurrentTape {
  SeqBatch inputs;
  Mat h0;
  Mat c0;
  SeqBatch hidden;
  SeqBatch gates;  // activated gate values, gate-major rows
  SeqBatch cells;  // LSTM: c_t
  SeqBatch aux;    // GRU: r_t * h_{t-1}; LSTM: tanh(c_t)
};

struct RecurrentGrads {
  SeqBatch inputs;
  Mat h0;
  Mat c0;
};

/// Registers zero-valued `<prefix>.w_input`, `<prefix>.w_hidden`, `<prefix>.bias`.
///
/// Gate blocks are stacked row-wise: GRU [update; reset; candidate],
/// LSTM [input; forget; output; cell candidate].
void add_cell_params(ParamStore& store, const std::string& prefix, CellKind kind,
                     std::size_t input_size, std::size_t hidden_size);

/// Glorot-uniform per gate block for both weight matrices, zero biases.
void init_cell_params(ParamStore& store, const std::string& prefix, Rng& rng);

/// GRU or LSTM cell over a whole sequence batch with exact BPTT.
///
/// GRU: z = s(Wz x + Uz h + bz), r = s(Wr x + Ur h + br),
///      c = tanh(W x + U (r * h) + b), h' = (1 - z) * h + z * c.
/// LSTM: c' = f * c + i * g, h' = o * tanh(c').
class RecurrentCell {
 public:
  RecurrentCell(CellKind kind, ParamStore& store, const std::string& prefix);
  /// Read-only binding; `backward` throws.
  RecurrentCell(CellKind kind, const ParamStore& store, const std::string& prefix);

  CellKind kind() const { return kind_; }
  std::size_t input_size() const { return input_size_; }
  std::size_t hidden_size() const { return hidden_size_; }

  /// Hidden state at every step. Null initial states mean zero.
  SeqBatch forward(const SeqBatch& xs, RecurrentTape* tape, const Mat* h0 = nullptr,
                   const Mat* c0 = nullptr) const;

  /// Reverse-mode pass for upstream gradients on every hidden state.
  /// Accumulates into the parameter gradients.
  RecurrentGrads backward(const RecurrentTape& tape, const SeqBatch& d_hidden);

 private:
  SeqBatch forward_gru(const SeqBatch& xs, RecurrentTape& tape) const;
  SeqBatch forward_lstm(const SeqBatch& xs, RecurrentTape& tape) const;
  RecurrentGrads backward_gru(const RecurrentTape& tape, const SeqBatch& d_hidden);
  RecurrentGrads backward_lstm(const RecurrentTape& tape, const SeqBatch& d_hidden);

  void check_shapes(const std::string& prefix) const;

  CellKind kind_;
  bool writable_;
  Param* w_input_;
  Param* w_hidden_;
  Param* bias_;
  std::size_t input_size_;
  std::size_t hidden_size_;
};

struct LayerTape {
  RecurrentTape forward;
  RecurrentTape backward;
};

/// One interaction layer: a forward cell, plus a time-reversed cell when
/// bidirectional. Bidirectional output concatenates [forward; backward]
/// per position.
class RecurrentLayer {
 public:
  RecurrentLayer(CellKind kind, Direction direction, ParamStore& store, const std::string& prefix);
  RecurrentLayer(CellKind kind, Direction direction, const ParamStore& store,
                 const std::string& prefix);

  static void add_params(ParamStore& store, const std::string& prefix, CellKind kind,
                         Direction direction, std::size_t input_size, std::size_t hidden_size);
  static void init_params(ParamStore& store, const std::string& prefix, Direction direction,
                          Rng& rng);

  std::size_t output_size() const;
  Direction direction() const { return direction_; }

  SeqBatch forward(const SeqBatch& xs, LayerTape* tape) const;
  SeqBatch backward(const LayerTape& tape, const SeqBatch& d_out);

 private:
  Direction direction_;
  RecurrentCell fwd_;
  std::vector<RecurrentCell> bwd_;  // empty or one cell
};

}  // namespace deeptarget::nn
