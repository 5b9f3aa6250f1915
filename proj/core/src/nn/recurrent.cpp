#include "deeptarget/nn/recurrent.hpp"

#include "deeptarget/error.hpp"
#include "deeptarget/nn/init.hpp"

namespace deeptarget::nn {

using Eigen::Index;

namespace {

template <typename Derived>
auto sigmoid(const Eigen::ArrayBase<Derived>& x) {
  return 1.0 / (1.0 + (-x).exp());
}

// tanh through the vectorized exp; agrees with std::tanh to a few ulp in absolute terms.
template <typename Derived>
auto fast_tanh(const Eigen::ArrayBase<Derived>& x) {
  return 2.0 / (1.0 + (-2.0 * x).exp()) - 1.0;
}

Mat initial_state(const Mat* given, Index rows, Index batch, const char* what) {
  if (given == nullptr || given->size() == 0) return Mat::Zero(rows, batch);
  if (given->rows() != rows || given->cols() != batch) {
    throw ShapeError(std::string("RecurrentCell: ") + what + " has wrong shape");
  }
  return *given;
}

// [h0, h_0, ..., h_{T-2}] laid out like the sequence batch.
Mat shifted_previous(const Mat& h0, const SeqBatch& hidden) {
  const Index b = hidden.batch();
  const Index t = hidden.steps();
  Mat out(hidden.features(), t * b);
  out.leftCols(b) = h0;
  if (t > 1) out.rightCols((t - 1) * b) = hidden.data().leftCols((t - 1) * b);
  return out;
}

}  // namespace

std::string_view to_string(CellKind kind) { return kind == CellKind::Gru ? "gru" : "lstm"; }

CellKind parse_cell_kind(std::string_view text) {
  if (text == "gru" || text == "GRU") return CellKind::Gru;
  if (text == "lstm" || text == "LSTM") return CellKind::Lstm;
  throw DataError("unknown cell kind '" + std::string(text) + "'");
}

std::size_t gate_count(CellKind kind) { return kind == CellKind::Gru ? 3 : 4; }

SeqBatch::SeqBatch(Index features, Index steps, Index batch)
    : data_(Mat::Zero(features, steps * batch)), steps_(steps), batch_(batch) {}

SeqBatch::SeqBatch(Mat data, Index steps, Index batch)
    : data_(std::move(data)), steps_(steps), batch_(batch) {
  if (data_.cols() != steps * batch) throw ShapeError("SeqBatch: column count != steps * batch");
}

SeqBatch SeqBatch::from_steps(const std::vector<Vec>& steps) {
  if (steps.empty()) throw ShapeError("SeqBatch::from_steps: empty sequence");
  SeqBatch out(steps.front().size(), static_cast<Index>(steps.size()), 1);
  for (std::size_t t = 0; t < steps.size(); ++t) {
    if (steps[t].size() != out.features()) throw ShapeError("SeqBatch::from_steps: ragged steps");
    out.data_.col(static_cast<Index>(t)) = steps[t];
  }
  return out;
}

SeqBatch SeqBatch::reversed() const {
  SeqBatch out(features(), steps_, batch_);
  for (Index t = 0; t < steps_; ++t) out.step(t) = step(steps_ - 1 - t);
  return out;
}

void add_cell_params(ParamStore& store, const std::string& prefix, CellKind kind,
                     std::size_t input_size, std::size_t hidden_size) {
  const std::size_t g = gate_count(kind) * hidden_size;
  store.add(prefix + ".w_input", {g, input_size});
  store.add(prefix + ".w_hidden", {g, hidden_size});
  store.add(prefix + ".bias", {g});
}

void init_cell_params(ParamStore& store, const std::string& prefix, Rng& rng) {
  Param& wi = store.at(prefix + ".w_input");
  Param& wh = store.at(prefix + ".w_hidden");
  const std::size_t n_h = wh.value.cols();
  const std::size_t gates = wi.value.rows() / n_h;
  for (std::size_t k = 0; k < gates; ++k) {
    glorot_fill_rows(wi.value, k * n_h, n_h, rng);
    glorot_fill_rows(wh.value, k * n_h, n_h, rng);
  }
  store.at(prefix + ".bias").value.fill(0.0);
}

RecurrentCell::RecurrentCell(CellKind kind, ParamStore& store, const std::string& prefix)
    : kind_(kind),
      writable_(true),
      w_input_(&store.at(prefix + ".w_input")),
      w_hidden_(&store.at(prefix + ".w_hidden")),
      bias_(&store.at(prefix + ".bias")),
      input_size_(w_input_->value.cols()),
      hidden_size_(w_hidden_->value.cols()) {
  check_shapes(prefix);
}

// The const binding never writes through these pointers: backward() refuses to run.
RecurrentCell::RecurrentCell(CellKind kind, const ParamStore& store, const std::string& prefix)
    : kind_(kind),
      writable_(false),
      w_input_(const_cast<Param*>(&store.at(prefix + ".w_input"))),
      w_hidden_(const_cast<Param*>(&store.at(prefix + ".w_hidden"))),
      bias_(const_cast<Param*>(&store.at(prefix + ".bias"))),
      input_size_(w_input_->value.cols()),
      hidden_size_(w_hidden_->value.cols()) {
  check_shapes(prefix);
}

void RecurrentCell::check_shapes(const std::string& prefix) const {
  const std::size_t g = gate_count(kind_) * hidden_size_;
  if (w_input_->value.rows() != g || w_hidden_->value.rows() != g || bias_->value.size() != g) {
    throw ShapeError("RecurrentCell: parameter shapes under '" + prefix +
                     "' do not match the cell kind");
  }
}

SeqBatch RecurrentCell::forward(const SeqBatch& xs, RecurrentTape* tape, const Mat* h0,
                                const Mat* c0) const {
  if (static_cast<std::size_t>(xs.features()) != input_size_) {
    throw ShapeError("RecurrentCell: input width " + std::to_string(xs.features()) +
                     " != " + std::to_string(input_size_));
  }
  if (xs.steps() < 1) throw ShapeError("RecurrentCell: empty sequence");
  RecurrentTape local;
  RecurrentTape& t = tape ? *tape : local;
  const Index n = static_cast<Index>(hidden_size_);
  t.inputs = xs;
  t.h0 = initial_state(h0, n, xs.batch(), "h0");
  t.c0 = kind_ == CellKind::Lstm ? initial_state(c0, n, xs.batch(), "c0") : Mat();
  return kind_ == CellKind::Gru ? forward_gru(xs, t) : forward_lstm(xs, t);
}

SeqBatch RecurrentCell::forward_gru(const SeqBatch& xs, RecurrentTape& tape) const {
  const Index n = static_cast<Index>(hidden_size_);
  const Index b = xs.batch();
  const Index steps = xs.steps();
  const auto wi = w_input_->value.matrix();
  const auto wh = w_hidden_->value.matrix();
  const auto bias = bias_->value.matrix();

  Mat pre = wi * xs.data();
  pre.colwise() += bias.col(0);

  tape.hidden = SeqBatch(n, steps, b);
  tape.gates = SeqBatch(3 * n, steps, b);
  tape.aux = SeqBatch(n, steps, b);
  Mat h = tape.h0;
  Mat zr(2 * n, b);
  Mat cand(n, b);
  for (Index s = 0; s < steps; ++s) {
    auto a = pre.middleCols(s * b, b);
    zr.noalias() = wh.topRows(2 * n) * h;
    zr += a.topRows(2 * n);
    auto gates = tape.gates.step(s);
    gates.topRows(2 * n) = sigmoid(zr.array()).matrix();
    auto rh = tape.aux.step(s);
    rh = gates.middleRows(n, n).cwiseProduct(h);
    cand.noalias() = wh.bottomRows(n) * rh;
    cand += a.bottomRows(n);
    gates.bottomRows(n) = fast_tanh(cand.array()).matrix();
    h.array() += gates.topRows(n).array() * (gates.bottomRows(n).array() - h.array());
    tape.hidden.step(s) = h;
  }
  return tape.hidden;
}

SeqBatch RecurrentCell::forward_lstm(const SeqBatch& xs, RecurrentTape& tape) const {
  const Index n = static_cast<Index>(hidden_size_);
  const Index b = xs.batch();
  const Index steps = xs.steps();
  const auto wi = w_input_->value.matrix();
  const auto wh = w_hidden_->value.matrix();
  const auto bias = bias_->value.matrix();

  Mat pre = wi * xs.data();
  pre.colwise() += bias.col(0);

  tape.hidden = SeqBatch(n, steps, b);
  tape.gates = SeqBatch(4 * n, steps, b);
  tape.cells = SeqBatch(n, steps, b);
  tape.aux = SeqBatch(n, steps, b);
  Mat h = tape.h0;
  Mat c = tape.c0;
  Mat a(4 * n, b);
  for (Index s = 0; s < steps; ++s) {
    a.noalias() = wh * h;
    a += pre.middleCols(s * b, b);
    auto gates = tape.gates.step(s);
    gates.topRows(3 * n) = sigmoid(a.topRows(3 * n).array()).matrix();
    gates.bottomRows(n) = fast_tanh(a.bottomRows(n).array()).matrix();
    c = gates.middleRows(n, n).cwiseProduct(c) + gates.topRows(n).cwiseProduct(gates.bottomRows(n));
    auto tc = tape.aux.step(s);
    tc = fast_tanh(c.array()).matrix();
    h = gates.middleRows(2 * n, n).cwiseProduct(tc);
    tape.cells.step(s) = c;
    tape.hidden.step(s) = h;
  }
  return tape.hidden;
}

RecurrentGrads RecurrentCell::backward(const RecurrentTape& tape, const SeqBatch& d_hidden) {
  if (!writable_) throw ShapeError("RecurrentCell::backward: cell is bound read-only");
  if (d_hidden.features() != tape.hidden.features() || d_hidden.steps() != tape.hidden.steps() ||
      d_hidden.batch() != tape.hidden.batch()) {
    throw ShapeError("RecurrentCell::backward: upstream gradient does not match the tape");
  }
  if (static_cast<std::size_t>(tape.inputs.features()) != input_size_) {
    throw ShapeError("RecurrentCell::backward: tape was recorded by a different cell");
  }
  return kind_ == CellKind::Gru ? backward_gru(tape, d_hidden) : backward_lstm(tape, d_hidden);
}

RecurrentGrads RecurrentCell::backward_gru(const RecurrentTape& tape, const SeqBatch& d_hidden) {
  const Index n = static_cast<Index>(hidden_size_);
  const Index b = tape.inputs.batch();
  const Index steps = tape.inputs.steps();
  const auto wi = w_input_->value.matrix();
  const auto wh = w_hidden_->value.matrix();

  const Mat h_prev_all = shifted_previous(tape.h0, tape.hidden);
  SeqBatch d_pre(3 * n, steps, b);
  Mat dh_next = Mat::Zero(n, b);
  Mat drh(n, b);
  for (Index s = steps - 1; s >= 0; --s) {
    const auto h_prev = h_prev_all.middleCols(s * b, b).array();
    const auto gates = tape.gates.step(s);
    const auto z = gates.topRows(n).array();
    const auto r = gates.middleRows(n, n).array();
    const auto c = gates.bottomRows(n).array();
    const Mat dh = d_hidden.step(s) + dh_next;
    auto dp = d_pre.step(s);

    dp.bottomRows(n) = (dh.array() * z * (1.0 - c * c)).matrix();
    drh.noalias() = wh.bottomRows(n).transpose() * dp.bottomRows(n);
    dp.middleRows(n, n) = (drh.array() * h_prev * r * (1.0 - r)).matrix();
    dp.topRows(n) = (dh.array() * (c - h_prev) * z * (1.0 - z)).matrix();

    dh_next = (dh.array() * (1.0 - z) + drh.array() * r).matrix();
    dh_next.noalias() += wh.topRows(2 * n).transpose() * dp.topRows(2 * n);
  }

  auto gwi = w_input_->grad.matrix();
  auto gwh = w_hidden_->grad.matrix();
  auto gb = bias_->grad.matrix();
  gwi.noalias() += d_pre.data() * tape.inputs.data().transpose();
  gwh.topRows(2 * n).noalias() += d_pre.data().topRows(2 * n) * h_prev_all.transpose();
  gwh.bottomRows(n).noalias() += d_pre.data().bottomRows(n) * tape.aux.data().transpose();
  gb.col(0) += d_pre.data().rowwise().sum();

  RecurrentGrads out;
  out.inputs = SeqBatch(Mat(wi.transpose() * d_pre.data()), steps, b);
  out.h0 = std::move(dh_next);
  return out;
}

RecurrentGrads RecurrentCell::backward_lstm(const RecurrentTape& tape, const SeqBatch& d_hidden) {
  const Index n = static_cast<Index>(hidden_size_);
  const Index b = tape.inputs.batch();
  const Index steps = tape.inputs.steps();
  const auto wi = w_input_->value.matrix();
  const auto wh = w_hidden_->value.matrix();

  const Mat h_prev_all = shifted_previous(tape.h0, tape.hidden);
  SeqBatch d_pre(4 * n, steps, b);
  Mat dh_next = Mat::Zero(n, b);
  Mat dc_next = Mat::Zero(n, b);
  Mat dc(n, b);
  for (Index s = steps - 1; s >= 0; --s) {
    const auto gates = tape.gates.step(s);
    const auto i = gates.topRows(n).array();
    const auto f = gates.middleRows(n, n).array();
    const auto o = gates.middleRows(2 * n, n).array();
    const auto g = gates.bottomRows(n).array();
    const auto tc = tape.aux.step(s).array();
    const Mat c_prev = s == 0 ? tape.c0 : Mat(tape.cells.step(s - 1));
    const Mat dh = d_hidden.step(s) + dh_next;
    auto dp = d_pre.step(s);

    dc = (dc_next.array() + dh.array() * o * (1.0 - tc * tc)).matrix();
    dp.topRows(n) = (dc.array() * g * i * (1.0 - i)).matrix();
    dp.middleRows(n, n) = (dc.array() * c_prev.array() * f * (1.0 - f)).matrix();
    dp.middleRows(2 * n, n) = (dh.array() * tc * o * (1.0 - o)).matrix();
    dp.bottomRows(n) = (dc.array() * i * (1.0 - g * g)).matrix();

    dc_next = (dc.array() * f).matrix();
    dh_next.noalias() = wh.transpose() * dp;
  }

  auto gwi = w_input_->grad.matrix();
  auto gwh = w_hidden_->grad.matrix();
  auto gb = bias_->grad.matrix();
  gwi.noalias() += d_pre.data() * tape.inputs.data().transpose();
  gwh.noalias() += d_pre.data() * h_prev_all.transpose();
  gb.col(0) += d_pre.data().rowwise().sum();

  RecurrentGrads out;
  out.inputs = SeqBatch(Mat(wi.transpose() * d_pre.data()), steps, b);
  out.h0 = std::move(dh_next);
  out.c0 = std::move(dc_next);
  return out;
}

void RecurrentLayer::add_params(ParamStore& store, const std::string& prefix, CellKind kind,
                                Direction direction, std::size_t input_size,
                                std::size_t hidden_size) {
  add_cell_params(store, prefix + ".fwd", kind, input_size, hidden_size);
  if (direction == Direction::Bi) {
    add_cell_params(store, prefix + ".bwd", kind, input_size, hidden_size);
  }
}

void RecurrentLayer::init_params(ParamStore& store, const std::string& prefix, Direction direction,
                                 Rng& rng) {
  init_cell_params(store, prefix + ".fwd", rng);
  if (direction == Direction::Bi) init_cell_params(store, prefix + ".bwd", rng);
}

RecurrentLayer::RecurrentLayer(CellKind kind, Direction direction, ParamStore& store,
                               const std::string& prefix)
    : direction_(direction), fwd_(kind, store, prefix + ".fwd") {
  if (direction == Direction::Bi) bwd_.emplace_back(kind, store, prefix + ".bwd");
}

RecurrentLayer::RecurrentLayer(CellKind kind, Direction direction, const ParamStore& store,
                               const std::string& prefix)
    : direction_(direction), fwd_(kind, store, prefix + ".fwd") {
  if (direction == Direction::Bi) bwd_.emplace_back(kind, store, prefix + ".bwd");
}

std::size_t RecurrentLayer::output_size() const {
  return fwd_.hidden_size() * (direction_ == Direction::Bi ? 2 : 1);
}

SeqBatch RecurrentLayer::forward(const SeqBatch& xs, LayerTape* tape) const {
  LayerTape local;
  LayerTape& t = tape ? *tape : local;
  SeqBatch out = fwd_.forward(xs, &t.forward);
  if (bwd_.empty()) return out;
  const SeqBatch back = bwd_.front().forward(xs.reversed(), &t.backward).reversed();
  const Index n = static_cast<Index>(fwd_.hidden_size());
  SeqBatch both(2 * n, xs.steps(), xs.batch());
  both.data().topRows(n) = out.data();
  both.data().bottomRows(n) = back.data();
  return both;
}

SeqBatch RecurrentLayer::backward(const LayerTape& tape, const SeqBatch& d_out) {
  if (bwd_.empty()) return fwd_.backward(tape.forward, d_out).inputs;
  const Index n = static_cast<Index>(fwd_.hidden_size());
  const Index steps = d_out.steps();
  const Index b = d_out.batch();
  SeqBatch d_fwd(Mat(d_out.data().topRows(n)), steps, b);
  SeqBatch d_bwd = SeqBatch(Mat(d_out.data().bottomRows(n)), steps, b).reversed();
  SeqBatch dx = fwd_.backward(tape.forward, d_fwd).inputs;
  dx.data() += bwd_.front().backward(tape.backward, d_bwd).inputs.reversed().data();
  return dx;
}

}  // namespace deeptarget::nn
