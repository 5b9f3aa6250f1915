#include "deeptarget/model.hpp"

#include <sstream>

#include <json.hpp>

#include "deeptarget/error.hpp"
#include "deeptarget/nn/init.hpp"

namespace deeptarget {

using Eigen::Index;
using nn::Mat;
using nn::SeqBatch;

namespace {

constexpr const char* kEmbedding = "embedding";
constexpr const char* kOutput = "output.weight";

std::string encoder_prefix(EncoderSide side) {
  return side == EncoderSide::Mirna ? "mirna_encoder" : "mrna_encoder";
}

std::string layer_prefix(std::size_t layer) { return "interaction." + std::to_string(layer); }

std::string direction_name(nn::Direction d) { return d == nn::Direction::Bi ? "bi" : "uni"; }

}  // namespace

// ---------------------------------------------------------------------------
// ArchitectureSpec

std::vector<std::size_t> ArchitectureSpec::widths_for_depth(std::size_t depth,
                                                            std::size_t ae_hidden) {
  if (depth < 1 || depth > 3) throw DataError("interaction depth must be 1, 2 or 3");
  std::vector<std::size_t> widths(depth, ae_hidden);
  widths[0] = 2 * ae_hidden;
  return widths;
}

std::size_t ArchitectureSpec::layer_output_width(std::size_t layer) const {
  return interaction_widths.at(layer) * (direction == nn::Direction::Bi ? 2 : 1);
}

void ArchitectureSpec::validate() const {
  if (embed_dim != kEmbedDim) throw DataError("ArchitectureSpec: embed_dim must be 4");
  if (ae_hidden < 1) throw DataError("ArchitectureSpec: ae_hidden must be >= 1");
  if (interaction_widths.empty() || interaction_widths.size() > 3) {
    throw DataError("ArchitectureSpec: interaction depth must be 1, 2 or 3");
  }
  if (interaction_widths.front() != 2 * ae_hidden) {
    throw DataError("ArchitectureSpec: first interaction width must equal 2 * ae_hidden");
  }
  for (std::size_t w : interaction_widths) {
    if (w < 1) throw DataError("ArchitectureSpec: interaction widths must be >= 1");
  }
  if (sequence_length < 1) throw DataError("ArchitectureSpec: sequence_length must be >= 1");
}

std::string ArchitectureSpec::render() const {
  std::ostringstream out;
  const std::string ae = "(" + std::to_string(embed_dim) + "-" + std::to_string(ae_hidden) + "-" +
                         std::to_string(embed_dim) + ")";
  out << "[" << ae << " || " << ae << "]-";
  if (direction == nn::Direction::Bi) out << "bi";
  out << "(";
  for (std::size_t i = 0; i < interaction_widths.size(); ++i) {
    if (i) out << "-";
    out << interaction_widths[i];
  }
  out << ")-2";
  return out.str();
}

std::size_t ArchitectureSpec::parameter_count() const {
  const std::size_t gates = nn::gate_count(cell);
  auto cell_params = [&](std::size_t in, std::size_t hidden) {
    return gates * hidden * (in + hidden + 1);
  };
  const std::size_t directions = direction == nn::Direction::Bi ? 2 : 1;
  std::size_t total = kAlphabetSize * embed_dim;
  total += 2 * cell_params(embed_dim, ae_hidden);
  std::size_t in = 2 * ae_hidden;
  for (std::size_t l = 0; l < interaction_widths.size(); ++l) {
    total += directions * cell_params(in, interaction_widths[l]);
    in = layer_output_width(l);
  }
  total += 2 * readout_width();
  return total;
}

std::string ArchitectureSpec::to_json() const {
  nlohmann::json j;
  j["embed_dim"] = embed_dim;
  j["ae_hidden"] = ae_hidden;
  j["interaction_widths"] = interaction_widths;
  j["direction"] = direction_name(direction);
  j["cell"] = std::string(nn::to_string(cell));
  j["sequence_length"] = sequence_length;
  return j.dump();
}

ArchitectureSpec ArchitectureSpec::from_json(std::string_view text) {
  ArchitectureSpec spec;
  try {
    const auto j = nlohmann::json::parse(text);
    spec.embed_dim = j.at("embed_dim").get<std::size_t>();
    spec.ae_hidden = j.at("ae_hidden").get<std::size_t>();
    spec.interaction_widths = j.at("interaction_widths").get<std::vector<std::size_t>>();
    const auto dir = j.at("direction").get<std::string>();
    if (dir == "uni") {
      spec.direction = nn::Direction::Uni;
    } else if (dir == "bi") {
      spec.direction = nn::Direction::Bi;
    } else {
      throw FormatError("ArchitectureSpec: unknown direction '" + dir + "'");
    }
    spec.cell = nn::parse_cell_kind(j.at("cell").get<std::string>());
    spec.sequence_length = j.at("sequence_length").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("ArchitectureSpec JSON: ") + e.what());
  }
  spec.validate();
  return spec;
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw DataError("TrainConfig: batch_size must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw DataError("TrainConfig: dropout must lie in [0, 1)");
  for (const auto* a : {&pretrain_adam, &finetune_adam}) {
    if (!(a->learning_rate > 0.0) || !(a->beta1 >= 0.0 && a->beta1 < 1.0) ||
        !(a->beta2 >= 0.0 && a->beta2 < 1.0) || !(a->epsilon > 0.0)) {
      throw DataError("TrainConfig: invalid Adam hyperparameters");
    }
  }
}

// ---------------------------------------------------------------------------
// Batches

PairBatch make_pair_batch(std::span<const PairExample* const> pairs, std::size_t length) {
  PairBatch out;
  out.mirna.reserve(pairs.size());
  out.mrna.reserve(pairs.size());
  out.labels.reserve(pairs.size());
  for (const PairExample* p : pairs) {
    out.mirna.push_back(pad_to(p->mirna, length));
    out.mrna.push_back(pad_to(p->cts.window, length));
    out.labels.push_back(p->label);
  }
  return out;
}

PairBatch make_pair_batch(std::span<const PairExample> pairs, std::size_t length) {
  std::vector<const PairExample*> ptrs;
  ptrs.reserve(pairs.size());
  for (const PairExample& p : pairs) ptrs.push_back(&p);
  return make_pair_batch(std::span<const PairExample* const>(ptrs), length);
}

// ---------------------------------------------------------------------------
// Autoencoder

AutoencoderModel::AutoencoderModel(const ArchitectureSpec& spec, const nn::NumericArray& embedding,
                                   std::uint64_t seed)
    : spec_(spec) {
  spec_.validate();
  Rng rng(seed);
  const std::size_t n_h = spec_.ae_hidden;
  nn::Param& emb = params_.add(kEmbedding, {kAlphabetSize, kEmbedDim});
  if (!emb.value.same_shape(embedding)) throw ShapeError("AutoencoderModel: embedding must be 5x4");
  emb.value = embedding;
  emb.trainable = false;
  nn::add_cell_params(params_, "encoder", spec_.cell, spec_.embed_dim, n_h);
  nn::add_cell_params(params_, "decoder", spec_.cell, n_h, n_h);
  params_.add("readout.weight", {spec_.embed_dim, n_h});
  params_.add("readout.bias", {spec_.embed_dim});
  nn::init_cell_params(params_, "encoder", rng);
  nn::init_cell_params(params_, "decoder", rng);
  nn::glorot_fill_rows(params_.at("readout.weight").value, 0, spec_.embed_dim, rng);
}

SeqBatch AutoencoderModel::embed(std::span<const IndexSeq> batch) const {
  return EmbeddingTable(params_.at(kEmbedding)).embed_batch(batch);
}

SeqBatch AutoencoderModel::encode(const SeqBatch& embedded) const {
  const nn::RecurrentCell encoder(spec_.cell, std::as_const(params_), "encoder");
  return encoder.forward(embedded, nullptr);
}

SeqBatch AutoencoderModel::reconstruct(const SeqBatch& embedded) const {
  const nn::RecurrentCell encoder(spec_.cell, std::as_const(params_), "encoder");
  const nn::RecurrentCell decoder(spec_.cell, std::as_const(params_), "decoder");
  const SeqBatch decoded = decoder.forward(encoder.forward(embedded, nullptr), nullptr);
  Mat out = params_.at("readout.weight").value.matrix() * decoded.data();
  out.colwise() += params_.at("readout.bias").value.matrix().col(0);
  return SeqBatch(std::move(out), embedded.steps(), embedded.batch());
}

double AutoencoderModel::accumulate_gradients(std::span<const IndexSeq> batch) {
  nn::RecurrentCell encoder(spec_.cell, params_, "encoder");
  nn::RecurrentCell decoder(spec_.cell, params_, "decoder");
  nn::Param& w = params_.at("readout.weight");
  nn::Param& b = params_.at("readout.bias");

  const SeqBatch x = embed(batch);
  nn::RecurrentTape enc_tape;
  nn::RecurrentTape dec_tape;
  const SeqBatch h = encoder.forward(x, &enc_tape);
  const SeqBatch d = decoder.forward(h, &dec_tape);
  Mat diff = w.value.matrix() * d.data();
  diff.colwise() += b.value.matrix().col(0);
  diff -= x.data();

  const double scale = 1.0 / static_cast<double>(batch.size());
  const double loss = diff.squaredNorm() * scale;
  const Mat d_recon = (2.0 * scale) * diff;
  w.grad.matrix().noalias() += d_recon * d.data().transpose();
  b.grad.matrix().col(0) += d_recon.rowwise().sum();
  const SeqBatch d_decoded(Mat(w.value.matrix().transpose() * d_recon), x.steps(), x.batch());
  const nn::RecurrentGrads dh = decoder.backward(dec_tape, d_decoded);
  encoder.backward(enc_tape, dh.inputs);
  return loss;
}

std::vector<nn::Vec> encode(const AutoencoderModel& ae, const nn::NumericArray& embedded) {
  if (embedded.cols() != kEmbedDim) throw ShapeError("encode: expected L x 4 embedded input");
  if (embedded.rows() != ae.spec().sequence_length) {
    throw ShapeError("encode: input has " + std::to_string(embedded.rows()) + " positions, expected " +
                     std::to_string(ae.spec().sequence_length));
  }
  const SeqBatch x(Mat(embedded.matrix().transpose()), static_cast<Index>(embedded.rows()), 1);
  const SeqBatch h = ae.encode(x);
  std::vector<nn::Vec> out;
  out.reserve(static_cast<std::size_t>(h.steps()));
  for (Index t = 0; t < h.steps(); ++t) out.push_back(h.at(t, 0));
  return out;
}

// ---------------------------------------------------------------------------
// Concatenation

SeqBatch concat_pairs(const SeqBatch& mirna, const SeqBatch& mrna) {
  if (mirna.steps() != mrna.steps() || mirna.batch() != mrna.batch()) {
    throw ShapeError("concat_pairs: sequence lengths differ");
  }
  if (mirna.features() != mrna.features()) throw ShapeError("concat_pairs: encoder widths differ");
  SeqBatch out(mirna.features() + mrna.features(), mirna.steps(), mirna.batch());
  out.data().topRows(mirna.features()) = mirna.data();
  out.data().bottomRows(mrna.features()) = mrna.data();
  return out;
}

std::vector<nn::Vec> concat_pairs(std::span<const nn::Vec> mirna, std::span<const nn::Vec> mrna) {
  if (mirna.size() != mrna.size()) throw ShapeError("concat_pairs: sequence lengths differ");
  std::vector<nn::Vec> out;
  out.reserve(mirna.size());
  for (std::size_t t = 0; t < mirna.size(); ++t) {
    if (mirna[t].size() != mrna[t].size()) throw ShapeError("concat_pairs: encoder widths differ");
    nn::Vec v(mirna[t].size() + mrna[t].size());
    v << mirna[t], mrna[t];
    out.push_back(std::move(v));
  }
  return out;
}

// ---------------------------------------------------------------------------
// DeepTargetModel

DeepTargetModel::DeepTargetModel(ArchitectureSpec spec, std::uint64_t seed) : spec_(std::move(spec)) {
  spec_.validate();
  metadata_.seed = seed;
  Rng rng(seed);
  EmbeddingTable::add_param(params_, kEmbedding);
  EmbeddingTable::init(params_.at(kEmbedding), rng);
  for (EncoderSide side : {EncoderSide::Mirna, EncoderSide::Mrna}) {
    nn::add_cell_params(params_, encoder_prefix(side), spec_.cell, spec_.embed_dim, spec_.ae_hidden);
    nn::init_cell_params(params_, encoder_prefix(side), rng);
  }
  std::size_t in = 2 * spec_.ae_hidden;
  for (std::size_t l = 0; l < spec_.depth(); ++l) {
    nn::RecurrentLayer::add_params(params_, layer_prefix(l), spec_.cell, spec_.direction, in,
                                   spec_.interaction_widths[l]);
    nn::RecurrentLayer::init_params(params_, layer_prefix(l), spec_.direction, rng);
    in = spec_.layer_output_width(l);
  }
  nn::Param& out = params_.add(kOutput, {2, spec_.readout_width()});
  nn::glorot_fill_rows(out.value, 0, 2, rng);
}

void DeepTargetModel::load_encoder(EncoderSide side, const AutoencoderModel& ae) {
  if (ae.spec().ae_hidden != spec_.ae_hidden || ae.spec().cell != spec_.cell) {
    throw ShapeError("load_encoder: autoencoder was built for a different architecture");
  }
  ae.params().copy_values_to(params_, "encoder.", encoder_prefix(side) + ".");
}

ForwardResult DeepTargetModel::forward(const PairBatch& batch, nn::Mode mode, double dropout,
                                       Rng* rng) const {
  if (batch.size() == 0) throw ShapeError("forward: empty batch");
  if (mode == nn::Mode::Train && dropout > 0.0 && rng == nullptr) {
    throw ShapeError("forward: training with dropout needs an rng");
  }
  const auto steps = static_cast<Index>(spec_.sequence_length);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (batch.mirna[i].size() != spec_.sequence_length ||
        batch.mrna[i].size() != spec_.sequence_length) {
      throw ShapeError("forward: pair " + std::to_string(i) + " is not padded to length " +
                       std::to_string(spec_.sequence_length));
    }
  }
  ForwardResult result;
  ForwardTape& tape = result.tape;
  tape.batch = &batch;

  const EmbeddingTable table(params_.at(kEmbedding));
  const nn::RecurrentCell mirna_encoder(spec_.cell, params_, encoder_prefix(EncoderSide::Mirna));
  const nn::RecurrentCell mrna_encoder(spec_.cell, params_, encoder_prefix(EncoderSide::Mrna));
  const SeqBatch h_mi = mirna_encoder.forward(table.embed_batch(batch.mirna), &tape.mirna_encoder);
  const SeqBatch h_m = mrna_encoder.forward(table.embed_batch(batch.mrna), &tape.mrna_encoder);

  SeqBatch z = concat_pairs(h_mi, h_m);
  tape.layers.resize(spec_.depth());
  tape.masks.resize(spec_.depth());
  tape.activations.reserve(spec_.depth());
  Rng dummy(0);
  for (std::size_t l = 0; l < spec_.depth(); ++l) {
    const nn::RecurrentLayer layer(spec_.cell, spec_.direction, params_, layer_prefix(l));
    SeqBatch y = layer.forward(z, &tape.layers[l]);
    const double p = mode == nn::Mode::Train ? dropout : 0.0;
    Mat dropped = nn::dropout(y.data(), p, mode, rng ? *rng : dummy, &tape.masks[l]);
    z = SeqBatch(std::move(dropped), y.steps(), y.batch());
    tape.activations.push_back(std::move(y));
  }

  Mat readout(static_cast<Index>(spec_.readout_width()), z.batch());
  if (spec_.direction == nn::Direction::Uni) {
    readout = z.step(steps - 1);
  } else {
    // Each direction contributes the state after it has read the whole sequence.
    const auto n = static_cast<Index>(spec_.interaction_widths.back());
    readout.topRows(n) = z.step(steps - 1).topRows(n);
    readout.bottomRows(n) = z.step(0).bottomRows(n);
  }
  result.target_probability = nn::output_forward(params_.at(kOutput).value, readout, &tape.output);
  return result;
}

void DeepTargetModel::backward(const ForwardTape& tape, const nn::Vec& d_target) {
  if (tape.batch == nullptr) throw ShapeError("backward: tape has no batch");
  const PairBatch& batch = *tape.batch;
  const auto steps = static_cast<Index>(spec_.sequence_length);
  const auto b = static_cast<Index>(batch.size());
  nn::Param& out = params_.at(kOutput);
  const Mat d_readout = nn::output_backward(out.value, out.grad, tape.output, d_target);

  const auto top = static_cast<Index>(spec_.readout_width());
  SeqBatch dz(top, steps, b);
  if (spec_.direction == nn::Direction::Uni) {
    dz.step(steps - 1) = d_readout;
  } else {
    const auto n = static_cast<Index>(spec_.interaction_widths.back());
    dz.step(steps - 1).topRows(n) = d_readout.topRows(n);
    dz.step(0).bottomRows(n) = d_readout.bottomRows(n);
  }
  for (std::size_t l = spec_.depth(); l-- > 0;) {
    nn::RecurrentLayer layer(spec_.cell, spec_.direction, params_, layer_prefix(l));
    const SeqBatch dy(nn::dropout_backward(dz.data(), tape.masks[l]), steps, b);
    dz = layer.backward(tape.layers[l], dy);
  }
  const auto n_h = static_cast<Index>(spec_.ae_hidden);
  const SeqBatch dh_mi(Mat(dz.data().topRows(n_h)), steps, b);
  const SeqBatch dh_m(Mat(dz.data().bottomRows(n_h)), steps, b);
  nn::RecurrentCell mirna_encoder(spec_.cell, params_, encoder_prefix(EncoderSide::Mirna));
  nn::RecurrentCell mrna_encoder(spec_.cell, params_, encoder_prefix(EncoderSide::Mrna));
  const SeqBatch dx_mi = mirna_encoder.backward(tape.mirna_encoder, dh_mi).inputs;
  const SeqBatch dx_m = mrna_encoder.backward(tape.mrna_encoder, dh_m).inputs;
  EmbeddingTable table(params_.at(kEmbedding));
  table.backward_batch(batch.mirna, dx_mi);
  table.backward_batch(batch.mrna, dx_m);
}

std::array<double, 2> DeepTargetModel::probabilities(const RnaSequence& mirna,
                                                     const RnaSequence& window) const {
  PairBatch batch;
  batch.mirna.push_back(pad_to(mirna, spec_.sequence_length));
  batch.mrna.push_back(pad_to(window, spec_.sequence_length));
  batch.labels.push_back(0);
  const ForwardResult r = forward(batch, nn::Mode::Eval);
  return {r.tape.output.probabilities(0, 0), r.tape.output.probabilities(1, 0)};
}

bool operator==(const DeepTargetModel& a, const DeepTargetModel& b) {
  if (!(a.spec_ == b.spec_) || a.params_.size() != b.params_.size()) return false;
  auto ib = b.params_.begin();
  for (const auto& [name, p] : a.params_) {
    if (name != ib->first || !(p.value == ib->second.value)) return false;
    ++ib;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Prediction

int decide_label(const std::array<double, 2>& probabilities) {
  return probabilities[1] > probabilities[0] ? 1 : 0;
}

SitePrediction predict_site(const DeepTargetModel& model, const RnaSequence& mirna,
                            const CandidateTargetSite& cts) {
  const auto p = model.probabilities(mirna, cts.window);
  return {p[1], decide_label(p)};
}

std::vector<SitePrediction> predict_sites(const DeepTargetModel& model,
                                          std::span<const PairExample> pairs) {
  constexpr std::size_t kChunk = 256;
  std::vector<SitePrediction> out;
  out.reserve(pairs.size());
  for (std::size_t begin = 0; begin < pairs.size(); begin += kChunk) {
    const auto chunk = pairs.subspan(begin, std::min(kChunk, pairs.size() - begin));
    const PairBatch batch = make_pair_batch(chunk, model.spec().sequence_length);
    const ForwardResult r = model.forward(batch, nn::Mode::Eval);
    for (Index i = 0; i < r.tape.output.probabilities.cols(); ++i) {
      const std::array<double, 2> p{r.tape.output.probabilities(0, i), r.tape.output.probabilities(1, i)};
      out.push_back({p[1], decide_label(p)});
    }
  }
  return out;
}

int predict_gene(const DeepTargetModel& model, const RnaSequence& mirna, const RnaSequence& mrna,
                 std::size_t k) {
  const auto sites = scan_cts(mirna, mrna, k);
  if (sites.empty()) return 0;
  std::vector<int> labels;
  labels.reserve(sites.size());
  for (const auto& cts : sites) labels.push_back(predict_site(model, mirna, cts).label);
  return gene_level_label(labels);
}

std::vector<nn::NumericArray> capture_activations(const DeepTargetModel& model,
                                                  const PairExample& pair) {
  const std::array<PairExample, 1> one{pair};
  const PairBatch batch = make_pair_batch(one, model.spec().sequence_length);
  const ForwardResult r = model.forward(batch, nn::Mode::Eval);
  std::vector<nn::NumericArray> out;
  for (const SeqBatch& act : r.tape.activations) {
    nn::NumericArray m({static_cast<std::size_t>(act.features()), static_cast<std::size_t>(act.steps())});
    m.matrix() = act.data();
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace deeptarget
