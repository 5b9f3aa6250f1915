#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "deeptarget/error.hpp"
#include "deeptarget/model.hpp"

namespace deeptarget {

namespace {

// Derived-seed slots of one training run.
enum SeedSlot : std::uint64_t {
  kModelInit = 0,
  kMirnaSample = 1,
  kMrnaSample = 2,
  kMirnaAutoencoder = 3,
  kMrnaAutoencoder = 4,
  kFineTune = 5,
};

std::vector<std::size_t> shuffled_order(std::size_t n, Rng& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i - 1)]);
  return order;
}

}  // namespace

PretrainResult pretrain_autoencoder(std::span<const IndexSeq> sequences,
                                    const nn::NumericArray& embedding,
                                    const ArchitectureSpec& spec, const TrainConfig& cfg,
                                    std::uint64_t seed) {
  cfg.validate();
  if (sequences.empty()) throw DataError("pretrain_autoencoder: no sequences");
  PretrainResult result{AutoencoderModel(spec, embedding, derive_seed(seed, 0)), {}};
  AutoencoderModel& ae = result.model;
  nn::AdamState adam{cfg.pretrain_adam, 0, {}};
  Rng rng(derive_seed(seed, 1));
  std::vector<IndexSeq> batch;
  for (std::size_t epoch = 0; epoch < cfg.pretrain_epochs; ++epoch) {
    const auto order = shuffled_order(sequences.size(), rng);
    double total = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      batch.clear();
      for (std::size_t i = begin; i < end; ++i) batch.push_back(sequences[order[i]]);
      ae.params().zero_grad();
      const double loss = ae.accumulate_gradients(batch);
      if (!std::isfinite(loss)) throw NumericError("pretrain_autoencoder: non-finite loss");
      total += loss * static_cast<double>(batch.size());
      if (cfg.clip_norm > 0.0) ae.params().clip_grad_norm(cfg.clip_norm);
      nn::adam_step(ae.params(), adam);
    }
    result.loss_curve.push_back(total / static_cast<double>(sequences.size()));
  }
  return result;
}

FineTuneHistory fine_tune(DeepTargetModel& model, std::span<const PairExample> dataset,
                          const TrainConfig& cfg) {
  cfg.validate();
  if (dataset.empty()) throw DataError("fine_tune: empty dataset");
  FineTuneHistory history;
  model.params().at("embedding").trainable = true;
  nn::AdamState adam{cfg.finetune_adam, 0, {}};
  Rng rng(cfg.seed);
  const std::size_t length = model.spec().sequence_length;
  std::vector<const PairExample*> chunk;
  for (std::size_t epoch = 0; epoch < cfg.finetune_epochs; ++epoch) {
    const nn::ParamStore snapshot = model.params();
    const nn::AdamState adam_snapshot = adam;
    const auto order = shuffled_order(dataset.size(), rng);
    double total = 0.0;
    bool diverged = false;
    for (std::size_t begin = 0; begin < order.size() && !diverged; begin += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      chunk.clear();
      for (std::size_t i = begin; i < end; ++i) chunk.push_back(&dataset[order[i]]);
      const PairBatch batch = make_pair_batch(std::span<const PairExample* const>(chunk), length);
      model.params().zero_grad();
      const ForwardResult fwd = model.forward(batch, nn::Mode::Train, cfg.dropout, &rng);
      const std::span<const double> p(fwd.target_probability.data(),
                                      static_cast<std::size_t>(fwd.target_probability.size()));
      const nn::LossResult loss = nn::bce_loss(p, batch.labels);
      if (!std::isfinite(loss.value)) {
        diverged = true;
        break;
      }
      total += loss.value * static_cast<double>(batch.size());
      model.backward(fwd.tape, Eigen::Map<const nn::Vec>(loss.grad.data(),
                                                          static_cast<Eigen::Index>(loss.grad.size())));
      if (cfg.clip_norm > 0.0) model.params().clip_grad_norm(cfg.clip_norm);
      try {
        nn::adam_step(model.params(), adam);
      } catch (const NumericError&) {
        diverged = true;
      }
    }
    if (diverged) {
      model.params() = snapshot;
      adam = adam_snapshot;
      throw NumericError("fine_tune: non-finite loss in epoch " + std::to_string(epoch + 1) +
                         "; restored the epoch " + std::to_string(epoch) + " parameters");
    }
    history.epoch_loss.push_back(total / static_cast<double>(dataset.size()));
    model.metadata().finetune_epochs = epoch + 1;
  }
  return history;
}

std::vector<IndexSeq> pretrain_sequences(std::span<const PairExample> dataset, EncoderSide side,
                                         std::size_t length, std::size_t max_sequences,
                                         std::uint64_t seed) {
  std::vector<IndexSeq> out;
  std::set<IndexSeq> seen;
  for (const PairExample& p : dataset) {
    IndexSeq s = pad_to(side == EncoderSide::Mirna ? p.mirna : p.cts.window, length);
    if (seen.insert(s).second) out.push_back(std::move(s));
  }
  if (max_sequences > 0 && out.size() > max_sequences) {
    Rng rng(seed);
    for (std::size_t i = 0; i < max_sequences; ++i) {
      std::swap(out[i], out[i + uniform_index(rng, out.size() - 1 - i)]);
    }
    out.resize(max_sequences);
  }
  return out;
}

TrainOutcome train_deeptarget(std::span<const PairExample> dataset, const ArchitectureSpec& spec,
                              const TrainConfig& cfg) {
  cfg.validate();
  spec.validate();
  if (dataset.empty()) throw DataError("train_deeptarget: empty dataset");
  const bool has_pos = std::ranges::any_of(dataset, [](const PairExample& p) { return p.label == 1; });
  const bool has_neg = std::ranges::any_of(dataset, [](const PairExample& p) { return p.label == 0; });
  if (!has_pos || !has_neg) throw DataError("train_deeptarget: one-class dataset");

  DeepTargetModel model(spec, derive_seed(cfg.seed, kModelInit));
  model.metadata().seed = cfg.seed;
  const std::size_t length = spec.sequence_length;
  const auto mirnas = pretrain_sequences(dataset, EncoderSide::Mirna, length,
                                         cfg.pretrain_max_sequences,
                                         derive_seed(cfg.seed, kMirnaSample));
  const auto mrnas = pretrain_sequences(dataset, EncoderSide::Mrna, length,
                                        cfg.pretrain_max_sequences,
                                        derive_seed(cfg.seed, kMrnaSample));

  PretrainResult ae_mi = pretrain_autoencoder(mirnas, model.embedding(), spec, cfg,
                                              derive_seed(cfg.seed, kMirnaAutoencoder));
  PretrainResult ae_m = pretrain_autoencoder(mrnas, model.embedding(), spec, cfg,
                                             derive_seed(cfg.seed, kMrnaAutoencoder));
  model.load_encoder(EncoderSide::Mirna, ae_mi.model);
  model.load_encoder(EncoderSide::Mrna, ae_m.model);
  model.metadata().pretrain_epochs = cfg.pretrain_epochs;

  TrainConfig ft = cfg;
  ft.seed = derive_seed(cfg.seed, kFineTune);
  FineTuneHistory history = fine_tune(model, dataset, ft);
  return TrainOutcome{std::move(model), std::move(ae_mi.loss_curve), std::move(ae_m.loss_curve),
                      std::move(history)};
}

}  // namespace deeptarget
