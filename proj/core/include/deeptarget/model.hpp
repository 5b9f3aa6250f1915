#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "deeptarget/cts.hpp"
#include "deeptarget/nn/adam.hpp"
#include "deeptarget/nn/functional.hpp"
#include "deeptarget/nn/param_store.hpp"
#include "deeptarget/nn/recurrent.hpp"
#include "deeptarget/seq.hpp"

namespace deeptarget {

/// Layer widths of the two-stage network.
///
/// `interaction_widths` lists the hidden width of every stacked interaction
/// layer; the first equals the concatenated pair width 2 * ae_hidden.
struct ArchitectureSpec {
  std::size_t embed_dim = kEmbedDim;
  std::size_t ae_hidden = 30;
  std::vector<std::size_t> interaction_widths = {60, 30};
  nn::Direction direction = nn::Direction::Uni;
  nn::CellKind cell = nn::CellKind::Gru;
  std::size_t sequence_length = kDefaultSiteLength;

  /// Widths for a stack of `depth` layers: {2n_h, n_h, n_h, ...}.
  static std::vector<std::size_t> widths_for_depth(std::size_t depth, std::size_t ae_hidden);

  std::size_t depth() const { return interaction_widths.size(); }
  std::size_t layer_output_width(std::size_t layer) const;
  std::size_t readout_width() const { return layer_output_width(depth() - 1); }

  void validate() const;
  /// "[(4-30-4) || (4-30-4)]-(60-30)-2" for the defaults.
  std::string render() const;
  /// Closed-form parameter count of a DeepTargetModel built from this spec.
  std::size_t parameter_count() const;

  std::string to_json() const;
  static ArchitectureSpec from_json(std::string_view text);

  friend bool operator==(const ArchitectureSpec&, const ArchitectureSpec&) = default;
};

struct TrainConfig {
  std::size_t batch_size = 50;
  std::size_t pretrain_epochs = 50;
  std::size_t finetune_epochs = 400;
  double dropout = 0.1;
  nn::AdamConfig pretrain_adam{};
  nn::AdamConfig finetune_adam{};
  double clip_norm = 5.0;  // <= 0 disables clipping
  /// Upper bound on sequences per autoencoder (0 = all); uniform subsample.
  std::size_t pretrain_max_sequences = 0;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Sequences of a pair batch padded to the architecture length.
struct PairBatch {
  std::vector<IndexSeq> mirna;
  std::vector<IndexSeq> mrna;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
};

PairBatch make_pair_batch(std::span<const PairExample> pairs, std::size_t length);
PairBatch make_pair_batch(std::span<const PairExample* const> pairs, std::size_t length);

/// Encoder-decoder pair for one RNA type. The embedding table is a frozen
/// copy of the shared table it was built against.
class AutoencoderModel {
 public:
  AutoencoderModel(const ArchitectureSpec& spec, const nn::NumericArray& embedding,
                   std::uint64_t seed);

  const ArchitectureSpec& spec() const { return spec_; }
  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }
  const nn::NumericArray& embedding() const { return params_.at("embedding").value; }

  /// Encoder hidden state at every position of an embedded batch.
  nn::SeqBatch encode(const nn::SeqBatch& embedded) const;
  /// Position-wise reconstruction of the embedded input.
  nn::SeqBatch reconstruct(const nn::SeqBatch& embedded) const;
  nn::SeqBatch embed(std::span<const IndexSeq> batch) const;

  /// Mean reconstruction loss of the batch; accumulates gradients.
  double accumulate_gradients(std::span<const IndexSeq> batch);

 private:
  ArchitectureSpec spec_;
  nn::ParamStore params_;
};

/// Single-sequence form: the n_h-wide representation at each position.
std::vector<nn::Vec> encode(const AutoencoderModel& ae, const nn::NumericArray& embedded);

struct PretrainResult {
  AutoencoderModel model;
  std::vector<double> loss_curve;  // mean reconstruction loss per epoch
};

/// Minimizes the squared reconstruction error over `epochs` with the
/// embedding frozen.
PretrainResult pretrain_autoencoder(std::span<const IndexSeq> sequences,
                                    const nn::NumericArray& embedding,
                                    const ArchitectureSpec& spec, const TrainConfig& cfg,
                                    std::uint64_t seed);

/// Per-position concatenation (h_mi_t, h_m_t).
nn::SeqBatch concat_pairs(const nn::SeqBatch& mirna, const nn::SeqBatch& mrna);
std::vector<nn::Vec> concat_pairs(std::span<const nn::Vec> mirna, std::span<const nn::Vec> mrna);

struct TrainingMetadata {
  std::uint64_t pretrain_epochs = 0;
  std::uint64_t finetune_epochs = 0;
  std::uint64_t seed = 0;
};

struct ForwardTape {
  const PairBatch* batch = nullptr;
  nn::RecurrentTape mirna_encoder;
  nn::RecurrentTape mrna_encoder;
  std::vector<nn::LayerTape> layers;
  std::vector<nn::SeqBatch> activations;  // raw output of each interaction layer
  std::vector<nn::DropoutMask> masks;
  nn::OutputCache output;
};

struct ForwardResult {
  nn::Vec target_probability;  // P(Y=1 | h) per example
  ForwardTape tape;
};

enum class EncoderSide { Mirna, Mrna };

/// Two encoders, the interaction stack and the two-unit output layer.
class DeepTargetModel {
 public:
  explicit DeepTargetModel(ArchitectureSpec spec, std::uint64_t seed = 1);

  const ArchitectureSpec& spec() const { return spec_; }
  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }
  TrainingMetadata& metadata() { return metadata_; }
  const TrainingMetadata& metadata() const { return metadata_; }

  const nn::NumericArray& embedding() const { return params_.at("embedding").value; }
  void load_encoder(EncoderSide side, const AutoencoderModel& ae);

  /// Dropout on each interaction layer's output applies only in training
  /// mode, where `rng` is required when `dropout` > 0.
  ForwardResult forward(const PairBatch& batch, nn::Mode mode, double dropout = 0.0,
                        Rng* rng = nullptr) const;
  /// Accumulates parameter gradients from dL/dP(Y=1) per example.
  void backward(const ForwardTape& tape, const nn::Vec& d_target);

  /// Both output probabilities for one pair, evaluation mode.
  std::array<double, 2> probabilities(const RnaSequence& mirna, const RnaSequence& window) const;

  friend bool operator==(const DeepTargetModel& a, const DeepTargetModel& b);

 private:
  ArchitectureSpec spec_;
  nn::ParamStore params_;
  TrainingMetadata metadata_;
};

struct FineTuneHistory {
  std::vector<double> epoch_loss;
};

/// Mini-batch Adam on the cross-entropy loss with the embedding unfrozen.
/// On a non-finite loss the model is restored to the last completed epoch
/// and NumericError is thrown.
FineTuneHistory fine_tune(DeepTargetModel& model, std::span<const PairExample> dataset,
                          const TrainConfig& cfg);

struct TrainOutcome {
  DeepTargetModel model;
  std::vector<double> mirna_pretrain_loss;
  std::vector<double> mrna_pretrain_loss;
  FineTuneHistory finetune;
};

/// Pretrain both autoencoders, bypass the decoders, fine-tune the whole network.
/// Child seeds of cfg.seed: 0 model init, 1 and 2 pretraining subsamples
/// (miRNA, mRNA), 3 and 4 the autoencoders, 5 fine-tuning.
TrainOutcome train_deeptarget(std::span<const PairExample> dataset, const ArchitectureSpec& spec,
                              const TrainConfig& cfg);

/// Sequences fed to each autoencoder: distinct padded sequences in first-seen
/// order, optionally subsampled.
std::vector<IndexSeq> pretrain_sequences(std::span<const PairExample> dataset, EncoderSide side,
                                         std::size_t length, std::size_t max_sequences,
                                         std::uint64_t seed);

struct SitePrediction {
  double probability = 0.0;  // P(Y=1 | h)
  int label = 0;
};

/// Label 1 only when P(Y=1) strictly exceeds P(Y=0); exact ties go to 0.
int decide_label(const std::array<double, 2>& probabilities);

SitePrediction predict_site(const DeepTargetModel& model, const RnaSequence& mirna,
                            const CandidateTargetSite& cts);
std::vector<SitePrediction> predict_sites(const DeepTargetModel& model,
                                          std::span<const PairExample> pairs);
int predict_gene(const DeepTargetModel& model, const RnaSequence& mirna, const RnaSequence& mrna,
                 std::size_t k);

/// Per interaction layer: units x positions matrix of raw hidden states.
std::vector<nn::NumericArray> capture_activations(const DeepTargetModel& model,
                                                  const PairExample& pair);

}  // namespace deeptarget
