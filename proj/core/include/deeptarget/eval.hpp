#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "deeptarget/cts.hpp"
#include "deeptarget/model.hpp"

namespace deeptarget {

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  std::uint64_t total() const { return tp + fp + fn + tn; }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

ConfusionCounts confusion(std::span<const int> preds, std::span<const int> labels);

/// An empty optional marks a metric whose denominator is zero.
struct MetricsReport {
  std::optional<double> accuracy;
  std::optional<double> sensitivity;
  std::optional<double> specificity;
  std::optional<double> f_measure;
  std::optional<double> ppv;
  std::optional<double> npv;

  static constexpr std::array<std::string_view, 6> kKeys = {
      "accuracy", "sensitivity", "specificity", "f_measure", "ppv", "npv"};

  std::array<std::optional<double>, 6> values() const {
    return {accuracy, sensitivity, specificity, f_measure, ppv, npv};
  }
  static MetricsReport from_values(const std::array<std::optional<double>, 6>& v);
  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

MetricsReport metrics(const ConfusionCounts& c);

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

struct FoldPlan {
  std::size_t k = 0;
  std::uint64_t seed = 0;
  std::vector<Fold> folds;
};

/// Each class is shuffled and dealt round-robin over the folds, so every
/// fold's class counts differ from the global ratio by at most one example.
FoldPlan stratified_folds(std::span<const int> labels, std::size_t k, std::uint64_t seed);

/// Per-metric mean and median over the reports where the metric is defined.
struct Aggregate {
  MetricsReport mean;
  MetricsReport median;
};
Aggregate aggregate(std::span<const MetricsReport> reports);

/// Trains on `train` and returns one label per `test` example.
using FoldTrainer = std::function<std::vector<int>(std::span<const PairExample> train,
                                                   std::span<const PairExample> test,
                                                   std::size_t fold)>;

struct FoldResult {
  std::size_t fold = 0;
  ConfusionCounts counts;
  std::optional<MetricsReport> metrics;  // empty when training failed
  std::string error;
};

struct CrossValidationReport {
  std::vector<FoldResult> folds;
  Aggregate aggregate;
  std::vector<std::string> warnings;
};

/// Runs one trainer per fold on a pool of `workers` threads. A throwing fold
/// is annotated and left out of the aggregate.
CrossValidationReport cross_validate(std::span<const PairExample> dataset, const FoldTrainer& trainer,
                                     std::size_t k, std::uint64_t seed, std::size_t workers = 1);

/// Full two-stage training per fold (fold f trains with seed derive_seed(cfg.seed, f)).
CrossValidationReport cross_validate(std::span<const PairExample> dataset, const ArchitectureSpec& spec,
                                     const TrainConfig& cfg, std::size_t k, std::uint64_t seed,
                                     std::size_t workers = 1);

FoldTrainer deeptarget_trainer(const ArchitectureSpec& spec, const TrainConfig& cfg);
/// Predicts the training split's majority label everywhere (ties go to 0).
FoldTrainer constant_majority_trainer();

/// Worker count from DEEPTARGET_THREADS, else the hardware concurrency.
std::size_t worker_count_from_env();

std::string to_json(const MetricsReport& m);
std::string to_json(const CrossValidationReport& r);
/// Flat `key = value` lines; undefined metrics print as "undefined".
std::string to_text(const CrossValidationReport& r);

/// One variant column of an ablation table.
struct SweepVariant {
  std::string label;
  ArchitectureSpec spec;
  TrainConfig cfg;
};

/// Metrics as rows and variants as columns, values are fold means.
struct SweepTable {
  std::string axis;  // header of the label column, e.g. "Dropout"
  std::vector<std::string> columns;
  std::vector<CrossValidationReport> reports;
};

inline constexpr std::array<std::string_view, 4> kSweepRows = {"accuracy", "sensitivity",
                                                               "specificity", "f_measure"};

SweepTable run_sweep(std::string axis, std::span<const SweepVariant> variants,
                     std::span<const PairExample> dataset, std::size_t k, std::uint64_t seed,
                     std::size_t workers = 1);

std::string to_json(const SweepTable& t);
std::string to_text(const SweepTable& t);

/// Variants of the cell comparison (GRU, LSTM), the architecture table
/// (1-, 2-, 3-layer, single-layer bidirectional) and the dropout table.
std::vector<SweepVariant> cell_variants(const ArchitectureSpec& base, const TrainConfig& cfg);
std::vector<SweepVariant> architecture_variants(const ArchitectureSpec& base, const TrainConfig& cfg);
std::vector<SweepVariant> dropout_variants(const ArchitectureSpec& base, const TrainConfig& cfg,
                                           std::span<const double> rates);

}  // namespace deeptarget
