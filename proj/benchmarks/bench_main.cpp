#include <benchmark/benchmark.h>

#include <random>
#include <utility>

#include "deeptarget/cts.hpp"
#include "deeptarget/mockgen.hpp"
#include "deeptarget/model.hpp"
#include "deeptarget/nn/recurrent.hpp"
#include "deeptarget/synthetic.hpp"

namespace dt = deeptarget;
namespace nn = deeptarget::nn;

namespace {

std::string random_rna(std::mt19937_64& rng, std::size_t n) {
  static const char kBases[] = "ACGU";
  std::string s(n, 'A');
  for (auto& c : s) c = kBases[rng() % 4];
  return s;
}

void cell_setup(nn::CellKind kind, nn::ParamStore& store, nn::SeqBatch& xs, Eigen::Index batch) {
  nn::add_cell_params(store, "cell", kind, 60, 30);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  for (auto& [_, p] : store) {
    for (double& v : p.value.data()) v = u(rng);
  }
  xs = nn::SeqBatch(nn::Mat::Random(60, 30 * batch), 30, batch);
}

void BM_CellForward(benchmark::State& state) {
  const auto kind = state.range(0) == 0 ? nn::CellKind::Gru : nn::CellKind::Lstm;
  nn::ParamStore store;
  nn::SeqBatch xs;
  cell_setup(kind, store, xs, 50);
  const nn::RecurrentCell cell(kind, std::as_const(store), "cell");
  for (auto _ : state) benchmark::DoNotOptimize(cell.forward(xs, nullptr));
}
BENCHMARK(BM_CellForward)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

void BM_CellForwardBackward(benchmark::State& state) {
  const auto kind = state.range(0) == 0 ? nn::CellKind::Gru : nn::CellKind::Lstm;
  nn::ParamStore store;
  nn::SeqBatch xs;
  cell_setup(kind, store, xs, 50);
  nn::RecurrentCell cell(kind, store, "cell");
  const nn::SeqBatch d(nn::Mat::Ones(30, 30 * 50), 30, 50);
  for (auto _ : state) {
    nn::RecurrentTape tape;
    cell.forward(xs, &tape);
    benchmark::DoNotOptimize(cell.backward(tape, d));
  }
}
BENCHMARK(BM_CellForwardBackward)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

void BM_ScanCts(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const auto mirna = dt::RnaSequence::from_string("mi", random_rna(rng, 22));
  const auto mrna = dt::RnaSequence::from_string("m", random_rna(rng, static_cast<std::size_t>(state.range(0))));
  for (auto _ : state) benchmark::DoNotOptimize(dt::scan_cts(mirna, mrna, 30));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) * state.range(0));
}
BENCHMARK(BM_ScanCts)->Arg(1000)->Arg(10000);

void BM_Complementarity(benchmark::State& state) {
  std::mt19937_64 rng(3);
  const auto mirna = dt::RnaSequence::from_string("mi", random_rna(rng, 22));
  const auto window = dt::RnaSequence::from_string("w", random_rna(rng, 30));
  for (auto _ : state) benchmark::DoNotOptimize(dt::complementarity_score(mirna, window));
}
BENCHMARK(BM_Complementarity);

void BM_PredictSites(benchmark::State& state) {
  dt::SyntheticConfig cfg;
  cfg.positives = cfg.negatives = 50;
  const auto data = dt::make_synthetic_benchmark(cfg);
  const dt::DeepTargetModel model(dt::ArchitectureSpec{}, 1);
  for (auto _ : state) benchmark::DoNotOptimize(dt::predict_sites(model, data.pairs));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * 100);
}
BENCHMARK(BM_PredictSites)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
