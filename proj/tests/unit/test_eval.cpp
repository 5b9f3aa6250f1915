#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include <json.hpp>

#include "deeptarget/error.hpp"
#include "deeptarget/eval.hpp"
#include "deeptarget/synthetic.hpp"
#include "oracles.hpp"

namespace dt = deeptarget;

namespace {

// 9 TP, 1 FP, 2 FN, 8 TN.
void fixture(std::vector<int>& preds, std::vector<int>& labels) {
  preds.clear();
  labels.clear();
  auto add = [&](int p, int y, int n) {
    for (int i = 0; i < n; ++i) {
      preds.push_back(p);
      labels.push_back(y);
    }
  };
  add(1, 1, 9);
  add(1, 0, 1);
  add(0, 1, 2);
  add(0, 0, 8);
}

oracle::Counts as_oracle(const dt::ConfusionCounts& c) {
  return {static_cast<double>(c.tp), static_cast<double>(c.fp), static_cast<double>(c.fn),
          static_cast<double>(c.tn)};
}

std::vector<dt::PairExample> labelled(std::size_t pos, std::size_t neg) {
  dt::SyntheticConfig cfg;
  cfg.positives = pos;
  cfg.negatives = neg;
  cfg.mirna_pool = 4;
  cfg.mirna_length = 10;
  cfg.k = 12;
  return dt::make_synthetic_benchmark(cfg).pairs;
}

std::vector<int> labels_of(const std::vector<dt::PairExample>& d) {
  std::vector<int> y;
  for (const auto& p : d) y.push_back(p.label);
  return y;
}

}  // namespace

TEST(Confusion, WorkedFixture) {
  std::vector<int> p, y;
  fixture(p, y);
  const auto c = dt::confusion(p, y);
  EXPECT_EQ(c, (dt::ConfusionCounts{9, 1, 2, 8}));
  const auto m = dt::metrics(c);
  EXPECT_DOUBLE_EQ(*m.accuracy, 17.0 / 20.0);
  EXPECT_DOUBLE_EQ(*m.sensitivity, 9.0 / 11.0);
  EXPECT_DOUBLE_EQ(*m.specificity, 8.0 / 9.0);
  EXPECT_DOUBLE_EQ(*m.f_measure, 18.0 / 21.0);
  EXPECT_DOUBLE_EQ(*m.ppv, 0.9);
  EXPECT_DOUBLE_EQ(*m.npv, 0.8);
}

TEST(Confusion, SmallExamples) {
  EXPECT_EQ(dt::confusion(std::vector<int>{1, 1, 0, 0}, std::vector<int>{1, 0, 1, 0}),
            (dt::ConfusionCounts{1, 1, 1, 1}));
  const auto perfect = dt::metrics(dt::confusion(std::vector<int>{1, 0}, std::vector<int>{1, 0}));
  for (const auto& v : perfect.values()) EXPECT_EQ(v, 1.0);
}

TEST(Confusion, BadInput) {
  EXPECT_THROW(dt::confusion(std::vector<int>{1}, std::vector<int>{1, 0}), dt::DataError);
  EXPECT_THROW(dt::confusion(std::vector<int>{}, std::vector<int>{}), dt::DataError);
}

TEST(Metrics, ZeroDenominatorsAreUndefined) {
  const auto all_neg = dt::metrics({0, 0, 0, 5});
  EXPECT_FALSE(all_neg.sensitivity.has_value());
  EXPECT_FALSE(all_neg.ppv.has_value());
  EXPECT_FALSE(all_neg.f_measure.has_value());
  EXPECT_EQ(all_neg.specificity, 1.0);
  EXPECT_EQ(all_neg.npv, 1.0);
  const auto all_pos = dt::metrics({5, 0, 0, 0});
  EXPECT_FALSE(all_pos.specificity.has_value());
  EXPECT_FALSE(all_pos.npv.has_value());
  EXPECT_FALSE(dt::metrics({}).accuracy.has_value());
}

TEST(Metrics, MatchOracleOnRandomCounts) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 2000; ++trial) {
    const dt::ConfusionCounts c{1 + rng() % 50, 1 + rng() % 50, 1 + rng() % 50, 1 + rng() % 50};
    const auto m = dt::metrics(c);
    const auto o = as_oracle(c);
    EXPECT_DOUBLE_EQ(*m.accuracy, oracle::accuracy(o));
    EXPECT_DOUBLE_EQ(*m.sensitivity, oracle::sensitivity(o));
    EXPECT_DOUBLE_EQ(*m.specificity, oracle::specificity(o));
    EXPECT_DOUBLE_EQ(*m.f_measure, oracle::f_measure(o));
    EXPECT_DOUBLE_EQ(*m.ppv, oracle::ppv(o));
    EXPECT_DOUBLE_EQ(*m.npv, oracle::npv(o));
    for (const auto& v : m.values()) {
      EXPECT_GE(*v, 0.0);
      EXPECT_LE(*v, 1.0);
    }
    // F is the harmonic mean of precision and recall.
    const double h = 2.0 * *m.ppv * *m.sensitivity / (*m.ppv + *m.sensitivity);
    EXPECT_NEAR(*m.f_measure, h, 1e-12);
  }
}

TEST(Metrics, PermutationInvariance) {
  std::vector<int> p, y;
  fixture(p, y);
  const auto base = dt::metrics(dt::confusion(p, y));
  std::mt19937_64 rng(3);
  std::vector<std::size_t> order(p.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (int trial = 0; trial < 50; ++trial) {
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<int> p2, y2;
    for (std::size_t i : order) {
      p2.push_back(p[i]);
      y2.push_back(y[i]);
    }
    EXPECT_EQ(dt::metrics(dt::confusion(p2, y2)), base);
  }
}

TEST(Metrics, EachMetricReadsOnlyItsCells) {
  // Changing TN leaves sensitivity, ppv and F alone; changing TP leaves specificity and npv alone.
  const auto a = dt::metrics({9, 1, 2, 8});
  const auto b = dt::metrics({9, 1, 2, 80});
  EXPECT_EQ(a.sensitivity, b.sensitivity);
  EXPECT_EQ(a.ppv, b.ppv);
  EXPECT_EQ(a.f_measure, b.f_measure);
  const auto c = dt::metrics({90, 1, 2, 8});
  EXPECT_EQ(a.specificity, c.specificity);
  EXPECT_EQ(a.npv, c.npv);
}

TEST(Metrics, LabelSwapExchangesRoles) {
  std::vector<int> p, y;
  fixture(p, y);
  for (auto& v : p) v = 1 - v;
  for (auto& v : y) v = 1 - v;
  const auto a = dt::metrics({9, 1, 2, 8});
  const auto b = dt::metrics(dt::confusion(p, y));
  EXPECT_EQ(a.sensitivity, b.specificity);
  EXPECT_EQ(a.specificity, b.sensitivity);
  EXPECT_EQ(a.ppv, b.npv);
  EXPECT_EQ(a.npv, b.ppv);
  EXPECT_EQ(a.accuracy, b.accuracy);
}

TEST(Folds, PartitionAndStratification) {
  const auto data = labelled(37, 23);
  const auto y = labels_of(data);
  for (std::size_t k : {2u, 3u, 5u, 10u}) {
    const auto plan = dt::stratified_folds(y, k, 12);
    ASSERT_EQ(plan.folds.size(), k);
    std::multiset<std::size_t> seen;
    for (const auto& f : plan.folds) {
      seen.insert(f.test.begin(), f.test.end());
      EXPECT_EQ(f.train.size() + f.test.size(), y.size());
      std::vector<std::size_t> both;
      std::set_intersection(f.train.begin(), f.train.end(), f.test.begin(), f.test.end(), std::back_inserter(both));
      EXPECT_TRUE(both.empty());
      const double pos = static_cast<double>(std::ranges::count_if(f.test, [&](std::size_t i) { return y[i] == 1; }));
      EXPECT_LE(std::abs(pos - 37.0 / static_cast<double>(k)), 1.0);
      const double neg = static_cast<double>(f.test.size()) - pos;
      EXPECT_LE(std::abs(neg - 23.0 / static_cast<double>(k)), 1.0);
    }
    ASSERT_EQ(seen.size(), y.size());
    for (std::size_t i = 0; i < y.size(); ++i) EXPECT_EQ(seen.count(i), 1u);
  }
}

TEST(Folds, SeededAndRejectsTinyClasses) {
  const auto y = labels_of(labelled(20, 20));
  const auto a = dt::stratified_folds(y, 5, 1);
  const auto b = dt::stratified_folds(y, 5, 1);
  const auto c = dt::stratified_folds(y, 5, 2);
  bool differs = false;
  for (std::size_t f = 0; f < 5; ++f) {
    EXPECT_EQ(a.folds[f].test, b.folds[f].test);
    differs = differs || a.folds[f].test != c.folds[f].test;
  }
  EXPECT_TRUE(differs);
  EXPECT_THROW(dt::stratified_folds(y, 1, 1), dt::DataError);
  EXPECT_THROW(dt::stratified_folds(std::vector<int>{1, 1, 0}, 2, 1), dt::DataError);
  EXPECT_THROW(dt::stratified_folds(std::vector<int>{1, 2, 0, 0}, 2, 1), dt::DataError);
}

TEST(Aggregate, MeanAndMedian) {
  std::vector<dt::MetricsReport> r(4);
  const double acc[] = {0.5, 0.9, 0.7, 0.6};
  for (std::size_t i = 0; i < 4; ++i) r[i].accuracy = acc[i];
  r[1].sensitivity = 0.3;
  const auto a = dt::aggregate(r);
  EXPECT_DOUBLE_EQ(*a.mean.accuracy, 0.675);
  EXPECT_DOUBLE_EQ(*a.median.accuracy, 0.65);
  EXPECT_EQ(a.mean.sensitivity, 0.3);  // only the defined value counts
  EXPECT_FALSE(a.mean.specificity.has_value());
  r.pop_back();
  EXPECT_DOUBLE_EQ(*dt::aggregate(r).median.accuracy, 0.7);
}

TEST(Aggregate, SingleReportIsIdentity) {
  const auto m = dt::metrics({9, 1, 2, 8});
  const std::vector<dt::MetricsReport> one{m};
  const auto a = dt::aggregate(one);
  EXPECT_EQ(a.mean, m);
  EXPECT_EQ(a.median, m);
}

TEST(CrossValidate, MajorityStubMatchesHandCount) {
  const auto data = labelled(30, 20);
  const auto r = dt::cross_validate(data, dt::constant_majority_trainer(), 5, 4);
  ASSERT_EQ(r.folds.size(), 5u);
  EXPECT_TRUE(r.warnings.empty());
  for (const auto& f : r.folds) {
    // Every training split keeps 24 positives against 16 negatives.
    EXPECT_EQ(f.counts.fp, 4u);
    EXPECT_EQ(f.counts.tn, 0u);
    EXPECT_EQ(f.counts.tp, 6u);
    EXPECT_EQ(f.counts.fn, 0u);
    EXPECT_EQ(f.counts.total(), 10u);
  }
  EXPECT_DOUBLE_EQ(*r.aggregate.mean.accuracy, 0.6);
  EXPECT_EQ(r.aggregate.mean.sensitivity, 1.0);
  EXPECT_EQ(r.aggregate.mean.specificity, 0.0);
  EXPECT_FALSE(r.aggregate.mean.npv.has_value());
}

TEST(CrossValidate, WorkerCountDoesNotChangeResults) {
  const auto data = labelled(30, 30);
  auto noisy = [](std::span<const dt::PairExample>, std::span<const dt::PairExample> test, std::size_t fold) {
    std::vector<int> out;
    for (std::size_t i = 0; i < test.size(); ++i) out.push_back(static_cast<int>((i + fold) % 2));
    return out;
  };
  const auto one = dt::cross_validate(data, noisy, 6, 9, 1);
  const auto four = dt::cross_validate(data, noisy, 6, 9, 4);
  EXPECT_EQ(dt::to_json(one), dt::to_json(four));
}

TEST(CrossValidate, FailingFoldIsAnnotatedAndSkipped) {
  const auto data = labelled(20, 20);
  auto flaky = [](std::span<const dt::PairExample>, std::span<const dt::PairExample> test, std::size_t fold) {
    if (fold == 2) throw dt::NumericError("diverged");
    std::vector<int> out;
    for (const auto& p : test) out.push_back(p.label);
    return out;
  };
  const auto r = dt::cross_validate(data, flaky, 4, 1);
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_NE(r.warnings[0].find("fold 2"), std::string::npos);
  EXPECT_FALSE(r.folds[2].metrics.has_value());
  EXPECT_EQ(r.folds[2].error, "diverged");
  EXPECT_EQ(r.aggregate.mean.accuracy, 1.0);
  const auto j = nlohmann::json::parse(dt::to_json(r));
  EXPECT_TRUE(j["folds"][2]["metrics"].is_null());
}

TEST(Reports, JsonAndTextShapes) {
  const auto data = labelled(20, 20);
  const auto r = dt::cross_validate(data, dt::constant_majority_trainer(), 4, 1);
  const auto j = nlohmann::json::parse(dt::to_json(r));
  for (const char* part : {"mean", "median"}) {
    ASSERT_TRUE(j.contains(part));
    EXPECT_EQ(j[part].size(), 6u);
    for (auto key : dt::MetricsReport::kKeys) EXPECT_TRUE(j[part].contains(std::string(key)));
  }
  EXPECT_EQ(j["folds"].size(), 4u);
  const auto text = dt::to_text(r);
  EXPECT_NE(text.find("mean.accuracy = "), std::string::npos);
  EXPECT_NE(text.find("undefined"), std::string::npos);  // balanced majority stub has undefined metrics
}

TEST(Sweeps, VariantConstruction) {
  const dt::ArchitectureSpec base;
  const dt::TrainConfig cfg;
  const auto cells = dt::cell_variants(base, cfg);
  ASSERT_EQ(cells.size(), 2u);
  EXPECT_EQ(cells[0].label, "GRU");
  EXPECT_EQ(cells[1].label, "LSTM");
  EXPECT_EQ(cells[1].spec.cell, dt::nn::CellKind::Lstm);
  const auto arch = dt::architecture_variants(base, cfg);
  ASSERT_EQ(arch.size(), 4u);
  EXPECT_EQ(arch[0].spec.interaction_widths, (std::vector<std::size_t>{60}));
  EXPECT_EQ(arch[1].spec.interaction_widths, (std::vector<std::size_t>{60, 30}));
  EXPECT_EQ(arch[2].spec.interaction_widths.size(), 3u);
  EXPECT_EQ(arch[3].spec.direction, dt::nn::Direction::Bi);
  EXPECT_EQ(arch[3].spec.interaction_widths.size(), 1u);
  const std::vector<double> rates{0.0, 0.1, 0.5};
  const auto drop = dt::dropout_variants(base, cfg, rates);
  ASSERT_EQ(drop.size(), 3u);
  EXPECT_EQ(drop[1].label, "0.1");
  EXPECT_EQ(drop[2].cfg.dropout, 0.5);
}

TEST(Sweeps, TableLayout) {
  dt::SweepTable t;
  t.axis = "Dropout";
  t.columns = {"0.0", "0.5"};
  dt::CrossValidationReport r;
  r.aggregate.mean = dt::metrics({9, 1, 2, 8});
  t.reports = {r, r};
  const auto text = dt::to_text(t);
  EXPECT_EQ(text.substr(0, text.find('\n')), "Dropout\t0.0\t0.5");
  EXPECT_NE(text.find("accuracy\t0.8500\t0.8500"), std::string::npos);
  EXPECT_NE(text.find("F-measure\t"), std::string::npos);
  const auto j = nlohmann::json::parse(dt::to_json(t));
  EXPECT_EQ(j["rows"]["accuracy"].size(), 2u);
  EXPECT_DOUBLE_EQ(j["rows"]["accuracy"][0].get<double>(), 0.85);
}

TEST(WorkerCount, ReadsEnvironment) {
  ::setenv("DEEPTARGET_THREADS", "3", 1);
  EXPECT_EQ(dt::worker_count_from_env(), 3u);
  ::setenv("DEEPTARGET_THREADS", "zero", 1);
  EXPECT_GE(dt::worker_count_from_env(), 1u);
  ::unsetenv("DEEPTARGET_THREADS");
}
