#include "deeptarget/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <cctype>
#include <thread>

#include <json.hpp>

#include "deeptarget/error.hpp"

namespace deeptarget {

namespace {

std::optional<double> ratio(std::uint64_t num, std::uint64_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

nlohmann::json metrics_json(const MetricsReport& m) {
  nlohmann::json j = nlohmann::json::object();
  const auto v = m.values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    j[std::string(MetricsReport::kKeys[i])] = v[i] ? nlohmann::json(*v[i]) : nlohmann::json(nullptr);
  }
  return j;
}

std::string format_value(const std::optional<double>& v) {
  if (!v) return "undefined";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", *v);
  return buf;
}

std::optional<double> pick(const MetricsReport& m, std::string_view key) {
  const auto v = m.values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (MetricsReport::kKeys[i] == key) return v[i];
  }
  throw DataError("unknown metric '" + std::string(key) + "'");
}

}  // namespace

ConfusionCounts confusion(std::span<const int> preds, std::span<const int> labels) {
  if (preds.size() != labels.size()) throw DataError("confusion: predictions and labels differ in length");
  if (preds.empty()) throw DataError("confusion: no examples");
  ConfusionCounts c;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const bool p = preds[i] == 1;
    const bool y = labels[i] == 1;
    if (p && y) {
      ++c.tp;
    } else if (p) {
      ++c.fp;
    } else if (y) {
      ++c.fn;
    } else {
      ++c.tn;
    }
  }
  return c;
}

MetricsReport MetricsReport::from_values(const std::array<std::optional<double>, 6>& v) {
  return {v[0], v[1], v[2], v[3], v[4], v[5]};
}

MetricsReport metrics(const ConfusionCounts& c) {
  MetricsReport m;
  m.accuracy = ratio(c.tp + c.tn, c.total());
  m.sensitivity = ratio(c.tp, c.tp + c.fn);
  m.specificity = ratio(c.tn, c.tn + c.fp);
  m.f_measure = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn);
  m.ppv = ratio(c.tp, c.tp + c.fp);
  m.npv = ratio(c.tn, c.tn + c.fn);
  return m;
}

FoldPlan stratified_folds(std::span<const int> labels, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw DataError("stratified_folds: k must be >= 2");
  std::array<std::vector<std::size_t>, 2> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw DataError("stratified_folds: labels must be 0 or 1");
    by_class[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  for (const auto& members : by_class) {
    if (members.size() < k) {
      throw DataError("stratified_folds: a class has " + std::to_string(members.size()) +
                      " members, fewer than k = " + std::to_string(k));
    }
  }
  Rng rng(seed);
  FoldPlan plan{k, seed, std::vector<Fold>(k)};
  std::size_t next = 0;
  for (auto& members : by_class) {
    for (std::size_t i = members.size(); i > 1; --i) {
      std::swap(members[i - 1], members[uniform_index(rng, i - 1)]);
    }
    for (std::size_t idx : members) {
      plan.folds[next].test.push_back(idx);
      next = (next + 1) % k;
    }
  }
  for (std::size_t f = 0; f < k; ++f) {
    std::ranges::sort(plan.folds[f].test);
    for (std::size_t g = 0; g < k; ++g) {
      if (g == f) continue;
      plan.folds[f].train.insert(plan.folds[f].train.end(), plan.folds[g].test.begin(),
                                  plan.folds[g].test.end());
    }
    std::ranges::sort(plan.folds[f].train);
  }
  return plan;
}

Aggregate aggregate(std::span<const MetricsReport> reports) {
  std::array<std::optional<double>, 6> mean;
  std::array<std::optional<double>, 6> median;
  for (std::size_t i = 0; i < 6; ++i) {
    std::vector<double> vals;
    for (const auto& r : reports) {
      if (const auto v = r.values()[i]) vals.push_back(*v);
    }
    if (vals.empty()) continue;
    double sum = 0.0;
    for (double v : vals) sum += v;
    mean[i] = sum / static_cast<double>(vals.size());
    std::ranges::sort(vals);
    const std::size_t n = vals.size();
    median[i] = n % 2 == 1 ? vals[n / 2] : 0.5 * (vals[n / 2 - 1] + vals[n / 2]);
  }
  return {MetricsReport::from_values(mean), MetricsReport::from_values(median)};
}

CrossValidationReport cross_validate(std::span<const PairExample> dataset, const FoldTrainer& trainer,
                                     std::size_t k, std::uint64_t seed, std::size_t workers) {
  std::vector<int> labels;
  labels.reserve(dataset.size());
  for (const auto& p : dataset) labels.push_back(p.label);
  const FoldPlan plan = stratified_folds(labels, k, seed);

  CrossValidationReport report;
  report.folds.resize(k);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t f = next++; f < k; f = next++) {
      FoldResult& out = report.folds[f];
      out.fold = f;
      try {
        std::vector<PairExample> train;
        std::vector<PairExample> test;
        std::vector<int> truth;
        for (std::size_t i : plan.folds[f].train) train.push_back(dataset[i]);
        for (std::size_t i : plan.folds[f].test) {
          test.push_back(dataset[i]);
          truth.push_back(dataset[i].label);
        }
        const std::vector<int> preds = trainer(train, test, f);
        out.counts = confusion(preds, truth);
        out.metrics = metrics(out.counts);
      } catch (const std::exception& e) {
        out.error = e.what();
      }
    }
  };
  const std::size_t n_workers = std::clamp<std::size_t>(workers, 1, k);
  if (n_workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  std::vector<MetricsReport> ok;
  for (const auto& f : report.folds) {
    if (f.metrics) {
      ok.push_back(*f.metrics);
    } else {
      report.warnings.push_back("fold " + std::to_string(f.fold) + " failed: " + f.error);
    }
  }
  report.aggregate = aggregate(ok);
  return report;
}

FoldTrainer deeptarget_trainer(const ArchitectureSpec& spec, const TrainConfig& cfg) {
  return [spec, cfg](std::span<const PairExample> train, std::span<const PairExample> test,
                     std::size_t fold) {
    TrainConfig fold_cfg = cfg;
    fold_cfg.seed = derive_seed(cfg.seed, fold);
    const TrainOutcome outcome = train_deeptarget(train, spec, fold_cfg);
    std::vector<int> preds;
    for (const auto& p : predict_sites(outcome.model, test)) preds.push_back(p.label);
    return preds;
  };
}

CrossValidationReport cross_validate(std::span<const PairExample> dataset, const ArchitectureSpec& spec,
                                     const TrainConfig& cfg, std::size_t k, std::uint64_t seed,
                                     std::size_t workers) {
  return cross_validate(dataset, deeptarget_trainer(spec, cfg), k, seed, workers);
}

FoldTrainer constant_majority_trainer() {
  return [](std::span<const PairExample> train, std::span<const PairExample> test, std::size_t) {
    const auto pos = std::ranges::count_if(train, [](const PairExample& p) { return p.label == 1; });
    const auto neg = static_cast<std::ptrdiff_t>(train.size()) - pos;
    return std::vector<int>(test.size(), pos > neg ? 1 : 0);
  };
}

std::size_t worker_count_from_env() {
  if (const char* env = std::getenv("DEEPTARGET_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::string to_json(const MetricsReport& m) { return metrics_json(m).dump(); }

std::string to_json(const CrossValidationReport& r) {
  nlohmann::json j;
  j["folds"] = nlohmann::json::array();
  for (const auto& f : r.folds) {
    nlohmann::json fj;
    fj["fold"] = f.fold;
    fj["counts"] = {{"tp", f.counts.tp}, {"fp", f.counts.fp}, {"fn", f.counts.fn}, {"tn", f.counts.tn}};
    fj["metrics"] = f.metrics ? metrics_json(*f.metrics) : nlohmann::json(nullptr);
    if (!f.error.empty()) fj["error"] = f.error;
    j["folds"].push_back(std::move(fj));
  }
  j["mean"] = metrics_json(r.aggregate.mean);
  j["median"] = metrics_json(r.aggregate.median);
  j["warnings"] = r.warnings;
  return j.dump(2);
}

std::string to_text(const CrossValidationReport& r) {
  std::string out;
  for (const auto& f : r.folds) {
    const std::string prefix = "fold." + std::to_string(f.fold) + ".";
    if (!f.metrics) {
      out += prefix + "error = " + f.error + "\n";
      continue;
    }
    const auto v = f.metrics->values();
    for (std::size_t i = 0; i < v.size(); ++i) {
      out += prefix + std::string(MetricsReport::kKeys[i]) + " = " + format_value(v[i]) + "\n";
    }
  }
  for (const auto& [name, m] : {std::pair{"mean", &r.aggregate.mean}, std::pair{"median", &r.aggregate.median}}) {
    const auto v = m->values();
    for (std::size_t i = 0; i < v.size(); ++i) {
      out += std::string(name) + "." + std::string(MetricsReport::kKeys[i]) + " = " + format_value(v[i]) + "\n";
    }
  }
  for (const auto& w : r.warnings) out += "warning = " + w + "\n";
  return out;
}

SweepTable run_sweep(std::string axis, std::span<const SweepVariant> variants,
                     std::span<const PairExample> dataset, std::size_t k, std::uint64_t seed,
                     std::size_t workers) {
  SweepTable table;
  table.axis = std::move(axis);
  for (const auto& v : variants) {
    table.columns.push_back(v.label);
    table.reports.push_back(cross_validate(dataset, v.spec, v.cfg, k, seed, workers));
  }
  return table;
}

std::string to_json(const SweepTable& t) {
  nlohmann::json j;
  j["axis"] = t.axis;
  j["columns"] = t.columns;
  nlohmann::json rows = nlohmann::json::object();
  for (std::string_view key : kSweepRows) {
    nlohmann::json row = nlohmann::json::array();
    for (const auto& r : t.reports) {
      const auto v = pick(r.aggregate.mean, key);
      row.push_back(v ? nlohmann::json(*v) : nlohmann::json(nullptr));
    }
    rows[std::string(key)] = std::move(row);
  }
  j["rows"] = std::move(rows);
  j["reports"] = nlohmann::json::array();
  for (const auto& r : t.reports) j["reports"].push_back(nlohmann::json::parse(to_json(r)));
  return j.dump(2);
}

std::string to_text(const SweepTable& t) {
  std::string out = t.axis;
  for (const auto& c : t.columns) out += "\t" + c;
  out += "\n";
  for (std::string_view key : kSweepRows) {
    out += std::string(key == "f_measure" ? "F-measure" : key);
    for (const auto& r : t.reports) out += "\t" + format_value(pick(r.aggregate.mean, key));
    out += "\n";
  }
  return out;
}

std::vector<SweepVariant> cell_variants(const ArchitectureSpec& base, const TrainConfig& cfg) {
  std::vector<SweepVariant> out;
  for (auto cell : {nn::CellKind::Gru, nn::CellKind::Lstm}) {
    ArchitectureSpec s = base;
    s.cell = cell;
    std::string label(nn::to_string(cell));
    std::ranges::transform(label, label.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    out.push_back({label, s, cfg});
  }
  return out;
}

std::vector<SweepVariant> architecture_variants(const ArchitectureSpec& base, const TrainConfig& cfg) {
  std::vector<SweepVariant> out;
  for (std::size_t depth = 1; depth <= 3; ++depth) {
    ArchitectureSpec s = base;
    s.direction = nn::Direction::Uni;
    s.interaction_widths = ArchitectureSpec::widths_for_depth(depth, base.ae_hidden);
    out.push_back({std::to_string(depth) + "-layer", s, cfg});
  }
  ArchitectureSpec bi = base;
  bi.direction = nn::Direction::Bi;
  bi.interaction_widths = ArchitectureSpec::widths_for_depth(1, base.ae_hidden);
  out.push_back({"bidirectional", bi, cfg});
  return out;
}

std::vector<SweepVariant> dropout_variants(const ArchitectureSpec& base, const TrainConfig& cfg,
                                           std::span<const double> rates) {
  std::vector<SweepVariant> out;
  for (double p : rates) {
    TrainConfig c = cfg;
    c.dropout = p;
    char buf[16];
    std::snprintf(buf, sizeof buf, "%.1f", p);
    out.push_back({buf, base, c});
  }
  return out;
}

}  // namespace deeptarget
