#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "deeptarget/checkpoint.hpp"
#include "deeptarget/cts.hpp"
#include "deeptarget/error.hpp"
#include "deeptarget/eval.hpp"
#include "deeptarget/seq.hpp"

#ifndef DEEPTARGET_VERSION
#define DEEPTARGET_VERSION "0.0.0"
#endif

namespace deeptarget::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class UsageError : public Error {
 public:
  using Error::Error;
};

void check_keys(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& where) {
  if (!obj.is_object()) throw UsageError("config: '" + where + "' must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (std::ranges::find(allowed, key) == allowed.end()) {
      throw UsageError("config: unknown key '" + where + "." + key + "'");
    }
  }
}

template <typename T>
void read_key(const json& obj, const char* key, T& target) {
  if (obj.contains(key)) target = obj.at(key).get<T>();
}

std::string hex32(std::uint32_t v) {
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08x", v);
  return buf;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << content;
  if (!out) throw DataError("write failed for '" + path + "'");
}

std::string out_path(const PipelineConfig& cfg, const std::string& name) {
  fs::create_directories(cfg.paths.out_dir);
  return (fs::path(cfg.paths.out_dir) / name).string();
}

const std::string& require(const std::string& value, const char* flag) {
  if (value.empty()) throw UsageError(std::string("missing required ") + flag);
  return value;
}

std::map<std::string, RnaSequence> index_fasta(const std::string& path, std::ostream& log) {
  const FastaParseResult parsed = read_fasta_file(path);
  if (parsed.rejected > 0) log << path << ": " << parsed.rejected << " record(s) with N rejected\n";
  std::map<std::string, RnaSequence> out;
  for (const auto& r : parsed.records) {
    if (!out.emplace(r.id(), r).second) throw DataError(path + ": duplicate id '" + r.id() + "'");
  }
  return out;
}

std::vector<PairExample> read_all_pairs(const PipelineConfig& cfg) {
  if (cfg.paths.pairs.empty()) throw UsageError("missing required --pairs");
  std::vector<PairExample> out;
  for (const auto& path : cfg.paths.pairs) {
    auto part = read_pairs_file(path);
    out.insert(out.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  if (out.empty()) throw DataError("no pairs in the given TSV files");
  return out;
}

class Stopwatch {
 public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

void write_manifest(const PipelineConfig& cfg, RunManifest m, const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs) {
  m.config_json = config_to_json(cfg);
  m.seed = cfg.train.seed;
  m.version = DEEPTARGET_VERSION;
  for (const auto& p : inputs) m.inputs.push_back(digest_file(p));
  for (const auto& p : outputs) m.outputs.push_back(digest_file(p));
  write_file(out_path(cfg, "manifest.json"), m.to_json());
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

PipelineConfig config_from_json(std::string_view text) {
  PipelineConfig cfg;
  try {
    const json j = json::parse(text);
    check_keys(j, {"paths", "k", "seed", "architecture", "train", "mock", "eval"}, "config");
    if (j.contains("paths")) {
      const json& p = j.at("paths");
      check_keys(p, {"mirna_fasta", "mrna_fasta", "pairing", "positives", "pairs", "checkpoint", "out_dir"},
                 "paths");
      read_key(p, "mirna_fasta", cfg.paths.mirna_fasta);
      read_key(p, "mrna_fasta", cfg.paths.mrna_fasta);
      read_key(p, "pairing", cfg.paths.pairing);
      read_key(p, "positives", cfg.paths.positives);
      read_key(p, "pairs", cfg.paths.pairs);
      read_key(p, "checkpoint", cfg.paths.checkpoint);
      read_key(p, "out_dir", cfg.paths.out_dir);
    }
    read_key(j, "k", cfg.k);
    if (j.contains("seed")) {
      const auto seed = j.at("seed").get<std::uint64_t>();
      cfg.train.seed = cfg.mock.rng_seed = cfg.eval_seed = seed;
    }
    if (j.contains("architecture")) {
      const json& a = j.at("architecture");
      check_keys(a, {"ae_hidden", "interaction_widths", "layers", "direction", "cell"}, "architecture");
      read_key(a, "ae_hidden", cfg.arch.ae_hidden);
      if (a.contains("layers")) {
        cfg.arch.interaction_widths =
            ArchitectureSpec::widths_for_depth(a.at("layers").get<std::size_t>(), cfg.arch.ae_hidden);
      }
      read_key(a, "interaction_widths", cfg.arch.interaction_widths);
      if (a.contains("direction")) {
        const auto d = a.at("direction").get<std::string>();
        if (d != "uni" && d != "bi") throw UsageError("config: direction must be 'uni' or 'bi'");
        cfg.arch.direction = d == "bi" ? nn::Direction::Bi : nn::Direction::Uni;
      }
      if (a.contains("cell")) cfg.arch.cell = nn::parse_cell_kind(a.at("cell").get<std::string>());
    }
    if (j.contains("train")) {
      const json& t = j.at("train");
      check_keys(t, {"batch_size", "pretrain_epochs", "finetune_epochs", "dropout", "pretrain_learning_rate",
                     "finetune_learning_rate", "clip_norm", "pretrain_max_sequences", "seed"},
                 "train");
      read_key(t, "batch_size", cfg.train.batch_size);
      read_key(t, "pretrain_epochs", cfg.train.pretrain_epochs);
      read_key(t, "finetune_epochs", cfg.train.finetune_epochs);
      read_key(t, "dropout", cfg.train.dropout);
      read_key(t, "pretrain_learning_rate", cfg.train.pretrain_adam.learning_rate);
      read_key(t, "finetune_learning_rate", cfg.train.finetune_adam.learning_rate);
      read_key(t, "clip_norm", cfg.train.clip_norm);
      read_key(t, "pretrain_max_sequences", cfg.train.pretrain_max_sequences);
      read_key(t, "seed", cfg.train.seed);
    }
    if (j.contains("mock")) {
      const json& m = j.at("mock");
      check_keys(m, {"max_retries", "score_threshold", "seed"}, "mock");
      read_key(m, "max_retries", cfg.mock.max_retries);
      read_key(m, "score_threshold", cfg.mock.score_threshold);
      read_key(m, "seed", cfg.mock.rng_seed);
    }
    if (j.contains("eval")) {
      const json& e = j.at("eval");
      check_keys(e, {"folds", "seed"}, "eval");
      read_key(e, "folds", cfg.folds);
      read_key(e, "seed", cfg.eval_seed);
    }
  } catch (const json::exception& e) {
    throw UsageError(std::string("config: ") + e.what());
  } catch (const DataError& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  cfg.arch.sequence_length = cfg.k;
  return cfg;
}

std::string config_to_json(const PipelineConfig& cfg) {
  json j;
  j["paths"] = {{"mirna_fasta", cfg.paths.mirna_fasta}, {"mrna_fasta", cfg.paths.mrna_fasta},
                {"pairing", cfg.paths.pairing},         {"positives", cfg.paths.positives},
                {"pairs", cfg.paths.pairs},             {"checkpoint", cfg.paths.checkpoint},
                {"out_dir", cfg.paths.out_dir}};
  j["k"] = cfg.k;
  j["architecture"] = {{"ae_hidden", cfg.arch.ae_hidden},
                       {"interaction_widths", cfg.arch.interaction_widths},
                       {"direction", cfg.arch.direction == nn::Direction::Bi ? "bi" : "uni"},
                       {"cell", std::string(nn::to_string(cfg.arch.cell))}};
  j["train"] = {{"batch_size", cfg.train.batch_size},
                {"pretrain_epochs", cfg.train.pretrain_epochs},
                {"finetune_epochs", cfg.train.finetune_epochs},
                {"dropout", cfg.train.dropout},
                {"pretrain_learning_rate", cfg.train.pretrain_adam.learning_rate},
                {"finetune_learning_rate", cfg.train.finetune_adam.learning_rate},
                {"clip_norm", cfg.train.clip_norm},
                {"pretrain_max_sequences", cfg.train.pretrain_max_sequences},
                {"seed", cfg.train.seed}};
  j["mock"] = {{"max_retries", cfg.mock.max_retries},
               {"score_threshold", cfg.mock.score_threshold},
               {"seed", cfg.mock.rng_seed}};
  j["eval"] = {{"folds", cfg.folds}, {"seed", cfg.eval_seed}};
  return j.dump(2);
}

PipelineConfig load_config(const std::string& path) { return config_from_json(read_file(path)); }

std::vector<PairingRow> read_pairing_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open pairing file '" + path + "'");
  std::vector<PairingRow> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1 && line.rfind("mirna_id\t", 0) == 0) continue;
    std::istringstream fields(line);
    PairingRow row;
    std::string label;
    if (!std::getline(fields, row.mirna_id, '\t') || !std::getline(fields, row.mrna_id, '\t') ||
        !std::getline(fields, label) || (label != "0" && label != "1") || row.mirna_id.empty() ||
        row.mrna_id.empty()) {
      throw DataError(path + " line " + std::to_string(line_no) +
                      ": expected mirna_id<TAB>mrna_id<TAB>label with label 0 or 1");
    }
    row.label = label == "1" ? 1 : 0;
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError("pairing file '" + path + "' has no rows");
  return rows;
}

// ---------------------------------------------------------------------------
// Artifacts

std::string RunManifest::to_json() const {
  json j;
  j["command"] = command;
  j["config"] = json::parse(config_json);
  j["seed"] = seed;
  j["version"] = version;
  auto digests = [](const std::vector<FileDigest>& files) {
    json arr = json::array();
    for (const auto& f : files) arr.push_back({{"path", f.path}, {"crc32", f.crc32}});
    return arr;
  };
  j["inputs"] = digests(inputs);
  j["outputs"] = digests(outputs);
  json t = json::object();
  for (const auto& [stage, seconds] : timings) t[stage] = seconds;
  j["timings_seconds"] = t;
  return j.dump(2);
}

FileDigest digest_file(const std::string& path) {
  const std::string bytes = read_file(path);
  const auto* p = reinterpret_cast<const std::uint8_t*>(bytes.data());
  return {path, hex32(crc32_checksum({p, bytes.size()}))};
}

std::string render_pgm(const nn::NumericArray& activations) {
  const std::size_t rows = activations.rows();
  const std::size_t cols = activations.cols();
  std::string out = "P5\n" + std::to_string(cols) + " " + std::to_string(rows) + "\n255\n";
  double lo = INFINITY;
  double hi = -INFINITY;
  for (double v : activations.data()) {
    lo = std::min(lo, std::abs(v));
    hi = std::max(hi, std::abs(v));
  }
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      long shade = 255;
      if (hi > lo) shade = 255 - std::lround(255.0 * (std::abs(activations.at(r, c)) - lo) / (hi - lo));
      out.push_back(static_cast<char>(static_cast<unsigned char>(shade)));
    }
  }
  return out;
}

std::string render_csv(const nn::NumericArray& activations) {
  std::string out;
  for (std::size_t r = 0; r < activations.rows(); ++r) {
    for (std::size_t c = 0; c < activations.cols(); ++c) {
      if (c) out += ',';
      out += fmt(activations.at(r, c));
    }
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Commands

CommandResult cmd_preprocess(const PipelineConfig& cfg, std::ostream& log) {
  Stopwatch clock;
  RunManifest manifest;
  manifest.command = "preprocess";
  const auto mirnas = index_fasta(require(cfg.paths.mirna_fasta, "--mirna"), log);
  const auto mrnas = index_fasta(require(cfg.paths.mrna_fasta, "--mrna"), log);
  const auto rows = read_pairing_file(require(cfg.paths.pairing, "--pairing"));
  manifest.timings.emplace_back("read", clock.lap());

  std::vector<PairExample> sites;
  std::size_t retained = 0;
  std::size_t dropped = 0;
  for (const auto& row : rows) {
    const auto mi = mirnas.find(row.mirna_id);
    if (mi == mirnas.end()) throw DataError("pairing: unknown miRNA id '" + row.mirna_id + "'");
    const auto m = mrnas.find(row.mrna_id);
    if (m == mrnas.end()) throw DataError("pairing: unknown mRNA id '" + row.mrna_id + "'");
    auto found = scan_cts(mi->second, m->second, cfg.k);
    if (found.empty()) {
      ++dropped;
      continue;
    }
    ++retained;
    for (auto& cts : found) sites.push_back(PairExample{mi->second, std::move(cts), row.label, Provenance::Real});
  }
  if (sites.empty()) throw DataError("preprocess: no candidate target sites found in any pair");
  manifest.timings.emplace_back("scan", clock.lap());

  const std::string tsv = out_path(cfg, "sites.tsv");
  write_pairs_file(tsv, sites);
  log << retained << " retained, " << dropped << " dropped\n";
  log << sites.size() << " candidate target sites written to " << tsv << "\n";
  write_manifest(cfg, manifest, {cfg.paths.mirna_fasta, cfg.paths.mrna_fasta, cfg.paths.pairing}, {tsv});
  return {kOk, {tsv}};
}

CommandResult cmd_mock(const PipelineConfig& cfg, std::ostream& log) {
  Stopwatch clock;
  RunManifest manifest;
  manifest.command = "mock";
  const auto all = read_pairs_file(require(cfg.paths.positives, "--positives"));
  std::vector<PairExample> positives;
  for (const auto& p : all) {
    if (p.label == 1) positives.push_back(p);
  }
  if (positives.size() != all.size()) {
    log << (all.size() - positives.size()) << " non-positive row(s) ignored\n";
  }
  if (positives.empty()) throw DataError("mock: no positive pairs in '" + cfg.paths.positives + "'");

  SeedIndex index;
  std::vector<std::string> inputs{cfg.paths.positives};
  for (const auto& p : positives) index.insert(p.mirna);
  if (!cfg.paths.mirna_fasta.empty()) {
    for (const auto& [_, m] : index_fasta(cfg.paths.mirna_fasta, log)) index.insert(m);
    inputs.push_back(cfg.paths.mirna_fasta);
  }
  const NegativeBuildResult result = build_negative_pairs(positives, index, cfg.mock);
  manifest.timings.emplace_back("generate", clock.lap());

  const std::string tsv = out_path(cfg, "negatives.tsv");
  write_pairs_file(tsv, result.pairs);
  log << result.pairs.size() << " negatives from " << positives.size() << " positives; skipped: "
      << result.generation_failures << " generation failures, " << result.no_seed_match
      << " without seed match, " << result.below_threshold << " below threshold\n";
  write_manifest(cfg, manifest, inputs, {tsv});
  if (result.pairs.empty()) {
    log << "warning: no negatives emitted\n";
    return {kEmptyOutput, {tsv}};
  }
  return {kOk, {tsv}};
}

CommandResult cmd_train(const PipelineConfig& cfg, std::ostream& log) {
  Stopwatch clock;
  RunManifest manifest;
  manifest.command = "train";
  const auto pairs = read_all_pairs(cfg);
  log << "architecture " << cfg.arch.render() << " (" << cfg.arch.parameter_count() << " parameters)\n";
  manifest.timings.emplace_back("read", clock.lap());

  const TrainOutcome outcome = train_deeptarget(pairs, cfg.arch, cfg.train);
  manifest.timings.emplace_back("train", clock.lap());

  std::string history = "stage,epoch,mirna_loss,mrna_loss,finetune_loss\n";
  for (std::size_t e = 0; e < outcome.mirna_pretrain_loss.size(); ++e) {
    history += "pretrain," + std::to_string(e + 1) + "," + fmt(outcome.mirna_pretrain_loss[e]) + "," +
               fmt(outcome.mrna_pretrain_loss[e]) + ",\n";
  }
  for (std::size_t e = 0; e < outcome.finetune.epoch_loss.size(); ++e) {
    history += "finetune," + std::to_string(e + 1) + ",,," + fmt(outcome.finetune.epoch_loss[e]) + "\n";
  }
  const std::string ckpt = out_path(cfg, "model.ckpt");
  const std::string csv = out_path(cfg, "history.csv");
  save_checkpoint(outcome.model, ckpt);
  write_file(csv, history);
  if (!outcome.finetune.epoch_loss.empty()) {
    log << "final fine-tuning loss " << outcome.finetune.epoch_loss.back() << "\n";
  }
  write_manifest(cfg, manifest, cfg.paths.pairs, {ckpt, csv});
  return {kOk, {ckpt, csv}};
}

CommandResult cmd_eval(const PipelineConfig& cfg, bool dry_run, std::ostream& log) {
  Stopwatch clock;
  RunManifest manifest;
  manifest.command = dry_run ? "eval --dry-run" : "eval";
  const auto pairs = read_all_pairs(cfg);
  const FoldTrainer trainer = dry_run ? constant_majority_trainer() : deeptarget_trainer(cfg.arch, cfg.train);
  const CrossValidationReport report =
      cross_validate(pairs, trainer, cfg.folds, cfg.eval_seed, worker_count_from_env());
  manifest.timings.emplace_back("cross_validate", clock.lap());

  const std::string json_path = out_path(cfg, "metrics.json");
  const std::string text_path = out_path(cfg, "metrics.txt");
  write_file(json_path, to_json(report));
  const std::string text = to_text(report);
  write_file(text_path, text);
  log << text;
  write_manifest(cfg, manifest, cfg.paths.pairs, {json_path, text_path});
  return {kOk, {json_path, text_path}};
}

CommandResult cmd_predict(const PipelineConfig& cfg, std::ostream& log) {
  Stopwatch clock;
  RunManifest manifest;
  manifest.command = "predict";
  const DeepTargetModel model = load_checkpoint(require(cfg.paths.checkpoint, "--checkpoint"));
  log << "architecture " << model.spec().render() << "\n";
  std::vector<std::string> inputs{cfg.paths.checkpoint};
  std::vector<std::string> outputs;

  if (!cfg.paths.pairs.empty()) {
    const auto pairs = read_all_pairs(cfg);
    const auto preds = predict_sites(model, pairs);
    std::string out = std::string(kPairsHeader) + "\tprobability\tprediction\n";
    std::ostringstream rows;
    write_pairs_tsv(rows, pairs);
    std::istringstream lines(rows.str());
    std::string line;
    std::getline(lines, line);
    for (const auto& p : preds) {
      std::getline(lines, line);
      out += line + "\t" + fmt(p.probability) + "\t" + std::to_string(p.label) + "\n";
    }
    const std::string path = out_path(cfg, "predictions.tsv");
    write_file(path, out);
    inputs.insert(inputs.end(), cfg.paths.pairs.begin(), cfg.paths.pairs.end());
    outputs.push_back(path);
    log << preds.size() << " site predictions written to " << path << "\n";
  }
  if (!cfg.paths.pairing.empty()) {
    const auto mirnas = index_fasta(require(cfg.paths.mirna_fasta, "--mirna"), log);
    const auto mrnas = index_fasta(require(cfg.paths.mrna_fasta, "--mrna"), log);
    const auto rows = read_pairing_file(cfg.paths.pairing);
    std::string out = "mirna_id\tmrna_id\tsites\tprediction\n";
    for (const auto& row : rows) {
      const auto mi = mirnas.find(row.mirna_id);
      const auto m = mrnas.find(row.mrna_id);
      if (mi == mirnas.end() || m == mrnas.end()) {
        throw DataError("pairing: unknown id in row '" + row.mirna_id + "\t" + row.mrna_id + "'");
      }
      const std::size_t sites = scan_cts(mi->second, m->second, model.spec().sequence_length).size();
      const int label = predict_gene(model, mi->second, m->second, model.spec().sequence_length);
      out += row.mirna_id + "\t" + row.mrna_id + "\t" + std::to_string(sites) + "\t" + std::to_string(label) + "\n";
    }
    const std::string path = out_path(cfg, "gene_predictions.tsv");
    write_file(path, out);
    inputs.insert(inputs.end(), {cfg.paths.mirna_fasta, cfg.paths.mrna_fasta, cfg.paths.pairing});
    outputs.push_back(path);
    log << rows.size() << " gene predictions written to " << path << "\n";
  }
  if (outputs.empty()) throw UsageError("predict needs --pairs or --pairing");
  manifest.timings.emplace_back("predict", clock.lap());
  write_manifest(cfg, manifest, inputs, outputs);
  return {kOk, outputs};
}

CommandResult cmd_activations(const PipelineConfig& cfg, std::size_t pair_index, std::ostream& log) {
  Stopwatch clock;
  RunManifest manifest;
  manifest.command = "activations";
  const DeepTargetModel model = load_checkpoint(require(cfg.paths.checkpoint, "--checkpoint"));
  const auto pairs = read_all_pairs(cfg);
  if (pair_index >= pairs.size()) {
    throw DataError("unknown pair id " + std::to_string(pair_index) + " (dataset has " +
                    std::to_string(pairs.size()) + " pairs)");
  }
  const auto layers = capture_activations(model, pairs[pair_index]);
  std::vector<std::string> outputs;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const std::string stem = "activations_pair" + std::to_string(pair_index) + "_layer" + std::to_string(l);
    const std::string csv = out_path(cfg, stem + ".csv");
    const std::string pgm = out_path(cfg, stem + ".pgm");
    write_file(csv, render_csv(layers[l]));
    write_file(pgm, render_pgm(layers[l]));
    outputs.push_back(csv);
    outputs.push_back(pgm);
    log << "layer " << l << ": " << layers[l].rows() << " units x " << layers[l].cols() << " positions\n";
  }
  manifest.timings.emplace_back("capture", clock.lap());
  std::vector<std::string> inputs{cfg.paths.checkpoint};
  inputs.insert(inputs.end(), cfg.paths.pairs.begin(), cfg.paths.pairs.end());
  write_manifest(cfg, manifest, inputs, outputs);
  return {kOk, outputs};
}

// ---------------------------------------------------------------------------
// Entry point

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"miRNA target prediction with pretrained recurrent autoencoders", "deeptarget"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", DEEPTARGET_VERSION);

  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::string cell;
  std::size_t layers = 0;
  bool bidirectional = false;
  double dropout = 0.0;
  std::size_t k = 0;
  std::size_t folds = 0;
  Paths paths;
  std::size_t pair_index = 0;
  bool dry_run = false;

  app.add_option("--config", config_path, "JSON pipeline configuration")->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "Seed for training, mock generation and folds");
  auto* out_opt = app.add_option("--out", out_dir, "Output directory");
  auto* cell_opt = app.add_option("--cell", cell, "Recurrent cell")->check(CLI::IsMember({"gru", "lstm"}));
  auto* layers_opt = app.add_option("--layers", layers, "Interaction depth")->check(CLI::Range(1, 3));
  auto* bi_opt = app.add_flag("--bidirectional", bidirectional, "Bidirectional interaction layers");
  auto* dropout_opt = app.add_option("--dropout", dropout, "Dropout on interaction outputs");
  auto* k_opt = app.add_option("--k", k, "Candidate target site length")->check(CLI::PositiveNumber);
  auto* folds_opt = app.add_option("--folds", folds, "Cross-validation folds")->check(CLI::Range(2, 1000));
  auto* mirna_opt = app.add_option("--mirna", paths.mirna_fasta, "miRNA FASTA");
  auto* mrna_opt = app.add_option("--mrna", paths.mrna_fasta, "mRNA FASTA");
  auto* pairing_opt = app.add_option("--pairing", paths.pairing, "miRNA/mRNA pairing TSV");
  auto* pos_opt = app.add_option("--positives", paths.positives, "Positive pair TSV");
  auto* pairs_opt = app.add_option("--pairs", paths.pairs, "Pair TSV file(s)");
  auto* ckpt_opt = app.add_option("--checkpoint", paths.checkpoint, "Model checkpoint");

  app.add_subcommand("preprocess", "Scan paired sequences for candidate target sites");
  app.add_subcommand("mock", "Build mock-miRNA negative pairs");
  app.add_subcommand("train", "Pretrain autoencoders and fine-tune the full model");
  auto* eval = app.add_subcommand("eval", "Stratified k-fold cross-validation");
  eval->add_flag("--dry-run", dry_run, "Use a constant majority-class model");
  app.add_subcommand("predict", "Site- or gene-level predictions from a checkpoint");
  auto* act = app.add_subcommand("activations", "Export interaction-layer activations");
  act->add_option("--pair", pair_index, "0-based row of the pair in --pairs")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    PipelineConfig cfg = config_path.empty() ? PipelineConfig{} : load_config(config_path);
    if (*seed_opt) cfg.train.seed = cfg.mock.rng_seed = cfg.eval_seed = seed;
    if (*out_opt) cfg.paths.out_dir = out_dir;
    if (*cell_opt) cfg.arch.cell = nn::parse_cell_kind(cell);
    if (*layers_opt) cfg.arch.interaction_widths = ArchitectureSpec::widths_for_depth(layers, cfg.arch.ae_hidden);
    if (*bi_opt) cfg.arch.direction = bidirectional ? nn::Direction::Bi : nn::Direction::Uni;
    if (*dropout_opt) cfg.train.dropout = dropout;
    if (*k_opt) cfg.k = k;
    if (*folds_opt) cfg.folds = folds;
    if (*mirna_opt) cfg.paths.mirna_fasta = paths.mirna_fasta;
    if (*mrna_opt) cfg.paths.mrna_fasta = paths.mrna_fasta;
    if (*pairing_opt) cfg.paths.pairing = paths.pairing;
    if (*pos_opt) cfg.paths.positives = paths.positives;
    if (*pairs_opt) cfg.paths.pairs = paths.pairs;
    if (*ckpt_opt) cfg.paths.checkpoint = paths.checkpoint;
    cfg.arch.sequence_length = cfg.k;
    try {
      cfg.arch.validate();
      cfg.train.validate();
      cfg.mock.validate();
    } catch (const DataError& e) {
      throw UsageError(e.what());
    }

    const std::string name = app.get_subcommands().front()->get_name();
    CommandResult result;
    if (name == "preprocess") {
      result = cmd_preprocess(cfg, out);
    } else if (name == "mock") {
      result = cmd_mock(cfg, out);
    } else if (name == "train") {
      result = cmd_train(cfg, out);
    } else if (name == "eval") {
      result = cmd_eval(cfg, dry_run, out);
    } else if (name == "predict") {
      result = cmd_predict(cfg, out);
    } else {
      result = cmd_activations(cfg, pair_index, out);
    }
    return result.exit_code;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kNumeric;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kData;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kData;
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace deeptarget::cli
