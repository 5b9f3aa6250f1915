#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "deeptarget/mockgen.hpp"
#include "deeptarget/model.hpp"
#include "deeptarget/nn/array.hpp"

namespace deeptarget::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kData = 2,
  kNumeric = 3,
  kEmptyOutput = 4,
};

struct Paths {
  std::string mirna_fasta;
  std::string mrna_fasta;
  std::string pairing;    // TSV: mirna_id, mrna_id, label
  std::string positives;  // pair TSV fed to `mock`
  std::vector<std::string> pairs;
  std::string checkpoint;
  std::string out_dir = "out";
};

struct PipelineConfig {
  Paths paths;
  std::size_t k = kDefaultSiteLength;
  ArchitectureSpec arch;
  TrainConfig train;
  MockConfig mock;
  std::size_t folds = 10;
  std::uint64_t eval_seed = 1;
};

/// Missing keys keep their defaults; unknown keys are rejected.
PipelineConfig config_from_json(std::string_view text);
std::string config_to_json(const PipelineConfig& cfg);
PipelineConfig load_config(const std::string& path);

/// One "mirna_id<TAB>mrna_id<TAB>label" row of the pairing file.
struct PairingRow {
  std::string mirna_id;
  std::string mrna_id;
  int label = 0;
};
std::vector<PairingRow> read_pairing_file(const std::string& path);

struct FileDigest {
  std::string path;
  std::string crc32;  // 8 lowercase hex digits
};

struct RunManifest {
  std::string command;
  std::string config_json;
  std::uint64_t seed = 0;
  std::string version;
  std::vector<FileDigest> inputs;
  std::vector<std::pair<std::string, double>> timings;  // stage, seconds
  std::vector<FileDigest> outputs;

  std::string to_json() const;
};

FileDigest digest_file(const std::string& path);

/// Grayscale P5 image, one row per unit and one column per position.
/// Darker means larger |activation| after min-max scaling over the matrix;
/// a constant matrix renders all white.
std::string render_pgm(const nn::NumericArray& activations);
std::string render_csv(const nn::NumericArray& activations);

struct CommandResult {
  int exit_code = kOk;
  std::vector<std::string> outputs;
};

CommandResult cmd_preprocess(const PipelineConfig& cfg, std::ostream& log);
CommandResult cmd_mock(const PipelineConfig& cfg, std::ostream& log);
CommandResult cmd_train(const PipelineConfig& cfg, std::ostream& log);
CommandResult cmd_eval(const PipelineConfig& cfg, bool dry_run, std::ostream& log);
CommandResult cmd_predict(const PipelineConfig& cfg, std::ostream& log);
CommandResult cmd_activations(const PipelineConfig& cfg, std::size_t pair_index, std::ostream& log);

/// Parses arguments, runs one command and maps failures to exit codes.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace deeptarget::cli
