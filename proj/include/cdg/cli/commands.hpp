#pragma once

#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "cdg/cli/run_config.hpp"
#include "cdg/cli/synthetic.hpp"
#include "cdg/data/masking.hpp"
#include "cdg/decoding/generator.hpp"
#include "cdg/metrics/report.hpp"

namespace cdg {

// Process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,    // anything not listed below
  kExitConfig = 2,     // ConfigError, bad command line
  kExitIo = 3,         // IoError, DataError (unreadable or malformed input)
  kExitNumerical = 4,  // NumericalError
};

int exit_code_for(const std::exception& e);

// $CDG_RUN_ROOT, or "runs" under the working directory.
std::filesystem::path default_run_root();

// Exclusive ".lock" file in a run directory for the lifetime of the object.
class RunLock {
 public:
  explicit RunLock(const std::filesystem::path& dir);
  ~RunLock();
  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;

 private:
  std::filesystem::path path_;
};

struct BuildVocabOptions {
  std::vector<std::filesystem::path> dialogues;
  std::vector<std::filesystem::path> texts;
  std::size_t min_count = 1;
};
Vocabulary cmd_build_vocab(const BuildVocabOptions& options, const std::filesystem::path& out);

TfIdfTable cmd_tfidf(const std::filesystem::path& texts, const std::filesystem::path& vocab,
                     const std::filesystem::path& out);

struct TrainOutcome {
  std::filesystem::path run_dir;
  Pipeline pipeline;
  TrainResult result;
  nlohmann::json metadata;
};

// Writes config.cfg (the frozen effective config), vocab.txt, log.jsonl,
// checkpoint.ckpt (rewritten after every epoch) and metadata.json.
TrainOutcome cmd_train(RunConfig config, const std::filesystem::path& run_dir);

// `vocab`, when given, must match the checkpoint's vocabulary.
GenerationSummary cmd_generate(const std::filesystem::path& checkpoint, const std::filesystem::path& input,
                               const std::filesystem::path& output, const DecodeConfig& config, std::size_t threads,
                               const std::optional<std::filesystem::path>& vocab = std::nullopt);

struct EvaluateOutcome {
  EvalReport report;
  std::optional<EvalReport> baseline;
  std::vector<MetricComparison> comparison;
  std::string text;
  nlohmann::json json;
};
EvaluateOutcome cmd_evaluate(const std::filesystem::path& hypotheses, const std::filesystem::path& references,
                             const std::optional<std::filesystem::path>& baseline, bool sentence_bleu);

// Rows in the given order; every row after the first carries the paired
// significance marks of its BLEU-1, BLEU-2 and Dist-2 against the first.
std::string gate_comparison_table(const std::vector<std::pair<std::string, EvalReport>>& runs);

struct GateRun {
  std::string variant;
  double final_loss = 0.0;
  EvalReport report;
};
struct AblateGatesOutcome {
  std::vector<GateRun> runs;
  std::string table;
};
// One training run per gate variant under <root>/<variant>, identical seeds
// and data order, each decoded on data.test and scored against it.
AblateGatesOutcome cmd_ablate_gates(const RunConfig& config, const std::filesystem::path& root);

enum class SampleFileKind { dialogue, text };
std::string cmd_inspect_masks(const std::filesystem::path& file, SampleFileKind kind, std::size_t index,
                              TextAttention attention, std::size_t max_length);

SyntheticManifest cmd_make_synthetic(const SyntheticConfig& config, const std::filesystem::path& out);

}  // namespace cdg
