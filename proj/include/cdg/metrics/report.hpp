#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "cdg/metrics/metrics.hpp"

namespace cdg {

struct EvalOptions {
  bool sentence_average_bleu = false;  // report mean smoothed sentence BLEU instead of corpus BLEU
};

// Per-hypothesis scores kept for significance tests. Distinct-n here is the
// within-hypothesis ratio; the corpus figure has no per-sample form.
struct SampleScores {
  std::vector<double> bleu1, bleu2, bleu3, rouge_l, cider, dist1, dist2, length;
};

struct EvalReport {
  std::size_t count = 0;
  double bleu1 = 0, bleu2 = 0, bleu3 = 0, rouge_l = 0, cider = 0, dist1 = 0, dist2 = 0, avg_len = 0;
  bool sentence_average_bleu = false;
  SampleScores samples;

  nlohmann::json to_json(bool include_samples = false) const;
};

EvalReport evaluate(const std::vector<EvalPair>& pairs, const EvalOptions& options = {});

struct MetricComparison {
  std::string metric;
  double value = 0.0;
  double baseline = 0.0;
  TTest test;
  std::string mark;
};

// Paired tests of every per-sample series against the baseline's.
std::vector<MetricComparison> compare(const EvalReport& system, const EvalReport& baseline);

const std::vector<std::string>& report_metric_names();
double metric_value(const EvalReport& report, const std::string& metric);
const std::vector<double>& metric_samples(const EvalReport& report, const std::string& metric);

// Fixed-width table, one row per system: name then the chosen metrics; each
// value carries its significance mark when marks are given.
struct TableRow {
  std::string name;
  std::vector<double> values;
  std::vector<std::string> marks;
};
std::string render_table(const std::vector<std::string>& metrics, const std::vector<TableRow>& rows);

// Hypotheses (generation output, JSON lines with "index" and "hypothesis")
// matched to references (dialogue JSON lines, "response"). Each well-formed
// reference line must have exactly one hypothesis with its index, in order.
std::vector<EvalPair> load_eval_pairs(const std::filesystem::path& hypotheses, const std::filesystem::path& references);

}  // namespace cdg
