#include "cdg/metrics/report.hpp"

#include <cstdio>
#include <fstream>
#include <map>

#include <nlohmann/json.hpp>

#include "cdg/common/errors.hpp"
#include "cdg/data/corpus.hpp"

namespace cdg {

namespace {

double within_distinct(const Tokens& tokens, std::size_t n) {
  if (tokens.size() < n) return 0.0;
  std::vector<Tokens> grams;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i)
    grams.emplace_back(tokens.begin() + static_cast<std::ptrdiff_t>(i), tokens.begin() + static_cast<std::ptrdiff_t>(i + n));
  std::sort(grams.begin(), grams.end());
  const auto unique = static_cast<double>(std::unique(grams.begin(), grams.end()) - grams.begin());
  return unique / static_cast<double>(tokens.size() - n + 1);
}

}  // namespace

nlohmann::json EvalReport::to_json(bool include_samples) const {
  nlohmann::json j = {{"count", count},     {"bleu1", bleu1}, {"bleu2", bleu2}, {"bleu3", bleu3},
                      {"rouge_l", rouge_l}, {"cider", cider}, {"dist1", dist1}, {"dist2", dist2},
                      {"avg_len", avg_len}, {"bleu_mode", sentence_average_bleu ? "sentence_average" : "corpus"}};
  if (include_samples) {
    auto& s = j["samples"];
    for (const auto& m : report_metric_names()) s[m] = metric_samples(*this, m);
  }
  return j;
}

EvalReport evaluate(const std::vector<EvalPair>& pairs, const EvalOptions& options) {
  if (pairs.empty()) throw DataError("nothing to evaluate: the hypothesis set is empty");
  EvalReport r;
  r.count = pairs.size();
  r.sentence_average_bleu = options.sentence_average_bleu;
  if (options.sentence_average_bleu) {
    r.bleu1 = sentence_average_bleu(pairs, 1);
    r.bleu2 = sentence_average_bleu(pairs, 2);
    r.bleu3 = sentence_average_bleu(pairs, 3);
  } else {
    r.bleu1 = corpus_bleu(pairs, 1);
    r.bleu2 = corpus_bleu(pairs, 2);
    r.bleu3 = corpus_bleu(pairs, 3);
  }
  r.rouge_l = rouge_l(pairs);
  r.samples.cider = cider_per_pair(pairs);
  r.cider = cider(pairs);
  std::vector<Tokens> hyps;
  for (const auto& p : pairs) {
    hyps.push_back(p.hypothesis);
    r.samples.bleu1.push_back(sentence_bleu(p, 1));
    r.samples.bleu2.push_back(sentence_bleu(p, 2));
    r.samples.bleu3.push_back(sentence_bleu(p, 3));
    r.samples.rouge_l.push_back(rouge_l(p));
    r.samples.dist1.push_back(within_distinct(p.hypothesis, 1));
    r.samples.dist2.push_back(within_distinct(p.hypothesis, 2));
    r.samples.length.push_back(static_cast<double>(p.hypothesis.size()));
  }
  r.dist1 = distinct_n(hyps, 1);
  r.dist2 = distinct_n(hyps, 2);
  r.avg_len = average_length(hyps);
  return r;
}

const std::vector<std::string>& report_metric_names() {
  static const std::vector<std::string> names{"bleu1", "bleu2", "bleu3", "rouge_l",
                                              "cider", "dist1", "dist2", "avg_len"};
  return names;
}

double metric_value(const EvalReport& r, const std::string& metric) {
  if (metric == "bleu1") return r.bleu1;
  if (metric == "bleu2") return r.bleu2;
  if (metric == "bleu3") return r.bleu3;
  if (metric == "rouge_l") return r.rouge_l;
  if (metric == "cider") return r.cider;
  if (metric == "dist1") return r.dist1;
  if (metric == "dist2") return r.dist2;
  if (metric == "avg_len") return r.avg_len;
  throw ConfigError("unknown metric '" + metric + "'");
}

const std::vector<double>& metric_samples(const EvalReport& r, const std::string& metric) {
  if (metric == "bleu1") return r.samples.bleu1;
  if (metric == "bleu2") return r.samples.bleu2;
  if (metric == "bleu3") return r.samples.bleu3;
  if (metric == "rouge_l") return r.samples.rouge_l;
  if (metric == "cider") return r.samples.cider;
  if (metric == "dist1") return r.samples.dist1;
  if (metric == "dist2") return r.samples.dist2;
  if (metric == "avg_len") return r.samples.length;
  throw ConfigError("unknown metric '" + metric + "'");
}

std::vector<MetricComparison> compare(const EvalReport& system, const EvalReport& baseline) {
  if (system.count != baseline.count) {
    throw DataError("cannot compare reports over " + std::to_string(system.count) + " and " +
                    std::to_string(baseline.count) + " samples");
  }
  std::vector<MetricComparison> out;
  for (const auto& m : report_metric_names()) {
    MetricComparison c;
    c.metric = m;
    c.value = metric_value(system, m);
    c.baseline = metric_value(baseline, m);
    c.test = paired_t_test(metric_samples(system, m), metric_samples(baseline, m));
    c.mark = significance_mark(c.test.p);
    out.push_back(c);
  }
  return out;
}

std::string render_table(const std::vector<std::string>& metrics, const std::vector<TableRow>& rows) {
  std::size_t name_width = 6;
  for (const auto& r : rows) name_width = std::max(name_width, r.name.size());
  auto pad = [](std::string s, std::size_t w) {
    if (s.size() < w) s.append(w - s.size(), ' ');
    return s;
  };
  std::string out = pad("system", name_width);
  for (const auto& m : metrics) out += "  " + pad(m, 10);
  out += "\n";
  for (const auto& r : rows) {
    if (r.values.size() != metrics.size() || (!r.marks.empty() && r.marks.size() != metrics.size())) {
      throw UsageError("table row '" + r.name + "' does not match the metric columns");
    }
    out += pad(r.name, name_width);
    for (std::size_t i = 0; i < metrics.size(); ++i) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.4f", r.values[i]);
      out += "  " + pad(buf + (r.marks.empty() ? std::string() : r.marks[i]), 10);
    }
    out += "\n";
  }
  return out;
}

std::vector<EvalPair> load_eval_pairs(const std::filesystem::path& hypotheses, const std::filesystem::path& references) {
  const auto refs = read_dialogue_lines(references);
  std::ifstream in(hypotheses);
  if (!in) throw IoError("cannot open hypotheses file " + hypotheses.string());
  std::map<std::size_t, Tokens> hyps;
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::size_t> order;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = nlohmann::json::parse(line);
      order.push_back(j.at("index").get<std::size_t>());
      hyps[order.back()] = split_whitespace(j.at("hypothesis").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      throw DataError(hypotheses.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  std::vector<std::size_t> expected;
  for (std::size_t i = 0; i < refs.size(); ++i)
    if (refs[i]) expected.push_back(i);
  for (std::size_t k = 0; k < std::max(expected.size(), order.size()); ++k) {
    if (k >= expected.size() || k >= order.size() || expected[k] != order[k]) {
      const std::size_t where = k < expected.size() ? expected[k] : order[k];
      throw DataError("hypotheses and references are misaligned at index " + std::to_string(where) + " (" +
                      std::to_string(order.size()) + " hypotheses, " + std::to_string(expected.size()) +
                      " references)");
    }
  }
  std::vector<EvalPair> pairs;
  for (std::size_t i : expected) pairs.push_back({hyps[i], split_whitespace(refs[i]->response)});
  return pairs;
}

}  // namespace cdg
