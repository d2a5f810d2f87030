#include "cdg/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include <boost/math/distributions/students_t.hpp>

#include "cdg/common/errors.hpp"
#include "cdg/common/log.hpp"

namespace cdg {

namespace {

using NGramCounts = std::map<Tokens, std::size_t>;

NGramCounts ngrams(const Tokens& tokens, std::size_t n) {
  NGramCounts counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i)
    ++counts[Tokens(tokens.begin() + static_cast<std::ptrdiff_t>(i), tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  return counts;
}

std::size_t clipped_matches(const NGramCounts& hyp, const NGramCounts& ref) {
  std::size_t matches = 0;
  for (const auto& [gram, count] : hyp) {
    auto it = ref.find(gram);
    if (it != ref.end()) matches += std::min(count, it->second);
  }
  return matches;
}

std::size_t total_ngrams(std::size_t length, std::size_t n) { return length >= n ? length - n + 1 : 0; }

void check_order(std::size_t n) {
  if (n == 0) throw UsageError("n-gram order must be at least 1");
}

void check_nonempty(const std::vector<EvalPair>& pairs, const char* metric) {
  if (pairs.empty()) throw DataError(std::string(metric) + " needs at least one hypothesis");
}

double brevity_penalty(double hyp_length, double ref_length) {
  if (hyp_length >= ref_length) return 1.0;
  if (hyp_length == 0.0) return 0.0;
  return std::exp(1.0 - ref_length / hyp_length);
}

}  // namespace

double corpus_bleu(const std::vector<EvalPair>& pairs, std::size_t n) {
  check_order(n);
  check_nonempty(pairs, "BLEU");
  std::vector<std::size_t> matches(n, 0), totals(n, 0);
  double hyp_length = 0.0, ref_length = 0.0;
  for (const auto& p : pairs) {
    hyp_length += static_cast<double>(p.hypothesis.size());
    ref_length += static_cast<double>(p.reference.size());
    for (std::size_t k = 1; k <= n; ++k) {
      matches[k - 1] += clipped_matches(ngrams(p.hypothesis, k), ngrams(p.reference, k));
      totals[k - 1] += total_ngrams(p.hypothesis.size(), k);
    }
  }
  double log_sum = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (matches[k] == 0) return 0.0;
    log_sum += std::log(static_cast<double>(matches[k]) / static_cast<double>(totals[k]));
  }
  return 100.0 * brevity_penalty(hyp_length, ref_length) * std::exp(log_sum / static_cast<double>(n));
}

double sentence_bleu(const EvalPair& pair, std::size_t n) {
  check_order(n);
  double log_sum = 0.0;
  for (std::size_t k = 1; k <= n; ++k) {
    double m = static_cast<double>(clipped_matches(ngrams(pair.hypothesis, k), ngrams(pair.reference, k)));
    double t = static_cast<double>(total_ngrams(pair.hypothesis.size(), k));
    if (k >= 2) {
      m += 1.0;
      t += 1.0;
    }
    if (m == 0.0) return 0.0;
    log_sum += std::log(m / t);
  }
  const double bp = brevity_penalty(static_cast<double>(pair.hypothesis.size()), static_cast<double>(pair.reference.size()));
  return 100.0 * bp * std::exp(log_sum / static_cast<double>(n));
}

double sentence_average_bleu(const std::vector<EvalPair>& pairs, std::size_t n) {
  check_nonempty(pairs, "BLEU");
  double sum = 0.0;
  for (const auto& p : pairs) sum += sentence_bleu(p, n);
  return sum / static_cast<double>(pairs.size());
}

std::size_t lcs_length(const Tokens& a, const Tokens& b) {
  std::vector<std::size_t> row(b.size() + 1, 0), prev(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::swap(row, prev);
    for (std::size_t j = 1; j <= b.size(); ++j)
      row[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], row[j - 1]);
  }
  return a.empty() ? 0 : row[b.size()];
}

double rouge_l(const EvalPair& pair) {
  const auto lcs = static_cast<double>(lcs_length(pair.hypothesis, pair.reference));
  if (lcs == 0.0) return 0.0;
  const double precision = lcs / static_cast<double>(pair.hypothesis.size());
  const double recall = lcs / static_cast<double>(pair.reference.size());
  const double b2 = kRougeBeta * kRougeBeta;
  return (1.0 + b2) * precision * recall / (recall + b2 * precision);
}

double rouge_l(const std::vector<EvalPair>& pairs) {
  check_nonempty(pairs, "ROUGE-L");
  double sum = 0.0;
  for (const auto& p : pairs) sum += rouge_l(p);
  return sum / static_cast<double>(pairs.size());
}

std::vector<double> cider_per_pair(const std::vector<EvalPair>& pairs) {
  constexpr std::size_t kMaxN = 4;
  if (pairs.size() < 2) {
    throw DataError("CIDEr needs at least 2 pairs: its idf weights come from document frequencies over the references");
  }
  const double log_docs = std::log(static_cast<double>(pairs.size()));
  std::vector<std::map<Tokens, double>> df(kMaxN);
  for (const auto& p : pairs)
    for (std::size_t n = 1; n <= kMaxN; ++n)
      for (const auto& entry : ngrams(p.reference, n)) df[n - 1][entry.first] += 1.0;

  auto vectorize = [&](const Tokens& tokens, std::size_t n, double& norm) {
    std::map<Tokens, double> vec;
    norm = 0.0;
    for (const auto& [gram, tf] : ngrams(tokens, n)) {
      auto it = df[n - 1].find(gram);
      const double d = it == df[n - 1].end() ? 0.0 : it->second;
      const double w = static_cast<double>(tf) * (log_docs - std::log(std::max(1.0, d)));
      vec[gram] = w;
      norm += w * w;
    }
    norm = std::sqrt(norm);
    return vec;
  };

  std::vector<double> scores;
  scores.reserve(pairs.size());
  for (const auto& p : pairs) {
    double total = 0.0;
    for (std::size_t n = 1; n <= kMaxN; ++n) {
      double hyp_norm = 0.0, ref_norm = 0.0;
      const auto hyp = vectorize(p.hypothesis, n, hyp_norm);
      const auto ref = vectorize(p.reference, n, ref_norm);
      if (hyp_norm == 0.0 || ref_norm == 0.0) continue;
      double dot = 0.0;
      for (const auto& [gram, w] : hyp) {
        auto it = ref.find(gram);
        if (it != ref.end()) dot += w * it->second;
      }
      total += dot / (hyp_norm * ref_norm);
    }
    scores.push_back(10.0 * total / static_cast<double>(kMaxN));
  }
  return scores;
}

double cider(const std::vector<EvalPair>& pairs) {
  const auto scores = cider_per_pair(pairs);
  return std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(scores.size());
}

double distinct_n(const std::vector<Tokens>& hypotheses, std::size_t n) {
  check_order(n);
  std::set<Tokens> unique;
  std::size_t total = 0;
  for (const auto& h : hypotheses) {
    for (const auto& entry : ngrams(h, n)) unique.insert(entry.first);
    total += total_ngrams(h.size(), n);
  }
  if (total == 0) {
    log::warning("Distinct-" + std::to_string(n) + ": hypotheses contain no " + std::to_string(n) +
                 "-grams, reporting 0");
    return 0.0;
  }
  return static_cast<double>(unique.size()) / static_cast<double>(total);
}

double average_length(const std::vector<Tokens>& hypotheses) {
  if (hypotheses.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& h : hypotheses) sum += static_cast<double>(h.size());
  return sum / static_cast<double>(hypotheses.size());
}

TTest paired_t_test(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) {
    throw DataError("paired t-test needs equal lengths, got " + std::to_string(a.size()) + " and " +
                    std::to_string(b.size()));
  }
  if (a.size() < 2) throw DataError("paired t-test needs at least 2 samples");
  const double n = static_cast<double>(a.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) mean += a[i] - b[i];
  mean /= n;
  double ss = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) ss += (a[i] - b[i] - mean) * (a[i] - b[i] - mean);
  TTest out;
  out.degrees_of_freedom = a.size() - 1;
  const double se = std::sqrt(ss / (n - 1.0) / n);
  if (se == 0.0) {
    if (mean == 0.0) return out;
    out.t = mean > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
    out.p = 0.0;
    return out;
  }
  out.t = mean / se;
  boost::math::students_t dist(n - 1.0);
  out.p = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(out.t))));
  return out;
}

std::string significance_mark(double p) {
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  return "";
}

}  // namespace cdg
