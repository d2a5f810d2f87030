#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace cdg {

using Tokens = std::vector<std::string>;

struct EvalPair {
  Tokens hypothesis;
  Tokens reference;
};

// Corpus BLEU-n x 100: clipped k-gram counts and hypothesis k-gram totals are
// pooled over all pairs before taking precisions; one brevity penalty from
// the pooled lengths. Unsmoothed, so any empty precision gives 0.
double corpus_bleu(const std::vector<EvalPair>& pairs, std::size_t n);

// Sentence BLEU-n x 100 with add-one smoothing on the k >= 2 precisions.
double sentence_bleu(const EvalPair& pair, std::size_t n);

// Mean of sentence_bleu over pairs.
double sentence_average_bleu(const std::vector<EvalPair>& pairs, std::size_t n);

std::size_t lcs_length(const Tokens& a, const Tokens& b);

constexpr double kRougeBeta = 1.2;

double rouge_l(const EvalPair& pair);
double rouge_l(const std::vector<EvalPair>& pairs);  // mean F over pairs

// Plain CIDEr (no length penalty, no clipping), n = 1..4, idf from the
// references, x 10. Needs at least two pairs.
std::vector<double> cider_per_pair(const std::vector<EvalPair>& pairs);
double cider(const std::vector<EvalPair>& pairs);

// Distinct n-grams over all hypotheses divided by the total n-gram count.
double distinct_n(const std::vector<Tokens>& hypotheses, std::size_t n);
double average_length(const std::vector<Tokens>& hypotheses);

struct TTest {
  double t = 0.0;
  double p = 1.0;
  std::size_t degrees_of_freedom = 0;
};

// Two-sided paired t-test on a - b. Zero-variance differences give t = 0,
// p = 1 when the mean is zero and t = +-inf, p = 0 otherwise.
TTest paired_t_test(const std::vector<double>& a, const std::vector<double>& b);

// "**" below 0.01, "*" below 0.05, else "".
std::string significance_mark(double p);

}  // namespace cdg
