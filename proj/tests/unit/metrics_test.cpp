#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "cdg/common/errors.hpp"
#include "cdg/common/log.hpp"
#include "cdg/common/random.hpp"
#include "cdg/metrics/report.hpp"
#include "metric_oracle.hpp"

using namespace cdg;
namespace oracle = cdg::testing;

namespace {

std::vector<EvalPair> make_pairs(const std::vector<std::pair<std::string, std::string>>& texts) {
  std::vector<EvalPair> out;
  for (const auto& [h, r] : texts) out.push_back({oracle::words(h), oracle::words(r)});
  return out;
}

// Small fixtures with repeats, short hypotheses and partial overlap.
const std::vector<std::vector<std::pair<std::string, std::string>>>& fixtures() {
  static const std::vector<std::vector<std::pair<std::string, std::string>>> f{
      {{"a a a", "a b"}, {"the cat sat on the mat", "the cat is on the mat"}},
      {{"i like red apples", "i like green apples a lot"},
       {"you are nice", "you are very nice"},
       {"hello there", "hello"}},
      {{"x y z x y", "x y z"}, {"p q", "q p"}, {"m n o p", "m n o p"}, {"a b c d", "a c d"}},
      {{"one two three four five", "one two three four six"},
       {"red blue", "blue red green"},
       {"a b a b a", "b a b a b"},
       {"k", "k l m"},
       {"the end", "the end of it"}},
  };
  return f;
}

std::pair<std::vector<oracle::Sentence>, std::vector<oracle::Sentence>> split(const std::vector<EvalPair>& pairs) {
  std::vector<oracle::Sentence> h, r;
  for (const auto& p : pairs) h.push_back(p.hypothesis), r.push_back(p.reference);
  return {h, r};
}

}  // namespace

TEST(Bleu, ClippedUnigramPrecision) {
  auto pairs = make_pairs({{"a a a", "a b"}});
  // One "a" in the reference clips the three hypothesis "a"s to 1 of 3;
  // the hypothesis is longer, so no brevity penalty.
  EXPECT_NEAR(corpus_bleu(pairs, 1), 100.0 / 3.0, 1e-12);
}

TEST(Bleu, SelfEvaluationIsExactlyHundred) {
  auto pairs = make_pairs({{"a b c d", "a b c d"}, {"hello world again", "hello world again"}});
  EXPECT_EQ(corpus_bleu(pairs, 1), 100.0);
  EXPECT_EQ(corpus_bleu(pairs, 2), 100.0);
  EXPECT_EQ(corpus_bleu(pairs, 3), 100.0);
  EXPECT_EQ(evaluate(pairs).bleu1, 100.0);
}

TEST(Bleu, MissingOrderGivesZero) {
  EXPECT_EQ(corpus_bleu(make_pairs({{"a b", "b a"}}), 2), 0.0);
  EXPECT_EQ(corpus_bleu(make_pairs({{"x y", "a b"}}), 1), 0.0);
}

TEST(Bleu, BrevityPenalty) {
  auto pairs = make_pairs({{"a b", "a b c d"}});
  EXPECT_NEAR(corpus_bleu(pairs, 1), 100.0 * std::exp(1.0 - 2.0), 1e-12);
}

TEST(Bleu, EmptySetIsAnError) { EXPECT_THROW(corpus_bleu({}, 1), DataError); }

TEST(Bleu, SentenceSmoothingKeepsPartialMatchesAboveZero) {
  EvalPair p{oracle::words("a b"), oracle::words("b a")};
  // p1 = 2/2, p2 = (0+1)/(1+1).
  EXPECT_NEAR(sentence_bleu(p, 2), 100.0 * std::sqrt(0.5), 1e-12);
  EXPECT_EQ(sentence_bleu({oracle::words("x"), oracle::words("y")}, 2), 0.0);
}

TEST(Rouge, HandExample) {
  // LCS("a b c d", "a c d") = 3, P = 3/4, R = 1.
  const double p = 0.75, r = 1.0, b2 = 1.2 * 1.2;
  EXPECT_EQ(lcs_length(oracle::words("a b c d"), oracle::words("a c d")), 3u);
  EXPECT_NEAR(rouge_l(EvalPair{oracle::words("a b c d"), oracle::words("a c d")}), (1 + b2) * r * p / (r + b2 * p),
              1e-12);
}

TEST(Rouge, IdenticalAndDisjoint) {
  EXPECT_EQ(rouge_l(EvalPair{oracle::words("a b c"), oracle::words("a b c")}), 1.0);
  EXPECT_EQ(rouge_l(EvalPair{oracle::words("a b c"), oracle::words("d e")}), 0.0);
  EXPECT_EQ(rouge_l(EvalPair{{}, oracle::words("d e")}), 0.0);
}

TEST(Cider, NeedsTwoPairs) {
  try {
    cider(make_pairs({{"a", "a"}}));
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("idf"), std::string::npos);
  }
}

TEST(Cider, NoSharedNGramsScoresZero) {
  auto scores = cider_per_pair(make_pairs({{"x y", "a b"}, {"c d e", "c d e"}}));
  EXPECT_EQ(scores[0], 0.0);
  EXPECT_GT(scores[1], 0.0);
}

TEST(Cider, SelfSimilarityIsMaximalPerOrder) {
  // Every n-gram order present in a reference contributes a cosine of 1.
  auto pairs = make_pairs({{"a b c d e", "a b c d e"}, {"f g h i", "f g h i"}, {"j k", "j k"}});
  auto s = cider_per_pair(pairs);
  EXPECT_NEAR(s[0], 10.0, 1e-12);
  EXPECT_NEAR(s[1], 10.0, 1e-12);
  EXPECT_NEAR(s[2], 10.0 * 2.0 / 4.0, 1e-12);
}

TEST(Distinct, Examples) {
  EXPECT_DOUBLE_EQ(distinct_n({oracle::words("a b"), oracle::words("a c")}, 1), 3.0 / 4.0);
  std::vector<Tokens> same(5, oracle::words("a"));
  EXPECT_DOUBLE_EQ(distinct_n(same, 1), 1.0 / 5.0);
  EXPECT_EQ(distinct_n({oracle::words("a b c"), oracle::words("d e")}, 2), 1.0);
  log::reset_warning_count();
  EXPECT_EQ(distinct_n({oracle::words("a")}, 2), 0.0);
  EXPECT_EQ(log::warning_count(), 1u);
}

TEST(MetricOracle, FixturesMatchBruteForce) {
  for (const auto& f : fixtures()) {
    auto pairs = make_pairs(f);
    auto [h, r] = split(pairs);
    for (std::size_t n = 1; n <= 3; ++n) {
      EXPECT_NEAR(corpus_bleu(pairs, n), oracle::oracle_corpus_bleu(h, r, n), 1e-6);
      for (const auto& p : pairs)
        EXPECT_NEAR(sentence_bleu(p, n), oracle::oracle_sentence_bleu(p.hypothesis, p.reference, n), 1e-6);
    }
    double rouge = 0.0;
    for (const auto& p : pairs) rouge += oracle::oracle_rouge_l(p.hypothesis, p.reference);
    EXPECT_NEAR(rouge_l(pairs), rouge / pairs.size(), 1e-6);
    EXPECT_NEAR(cider(pairs), oracle::oracle_cider(h, r), 1e-6);
    EXPECT_NEAR(distinct_n(h, 1), oracle::oracle_distinct(h, 1), 1e-6);
    EXPECT_NEAR(distinct_n(h, 2), oracle::oracle_distinct(h, 2), 1e-6);
  }
}

TEST(MetricOracle, RandomCorporaMatchBruteForce) {
  Rng rng(11);
  std::uniform_int_distribution<int> len(0, 7), word(0, 4);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<EvalPair> pairs(2 + trial % 4);
    for (auto& p : pairs) {
      for (int i = len(rng) + 1; i > 0; --i) p.hypothesis.push_back(std::string(1, static_cast<char>('a' + word(rng))));
      for (int i = len(rng) + 1; i > 0; --i) p.reference.push_back(std::string(1, static_cast<char>('a' + word(rng))));
    }
    auto [h, r] = split(pairs);
    for (std::size_t n = 1; n <= 3; ++n) EXPECT_NEAR(corpus_bleu(pairs, n), oracle::oracle_corpus_bleu(h, r, n), 1e-6);
    EXPECT_NEAR(cider(pairs), oracle::oracle_cider(h, r), 1e-6);
    for (const auto& p : pairs) EXPECT_EQ(lcs_length(p.hypothesis, p.reference), oracle::oracle_lcs(p.hypothesis, p.reference));
  }
}

TEST(MetricProperty, PermutationInvariance) {
  Rng rng(12);
  for (const auto& f : fixtures()) {
    auto pairs = make_pairs(f);
    auto base = evaluate(pairs);
    for (int k = 0; k < 5; ++k) {
      std::shuffle(pairs.begin(), pairs.end(), rng);
      auto shuffled = evaluate(pairs);
      for (const auto& m : report_metric_names()) EXPECT_NEAR(metric_value(shuffled, m), metric_value(base, m), 1e-12) << m;
    }
  }
}

TEST(MetricProperty, BleuFallsWithOrder) {
  Rng rng(13);
  std::uniform_int_distribution<int> len(1, 8), word(0, 3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<EvalPair> pairs(3);
    for (auto& p : pairs) {
      for (int i = len(rng); i > 0; --i) p.hypothesis.push_back(std::to_string(word(rng)));
      for (int i = len(rng); i > 0; --i) p.reference.push_back(std::to_string(word(rng)));
    }
    const double b1 = corpus_bleu(pairs, 1), b2 = corpus_bleu(pairs, 2), b3 = corpus_bleu(pairs, 3);
    EXPECT_GE(b1 + 1e-12, b2);
    EXPECT_GE(b2 + 1e-12, b3);
  }
}

TEST(MetricProperty, SelfEvaluation) {
  auto pairs = make_pairs({{"i am here now", "i am here now"}, {"see you soon", "see you soon"}, {"ok then", "ok then"}});
  auto r = evaluate(pairs);
  EXPECT_EQ(r.bleu1, 100.0);
  EXPECT_EQ(r.bleu2, 100.0);
  EXPECT_EQ(r.bleu3, 100.0);
  EXPECT_EQ(r.rouge_l, 1.0);
  EXPECT_NEAR(r.dist1, 1.0, 0.0);
}

TEST(MetricProperty, PureFunctions) {
  auto pairs = make_pairs(fixtures()[3]);
  EXPECT_EQ(evaluate(pairs).to_json(true).dump(), evaluate(pairs).to_json(true).dump());
}

namespace {

// Difference vectors with an exact target t statistic.
std::pair<std::vector<double>, std::vector<double>> with_t(double t, std::size_t n) {
  std::vector<double> base(n);
  for (std::size_t i = 0; i < n; ++i) base[i] = std::sin(1.0 + 2.3 * i);
  double mean = 0;
  for (double x : base) mean += x;
  mean /= n;
  double ss = 0;
  for (double& x : base) x -= mean, ss += x * x;
  const double sd = std::sqrt(ss / (n - 1));
  std::vector<double> a(n), b(n, 3.0);
  for (std::size_t i = 0; i < n; ++i) a[i] = 3.0 + base[i] + t * sd / std::sqrt(static_cast<double>(n));
  return {a, b};
}

// Two-sided tail of Student's t by Simpson integration of the density.
double integrated_p(double t, double df) {
  auto density = [df](double x) {
    return std::exp(std::lgamma((df + 1) / 2) - std::lgamma(df / 2)) / std::sqrt(df * M_PI) *
           std::pow(1 + x * x / df, -(df + 1) / 2);
  };
  const int steps = 20000;
  const double h = std::fabs(t) / steps;
  double s = density(0) + density(std::fabs(t));
  for (int i = 1; i < steps; ++i) s += (i % 2 ? 4 : 2) * density(i * h);
  return 1.0 - 2.0 * s * h / 3.0;
}

}  // namespace

TEST(TTest, PublishedCriticalValues) {
  // Two-sided critical values from standard t tables.
  struct Row {
    double t;
    std::size_t n;
    double p;
  };
  for (const auto& row : {Row{2.262, 10, 0.05}, Row{3.250, 10, 0.01}, Row{4.604, 5, 0.01}, Row{2.086, 21, 0.05},
                          Row{1.812, 11, 0.10}}) {
    auto [a, b] = with_t(row.t, row.n);
    auto r = paired_t_test(a, b);
    EXPECT_NEAR(r.t, row.t, 1e-9);
    EXPECT_EQ(r.degrees_of_freedom, row.n - 1);
    EXPECT_NEAR(r.p, row.p, 1e-3) << "t=" << row.t;
  }
}

TEST(TTest, GaussianShiftMatchesIntegratedTail) {
  Rng rng(14);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (double shift : {0.0, 0.2, 0.5}) {
    std::vector<double> a(30), b(30);
    for (std::size_t i = 0; i < 30; ++i) {
      b[i] = noise(rng);
      a[i] = b[i] + shift + 0.8 * noise(rng);
    }
    auto r = paired_t_test(a, b);
    EXPECT_NEAR(r.p, integrated_p(r.t, 29), 1e-6);
  }
}

TEST(TTest, DegenerateCases) {
  std::vector<double> a{1, 2, 3}, b{0, 1, 2};
  EXPECT_EQ(paired_t_test(a, a).p, 1.0);
  EXPECT_EQ(paired_t_test(a, a).t, 0.0);
  auto shifted = paired_t_test(a, b);
  EXPECT_EQ(shifted.p, 0.0);
  EXPECT_TRUE(std::isinf(shifted.t));
  EXPECT_THROW(paired_t_test(a, {1, 2}), DataError);
  EXPECT_THROW(paired_t_test({1}, {2}), DataError);
}

TEST(Significance, Marks) {
  EXPECT_EQ(significance_mark(0.009), "**");
  EXPECT_EQ(significance_mark(0.01), "*");
  EXPECT_EQ(significance_mark(0.049), "*");
  EXPECT_EQ(significance_mark(0.05), "");
  EXPECT_EQ(significance_mark(1.0), "");
}

TEST(Significance, CompareAgainstBaseline) {
  auto system = evaluate(make_pairs(fixtures()[3]));
  auto baseline = system;
  for (auto& x : baseline.samples.bleu1) x -= 10.0;
  baseline.samples.bleu2[0] -= 1.0;
  for (const auto& c : compare(system, baseline)) {
    if (c.metric == "bleu1") EXPECT_EQ(c.mark, "**");
    else EXPECT_EQ(c.mark, "") << c.metric;
  }
}

TEST(Report, TableLayout) {
  auto table = render_table({"BLEU-1", "BLEU-2", "Dist-2"},
                            {{"routing", {1, 2, 0.5}, {"", "*", "**"}}, {"single", {1, 2, 0.25}, {}}});
  EXPECT_NE(table.find("2.0000*"), std::string::npos);
  EXPECT_NE(table.find("0.5000**"), std::string::npos);
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 3);
  EXPECT_THROW(render_table({"a"}, {{"x", {1, 2}, {}}}), UsageError);
}

TEST(Report, SentenceAverageMode) {
  auto pairs = make_pairs(fixtures()[1]);
  auto r = evaluate(pairs, {true});
  EXPECT_NEAR(r.bleu2, sentence_average_bleu(pairs, 2), 0.0);
  EXPECT_EQ(r.to_json()["bleu_mode"], "sentence_average");
}

TEST(Report, LoadAlignsByIndex) {
  auto dir = std::filesystem::temp_directory_path() / "cdg_metrics_test";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "refs.jsonl") << R"({"history": ["q"], "condition": "x", "response": "a b"})" "\n"
                                    << "broken\n"
                                    << R"({"history": ["q"], "condition": "y", "response": "c d"})" "\n";
  std::ofstream(dir / "hyps.jsonl") << R"({"index": 0, "hypothesis": "a"})" "\n"
                                    << R"({"index": 2, "hypothesis": "c d"})" "\n";
  std::ofstream(dir / "short.jsonl") << R"({"index": 0, "hypothesis": "a"})" "\n";
  auto pairs = load_eval_pairs(dir / "hyps.jsonl", dir / "refs.jsonl");
  ASSERT_EQ(pairs.size(), 2u);
  EXPECT_EQ(pairs[1].reference, oracle::words("c d"));
  try {
    load_eval_pairs(dir / "short.jsonl", dir / "refs.jsonl");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("index 2"), std::string::npos);
  }
  std::filesystem::remove_all(dir);
}
