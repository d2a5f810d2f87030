#pragma once

// Brute-force reference implementations of the evaluation metrics, written
// from the textbook definitions with joined-string n-gram keys so they share
// no code with the library.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace cdg::testing {

using Sentence = std::vector<std::string>;

inline Sentence words(const std::string& text) {
  std::istringstream in(text);
  Sentence out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

inline std::vector<std::string> oracle_ngrams(const Sentence& s, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i + n <= s.size(); ++i) {
    std::string key;
    for (std::size_t k = 0; k < n; ++k) key += s[i + k] + "\x1f";
    out.push_back(key);
  }
  return out;
}

inline std::map<std::string, double> oracle_counts(const Sentence& s, std::size_t n) {
  std::map<std::string, double> c;
  for (const auto& g : oracle_ngrams(s, n)) c[g] += 1.0;
  return c;
}

inline double oracle_clipped(const Sentence& hyp, const Sentence& ref, std::size_t n) {
  auto h = oracle_counts(hyp, n);
  auto r = oracle_counts(ref, n);
  double m = 0.0;
  for (auto& [g, c] : h) m += std::min(c, r[g]);
  return m;
}

inline double oracle_corpus_bleu(const std::vector<Sentence>& hyps, const std::vector<Sentence>& refs, std::size_t n) {
  double logp = 0.0, c = 0.0, r = 0.0;
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    c += hyps[i].size();
    r += refs[i].size();
  }
  for (std::size_t k = 1; k <= n; ++k) {
    double m = 0.0, t = 0.0;
    for (std::size_t i = 0; i < hyps.size(); ++i) {
      m += oracle_clipped(hyps[i], refs[i], k);
      t += oracle_ngrams(hyps[i], k).size();
    }
    if (m == 0.0) return 0.0;
    logp += std::log(m / t) / n;
  }
  const double bp = c >= r ? 1.0 : std::exp(1.0 - r / c);
  return 100.0 * bp * std::exp(logp);
}

inline double oracle_sentence_bleu(const Sentence& hyp, const Sentence& ref, std::size_t n) {
  double prod = 1.0;
  for (std::size_t k = 1; k <= n; ++k) {
    double m = oracle_clipped(hyp, ref, k), t = oracle_ngrams(hyp, k).size();
    if (k > 1) m += 1.0, t += 1.0;
    if (m == 0.0) return 0.0;
    prod *= m / t;
  }
  const double c = hyp.size(), r = ref.size();
  const double bp = c >= r ? 1.0 : std::exp(1.0 - r / c);
  return 100.0 * bp * std::pow(prod, 1.0 / n);
}

// LCS by exhaustive recursion with memoization.
inline std::size_t oracle_lcs(const Sentence& a, const Sentence& b) {
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> memo;
  std::function<std::size_t(std::size_t, std::size_t)> go = [&](std::size_t i, std::size_t j) -> std::size_t {
    if (i == a.size() || j == b.size()) return 0;
    auto key = std::make_pair(i, j);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    std::size_t best = a[i] == b[j] ? 1 + go(i + 1, j + 1) : std::max(go(i + 1, j), go(i, j + 1));
    return memo[key] = best;
  };
  return go(0, 0);
}

inline double oracle_rouge_l(const Sentence& hyp, const Sentence& ref) {
  const double l = oracle_lcs(hyp, ref);
  if (l == 0) return 0.0;
  const double p = l / hyp.size(), r = l / ref.size(), b2 = 1.44;
  return (1 + b2) * r * p / (r + b2 * p);
}

inline double oracle_cider(const std::vector<Sentence>& hyps, const std::vector<Sentence>& refs) {
  const double N = refs.size();
  double total = 0.0;
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    double pair = 0.0;
    for (std::size_t n = 1; n <= 4; ++n) {
      auto idf = [&](const std::string& g) {
        double df = 0;
        for (const auto& r : refs) {
          auto grams = oracle_ngrams(r, n);
          df += std::find(grams.begin(), grams.end(), g) != grams.end();
        }
        return std::log(N) - std::log(std::max(1.0, df));
      };
      auto h = oracle_counts(hyps[i], n), r = oracle_counts(refs[i], n);
      std::set<std::string> keys;
      for (auto& e : h) keys.insert(e.first);
      for (auto& e : r) keys.insert(e.first);
      double dot = 0, nh = 0, nr = 0;
      for (const auto& g : keys) {
        const double w = idf(g);
        const double a = h[g] * w, b = r[g] * w;
        dot += a * b;
        nh += a * a;
        nr += b * b;
      }
      if (nh > 0 && nr > 0) pair += dot / std::sqrt(nh * nr);
    }
    total += 10.0 * pair / 4.0;
  }
  return total / hyps.size();
}

inline double oracle_distinct(const std::vector<Sentence>& hyps, std::size_t n) {
  std::set<std::string> uniq;
  double total = 0;
  for (const auto& h : hyps)
    for (const auto& g : oracle_ngrams(h, n)) uniq.insert(g), total += 1;
  return total == 0 ? 0.0 : uniq.size() / total;
}

}  // namespace cdg::testing
