#pragma once

// Brute-force decoder: scores every sequence the beam search could emit
// (ending in [EOS] within the cap, or hitting the cap) under the same
// candidate set and bigram rule, and returns the best one.

#include <functional>
#include <limits>
#include <vector>

#include "cdg/decoding/beam.hpp"

namespace cdg::testing {

struct ExhaustiveResult {
  std::vector<int> tokens;
  double score = -std::numeric_limits<double>::infinity();
  bool ended = false;
  std::size_t sequences = 0;
};

inline ExhaustiveResult exhaustive_search(const NextTokenScorer& scorer, const std::vector<bool>& allowed, int eos,
                                          std::size_t max_new_tokens, bool block_bigrams) {
  ExhaustiveResult best;
  std::vector<int> prefix;
  std::function<void(double)> expand = [&](double score) {
    const auto lp = scorer(prefix);
    for (std::size_t t = 0; t < allowed.size(); ++t) {
      if (!allowed[t]) continue;
      const int tok = static_cast<int>(t);
      if (block_bigrams && !prefix.empty()) {
        bool repeat = false;
        for (std::size_t i = 0; i + 1 < prefix.size(); ++i)
          repeat = repeat || (prefix[i] == prefix.back() && prefix[i + 1] == tok);
        if (repeat) continue;
      }
      const double s = score + lp[t];
      if (tok == eos || prefix.size() + 1 == max_new_tokens) {
        ++best.sequences;
        if (s > best.score) {
          best.score = s;
          best.tokens = prefix;
          if (tok != eos) best.tokens.push_back(tok);
          best.ended = tok == eos;
        }
        continue;
      }
      prefix.push_back(tok);
      expand(s);
      prefix.pop_back();
    }
  };
  expand(0.0);
  return best;
}

}  // namespace cdg::testing
