#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace cdg {

struct DecodeConfig {
  std::size_t beam_size = 10;
  std::size_t max_new_tokens = 20;  // includes the closing [EOS]
  double length_alpha = 0.0;        // ranking score = score / length^alpha
  bool block_repeat_bigrams = true;
  bool allow_unk = false;

  void validate() const;
};

struct Hypothesis {
  std::vector<int> tokens;  // emitted tokens, without [EOS]
  double score = 0.0;       // summed log-probabilities, [EOS] included
  bool ended = false;       // closed by [EOS] rather than by the length cap
  bool forced = false;      // every candidate was blocked; [EOS] imposed

  std::size_t length() const { return tokens.size() + (ended ? 1 : 0); }
};

// Log-probabilities over the whole vocabulary for the token after `prefix`.
using NextTokenScorer = std::function<std::vector<double>(const std::vector<int>& prefix)>;

// True when appending `token` repeats a bigram already present in `prefix`.
bool creates_repeat_bigram(const std::vector<int>& prefix, int token);
bool has_repeated_bigram(const std::vector<int>& tokens);

double ranking_score(const Hypothesis& h, double length_alpha);

// Left-to-right beam search. `allowed[t]` marks candidate tokens; `eos` must
// be allowed. Each step ranks all extensions of the live beam; those among
// the top beam_size that end in [EOS] (or reach the length cap) join the
// finished pool, and the best beam_size non-[EOS] extensions stay live. The
// pool keeps the best beam_size. With length_alpha = 0 the search stops as
// soon as the best finished score is at least the best live score.
// Returns the pool ranked best first.
std::vector<Hypothesis> beam_search(const NextTokenScorer& scorer, const std::vector<bool>& allowed, int eos,
                                    const DecodeConfig& config);

}  // namespace cdg
