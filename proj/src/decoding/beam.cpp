#include "cdg/decoding/beam.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cdg/common/errors.hpp"

namespace cdg {

void DecodeConfig::validate() const {
  if (beam_size == 0) throw ConfigError("beam_size must be at least 1");
  if (max_new_tokens == 0) throw ConfigError("max_new_tokens must be at least 1");
  if (length_alpha < 0.0) throw ConfigError("length_alpha must be nonnegative");
}

bool creates_repeat_bigram(const std::vector<int>& prefix, int token) {
  if (prefix.empty()) return false;
  const int last = prefix.back();
  for (std::size_t i = 0; i + 1 < prefix.size(); ++i)
    if (prefix[i] == last && prefix[i + 1] == token) return true;
  return false;
}

bool has_repeated_bigram(const std::vector<int>& tokens) {
  for (std::size_t j = 1; j < tokens.size(); ++j) {
    std::vector<int> prefix(tokens.begin(), tokens.begin() + static_cast<std::ptrdiff_t>(j));
    if (creates_repeat_bigram(prefix, tokens[j])) return true;
  }
  return false;
}

double ranking_score(const Hypothesis& h, double length_alpha) {
  if (length_alpha == 0.0) return h.score;
  return h.score / std::pow(static_cast<double>(std::max<std::size_t>(1, h.length())), length_alpha);
}

namespace {

struct Candidate {
  std::size_t parent;
  int token;
  double score;
};

// Best first; ties broken by token sequence so results never depend on sort
// stability.
bool better(const Hypothesis& a, const Hypothesis& b, double alpha) {
  const double sa = ranking_score(a, alpha), sb = ranking_score(b, alpha);
  if (sa != sb) return sa > sb;
  if (a.tokens != b.tokens) return a.tokens < b.tokens;
  return a.ended && !b.ended;
}

void prune(std::vector<Hypothesis>& pool, std::size_t width, double alpha) {
  std::sort(pool.begin(), pool.end(), [&](const auto& a, const auto& b) { return better(a, b, alpha); });
  if (pool.size() > width) pool.resize(width);
}

}  // namespace

std::vector<Hypothesis> beam_search(const NextTokenScorer& scorer, const std::vector<bool>& allowed, int eos,
                                    const DecodeConfig& config) {
  config.validate();
  if (eos < 0 || static_cast<std::size_t>(eos) >= allowed.size() || !allowed[static_cast<std::size_t>(eos)]) {
    throw UsageError("[EOS] must be an allowed candidate");
  }
  std::vector<Hypothesis> live{Hypothesis{}};
  std::vector<Hypothesis> finished;

  for (std::size_t step = 0; step < config.max_new_tokens && !live.empty(); ++step) {
    const bool last_step = step + 1 == config.max_new_tokens;
    std::vector<Candidate> candidates;
    for (std::size_t h = 0; h < live.size(); ++h) {
      const auto log_probs = scorer(live[h].tokens);
      if (log_probs.size() != allowed.size()) {
        throw DimensionError("scorer returned " + std::to_string(log_probs.size()) + " log-probs for a vocabulary of " +
                             std::to_string(allowed.size()));
      }
      bool any = false;
      for (std::size_t t = 0; t < allowed.size(); ++t) {
        const int tok = static_cast<int>(t);
        if (!allowed[t] || log_probs[t] == -std::numeric_limits<double>::infinity()) continue;
        if (config.block_repeat_bigrams && creates_repeat_bigram(live[h].tokens, tok)) continue;
        candidates.push_back({h, tok, live[h].score + log_probs[t]});
        any = true;
      }
      if (!any) {
        Hypothesis forced = live[h];
        forced.ended = true;
        forced.forced = true;
        finished.push_back(std::move(forced));
      }
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
      if (a.score != b.score) return a.score > b.score;
      if (a.parent != b.parent) return a.parent < b.parent;
      return a.token < b.token;
    });

    // Only the best beam_size candidates of the step may finish; live
    // slots go to the best non-[EOS] extensions.
    std::vector<Hypothesis> next;
    for (std::size_t rank = 0; rank < candidates.size(); ++rank) {
      const auto& c = candidates[rank];
      const auto& parent = live[c.parent];
      const bool top = rank < config.beam_size;
      if (c.token == eos) {
        if (top) finished.push_back({parent.tokens, c.score, true, false});
      } else if (last_step) {
        if (!top) continue;
        auto tokens = parent.tokens;
        tokens.push_back(c.token);
        finished.push_back({std::move(tokens), c.score, false, false});
      } else if (next.size() < config.beam_size) {
        auto tokens = parent.tokens;
        tokens.push_back(c.token);
        next.push_back({std::move(tokens), c.score, false, false});
      }
    }
    live = std::move(next);
    prune(finished, config.beam_size, config.length_alpha);

    // Scores only fall as hypotheses grow, so no live extension can beat
    // the best finished one.
    if (config.length_alpha == 0.0 && !finished.empty() && !live.empty() &&
        finished.front().score >= live.front().score) {
      break;
    }
  }
  return finished;
}

}  // namespace cdg
