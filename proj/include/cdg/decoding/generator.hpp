#pragma once

#include <filesystem>
#include <vector>

#include "cdg/data/corpus.hpp"
#include "cdg/decoding/beam.hpp"
#include "cdg/model/transformer.hpp"

namespace cdg {

// Packs [source | [BOS] prefix [MASK]] with the dialogue mask and returns the
// log-softmax at the [MASK] position. The source is truncated (oldest
// utterances first) to make room; the prefix never is.
std::vector<double> step_log_probs(const ConditionedTransformer& model, const std::vector<std::vector<int>>& history,
                                   int condition, const std::vector<int>& prefix);

// Corpus tokens and [EOS]; [UNK] only when allow_unk.
std::vector<bool> candidate_tokens(std::size_t vocab_size, const DecodeConfig& config);

std::vector<Hypothesis> generate(const ConditionedTransformer& model, const DialogueSample& sample,
                                 const DecodeConfig& config);

struct GenerationSummary {
  std::size_t inputs = 0;
  std::size_t written = 0;
  std::size_t skipped = 0;
  double average_length = 0.0;  // tokens per hypothesis, [EOS] excluded
};

// One JSON line {"index", "condition", "hypothesis", "score", "length"} per
// well-formed input line, in input order. `threads` workers decode disjoint
// inputs; output does not depend on the thread count.
GenerationSummary generate_file(const ConditionedTransformer& model, const Vocabulary& vocab,
                                const ConditionMap& conditions, const std::filesystem::path& input,
                                const std::filesystem::path& output, const DecodeConfig& config,
                                bool use_conditions = true, std::size_t threads = 1);

}  // namespace cdg
