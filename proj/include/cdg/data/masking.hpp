#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "cdg/common/random.hpp"
#include "cdg/data/vocabulary.hpp"
#include "cdg/model/encoding.hpp"

namespace cdg {

enum class SampleKind { dialogue, text };
enum class MaskPolicy { random, tfidf };

struct MaskingOptions {
  double probability = 0.25;
  // 80% [MASK], 10% random corpus token, 10% unchanged. Off: always [MASK].
  bool bert_replacement = false;
};

struct MaskedSample {
  InputEncoding enc;             // with masked inputs substituted
  std::vector<int> targets;      // original token ids, full length
  std::vector<bool> active;      // positions that carry a loss
  std::vector<std::size_t> order;  // masked positions in draw order
  SampleKind kind = SampleKind::dialogue;
  MaskPolicy policy = MaskPolicy::random;

  std::size_t masked_count() const { return order.size(); }
};

// max(1, round(p * n)), capped at n.
std::size_t mask_count(std::size_t candidates, double probability);

// Target-side positions except [BOS]. [EOS] is a legal target.
std::vector<std::size_t> random_mask_candidates(const InputEncoding& enc);
// Target-side positions except [BOS] and [EOS].
std::vector<std::size_t> tfidf_mask_candidates(const InputEncoding& enc);

MaskedSample apply_random_masking(const InputEncoding& enc, SampleKind kind, Rng& rng, const MaskingOptions& options,
                                  std::size_t vocab_size);

// Smoothed inverse document frequencies over the text corpus, one document
// per text sample: idf = ln((1 + N) / (1 + df)) + 1.
class TfIdfTable {
 public:
  TfIdfTable() = default;
  explicit TfIdfTable(const std::vector<std::vector<int>>& documents);

  std::size_t documents() const { return documents_; }
  std::size_t document_frequency(int token) const;
  double idf(int token) const;
  // Highest possible idf, the value of a token never seen.
  double unseen_idf() const;

  nlohmann::json to_json(const Vocabulary& vocab) const;
  static TfIdfTable from_json(const nlohmann::json& j, const Vocabulary& vocab);

 private:
  std::size_t documents_ = 0;
  std::vector<std::size_t> df_;  // indexed by token id
};

// Positions drawn without replacement, each draw proportional to
// tf(token, this text) * idf(token). Only for text samples.
MaskedSample apply_tfidf_masking(const InputEncoding& enc, const TfIdfTable& table, Rng& rng,
                                 const MaskingOptions& options, std::size_t vocab_size);

}  // namespace cdg
