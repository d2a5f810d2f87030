#pragma once

#include <cstdint>
#include <vector>

#include "cdg/common/random.hpp"
#include "cdg/data/corpus.hpp"
#include "cdg/data/masking.hpp"
#include "cdg/data/packing.hpp"

namespace cdg {

struct SamplerConfig {
  std::size_t batch_size = 32;
  double dialogue_fraction = 0.75;
  double text_bidirectional_probability = 0.5;
  MaskPolicy text_policy = MaskPolicy::tfidf;
  MaskingOptions masking;
  std::size_t max_length = 64;
  bool use_conditions = true;  // false: every sample runs with condition NONE
};

struct MaskedBatch {
  std::vector<MaskedSample> samples;
  std::size_t dialogue_count = 0;
  std::size_t text_count = 0;
};

// Fixed-composition batches: round(dialogue_fraction * batch_size) dialogue
// samples, the rest text. Each corpus is walked in a fresh permutation per
// pass. With no text samples every slot is a dialogue.
class MixedBatchSampler {
 public:
  MixedBatchSampler(const std::vector<DialogueSample>& dialogues, const std::vector<TextSample>& texts,
                    const TfIdfTable* tfidf, SamplerConfig config, std::size_t vocab_size, std::uint64_t seed);

  std::size_t dialogues_per_batch() const { return dialogue_slots_; }
  std::size_t texts_per_batch() const { return config_.batch_size - dialogue_slots_; }
  std::size_t dialogue_count() const { return dialogues_.size(); }
  std::size_t text_count() const { return texts_.size(); }
  bool uses_text() const { return !texts_.empty(); }
  const SamplerConfig& config() const { return config_; }
  // Batches needed to pass over the dialogue corpus once.
  std::size_t steps_per_epoch() const;

  MaskedBatch next();

 private:
  std::size_t draw(std::vector<std::size_t>& order, std::size_t& cursor);

  std::vector<InputEncoding> dialogues_;
  std::vector<TextSample> texts_;
  const TfIdfTable* tfidf_;
  SamplerConfig config_;
  std::size_t vocab_size_;
  std::size_t dialogue_slots_;
  Rng rng_;
  std::vector<std::size_t> dialogue_order_, text_order_;
  std::size_t dialogue_cursor_ = 0, text_cursor_ = 0;
};

}  // namespace cdg
