#include "cdg/data/sampler.hpp"

#include <cmath>
#include <numeric>

#include "cdg/common/errors.hpp"
#include "cdg/common/log.hpp"

namespace cdg {

MixedBatchSampler::MixedBatchSampler(const std::vector<DialogueSample>& dialogues, const std::vector<TextSample>& texts,
                                     const TfIdfTable* tfidf, SamplerConfig config, std::size_t vocab_size,
                                     std::uint64_t seed)
    : texts_(texts), tfidf_(tfidf), config_(config), vocab_size_(vocab_size), rng_(seed) {
  if (config_.batch_size == 0) throw ConfigError("batch_size must be positive");
  if (config_.dialogue_fraction <= 0.0 || config_.dialogue_fraction > 1.0) {
    throw ConfigError("dialogue_fraction must lie in (0, 1]");
  }
  for (const auto& d : dialogues) {
    if (auto enc = pack_dialogue(d, config_.max_length)) dialogues_.push_back(std::move(*enc));
  }
  if (dialogues_.empty()) throw DataError("no usable dialogue samples");
  if (!config_.use_conditions) {
    for (auto& d : dialogues_) d.condition_id = kNoCondition;
    for (auto& t : texts_) t.condition = kNoCondition;
  }
  if (texts_.empty()) {
    dialogue_slots_ = config_.batch_size;
  } else {
    const auto slots = static_cast<std::size_t>(std::llround(config_.dialogue_fraction * config_.batch_size));
    dialogue_slots_ = std::min(config_.batch_size, std::max<std::size_t>(1, slots));
  }
  if (uses_text() && texts_per_batch() > 0 && config_.text_policy == MaskPolicy::tfidf && tfidf_ == nullptr) {
    throw ConfigError("tf-idf text masking needs a tf-idf table");
  }
  dialogue_order_.resize(dialogues_.size());
  text_order_.resize(texts_.size());
  std::iota(dialogue_order_.begin(), dialogue_order_.end(), 0);
  std::iota(text_order_.begin(), text_order_.end(), 0);
  shuffle(dialogue_order_.begin(), dialogue_order_.end(), rng_);
  shuffle(text_order_.begin(), text_order_.end(), rng_);
}

std::size_t MixedBatchSampler::steps_per_epoch() const {
  return (dialogues_.size() + dialogue_slots_ - 1) / dialogue_slots_;
}

std::size_t MixedBatchSampler::draw(std::vector<std::size_t>& order, std::size_t& cursor) {
  if (cursor == order.size()) {
    shuffle(order.begin(), order.end(), rng_);
    cursor = 0;
  }
  return order[cursor++];
}

MaskedBatch MixedBatchSampler::next() {
  MaskedBatch batch;
  batch.samples.reserve(config_.batch_size);
  for (std::size_t i = 0; i < dialogue_slots_; ++i) {
    const auto& enc = dialogues_[draw(dialogue_order_, dialogue_cursor_)];
    batch.samples.push_back(apply_random_masking(enc, SampleKind::dialogue, rng_, config_.masking, vocab_size_));
  }
  batch.dialogue_count = dialogue_slots_;
  if (!uses_text()) return batch;
  for (std::size_t i = dialogue_slots_; i < config_.batch_size; ++i) {
    const auto& text = texts_[draw(text_order_, text_cursor_)];
    const auto attention = uniform01(rng_) < config_.text_bidirectional_probability ? TextAttention::bidirectional
                                                                                     : TextAttention::left_to_right;
    auto enc = pack_text(text, attention, config_.max_length);
    if (config_.text_policy == MaskPolicy::tfidf) {
      batch.samples.push_back(apply_tfidf_masking(enc, *tfidf_, rng_, config_.masking, vocab_size_));
    } else {
      batch.samples.push_back(apply_random_masking(enc, SampleKind::text, rng_, config_.masking, vocab_size_));
    }
    ++batch.text_count;
  }
  return batch;
}

}  // namespace cdg
