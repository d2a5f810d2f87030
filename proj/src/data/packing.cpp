#include "cdg/data/packing.hpp"

#include <string>

#include "cdg/common/errors.hpp"
#include "cdg/common/log.hpp"

namespace cdg {

std::vector<int> pack_source(const std::vector<std::vector<int>>& history, std::size_t budget) {
  if (budget < 2) throw LengthError("source budget of " + std::to_string(budget) + " cannot hold [CLS] [SEP]");
  // Keep the newest utterances that fit whole.
  std::size_t first = history.size();
  std::size_t used = 1;  // [CLS]
  while (first > 0 && used + history[first - 1].size() + 1 <= budget) {
    used += history[first - 1].size() + 1;
    --first;
  }
  std::vector<int> source{kCls};
  if (first == history.size() && !history.empty()) {
    // Not even the newest utterance fits; keep its most recent tokens.
    const auto& last = history.back();
    const std::size_t keep = budget - 2;
    source.insert(source.end(), last.end() - static_cast<std::ptrdiff_t>(keep), last.end());
    source.push_back(kSep);
    return source;
  }
  for (std::size_t u = first; u < history.size(); ++u) {
    source.insert(source.end(), history[u].begin(), history[u].end());
    source.push_back(kSep);
  }
  return source;
}

InputEncoding pack_source_target(const std::vector<int>& source, const std::vector<int>& target, int condition) {
  InputEncoding enc;
  enc.token_ids = source;
  enc.token_ids.insert(enc.token_ids.end(), target.begin(), target.end());
  const std::size_t n = enc.token_ids.size();
  enc.position_ids.resize(n);
  enc.type_ids.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    enc.position_ids[i] = static_cast<int>(i);
    enc.type_ids[i] = i < source.size() ? 0 : 1;
  }
  enc.mask = AttentionMask::source_target(source.size(), target.size());
  enc.condition_id = condition;
  return enc;
}

std::optional<InputEncoding> pack_dialogue(const DialogueSample& sample, std::size_t max_length) {
  const std::size_t target_length = sample.response.size() + 2;
  if (target_length + 2 > max_length) {
    log::warning("rejecting dialogue: response of " + std::to_string(sample.response.size()) +
                 " tokens does not fit max_length " + std::to_string(max_length));
    return std::nullopt;
  }
  std::vector<int> target{kBos};
  target.insert(target.end(), sample.response.begin(), sample.response.end());
  target.push_back(kEos);
  return pack_source_target(pack_source(sample.history, max_length - target_length), target, sample.condition);
}

InputEncoding pack_text(const TextSample& sample, TextAttention attention, std::size_t max_length) {
  if (max_length < 3) throw LengthError("max_length " + std::to_string(max_length) + " cannot hold a text sample");
  const std::size_t keep = std::min(sample.text.size(), max_length - 2);
  InputEncoding enc;
  enc.token_ids.push_back(kBos);
  enc.token_ids.insert(enc.token_ids.end(), sample.text.begin(), sample.text.begin() + static_cast<std::ptrdiff_t>(keep));
  enc.token_ids.push_back(kEos);
  const std::size_t n = enc.token_ids.size();
  enc.position_ids.resize(n);
  for (std::size_t i = 0; i < n; ++i) enc.position_ids[i] = static_cast<int>(i);
  enc.type_ids.assign(n, 1);
  enc.mask = attention == TextAttention::bidirectional ? AttentionMask::bidirectional(n) : AttentionMask::causal(n);
  enc.condition_id = sample.condition;
  return enc;
}

UnpackedDialogue unpack_dialogue(const InputEncoding& enc) {
  UnpackedDialogue out;
  const std::size_t src = enc.source_length();
  std::vector<int> current;
  for (std::size_t i = 1; i < src; ++i) {
    if (enc.token_ids[i] == kSep) {
      out.history.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(enc.token_ids[i]);
    }
  }
  // Skip [BOS] and [EOS].
  for (std::size_t i = src + 1; i + 1 < enc.size(); ++i) out.response.push_back(enc.token_ids[i]);
  return out;
}

std::vector<int> unpack_text(const InputEncoding& enc) {
  return {enc.token_ids.begin() + 1, enc.token_ids.end() - 1};
}

}  // namespace cdg
