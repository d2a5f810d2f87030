#pragma once

#include <optional>
#include <vector>

#include "cdg/data/corpus.hpp"
#include "cdg/model/encoding.hpp"

namespace cdg {

enum class TextAttention { bidirectional, left_to_right };

// [CLS] h_1 [SEP] ... h_k [SEP] within `budget` tokens. Whole utterances are
// dropped oldest first; if the newest alone does not fit, its oldest tokens
// go. Needs budget >= 2.
std::vector<int> pack_source(const std::vector<std::vector<int>>& history, std::size_t budget);

// [source | [BOS] response [EOS]] with the dialogue mask. nullopt (plus a
// warning) when the response alone cannot fit.
std::optional<InputEncoding> pack_dialogue(const DialogueSample& sample, std::size_t max_length);

// [BOS] text [EOS], all target-side. Overlong text loses its tail; [EOS] stays.
InputEncoding pack_text(const TextSample& sample, TextAttention attention, std::size_t max_length);

// Source tokens plus a target segment, dialogue mask. Used by the decoder.
InputEncoding pack_source_target(const std::vector<int>& source, const std::vector<int>& target, int condition);

struct UnpackedDialogue {
  std::vector<std::vector<int>> history;
  std::vector<int> response;
};
// Inverse of pack_dialogue for untruncated samples.
UnpackedDialogue unpack_dialogue(const InputEncoding& enc);
std::vector<int> unpack_text(const InputEncoding& enc);

}  // namespace cdg
