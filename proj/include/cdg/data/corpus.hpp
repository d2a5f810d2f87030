#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cdg/data/vocabulary.hpp"

namespace cdg {

// Line-delimited JSON records as they appear on disk.
struct DialogueRecord {
  std::vector<std::string> history;
  std::string condition;
  std::string response;  // may be empty in test files
};

struct TextRecord {
  std::string condition;
  std::string text;
};

std::vector<std::string> split_whitespace(std::string_view text);

// Every line of the file; malformed lines come back as nullopt and are logged
// with their index. Blank lines are skipped entirely.
std::vector<std::optional<DialogueRecord>> read_dialogue_lines(const std::filesystem::path& path);
// Strict readers: a malformed line is a DataError naming the line.
std::vector<DialogueRecord> read_dialogues(const std::filesystem::path& path);
std::vector<TextRecord> read_texts(const std::filesystem::path& path);

void write_dialogues(const std::filesystem::path& path, const std::vector<DialogueRecord>& records);
void write_texts(const std::filesystem::path& path, const std::vector<TextRecord>& records);

// Condition labels mapped to dense ids in first-seen order.
class ConditionMap {
 public:
  ConditionMap() = default;
  explicit ConditionMap(std::vector<std::string> labels);

  int add(const std::string& label);
  std::optional<int> find(std::string_view label) const;
  int id(std::string_view label) const;  // DataError when unknown
  const std::string& label(int id) const;
  std::size_t size() const { return labels_.size(); }
  const std::vector<std::string>& labels() const { return labels_; }

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, int> ids_;
};

ConditionMap collect_conditions(const std::vector<DialogueRecord>& dialogues, const std::vector<TextRecord>& texts);
TokenCounts count_tokens(const std::vector<DialogueRecord>& dialogues, const std::vector<TextRecord>& texts);

struct DialogueSample {
  std::vector<std::vector<int>> history;
  int condition = -1;
  std::vector<int> response;
};

struct TextSample {
  int condition = -1;
  std::vector<int> text;
};

// Unknown condition labels map to -1 (unconditioned). Samples with an empty
// history/response (dialogue) or empty text are rejected with a DataError
// unless allow_empty_response is set, which generation inputs need.
DialogueSample encode_dialogue(const DialogueRecord& record, const Vocabulary& vocab, const ConditionMap& conditions,
                               bool allow_empty_response = false);
std::vector<DialogueSample> encode_dialogues(const std::vector<DialogueRecord>& records, const Vocabulary& vocab,
                                             const ConditionMap& conditions);
std::vector<TextSample> encode_texts(const std::vector<TextRecord>& records, const Vocabulary& vocab,
                                     const ConditionMap& conditions);

}  // namespace cdg
