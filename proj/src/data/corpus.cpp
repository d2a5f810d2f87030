#include "cdg/data/corpus.hpp"

#include <cctype>
#include <fstream>

#include <nlohmann/json.hpp>

#include "cdg/common/errors.hpp"
#include "cdg/common/log.hpp"
#include "cdg/model/encoding.hpp"

namespace cdg {
namespace {

using nlohmann::json;

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

bool blank(const std::string& line) { return line.find_first_not_of(" \t\r") == std::string::npos; }

DialogueRecord parse_dialogue(const std::string& line) {
  const auto j = json::parse(line);
  DialogueRecord r;
  r.history = j.at("history").get<std::vector<std::string>>();
  r.condition = j.value("condition", std::string());
  r.response = j.value("response", std::string());
  return r;
}

TextRecord parse_text(const std::string& line) {
  const auto j = json::parse(line);
  return {j.at("condition").get<std::string>(), j.at("text").get<std::string>()};
}

}  // namespace

std::vector<std::string> split_whitespace(std::string_view text) {
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) words.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return words;
}

std::vector<std::optional<DialogueRecord>> read_dialogue_lines(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::vector<std::optional<DialogueRecord>> records;
  std::string line;
  while (std::getline(in, line)) {
    if (blank(line)) continue;
    try {
      records.emplace_back(parse_dialogue(line));
    } catch (const json::exception& e) {
      log::warning("skipping malformed record at index " + std::to_string(records.size()) + " of " + path.string() +
                   ": " + e.what());
      records.emplace_back(std::nullopt);
    }
  }
  return records;
}

std::vector<DialogueRecord> read_dialogues(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::vector<DialogueRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    try {
      records.push_back(parse_dialogue(line));
    } catch (const json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

std::vector<TextRecord> read_texts(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::vector<TextRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    try {
      records.push_back(parse_text(line));
    } catch (const json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

void write_dialogues(const std::filesystem::path& path, const std::vector<DialogueRecord>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& r : records) {
    out << json{{"history", r.history}, {"condition", r.condition}, {"response", r.response}}.dump() << '\n';
  }
  if (!out.flush()) throw IoError("failed writing " + path.string());
}

void write_texts(const std::filesystem::path& path, const std::vector<TextRecord>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& r : records) out << json{{"condition", r.condition}, {"text", r.text}}.dump() << '\n';
  if (!out.flush()) throw IoError("failed writing " + path.string());
}

ConditionMap::ConditionMap(std::vector<std::string> labels) {
  for (auto& l : labels) {
    if (find(l)) throw DataError("duplicate condition label '" + l + "'");
    add(l);
  }
}

int ConditionMap::add(const std::string& label) {
  auto [it, inserted] = ids_.emplace(label, static_cast<int>(labels_.size()));
  if (inserted) labels_.push_back(label);
  return it->second;
}

std::optional<int> ConditionMap::find(std::string_view label) const {
  auto it = ids_.find(std::string(label));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

int ConditionMap::id(std::string_view label) const {
  auto found = find(label);
  if (!found) throw DataError("unknown condition label '" + std::string(label) + "'");
  return *found;
}

const std::string& ConditionMap::label(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= labels_.size()) {
    throw VocabularyError("condition id " + std::to_string(id) + " outside " + std::to_string(labels_.size()));
  }
  return labels_[static_cast<std::size_t>(id)];
}

ConditionMap collect_conditions(const std::vector<DialogueRecord>& dialogues, const std::vector<TextRecord>& texts) {
  ConditionMap map;
  for (const auto& d : dialogues)
    if (!d.condition.empty()) map.add(d.condition);
  for (const auto& t : texts)
    if (!t.condition.empty()) map.add(t.condition);
  return map;
}

TokenCounts count_tokens(const std::vector<DialogueRecord>& dialogues, const std::vector<TextRecord>& texts) {
  TokenCounts counts;
  auto add = [&](const std::string& s) {
    for (auto& w : split_whitespace(s)) ++counts[w];
  };
  for (const auto& d : dialogues) {
    for (const auto& h : d.history) add(h);
    add(d.response);
  }
  for (const auto& t : texts) add(t.text);
  return counts;
}

DialogueSample encode_dialogue(const DialogueRecord& record, const Vocabulary& vocab, const ConditionMap& conditions,
                               bool allow_empty_response) {
  DialogueSample s;
  for (const auto& h : record.history) {
    auto ids = vocab.encode(split_whitespace(h));
    if (!ids.empty()) s.history.push_back(std::move(ids));
  }
  s.response = vocab.encode(split_whitespace(record.response));
  s.condition = conditions.find(record.condition).value_or(kNoCondition);
  if (s.history.empty()) throw DataError("dialogue with an empty history");
  if (s.response.empty() && !allow_empty_response) throw DataError("dialogue with an empty response");
  return s;
}

std::vector<DialogueSample> encode_dialogues(const std::vector<DialogueRecord>& records, const Vocabulary& vocab,
                                             const ConditionMap& conditions) {
  std::vector<DialogueSample> out;
  out.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    try {
      out.push_back(encode_dialogue(records[i], vocab, conditions));
    } catch (const DataError& e) {
      throw DataError("dialogue " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

std::vector<TextSample> encode_texts(const std::vector<TextRecord>& records, const Vocabulary& vocab,
                                     const ConditionMap& conditions) {
  std::vector<TextSample> out;
  out.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    TextSample s{conditions.find(records[i].condition).value_or(kNoCondition),
                 vocab.encode(split_whitespace(records[i].text))};
    if (s.text.empty()) throw DataError("text " + std::to_string(i) + " is empty");
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace cdg
