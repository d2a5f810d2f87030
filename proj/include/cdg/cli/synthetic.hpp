#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace cdg {

// Template dialogues where topic and condition together decide the answer
// word: "i think t07 is <word>", with <word> the condition's own word for
// the topic. Each condition owns a disjoint block of text_only_fraction of
// the topics whose words never occur in its dialogues; its dialogues cover
// the remaining topics. Texts state the answer of every (topic, condition)
// pair, so the owned words are only ever seen in texts. Topics in no block
// are shared by all conditions.
struct SyntheticConfig {
  std::uint64_t seed = 1;
  std::size_t conditions = 2;
  std::size_t topics = 50;
  std::size_t dialogues = 2000;
  std::size_t texts = 500;
  std::size_t valid = 200;
  double text_only_fraction = 0.3;

  void validate() const;
  std::size_t text_only_topics() const;  // per condition
};

struct SyntheticManifest {
  std::vector<std::string> conditions;
  std::vector<std::vector<std::string>> vocabularies;  // per condition, one word per topic
  std::vector<std::string> topics;
  std::vector<std::vector<std::size_t>> text_only_topics;  // per condition
  std::vector<std::string> text_only_tokens;

  nlohmann::json to_json() const;
  static SyntheticManifest from_json(const nlohmann::json& j);
  static SyntheticManifest load(const std::filesystem::path& path);

  // Condition index whose vocabulary holds the token, if any.
  std::optional<std::size_t> owner(const std::string& token) const;
};

// Writes train.jsonl, texts.jsonl, valid.jsonl, test.jsonl (every shared
// topic under every condition), test_text_only.jsonl (every text-only topic
// under the condition that owns it) and manifest.json.
SyntheticManifest write_synthetic(const SyntheticConfig& config, const std::filesystem::path& dir);

// For each hypothesis, the share of its condition-vocabulary tokens that
// belong to the requested condition; nullopt when it has none.
std::vector<std::optional<double>> condition_accuracy(const SyntheticManifest& manifest,
                                                      const std::vector<std::string>& conditions,
                                                      const std::vector<std::vector<std::string>>& hypotheses);

// Distinct text-only tokens found anywhere in the hypotheses, over all
// text-only tokens.
double text_only_coverage(const SyntheticManifest& manifest, const std::vector<std::vector<std::string>>& hypotheses);

}  // namespace cdg
