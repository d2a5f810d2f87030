#include "cdg/cli/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "cdg/common/errors.hpp"
#include "cdg/common/random.hpp"
#include "cdg/data/corpus.hpp"

namespace cdg {

namespace {

const std::vector<std::string> kSyllables{"zo", "mi", "ra", "ve", "lu", "ke", "sa", "po", "di", "fe"};
const std::vector<std::string> kQuestions{"tell me about {}", "what do you think of {} ?", "any news on {} ?",
                                          "do you like {} ?"};
const std::vector<std::string> kGreetings{"hi there", "good morning", "hey friend"};
const std::vector<std::string> kTextTemplates{"i think {} is {}", "{} is {}", "they say {} is {}"};

std::string two_digits(std::size_t i) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "%02zu", i);
  return buf;
}

std::string fill(std::string pattern, const std::string& a, const std::string& b = "") {
  auto pos = pattern.find("{}");
  pattern.replace(pos, 2, a);
  pos = pattern.find("{}");
  if (pos != std::string::npos) pattern.replace(pos, 2, b);
  return pattern;
}

template <typename T>
const T& pick(const std::vector<T>& v, Rng& rng) {
  return v[uniform_index(rng, v.size())];
}

}  // namespace

void SyntheticConfig::validate() const {
  if (conditions == 0) throw ConfigError("synthetic corpus needs at least one condition");
  if (topics == 0 || topics > 100) throw ConfigError("synthetic topics must be in [1, 100]");
  if (!(text_only_fraction >= 0.0 && text_only_fraction < 1.0)) {
    throw ConfigError("text_only_fraction must be in [0, 1)");
  }
  if (conditions * text_only_topics() >= topics) {
    throw ConfigError("text_only_fraction too large: the per-condition text-only blocks leave no shared topic");
  }
  if (dialogues == 0) throw ConfigError("synthetic corpus needs at least one dialogue");
}

std::size_t SyntheticConfig::text_only_topics() const {
  return static_cast<std::size_t>(std::llround(text_only_fraction * static_cast<double>(topics)));
}

nlohmann::json SyntheticManifest::to_json() const {
  nlohmann::json conds = nlohmann::json::array();
  for (std::size_t c = 0; c < conditions.size(); ++c)
    conds.push_back({{"label", conditions[c]}, {"vocabulary", vocabularies[c]}});
  return {{"conditions", conds},
          {"topics", topics},
          {"text_only_topics", text_only_topics},
          {"text_only_tokens", text_only_tokens}};
}

SyntheticManifest SyntheticManifest::from_json(const nlohmann::json& j) {
  SyntheticManifest m;
  for (const auto& c : j.at("conditions")) {
    m.conditions.push_back(c.at("label").get<std::string>());
    m.vocabularies.push_back(c.at("vocabulary").get<std::vector<std::string>>());
  }
  m.topics = j.at("topics").get<std::vector<std::string>>();
  m.text_only_topics = j.at("text_only_topics").get<std::vector<std::vector<std::size_t>>>();
  m.text_only_tokens = j.at("text_only_tokens").get<std::vector<std::string>>();
  return m;
}

SyntheticManifest SyntheticManifest::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed manifest " + path.string() + ": " + e.what());
  }
}

std::optional<std::size_t> SyntheticManifest::owner(const std::string& token) const {
  for (std::size_t c = 0; c < vocabularies.size(); ++c)
    for (const auto& w : vocabularies[c])
      if (w == token) return c;
  return std::nullopt;
}

SyntheticManifest write_synthetic(const SyntheticConfig& config, const std::filesystem::path& dir) {
  config.validate();
  SyntheticManifest m;
  for (std::size_t t = 0; t < config.topics; ++t) m.topics.push_back("t" + two_digits(t));
  for (std::size_t c = 0; c < config.conditions; ++c) {
    m.conditions.push_back("persona_" + std::to_string(c));
    const std::string stem = c < kSyllables.size() ? kSyllables[c] : "c" + std::to_string(c) + "x";
    std::vector<std::string> words;
    for (std::size_t t = 0; t < config.topics; ++t) words.push_back(stem + two_digits(t));
    m.vocabularies.push_back(std::move(words));
  }
  // Condition c owns the c-th block of k topics counted from the end.
  const std::size_t k = config.text_only_topics();
  std::vector<std::vector<bool>> text_only(config.conditions, std::vector<bool>(config.topics, false));
  m.text_only_topics.resize(config.conditions);
  for (std::size_t c = 0; c < config.conditions; ++c) {
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t t = config.topics - k * (c + 1) + i;
      text_only[c][t] = true;
      m.text_only_topics[c].push_back(t);
      m.text_only_tokens.push_back(m.vocabularies[c][t]);
    }
  }
  std::vector<std::pair<std::size_t, std::size_t>> dialogue_cells, text_cells, shared_cells;  // (topic, condition)
  for (std::size_t t = 0; t < config.topics; ++t) {
    bool owned = false;
    for (std::size_t c = 0; c < config.conditions; ++c) {
      (text_only[c][t] ? text_cells : dialogue_cells).emplace_back(t, c);
      owned = owned || text_only[c][t];
    }
    if (!owned)
      for (std::size_t c = 0; c < config.conditions; ++c) shared_cells.emplace_back(t, c);
  }

  Rng rng(config.seed);
  auto history = [&](std::size_t topic) {
    std::vector<std::string> h;
    if (uniform01(rng) < 0.3) h.push_back(pick(kGreetings, rng));
    h.push_back(fill(pick(kQuestions, rng), m.topics[topic]));
    return h;
  };
  auto dialogue = [&](std::size_t topic, std::size_t cond, std::vector<std::string> h) {
    return DialogueRecord{std::move(h), m.conditions[cond], fill("i think {} is {}", m.topics[topic], m.vocabularies[cond][topic])};
  };
  auto random_dialogues = [&](std::size_t n) {
    std::vector<DialogueRecord> out;
    for (std::size_t i = 0; i < n; ++i) {
      const auto [topic, cond] = pick(dialogue_cells, rng);
      out.push_back(dialogue(topic, cond, history(topic)));
    }
    return out;
  };
  // Cells of one topic share a history, so they differ only in the condition.
  auto grid = [&](const std::vector<std::pair<std::size_t, std::size_t>>& cells) {
    std::vector<DialogueRecord> out;
    std::vector<std::string> h;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i == 0 || cells[i].first != cells[i - 1].first) h = history(cells[i].first);
      out.push_back(dialogue(cells[i].first, cells[i].second, h));
    }
    return out;
  };

  std::filesystem::create_directories(dir);
  write_dialogues(dir / "train.jsonl", random_dialogues(config.dialogues));
  // Texts state the fact of every (topic, condition) cell in turn, after the
  // kind of question a dialogue would ask.
  std::vector<std::pair<std::size_t, std::size_t>> all_cells;
  for (std::size_t c = 0; c < config.conditions; ++c)
    for (std::size_t t = 0; t < config.topics; ++t) all_cells.emplace_back(t, c);
  std::vector<TextRecord> texts;
  for (std::size_t i = 0; i < config.texts; ++i) {
    const auto [topic, cond] = all_cells[i % all_cells.size()];
    std::string body;
    for (const auto& u : history(topic)) body += u + " ";
    body += fill(pick(kTextTemplates, rng), m.topics[topic], m.vocabularies[cond][topic]);
    texts.push_back({m.conditions[cond], std::move(body)});
  }
  shuffle(texts.begin(), texts.end(), rng);
  write_texts(dir / "texts.jsonl", texts);
  write_dialogues(dir / "valid.jsonl", random_dialogues(config.valid));
  write_dialogues(dir / "test.jsonl", grid(shared_cells));
  write_dialogues(dir / "test_text_only.jsonl", grid(text_cells));
  std::ofstream out(dir / "manifest.json");
  if (!out) throw IoError("cannot write " + (dir / "manifest.json").string());
  out << m.to_json().dump(2) << '\n';
  return m;
}

std::vector<std::optional<double>> condition_accuracy(const SyntheticManifest& manifest,
                                                      const std::vector<std::string>& conditions,
                                                      const std::vector<std::vector<std::string>>& hypotheses) {
  if (conditions.size() != hypotheses.size()) throw DataError("one condition per hypothesis is required");
  std::vector<std::optional<double>> out;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    std::size_t owned = 0, right = 0;
    for (const auto& tok : hypotheses[i]) {
      const auto c = manifest.owner(tok);
      if (!c) continue;
      ++owned;
      right += manifest.conditions[*c] == conditions[i];
    }
    out.push_back(owned == 0 ? std::nullopt : std::optional<double>(static_cast<double>(right) / owned));
  }
  return out;
}

double text_only_coverage(const SyntheticManifest& manifest, const std::vector<std::vector<std::string>>& hypotheses) {
  if (manifest.text_only_tokens.empty()) return 0.0;
  const std::set<std::string> wanted(manifest.text_only_tokens.begin(), manifest.text_only_tokens.end());
  std::set<std::string> seen;
  for (const auto& h : hypotheses)
    for (const auto& tok : h)
      if (wanted.count(tok)) seen.insert(tok);
  return static_cast<double>(seen.size()) / static_cast<double>(wanted.size());
}

}  // namespace cdg
