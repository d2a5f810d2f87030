#include "cdg/cli/run_config.hpp"

#include <charconv>
#include <fstream>

#include "cdg/common/errors.hpp"

namespace cdg {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool parse_flag(const std::string& v, bool& out) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return out = true, true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return out = false, true;
  return false;
}

}  // namespace

const std::map<std::string, RunConfig::Spec>& RunConfig::specs() {
  static const std::map<std::string, Spec> table{
      {"model.hidden_size", {Kind::count, "32"}},
      {"model.num_layers", {Kind::count, "3"}},
      {"model.num_heads", {Kind::count, "2"}},
      {"model.ffn_size", {Kind::count, "0"}},
      {"model.max_length", {Kind::count, "64"}},
      {"model.num_condition_layers", {Kind::count, "2"}},
      {"model.dropout", {Kind::real, "0.1"}},
      {"model.layer_norm_eps", {Kind::real, "1e-12"}},
      {"model.gate", {Kind::gate, "attention_routing"}},

      {"train.learning_rate", {Kind::real, "0.001"}},
      {"train.warmup_proportion", {Kind::real, "0.1"}},
      {"train.weight_decay", {Kind::real, "0.01"}},
      {"train.label_smoothing", {Kind::real, "0"}},
      {"train.clip_norm", {Kind::real, "1"}},
      {"train.epochs", {Kind::count, "10"}},
      {"train.batch_size", {Kind::count, "32"}},
      {"train.seed", {Kind::count, "1"}},
      {"train.no_condition", {Kind::flag, "false"}},
      {"train.no_ctext", {Kind::flag, "false"}},
      {"train.no_tfidf", {Kind::flag, "false"}},

      {"masking.probability", {Kind::real, "0.25"}},
      {"masking.bert_replacement", {Kind::flag, "false"}},
      {"masking.dialogue_fraction", {Kind::real, "0.75"}},
      {"masking.text_bidirectional_probability", {Kind::real, "0.5"}},

      {"validation.mask_probability", {Kind::real, "0.25"}},
      {"validation.seed", {Kind::count, "0"}},

      {"data.train", {Kind::path, ""}},
      {"data.texts", {Kind::path, ""}},
      {"data.valid", {Kind::path, ""}},
      {"data.test", {Kind::path, ""}},
      {"data.vocab", {Kind::path, ""}},
      {"data.tfidf", {Kind::path, ""}},
      {"data.min_count", {Kind::count, "1"}},

      {"decode.beam_size", {Kind::count, "10"}},
      {"decode.max_new_tokens", {Kind::count, "20"}},
      {"decode.length_alpha", {Kind::real, "0"}},
      {"decode.block_repeat_bigrams", {Kind::flag, "true"}},
      {"decode.allow_unk", {Kind::flag, "false"}},
      {"decode.threads", {Kind::count, "1"}},

      {"eval.sentence_bleu", {Kind::flag, "false"}},
  };
  return table;
}

RunConfig RunConfig::defaults() {
  RunConfig c;
  for (const auto& [key, s] : specs()) c.values_[key] = s.fallback;
  return c;
}

const RunConfig::Spec& RunConfig::spec(const std::string& key) const {
  auto it = specs().find(key);
  if (it == specs().end()) throw ConfigError("unknown configuration key '" + key + "'");
  return it->second;
}

void RunConfig::set(const std::string& key, const std::string& raw) {
  const auto& s = spec(key);
  const std::string value = trim(raw);
  auto bad = [&](const char* what) {
    throw ConfigError("configuration key '" + key + "' expects " + what + ", got '" + value + "'");
  };
  switch (s.kind) {
    case Kind::real: {
      double d = 0.0;
      auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), d);
      if (ec != std::errc() || ptr != value.data() + value.size() || value.empty()) bad("a number");
      break;
    }
    case Kind::count: {
      std::size_t n = 0;
      auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), n);
      if (ec != std::errc() || ptr != value.data() + value.size() || value.empty()) bad("a nonnegative integer");
      break;
    }
    case Kind::flag: {
      bool b = false;
      if (!parse_flag(value, b)) bad("true or false");
      break;
    }
    case Kind::gate:
      parse_gate_variant(value);
      break;
    case Kind::text:
    case Kind::path:
      break;
  }
  values_[key] = value;
}

void RunConfig::set_assignment(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + assignment + "'");
  set(trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

void RunConfig::load_profile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open profile " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    if (trim(line).empty()) continue;
    try {
      set_assignment(line);
    } catch (const ConfigError& e) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

const std::string& RunConfig::text(const std::string& key) const {
  spec(key);
  return values_.at(key);
}

std::filesystem::path RunConfig::path(const std::string& key) const { return text(key); }

double RunConfig::real(const std::string& key) const { return std::stod(text(key)); }

std::size_t RunConfig::count(const std::string& key) const { return std::stoull(text(key)); }

bool RunConfig::flag(const std::string& key) const {
  bool b = false;
  parse_flag(text(key), b);
  return b;
}

void RunConfig::absolutize_paths() {
  for (auto& [key, value] : values_)
    if (spec(key).kind == Kind::path && !value.empty()) value = std::filesystem::absolute(value).lexically_normal().string();
}

ModelConfig RunConfig::model_config(std::size_t vocab_size, std::size_t num_conditions) const {
  ModelConfig m;
  m.vocab_size = vocab_size;
  m.num_conditions = num_conditions;
  m.hidden_size = count("model.hidden_size");
  m.num_layers = count("model.num_layers");
  m.num_heads = count("model.num_heads");
  m.ffn_size = count("model.ffn_size");
  m.max_length = count("model.max_length");
  m.num_condition_layers = count("model.num_condition_layers");
  m.dropout = real("model.dropout");
  m.layer_norm_eps = real("model.layer_norm_eps");
  m.gate = parse_gate_variant(text("model.gate"));
  m.validate();
  return m;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t;
  t.learning_rate = real("train.learning_rate");
  t.warmup_proportion = real("train.warmup_proportion");
  t.weight_decay = real("train.weight_decay");
  t.label_smoothing = real("train.label_smoothing");
  t.clip_norm = real("train.clip_norm");
  t.epochs = count("train.epochs");
  t.batch_size = count("train.batch_size");
  t.seed = count("train.seed");
  t.validate();
  return t;
}

SamplerConfig RunConfig::sampler_config() const {
  SamplerConfig s;
  s.batch_size = count("train.batch_size");
  s.dialogue_fraction = real("masking.dialogue_fraction");
  s.text_bidirectional_probability = real("masking.text_bidirectional_probability");
  s.masking.probability = real("masking.probability");
  s.masking.bert_replacement = flag("masking.bert_replacement");
  s.max_length = count("model.max_length");
  return s;
}

DecodeConfig RunConfig::decode_config() const {
  DecodeConfig d;
  d.beam_size = count("decode.beam_size");
  d.max_new_tokens = count("decode.max_new_tokens");
  d.length_alpha = real("decode.length_alpha");
  d.block_repeat_bigrams = flag("decode.block_repeat_bigrams");
  d.allow_unk = flag("decode.allow_unk");
  d.validate();
  return d;
}

Ablation RunConfig::ablation() const {
  return {flag("train.no_condition"), flag("train.no_ctext"), flag("train.no_tfidf"),
          parse_gate_variant(text("model.gate"))};
}

std::string RunConfig::dump() const {
  std::string out;
  for (const auto& [key, value] : values_) out += key + " = " + value + "\n";
  return out;
}

void RunConfig::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << dump();
}

}  // namespace cdg
