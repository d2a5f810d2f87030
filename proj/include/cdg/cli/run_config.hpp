#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "cdg/data/sampler.hpp"
#include "cdg/decoding/beam.hpp"
#include "cdg/model/config.hpp"
#include "cdg/training/trainer.hpp"

namespace cdg {

// Flat dotted-key configuration ("train.learning_rate = 3e-5"). Later layers
// win: built-in defaults, then a profile file, then command-line overrides.
// Every value is checked against its key's type when it is set.
class RunConfig {
 public:
  enum class Kind { text, path, real, count, flag, gate };

  // All keys with their built-in defaults.
  static RunConfig defaults();

  // "key = value" lines; '#' starts a comment. Unknown keys are errors.
  void load_profile(const std::filesystem::path& path);
  void set(const std::string& key, const std::string& value);
  // Parses "key=value".
  void set_assignment(const std::string& assignment);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::string& text(const std::string& key) const;
  std::filesystem::path path(const std::string& key) const;  // empty when unset
  double real(const std::string& key) const;
  std::size_t count(const std::string& key) const;
  bool flag(const std::string& key) const;
  const std::map<std::string, std::string>& values() const { return values_; }

  // Rewrites relative paths as absolute ones so the frozen copy stands alone.
  void absolutize_paths();

  // vocab_size and num_conditions come from the data, not the config.
  ModelConfig model_config(std::size_t vocab_size, std::size_t num_conditions) const;
  TrainConfig train_config() const;
  SamplerConfig sampler_config() const;
  DecodeConfig decode_config() const;
  Ablation ablation() const;

  std::string dump() const;  // the profile format, sorted by key
  void save(const std::filesystem::path& path) const;

 private:
  struct Spec {
    Kind kind;
    std::string fallback;
  };
  static const std::map<std::string, Spec>& specs();
  const Spec& spec(const std::string& key) const;

  std::map<std::string, std::string> values_;
};

}  // namespace cdg
