#include "cdg/decoding/generator.hpp"

#include <atomic>
#include <fstream>
#include <optional>
#include <thread>

#include <nlohmann/json.hpp>

#include "cdg/common/errors.hpp"
#include "cdg/common/log.hpp"
#include "cdg/data/packing.hpp"
#include "cdg/tensor/ops.hpp"
#include "cdg/tensor/tape.hpp"

namespace cdg {

std::vector<double> step_log_probs(const ConditionedTransformer& model, const std::vector<std::vector<int>>& history,
                                   int condition, const std::vector<int>& prefix) {
  NoGradGuard no_grad;
  std::vector<int> target{kBos};
  target.insert(target.end(), prefix.begin(), prefix.end());
  target.push_back(kMask);
  const std::size_t max_length = model.config().max_length;
  if (target.size() + 2 > max_length) {
    throw LengthError("prefix of " + std::to_string(prefix.size()) + " tokens leaves no room for a source within max_length " +
                      std::to_string(max_length));
  }
  auto enc = pack_source_target(pack_source(history, max_length - target.size()), target, condition);
  const std::size_t last = enc.size() - 1;
  auto hidden = ops::gather_rows(model.encode(enc), std::span<const std::size_t>(&last, 1));
  auto log_probs = ops::log_softmax_lastdim(model.lm_head(hidden));
  return {log_probs.data().begin(), log_probs.data().end()};
}

std::vector<bool> candidate_tokens(std::size_t vocab_size, const DecodeConfig& config) {
  std::vector<bool> allowed(vocab_size, false);
  for (std::size_t t = kNumReserved; t < vocab_size; ++t) allowed[t] = true;
  allowed[kEos] = true;
  if (config.allow_unk) allowed[kUnk] = true;
  return allowed;
}

std::vector<Hypothesis> generate(const ConditionedTransformer& model, const DialogueSample& sample,
                                 const DecodeConfig& config) {
  auto scorer = [&](const std::vector<int>& prefix) {
    return step_log_probs(model, sample.history, sample.condition, prefix);
  };
  return beam_search(scorer, candidate_tokens(model.config().vocab_size, config), kEos, config);
}

GenerationSummary generate_file(const ConditionedTransformer& model, const Vocabulary& vocab,
                                const ConditionMap& conditions, const std::filesystem::path& input,
                                const std::filesystem::path& output, const DecodeConfig& config, bool use_conditions,
                                std::size_t threads) {
  config.validate();
  if (vocab.size() != model.config().vocab_size) {
    throw ConfigError("vocabulary of " + std::to_string(vocab.size()) + " tokens does not match model vocab_size " +
                      std::to_string(model.config().vocab_size));
  }
  const auto lines = read_dialogue_lines(input);
  GenerationSummary summary;
  summary.inputs = lines.size();

  std::vector<std::optional<DialogueSample>> samples(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (!lines[i]) continue;
    try {
      samples[i] = encode_dialogue(*lines[i], vocab, conditions, true);
      if (!use_conditions) samples[i]->condition = kNoCondition;
    } catch (const DataError& e) {
      log::warning("skipping input at index " + std::to_string(i) + ": " + e.what());
    }
  }

  std::vector<std::optional<Hypothesis>> best(lines.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < samples.size(); i = next++) {
      if (!samples[i]) continue;
      auto ranked = generate(model, *samples[i], config);
      if (!ranked.empty()) best[i] = std::move(ranked.front());
    }
  };
  threads = std::max<std::size_t>(1, std::min(threads, samples.size()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  std::ofstream out(output, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + output.string());
  std::size_t total_length = 0;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (!best[i]) {
      ++summary.skipped;
      continue;
    }
    const auto& h = *best[i];
    out << nlohmann::json{{"index", i},
                          {"condition", lines[i]->condition},
                          {"hypothesis", vocab.decode(h.tokens)},
                          {"score", h.score},
                          {"length", h.tokens.size()}}
               .dump()
        << '\n';
    ++summary.written;
    total_length += h.tokens.size();
  }
  if (!out.flush()) throw IoError("failed writing " + output.string());
  if (summary.written > 0) summary.average_length = static_cast<double>(total_length) / summary.written;
  return summary;
}

}  // namespace cdg
