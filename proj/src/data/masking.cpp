#include "cdg/data/masking.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <nlohmann/json.hpp>

#include "cdg/common/errors.hpp"
#include "cdg/common/log.hpp"

namespace cdg {
namespace {

MaskedSample start(const InputEncoding& enc, SampleKind kind, MaskPolicy policy) {
  MaskedSample s;
  s.enc = enc;
  s.targets = enc.token_ids;
  s.active.assign(enc.size(), false);
  s.kind = kind;
  s.policy = policy;
  return s;
}

void replace_input(MaskedSample& s, std::size_t pos, Rng& rng, const MaskingOptions& options, std::size_t vocab_size) {
  s.active[pos] = true;
  s.order.push_back(pos);
  if (!options.bert_replacement) {
    s.enc.token_ids[pos] = kMask;
    return;
  }
  const double u = uniform01(rng);
  if (u < 0.8) {
    s.enc.token_ids[pos] = kMask;
  } else if (u < 0.9 && vocab_size > static_cast<std::size_t>(kNumReserved)) {
    s.enc.token_ids[pos] = kNumReserved + static_cast<int>(uniform_index(rng, vocab_size - kNumReserved));
  }
}

std::vector<std::size_t> target_positions(const InputEncoding& enc, bool drop_eos) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < enc.size(); ++i) {
    if (!enc.is_target(i) || enc.token_ids[i] == kBos) continue;
    if (drop_eos && enc.token_ids[i] == kEos) continue;
    out.push_back(i);
  }
  return out;
}

}  // namespace

std::size_t mask_count(std::size_t candidates, double probability) {
  if (candidates == 0) return 0;
  const auto k = static_cast<std::size_t>(std::llround(probability * static_cast<double>(candidates)));
  return std::min(candidates, std::max<std::size_t>(1, k));
}

std::vector<std::size_t> random_mask_candidates(const InputEncoding& enc) { return target_positions(enc, false); }
std::vector<std::size_t> tfidf_mask_candidates(const InputEncoding& enc) { return target_positions(enc, true); }

MaskedSample apply_random_masking(const InputEncoding& enc, SampleKind kind, Rng& rng, const MaskingOptions& options,
                                  std::size_t vocab_size) {
  auto s = start(enc, kind, MaskPolicy::random);
  auto candidates = random_mask_candidates(enc);
  if (candidates.empty()) throw DataError("sample has no target tokens to mask");
  const std::size_t k = mask_count(candidates.size(), options.probability);
  // Partial Fisher-Yates: the first k slots are a uniform k-subset in draw order.
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + uniform_index(rng, candidates.size() - i);
    std::swap(candidates[i], candidates[j]);
    replace_input(s, candidates[i], rng, options, vocab_size);
  }
  return s;
}

TfIdfTable::TfIdfTable(const std::vector<std::vector<int>>& documents) : documents_(documents.size()) {
  if (documents.empty()) throw DataError("tf-idf needs a non-empty text corpus");
  for (const auto& doc : documents) {
    std::vector<int> seen(doc);
    std::sort(seen.begin(), seen.end());
    seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
    for (int t : seen) {
      if (t < 0) continue;
      if (static_cast<std::size_t>(t) >= df_.size()) df_.resize(static_cast<std::size_t>(t) + 1, 0);
      ++df_[static_cast<std::size_t>(t)];
    }
  }
}

std::size_t TfIdfTable::document_frequency(int token) const {
  if (token < 0 || static_cast<std::size_t>(token) >= df_.size()) return 0;
  return df_[static_cast<std::size_t>(token)];
}

double TfIdfTable::idf(int token) const {
  const double n = static_cast<double>(documents_);
  return std::log((1.0 + n) / (1.0 + static_cast<double>(document_frequency(token)))) + 1.0;
}

double TfIdfTable::unseen_idf() const { return std::log(1.0 + static_cast<double>(documents_)) + 1.0; }

nlohmann::json TfIdfTable::to_json(const Vocabulary& vocab) const {
  nlohmann::json df = nlohmann::json::object();
  nlohmann::json idf = nlohmann::json::object();
  for (std::size_t t = 0; t < df_.size(); ++t) {
    if (df_[t] == 0) continue;
    df[vocab.token(static_cast<int>(t))] = df_[t];
    idf[vocab.token(static_cast<int>(t))] = this->idf(static_cast<int>(t));
  }
  return {{"documents", documents_}, {"unseen_idf", unseen_idf()}, {"document_frequency", df}, {"idf", idf}};
}

TfIdfTable TfIdfTable::from_json(const nlohmann::json& j, const Vocabulary& vocab) {
  TfIdfTable table;
  table.documents_ = j.at("documents").get<std::size_t>();
  table.df_.assign(vocab.size(), 0);
  for (const auto& [token, df] : j.at("document_frequency").items()) {
    if (!vocab.contains(token)) continue;
    table.df_[static_cast<std::size_t>(vocab.id(token))] = df.get<std::size_t>();
  }
  return table;
}

MaskedSample apply_tfidf_masking(const InputEncoding& enc, const TfIdfTable& table, Rng& rng,
                                 const MaskingOptions& options, std::size_t vocab_size) {
  if (enc.source_length() != 0) throw UsageError("tf-idf masking applies to text samples only");
  auto s = start(enc, SampleKind::text, MaskPolicy::tfidf);
  auto candidates = tfidf_mask_candidates(enc);
  if (candidates.empty()) throw DataError("text sample has no maskable tokens");

  std::map<int, std::size_t> tf;
  for (std::size_t pos : candidates) ++tf[enc.token_ids[pos]];
  std::vector<double> weights;
  weights.reserve(candidates.size());
  for (std::size_t pos : candidates) {
    const int t = enc.token_ids[pos];
    weights.push_back(static_cast<double>(tf[t]) * table.idf(t));
  }

  double initial = 0.0;
  for (double w : weights) initial += w;
  if (!(initial > 0.0)) {
    log::warning("all tf-idf weights are zero; masking uniformly");
    std::fill(weights.begin(), weights.end(), 1.0);
  }

  const std::size_t k = mask_count(candidates.size(), options.probability);
  for (std::size_t draw = 0; draw < k; ++draw) {
    double total = 0.0;
    for (double w : weights) total += w;
    const double u = uniform01(rng) * total;
    double acc = 0.0;
    std::size_t pick = 0, last_positive = 0;
    for (; pick < weights.size(); ++pick) {
      if (weights[pick] <= 0.0) continue;
      last_positive = pick;
      acc += weights[pick];
      if (u < acc) break;
    }
    if (pick == weights.size()) pick = last_positive;  // rounding at the top end
    weights[pick] = 0.0;
    replace_input(s, candidates[pick], rng, options, vocab_size);
  }
  return s;
}

}  // namespace cdg
