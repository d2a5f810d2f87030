#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cdg/common/errors.hpp"
#include "cdg/common/log.hpp"
#include "cdg/data/corpus.hpp"
#include "cdg/data/masking.hpp"
#include "cdg/data/packing.hpp"
#include "cdg/data/sampler.hpp"
#include "cdg/data/vocabulary.hpp"
#include "tfidf_oracle.hpp"

using namespace cdg;
using cdg::testing::exact_inclusion;

namespace {

std::vector<int> random_tokens(Rng& rng, std::size_t n, int vocab = 40) {
  std::vector<int> t(n);
  for (auto& x : t) x = kNumReserved + static_cast<int>(uniform_index(rng, vocab - kNumReserved));
  return t;
}

DialogueSample random_dialogue(Rng& rng, int condition = 0) {
  DialogueSample s;
  const std::size_t turns = 1 + uniform_index(rng, 3);
  for (std::size_t i = 0; i < turns; ++i) s.history.push_back(random_tokens(rng, 1 + uniform_index(rng, 5)));
  s.response = random_tokens(rng, 1 + uniform_index(rng, 6));
  s.condition = condition;
  return s;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Vocabulary, ReservedIdsComeFirst) {
  Vocabulary v;
  EXPECT_EQ(v.size(), 7u);
  EXPECT_EQ(v.id("[PAD]"), kPad);
  EXPECT_EQ(v.id("[MASK]"), kMask);
  EXPECT_EQ(v.id("[EOS]"), kEos);
  EXPECT_EQ(v.id("never-seen"), kUnk);
}

TEST(Vocabulary, BuildHonoursMinCount) {
  TokenCounts counts{{"a", 2}, {"b", 1}};
  auto v1 = Vocabulary::build(counts, 1);
  EXPECT_EQ(v1.size(), 9u);
  EXPECT_EQ(v1.id("a"), 7);
  EXPECT_EQ(v1.id("b"), 8);
  auto v2 = Vocabulary::build(counts, 2);
  EXPECT_TRUE(v2.contains("a"));
  EXPECT_FALSE(v2.contains("b"));
  EXPECT_EQ(v2.id("b"), kUnk);
}

TEST(Vocabulary, OrderIsCountThenLexicographic) {
  auto v = Vocabulary::build({{"zeta", 3}, {"alpha", 1}, {"beta", 3}, {"gamma", 2}}, 1);
  EXPECT_EQ(v.token(7), "beta");
  EXPECT_EQ(v.token(8), "zeta");
  EXPECT_EQ(v.token(9), "gamma");
  EXPECT_EQ(v.token(10), "alpha");
}

TEST(Vocabulary, EmptyCorpusIsAnError) { EXPECT_THROW(Vocabulary::build({}, 1), DataError); }

TEST(Vocabulary, RebuildIsByteIdentical) {
  const auto dir = std::filesystem::temp_directory_path();
  TokenCounts counts = count_tokens({{{"a a b"}, "x", "b c"}}, {{"x", "c d a"}});
  Vocabulary::build(counts, 1).save(dir / "cdg_vocab_1.txt");
  Vocabulary::build(counts, 1).save(dir / "cdg_vocab_2.txt");
  EXPECT_EQ(read_file(dir / "cdg_vocab_1.txt"), read_file(dir / "cdg_vocab_2.txt"));
  auto loaded = Vocabulary::load(dir / "cdg_vocab_1.txt");
  EXPECT_EQ(loaded.tokens(), Vocabulary::build(counts, 1).tokens());
  EXPECT_EQ(loaded.hash(), Vocabulary::build(counts, 1).hash());
  EXPECT_NE(loaded.hash(), Vocabulary().hash());
  std::filesystem::remove(dir / "cdg_vocab_1.txt");
  std::filesystem::remove(dir / "cdg_vocab_2.txt");
}

TEST(Corpus, ConditionsInFirstSeenOrder) {
  std::vector<DialogueRecord> d{{{"h"}, "sad", "r"}, {{"h"}, "happy", "r"}, {{"h"}, "sad", "r"}};
  std::vector<TextRecord> t{{"calm", "x"}, {"happy", "y"}};
  auto map = collect_conditions(d, t);
  EXPECT_EQ(map.labels(), (std::vector<std::string>{"sad", "happy", "calm"}));
  EXPECT_EQ(map.id("calm"), 2);
  EXPECT_THROW(map.id("angry"), DataError);
}

TEST(Corpus, ReadsAndSkipsMalformedLines) {
  const auto path = std::filesystem::temp_directory_path() / "cdg_corpus_test.jsonl";
  {
    std::ofstream out(path);
    out << R"({"history": ["hi there"], "condition": "a", "response": "yo"})" << "\n";
    out << "{not json\n\n";
    out << R"({"history": ["x", "y"], "condition": "b"})" << "\n";
  }
  auto lines = read_dialogue_lines(path);
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_TRUE(lines[0].has_value());
  EXPECT_FALSE(lines[1].has_value());
  EXPECT_EQ(lines[2]->history.size(), 2u);
  EXPECT_EQ(lines[2]->response, "");
  EXPECT_THROW(read_dialogues(path), DataError);
  std::filesystem::remove(path);
  EXPECT_THROW(read_dialogues(path), IoError);
}

TEST(PackDialogue, LayoutAndTypes) {
  DialogueSample s{{{20}}, 0, {21}};
  auto enc = pack_dialogue(s, 16).value();
  EXPECT_EQ(enc.token_ids, (std::vector<int>{kCls, 20, kSep, kBos, 21, kEos}));
  EXPECT_EQ(enc.type_ids, (std::vector<int>{0, 0, 0, 1, 1, 1}));
  EXPECT_EQ(enc.position_ids, (std::vector<int>{0, 1, 2, 3, 4, 5}));
  EXPECT_EQ(enc.condition_id, 0);
}

TEST(PackDialogue, MaskQuadrants) {
  DialogueSample s{{{20, 22}, {23}}, 1, {21, 24}};
  auto enc = pack_dialogue(s, 32).value();
  const std::size_t src = enc.source_length();
  ASSERT_EQ(src, 6u);
  for (std::size_t j = 0; j < enc.size(); ++j) EXPECT_EQ(enc.mask.open(0, j), j < src);
  const std::size_t bos = src, eos = enc.size() - 1;
  EXPECT_FALSE(enc.mask.open(bos, eos));
  EXPECT_TRUE(enc.mask.open(eos, bos));
}

TEST(PackDialogue, TruncatesOldestHistoryFirst) {
  DialogueSample s{{{20, 20, 20}, {21, 21}, {22}}, 0, {23}};
  // Target takes 3 tokens; budget 9 leaves 6 for source: [CLS] 21 21 [SEP] 22 [SEP].
  auto enc = pack_dialogue(s, 9).value();
  EXPECT_EQ(enc.token_ids, (std::vector<int>{kCls, 21, 21, kSep, 22, kSep, kBos, 23, kEos}));
  // A single long utterance keeps its newest tokens.
  DialogueSample long_turn{{{30, 31, 32, 33, 34}}, 0, {23}};
  auto cut = pack_dialogue(long_turn, 7).value();
  EXPECT_EQ(cut.token_ids, (std::vector<int>{kCls, 33, 34, kSep, kBos, 23, kEos}));
}

TEST(PackDialogue, RejectsOverlongResponse) {
  log::reset_warning_count();
  DialogueSample s{{{20}}, 0, {21, 22, 23, 24}};
  EXPECT_FALSE(pack_dialogue(s, 7).has_value());
  EXPECT_EQ(log::warning_count(), 1u);
  EXPECT_TRUE(pack_dialogue(s, 8).has_value());
}

TEST(PackText, AttentionChoices) {
  TextSample t{0, {20, 21, 22}};
  auto bi = pack_text(t, TextAttention::bidirectional, 16);
  EXPECT_EQ(bi.token_ids, (std::vector<int>{kBos, 20, 21, 22, kEos}));
  EXPECT_EQ(bi.source_length(), 0u);
  for (double v : bi.mask.values()) EXPECT_EQ(v, 0.0);
  auto l2r = pack_text(t, TextAttention::left_to_right, 16);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j) EXPECT_EQ(l2r.mask.open(i, j), j <= i);
}

TEST(PackText, TruncatesTail) {
  TextSample t{0, {20, 21, 22, 23, 24}};
  auto enc = pack_text(t, TextAttention::bidirectional, 4);
  EXPECT_EQ(enc.token_ids, (std::vector<int>{kBos, 20, 21, kEos}));
}

TEST(PackingProperty, DialogueMaskStructure) {
  Rng rng(1);
  for (int trial = 0; trial < 1000; ++trial) {
    auto enc = pack_dialogue(random_dialogue(rng), 64).value();
    ASSERT_NO_THROW(enc.validate());
    const std::size_t src = enc.source_length(), n = enc.size();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const bool expected = j < src ? true : (i >= src && j <= i);
        ASSERT_EQ(enc.mask.open(i, j), expected) << "trial " << trial << " (" << i << "," << j << ")";
      }
    }
  }
}

TEST(PackingProperty, UnpackRecoversTokens) {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    auto s = random_dialogue(rng);
    auto back = unpack_dialogue(pack_dialogue(s, 64).value());
    EXPECT_EQ(back.history, s.history);
    EXPECT_EQ(back.response, s.response);
    TextSample t{1, random_tokens(rng, 1 + uniform_index(rng, 9))};
    EXPECT_EQ(unpack_text(pack_text(t, TextAttention::left_to_right, 64)), t.text);
  }
}

TEST(RandomMasking, CountRule) {
  EXPECT_EQ(mask_count(4, 0.25), 1u);
  EXPECT_EQ(mask_count(1, 0.25), 1u);
  EXPECT_EQ(mask_count(6, 0.25), 2u);
  EXPECT_EQ(mask_count(12, 0.25), 3u);
}

TEST(RandomMasking, SingleTargetTokenIsMasked) {
  // Response of zero words is impossible; [EOS] alone is the one candidate
  // in a text sample whose body is one token after removing [BOS].
  Rng rng(3);
  InputEncoding enc = pack_source_target({kCls, 20, kSep}, {kBos, 21}, 0);
  auto m = apply_random_masking(enc, SampleKind::dialogue, rng, {}, 30);
  ASSERT_EQ(m.masked_count(), 1u);
  EXPECT_EQ(m.order[0], 4u);
  EXPECT_EQ(m.enc.token_ids[4], kMask);
  EXPECT_EQ(m.targets[4], 21);
}

TEST(RandomMasking, OnlyTargetSideAndNeverBos) {
  Rng rng(4);
  for (int trial = 0; trial < 500; ++trial) {
    auto enc = pack_dialogue(random_dialogue(rng), 64).value();
    auto m = apply_random_masking(enc, SampleKind::dialogue, rng, {}, 40);
    EXPECT_EQ(m.masked_count(), mask_count(enc.size() - enc.source_length() - 1, 0.25));
    for (std::size_t i = 0; i < enc.size(); ++i) {
      if (!m.active[i]) {
        EXPECT_EQ(m.enc.token_ids[i], enc.token_ids[i]);
        continue;
      }
      EXPECT_TRUE(enc.is_target(i));
      EXPECT_NE(enc.token_ids[i], kBos);
      EXPECT_EQ(m.enc.token_ids[i], kMask);
    }
  }
}

TEST(RandomMasking, UniformOverCandidates) {
  Rng rng(5);
  InputEncoding enc = pack_source_target({kCls, 20, kSep}, {kBos, 21, 22, 23, kEos}, 0);
  std::map<std::size_t, int> hits;
  const int trials = 20000;
  for (int t = 0; t < trials; ++t) ++hits[apply_random_masking(enc, SampleKind::dialogue, rng, {}, 30).order[0]];
  EXPECT_EQ(hits.size(), 4u);
  for (auto [pos, count] : hits) EXPECT_NEAR(count / double(trials), 0.25, 0.02) << pos;
}

TEST(RandomMasking, BertReplacementSplit) {
  Rng rng(6);
  TextSample t{0, std::vector<int>(40, 20)};
  auto enc = pack_text(t, TextAttention::bidirectional, 64);
  MaskingOptions opts{0.25, true};
  int masked = 0, kept = 0, swapped = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    auto m = apply_random_masking(enc, SampleKind::text, rng, opts, 30);
    for (auto pos : m.order) {
      const int now = m.enc.token_ids[pos];
      if (now == kMask) ++masked;
      else if (now == m.targets[pos]) ++kept;
      else ++swapped;
    }
  }
  const double total = masked + kept + swapped;
  EXPECT_NEAR(masked / total, 0.8, 0.02);
  EXPECT_GT(kept / total, 0.08);
  EXPECT_GT(swapped / total, 0.08);
}

TEST(TfIdf, IdfExamples) {
  // Four documents: token 10 in all, token 11 in exactly one.
  TfIdfTable table({{10, 11}, {10}, {10, 12}, {10, 12, 12}});
  EXPECT_EQ(table.documents(), 4u);
  EXPECT_DOUBLE_EQ(table.idf(10), 1.0);
  EXPECT_NEAR(table.idf(11), std::log(5.0 / 2.0) + 1.0, 1e-15);
  EXPECT_NEAR(table.idf(11), 1.9163, 5e-5);
  EXPECT_NEAR(table.idf(99), 2.6094, 5e-5);
  EXPECT_DOUBLE_EQ(table.idf(99), table.unseen_idf());
  for (int t : {10, 11, 12, 99}) EXPECT_GE(table.idf(t), 0.0);
}

TEST(TfIdf, JsonRoundTrip) {
  auto vocab = Vocabulary::build({{"a", 3}, {"b", 2}, {"c", 1}}, 1);
  TfIdfTable table({{7, 8}, {7}, {9, 9}});
  auto back = TfIdfTable::from_json(table.to_json(vocab), vocab);
  for (int t = 0; t < 12; ++t) EXPECT_EQ(back.idf(t), table.idf(t));
}

TEST(TfIdfMasking, ThreeToOneRatio) {
  // Token 20 is in all 1000 documents (idf 1), token 21 in 134 of them:
  // ln(1001/135) + 1 = 3.0035, so the two candidates weigh about 3:1.
  std::vector<std::vector<int>> docs(1000, std::vector<int>{20});
  for (std::size_t i = 0; i < 134; ++i) docs[i].push_back(21);
  TfIdfTable table(docs);
  const double expected = (std::log(1001.0 / 135.0) + 1.0) / (std::log(1001.0 / 135.0) + 2.0);
  ASSERT_NEAR(expected, 0.75, 1e-3);
  TextSample t{0, {20, 21}};
  auto enc = pack_text(t, TextAttention::bidirectional, 16);
  Rng rng(7);
  int first_is_21 = 0;
  const int trials = 10000;
  for (int i = 0; i < trials; ++i) {
    auto m = apply_tfidf_masking(enc, table, rng, {}, 30);
    ASSERT_EQ(m.masked_count(), 1u);
    first_is_21 += m.targets[m.order[0]] == 21;
  }
  EXPECT_NEAR(first_is_21 / double(trials), 0.75, 0.02);
}

TEST(TfIdfMasking, UniformWeightsMatchRandomMasking) {
  TfIdfTable flat({{20, 21, 22, 23}});
  TextSample t{0, {20, 21, 22, 23}};
  auto enc = pack_text(t, TextAttention::bidirectional, 16);
  Rng rng(8);
  std::map<std::size_t, int> hits;
  for (int i = 0; i < 20000; ++i) ++hits[apply_tfidf_masking(enc, flat, rng, {}, 30).order[0]];
  for (auto [pos, count] : hits) EXPECT_NEAR(count / 20000.0, 0.25, 0.02);
  EXPECT_EQ(hits.size(), 4u);
}

TEST(TfIdfMasking, NeverMasksBosOrEos) {
  TfIdfTable table(std::vector<std::vector<int>>{{20}});
  TextSample t{0, {20}};
  auto enc = pack_text(t, TextAttention::bidirectional, 16);
  Rng rng(9);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(apply_tfidf_masking(enc, table, rng, {}, 30).order, (std::vector<std::size_t>{1}));
}

TEST(TfIdfMasking, RefusesDialogueSamples) {
  TfIdfTable table(std::vector<std::vector<int>>{{20}});
  Rng rng(10);
  auto enc = pack_dialogue({{{20}}, 0, {21}}, 16).value();
  EXPECT_THROW(apply_tfidf_masking(enc, table, rng, {}, 30), UsageError);
}

TEST(TfIdfMaskingProperty, DrawLawOnFixedDocument) {
  std::vector<std::vector<int>> docs{{20, 21, 22}, {20, 23}, {20, 24, 25}, {21, 26}, {20, 27, 28, 29}};
  TfIdfTable table(docs);
  TextSample doc{0, {20, 21, 22, 23, 20, 24, 25, 26, 27, 29}};
  auto enc = pack_text(doc, TextAttention::bidirectional, 32);
  const auto candidates = tfidf_mask_candidates(enc);
  ASSERT_EQ(candidates.size(), 10u);

  // Oracle weights: tf within this document times the smoothed idf.
  std::vector<double> w;
  for (auto pos : candidates) {
    const int tok = enc.token_ids[pos];
    const double tf = static_cast<double>(std::count(doc.text.begin(), doc.text.end(), tok));
    std::size_t df = 0;
    for (const auto& d : docs) df += std::find(d.begin(), d.end(), tok) != d.end();
    w.push_back(tf * (std::log((1.0 + docs.size()) / (1.0 + df)) + 1.0));
  }
  double total = 0.0;
  for (double x : w) total += x;
  const std::size_t k = mask_count(10, 0.25);
  ASSERT_EQ(k, 3u);
  const auto inclusion = exact_inclusion(w, k);

  Rng rng(11);
  const int trials = 10000;
  std::vector<double> first(10, 0.0), included(10, 0.0);
  for (int i = 0; i < trials; ++i) {
    auto m = apply_tfidf_masking(enc, table, rng, {}, 40);
    for (std::size_t c = 0; c < 10; ++c) {
      if (m.order[0] == candidates[c]) first[c] += 1.0 / trials;
      if (m.active[candidates[c]]) included[c] += 1.0 / trials;
    }
  }
  double tv_first = 0.0, tv_inclusion = 0.0;
  for (std::size_t c = 0; c < 10; ++c) {
    tv_first += 0.5 * std::abs(first[c] - w[c] / total);
    tv_inclusion += 0.5 * std::abs(included[c] - inclusion[c]) / static_cast<double>(k);
  }
  EXPECT_LT(tv_first, 0.02);
  EXPECT_LT(tv_inclusion, 0.02);
}

namespace {

std::vector<DialogueSample> dialogue_corpus(Rng& rng, std::size_t n) {
  std::vector<DialogueSample> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(random_dialogue(rng, static_cast<int>(i % 2)));
  return out;
}

std::vector<TextSample> text_corpus(Rng& rng, std::size_t n) {
  std::vector<TextSample> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({static_cast<int>(i % 2), random_tokens(rng, 2 + uniform_index(rng, 6))});
  return out;
}

TfIdfTable table_for(const std::vector<TextSample>& texts) {
  std::vector<std::vector<int>> docs;
  for (const auto& t : texts) docs.push_back(t.text);
  return TfIdfTable(docs);
}

}  // namespace

TEST(MixedBatchSampler, Composition) {
  Rng rng(12);
  auto dialogues = dialogue_corpus(rng, 50);
  auto texts = text_corpus(rng, 20);
  auto table = table_for(texts);
  SamplerConfig cfg;
  cfg.batch_size = 160;
  MixedBatchSampler big(dialogues, texts, &table, cfg, 40, 1);
  EXPECT_EQ(big.dialogues_per_batch(), 120u);
  EXPECT_EQ(big.texts_per_batch(), 40u);
  cfg.batch_size = 4;
  MixedBatchSampler small(dialogues, texts, &table, cfg, 40, 1);
  EXPECT_EQ(small.dialogues_per_batch(), 3u);
  EXPECT_EQ(small.texts_per_batch(), 1u);
}

TEST(MixedBatchSampler, ExactSplitAndRoutingEveryBatch) {
  Rng rng(13);
  auto dialogues = dialogue_corpus(rng, 300);
  auto texts = text_corpus(rng, 100);
  auto table = table_for(texts);
  SamplerConfig cfg;
  cfg.batch_size = 16;
  MixedBatchSampler sampler(dialogues, texts, &table, cfg, 40, 2);
  for (int b = 0; b < 1000; ++b) {
    auto batch = sampler.next();
    ASSERT_EQ(batch.samples.size(), 16u);
    ASSERT_EQ(batch.dialogue_count, 12u);
    ASSERT_EQ(batch.text_count, 4u);
    for (const auto& s : batch.samples) {
      if (s.kind == SampleKind::dialogue) {
        ASSERT_EQ(s.policy, MaskPolicy::random);
        ASSERT_GT(s.enc.source_length(), 0u);
      } else {
        ASSERT_EQ(s.policy, MaskPolicy::tfidf);
        ASSERT_EQ(s.enc.source_length(), 0u);
      }
    }
  }
}

TEST(MixedBatchSampler, EpochVisitsEveryDialogueOnce) {
  Rng rng(14);
  auto dialogues = dialogue_corpus(rng, 30);
  // Distinct responses identify each sample.
  for (std::size_t i = 0; i < dialogues.size(); ++i) dialogues[i].response = {100 + static_cast<int>(i)};
  SamplerConfig cfg;
  cfg.batch_size = 5;
  MixedBatchSampler sampler(dialogues, {}, nullptr, cfg, 200, 3);
  EXPECT_EQ(sampler.steps_per_epoch(), 6u);
  std::map<int, int> seen;
  for (int b = 0; b < 6; ++b)
    for (const auto& s : sampler.next().samples) ++seen[s.targets[s.enc.source_length() + 1]];
  EXPECT_EQ(seen.size(), 30u);
}

TEST(MixedBatchSampler, NoTextMeansAllDialogue) {
  Rng rng(15);
  auto dialogues = dialogue_corpus(rng, 20);
  SamplerConfig cfg;
  cfg.batch_size = 8;
  MixedBatchSampler sampler(dialogues, {}, nullptr, cfg, 40, 4);
  EXPECT_FALSE(sampler.uses_text());
  for (int b = 0; b < 10; ++b) EXPECT_EQ(sampler.next().dialogue_count, 8u);
}

TEST(MixedBatchSampler, FixedSeedStreamIsIdentical) {
  Rng rng(16);
  auto dialogues = dialogue_corpus(rng, 40);
  auto texts = text_corpus(rng, 15);
  auto table = table_for(texts);
  SamplerConfig cfg;
  cfg.batch_size = 8;
  MixedBatchSampler a(dialogues, texts, &table, cfg, 40, 99), b(dialogues, texts, &table, cfg, 40, 99);
  for (int i = 0; i < 50; ++i) {
    auto x = a.next(), y = b.next();
    for (std::size_t s = 0; s < x.samples.size(); ++s) {
      ASSERT_EQ(x.samples[s].enc.token_ids, y.samples[s].enc.token_ids);
      ASSERT_EQ(x.samples[s].enc.mask.values(), y.samples[s].enc.mask.values());
      ASSERT_EQ(x.samples[s].order, y.samples[s].order);
    }
  }
}

TEST(MixedBatchSampler, TextAttentionIsAFairCoin) {
  Rng rng(17);
  auto dialogues = dialogue_corpus(rng, 10);
  auto texts = text_corpus(rng, 10);
  auto table = table_for(texts);
  SamplerConfig cfg;
  cfg.batch_size = 4;
  MixedBatchSampler sampler(dialogues, texts, &table, cfg, 40, 5);
  int bidirectional = 0, total = 0;
  for (int i = 0; i < 4000; ++i) {
    for (const auto& s : sampler.next().samples) {
      if (s.kind != SampleKind::text) continue;
      ++total;
      bidirectional += s.enc.mask.open(0, s.enc.size() - 1);
    }
  }
  EXPECT_NEAR(bidirectional / double(total), 0.5, 0.03);
}

TEST(MixedBatchSampler, UnconditionedModeDropsLabels) {
  Rng rng(18);
  auto dialogues = dialogue_corpus(rng, 10);
  auto texts = text_corpus(rng, 10);
  auto table = table_for(texts);
  SamplerConfig cfg;
  cfg.batch_size = 4;
  cfg.use_conditions = false;
  MixedBatchSampler sampler(dialogues, texts, &table, cfg, 40, 6);
  for (int i = 0; i < 20; ++i)
    for (const auto& s : sampler.next().samples) EXPECT_EQ(s.enc.condition_id, kNoCondition);
}
