#include "cdg/cli/commands.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "cdg/common/errors.hpp"
#include "cdg/common/log.hpp"
#include "cdg/data/corpus.hpp"
#include "cdg/data/packing.hpp"
#include "cdg/model/checkpoint.hpp"

namespace cdg {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return kExitConfig;
  if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const DataError*>(&e)) return kExitIo;
  if (dynamic_cast<const NumericalError*>(&e)) return kExitNumerical;
  return kExitFailure;
}

fs::path default_run_root() {
  if (const char* root = std::getenv("CDG_RUN_ROOT"); root && *root) return root;
  return "runs";
}

RunLock::RunLock(const fs::path& dir) : path_(dir / ".lock") {
  fs::create_directories(dir);
  // "x" fails when the file exists, so two processes cannot both hold it.
  std::FILE* f = std::fopen(path_.c_str(), "wx");
  if (!f) throw IoError("run directory " + dir.string() + " is locked by another process (remove " + path_.string() +
                        " if that process is gone)");
  std::fclose(f);
}

RunLock::~RunLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

namespace {

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

std::vector<std::vector<int>> text_documents(const std::vector<TextSample>& texts) {
  std::vector<std::vector<int>> docs;
  for (const auto& t : texts) docs.push_back(t.text);
  return docs;
}

}  // namespace

Vocabulary cmd_build_vocab(const BuildVocabOptions& options, const fs::path& out) {
  if (options.dialogues.empty() && options.texts.empty()) throw ConfigError("build-vocab needs at least one corpus");
  std::vector<DialogueRecord> dialogues;
  std::vector<TextRecord> texts;
  for (const auto& p : options.dialogues) {
    auto d = read_dialogues(p);
    dialogues.insert(dialogues.end(), d.begin(), d.end());
  }
  for (const auto& p : options.texts) {
    auto t = read_texts(p);
    texts.insert(texts.end(), t.begin(), t.end());
  }
  auto vocab = Vocabulary::build(count_tokens(dialogues, texts), options.min_count);
  vocab.save(out);
  return vocab;
}

TfIdfTable cmd_tfidf(const fs::path& texts, const fs::path& vocab_path, const fs::path& out) {
  const auto vocab = Vocabulary::load(vocab_path);
  const auto records = read_texts(texts);
  const auto samples = encode_texts(records, vocab, collect_conditions({}, records));
  TfIdfTable table(text_documents(samples));
  write_json(out, table.to_json(vocab));
  return table;
}

TrainOutcome cmd_train(RunConfig config, const fs::path& run_dir) {
  // Everything that can be rejected is rejected before touching the disk.
  const Pipeline pipeline = configure_ablation(config.ablation());
  const TrainConfig train_cfg = config.train_config();
  SamplerConfig sampler_cfg = config.sampler_config();
  if (config.path("data.train").empty()) throw ConfigError("data.train is not set");
  config.absolutize_paths();

  RunLock lock(run_dir);
  config.save(run_dir / "config.cfg");

  const auto train_records = read_dialogues(config.path("data.train"));
  std::vector<TextRecord> text_records;
  if (!config.path("data.texts").empty()) text_records = read_texts(config.path("data.texts"));
  std::vector<DialogueRecord> valid_records;
  if (!config.path("data.valid").empty()) valid_records = read_dialogues(config.path("data.valid"));

  const Vocabulary vocab = config.path("data.vocab").empty()
                               ? Vocabulary::build(count_tokens(train_records, text_records), config.count("data.min_count"))
                               : Vocabulary::load(config.path("data.vocab"));
  vocab.save(run_dir / "vocab.txt");
  const ConditionMap conditions = collect_conditions(train_records, text_records);

  const auto dialogues = encode_dialogues(train_records, vocab, conditions);
  const auto valid = encode_dialogues(valid_records, vocab, conditions);
  std::vector<TextSample> texts;
  if (pipeline.use_text) texts = encode_texts(text_records, vocab, conditions);
  if (pipeline.use_text && texts.empty()) log::warning("no text corpus given; batches will be all dialogue");

  TfIdfTable tfidf;
  if (!texts.empty() && pipeline.text_policy == MaskPolicy::tfidf) {
    tfidf = config.path("data.tfidf").empty() ? TfIdfTable(text_documents(texts))
                                              : TfIdfTable::from_json(read_json(config.path("data.tfidf")), vocab);
  }

  const ModelConfig model_cfg = config.model_config(vocab.size(), conditions.size());
  ConditionedTransformer model(model_cfg, train_cfg.seed);

  sampler_cfg.text_policy = pipeline.text_policy;
  sampler_cfg.use_conditions = pipeline.use_conditions;
  MixedBatchSampler sampler(dialogues, texts, texts.empty() ? nullptr : &tfidf, sampler_cfg, vocab.size(),
                            derive_seed(train_cfg.seed, 1));

  json metadata = {{"mode", pipeline.mode()},
                   {"gate", std::string(to_string(pipeline.gate))},
                   {"pipeline",
                    {{"use_conditions", pipeline.use_conditions},
                     {"use_text", pipeline.use_text},
                     {"text_policy", pipeline.text_policy == MaskPolicy::tfidf ? "tfidf" : "random"},
                     {"frozen_prefixes", pipeline.frozen_prefixes}}},
                   {"batch", {{"dialogue", sampler.dialogues_per_batch()}, {"text", sampler.texts_per_batch()}}},
                   {"data", {{"dialogues", dialogues.size()}, {"texts", texts.size()}, {"valid", valid.size()}}},
                   {"vocabulary", {{"size", vocab.size()}, {"hash", vocab.hash()}}},
                   {"conditions", conditions.labels()},
                   {"parameters", model.parameter_count()},
                   {"status", "running"}};
  write_json(run_dir / "metadata.json", metadata);

  std::ofstream log_out(run_dir / "log.jsonl");
  if (!log_out) throw IoError("cannot write " + (run_dir / "log.jsonl").string());
  std::uint64_t steps_done = 0;
  TrainHooks hooks;
  hooks.log = [&](const json& record) {
    log_out << record.dump() << '\n';
    log_out.flush();
    if (record.value("type", "") == "step") steps_done = record["step"].get<std::uint64_t>();
    if (record.value("type", "") == "epoch") {
      char buf[160];
      std::snprintf(buf, sizeof buf, "epoch %zu  loss %.4f", record["epoch"].get<std::size_t>(),
                    record["mean_loss"].get<double>());
      std::string line = buf;
      if (record.contains("validation_perplexity") && !record["validation_perplexity"].is_null()) {
        std::snprintf(buf, sizeof buf, "  valid ppl %.3f", record["validation_perplexity"].get<double>());
        line += buf;
      }
      log::info(line);
    }
  };
  hooks.epoch_end = [&](std::size_t epoch, const AdamW& optimizer) {
    Checkpoint ckpt;
    ckpt.config = model_cfg;
    for (std::size_t i = 0; i < vocab.size(); ++i) ckpt.vocabulary.push_back(vocab.token(static_cast<int>(i)));
    ckpt.conditions = conditions.labels();
    ckpt.step = steps_done;
    ckpt.metadata = metadata;
    ckpt.metadata["epoch"] = epoch;
    ckpt.parameters = model.parameters();
    ckpt.optimizer_state = optimizer.state();
    save_checkpoint(run_dir / "checkpoint.ckpt", ckpt);
  };
  if (!valid.empty()) {
    hooks.validation = &valid;
    hooks.validation_mask_probability = config.real("validation.mask_probability");
    hooks.validation_seed = config.count("validation.seed");
  }

  TrainOutcome outcome{run_dir, pipeline, train(model, sampler, train_cfg, pipeline, hooks), {}};
  metadata["status"] = "finished";
  metadata["steps"] = outcome.result.steps;
  metadata["final_loss"] = outcome.result.epoch_loss.empty() ? json(nullptr) : json(outcome.result.epoch_loss.back());
  if (!outcome.result.validation_perplexity.empty())
    metadata["validation_perplexity"] = outcome.result.validation_perplexity.back();
  write_json(run_dir / "metadata.json", metadata);
  outcome.metadata = metadata;
  return outcome;
}

GenerationSummary cmd_generate(const fs::path& checkpoint, const fs::path& input, const fs::path& output,
                               const DecodeConfig& config, std::size_t threads, const std::optional<fs::path>& vocab_path) {
  config.validate();
  Checkpoint ckpt = load_checkpoint(checkpoint);
  const auto vocab = Vocabulary::from_tokens(ckpt.vocabulary);
  if (vocab_path) {
    const auto given = Vocabulary::load(*vocab_path);
    if (given.hash() != vocab.hash()) {
      throw ConfigError("vocabulary " + vocab_path->string() + " (hash " + given.hash() +
                        ") does not match the checkpoint's (hash " + vocab.hash() + ")");
    }
  }
  const ConditionMap conditions(ckpt.conditions);
  bool use_conditions = true;
  if (ckpt.metadata.contains("pipeline")) use_conditions = ckpt.metadata["pipeline"].value("use_conditions", true);
  ConditionedTransformer model(ckpt.config, std::move(ckpt.parameters));
  return generate_file(model, vocab, conditions, input, output, config, use_conditions, std::max<std::size_t>(1, threads));
}

namespace {

const std::vector<std::string> kReportColumns{"BLEU-1", "BLEU-2", "BLEU-3", "ROUGE-L",
                                              "CIDEr",  "Dist-1", "Dist-2", "avgLen"};

std::vector<double> report_row(const EvalReport& r) {
  std::vector<double> v;
  for (const auto& m : report_metric_names()) v.push_back(metric_value(r, m));
  return v;
}

}  // namespace

EvaluateOutcome cmd_evaluate(const fs::path& hypotheses, const fs::path& references,
                             const std::optional<fs::path>& baseline, bool sentence_bleu) {
  EvaluateOutcome out;
  const EvalOptions options{sentence_bleu};
  out.report = evaluate(load_eval_pairs(hypotheses, references), options);
  out.json = {{"system", out.report.to_json()}};
  std::vector<TableRow> rows{{"system", report_row(out.report), {}}};
  if (baseline) {
    out.baseline = evaluate(load_eval_pairs(*baseline, references), options);
    out.comparison = compare(out.report, *out.baseline);
    out.json["baseline"] = out.baseline->to_json();
    json cmp = json::array();
    for (const auto& c : out.comparison) {
      rows.front().marks.push_back(c.mark);
      cmp.push_back({{"metric", c.metric}, {"t", std::isfinite(c.test.t) ? json(c.test.t) : json(c.test.t > 0 ? "inf" : "-inf")},
                     {"p", c.test.p}, {"mark", c.mark}});
    }
    out.json["comparison"] = cmp;
    rows.push_back({"baseline", report_row(*out.baseline), {}});
  }
  out.text = render_table(kReportColumns, rows);
  if (baseline) out.text += "marks: * p<0.05, ** p<0.01 (two-sided paired t-test against the baseline)\n";
  return out;
}

std::string gate_comparison_table(const std::vector<std::pair<std::string, EvalReport>>& runs) {
  if (runs.empty()) throw UsageError("no runs to compare");
  const std::vector<std::string> metrics{"bleu1", "bleu2", "dist2"};
  std::vector<TableRow> rows;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    TableRow row{runs[i].first, {}, {}};
    for (const auto& m : metrics) {
      row.values.push_back(metric_value(runs[i].second, m));
      row.marks.push_back(i == 0 ? "" : significance_mark(paired_t_test(metric_samples(runs[i].second, m),
                                                                        metric_samples(runs[0].second, m)).p));
    }
    rows.push_back(std::move(row));
  }
  return render_table({"BLEU-1", "BLEU-2", "Dist-2"}, rows) +
         "marks: * p<0.05, ** p<0.01 (two-sided paired t-test against " + runs[0].first + ")\n";
}

AblateGatesOutcome cmd_ablate_gates(const RunConfig& config, const fs::path& root) {
  if (config.flag("train.no_condition")) throw ConfigError("ablate-gates needs the condition machinery; drop no_condition");
  if (config.path("data.test").empty()) throw ConfigError("data.test is not set");
  AblateGatesOutcome out;
  std::vector<std::pair<std::string, EvalReport>> reports;
  for (const char* variant : {"attention_routing", "single_gate", "double_gates"}) {
    RunConfig cfg = config;
    cfg.set("model.gate", variant);
    const fs::path dir = root / variant;
    log::info(std::string("training ") + variant);
    auto trained = cmd_train(cfg, dir);
    cmd_generate(dir / "checkpoint.ckpt", cfg.path("data.test"), dir / "hypotheses.jsonl", cfg.decode_config(),
                 cfg.count("decode.threads"));
    auto report = evaluate(load_eval_pairs(dir / "hypotheses.jsonl", cfg.path("data.test")));
    write_json(dir / "report.json", report.to_json(true));
    const double loss = trained.result.epoch_loss.empty() ? 0.0 : trained.result.epoch_loss.back();
    out.runs.push_back({variant, loss, report});
    reports.emplace_back(variant, report);
  }
  out.table = gate_comparison_table(reports);
  std::ofstream(root / "table.txt") << out.table;
  return out;
}

std::string cmd_inspect_masks(const fs::path& file, SampleFileKind kind, std::size_t index, TextAttention attention,
                              std::size_t max_length) {
  // Token ids do not matter for the mask, only the words for labels.
  std::vector<std::string> words;
  InputEncoding enc;
  std::string header;
  if (kind == SampleFileKind::dialogue) {
    const auto records = read_dialogues(file);
    if (index >= records.size()) {
      throw DataError("sample index " + std::to_string(index) + " out of range: " + file.string() + " has " +
                      std::to_string(records.size()) + " dialogues");
    }
    const auto& r = records[index];
    const auto vocab = Vocabulary::build(count_tokens({r}, {}), 1);
    const ConditionMap conditions(r.condition.empty() ? std::vector<std::string>{} : std::vector<std::string>{r.condition});
    auto packed = pack_dialogue(encode_dialogue(r, vocab, conditions), max_length);
    if (!packed) throw DataError("dialogue " + std::to_string(index) + " does not fit in " + std::to_string(max_length) + " tokens");
    enc = *packed;
    for (int id : enc.token_ids) words.push_back(vocab.token(id));
    header = "dialogue " + std::to_string(index) + ", condition " + (r.condition.empty() ? "NONE" : r.condition);
  } else {
    const auto records = read_texts(file);
    if (index >= records.size()) {
      throw DataError("sample index " + std::to_string(index) + " out of range: " + file.string() + " has " +
                      std::to_string(records.size()) + " texts");
    }
    const auto& r = records[index];
    const auto vocab = Vocabulary::build(count_tokens({}, {r}), 1);
    const ConditionMap conditions(std::vector<std::string>{r.condition});
    enc = pack_text(encode_texts({r}, vocab, conditions).front(), attention, max_length);
    for (int id : enc.token_ids) words.push_back(vocab.token(id));
    header = std::string("text ") + std::to_string(index) + ", " +
             (attention == TextAttention::bidirectional ? "bidirectional" : "left-to-right");
  }
  const std::size_t n = enc.size();
  const ConditionBiasMask bias(enc.type_ids);
  std::size_t width = 5;
  for (const auto& w : words) width = std::max(width, w.size());
  std::string out = header + ", length " + std::to_string(n) + " (source " + std::to_string(enc.source_length()) +
                    ", target " + std::to_string(n - enc.source_length()) + ")\n";
  out += "'.' open, '#' blocked; M_b columns: condition route, generic route\n";
  for (std::size_t i = 0; i < n; ++i) {
    std::string label = words[i];
    label.append(width - label.size(), ' ');
    out += label + (enc.is_target(i) ? " T " : " S ");
    for (std::size_t j = 0; j < n; ++j) out += enc.mask.open(i, j) ? '.' : '#';
    out += std::string("  ") + (bias.condition_open(i) ? '.' : '#') + ".\n";
  }
  return out;
}

SyntheticManifest cmd_make_synthetic(const SyntheticConfig& config, const fs::path& out) {
  return write_synthetic(config, out);
}

}  // namespace cdg
