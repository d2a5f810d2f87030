// cdg: command-line front end for vocabulary building, training, decoding
// and evaluation of condition-aware dialogue models.

#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "cdg/cli/commands.hpp"
#include "cdg/common/errors.hpp"
#include "cdg/common/log.hpp"

namespace fs = std::filesystem;
using namespace cdg;

namespace {

struct ConfigLayers {
  std::string profile;
  std::vector<std::string> sets;

  void attach(CLI::App* cmd) {
    cmd->add_option("--profile", profile, "Profile file of 'key = value' lines");
    cmd->add_option("--set", sets, "Override one configuration key (key=value); repeatable");
  }

  // Defaults, then the profile, then --set, then the command's own flags.
  RunConfig build(const std::vector<std::pair<std::string, std::string>>& flags) const {
    RunConfig c = RunConfig::defaults();
    if (!profile.empty()) c.load_profile(profile);
    for (const auto& s : sets) c.set_assignment(s);
    for (const auto& [k, v] : flags) c.set(k, v);
    return c;
  }
};

// Flag values that were given on the command line, as config assignments.
struct FlagMap {
  std::vector<std::pair<std::string, CLI::Option*>> options;
  std::vector<std::pair<std::string, std::string>> values;

  void option(CLI::App* cmd, const std::string& name, const std::string& key, std::string& slot, const std::string& help) {
    options.emplace_back(key, cmd->add_option(name, slot, help));
  }
  void flag(CLI::App* cmd, const std::string& name, const std::string& key, bool& slot, const std::string& help) {
    options.emplace_back(key, cmd->add_flag(name, slot, help));
  }
  std::vector<std::pair<std::string, std::string>> collect() const {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& [key, opt] : options) {
      if (opt->count() == 0) continue;
      out.emplace_back(key, opt->get_expected_min() == 0 ? "true" : opt->as<std::string>());
    }
    return out;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Condition-aware dialogue generation: train, decode and evaluate."};
  app.require_subcommand(1);
  bool quiet = false, verbose = false;
  app.add_flag("-q,--quiet", quiet, "Only print warnings and errors");
  app.add_flag("-v,--verbose", verbose, "Print debug messages");

  // build-vocab
  auto* vocab_cmd = app.add_subcommand("build-vocab", "Build a vocabulary file from corpora");
  BuildVocabOptions vocab_opts;
  fs::path vocab_out;
  vocab_cmd->add_option("--dialogues", vocab_opts.dialogues, "Dialogue JSONL files");
  vocab_cmd->add_option("--texts", vocab_opts.texts, "Text JSONL files");
  vocab_cmd->add_option("--min-count", vocab_opts.min_count, "Drop tokens seen fewer times")->capture_default_str();
  vocab_cmd->add_option("-o,--out", vocab_out, "Output vocabulary file")->required();

  // tfidf
  auto* tfidf_cmd = app.add_subcommand("tfidf", "Precompute document frequencies of a text corpus");
  fs::path tfidf_texts, tfidf_vocab, tfidf_out;
  tfidf_cmd->add_option("--texts", tfidf_texts, "Text JSONL file")->required();
  tfidf_cmd->add_option("--vocab", tfidf_vocab, "Vocabulary file")->required();
  tfidf_cmd->add_option("-o,--out", tfidf_out, "Output JSON file")->required();

  // train
  auto* train_cmd = app.add_subcommand("train", "Train a model; writes a run directory");
  ConfigLayers train_layers;
  train_layers.attach(train_cmd);
  FlagMap train_flags;
  std::string t_train, t_texts, t_valid, t_vocab, t_tfidf, t_gate, t_epochs, t_seed;
  bool t_no_cond = false, t_no_ctext = false, t_no_tfidf = false;
  std::string run_name = "run";
  fs::path run_dir;
  train_flags.option(train_cmd, "--train", "data.train", t_train, "Dialogue training corpus");
  train_flags.option(train_cmd, "--texts", "data.texts", t_texts, "Conditioned text corpus");
  train_flags.option(train_cmd, "--valid", "data.valid", t_valid, "Validation dialogues");
  train_flags.option(train_cmd, "--vocab", "data.vocab", t_vocab, "Vocabulary file (built from the corpora if absent)");
  train_flags.option(train_cmd, "--tfidf", "data.tfidf", t_tfidf, "Precomputed tf-idf table");
  train_flags.option(train_cmd, "--gate", "model.gate", t_gate, "attention_routing, single_gate or double_gates");
  train_flags.option(train_cmd, "--epochs", "train.epochs", t_epochs, "Training epochs");
  train_flags.option(train_cmd, "--seed", "train.seed", t_seed, "Random seed");
  train_flags.flag(train_cmd, "--no-condition", "train.no_condition", t_no_cond, "Ignore condition labels");
  train_flags.flag(train_cmd, "--no-ctext", "train.no_ctext", t_no_ctext, "Train on dialogues only");
  train_flags.flag(train_cmd, "--no-tfidf", "train.no_tfidf", t_no_tfidf, "Mask texts uniformly at random");
  train_cmd->add_option("--name", run_name, "Run name under the run root")->capture_default_str();
  train_cmd->add_option("--run-dir", run_dir, "Run directory (overrides --name and the run root)");

  // generate
  auto* gen_cmd = app.add_subcommand("generate", "Decode responses with a trained checkpoint");
  ConfigLayers gen_layers;
  gen_layers.attach(gen_cmd);
  FlagMap gen_flags;
  fs::path gen_ckpt, gen_in, gen_out, gen_vocab;
  std::string g_beam, g_max, g_alpha, g_threads;
  bool g_no_block = false;
  gen_cmd->add_option("--checkpoint", gen_ckpt, "checkpoint.ckpt or a run directory")->required();
  gen_cmd->add_option("-i,--input", gen_in, "Dialogue JSONL to respond to")->required();
  gen_cmd->add_option("-o,--output", gen_out, "Hypotheses JSONL")->required();
  gen_cmd->add_option("--vocab", gen_vocab, "Check the checkpoint against this vocabulary");
  gen_flags.option(gen_cmd, "--beam", "decode.beam_size", g_beam, "Beam size (1 is greedy)");
  gen_flags.option(gen_cmd, "--max-new-tokens", "decode.max_new_tokens", g_max, "Length cap, [EOS] included");
  gen_flags.option(gen_cmd, "--alpha", "decode.length_alpha", g_alpha, "Length normalization exponent");
  gen_flags.option(gen_cmd, "--threads", "decode.threads", g_threads, "Decoding threads");
  auto* no_block = gen_cmd->add_flag("--allow-repeat-bigrams", g_no_block, "Disable duplicate-bigram blocking");

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "Score hypotheses against references");
  fs::path ev_hyp, ev_ref, ev_base, ev_out;
  bool ev_sentence = false;
  eval_cmd->add_option("--hypotheses", ev_hyp, "Hypotheses JSONL from generate")->required();
  eval_cmd->add_option("--references", ev_ref, "Dialogue JSONL with reference responses")->required();
  eval_cmd->add_option("--baseline", ev_base, "Baseline hypotheses for paired significance tests");
  eval_cmd->add_flag("--sentence-bleu", ev_sentence, "Report mean smoothed sentence BLEU instead of corpus BLEU");
  eval_cmd->add_option("-o,--out", ev_out, "Write the report as JSON");

  // ablate-gates
  auto* gates_cmd = app.add_subcommand("ablate-gates", "Train and compare the three gate variants");
  ConfigLayers gates_layers;
  gates_layers.attach(gates_cmd);
  std::string gates_name = "gates";
  fs::path gates_root;
  gates_cmd->add_option("--name", gates_name, "Directory name under the run root")->capture_default_str();
  gates_cmd->add_option("--root", gates_root, "Output directory (overrides --name and the run root)");

  // inspect-masks
  auto* mask_cmd = app.add_subcommand("inspect-masks", "Print the attention mask of one packed sample");
  fs::path mask_file;
  std::size_t mask_index = 0, mask_len = 64;
  std::string mask_kind = "dialogue", mask_attention = "bidirectional";
  mask_cmd->add_option("--file", mask_file, "Dialogue or text JSONL")->required();
  mask_cmd->add_option("--index", mask_index, "Sample index (0-based)")->capture_default_str();
  mask_cmd->add_option("--kind", mask_kind, "dialogue or text")->check(CLI::IsMember({"dialogue", "text"}))->capture_default_str();
  mask_cmd->add_option("--attention", mask_attention, "Text attention: bidirectional or left_to_right")
      ->check(CLI::IsMember({"bidirectional", "left_to_right"}))
      ->capture_default_str();
  mask_cmd->add_option("--max-length", mask_len, "Packed length limit")->capture_default_str();

  // make-synthetic
  auto* syn_cmd = app.add_subcommand("make-synthetic", "Write the bundled synthetic corpus");
  SyntheticConfig syn;
  fs::path syn_out;
  syn_cmd->add_option("-o,--out", syn_out, "Output directory")->required();
  syn_cmd->add_option("--seed", syn.seed)->capture_default_str();
  syn_cmd->add_option("--conditions", syn.conditions)->capture_default_str();
  syn_cmd->add_option("--topics", syn.topics)->capture_default_str();
  syn_cmd->add_option("--dialogues", syn.dialogues)->capture_default_str();
  syn_cmd->add_option("--texts", syn.texts)->capture_default_str();
  syn_cmd->add_option("--valid", syn.valid)->capture_default_str();
  syn_cmd->add_option("--text-only-fraction", syn.text_only_fraction)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }
  log::set_level(quiet ? log::Level::warning : verbose ? log::Level::debug : log::Level::info);

  try {
    if (vocab_cmd->parsed()) {
      auto v = cmd_build_vocab(vocab_opts, vocab_out);
      log::info("wrote " + std::to_string(v.size()) + " tokens to " + vocab_out.string());
    } else if (tfidf_cmd->parsed()) {
      auto t = cmd_tfidf(tfidf_texts, tfidf_vocab, tfidf_out);
      log::info("wrote document frequencies of " + std::to_string(t.documents()) + " texts to " + tfidf_out.string());
    } else if (train_cmd->parsed()) {
      const auto config = train_layers.build(train_flags.collect());
      const fs::path dir = run_dir.empty() ? default_run_root() / run_name : run_dir;
      auto outcome = cmd_train(config, dir);
      log::info("finished " + outcome.pipeline.mode() + " run in " + dir.string());
    } else if (gen_cmd->parsed()) {
      auto flags = gen_flags.collect();
      if (no_block->count()) flags.emplace_back("decode.block_repeat_bigrams", "false");
      const auto config = gen_layers.build(flags);
      const fs::path ckpt = fs::is_directory(gen_ckpt) ? gen_ckpt / "checkpoint.ckpt" : gen_ckpt;
      auto s = cmd_generate(ckpt, gen_in, gen_out, config.decode_config(), config.count("decode.threads"),
                            gen_vocab.empty() ? std::nullopt : std::optional<fs::path>(gen_vocab));
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.2f", s.average_length);
      log::info("wrote " + std::to_string(s.written) + " of " + std::to_string(s.inputs) + " hypotheses (" +
                std::to_string(s.skipped) + " skipped, avgLen " + buf + ") to " + gen_out.string());
    } else if (eval_cmd->parsed()) {
      auto r = cmd_evaluate(ev_hyp, ev_ref, ev_base.empty() ? std::nullopt : std::optional<fs::path>(ev_base), ev_sentence);
      std::cout << r.text;
      if (!ev_out.empty()) {
        std::ofstream out(ev_out);
        if (!out) throw IoError("cannot write " + ev_out.string());
        out << r.json.dump(2) << '\n';
      }
    } else if (gates_cmd->parsed()) {
      const auto config = gates_layers.build({});
      const fs::path root = gates_root.empty() ? default_run_root() / gates_name : gates_root;
      std::cout << cmd_ablate_gates(config, root).table;
    } else if (mask_cmd->parsed()) {
      std::cout << cmd_inspect_masks(mask_file, mask_kind == "text" ? SampleFileKind::text : SampleFileKind::dialogue,
                                     mask_index,
                                     mask_attention == "left_to_right" ? TextAttention::left_to_right
                                                                       : TextAttention::bidirectional,
                                     mask_len);
    } else if (syn_cmd->parsed()) {
      auto m = cmd_make_synthetic(syn, syn_out);
      log::info("wrote synthetic corpus with " + std::to_string(m.conditions.size()) + " conditions to " +
                syn_out.string());
    }
  } catch (const std::exception& e) {
    log::error(e.what());
    return exit_code_for(e);
  }
  return kExitOk;
}
