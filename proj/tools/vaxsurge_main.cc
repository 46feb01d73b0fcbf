// vaxsurge: vocabulary building, training, evaluation, corpus classification
// and surge-date detection for stance-labelled tweets.

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "vaxsurge/error.h"
#include "vaxsurge/pipeline.h"

namespace {

using vaxsurge::ExitCode;
using vaxsurge::PipelineConfig;

int code(ExitCode c) { return static_cast<int>(c); }

void add_options(CLI::App& app, PipelineConfig& c, std::string& peak_category,
                 std::vector<double>& class_weights) {
  app.add_option("--labeled", c.labeled, "Labeled JSONL file (id, created_at, text, label)");
  app.add_option("--corpus", c.corpus, "Unlabeled corpus JSONL file (.gz accepted)");
  app.add_option("--out", c.out_dir, "Output directory")->capture_default_str();
  app.add_option("--vocab", c.vocab, "Vocabulary file (default <out>/vocab.txt)");
  app.add_option("--checkpoint", c.checkpoint, "Checkpoint file (default <out>/model.ckpt)");
  app.add_option("--classified", c.classified, "timeline: reuse a classified JSONL file");

  app.add_option("--vocab-size", c.vocab_max_size, "Vocabulary size budget incl. specials")
      ->capture_default_str();
  app.add_option("--min-pair-freq", c.min_pair_freq, "Minimum pair frequency for a merge")
      ->capture_default_str();
  app.add_option("--max-len", c.max_len, "Sequence length incl. [CLS]/[SEP]")->capture_default_str();

  app.add_option("--d-model", c.d_model)->capture_default_str();
  app.add_option("--layers", c.n_layers)->capture_default_str();
  app.add_option("--heads", c.n_heads)->capture_default_str();
  app.add_option("--d-ff", c.d_ff)->capture_default_str();
  app.add_option("--dropout", c.dropout_rate)->capture_default_str();

  app.add_option("--train-fraction", c.train_fraction)->capture_default_str();
  app.add_option("--lr", c.learning_rate, "Adam learning rate")->capture_default_str();
  app.add_option("--epochs", c.epochs)->capture_default_str();
  app.add_option("--batch-size", c.batch_size)->capture_default_str();
  app.add_option("--beta1", c.beta1)->capture_default_str();
  app.add_option("--beta2", c.beta2)->capture_default_str();
  app.add_option("--adam-eps", c.adam_eps)->capture_default_str();
  app.add_flag("--head-only", c.head_only, "Train only the pooler and classifier");
  app.add_option("--class-weights", class_weights, "Four per-class loss weights")
      ->expected(4);

  app.add_option("--classify-batch", c.classify_batch)->capture_default_str();
  app.add_option("--threads", c.threads, "Classification threads (0 = all cores)")
      ->capture_default_str();
  app.add_option("--utc-offset", c.utc_offset_minutes, "Display offset in minutes for day bins")
      ->capture_default_str();
  app.add_option("--min-prominence", c.min_prominence, "Peak prominence in percentage points")
      ->capture_default_str();
  app.add_option("--top-k", c.top_k)->capture_default_str();
  app.add_option("--smooth", c.smoothing_window, "Odd moving-average window (1 = raw)")
      ->capture_default_str();
  app.add_option("--peak-category", peak_category, "Category whose share is analysed")
      ->capture_default_str();

  app.add_option("--synth-labeled", c.synth_labeled)->capture_default_str();
  app.add_option("--synth-days", c.synth_days)->capture_default_str();
  app.add_option("--synth-per-day", c.synth_per_day)->capture_default_str();
  app.add_option("--synth-spike-days", c.synth_spike_days, "Zero-based spike day offsets")
      ->delimiter(',');
  app.add_option("--synth-spike-share", c.synth_spike_share)->capture_default_str();
  app.add_option("--synth-start", c.synth_start)->capture_default_str();
  app.add_flag("--synth-gzip", c.synth_gzip, "Write corpus.jsonl.gz");

  app.add_option("--seed-split", c.seed_split)->capture_default_str();
  app.add_option("--seed-init", c.seed_init)->capture_default_str();
  app.add_option("--seed-shuffle", c.seed_shuffle)->capture_default_str();
  app.add_option("--seed-dropout", c.seed_dropout)->capture_default_str();
  app.add_option("--seed-synthetic", c.seed_synthetic)->capture_default_str();
  app.add_flag("-q,--quiet", c.quiet);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stance classification and surge-date detection for vaccine tweets"};
  app.set_config("--config", "", "INI/TOML file whose keys are option names");
  app.require_subcommand(1);

  PipelineConfig config;
  std::string peak_category = "AntiVaccine";
  std::vector<double> class_weights;
  add_options(app, config, peak_category, class_weights);

  struct Command {
    const char* name;
    const char* help;
    std::filesystem::path (*run)(const PipelineConfig&);
  };
  const Command commands[] = {
      {"build-vocab", "Build the WordPiece vocabulary from the training split",
       vaxsurge::cmd_build_vocab},
      {"train", "Train the encoder and write the checkpoint", vaxsurge::cmd_train},
      {"evaluate", "Evaluate on the held-out split; write metrics and figures",
       vaxsurge::cmd_evaluate},
      {"classify", "Classify the corpus", vaxsurge::cmd_classify},
      {"timeline", "Classify, bin by day, and detect share peaks", vaxsurge::cmd_timeline},
      {"gen-synthetic", "Write a seeded synthetic labeled set and corpus",
       vaxsurge::cmd_gen_synthetic},
  };
  const Command* selected = nullptr;
  for (const auto& cmd : commands) {
    auto* sub = app.add_subcommand(cmd.name, cmd.help);
    sub->fallthrough();
    sub->callback([&selected, &cmd] { selected = &cmd; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : code(ExitCode::kUsage);
  }

  try {
    auto category = vaxsurge::parse_category(peak_category);
    if (!category) throw vaxsurge::UsageError("unknown category: " + peak_category);
    config.peak_category = *category;
    if (!class_weights.empty()) {
      vaxsurge::ClassWeights w{};
      std::copy(class_weights.begin(), class_weights.end(), w.begin());
      config.class_weights = w;
    }
    std::filesystem::path manifest = selected->run(config);
    if (!config.quiet) std::cerr << "[vaxsurge] manifest: " << manifest.string() << '\n';
    return code(ExitCode::kOk);
  } catch (const vaxsurge::UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return code(ExitCode::kUsage);
  } catch (const vaxsurge::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return code(ExitCode::kData);
  } catch (const vaxsurge::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return code(ExitCode::kNumerical);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
