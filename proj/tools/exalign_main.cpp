#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <json.hpp>
#include <limits>
#include <sstream>

#include "exalign/checkpoint.hpp"
#include "exalign/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace exalign;

namespace {

/// Bad flags or unusable inputs: exit code 2. Everything else that escapes
/// a command is an internal failure: exit code 1.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string join(const std::vector<std::string>& tokens) {
  std::string s;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) s += ' ';
    s += tokens[i];
  }
  return s;
}

std::string label_name(Label l) {
  return l == Label::paraphrase ? "paraphrase" : "non-paraphrase";
}

Model load_model_or_usage(const std::string& path) {
  try {
    return load_model(path);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
}

std::vector<PairExample> load_pairs_or_usage(const std::string& path, bool strict,
                                             bool lowercase) {
  LoadOptions opt;
  opt.strict = strict;
  opt.lowercase = lowercase;
  LoadReport report;
  try {
    auto examples = load_pairs(path, opt, &report);
    for (const std::string& msg : report.messages) std::cerr << "warning: " << msg << "\n";
    return examples;
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
}

std::vector<std::string> tokenize_or_usage(const std::string& text, bool lowercase,
                                           const char* which) {
  auto tokens = tokenize(text, lowercase);
  if (tokens.empty()) {
    throw UsageError(std::string(which) + " sentence is empty after tokenization");
  }
  return tokens;
}

struct TrainFlags {
  std::string train_path, dev_path, embeddings_path, synthetic, checkpoint_path, history_path;
  int hidden = 32;
  int batch = 32;
  int epochs = 50;
  int patience = 5;
  std::uint64_t seed = 7;
  bool seed_given = false;
  bool strict = false;
  bool keep_case = false;
};

int cmd_train(const TrainFlags& f) {
  TrainConfig tc = TrainConfig::desk();
  tc.batch_size = f.batch;
  tc.max_epochs = f.epochs;
  tc.patience = f.patience;
  tc.seed = f.seed;

  Model model;
  std::vector<PairExample> train_set, dev_set, test_set;

  if (!f.synthetic.empty()) {
    SyntheticConfig cfg;
    if (f.synthetic == "default") {
      cfg = default_synthetic_config();
    } else {
      if (!fs::exists(f.synthetic)) {
        throw UsageError("missing synthetic config file: " + f.synthetic);
      }
      try {
        cfg = parse_synthetic_config(f.synthetic);
      } catch (const std::exception& e) {
        throw UsageError(e.what());
      }
    }
    if (f.seed_given) cfg.seed = f.seed;

    SyntheticCorpus corpus = generate_synthetic(cfg);
    const std::size_t per_class = std::max<std::size_t>(1, cfg.pair_count / 20);
    Splits splits;
    try {
      splits = split(corpus.examples, {per_class, per_class, per_class, per_class, cfg.seed});
    } catch (const std::exception& e) {
      throw UsageError(std::string("synthetic corpus too small to split: ") + e.what());
    }
    train_set = std::move(splits.train);
    dev_set = std::move(splits.dev);
    test_set = std::move(splits.test);
    model = Model::init(std::move(corpus.embeddings), f.hidden, f.seed);
  } else {
    if (f.train_path.empty() || f.dev_path.empty()) {
      throw UsageError("train requires --train and --dev (or --synthetic)");
    }
    if (f.embeddings_path.empty()) {
      throw UsageError("missing embedding file: --embeddings is required without --synthetic");
    }
    if (!fs::exists(f.embeddings_path)) {
      throw UsageError("missing embedding file: " + f.embeddings_path);
    }
    EmbeddingTable table;
    try {
      table = load_embedding_file(f.embeddings_path);
    } catch (const std::exception& e) {
      throw UsageError(e.what());
    }
    train_set = load_pairs_or_usage(f.train_path, f.strict, !f.keep_case);
    dev_set = load_pairs_or_usage(f.dev_path, f.strict, !f.keep_case);
    std::cerr << "OOV rate: train " << oov_rate(train_set, table.vocab) << ", dev "
              << oov_rate(dev_set, table.vocab) << "\n";
    model = Model::init(std::move(table), f.hidden, f.seed);
  }
  model.config.lowercase = !f.keep_case;

  TrainResult result = train(std::move(model), train_set, dev_set, tc);

  save_model(f.checkpoint_path, result.model);
  const std::string history_path =
      f.history_path.empty() ? f.checkpoint_path + ".history.tsv" : f.history_path;
  write_history(history_path, result.history);

  std::cout << "epochs run:        " << result.history.size() << "\n";
  std::cout << "best dev accuracy: " << result.best_dev_accuracy << "\n";
  std::cout << "threshold:         " << result.model.threshold->cut << "\n";
  if (!test_set.empty()) {
    std::cout << "synthetic test accuracy: " << evaluate_accuracy(result.model, test_set)
              << "\n";
  }
  std::cout << "checkpoint: " << f.checkpoint_path << "\n";
  std::cout << "history:    " << history_path << "\n";
  return 0;
}

struct EvalFlags {
  std::string checkpoint_path, test_path, dev_path, scores_path;
  bool strict = false;
  bool as_json = false;
};

int cmd_eval(const EvalFlags& f) {
  Model model = load_model_or_usage(f.checkpoint_path);
  const auto test_set = load_pairs_or_usage(f.test_path, f.strict, model.config.lowercase);

  if (!f.dev_path.empty()) {
    const auto dev_set = load_pairs_or_usage(f.dev_path, f.strict, model.config.lowercase);
    std::vector<std::pair<double, Label>> scores;
    scores.reserve(dev_set.size());
    for (const PairExample& ex : dev_set) {
      scores.emplace_back(score_pair(model, ex.source, ex.target).y, ex.label);
    }
    model.threshold = calibrate_threshold(scores).threshold;
  }
  if (!model.threshold) {
    throw UsageError("checkpoint has no calibrated threshold; pass --dev to calibrate");
  }

  std::size_t correct = 0;
  std::ofstream scores_out;
  if (!f.scores_path.empty()) {
    scores_out.open(f.scores_path);
    if (!scores_out) throw UsageError("cannot write scores file: " + f.scores_path);
    scores_out << "id\ty\tpredicted\tgold\n"
               << std::setprecision(std::numeric_limits<double>::max_digits10);
  }
  for (const PairExample& ex : test_set) {
    const PairScore s = score_pair(model, ex.source, ex.target);
    correct += *s.label == ex.label;
    if (scores_out.is_open()) {
      scores_out << ex.id << '\t' << s.y << '\t' << (*s.label == Label::paraphrase ? 1 : 0)
                 << '\t' << (ex.label == Label::paraphrase ? 1 : 0) << '\n';
    }
  }
  const double accuracy = static_cast<double>(correct) / static_cast<double>(test_set.size());

  if (f.as_json) {
    json out{{"accuracy", accuracy},
             {"correct", correct},
             {"total", test_set.size()},
             {"threshold", model.threshold->cut}};
    std::cout << out.dump() << "\n";
  } else {
    std::cout << "pairs:     " << test_set.size() << "\n";
    std::cout << "threshold: " << model.threshold->cut << "\n";
    std::cout << "accuracy:  " << accuracy << "\n";
  }
  return 0;
}

struct ScoreFlags {
  std::string checkpoint_path, source, target;
  bool as_json = false;
};

int cmd_score(const ScoreFlags& f) {
  Model model = load_model_or_usage(f.checkpoint_path);
  const auto p = tokenize_or_usage(f.source, model.config.lowercase, "source");
  const auto q = tokenize_or_usage(f.target, model.config.lowercase, "target");
  const PairScore s = score_pair(model, p, q);

  if (f.as_json) {
    json out{{"y", s.y}};
    out["label"] = s.label ? json(label_name(*s.label)) : json(nullptr);
    if (model.threshold) out["threshold"] = model.threshold->cut;
    std::cout << out.dump() << "\n";
  } else {
    std::cout << "y = " << s.y;
    if (s.label) std::cout << "  label = " << label_name(*s.label);
    std::cout << "\n";
  }
  return 0;
}

struct AlignFlags {
  std::string checkpoint_path, source, target, pairs_path;
  double cut = 0.3;
  bool as_json = false;
};

void align_one(Model& model, const std::vector<std::string>& p, const std::vector<std::string>& q,
               double cut, bool as_json) {
  Tape tape;
  ScoreGraph sg = score_pair_graph(tape, model, p, q);
  const auto unmatched = mark_unmatched(sg.pairs, cut);

  std::vector<bool> source_covered(p.size(), false), target_covered(q.size(), false);
  for (const AlignedPair& ap : sg.pairs) {
    source_covered[static_cast<std::size_t>(ap.g)] = true;
    target_covered[static_cast<std::size_t>(ap.h)] = true;
  }

  std::optional<Label> label;
  if (model.threshold) label = predict(sg.reported_y, *model.threshold);

  if (as_json) {
    json rows = json::array();
    for (std::size_t i = 0; i < sg.pairs.size(); ++i) {
      const AlignedPair& ap = sg.pairs[i];
      rows.push_back({{"g", ap.g + 1},
                      {"h", ap.h + 1},
                      {"source_token", p[static_cast<std::size_t>(ap.g)]},
                      {"target_token", q[static_cast<std::size_t>(ap.h)]},
                      {"m", tape.value(ap.m)(0, 0)},
                      {"alpha", tape.value(sg.weighted[i].alpha)(0, 0)},
                      {"status", unmatched[i] ? "unmatched" : "matched"}});
    }
    json stray = json::array();
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (!source_covered[i])
        stray.push_back({{"side", "source"}, {"position", i + 1}, {"token", p[i]}});
    }
    for (std::size_t j = 0; j < q.size(); ++j) {
      if (!target_covered[j])
        stray.push_back({{"side", "target"}, {"position", j + 1}, {"token", q[j]}});
    }
    json out{{"source", join(p)},   {"target", join(q)},
             {"y", sg.reported_y},  {"cut", cut},
             {"pairs", rows},       {"unaligned", stray}};
    out["label"] = label ? json(label_name(*label)) : json(nullptr);
    if (model.threshold) out["threshold"] = model.threshold->cut;
    out["r_p"] = std::vector<double>(sg.r_p.data(), sg.r_p.data() + sg.r_p.size());
    out["r_q"] = std::vector<double>(sg.r_q.data(), sg.r_q.data() + sg.r_q.size());
    std::cout << out.dump() << "\n";
    return;
  }

  std::size_t width = 8;
  for (const auto& tok : p) width = std::max(width, tok.size());
  for (const auto& tok : q) width = std::max(width, tok.size());
  width += 2;

  std::cout << std::left << std::setw(static_cast<int>(width)) << "source"
            << std::setw(static_cast<int>(width)) << "target" << std::setw(10) << "m"
            << std::setw(10) << "alpha" << "status\n";
  std::cout << std::setprecision(4) << std::fixed;
  for (std::size_t i = 0; i < sg.pairs.size(); ++i) {
    const AlignedPair& ap = sg.pairs[i];
    std::cout << std::setw(static_cast<int>(width)) << p[static_cast<std::size_t>(ap.g)]
              << std::setw(static_cast<int>(width)) << q[static_cast<std::size_t>(ap.h)]
              << std::setw(10) << tape.value(ap.m)(0, 0) << std::setw(10)
              << tape.value(sg.weighted[i].alpha)(0, 0)
              << (unmatched[i] ? "unmatched" : "matched") << "\n";
  }
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!source_covered[i]) {
      std::cout << std::setw(static_cast<int>(width)) << p[i]
                << std::setw(static_cast<int>(width)) << "-" << std::setw(10) << "-"
                << std::setw(10) << "-" << "unaligned\n";
    }
  }
  for (std::size_t j = 0; j < q.size(); ++j) {
    if (!target_covered[j]) {
      std::cout << std::setw(static_cast<int>(width)) << "-"
                << std::setw(static_cast<int>(width)) << q[j] << std::setw(10) << "-"
                << std::setw(10) << "-" << "unaligned\n";
    }
  }
  std::cout.unsetf(std::ios::fixed);
  std::cout << std::setprecision(6) << "y = " << sg.reported_y;
  if (label) {
    std::cout << "  label = " << label_name(*label) << "  (threshold "
              << model.threshold->cut << ")";
  }
  std::cout << "\n";
}

int cmd_align(const AlignFlags& f) {
  if (f.cut < -1.0 || f.cut > 1.0) {
    throw UsageError("--cut must lie in [-1, 1]");
  }
  Model model = load_model_or_usage(f.checkpoint_path);

  if (!f.pairs_path.empty()) {
    const auto pairs = load_pairs_or_usage(f.pairs_path, false, model.config.lowercase);
    bool first = true;
    for (const PairExample& ex : pairs) {
      if (!f.as_json && !first) std::cout << "\n";
      first = false;
      align_one(model, ex.source, ex.target, f.cut, f.as_json);
    }
    return 0;
  }
  if (f.source.empty() || f.target.empty()) {
    throw UsageError("align needs two sentences or --pairs FILE");
  }
  const auto p = tokenize_or_usage(f.source, model.config.lowercase, "source");
  const auto q = tokenize_or_usage(f.target, model.config.lowercase, "target");
  align_one(model, p, q, f.cut, f.as_json);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"exclusive sequence alignment for paraphrase scoring"};
  app.require_subcommand(1);

  TrainFlags tf;
  CLI::App* train_cmd = app.add_subcommand("train", "train a model and write a checkpoint");
  train_cmd->add_option("--train", tf.train_path, "training pairs TSV");
  train_cmd->add_option("--dev", tf.dev_path, "development pairs TSV");
  train_cmd->add_option("--embeddings", tf.embeddings_path, "embedding text file");
  train_cmd->add_option("--synthetic", tf.synthetic,
                        "generator config file, or 'default' for the built-in corpus");
  train_cmd->add_option("--checkpoint", tf.checkpoint_path, "output checkpoint path")
      ->required();
  train_cmd->add_option("--history", tf.history_path,
                        "history TSV path (default: <checkpoint>.history.tsv)");
  train_cmd->add_option("--hidden", tf.hidden, "hidden units per direction")
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--batch", tf.batch, "mini-batch size")->check(CLI::PositiveNumber);
  train_cmd->add_option("--epochs", tf.epochs, "maximum epochs")->check(CLI::PositiveNumber);
  train_cmd->add_option("--patience", tf.patience, "early-stopping patience")
      ->check(CLI::NonNegativeNumber);
  CLI::Option* seed_opt = train_cmd->add_option("--seed", tf.seed, "RNG seed");
  train_cmd->add_flag("--strict", tf.strict, "abort on malformed corpus lines");
  train_cmd->add_flag("--keep-case", tf.keep_case, "disable lowercasing");

  EvalFlags ef;
  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on labeled pairs");
  eval_cmd->add_option("--checkpoint", ef.checkpoint_path, "model checkpoint")->required();
  eval_cmd->add_option("--test", ef.test_path, "labeled pairs TSV")->required();
  eval_cmd->add_option("--dev", ef.dev_path, "re-calibrate the threshold on this TSV first");
  eval_cmd->add_option("--scores", ef.scores_path, "write per-pair scores TSV here");
  eval_cmd->add_flag("--strict", ef.strict, "abort on malformed corpus lines");
  eval_cmd->add_flag("--json", ef.as_json, "machine-readable summary");

  ScoreFlags sf;
  CLI::App* score_cmd = app.add_subcommand("score", "score one sentence pair");
  score_cmd->add_option("--checkpoint", sf.checkpoint_path, "model checkpoint")->required();
  score_cmd->add_option("source", sf.source, "source sentence")->required();
  score_cmd->add_option("target", sf.target, "target sentence")->required();
  score_cmd->add_flag("--json", sf.as_json, "machine-readable record");

  AlignFlags af;
  CLI::App* align_cmd =
      app.add_subcommand("align", "render the exclusive alignment of a sentence pair");
  align_cmd->add_option("--checkpoint", af.checkpoint_path, "model checkpoint")->required();
  align_cmd->add_option("source", af.source, "source sentence");
  align_cmd->add_option("target", af.target, "target sentence");
  align_cmd->add_option("--pairs", af.pairs_path, "align every pair in this TSV instead");
  align_cmd->add_option("--cut", af.cut, "similarity cut separating matched from unmatched");
  align_cmd->add_flag("--json", af.as_json, "machine-readable records, one per line");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    tf.seed_given = seed_opt->count() > 0;
    if (train_cmd->parsed()) return cmd_train(tf);
    if (eval_cmd->parsed()) return cmd_eval(ef);
    if (score_cmd->parsed()) return cmd_score(sf);
    if (align_cmd->parsed()) return cmd_align(af);
    std::cerr << "error: no subcommand selected\n";
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
}
