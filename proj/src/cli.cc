#include "subregweigh/cli.h"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "subregweigh/corpus.h"
#include "subregweigh/error.h"
#include "subregweigh/noise.h"
#include "subregweigh/scorer.h"
#include "subregweigh/selector.h"
#include "subregweigh/tokenizer.h"

namespace subregweigh {
namespace cli {
namespace {

// Raised for flag combinations CLI11 cannot express; exits with kExitUsage.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A failure inside a named pipeline stage; exits with kExitRuntime.
class StageError : public std::runtime_error {
 public:
  StageError(const std::string &stage, const std::string &message)
      : std::runtime_error(stage + ": " + message) {}
};

template <typename Fn>
auto RunStage(const std::string &stage, Fn &&fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error &e) {
    throw StageError(stage, std::string(ErrorKindName(e.kind())) + ": " +
                                e.what());
  } catch (const std::ios_base::failure &e) {
    throw StageError(stage, e.what());
  }
}

struct TokenizerOptions {
  std::string kind = "bpe";
  std::string merges;
  std::string vocab;
  std::string word_marker;
  std::string continuation_prefix = "##";
  std::string unk_token = "[UNK]";
};

struct CorpusOptions {
  std::string input;
  std::string task = "ner";
  std::string scheme = "iob2";
};

struct ScoutOptions {
  std::string strategy = "kmeans";
  int k = 10;
  int n = 500;
  double p = 0.1;
  double w_min = 1.0 / 3.0;
  uint64_t seed = 0;
  int kmeans_max_iters = 100;
  int threads = 1;
};

void AddTokenizerOptions(CLI::App *app, TokenizerOptions *opts) {
  app->add_option("--tokenizer", opts->kind,
                  "Subword scheme: bpe (BPE-Dropout) or wordpiece "
                  "(MaxMatch-Dropout)")
      ->check(CLI::IsMember({"bpe", "wordpiece"}))
      ->capture_default_str();
  app->add_option("--merges", opts->merges,
                  "BPE merges file, one 'left right' pair per line")
      ->check(CLI::ExistingFile);
  app->add_option("--vocab", opts->vocab,
                  "Token inventory: JSON token->id map (bpe) or one token per "
                  "line (wordpiece)")
      ->check(CLI::ExistingFile);
  app->add_option("--word-marker", opts->word_marker,
                  "BPE word-initial marker symbol (default: none)");
  app->add_option("--continuation-prefix", opts->continuation_prefix,
                  "WordPiece continuation prefix")
      ->capture_default_str();
  app->add_option("--unk-token", opts->unk_token, "WordPiece unknown token")
      ->capture_default_str();
}

void AddCorpusOptions(CLI::App *app, CorpusOptions *opts, bool with_task) {
  app->add_option("--input", opts->input,
                  "Training corpus (CoNLL columns or text<TAB>label)")
      ->required()
      ->check(CLI::ExistingFile);
  if (with_task) {
    app->add_option("--task", opts->task, "ner or classification")
        ->check(CLI::IsMember({"ner", "classification"}))
        ->capture_default_str();
  }
  app->add_option("--scheme", opts->scheme,
                  "Tagging scheme of the NER input; iob1 is converted to iob2")
      ->check(CLI::IsMember({"iob1", "iob2"}))
      ->capture_default_str();
}

void AddScoutOptions(CLI::App *app, ScoutOptions *opts, bool with_weights) {
  app->add_option("--strategy", opts->strategy,
                  "Candidate selection: random, cossim or kmeans "
                  "(recommended: kmeans)")
      ->check(CLI::IsMember({"random", "cossim", "cos-sim", "kmeans",
                             "k-means"}))
      ->capture_default_str();
  app->add_option("--k", opts->k,
                  "Candidates scored per sample, K (recommended: 10)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app->add_option("--n", opts->n,
                  "Candidates sampled per sample before selection, N "
                  "(recommended: 500)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app->add_option("--p", opts->p,
                  "Dropout probability of the regularized tokenizer "
                  "(recommended: 0.1)")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  if (with_weights) {
    app->add_option("--w-min", opts->w_min,
                    "Minimum sample weight (recommended: 1/3)")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
  }
  app->add_option("--seed", opts->seed, "Seed for every random stage")
      ->capture_default_str();
  app->add_option("--kmeans-max-iters", opts->kmeans_max_iters,
                  "K-means iteration cap")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app->add_option("--threads", opts->threads,
                  "Worker threads; outputs do not depend on it")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

WeighConfig ToWeighConfig(const ScoutOptions &opts) {
  if (opts.n < opts.k) {
    throw UsageError("--n (" + std::to_string(opts.n) +
                     ") must be at least --k (" + std::to_string(opts.k) +
                     ")");
  }
  WeighConfig config;
  config.k = opts.k;
  config.n = opts.n;
  config.p = opts.p;
  config.w_min = opts.w_min;
  config.seed = opts.seed;
  config.strategy = ParseStrategy(opts.strategy);
  config.kmeans_max_iters = opts.kmeans_max_iters;
  config.threads = opts.threads;
  return config;
}

std::ifstream OpenInput(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path);
  return in;
}

std::ofstream OpenOutput(const std::string &path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path);
  return out;
}

void CheckTokenizerFlags(const TokenizerOptions &opts) {
  if (opts.kind == "bpe" && opts.merges.empty()) {
    throw UsageError("--merges is required with --tokenizer bpe");
  }
  if (opts.kind == "wordpiece" && opts.vocab.empty()) {
    throw UsageError("--vocab is required with --tokenizer wordpiece");
  }
}

Tokenizer LoadTokenizer(const TokenizerOptions &opts) {
  return RunStage("load vocab", [&]() {
    if (opts.kind == "bpe") {
      std::ifstream merges_in = OpenInput(opts.merges);
      const auto merges = BpeVocab::ReadMerges(merges_in);
      if (opts.vocab.empty()) {
        return Tokenizer(BpeVocab::FromMerges(merges, opts.word_marker));
      }
      std::ifstream vocab_in = OpenInput(opts.vocab);
      return Tokenizer(BpeVocab::FromMergesAndTokens(
          merges, BpeVocab::ReadTokenJson(vocab_in), opts.word_marker));
    }
    std::ifstream vocab_in = OpenInput(opts.vocab);
    return Tokenizer(WordPieceVocab(WordPieceVocab::ReadTokens(vocab_in),
                                    opts.continuation_prefix,
                                    opts.unk_token));
  });
}

Corpus LoadCorpus(const CorpusOptions &opts) {
  return RunStage("read corpus", [&]() {
    std::ifstream in = OpenInput(opts.input);
    if (opts.task == "classification") return ReadClassificationTsv(in);
    return ReadConll(in, opts.scheme == "iob1" ? TagScheme::kIob1
                                               : TagScheme::kIob2);
  });
}

double Seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start)
      .count();
}

// ---------------------------------------------------------------- weigh

struct WeighOptions {
  CorpusOptions corpus;
  TokenizerOptions tokenizer;
  ScoutOptions scout;
  std::string predictor;
  std::string predictions;
  std::string output;
  std::string inline_output;
};

void WriteSummary(const WeightTable &table, const WeighConfig &config,
                  double seconds, std::ostream &out) {
  std::map<std::string, int> histogram;
  double total = 0.0;
  for (const auto &[id, entry] : table) {
    ++histogram[FormatWeight(entry.weight)];
    total += entry.weight;
  }
  out << "samples=" << table.size() << " strategy="
      << StrategyName(config.strategy) << " k=" << config.k
      << " n=" << config.n << " p=" << config.p
      << " w_min=" << FormatWeight(config.w_min) << " seed=" << config.seed
      << '\n';
  for (const auto &[weight, count] : histogram) {
    out << "weight=" << weight << " count=" << count << '\n';
  }
  if (!table.empty()) {
    out << "mean_weight=" << FormatWeight(total / table.size()) << '\n';
  }
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.3f", seconds);
  out << "time_" << StrategyName(config.strategy) << "_seconds=" << buffer
      << '\n';
}

int CmdWeigh(const WeighOptions &opts, std::ostream &out) {
  CheckTokenizerFlags(opts.tokenizer);
  if (opts.output.empty() && opts.inline_output.empty()) {
    throw UsageError("one of --output or --inline-output is required");
  }
  const WeighConfig config = ToWeighConfig(opts.scout);
  std::string predictor_kind = opts.predictor;
  if (!opts.predictions.empty()) {
    if (!predictor_kind.empty() && predictor_kind != "external") {
      throw UsageError("--predictions implies --predictor external");
    }
    predictor_kind = "external";
  }
  if (predictor_kind.empty()) {
    predictor_kind =
        opts.corpus.task == "ner" ? "dictionary" : "naive-bayes";
  }
  if (predictor_kind == "external" && opts.predictions.empty()) {
    throw UsageError("--predictor external needs --predictions");
  }
  if (predictor_kind == "dictionary" && opts.corpus.task != "ner") {
    throw UsageError("--predictor dictionary needs --task ner");
  }
  if (predictor_kind == "naive-bayes" && opts.corpus.task != "classification") {
    throw UsageError("--predictor naive-bayes needs --task classification");
  }

  const Tokenizer tokenizer = LoadTokenizer(opts.tokenizer);
  const Corpus corpus = LoadCorpus(opts.corpus);

  std::unique_ptr<Predictor> predictor =
      RunStage("train predictor", [&]() -> std::unique_ptr<Predictor> {
        if (predictor_kind == "dictionary") {
          return TrainDictionaryPredictor(corpus, tokenizer);
        }
        if (predictor_kind == "naive-bayes") {
          return TrainNaiveBayes(corpus, tokenizer);
        }
        std::ifstream in = OpenInput(opts.predictions);
        return LoadExternalPredictions(in);
      });

  const auto start = std::chrono::steady_clock::now();
  const WeightTable table = RunStage(
      "weigh", [&]() { return WeighCorpus(corpus, tokenizer, *predictor, config); });
  const double seconds = Seconds(start);

  RunStage("write output", [&]() {
    if (!opts.output.empty()) {
      std::ofstream sink = OpenOutput(opts.output);
      WriteWeighted(corpus, table, sink, WeightFormat::kSidecar);
    }
    if (!opts.inline_output.empty()) {
      std::ofstream sink = OpenOutput(opts.inline_output);
      WriteWeighted(corpus, table, sink, WeightFormat::kInline);
    }
  });
  WriteSummary(table, config, seconds, out);
  return kExitOk;
}

// ---------------------------------------------------------------- inject

struct InjectOptions {
  CorpusOptions corpus;
  double fraction = 0.10;
  uint64_t seed = 0;
  std::string output;
  std::string mask;
};

int CmdInject(const InjectOptions &opts, std::ostream &out) {
  const Corpus corpus = LoadCorpus(opts.corpus);
  InjectionConfig config;
  config.target_fraction = opts.fraction;
  config.seed = opts.seed;
  const InjectionResult result =
      RunStage("inject", [&]() { return Inject(corpus, config); });
  RunStage("write output", [&]() {
    std::ofstream corpus_out = OpenOutput(opts.output);
    WriteConll(result.corpus, corpus_out);
    std::ofstream mask_out = OpenOutput(opts.mask);
    WriteMask(result, mask_out);
  });
  out << "changed_labels=" << result.changed_token_positions.size()
      << " total=" << result.total_labels
      << " touched_samples=" << result.touched_sample_ids.size()
      << " untouched_samples="
      << corpus.size() - result.touched_sample_ids.size() << '\n';
  if (!result.budget_reached) {
    out << "warning: target of " << result.target_changes
        << " changed labels not reached\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------- export

struct ExportOptions {
  CorpusOptions corpus;
  TokenizerOptions tokenizer;
  ScoutOptions scout;
  std::string output;
};

int CmdExportCandidates(const ExportOptions &opts, std::ostream &out) {
  CheckTokenizerFlags(opts.tokenizer);
  const WeighConfig config = ToWeighConfig(opts.scout);
  const Tokenizer tokenizer = LoadTokenizer(opts.tokenizer);
  const Corpus corpus = LoadCorpus(opts.corpus);
  const auto candidates = RunStage(
      "select", [&]() { return ScoutCorpus(corpus, tokenizer, config); });
  size_t lines = 0;
  for (const auto &selected : candidates) lines += selected.size();
  RunStage("write output", [&]() {
    std::ofstream sink = OpenOutput(opts.output);
    WriteCandidates(candidates, sink);
  });
  out << "samples=" << corpus.size() << " candidates=" << lines << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- report

struct ReportOptions {
  std::string weights;
  std::string mask;
};

int CmdReport(const ReportOptions &opts, std::ostream &out) {
  const WeightTable table = RunStage("read weights", [&]() {
    std::ifstream in = OpenInput(opts.weights);
    return ReadWeightSidecar(in);
  });
  std::set<int> mask;
  if (!opts.mask.empty()) {
    mask = RunStage("read mask", [&]() {
      std::ifstream in = OpenInput(opts.mask);
      return ReadMask(in);
    });
  }
  const WeightReportData report =
      RunStage("report", [&]() { return WeightReport(table, mask); });
  WriteReport(report, out);
  return kExitOk;
}

// ---------------------------------------------------------------- tokenize

struct TokenizeOptions {
  TokenizerOptions tokenizer;
  ScoutOptions scout;
  std::string sentence;
};

std::string Join(const std::vector<std::string> &parts) {
  std::string joined;
  for (size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) joined += ' ';
    joined += parts[i];
  }
  return joined;
}

int CmdTokenize(const TokenizeOptions &opts, std::ostream &out) {
  CheckTokenizerFlags(opts.tokenizer);
  const WeighConfig config = ToWeighConfig(opts.scout);
  const Tokenizer tokenizer = LoadTokenizer(opts.tokenizer);
  Sample sample;
  std::istringstream words(opts.sentence);
  for (std::string word; words >> word;) sample.words.push_back(word);
  if (sample.words.empty()) throw UsageError("--sentence is empty");

  RunStage("tokenize", [&]() {
    const Candidate anchor = AnchorCandidate(sample, tokenizer);
    const auto pool =
        SampleCandidates(sample.words, tokenizer, config.p, config.n,
                         DeriveSeed(config.seed, "sample", sample.id));
    const auto selected = ScoutCandidates(sample, tokenizer, config);
    out << "# strategy=" << StrategyName(config.strategy)
        << " p=" << config.p << " n=" << config.n << " k=" << config.k
        << " pool=" << pool.size() << '\n';
    out << "deterministic\t" << Join(anchor.subwords) << '\n';
    for (const Candidate &candidate : selected) {
      out << candidate.candidate_index << '\t' << Join(candidate.subwords)
          << '\n';
    }
  });
  return kExitOk;
}

}  // namespace

int Run(int argc, const char *const *argv, std::ostream &out,
        std::ostream &err) {
  CLI::App app{"Annotation-error weighting with subword regularization"};
  app.name("subregweigh");
  app.set_config("--config", "",
                 "TOML/INI file of flag values; command-line flags override it");
  app.require_subcommand(1);

  WeighOptions weigh;
  CLI::App *weigh_cmd =
      app.add_subcommand("weigh", "Compute per-sample training weights");
  AddCorpusOptions(weigh_cmd, &weigh.corpus, true);
  AddTokenizerOptions(weigh_cmd, &weigh.tokenizer);
  AddScoutOptions(weigh_cmd, &weigh.scout, true);
  weigh_cmd
      ->add_option("--predictor", weigh.predictor,
                   "Scouting model: dictionary (ner), naive-bayes "
                   "(classification) or external")
      ->check(CLI::IsMember({"dictionary", "naive-bayes", "external"}));
  weigh_cmd
      ->add_option("--predictions", weigh.predictions,
                   "External predictions: sample_id<TAB>candidate_index<TAB>"
                   "labels")
      ->check(CLI::ExistingFile);
  weigh_cmd->add_option("--output", weigh.output,
                        "Sidecar weight file: id, weight, C, k_effective");
  weigh_cmd->add_option("--inline-output", weigh.inline_output,
                        "Corpus with a '# weight=' line before each sample");

  InjectOptions inject;
  CLI::App *inject_cmd = app.add_subcommand(
      "inject", "Replace a fraction of NER labels with pseudo-incorrect ones");
  AddCorpusOptions(inject_cmd, &inject.corpus, false);
  inject_cmd
      ->add_option("--fraction", inject.fraction,
                   "Fraction of labels to change, in (0, 1) "
                   "(recommended: 0.10)")
      ->check(CLI::Validator(
          [](std::string &value) -> std::string {
            double fraction = 0.0;
            try {
              fraction = std::stod(value);
            } catch (const std::exception &) {
              return "not a number: " + value;
            }
            if (!(fraction > 0.0 && fraction < 1.0)) {
              return "must lie strictly between 0 and 1";
            }
            return "";
          },
          "(0,1)"))
      ->capture_default_str();
  inject_cmd->add_option("--seed", inject.seed, "Injection seed")
      ->capture_default_str();
  inject_cmd->add_option("--output", inject.output, "Corrupted CoNLL corpus")
      ->required();
  inject_cmd->add_option("--mask", inject.mask, "Touched-sample mask file")
      ->required();

  ExportOptions exporter;
  CLI::App *export_cmd = app.add_subcommand(
      "export-candidates",
      "Write the selected candidates for an external scouting model");
  AddCorpusOptions(export_cmd, &exporter.corpus, true);
  AddTokenizerOptions(export_cmd, &exporter.tokenizer);
  AddScoutOptions(export_cmd, &exporter.scout, false);
  export_cmd
      ->add_option("--output", exporter.output,
                   "Candidate TSV: sample_id, candidate_index, subwords")
      ->required();

  ReportOptions report;
  CLI::App *report_cmd = app.add_subcommand(
      "report", "Mean raw C/K of corrupted and clean samples");
  report_cmd->add_option("--weights", report.weights, "Sidecar weight file")
      ->required()
      ->check(CLI::ExistingFile);
  report_cmd->add_option("--mask", report.mask, "Mask file from inject")
      ->check(CLI::ExistingFile);

  TokenizeOptions tokenize;
  CLI::App *tokenize_cmd = app.add_subcommand(
      "tokenize", "Print the deterministic and selected tokenizations");
  AddTokenizerOptions(tokenize_cmd, &tokenize.tokenizer);
  AddScoutOptions(tokenize_cmd, &tokenize.scout, false);
  tokenize_cmd
      ->add_option("--sentence", tokenize.sentence,
                   "Whitespace-separated words")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    if (e.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success)) {
      app.exit(e, out, err);
      return kExitOk;
    }
    err << "subregweigh: " << e.what() << '\n';
    return kExitUsage;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    if (command == "weigh") return CmdWeigh(weigh, out);
    if (command == "inject") return CmdInject(inject, out);
    if (command == "export-candidates") {
      return CmdExportCandidates(exporter, out);
    }
    if (command == "report") return CmdReport(report, out);
    return CmdTokenize(tokenize, out);
  } catch (const UsageError &e) {
    err << "subregweigh " << command << ": " << e.what() << '\n';
    return kExitUsage;
  } catch (const StageError &e) {
    err << "subregweigh " << command << ": " << e.what() << '\n';
    return kExitRuntime;
  } catch (const Error &e) {
    // Contract checks raised outside a stage are flag problems.
    err << "subregweigh " << command << ": " << e.what() << '\n';
    return kExitUsage;
  }
}

}  // namespace cli
}  // namespace subregweigh
