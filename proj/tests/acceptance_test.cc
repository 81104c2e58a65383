// Acceptance suite: one PASS/FAIL line per criterion. Exit status is nonzero
// if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.h"
#include "subregweigh/cli.h"
#include "subregweigh/corpus.h"
#include "subregweigh/noise.h"
#include "subregweigh/scorer.h"
#include "subregweigh/selector.h"
#include "subregweigh/tokenizer.h"
#include "subregweigh/utf8.h"
#include "synthetic.h"

namespace fs = std::filesystem;
using namespace subregweigh;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;

  void Require(bool condition, const std::string &what) {
    if (!condition && pass) {
      pass = false;
      detail = what;
    }
  }
};

double Seconds(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string Format(const char *fmt, double a, double b = 0, double c = 0) {
  char buffer[256];
  std::snprintf(buffer, sizeof buffer, fmt, a, b, c);
  return buffer;
}

BpeVocab ToyBpe() {
  std::ifstream in(std::string(TOY_DATA_DIR) + "/bpe_merges.txt");
  return BpeVocab::FromMerges(BpeVocab::ReadMerges(in));
}

WordPieceVocab ToyWordPiece() {
  std::ifstream in(std::string(TOY_DATA_DIR) + "/wordpiece_vocab.txt");
  return WordPieceVocab(WordPieceVocab::ReadTokens(in));
}

const std::vector<std::string> kToyAlphabet = {"a", "b", "d", "e", "n",
                                               "r", "s", "t", "u"};

// ------------------------------------------------------------------ 1

Outcome WeightFormula() {
  Outcome outcome;
  // w_min as an exact fraction num/den.
  const std::vector<std::pair<int, int>> floors = {{0, 1}, {1, 3}, {7, 10},
                                                   {1, 1}};
  for (const auto &[num, den] : floors) {
    const double w_min = static_cast<double>(num) / den;
    for (int k = 1; k <= 20; ++k) {
      for (int c = 0; c <= k; ++c) {
        std::vector<int> agreements(k, 0);
        std::fill(agreements.begin(), agreements.begin() + c, 1);
        const SampleWeight w = WeighSample(agreements, w_min);
        // c/k >= num/den  <=>  c*den >= num*k
        const double expected = static_cast<long>(c) * den >=
                                        static_cast<long>(num) * k
                                    ? static_cast<double>(c) / k
                                    : w_min;
        outcome.Require(w.weight == expected && w.agreement_count == c &&
                            w.k_effective == k,
                        Format("mismatch at C=%g K=%g w_min=%g", c, k, w_min));
      }
    }
  }
  // Reachable set at K=10, w_min=1/3, as fractions over 30.
  std::set<int> reachable;
  for (int c = 0; c <= 10; ++c) {
    std::vector<int> agreements(10, 0);
    std::fill(agreements.begin(), agreements.begin() + c, 1);
    const double weight = WeighSample(agreements, 1.0 / 3.0).weight;
    const long thirtieths = std::lround(weight * 30);
    outcome.Require(std::fabs(weight - thirtieths / 30.0) < 1e-15,
                    "weight off the 1/30 grid");
    reachable.insert(static_cast<int>(thirtieths));
  }
  const std::set<int> expected = {10, 12, 15, 18, 21, 24, 27, 30};
  outcome.Require(reachable == expected, "reachable set differs");
  for (int observed : {10, 15, 21}) {  // 0.333, 0.500, 0.700
    outcome.Require(reachable.count(observed) == 1,
                    "observed table weight unreachable");
  }
  outcome.detail = outcome.pass ? "4 floors x K<=20 exhaustive; grid "
                                  "{1/3,0.4,...,1.0}"
                                : outcome.detail;
  return outcome;
}

// ------------------------------------------------------------------ 2

Outcome ZeroDropoutEquivalence() {
  Outcome outcome;
  const BpeVocab bpe = ToyBpe();
  const WordPieceVocab wordpiece = ToyWordPiece();
  Rng words(2024);
  int checked = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::string word = testing::RandomWord(
        words, kToyAlphabet, 1 + static_cast<int>(words.Uniform(10)));
    Rng rng(static_cast<uint64_t>(i));
    outcome.Require(BpeDropoutEncode(word, bpe, 0.0, rng) == BpeEncode(word, bpe),
                    "BPE-Dropout p=0 differs on " + word);
    outcome.Require(MaxMatchDropoutEncode(word, wordpiece, 0.0, rng) ==
                        MaxMatchEncode(word, wordpiece),
                    "MaxMatch-Dropout p=0 differs on " + word);
    ++checked;
  }
  if (outcome.pass) {
    outcome.detail = std::to_string(checked) + " words, both encoders";
  }
  return outcome;
}

// ------------------------------------------------------------------ 3

const std::vector<std::string> kFragments = {"er", "an", "st", "ter", "ban",
                                             "und", "de", "and", "ster", "u"};

Outcome EnumerationOracle() {
  Outcome outcome;
  const BpeVocab vocab = ToyBpe();
  const Tokenizer tokenizer(vocab);
  Rng words(33);
  long enumerable = 0;
  long discovered = 0;
  for (int i = 0; i < 300; ++i) {
    // Half the words are glued from merge-rich fragments, cut to 6 chars.
    std::string word;
    if (i % 2 == 0) {
      word = testing::RandomWord(words, kToyAlphabet,
                                 1 + static_cast<int>(words.Uniform(6)));
    } else {
      while (Utf8Length(word) < 6) {
        word += kFragments[words.Uniform(kFragments.size())];
      }
      word = word.substr(0, 2 + words.Uniform(5));
    }
    const auto all =
        testing::EnumerateBpeSegmentations(SplitUtf8(word), vocab.merges());
    const auto found =
        SampleCandidates({word}, tokenizer, 0.5, 500, 1000 + i, 500);
    std::set<std::vector<std::string>> distinct;
    for (const Candidate &candidate : found) {
      outcome.Require(all.count(candidate.subwords) == 1,
                      "candidate outside the enumeration for " + word);
      distinct.insert(candidate.subwords);
    }
    enumerable += static_cast<long>(all.size());
    discovered += static_cast<long>(distinct.size());
  }
  const double coverage = static_cast<double>(discovered) / enumerable;
  outcome.Require(coverage >= 0.9, Format("coverage %.4f < 0.9", coverage));
  if (outcome.pass) {
    outcome.detail = Format("300 words, coverage %.4f (%g of %g)", coverage,
                            discovered, enumerable);
  }
  return outcome;
}

// ------------------------------------------------------------------ 4

std::vector<Candidate> RandomPool(Rng &rng, int size, int sample_id) {
  static const std::vector<std::string> pieces = {"a", "b", "ab", "c",
                                                  "bc", "abc", "d"};
  std::vector<Candidate> pool;
  for (int i = 0; i < size; ++i) {
    Candidate candidate;
    const int length = 1 + static_cast<int>(rng.Uniform(5));
    for (int t = 0; t < length; ++t) {
      candidate.subwords.push_back(pieces[rng.Uniform(pieces.size())]);
    }
    candidate.word_starts = {0};
    candidate.sample_id = sample_id;
    candidate.candidate_index = i;
    pool.push_back(std::move(candidate));
  }
  return pool;
}

Outcome CosSimOracle() {
  Outcome outcome;
  Rng rng(44);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(rng.Uniform(8));
    const int k = 1 + static_cast<int>(rng.Uniform(3));
    const std::vector<Candidate> pool = RandomPool(rng, n, trial);
    const Candidate anchor = RandomPool(rng, 1, trial)[0];
    std::vector<std::vector<std::string>> docs;
    for (const Candidate &candidate : pool) docs.push_back(candidate.subwords);
    const std::vector<int> expected =
        testing::BruteForceCosSim(docs, anchor.subwords, k);
    std::vector<int> actual;
    for (const Candidate &c : SelectCosSim(pool, anchor, k)) {
      actual.push_back(c.candidate_index);
    }
    outcome.Require(actual == expected,
                    "selection differs on pool " + std::to_string(trial));
  }
  if (outcome.pass) outcome.detail = "100 pools (N<=8, K<=3)";
  return outcome;
}

// ------------------------------------------------------------------ 5

Outcome KMeansContracts() {
  Outcome outcome;
  Rng rng(55);
  const Candidate anchor = RandomPool(rng, 1, 0)[0];
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(rng.Uniform(30));
    const int k = 1 + static_cast<int>(rng.Uniform(10));
    const std::vector<Candidate> pool = RandomPool(rng, n, trial);
    SelectionConfig config;
    config.strategy = Strategy::kKMeans;
    config.k = k;
    config.seed = 900 + trial;
    const auto selected = SelectKMeans(pool, anchor, config);
    const auto again = SelectKMeans(pool, anchor, config);
    const std::string at = " (pool " + std::to_string(trial) + ")";
    outcome.Require(selected.size() == static_cast<size_t>(std::min(k, n)),
                    "wrong output size" + at);
    std::set<int> indices;
    for (const Candidate &c : selected) {
      outcome.Require(c.candidate_index >= 0 && c.candidate_index < n &&
                          pool[c.candidate_index].SameSegmentation(c),
                      "member not from pool" + at);
      indices.insert(c.candidate_index);
    }
    outcome.Require(indices.size() == selected.size(), "duplicate member" + at);
    outcome.Require(again.size() == selected.size() &&
                        std::equal(again.begin(), again.end(), selected.begin(),
                                   [](const Candidate &a, const Candidate &b) {
                                     return a.candidate_index ==
                                            b.candidate_index;
                                   }),
                    "not deterministic" + at);
    if (n > k) {
      const Clustering clustering =
          KMeansCluster(pool, anchor, k, config.kmeans_max_iters, config.seed);
      std::set<int> clusters;
      for (int cluster = 0; cluster < k; ++cluster) {
        const int rep = clustering.representatives[cluster];
        outcome.Require(clustering.assignment[rep] == cluster,
                        "representative outside its cluster" + at);
        clusters.insert(clustering.assignment[rep]);
        outcome.Require(indices.count(rep) == 1,
                        "representative not selected" + at);
      }
      outcome.Require(clusters.size() == static_cast<size_t>(k),
                      "two picks share a cluster" + at);
    }
  }

  // Duplicate groups: 5 x A and 5 x B, interleaved.
  std::vector<Candidate> groups;
  for (int i = 0; i < 10; ++i) {
    Candidate c;
    c.subwords = i % 2 == 0 ? std::vector<std::string>{"J", "a", "pan"}
                            : std::vector<std::string>{"Ja", "p", "an"};
    c.word_starts = {0};
    c.candidate_index = i;
    groups.push_back(c);
  }
  Candidate japan;
  japan.subwords = {"Japan"};
  japan.word_starts = {0};
  const TfIdfSpace space = BuildTfIdf(groups, japan);
  outcome.Require(std::fabs(Cosine(space.candidates[0], space.candidates[2]) -
                            1.0) < 1e-12,
                  "intra-group cosine is not 1");
  outcome.Require(Cosine(space.candidates[0], space.candidates[1]) < 1.0,
                  "inter-group cosine is 1");
  SelectionConfig config;
  config.k = 2;
  config.seed = 3;
  const auto picked = SelectKMeans(groups, japan, config);
  outcome.Require(picked.size() == 2 && picked[0].candidate_index % 2 !=
                                            picked[1].candidate_index % 2,
                  "duplicate groups not split one per group");
  if (outcome.pass) {
    outcome.detail = "100 pools + duplicate-group fixture";
  }
  return outcome;
}

// ------------------------------------------------------------------ 6

Outcome InjectionValidity() {
  Outcome outcome;
  Rng rng(66);
  const std::vector<std::string> types = {"PER", "LOC", "ORG", "MISC"};
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Corpus corpus = testing::RandomIob2Corpus(
        rng, 20 + static_cast<int>(rng.Uniform(30)), 3, 20, types);
    InjectionConfig config;
    config.target_fraction = 0.10;
    config.seed = static_cast<uint64_t>(trial);
    const InjectionResult result = Inject(corpus, config);
    for (const Sample &sample : result.corpus.samples) {
      outcome.Require(ValidateIob2(sample.labels).empty(),
                      "invalid IOB2 after injection in corpus " +
                          std::to_string(trial));
    }
    const double total = static_cast<double>(result.total_labels);
    const double deviation =
        std::fabs(static_cast<double>(result.changed_token_positions.size()) -
                  0.10 * total);
    worst = std::max(worst, deviation / total);
    outcome.Require(result.budget_reached &&
                        deviation <= std::max(1.0, 0.005 * total),
                    "changed fraction outside tolerance in corpus " +
                        std::to_string(trial));
  }
  if (outcome.pass) {
    outcome.detail =
        Format("1000 corpora; worst deviation %.4f of labels", worst);
  }
  return outcome;
}

// ------------------------------------------------------------------ 7

Outcome EndToEndSeparation() {
  Outcome outcome;
  const testing::SyntheticNer synthetic = testing::GenerateSyntheticNer({});
  InjectionConfig injection;
  injection.seed = 7;
  const InjectionResult noisy = Inject(synthetic.corpus, injection);
  const Tokenizer tokenizer(synthetic.Vocab());
  const auto predictor = TrainDictionaryPredictor(noisy.corpus, tokenizer);

  std::string summary;
  for (Strategy strategy :
       {Strategy::kRandom, Strategy::kCosSim, Strategy::kKMeans}) {
    WeighConfig config;
    config.k = 10;
    config.n = 100;
    config.p = 0.1;
    config.seed = 11;
    config.strategy = strategy;
    const WeightTable table =
        WeighCorpus(noisy.corpus, tokenizer, *predictor, config);
    const WeightReportData report =
        WeightReport(table, noisy.touched_sample_ids);
    const double cor = report.mean_correct.value_or(NAN);
    const double incor = report.mean_incorrect.value_or(NAN);
    const double ratio = report.ratio();
    summary += std::string(StrategyName(strategy)) +
               Format(" cor=%.4f incor=%.4f ratio=%.2f; ", cor, incor, ratio);
    outcome.Require(ratio >= 2.0, std::string(StrategyName(strategy)) +
                                      Format(" ratio %.4f < 2", ratio));
    if (strategy == Strategy::kKMeans) {
      outcome.Require(incor <= 0.5 * cor,
                      Format("kmeans incor %.4f > 0.5 x cor %.4f", incor, cor));
    }
  }
  if (outcome.pass) outcome.detail = summary;
  else outcome.detail += " [" + summary + "]";
  return outcome;
}

// ------------------------------------------------------------------ 8

Outcome DeterminismAndThroughput(double *seconds) {
  Outcome outcome;
  const fs::path dir = fs::temp_directory_path() /
                       ("subregweigh_acceptance_" +
                        std::to_string(Clock::now().time_since_epoch().count()));
  fs::create_directories(dir);
  const testing::SyntheticNer synthetic = testing::GenerateSyntheticNer({});
  testing::WriteConllFile(synthetic.corpus, (dir / "train.conll").string());
  testing::WriteMerges(synthetic.merges, (dir / "merges.txt").string());
  testing::WriteTokenJson(synthetic.tokens, (dir / "vocab.json").string());

  double slowest = 0.0;
  std::vector<std::string> outputs;
  for (int run = 0; run < 2; ++run) {
    const std::string output = (dir / ("weights" + std::to_string(run) + ".tsv")).string();
    const std::string input = (dir / "train.conll").string();
    const std::string merges = (dir / "merges.txt").string();
    const std::string vocab = (dir / "vocab.json").string();
    const char *argv[] = {"subregweigh", "weigh",   "--input",   input.c_str(),
                          "--merges",    merges.c_str(), "--vocab", vocab.c_str(),
                          "--n",         "500",     "--k",       "10",
                          "--threads",   "1",       "--output",  output.c_str()};
    std::ostringstream out;
    std::ostringstream err;
    const auto start = Clock::now();
    const int code = cli::Run(static_cast<int>(std::size(argv)), argv, out, err);
    slowest = std::max(slowest, Seconds(start));
    outcome.Require(code == cli::kExitOk, "weigh failed: " + err.str());
    outputs.push_back(code == cli::kExitOk ? testing::ReadFile(output) : "");
  }
  fs::remove_all(dir);
  *seconds = slowest;
  outcome.Require(!outputs[0].empty() && outputs[0] == outputs[1],
                  "weight tables differ between runs");
  outcome.Require(slowest < 300.0, Format("run took %.1f s", slowest));
  if (outcome.pass) {
    outcome.detail = Format("byte-identical; slowest run %.1f s", slowest);
  }
  return outcome;
}

// ------------------------------------------------------------------ 9

Outcome Iob1Oracle() {
  Outcome outcome;
  Rng rng(99);
  const std::vector<std::string> types = {"PER", "LOC", "ORG", "MISC"};
  for (int trial = 0; trial < 1000; ++trial) {
    const auto iob1 = testing::RandomIob1Sequence(
        rng, 1 + static_cast<int>(rng.Uniform(20)), types);
    const auto iob2 = Iob1ToIob2(iob1);
    outcome.Require(ValidateIob2(iob2).empty(),
                    "invalid IOB2 on sequence " + std::to_string(trial));
    outcome.Require(testing::SpansIob1(iob1) == testing::SpansIob2(iob2),
                    "span set changed on sequence " + std::to_string(trial));
  }
  if (outcome.pass) outcome.detail = "1000 sequences";
  return outcome;
}

}  // namespace

int main() {
  struct Criterion {
    int number;
    const char *name;
    double limit_seconds;
    std::function<Outcome(double *)> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "weight formula", 1, [](double *) { return WeightFormula(); }},
      {2, "p=0 equivalence", 5, [](double *) { return ZeroDropoutEquivalence(); }},
      {3, "tokenization enumeration", 30, [](double *) { return EnumerationOracle(); }},
      {4, "cos-sim greedy oracle", 10, [](double *) { return CosSimOracle(); }},
      {5, "k-means contracts", 30, [](double *) { return KMeansContracts(); }},
      {6, "injection validity", 60, [](double *) { return InjectionValidity(); }},
      {7, "end-to-end separation", 120, [](double *) { return EndToEndSeparation(); }},
      {8, "determinism and throughput", 600,
       [](double *s) { return DeterminismAndThroughput(s); }},
      {9, "IOB1 to IOB2 oracle", 5, [](double *) { return Iob1Oracle(); }},
  };

  int failures = 0;
  for (const Criterion &criterion : criteria) {
    Outcome outcome;
    double unused = 0.0;
    const auto start = Clock::now();
    try {
      outcome = criterion.run(&unused);
    } catch (const std::exception &e) {
      outcome.pass = false;
      outcome.detail = std::string("exception: ") + e.what();
    }
    const double elapsed = Seconds(start);
    // Criterion 8 bounds each single run inside its own check.
    if (outcome.pass && elapsed > criterion.limit_seconds) {
      outcome.pass = false;
      outcome.detail = Format("took %.1f s, limit %.0f s", elapsed,
                              criterion.limit_seconds);
    }
    if (!outcome.pass) ++failures;
    std::printf("%s criterion %d (%s): %s [%.2f s]\n",
                outcome.pass ? "PASS" : "FAIL", criterion.number, criterion.name,
                outcome.detail.c_str(), elapsed);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
