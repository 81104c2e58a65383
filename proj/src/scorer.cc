#include "subregweigh/scorer.h"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <sstream>
#include <thread>

#include "subregweigh/error.h"
#include "subregweigh/random.h"

namespace subregweigh {

// ---------------------------------------------------------------- predictors

Prediction DictionaryPredictor::Predict(const Candidate &candidate) const {
  static const std::string kOutside = "O";
  Prediction prediction;
  prediction.labels.reserve(candidate.num_words());
  for (int start : candidate.word_starts) {
    auto it = table_.find(candidate.subwords[start]);
    prediction.labels.push_back(it == table_.end() ? kOutside : it->second);
  }
  prediction.labels = RepairIob2(std::move(prediction.labels));
  return prediction;
}

std::unique_ptr<DictionaryPredictor> TrainDictionaryPredictor(
    const Corpus &corpus, const Tokenizer &tokenizer) {
  if (corpus.task != Task::kNer) {
    throw Error(ErrorKind::kTraining, "dictionary predictor needs NER data");
  }
  if (corpus.empty()) {
    throw Error(ErrorKind::kTraining, "cannot train on an empty corpus");
  }
  std::map<std::string, std::map<std::string, int>> counts;
  for (const Sample &sample : corpus.samples) {
    const Candidate candidate = TokenizeSample(sample.words, tokenizer);
    for (size_t w = 0; w < candidate.num_words(); ++w) {
      ++counts[candidate.subwords[candidate.word_starts[w]]][sample.labels[w]];
    }
  }
  std::map<std::string, std::string> table;
  for (const auto &[subword, tags] : counts) {
    // Ascending tag order, so a strict comparison keeps the smallest tag on
    // ties.
    const std::string *best = nullptr;
    int best_count = 0;
    for (const auto &[tag, count] : tags) {
      if (count > best_count) {
        best = &tag;
        best_count = count;
      }
    }
    table.emplace(subword, *best);
  }
  return std::make_unique<DictionaryPredictor>(std::move(table));
}

NaiveBayesPredictor::NaiveBayesPredictor(
    std::map<std::string, ClassStats> classes, int num_documents,
    size_t vocabulary_size)
    : classes_(std::move(classes)),
      num_documents_(num_documents),
      vocabulary_size_(vocabulary_size) {}

double NaiveBayesPredictor::LogPosterior(
    const std::string &label, const std::vector<std::string> &subwords) const {
  const ClassStats &stats = classes_.at(label);
  double score = std::log(static_cast<double>(stats.documents) /
                          num_documents_);
  const double denominator =
      static_cast<double>(stats.total_count + vocabulary_size_);
  for (const std::string &subword : subwords) {
    auto it = stats.counts.find(subword);
    const long count = it == stats.counts.end() ? 0 : it->second;
    score += std::log((count + 1) / denominator);
  }
  return score;
}

Prediction NaiveBayesPredictor::Predict(const Candidate &candidate) const {
  const std::string *best = nullptr;
  double best_score = -std::numeric_limits<double>::infinity();
  for (const auto &[label, stats] : classes_) {
    const double score = LogPosterior(label, candidate.subwords);
    if (best == nullptr || score > best_score) {
      best = &label;
      best_score = score;
    }
  }
  return Prediction{{*best}};
}

std::unique_ptr<NaiveBayesPredictor> TrainNaiveBayes(
    const Corpus &corpus, const Tokenizer &tokenizer) {
  if (corpus.task != Task::kClassification) {
    throw Error(ErrorKind::kTraining, "naive Bayes needs classification data");
  }
  std::map<std::string, NaiveBayesPredictor::ClassStats> classes;
  std::set<std::string> vocabulary;
  for (const Sample &sample : corpus.samples) {
    const Candidate candidate = TokenizeSample(sample.words, tokenizer);
    NaiveBayesPredictor::ClassStats &stats = classes[sample.label()];
    ++stats.documents;
    for (const std::string &subword : candidate.subwords) {
      ++stats.counts[subword];
      ++stats.total_count;
      vocabulary.insert(subword);
    }
  }
  if (classes.size() < 2) {
    throw Error(ErrorKind::kTraining,
                "naive Bayes needs at least 2 classes, got " +
                    std::to_string(classes.size()));
  }
  return std::make_unique<NaiveBayesPredictor>(
      std::move(classes), static_cast<int>(corpus.size()), vocabulary.size());
}

Prediction ExternalPredictor::Predict(const Candidate &candidate) const {
  auto it = table_.find({candidate.sample_id, candidate.candidate_index});
  if (it == table_.end()) {
    throw Error(ErrorKind::kMissingPrediction,
                "no prediction for sample " +
                    std::to_string(candidate.sample_id) + " candidate " +
                    std::to_string(candidate.candidate_index));
  }
  return Prediction{it->second};
}

std::unique_ptr<ExternalPredictor> LoadExternalPredictions(std::istream &in) {
  std::map<std::pair<int, int>, std::vector<std::string>> table;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const size_t tab1 = line.find('\t');
    const size_t tab2 =
        tab1 == std::string::npos ? tab1 : line.find('\t', tab1 + 1);
    if (tab2 == std::string::npos) {
      throw ParseError(ErrorKind::kParse, line_number,
                       "expected sample_id<TAB>candidate_index<TAB>prediction");
    }
    int sample_id;
    int candidate_index;
    const auto parse_int = [&](size_t begin, size_t end, int *value) {
      auto [ptr, ec] =
          std::from_chars(line.data() + begin, line.data() + end, *value);
      return ec == std::errc() && ptr == line.data() + end;
    };
    if (!parse_int(0, tab1, &sample_id) ||
        !parse_int(tab1 + 1, tab2, &candidate_index)) {
      throw ParseError(ErrorKind::kFormat, line_number, "non-integer key");
    }
    std::vector<std::string> labels;
    std::istringstream fields(line.substr(tab2 + 1));
    std::string label;
    while (fields >> label) labels.push_back(label);
    if (labels.empty()) {
      throw ParseError(ErrorKind::kFormat, line_number, "empty prediction");
    }
    if (!table.emplace(std::make_pair(sample_id, candidate_index),
                       std::move(labels))
             .second) {
      throw ParseError(ErrorKind::kFormat, line_number,
                       "duplicate prediction for sample " +
                           std::to_string(sample_id) + " candidate " +
                           std::to_string(candidate_index));
    }
  }
  return std::make_unique<ExternalPredictor>(std::move(table));
}

// ---------------------------------------------------------------- weighing

int Agreement(const Prediction &prediction,
              const std::vector<std::string> &gold) {
  if (prediction.labels.size() != gold.size()) {
    throw Error(ErrorKind::kShape,
                "prediction has " + std::to_string(prediction.labels.size()) +
                    " labels, gold has " + std::to_string(gold.size()));
  }
  return prediction.labels == gold ? 1 : 0;
}

SampleWeight WeighSample(const std::vector<int> &agreements, double w_min) {
  if (agreements.empty()) {
    throw Error(ErrorKind::kContract, "no agreements to weigh");
  }
  SampleWeight result;
  for (int agreement : agreements) {
    if (agreement != 0 && agreement != 1) {
      throw Error(ErrorKind::kContract, "agreement must be 0 or 1");
    }
    result.agreement_count += agreement;
  }
  result.k_effective = static_cast<int>(agreements.size());
  result.raw_ratio =
      static_cast<double>(result.agreement_count) / result.k_effective;
  result.weight = std::max(w_min, result.raw_ratio);
  return result;
}

void WeighConfig::Validate() const {
  if (k < 1) throw Error(ErrorKind::kContract, "K must be at least 1");
  if (n < k) throw Error(ErrorKind::kContract, "N must be at least K");
  if (!(p >= 0.0 && p <= 1.0)) {
    throw Error(ErrorKind::kContract, "p must lie in [0, 1]");
  }
  if (!(w_min >= 0.0 && w_min <= 1.0)) {
    throw Error(ErrorKind::kContract, "w_min must lie in [0, 1]");
  }
  if (kmeans_max_iters < 1) {
    throw Error(ErrorKind::kContract, "kmeans_max_iters must be positive");
  }
  if (threads < 1) throw Error(ErrorKind::kContract, "threads must be >= 1");
}

Candidate AnchorCandidate(const Sample &sample, const Tokenizer &tokenizer) {
  Candidate anchor = TokenizeSample(sample.words, tokenizer);
  anchor.sample_id = sample.id;
  anchor.candidate_index = -1;
  return anchor;
}

std::vector<Candidate> ScoutCandidates(const Sample &sample,
                                       const Tokenizer &tokenizer,
                                       const WeighConfig &config) {
  std::vector<Candidate> pool =
      SampleCandidates(sample.words, tokenizer, config.p, config.n,
                       DeriveSeed(config.seed, "sample", sample.id));
  for (Candidate &candidate : pool) candidate.sample_id = sample.id;
  const Candidate anchor = AnchorCandidate(sample, tokenizer);
  SelectionConfig selection;
  selection.strategy = config.strategy;
  selection.k = config.k;
  selection.kmeans_max_iters = config.kmeans_max_iters;
  selection.seed = DeriveSeed(config.seed, "select", sample.id);
  return Select(pool, anchor, selection);
}

SampleWeight WeighOne(const Sample &sample, const Tokenizer &tokenizer,
                      const Predictor &predictor, const WeighConfig &config) {
  const std::vector<Candidate> selected =
      ScoutCandidates(sample, tokenizer, config);
  std::vector<int> agreements;
  agreements.reserve(selected.size());
  for (const Candidate &candidate : selected) {
    agreements.push_back(Agreement(predictor.Predict(candidate), sample.labels));
  }
  return WeighSample(agreements, config.w_min);
}

namespace {

// Runs fn(i) for i in [0, n) on up to `threads` workers. If any call throws,
// the exception of the lowest failing index is rethrown, so failures are
// reported the same way regardless of scheduling.
template <typename Fn>
void ParallelFor(size_t n, int threads, Fn &&fn) {
  if (threads <= 1 || n < 2) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::atomic<size_t> next{0};
  std::atomic<bool> failed{false};
  const auto worker = [&]() {
    for (size_t i = next++; i < n && !failed; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
        failed = true;
      }
    }
  };
  std::vector<std::jthread> pool;
  const size_t count = std::min<size_t>(threads, n);
  for (size_t t = 0; t < count; ++t) pool.emplace_back(worker);
  pool.clear();
  for (const std::exception_ptr &error : errors) {
    if (error) std::rethrow_exception(error);
  }
}

std::string SampleContext(const Sample &sample, const Error &error) {
  return "sample " + std::to_string(sample.id) + ": " + error.what();
}

}  // namespace

WeightTable WeighCorpus(const Corpus &corpus, const Tokenizer &tokenizer,
                        const Predictor &predictor, const WeighConfig &config) {
  config.Validate();
  std::vector<SampleWeight> weights(corpus.size());
  ParallelFor(corpus.size(), config.threads, [&](size_t i) {
    const Sample &sample = corpus.samples[i];
    try {
      weights[i] = WeighOne(sample, tokenizer, predictor, config);
    } catch (const Error &e) {
      throw Error(e.kind(), SampleContext(sample, e));
    }
  });
  WeightTable table;
  for (size_t i = 0; i < corpus.size(); ++i) {
    const SampleWeight &w = weights[i];
    table.emplace(corpus.samples[i].id,
                  WeightEntry{w.weight, w.agreement_count, w.k_effective});
  }
  return table;
}

std::vector<std::vector<Candidate>> ScoutCorpus(const Corpus &corpus,
                                                const Tokenizer &tokenizer,
                                                const WeighConfig &config) {
  config.Validate();
  std::vector<std::vector<Candidate>> out(corpus.size());
  ParallelFor(corpus.size(), config.threads, [&](size_t i) {
    const Sample &sample = corpus.samples[i];
    try {
      out[i] = ScoutCandidates(sample, tokenizer, config);
    } catch (const Error &e) {
      throw Error(e.kind(), SampleContext(sample, e));
    }
  });
  return out;
}

void WriteCandidates(const std::vector<std::vector<Candidate>> &candidates,
                     std::ostream &out) {
  for (const std::vector<Candidate> &selected : candidates) {
    for (const Candidate &candidate : selected) {
      out << candidate.sample_id << '\t' << candidate.candidate_index << '\t';
      for (size_t i = 0; i < candidate.subwords.size(); ++i) {
        if (i > 0) out << ' ';
        out << candidate.subwords[i];
      }
      out << '\n';
    }
  }
}

// ---------------------------------------------------------------- reports

double WeightReportData::ratio() const {
  if (!mean_correct || !mean_incorrect) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  if (*mean_incorrect == 0.0) return std::numeric_limits<double>::infinity();
  return *mean_correct / *mean_incorrect;
}

WeightReportData WeightReport(const WeightTable &table,
                              const std::set<int> &corruption_mask) {
  for (int id : corruption_mask) {
    if (table.find(id) == table.end()) {
      throw Error(ErrorKind::kConsistency,
                  "mask names sample " + std::to_string(id) +
                      " which has no weight");
    }
  }
  WeightReportData report;
  double sum_correct = 0.0;
  double sum_incorrect = 0.0;
  for (const auto &[id, entry] : table) {
    if (corruption_mask.count(id)) {
      sum_incorrect += entry.raw_ratio();
      ++report.num_incorrect;
    } else {
      sum_correct += entry.raw_ratio();
      ++report.num_correct;
    }
  }
  if (report.num_correct > 0) {
    report.mean_correct = sum_correct / report.num_correct;
  }
  if (report.num_incorrect > 0) {
    report.mean_incorrect = sum_incorrect / report.num_incorrect;
  }
  return report;
}

namespace {

std::string FormatReportValue(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.4f", value);
  return buffer;
}

}  // namespace

void WriteReport(const WeightReportData &report, std::ostream &out) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  out << "w_cor=" << FormatReportValue(report.mean_correct.value_or(nan))
      << '\n'
      << "w_incor=" << FormatReportValue(report.mean_incorrect.value_or(nan))
      << '\n'
      << "ratio=" << FormatReportValue(report.ratio()) << '\n'
      << "n_cor=" << report.num_correct << '\n'
      << "n_incor=" << report.num_incorrect << '\n';
}

}  // namespace subregweigh
