#ifndef SUBREGWEIGH_SCORER_H_
#define SUBREGWEIGH_SCORER_H_

#include <cstdint>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "subregweigh/corpus.h"
#include "subregweigh/selector.h"
#include "subregweigh/tokenizer.h"

namespace subregweigh {

// One tag per source word (NER) or a single class label.
struct Prediction {
  std::vector<std::string> labels;
};

enum class PredictorKind { kDictionary, kNaiveBayes, kExternal };

// The scouting model. Implementations are immutable after construction and
// Predict is a pure function of the candidate, so one predictor can serve
// any number of threads.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual PredictorKind kind() const = 0;
  virtual Prediction Predict(const Candidate &candidate) const = 0;
};

// Maps the first subword of each word to the majority tag it carried under
// the deterministic tokenization of the training corpus.
class DictionaryPredictor : public Predictor {
 public:
  explicit DictionaryPredictor(std::map<std::string, std::string> table)
      : table_(std::move(table)) {}

  PredictorKind kind() const override { return PredictorKind::kDictionary; }
  Prediction Predict(const Candidate &candidate) const override;

  const std::map<std::string, std::string> &table() const { return table_; }

 private:
  std::map<std::string, std::string> table_;
};

// Multinomial naive Bayes over subword counts with add-one smoothing.
class NaiveBayesPredictor : public Predictor {
 public:
  struct ClassStats {
    int documents = 0;
    long total_count = 0;
    std::map<std::string, long> counts;
  };

  NaiveBayesPredictor(std::map<std::string, ClassStats> classes,
                      int num_documents, size_t vocabulary_size);

  PredictorKind kind() const override { return PredictorKind::kNaiveBayes; }
  Prediction Predict(const Candidate &candidate) const override;

  // log P(class) + sum over subwords of log P(subword | class).
  double LogPosterior(const std::string &label,
                      const std::vector<std::string> &subwords) const;

 private:
  std::map<std::string, ClassStats> classes_;
  int num_documents_;
  size_t vocabulary_size_;
};

// Answers from a table of predictions keyed by (sample id, candidate index).
class ExternalPredictor : public Predictor {
 public:
  explicit ExternalPredictor(
      std::map<std::pair<int, int>, std::vector<std::string>> table)
      : table_(std::move(table)) {}

  PredictorKind kind() const override { return PredictorKind::kExternal; }
  // Throws Error(kMissingPrediction) naming the key if absent.
  Prediction Predict(const Candidate &candidate) const override;

  size_t size() const { return table_.size(); }

 private:
  std::map<std::pair<int, int>, std::vector<std::string>> table_;
};

std::unique_ptr<DictionaryPredictor> TrainDictionaryPredictor(
    const Corpus &corpus, const Tokenizer &tokenizer);

std::unique_ptr<NaiveBayesPredictor> TrainNaiveBayes(
    const Corpus &corpus, const Tokenizer &tokenizer);

// Lines of "sample_id\tcandidate_index\tprediction", where prediction is a
// space-joined tag sequence or a class label.
std::unique_ptr<ExternalPredictor> LoadExternalPredictions(std::istream &in);

// 1 iff the prediction equals the gold labels exactly (whole sequence).
// Throws Error(kShape) on a length mismatch.
int Agreement(const Prediction &prediction,
              const std::vector<std::string> &gold);

struct SampleWeight {
  double weight = 1.0;
  int agreement_count = 0;
  int k_effective = 0;
  // C / k_effective before flooring.
  double raw_ratio = 0.0;
};

// weight = max(w_min, C / k_effective). The floor reading is deliberate:
// a min() would cap every weight at w_min.
SampleWeight WeighSample(const std::vector<int> &agreements, double w_min);

struct WeighConfig {
  int k = 10;
  int n = 500;
  double p = 0.1;
  double w_min = 1.0 / 3.0;
  uint64_t seed = 0;
  Strategy strategy = Strategy::kKMeans;
  int kmeans_max_iters = 100;
  // Worker threads for the per-sample loop; results never depend on it.
  int threads = 1;

  // Throws Error(kContract) unless 1 <= k <= n, 0 <= p <= 1 and
  // 0 <= w_min <= 1.
  void Validate() const;
};

// The deterministic tokenization used as the Cos-Sim anchor.
Candidate AnchorCandidate(const Sample &sample, const Tokenizer &tokenizer);

// Samples N candidates for one sample and selects K of them. Seeds derive
// from (config.seed, sample.id), so the result is independent of the order
// in which samples are processed.
std::vector<Candidate> ScoutCandidates(const Sample &sample,
                                       const Tokenizer &tokenizer,
                                       const WeighConfig &config);

SampleWeight WeighOne(const Sample &sample, const Tokenizer &tokenizer,
                      const Predictor &predictor, const WeighConfig &config);

WeightTable WeighCorpus(const Corpus &corpus, const Tokenizer &tokenizer,
                        const Predictor &predictor, const WeighConfig &config);

// Applies the selection to every sample and returns candidates in sample-id
// order (for the external two-pass workflow).
std::vector<std::vector<Candidate>> ScoutCorpus(const Corpus &corpus,
                                                const Tokenizer &tokenizer,
                                                const WeighConfig &config);

// "sample_id\tcandidate_index\tspace-joined subwords" per candidate.
void WriteCandidates(const std::vector<std::vector<Candidate>> &candidates,
                     std::ostream &out);

inline double WeightedLoss(double weight, double loss) { return weight * loss; }

struct WeightReportData {
  // Mean raw C/k_effective of clean (unmasked) and corrupted (masked)
  // samples; nullopt when the partition is empty.
  std::optional<double> mean_correct;
  std::optional<double> mean_incorrect;
  int num_correct = 0;
  int num_incorrect = 0;

  // mean_correct / mean_incorrect: +inf when mean_incorrect is 0, NaN when
  // either mean is undefined.
  double ratio() const;
};

// Throws Error(kConsistency) if the mask names an id missing from the table.
WeightReportData WeightReport(const WeightTable &table,
                              const std::set<int> &corruption_mask);

// Fixed key=value lines.
void WriteReport(const WeightReportData &report, std::ostream &out);

}  // namespace subregweigh

#endif  // SUBREGWEIGH_SCORER_H_
