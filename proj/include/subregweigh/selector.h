#ifndef SUBREGWEIGH_SELECTOR_H_
#define SUBREGWEIGH_SELECTOR_H_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "subregweigh/tokenizer.h"

namespace subregweigh {

// Sparse vector over the term ids of one TfIdfSpace. Entries are sorted by
// term id and all weights are non-negative.
class TfIdfVector {
 public:
  TfIdfVector() = default;
  explicit TfIdfVector(std::vector<std::pair<int, double>> entries);

  const std::vector<std::pair<int, double>> &entries() const {
    return entries_;
  }
  double norm() const { return norm_; }
  double Dot(const TfIdfVector &other) const;

 private:
  std::vector<std::pair<int, double>> entries_;
  double norm_ = 0.0;
};

// TF-IDF over one sample's candidate pool. Each subword is a term and each
// candidate (plus the anchor) a document: tf is the raw count, idf is
// ln((1 + D) / (1 + df)) + 1, and every vector is L2-normalized.
struct TfIdfSpace {
  std::vector<std::string> terms;
  std::vector<TfIdfVector> candidates;
  TfIdfVector anchor;
};

TfIdfSpace BuildTfIdf(const std::vector<Candidate> &candidates,
                      const Candidate &anchor);

// dot(u, v) / (|u| |v|). Throws Error(kDegenerate) on a zero-norm vector.
double Cosine(const TfIdfVector &u, const TfIdfVector &v);

enum class Strategy { kRandom, kCosSim, kKMeans };

const char *StrategyName(Strategy strategy);
// Accepts "random", "cossim"/"cos-sim", "kmeans"/"k-means".
Strategy ParseStrategy(const std::string &name);

struct SelectionConfig {
  Strategy strategy = Strategy::kKMeans;
  int k = 10;
  int kmeans_max_iters = 100;
  uint64_t seed = 0;
};

// Every selector returns min(k, |candidates|) distinct members of the pool.

// Uniform without replacement; ordered by candidate_index.
std::vector<Candidate> SelectRandom(const std::vector<Candidate> &candidates,
                                    int k, Rng &rng);

// Greedy: first the candidate least similar to the anchor, then repeatedly
// the candidate whose maximum similarity to the anchor and the already
// selected candidates is smallest. Ties go to the lowest candidate_index.
// Returned in pick order.
std::vector<Candidate> SelectCosSim(const std::vector<Candidate> &candidates,
                                    const Candidate &anchor, int k);

// Cluster assignment produced by KMeansCluster, exposed for inspection.
struct Clustering {
  std::vector<int> assignment;            // pool position -> cluster
  std::vector<std::vector<double>> centroids;  // dense over TfIdfSpace terms
  std::vector<int> representatives;     // pool position per cluster
  int iterations = 0;
};

// k-means++ seeded K-means over the candidates' TF-IDF vectors (Euclidean).
// The anchor only contributes document frequencies. Clusters emptied during
// an iteration take the point farthest from its centroid. Requires
// |candidates| > k.
Clustering KMeansCluster(const std::vector<Candidate> &candidates,
                         const Candidate &anchor, int k, int max_iters,
                         uint64_t seed);

// The member nearest each centroid, ordered by candidate_index. Pools no
// larger than k are returned whole.
std::vector<Candidate> SelectKMeans(const std::vector<Candidate> &candidates,
                                    const Candidate &anchor,
                                    const SelectionConfig &config);

// Dispatches on config.strategy.
std::vector<Candidate> Select(const std::vector<Candidate> &candidates,
                              const Candidate &anchor,
                              const SelectionConfig &config);

}  // namespace subregweigh

#endif  // SUBREGWEIGH_SELECTOR_H_
