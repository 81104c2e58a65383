#include "subregweigh/selector.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <unordered_map>

#include "subregweigh/error.h"

namespace subregweigh {

TfIdfVector::TfIdfVector(std::vector<std::pair<int, double>> entries)
    : entries_(std::move(entries)) {
  std::sort(entries_.begin(), entries_.end());
  double sum = 0.0;
  for (const auto &[term, weight] : entries_) {
    if (weight < 0.0) {
      throw Error(ErrorKind::kContract, "negative TF-IDF weight");
    }
    sum += weight * weight;
  }
  norm_ = std::sqrt(sum);
}

double TfIdfVector::Dot(const TfIdfVector &other) const {
  double dot = 0.0;
  auto a = entries_.begin();
  auto b = other.entries_.begin();
  while (a != entries_.end() && b != other.entries_.end()) {
    if (a->first == b->first) {
      dot += a->second * b->second;
      ++a;
      ++b;
    } else if (a->first < b->first) {
      ++a;
    } else {
      ++b;
    }
  }
  return dot;
}

TfIdfSpace BuildTfIdf(const std::vector<Candidate> &candidates,
                      const Candidate &anchor) {
  TfIdfSpace space;
  std::unordered_map<std::string, int> term_ids;
  std::vector<int> df;

  // Term counts per document; the anchor is the last document.
  const auto count_terms = [&](const Candidate &doc) {
    std::map<int, int> tf;
    for (const std::string &subword : doc.subwords) {
      auto [it, inserted] =
          term_ids.emplace(subword, static_cast<int>(space.terms.size()));
      if (inserted) {
        space.terms.push_back(subword);
        df.push_back(0);
      }
      ++tf[it->second];
    }
    for (const auto &[term, count] : tf) ++df[term];
    return tf;
  };
  std::vector<std::map<int, int>> counts;
  counts.reserve(candidates.size() + 1);
  for (const Candidate &candidate : candidates) {
    counts.push_back(count_terms(candidate));
  }
  counts.push_back(count_terms(anchor));

  const double num_docs = static_cast<double>(counts.size());
  std::vector<double> idf(df.size());
  for (size_t t = 0; t < df.size(); ++t) {
    idf[t] = std::log((1.0 + num_docs) / (1.0 + df[t])) + 1.0;
  }

  const auto vectorize = [&](const std::map<int, int> &tf) {
    std::vector<std::pair<int, double>> entries;
    entries.reserve(tf.size());
    double sum = 0.0;
    for (const auto &[term, count] : tf) {
      const double weight = count * idf[term];
      entries.emplace_back(term, weight);
      sum += weight * weight;
    }
    if (sum > 0.0) {
      const double scale = 1.0 / std::sqrt(sum);
      for (auto &entry : entries) entry.second *= scale;
    }
    return TfIdfVector(std::move(entries));
  };
  space.candidates.reserve(candidates.size());
  for (size_t d = 0; d < candidates.size(); ++d) {
    space.candidates.push_back(vectorize(counts[d]));
  }
  space.anchor = vectorize(counts.back());
  return space;
}

double Cosine(const TfIdfVector &u, const TfIdfVector &v) {
  if (u.norm() <= 0.0 || v.norm() <= 0.0) {
    throw Error(ErrorKind::kDegenerate, "cosine of a zero-norm vector");
  }
  const double cosine = u.Dot(v) / (u.norm() * v.norm());
  return std::clamp(cosine, 0.0, 1.0);
}

const char *StrategyName(Strategy strategy) {
  switch (strategy) {
    case Strategy::kRandom: return "random";
    case Strategy::kCosSim: return "cossim";
    case Strategy::kKMeans: return "kmeans";
  }
  return "?";
}

Strategy ParseStrategy(const std::string &name) {
  if (name == "random") return Strategy::kRandom;
  if (name == "cossim" || name == "cos-sim") return Strategy::kCosSim;
  if (name == "kmeans" || name == "k-means") return Strategy::kKMeans;
  throw Error(ErrorKind::kContract, "unknown strategy '" + name + "'");
}

namespace {

// Similarities and distances this close count as ties, so rounding noise
// never overrides the lowest-candidate_index rule.
constexpr double kTieEpsilon = 1e-12;

void CheckPool(const std::vector<Candidate> &candidates, int k) {
  if (candidates.empty()) {
    throw Error(ErrorKind::kContract, "empty candidate pool");
  }
  if (k < 1) throw Error(ErrorKind::kContract, "K must be at least 1");
}

std::vector<Candidate> ByCandidateIndex(std::vector<Candidate> selected) {
  std::sort(selected.begin(), selected.end(),
            [](const Candidate &a, const Candidate &b) {
              return a.candidate_index < b.candidate_index;
            });
  return selected;
}

}  // namespace

std::vector<Candidate> SelectRandom(const std::vector<Candidate> &candidates,
                                    int k, Rng &rng) {
  CheckPool(candidates, k);
  const size_t count = std::min<size_t>(k, candidates.size());
  std::vector<size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  // Partial Fisher-Yates.
  for (size_t i = 0; i < count; ++i) {
    const size_t j = i + rng.Uniform(order.size() - i);
    std::swap(order[i], order[j]);
  }
  std::vector<Candidate> selected;
  selected.reserve(count);
  for (size_t i = 0; i < count; ++i) selected.push_back(candidates[order[i]]);
  return ByCandidateIndex(std::move(selected));
}

std::vector<Candidate> SelectCosSim(const std::vector<Candidate> &candidates,
                                    const Candidate &anchor, int k) {
  CheckPool(candidates, k);
  const TfIdfSpace space = BuildTfIdf(candidates, anchor);
  const size_t pool = candidates.size();
  const size_t count = std::min<size_t>(k, pool);

  // score[i]: maximum similarity of candidate i to the anchor and every
  // candidate selected so far.
  std::vector<double> score(pool);
  for (size_t i = 0; i < pool; ++i) {
    score[i] = Cosine(space.candidates[i], space.anchor);
  }
  std::vector<bool> taken(pool, false);
  std::vector<Candidate> selected;
  selected.reserve(count);
  while (selected.size() < count) {
    size_t best = pool;
    for (size_t i = 0; i < pool; ++i) {
      if (taken[i]) continue;
      if (best == pool || score[i] < score[best] - kTieEpsilon ||
          (score[i] <= score[best] + kTieEpsilon &&
           candidates[i].candidate_index < candidates[best].candidate_index)) {
        best = i;
      }
    }
    taken[best] = true;
    selected.push_back(candidates[best]);
    for (size_t i = 0; i < pool; ++i) {
      if (taken[i]) continue;
      score[i] = std::max(score[i],
                          Cosine(space.candidates[i], space.candidates[best]));
    }
  }
  return selected;
}

namespace {

double SquaredNorm(const std::vector<double> &v) {
  double sum = 0.0;
  for (double x : v) sum += x * x;
  return sum;
}

double SparseDenseDot(const TfIdfVector &x, const std::vector<double> &c) {
  double dot = 0.0;
  for (const auto &[term, weight] : x.entries()) dot += weight * c[term];
  return dot;
}

// Squared Euclidean distance, clamped at zero against rounding.
double SquaredDistance(const TfIdfVector &x, const std::vector<double> &c,
                       double c_squared_norm) {
  const double d = x.norm() * x.norm() + c_squared_norm -
                   2.0 * SparseDenseDot(x, c);
  return std::max(d, 0.0);
}

std::vector<double> Densify(const TfIdfVector &x, size_t dims) {
  std::vector<double> dense(dims, 0.0);
  for (const auto &[term, weight] : x.entries()) dense[term] = weight;
  return dense;
}

}  // namespace

Clustering KMeansCluster(const std::vector<Candidate> &candidates,
                         const Candidate &anchor, int k, int max_iters,
                         uint64_t seed) {
  CheckPool(candidates, k);
  const size_t pool = candidates.size();
  if (pool <= static_cast<size_t>(k)) {
    throw Error(ErrorKind::kContract, "K-means needs more candidates than K");
  }
  const TfIdfSpace space = BuildTfIdf(candidates, anchor);
  const std::vector<TfIdfVector> &points = space.candidates;
  const size_t dims = space.terms.size();
  Rng rng(seed);

  // k-means++ seeding.
  Clustering result;
  std::vector<bool> is_center(pool, false);
  std::vector<double> nearest(pool, std::numeric_limits<double>::infinity());
  size_t first = rng.Uniform(pool);
  for (int c = 0; c < k; ++c) {
    size_t chosen = first;
    if (c > 0) {
      double total = 0.0;
      for (size_t i = 0; i < pool; ++i) total += nearest[i];
      chosen = pool;
      if (total > 0.0) {
        const double target = rng.NextDouble() * total;
        double cumulative = 0.0;
        for (size_t i = 0; i < pool; ++i) {
          if (nearest[i] <= 0.0) continue;
          cumulative += nearest[i];
          chosen = i;
          if (cumulative > target) break;
        }
      } else {
        // Every point coincides with a center already.
        for (size_t i = 0; i < pool && chosen == pool; ++i) {
          if (!is_center[i]) chosen = i;
        }
      }
    }
    is_center[chosen] = true;
    result.centroids.push_back(Densify(points[chosen], dims));
    const std::vector<double> &centroid = result.centroids.back();
    const double squared_norm = SquaredNorm(centroid);
    for (size_t i = 0; i < pool; ++i) {
      nearest[i] =
          std::min(nearest[i], SquaredDistance(points[i], centroid,
                                               squared_norm));
    }
  }

  std::vector<int> &assignment = result.assignment;
  assignment.assign(pool, 0);
  std::vector<double> distance(pool);
  const int rounds = std::max(max_iters, 1);
  for (int iter = 0; iter < rounds; ++iter) {
    std::vector<double> squared_norms(k);
    for (int c = 0; c < k; ++c) {
      squared_norms[c] = SquaredNorm(result.centroids[c]);
    }
    std::vector<int> sizes(k, 0);
    for (size_t i = 0; i < pool; ++i) {
      int best = 0;
      double best_distance = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double d =
            SquaredDistance(points[i], result.centroids[c], squared_norms[c]);
        if (d < best_distance) {
          best_distance = d;
          best = c;
        }
      }
      assignment[i] = best;
      distance[i] = best_distance;
      ++sizes[best];
    }

    // Reseed empty clusters with the point farthest from its centroid,
    // taken from a cluster that can spare it.
    for (int c = 0; c < k; ++c) {
      if (sizes[c] > 0) continue;
      size_t farthest = pool;
      for (size_t i = 0; i < pool; ++i) {
        if (sizes[assignment[i]] < 2) continue;
        if (farthest == pool || distance[i] > distance[farthest]) farthest = i;
      }
      --sizes[assignment[farthest]];
      assignment[farthest] = c;
      distance[farthest] = 0.0;
      sizes[c] = 1;
    }

    std::vector<std::vector<double>> updated(k, std::vector<double>(dims, 0.0));
    for (size_t i = 0; i < pool; ++i) {
      std::vector<double> &sum = updated[assignment[i]];
      for (const auto &[term, weight] : points[i].entries()) {
        sum[term] += weight;
      }
    }
    double movement = 0.0;
    for (int c = 0; c < k; ++c) {
      double shift = 0.0;
      for (size_t t = 0; t < dims; ++t) {
        updated[c][t] /= sizes[c];
        const double delta = updated[c][t] - result.centroids[c][t];
        shift += delta * delta;
      }
      movement = std::max(movement, std::sqrt(shift));
    }
    result.centroids = std::move(updated);
    result.iterations = iter + 1;
    if (movement < 1e-9) break;
  }

  result.representatives.assign(k, -1);
  std::vector<double> best_distance(k,
                                    std::numeric_limits<double>::infinity());
  for (int c = 0; c < k; ++c) {
    const double squared_norm = SquaredNorm(result.centroids[c]);
    for (size_t i = 0; i < pool; ++i) {
      if (assignment[i] != c) continue;
      const double d =
          SquaredDistance(points[i], result.centroids[c], squared_norm);
      int &rep = result.representatives[c];
      if (rep < 0 || d < best_distance[c] - kTieEpsilon ||
          (d <= best_distance[c] + kTieEpsilon &&
           candidates[i].candidate_index < candidates[rep].candidate_index)) {
        rep = static_cast<int>(i);
        best_distance[c] = d;
      }
    }
  }
  return result;
}

std::vector<Candidate> SelectKMeans(const std::vector<Candidate> &candidates,
                                    const Candidate &anchor,
                                    const SelectionConfig &config) {
  CheckPool(candidates, config.k);
  if (candidates.size() <= static_cast<size_t>(config.k)) {
    return ByCandidateIndex(candidates);
  }
  const Clustering clustering =
      KMeansCluster(candidates, anchor, config.k, config.kmeans_max_iters,
                    config.seed);
  std::vector<Candidate> selected;
  selected.reserve(config.k);
  for (int rep : clustering.representatives) {
    selected.push_back(candidates[rep]);
  }
  return ByCandidateIndex(std::move(selected));
}

std::vector<Candidate> Select(const std::vector<Candidate> &candidates,
                              const Candidate &anchor,
                              const SelectionConfig &config) {
  switch (config.strategy) {
    case Strategy::kRandom: {
      Rng rng(config.seed);
      return SelectRandom(candidates, config.k, rng);
    }
    case Strategy::kCosSim:
      return SelectCosSim(candidates, anchor, config.k);
    case Strategy::kKMeans:
      return SelectKMeans(candidates, anchor, config);
  }
  throw Error(ErrorKind::kContract, "unknown strategy");
}

}  // namespace subregweigh
