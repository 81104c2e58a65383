#ifndef SUBREGWEIGH_NOISE_H_
#define SUBREGWEIGH_NOISE_H_

#include <cstdint>
#include <istream>
#include <ostream>
#include <set>
#include <utility>
#include <vector>

#include "subregweigh/corpus.h"
#include "subregweigh/random.h"

namespace subregweigh {

struct InjectionConfig {
  double target_fraction = 0.10;
  uint64_t seed = 0;
};

struct InjectionResult {
  Corpus corpus;
  // Positions whose label differs from the original.
  std::set<std::pair<int, int>> changed_token_positions;
  std::set<int> touched_sample_ids;
  size_t total_labels = 0;
  size_t target_changes = 0;
  // False when the budget could not be reached within tolerance.
  bool budget_reached = true;

  double changed_fraction() const {
    return total_labels == 0
               ? 0.0
               : static_cast<double>(changed_token_positions.size()) /
                     total_labels;
  }
};

// Allowed absolute deviation, in labels, between the number of changed
// labels and the target: max(1, 0.5% of all labels).
double InjectionTolerance(size_t total_labels);

// Flips one label in place following the IOB2-preserving replacement rules
// and returns the positions whose label was rewritten (the flipped position
// first). new_label must be O or B-x.
std::vector<int> FlipLabel(std::vector<std::string> &labels, int position,
                           const std::string &new_label);

// Replaces labels of a valid IOB2 NER corpus until target_fraction of all
// labels differ from the original. Each round picks an unchanged position
// and a new label among {B-x for every observed type} and O, excluding the
// current label, then repairs the following tags so the sequence stays
// valid. Throws Error(kContract) for a corpus without labels or an invalid
// fraction.
InjectionResult Inject(const Corpus &corpus, const InjectionConfig &config);

// "# changed_labels=<n> total=<m>" then one touched sample id per line.
void WriteMask(const InjectionResult &result, std::ostream &out);
std::set<int> ReadMask(std::istream &in);

}  // namespace subregweigh

#endif  // SUBREGWEIGH_NOISE_H_
