#ifndef SUBREGWEIGH_CORPUS_H_
#define SUBREGWEIGH_CORPUS_H_

#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <vector>

namespace subregweigh {

enum class Task { kNer, kClassification };
enum class TagScheme { kIob1, kIob2 };

// One labeled training example. For NER, labels holds one tag per word; for
// classification it holds exactly one class label.
struct Sample {
  int id = 0;
  std::vector<std::string> words;
  std::vector<std::string> labels;
  bool doc_boundary = false;

  const std::string &label() const { return labels.front(); }
};

// Immutable once loaded.
struct Corpus {
  Task task = Task::kNer;
  std::vector<Sample> samples;
  std::set<std::string> label_set;

  size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  size_t TotalLabels() const;

  // Builds a corpus from parallel word/label lists, assigning ids 0..n-1 and
  // recomputing label_set.
  static Corpus FromSamples(Task task, std::vector<Sample> samples);
};

// A parsed tag: "O", "B-TYPE" or "I-TYPE".
struct Tag {
  char prefix = 'O';  // 'O', 'B' or 'I'
  std::string type;

  bool is_outside() const { return prefix == 'O'; }
  std::string str() const;
};

// Throws Error(kFormat) naming the tag if it is not O / B-x / I-x.
Tag ParseTag(const std::string &tag);

struct Iob2Violation {
  int position = 0;
  std::string reason;
};

// Empty iff every I-x follows B-x or I-x of the same type. Unparseable tags
// are reported as violations too.
std::vector<Iob2Violation> ValidateIob2(const std::vector<std::string> &labels);

// An IOB1 entity starts at an I-x that does not continue an x entity, or at
// B-x (which IOB1 reserves for splitting adjacent same-type entities).
std::vector<std::string> Iob1ToIob2(const std::vector<std::string> &labels);

// Replaces every I-x that does not continue an x entity with B-x.
std::vector<std::string> RepairIob2(std::vector<std::string> labels);

Corpus ReadConll(std::istream &in, TagScheme scheme = TagScheme::kIob2);
Corpus ReadClassificationTsv(std::istream &in);

// Native-format writers. CoNLL output uses two columns, "word tag", and
// emits -DOCSTART- before samples with doc_boundary set.
void WriteConll(const Corpus &corpus, std::ostream &out);
void WriteClassificationTsv(const Corpus &corpus, std::ostream &out);

struct WeightEntry {
  double weight = 1.0;
  int agreement_count = 0;
  int k_effective = 1;

  // C / k_effective, before the w_min floor.
  double raw_ratio() const {
    return static_cast<double>(agreement_count) / k_effective;
  }
};

// Keyed by sample id.
using WeightTable = std::map<int, WeightEntry>;

enum class WeightFormat { kSidecar, kInline };

// SIDECAR: "id\tweight\tC\tk_effective" per sample, weight to 6 decimals.
// INLINE: the corpus in its native format with "# weight=<w>" before each
// sample. Throws Error(kConsistency) if a sample id has no entry.
void WriteWeighted(const Corpus &corpus, const WeightTable &weights,
                   std::ostream &out, WeightFormat format);

// Reads a SIDECAR file back.
WeightTable ReadWeightSidecar(std::istream &in);

std::string FormatWeight(double weight);

}  // namespace subregweigh

#endif  // SUBREGWEIGH_CORPUS_H_
