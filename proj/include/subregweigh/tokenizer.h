#ifndef SUBREGWEIGH_TOKENIZER_H_
#define SUBREGWEIGH_TOKENIZER_H_

#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "subregweigh/random.h"

namespace subregweigh {

// Character-level BPE over UTF-8 scalar values. Symbols are interned; a merge
// of (left, right) has rank equal to its position in the merge list.
class BpeVocab {
 public:
  struct Merge {
    std::string left;
    std::string right;
  };

  // Builds a vocabulary from merges alone: the token inventory becomes every
  // merge operand and result. word_marker, when non-empty, is prepended to
  // every word as its own initial symbol and must itself be a token.
  static BpeVocab FromMerges(const std::vector<Merge> &merges,
                             std::string word_marker = "");

  // tokens is an explicit inventory (e.g. the keys of a vocab.json). Every
  // merge operand and result must be in it.
  static BpeVocab FromMergesAndTokens(const std::vector<Merge> &merges,
                                      const std::vector<std::string> &tokens,
                                      std::string word_marker = "");

  // "left right" per line, '#' lines skipped.
  static std::vector<Merge> ReadMerges(std::istream &in);
  // JSON object mapping token -> id.
  static std::vector<std::string> ReadTokenJson(std::istream &in);

  size_t num_merges() const { return merges_.size(); }
  const std::vector<Merge> &merges() const { return merges_; }
  const std::string &word_marker() const { return word_marker_; }
  bool Contains(std::string_view token) const;
  const std::string &Symbol(int id) const { return symbols_[id]; }

  // Symbol id of a single token, or -1.
  int Lookup(std::string_view token) const;

  // Initial symbol ids for a word (marker + characters). Throws
  // Error(kUnknownSymbol) for characters outside the inventory.
  std::vector<int> InitialSymbols(std::string_view word) const;

  struct MergeInfo {
    int rank = 0;
    int result = 0;
  };
  // Merge for the adjacent pair (left, right), if any.
  const MergeInfo *FindMerge(int left, int right) const {
    auto it = merge_index_.find(PairKey(left, right));
    return it == merge_index_.end() ? nullptr : &it->second;
  }

 private:
  static uint64_t PairKey(int left, int right) {
    return (static_cast<uint64_t>(static_cast<uint32_t>(left)) << 32) |
           static_cast<uint32_t>(right);
  }
  int Intern(const std::string &token);

  std::vector<Merge> merges_;
  std::string word_marker_;
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, int> symbol_ids_;
  std::unordered_map<uint64_t, MergeInfo> merge_index_;
};

class WordPieceVocab {
 public:
  WordPieceVocab() = default;
  WordPieceVocab(std::vector<std::string> tokens,
                 std::string continuation_prefix = "##",
                 std::string unk_token = "[UNK]");

  // One token per line; blank lines skipped.
  static std::vector<std::string> ReadTokens(std::istream &in);

  bool Contains(std::string_view token) const;
  const std::string &continuation_prefix() const { return prefix_; }
  const std::string &unk_token() const { return unk_; }
  size_t max_token_chars() const { return max_chars_; }

 private:
  std::unordered_map<std::string, int> tokens_;
  std::string prefix_ = "##";
  std::string unk_ = "[UNK]";
  size_t max_chars_ = 0;
};

enum class RegularizationScheme { kBpeDropout, kMaxMatchDropout };

struct RegularizationConfig {
  double p = 0.1;
  uint64_t seed = 0;
  RegularizationScheme scheme = RegularizationScheme::kBpeDropout;
};

// Greedy lowest-rank merging until no merge applies.
std::vector<std::string> BpeEncode(std::string_view word, const BpeVocab &vocab);

// BPE-Dropout. Each round orders the applicable merge occurrences by
// (rank, position) and draws one Bernoulli(p) per occurrence in that order;
// the first occurrence that is not dropped is merged. When every occurrence
// of a round is dropped, encoding stops.
std::vector<std::string> BpeDropoutEncode(std::string_view word,
                                          const BpeVocab &vocab, double p,
                                          Rng &rng);

// Greedy longest match from the left; the whole word becomes the unk token
// if some position has no matching piece.
std::vector<std::string> MaxMatchEncode(std::string_view word,
                                        const WordPieceVocab &vocab);

// MaxMatch-Dropout: at each position the matches are tried longest first and
// each is rejected with probability p. A single-character match, or the
// shortest match when none is a single character, is never rejected.
std::vector<std::string> MaxMatchDropoutEncode(std::string_view word,
                                               const WordPieceVocab &vocab,
                                               double p, Rng &rng);

// Either vocabulary kind; the scheme is implied by the alternative held.
class Tokenizer {
 public:
  explicit Tokenizer(BpeVocab vocab) : vocab_(std::move(vocab)) {}
  explicit Tokenizer(WordPieceVocab vocab) : vocab_(std::move(vocab)) {}

  bool is_bpe() const { return std::holds_alternative<BpeVocab>(vocab_); }
  const BpeVocab &bpe() const { return std::get<BpeVocab>(vocab_); }
  const WordPieceVocab &wordpiece() const {
    return std::get<WordPieceVocab>(vocab_);
  }
  RegularizationScheme scheme() const {
    return is_bpe() ? RegularizationScheme::kBpeDropout
                    : RegularizationScheme::kMaxMatchDropout;
  }

  std::vector<std::string> Encode(std::string_view word) const;
  std::vector<std::string> EncodeRegularized(std::string_view word, double p,
                                             Rng &rng) const;

  // Strips the word marker (BPE) or continuation prefix (WordPiece) from a
  // piece of a word; is_first tells whether it starts the word.
  std::string_view Surface(std::string_view piece, bool is_first) const;

 private:
  std::variant<BpeVocab, WordPieceVocab> vocab_;
};

// One tokenization of a sample.
struct Candidate {
  std::vector<std::string> subwords;
  // Index of each source word's first subword; strictly increasing.
  std::vector<int> word_starts;
  int sample_id = 0;
  int candidate_index = 0;

  size_t num_words() const { return word_starts.size(); }
  bool SameSegmentation(const Candidate &other) const {
    return subwords == other.subwords && word_starts == other.word_starts;
  }
};

// Deterministic tokenization of a word sequence.
Candidate TokenizeSample(const std::vector<std::string> &words,
                         const Tokenizer &tokenizer);

// Regularized tokenization; each word is encoded independently, so word
// boundaries always coincide with subword boundaries.
Candidate TokenizeSample(const std::vector<std::string> &words,
                         const Tokenizer &tokenizer, double p, Rng &rng);

// Rebuilds the source words from a candidate's subwords.
std::vector<std::string> Detokenize(const Candidate &candidate,
                                    const Tokenizer &tokenizer);

// Draws regularized tokenizations until n distinct subword sequences are
// found or max_draws draws are spent (default 20 * n). candidate_index
// follows discovery order. The deterministic tokenization is only included
// if a draw happens to reproduce it.
std::vector<Candidate> SampleCandidates(const std::vector<std::string> &words,
                                        const Tokenizer &tokenizer, double p,
                                        int n, uint64_t seed,
                                        std::optional<int> max_draws = {});

}  // namespace subregweigh

#endif  // SUBREGWEIGH_TOKENIZER_H_
