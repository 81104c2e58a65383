#include "subregweigh/tokenizer.h"

#include <algorithm>
#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include "subregweigh/error.h"
#include "subregweigh/utf8.h"

namespace subregweigh {

// ---------------------------------------------------------------- BpeVocab

int BpeVocab::Intern(const std::string &token) {
  auto [it, inserted] =
      symbol_ids_.emplace(token, static_cast<int>(symbols_.size()));
  if (inserted) symbols_.push_back(token);
  return it->second;
}

int BpeVocab::Lookup(std::string_view token) const {
  auto it = symbol_ids_.find(std::string(token));
  return it == symbol_ids_.end() ? -1 : it->second;
}

bool BpeVocab::Contains(std::string_view token) const {
  return Lookup(token) >= 0;
}

BpeVocab BpeVocab::FromMerges(const std::vector<Merge> &merges,
                              std::string word_marker) {
  std::vector<std::string> tokens;
  if (!word_marker.empty()) tokens.push_back(word_marker);
  for (const Merge &merge : merges) {
    for (const std::string &part : SplitUtf8(merge.left)) tokens.push_back(part);
    for (const std::string &part : SplitUtf8(merge.right)) {
      tokens.push_back(part);
    }
    tokens.push_back(merge.left);
    tokens.push_back(merge.right);
    tokens.push_back(merge.left + merge.right);
  }
  return FromMergesAndTokens(merges, tokens, std::move(word_marker));
}

BpeVocab BpeVocab::FromMergesAndTokens(const std::vector<Merge> &merges,
                                       const std::vector<std::string> &tokens,
                                       std::string word_marker) {
  BpeVocab vocab;
  vocab.word_marker_ = std::move(word_marker);
  for (const std::string &token : tokens) {
    if (token.empty()) throw Error(ErrorKind::kFormat, "empty token");
    if (!IsValidUtf8(token)) {
      throw Error(ErrorKind::kEncoding, "token is not valid UTF-8");
    }
    vocab.Intern(token);
  }
  if (!vocab.word_marker_.empty() && !vocab.Contains(vocab.word_marker_)) {
    throw Error(ErrorKind::kConsistency,
                "word marker '" + vocab.word_marker_ + "' is not a token");
  }
  for (size_t rank = 0; rank < merges.size(); ++rank) {
    const Merge &merge = merges[rank];
    const int left = vocab.Lookup(merge.left);
    const int right = vocab.Lookup(merge.right);
    const int result = vocab.Lookup(merge.left + merge.right);
    if (left < 0 || right < 0 || result < 0) {
      throw Error(ErrorKind::kConsistency,
                  "merge " + std::to_string(rank) + " (" + merge.left + " " +
                      merge.right + ") uses a token outside the inventory");
    }
    MergeInfo info{static_cast<int>(rank), result};
    if (!vocab.merge_index_.emplace(PairKey(left, right), info).second) {
      throw Error(ErrorKind::kFormat, "duplicate merge (" + merge.left + " " +
                                          merge.right + ") at rank " +
                                          std::to_string(rank));
    }
  }
  vocab.merges_ = merges;
  return vocab;
}

std::vector<BpeVocab::Merge> BpeVocab::ReadMerges(std::istream &in) {
  std::vector<Merge> merges;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    Merge merge;
    std::string extra;
    if (!(fields >> merge.left >> merge.right) || (fields >> extra)) {
      throw ParseError(ErrorKind::kParse, line_number,
                       "expected 'left right'");
    }
    merges.push_back(std::move(merge));
  }
  return merges;
}

std::vector<std::string> BpeVocab::ReadTokenJson(std::istream &in) {
  nlohmann::json json;
  try {
    in >> json;
  } catch (const nlohmann::json::exception &e) {
    throw Error(ErrorKind::kParse, std::string("vocab JSON: ") + e.what());
  }
  if (!json.is_object()) {
    throw Error(ErrorKind::kFormat, "vocab JSON must map token -> id");
  }
  std::vector<std::pair<long, std::string>> by_id;
  for (auto it = json.begin(); it != json.end(); ++it) {
    if (!it.value().is_number_integer()) {
      throw Error(ErrorKind::kFormat,
                  "vocab JSON id for '" + it.key() + "' is not an integer");
    }
    by_id.emplace_back(it.value().get<long>(), it.key());
  }
  std::sort(by_id.begin(), by_id.end());
  std::vector<std::string> tokens;
  tokens.reserve(by_id.size());
  for (auto &[id, token] : by_id) tokens.push_back(std::move(token));
  return tokens;
}

std::vector<int> BpeVocab::InitialSymbols(std::string_view word) const {
  std::vector<int> symbols;
  if (!word_marker_.empty()) symbols.push_back(Lookup(word_marker_));
  for (const std::string &ch : SplitUtf8(word)) {
    const int id = Lookup(ch);
    if (id < 0) {
      throw Error(ErrorKind::kUnknownSymbol,
                  "character '" + ch + "' in '" + std::string(word) +
                      "' is not in the BPE alphabet");
    }
    symbols.push_back(id);
  }
  return symbols;
}

// ---------------------------------------------------------------- BPE

namespace {

std::vector<std::string> ToStrings(const std::vector<int> &symbols,
                                   const BpeVocab &vocab) {
  std::vector<std::string> out;
  out.reserve(symbols.size());
  for (int id : symbols) out.push_back(vocab.Symbol(id));
  return out;
}

void MergeAt(std::vector<int> &symbols, size_t pos, int result) {
  symbols[pos] = result;
  symbols.erase(symbols.begin() + pos + 1);
}

void CheckWord(std::string_view word) {
  if (word.empty()) throw Error(ErrorKind::kContract, "empty word");
}

}  // namespace

std::vector<std::string> BpeEncode(std::string_view word,
                                   const BpeVocab &vocab) {
  CheckWord(word);
  std::vector<int> symbols = vocab.InitialSymbols(word);
  while (symbols.size() > 1) {
    const BpeVocab::MergeInfo *best = nullptr;
    size_t best_pos = 0;
    for (size_t i = 0; i + 1 < symbols.size(); ++i) {
      const BpeVocab::MergeInfo *m = vocab.FindMerge(symbols[i], symbols[i + 1]);
      if (m != nullptr && (best == nullptr || m->rank < best->rank)) {
        best = m;
        best_pos = i;
      }
    }
    if (best == nullptr) break;
    MergeAt(symbols, best_pos, best->result);
  }
  return ToStrings(symbols, vocab);
}

std::vector<std::string> BpeDropoutEncode(std::string_view word,
                                          const BpeVocab &vocab, double p,
                                          Rng &rng) {
  CheckWord(word);
  std::vector<int> symbols = vocab.InitialSymbols(word);
  struct Occurrence {
    int rank;
    size_t pos;
    int result;
  };
  std::vector<Occurrence> occurrences;
  while (symbols.size() > 1) {
    occurrences.clear();
    for (size_t i = 0; i + 1 < symbols.size(); ++i) {
      const BpeVocab::MergeInfo *m = vocab.FindMerge(symbols[i], symbols[i + 1]);
      if (m != nullptr) occurrences.push_back({m->rank, i, m->result});
    }
    std::sort(occurrences.begin(), occurrences.end(),
              [](const Occurrence &a, const Occurrence &b) {
                return a.rank != b.rank ? a.rank < b.rank : a.pos < b.pos;
              });
    const Occurrence *chosen = nullptr;
    for (const Occurrence &occurrence : occurrences) {
      if (!rng.Bernoulli(p)) {
        chosen = &occurrence;
        break;
      }
    }
    if (chosen == nullptr) break;
    MergeAt(symbols, chosen->pos, chosen->result);
  }
  return ToStrings(symbols, vocab);
}

// ---------------------------------------------------------------- WordPiece

WordPieceVocab::WordPieceVocab(std::vector<std::string> tokens,
                               std::string continuation_prefix,
                               std::string unk_token)
    : prefix_(std::move(continuation_prefix)), unk_(std::move(unk_token)) {
  for (std::string &token : tokens) {
    if (!IsValidUtf8(token)) {
      throw Error(ErrorKind::kEncoding, "token is not valid UTF-8");
    }
    std::string_view body = token;
    if (!prefix_.empty() && body.substr(0, prefix_.size()) == prefix_) {
      body.remove_prefix(prefix_.size());
    }
    max_chars_ = std::max(max_chars_, Utf8Length(body));
    tokens_.emplace(std::move(token), static_cast<int>(tokens_.size()));
  }
}

std::vector<std::string> WordPieceVocab::ReadTokens(std::istream &in) {
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) tokens.push_back(line);
  }
  return tokens;
}

bool WordPieceVocab::Contains(std::string_view token) const {
  return tokens_.find(std::string(token)) != tokens_.end();
}

namespace {

// Lengths (in characters) of all vocabulary pieces matching at start,
// longest first.
std::vector<size_t> MatchesAt(const std::vector<std::string> &chars,
                              size_t start, const WordPieceVocab &vocab) {
  std::vector<size_t> lengths;
  const size_t longest =
      std::min(chars.size() - start, vocab.max_token_chars());
  std::string piece;
  for (size_t length = longest; length >= 1; --length) {
    piece = start > 0 ? vocab.continuation_prefix() : "";
    for (size_t i = start; i < start + length; ++i) piece += chars[i];
    if (vocab.Contains(piece)) lengths.push_back(length);
  }
  return lengths;
}

std::string Piece(const std::vector<std::string> &chars, size_t start,
                  size_t length, const WordPieceVocab &vocab) {
  std::string piece = start > 0 ? vocab.continuation_prefix() : "";
  for (size_t i = start; i < start + length; ++i) piece += chars[i];
  return piece;
}

}  // namespace

std::vector<std::string> MaxMatchEncode(std::string_view word,
                                        const WordPieceVocab &vocab) {
  CheckWord(word);
  const std::vector<std::string> chars = SplitUtf8(word);
  std::vector<std::string> pieces;
  size_t start = 0;
  while (start < chars.size()) {
    const std::vector<size_t> matches = MatchesAt(chars, start, vocab);
    if (matches.empty()) return {vocab.unk_token()};
    pieces.push_back(Piece(chars, start, matches.front(), vocab));
    start += matches.front();
  }
  return pieces;
}

std::vector<std::string> MaxMatchDropoutEncode(std::string_view word,
                                               const WordPieceVocab &vocab,
                                               double p, Rng &rng) {
  CheckWord(word);
  const std::vector<std::string> chars = SplitUtf8(word);
  std::vector<std::string> pieces;
  size_t start = 0;
  while (start < chars.size()) {
    const std::vector<size_t> matches = MatchesAt(chars, start, vocab);
    if (matches.empty()) return {vocab.unk_token()};
    size_t chosen = matches.back();
    for (size_t i = 0; i + 1 < matches.size(); ++i) {
      if (matches[i] == 1 || !rng.Bernoulli(p)) {
        chosen = matches[i];
        break;
      }
    }
    pieces.push_back(Piece(chars, start, chosen, vocab));
    start += chosen;
  }
  return pieces;
}

// ---------------------------------------------------------------- Tokenizer

std::vector<std::string> Tokenizer::Encode(std::string_view word) const {
  if (is_bpe()) return BpeEncode(word, bpe());
  return MaxMatchEncode(word, wordpiece());
}

std::vector<std::string> Tokenizer::EncodeRegularized(std::string_view word,
                                                      double p,
                                                      Rng &rng) const {
  if (is_bpe()) return BpeDropoutEncode(word, bpe(), p, rng);
  return MaxMatchDropoutEncode(word, wordpiece(), p, rng);
}

std::string_view Tokenizer::Surface(std::string_view piece,
                                    bool is_first) const {
  const std::string &marker =
      is_bpe() ? bpe().word_marker() : wordpiece().continuation_prefix();
  const bool strip = is_bpe() ? is_first : !is_first;
  if (strip && !marker.empty() && piece.substr(0, marker.size()) == marker) {
    piece.remove_prefix(marker.size());
  }
  return piece;
}

namespace {

template <typename EncodeFn>
Candidate BuildCandidate(const std::vector<std::string> &words,
                         EncodeFn &&encode) {
  Candidate candidate;
  candidate.word_starts.reserve(words.size());
  for (const std::string &word : words) {
    candidate.word_starts.push_back(
        static_cast<int>(candidate.subwords.size()));
    for (std::string &piece : encode(word)) {
      candidate.subwords.push_back(std::move(piece));
    }
  }
  return candidate;
}

}  // namespace

Candidate TokenizeSample(const std::vector<std::string> &words,
                         const Tokenizer &tokenizer) {
  return BuildCandidate(
      words, [&](const std::string &word) { return tokenizer.Encode(word); });
}

Candidate TokenizeSample(const std::vector<std::string> &words,
                         const Tokenizer &tokenizer, double p, Rng &rng) {
  return BuildCandidate(words, [&](const std::string &word) {
    return tokenizer.EncodeRegularized(word, p, rng);
  });
}

std::vector<std::string> Detokenize(const Candidate &candidate,
                                    const Tokenizer &tokenizer) {
  std::vector<std::string> words;
  words.reserve(candidate.num_words());
  for (size_t w = 0; w < candidate.num_words(); ++w) {
    const size_t begin = candidate.word_starts[w];
    const size_t end = w + 1 < candidate.num_words()
                           ? candidate.word_starts[w + 1]
                           : candidate.subwords.size();
    std::string word;
    for (size_t i = begin; i < end; ++i) {
      word += tokenizer.Surface(candidate.subwords[i], i == begin);
    }
    words.push_back(std::move(word));
  }
  return words;
}

std::vector<Candidate> SampleCandidates(const std::vector<std::string> &words,
                                        const Tokenizer &tokenizer, double p,
                                        int n, uint64_t seed,
                                        std::optional<int> max_draws) {
  if (n < 1) throw Error(ErrorKind::kContract, "N must be at least 1");
  const long budget = max_draws ? *max_draws : 20L * n;
  Rng rng(seed);
  std::vector<Candidate> found;
  std::unordered_set<std::string> seen;
  std::string key;
  for (long draw = 0; draw < budget && static_cast<int>(found.size()) < n;
       ++draw) {
    Candidate candidate = TokenizeSample(words, tokenizer, p, rng);
    // Subword boundaries are implied by the words, so the joined sequence
    // identifies the segmentation.
    key.clear();
    for (const std::string &subword : candidate.subwords) {
      key += subword;
      key += '\x1f';
    }
    if (!seen.insert(key).second) continue;
    candidate.candidate_index = static_cast<int>(found.size());
    found.push_back(std::move(candidate));
  }
  return found;
}

}  // namespace subregweigh
