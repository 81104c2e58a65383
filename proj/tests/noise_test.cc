#include <cmath>
#include <sstream>

#include "doctest.h"
#include "error_kind.h"
#include "subregweigh/noise.h"
#include "synthetic.h"

using namespace subregweigh;
using Labels = std::vector<std::string>;

namespace {

Corpus OneSentence(Labels labels) {
  Sample sample;
  for (size_t i = 0; i < labels.size(); ++i) {
    sample.words.push_back("w" + std::to_string(i));
  }
  sample.labels = std::move(labels);
  return Corpus::FromSamples(Task::kNer, {sample});
}

}  // namespace

TEST_CASE("O to B-x does not touch a following B of another type") {
  Labels labels = {"O", "B-ORG"};
  CHECK(FlipLabel(labels, 0, "B-PER") == std::vector<int>{0});
  CHECK(labels == Labels{"B-PER", "B-ORG"});
  CHECK(ValidateIob2(labels).empty());
}

TEST_CASE("O to B-x joins a following B-x") {
  Labels labels = {"O", "B-ORG", "I-ORG"};
  CHECK(FlipLabel(labels, 0, "B-ORG") == std::vector<int>{0, 1});
  CHECK(labels == Labels{"B-ORG", "I-ORG", "I-ORG"});
  CHECK(ValidateIob2(labels).empty());
}

TEST_CASE("B-x to B-y relabels the rest of the entity") {
  Labels labels = {"B-LOC", "I-LOC", "I-LOC"};
  CHECK(FlipLabel(labels, 0, "B-PER") == std::vector<int>{0, 1, 2});
  CHECK(labels == Labels{"B-PER", "I-PER", "I-PER"});

  Labels inner = {"B-LOC", "I-LOC", "I-LOC", "O"};
  CHECK(FlipLabel(inner, 1, "B-PER") == std::vector<int>{1, 2});
  CHECK(inner == Labels{"B-LOC", "B-PER", "I-PER", "O"});
  CHECK(ValidateIob2(inner).empty());
}

TEST_CASE("B/I to O promotes the following I to B") {
  Labels labels = {"B-ORG", "I-ORG"};
  CHECK(FlipLabel(labels, 0, "O") == std::vector<int>{0, 1});
  CHECK(labels == Labels{"O", "B-ORG"});

  Labels middle = {"B-ORG", "I-ORG", "I-ORG"};
  CHECK(FlipLabel(middle, 1, "O") == std::vector<int>{1, 2});
  CHECK(middle == Labels{"B-ORG", "O", "B-ORG"});
}

TEST_CASE("flip_label rejects I targets") {
  Labels labels = {"O"};
  CHECK(KindOf([&] { FlipLabel(labels, 0, "I-PER"); }) ==
        ErrorKind::kContract);
}

TEST_CASE("every single flip keeps IOB2 valid") {
  Rng rng(3);
  const Labels targets = {"O", "B-PER", "B-LOC", "B-ORG"};
  for (int trial = 0; trial < 3000; ++trial) {
    const Corpus corpus = testing::RandomIob2Corpus(
        rng, 1, 1, 10, {"PER", "LOC", "ORG"});
    Labels labels = corpus.samples[0].labels;
    const int position = static_cast<int>(rng.Uniform(labels.size()));
    const std::string target = targets[rng.Uniform(targets.size())];
    const Labels before = labels;
    const auto rewritten = FlipLabel(labels, position, target);
    CHECK(ValidateIob2(labels).empty());
    for (size_t i = 0; i < labels.size(); ++i) {
      const bool listed =
          std::find(rewritten.begin(), rewritten.end(), static_cast<int>(i)) !=
          rewritten.end();
      CHECK(listed == (labels[i] != before[i]));
    }
  }
}

TEST_CASE("inject keeps IOB2 validity and the changed fraction") {
  Rng rng(5);
  for (int trial = 0; trial < 1000; ++trial) {
    const Corpus corpus = testing::RandomIob2Corpus(
        rng, 5 + static_cast<int>(rng.Uniform(40)), 2, 25,
        {"PER", "LOC", "ORG", "MISC"});
    const InjectionResult result = Inject(corpus, {0.10, static_cast<uint64_t>(trial)});
    for (const Sample &sample : result.corpus.samples) {
      CHECK(ValidateIob2(sample.labels).empty());
    }
    const double total = static_cast<double>(result.total_labels);
    CHECK(result.budget_reached);
    CHECK(std::fabs(result.changed_token_positions.size() - 0.10 * total) <=
          InjectionTolerance(result.total_labels));
    CHECK(result.target_changes ==
          static_cast<size_t>(std::ceil(0.10 * total)));

    // Changed positions are exactly the differing labels.
    size_t differing = 0;
    std::set<int> touched;
    for (size_t s = 0; s < corpus.size(); ++s) {
      for (size_t t = 0; t < corpus.samples[s].labels.size(); ++t) {
        if (corpus.samples[s].labels[t] != result.corpus.samples[s].labels[t]) {
          ++differing;
          touched.insert(corpus.samples[s].id);
          CHECK(result.changed_token_positions.count(
                    {corpus.samples[s].id, static_cast<int>(t)}) == 1);
        }
      }
      CHECK(result.corpus.samples[s].words == corpus.samples[s].words);
    }
    CHECK(differing == result.changed_token_positions.size());
    CHECK(touched == result.touched_sample_ids);
  }
}

TEST_CASE("inject only uses observed entity types") {
  Rng rng(9);
  const Corpus corpus = testing::RandomIob2Corpus(rng, 50, 3, 12, {"PER"});
  const InjectionResult result = Inject(corpus, {0.2, 1});
  for (const std::string &label : result.corpus.label_set) {
    CHECK((label == "O" || label == "B-PER" || label == "I-PER"));
  }
}

TEST_CASE("inject is deterministic under seed") {
  Rng rng(7);
  const Corpus corpus =
      testing::RandomIob2Corpus(rng, 100, 4, 15, {"PER", "LOC"});
  const InjectionResult a = Inject(corpus, {0.1, 42});
  const InjectionResult b = Inject(corpus, {0.1, 42});
  const InjectionResult c = Inject(corpus, {0.1, 43});
  CHECK(a.changed_token_positions == b.changed_token_positions);
  std::ostringstream first;
  std::ostringstream second;
  WriteConll(a.corpus, first);
  WriteConll(b.corpus, second);
  CHECK(first.str() == second.str());
  CHECK(a.changed_token_positions != c.changed_token_positions);
}

TEST_CASE("inject contract errors") {
  Rng rng(1);
  const Corpus corpus = testing::RandomIob2Corpus(rng, 3, 2, 4, {"PER"});
  CHECK(KindOf([&] { Inject(corpus, {0.0, 1}); }) == ErrorKind::kContract);
  CHECK(KindOf([&] { Inject(corpus, {1.0, 1}); }) == ErrorKind::kContract);
  CHECK(KindOf([&] { Inject(Corpus::FromSamples(Task::kNer, {}), {0.1, 1}); }) ==
        ErrorKind::kContract);
}

TEST_CASE("tiny corpora are best effort and flagged") {
  // An O-only corpus has no entity type to flip to.
  const InjectionResult result = Inject(OneSentence({"O", "O"}), {0.5, 1});
  CHECK_FALSE(result.budget_reached);
  CHECK(result.changed_token_positions.empty());

  const InjectionResult single = Inject(OneSentence({"B-PER", "O"}), {0.5, 1});
  CHECK(single.budget_reached);
  CHECK(single.changed_token_positions.size() >= 1);
  CHECK(ValidateIob2(single.corpus.samples[0].labels).empty());
}

TEST_CASE("sentence split at a CoNLL-like scale is loosely plausible") {
  const testing::SyntheticNer synthetic = testing::GenerateSyntheticNer(
      {.seed = 2, .num_words = 400, .num_sentences = 8000});
  const InjectionResult result = Inject(synthetic.corpus, {0.10, 3});
  const double touched = static_cast<double>(result.touched_sample_ids.size());
  const double untouched = synthetic.corpus.size() - touched;
  // Reference split: 3,329 touched vs 5,356 untouched sentences.
  CHECK(touched > 3329 / 10.0);
  CHECK(touched < 3329 * 10.0);
  CHECK(untouched > 5356 / 10.0);
  CHECK(untouched < 5356 * 10.0);
}

TEST_CASE("mask format") {
  Rng rng(12);
  const Corpus corpus = testing::RandomIob2Corpus(rng, 6, 3, 6, {"PER"});
  InjectionResult result;
  result.total_labels = 30;
  result.changed_token_positions = {{1, 0}, {4, 2}, {4, 3}};
  result.touched_sample_ids = {1, 4};
  std::ostringstream out;
  WriteMask(result, out);
  CHECK(out.str() == "# changed_labels=3 total=30\n1\n4\n");
  std::istringstream in(out.str());
  CHECK(ReadMask(in) == std::set<int>{1, 4});

  InjectionResult empty;
  empty.total_labels = 5;
  std::ostringstream header;
  WriteMask(empty, header);
  CHECK(header.str() == "# changed_labels=0 total=5\n");

  const InjectionResult real = Inject(corpus, {0.1, 4});
  std::ostringstream real_out;
  WriteMask(real, real_out);
  CHECK(real_out.str().rfind(
            "# changed_labels=" +
                std::to_string(real.changed_token_positions.size()) +
                " total=" + std::to_string(real.total_labels) + "\n",
            0) == 0);

  std::istringstream bad("# header\nseven\n");
  CHECK(KindOf([&] { ReadMask(bad); }) == ErrorKind::kFormat);
}
