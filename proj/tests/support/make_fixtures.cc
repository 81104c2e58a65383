// Usage:
//   make_fixtures vocab <ner|tsv> <corpus> <max_merges> <merges_out> <vocab_out>
//   make_fixtures synthetic <out_dir> [seed]
#include <fstream>
#include <iostream>
#include <string>

#include "synthetic.h"

using namespace subregweigh;

int main(int argc, char **argv) {
  const std::string mode = argc > 1 ? argv[1] : "";
  if (mode == "vocab" && argc == 7) {
    std::ifstream in(argv[3]);
    const Corpus corpus = std::string(argv[2]) == "ner"
                              ? ReadConll(in)
                              : ReadClassificationTsv(in);
    std::map<std::string, long> counts;
    for (const Sample &sample : corpus.samples) {
      for (const std::string &word : sample.words) ++counts[word];
    }
    std::vector<std::string> tokens;
    const auto merges =
        testing::LearnBpe(counts, std::stoi(argv[4]), &tokens);
    testing::WriteMerges(merges, argv[5]);
    testing::WriteTokenJson(tokens, argv[6]);
    return 0;
  }
  if (mode == "synthetic" && (argc == 3 || argc == 4)) {
    testing::SyntheticOptions options;
    if (argc == 4) options.seed = std::stoull(argv[3]);
    const testing::SyntheticNer data = testing::GenerateSyntheticNer(options);
    const std::string dir = argv[2];
    testing::WriteConllFile(data.corpus, dir + "/train.conll");
    testing::WriteMerges(data.merges, dir + "/merges.txt");
    testing::WriteTokenJson(data.tokens, dir + "/vocab.json");
    return 0;
  }
  std::cerr << "usage: make_fixtures vocab <ner|tsv> <corpus> <max_merges> "
               "<merges_out> <vocab_out>\n"
               "       make_fixtures synthetic <out_dir> [seed]\n";
  return 2;
}
