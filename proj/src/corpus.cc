#include "subregweigh/corpus.h"

#include <charconv>
#include <cstdio>
#include <sstream>

#include "subregweigh/error.h"
#include "subregweigh/utf8.h"

namespace subregweigh {
namespace {

constexpr char kDocStart[] = "-DOCSTART-";

std::vector<std::string> SplitColumns(const std::string &line) {
  std::vector<std::string> columns;
  size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
    if (pos == line.size()) break;
    size_t end = pos;
    while (end < line.size() && line[end] != ' ' && line[end] != '\t') ++end;
    columns.push_back(line.substr(pos, end - pos));
    pos = end;
  }
  return columns;
}

// Reads one line without its terminator ("\n" or "\r\n").
bool NextLine(std::istream &in, std::string *line) {
  if (!std::getline(in, *line)) return false;
  if (!line->empty() && line->back() == '\r') line->pop_back();
  return true;
}

template <typename T>
bool ParseNumber(const std::string &text, T *value) {
  const char *begin = text.data();
  const char *end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, *value);
  return ec == std::errc() && ptr == end;
}

bool ContinuesEntity(const Tag &previous, const std::string &type) {
  return !previous.is_outside() && previous.type == type;
}

}  // namespace

size_t Corpus::TotalLabels() const {
  size_t total = 0;
  for (const Sample &sample : samples) total += sample.labels.size();
  return total;
}

Corpus Corpus::FromSamples(Task task, std::vector<Sample> samples) {
  Corpus corpus;
  corpus.task = task;
  corpus.samples = std::move(samples);
  for (size_t i = 0; i < corpus.samples.size(); ++i) {
    corpus.samples[i].id = static_cast<int>(i);
    for (const std::string &label : corpus.samples[i].labels) {
      corpus.label_set.insert(label);
    }
  }
  return corpus;
}

std::string Tag::str() const {
  if (is_outside()) return "O";
  return std::string(1, prefix) + "-" + type;
}

Tag ParseTag(const std::string &tag) {
  if (tag == "O") return Tag{};
  if (tag.size() > 2 && (tag[0] == 'B' || tag[0] == 'I') && tag[1] == '-') {
    return Tag{tag[0], tag.substr(2)};
  }
  throw Error(ErrorKind::kFormat, "invalid tag '" + tag + "'");
}

std::vector<Iob2Violation> ValidateIob2(
    const std::vector<std::string> &labels) {
  std::vector<Iob2Violation> violations;
  Tag previous;
  for (size_t i = 0; i < labels.size(); ++i) {
    Tag tag;
    try {
      tag = ParseTag(labels[i]);
    } catch (const Error &) {
      violations.push_back({static_cast<int>(i), "invalid tag " + labels[i]});
      previous = Tag{};
      continue;
    }
    if (tag.prefix == 'I') {
      if (previous.is_outside()) {
        violations.push_back({static_cast<int>(i), "I without head"});
      } else if (previous.type != tag.type) {
        violations.push_back({static_cast<int>(i), "type mismatch"});
      }
    }
    previous = tag;
  }
  return violations;
}

std::vector<std::string> Iob1ToIob2(const std::vector<std::string> &labels) {
  std::vector<std::string> out;
  out.reserve(labels.size());
  Tag previous;
  for (const std::string &label : labels) {
    Tag tag = ParseTag(label);
    if (tag.prefix == 'I' && !ContinuesEntity(previous, tag.type)) {
      tag.prefix = 'B';
    }
    out.push_back(tag.str());
    previous = tag;
  }
  return out;
}

std::vector<std::string> RepairIob2(std::vector<std::string> labels) {
  Tag previous;
  for (std::string &label : labels) {
    Tag tag = ParseTag(label);
    if (tag.prefix == 'I' && !ContinuesEntity(previous, tag.type)) {
      tag.prefix = 'B';
      label = tag.str();
    }
    previous = tag;
  }
  return labels;
}

Corpus ReadConll(std::istream &in, TagScheme scheme) {
  std::vector<Sample> samples;
  Sample current;
  int sentence_line = 0;
  bool pending_boundary = false;

  const auto flush = [&]() {
    if (current.words.empty()) return;
    if (scheme == TagScheme::kIob1) {
      try {
        current.labels = Iob1ToIob2(current.labels);
      } catch (const Error &e) {
        throw ParseError(ErrorKind::kFormat, sentence_line, e.what());
      }
    }
    for (const std::string &label : current.labels) {
      try {
        ParseTag(label);
      } catch (const Error &e) {
        throw ParseError(ErrorKind::kFormat, sentence_line, e.what());
      }
    }
    const auto violations = ValidateIob2(current.labels);
    if (!violations.empty()) {
      throw ParseError(ErrorKind::kFormat, sentence_line,
                       "invalid IOB2 sequence at token " +
                           std::to_string(violations.front().position) +
                           ": " + violations.front().reason);
    }
    current.doc_boundary = pending_boundary;
    pending_boundary = false;
    samples.push_back(std::move(current));
    current = Sample{};
  };

  std::string line;
  int line_number = 0;
  while (NextLine(in, &line)) {
    ++line_number;
    if (!IsValidUtf8(line)) {
      throw ParseError(ErrorKind::kEncoding, line_number, "invalid UTF-8");
    }
    const std::vector<std::string> columns = SplitColumns(line);
    if (columns.empty()) {
      flush();
      continue;
    }
    if (columns.front() == kDocStart) {
      flush();
      pending_boundary = true;
      continue;
    }
    if (columns.size() < 2) {
      throw ParseError(ErrorKind::kParse, line_number,
                       "expected at least 2 columns, got " +
                           std::to_string(columns.size()));
    }
    if (current.words.empty()) sentence_line = line_number;
    current.words.push_back(columns.front());
    current.labels.push_back(columns.back());
  }
  flush();
  return Corpus::FromSamples(Task::kNer, std::move(samples));
}

Corpus ReadClassificationTsv(std::istream &in) {
  std::vector<Sample> samples;
  std::string line;
  int line_number = 0;
  while (NextLine(in, &line)) {
    ++line_number;
    if (line.empty()) continue;
    if (!IsValidUtf8(line)) {
      throw ParseError(ErrorKind::kEncoding, line_number, "invalid UTF-8");
    }
    const size_t tab = line.rfind('\t');
    if (tab == std::string::npos) {
      throw ParseError(ErrorKind::kParse, line_number, "missing TAB");
    }
    Sample sample;
    sample.words = SplitColumns(line.substr(0, tab));
    std::string label = line.substr(tab + 1);
    if (sample.words.empty()) {
      throw ParseError(ErrorKind::kParse, line_number, "empty text");
    }
    if (label.empty()) {
      throw ParseError(ErrorKind::kParse, line_number, "empty label");
    }
    sample.labels.push_back(std::move(label));
    samples.push_back(std::move(sample));
  }
  return Corpus::FromSamples(Task::kClassification, std::move(samples));
}

namespace {

void WriteConllSample(const Sample &sample, std::ostream &out) {
  for (size_t i = 0; i < sample.words.size(); ++i) {
    out << sample.words[i] << ' ' << sample.labels[i] << '\n';
  }
  out << '\n';
}

void WriteTsvSample(const Sample &sample, std::ostream &out) {
  for (size_t i = 0; i < sample.words.size(); ++i) {
    if (i > 0) out << ' ';
    out << sample.words[i];
  }
  out << '\t' << sample.label() << '\n';
}

}  // namespace

void WriteConll(const Corpus &corpus, std::ostream &out) {
  for (const Sample &sample : corpus.samples) {
    if (sample.doc_boundary) out << kDocStart << " O\n\n";
    WriteConllSample(sample, out);
  }
}

void WriteClassificationTsv(const Corpus &corpus, std::ostream &out) {
  for (const Sample &sample : corpus.samples) WriteTsvSample(sample, out);
}

std::string FormatWeight(double weight) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.6f", weight);
  return buffer;
}

void WriteWeighted(const Corpus &corpus, const WeightTable &weights,
                   std::ostream &out, WeightFormat format) {
  for (const Sample &sample : corpus.samples) {
    if (weights.find(sample.id) == weights.end()) {
      throw Error(ErrorKind::kConsistency,
                  "no weight for sample " + std::to_string(sample.id));
    }
  }
  for (const Sample &sample : corpus.samples) {
    const WeightEntry &entry = weights.at(sample.id);
    if (format == WeightFormat::kSidecar) {
      out << sample.id << '\t' << FormatWeight(entry.weight) << '\t'
          << entry.agreement_count << '\t' << entry.k_effective << '\n';
      continue;
    }
    if (corpus.task == Task::kNer) {
      if (sample.doc_boundary) out << kDocStart << " O\n\n";
      out << "# weight=" << FormatWeight(entry.weight) << '\n';
      WriteConllSample(sample, out);
    } else {
      out << "# weight=" << FormatWeight(entry.weight) << '\n';
      WriteTsvSample(sample, out);
    }
  }
}

WeightTable ReadWeightSidecar(std::istream &in) {
  WeightTable table;
  std::string line;
  int line_number = 0;
  while (NextLine(in, &line)) {
    ++line_number;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream stream(line);
    std::string field;
    while (std::getline(stream, field, '\t')) fields.push_back(field);
    if (fields.size() != 4) {
      throw ParseError(ErrorKind::kParse, line_number,
                       "expected 4 TAB-separated fields");
    }
    int id;
    WeightEntry entry;
    if (!ParseNumber(fields[0], &id) ||
        !ParseNumber(fields[1], &entry.weight) ||
        !ParseNumber(fields[2], &entry.agreement_count) ||
        !ParseNumber(fields[3], &entry.k_effective)) {
      throw ParseError(ErrorKind::kFormat, line_number, "non-numeric field");
    }
    if (entry.k_effective < 1 || entry.agreement_count < 0 ||
        entry.agreement_count > entry.k_effective) {
      throw ParseError(ErrorKind::kFormat, line_number,
                       "agreement count outside [0, k_effective]");
    }
    if (!table.emplace(id, entry).second) {
      throw ParseError(ErrorKind::kFormat, line_number,
                       "duplicate sample id " + std::to_string(id));
    }
  }
  return table;
}

}  // namespace subregweigh
