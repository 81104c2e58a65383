#include "subregweigh/noise.h"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "subregweigh/error.h"

namespace subregweigh {

double InjectionTolerance(size_t total_labels) {
  return std::max(1.0, 0.005 * total_labels);
}

std::vector<int> FlipLabel(std::vector<std::string> &labels, int position,
                           const std::string &new_label) {
  const Tag old_tag = ParseTag(labels[position]);
  const Tag new_tag = ParseTag(new_label);
  if (new_tag.prefix == 'I') {
    throw Error(ErrorKind::kContract, "replacement must be O or B-x");
  }
  std::vector<int> changed;
  if (labels[position] == new_label) return changed;
  labels[position] = new_label;
  changed.push_back(position);

  const size_t next = position + 1;
  if (next >= labels.size()) return changed;
  const Tag next_tag = ParseTag(labels[next]);

  if (old_tag.is_outside()) {
    // O -> B-x followed by B-x: join the two into one entity.
    if (next_tag.prefix == 'B' && next_tag.type == new_tag.type) {
      labels[next] = "I-" + new_tag.type;
      changed.push_back(static_cast<int>(next));
    }
  } else if (new_tag.is_outside()) {
    // B-x / I-x -> O followed by I-x: the remainder becomes its own entity.
    if (next_tag.prefix == 'I') {
      labels[next] = "B-" + next_tag.type;
      changed.push_back(static_cast<int>(next));
    }
  } else if (new_tag.type != old_tag.type) {
    // B-x / I-x -> B-y: the rest of the x entity becomes y.
    const std::string old_inside = "I-" + old_tag.type;
    const std::string new_inside = "I-" + new_tag.type;
    for (size_t j = next; j < labels.size() && labels[j] == old_inside; ++j) {
      labels[j] = new_inside;
      changed.push_back(static_cast<int>(j));
    }
  }
  return changed;
}

InjectionResult Inject(const Corpus &corpus, const InjectionConfig &config) {
  if (!(config.target_fraction > 0.0 && config.target_fraction < 1.0)) {
    throw Error(ErrorKind::kContract, "target fraction must lie in (0, 1)");
  }
  if (corpus.task != Task::kNer) {
    throw Error(ErrorKind::kContract, "label injection needs an NER corpus");
  }
  InjectionResult result;
  result.total_labels = corpus.TotalLabels();
  if (result.total_labels == 0) {
    throw Error(ErrorKind::kContract, "corpus has no labels");
  }
  for (const Sample &sample : corpus.samples) {
    if (!ValidateIob2(sample.labels).empty()) {
      throw Error(ErrorKind::kContract,
                  "sample " + std::to_string(sample.id) + " is not valid IOB2");
    }
  }

  std::set<std::string> types;
  for (const std::string &label : corpus.label_set) {
    const Tag tag = ParseTag(label);
    if (!tag.is_outside()) types.insert(tag.type);
  }
  std::vector<std::string> targets{"O"};
  for (const std::string &type : types) targets.push_back("B-" + type);

  const double exact_target = config.target_fraction * result.total_labels;
  result.target_changes = static_cast<size_t>(std::ceil(exact_target));
  // Cascading repairs may overshoot the target, but never past the
  // tolerance band.
  const size_t ceiling = static_cast<size_t>(
      std::floor(exact_target + InjectionTolerance(result.total_labels)));

  result.corpus = corpus;
  std::vector<Sample> &samples = result.corpus.samples;

  // Flattened positions that were never picked nor rewritten by a repair.
  std::vector<std::pair<int, int>> open;
  open.reserve(result.total_labels);
  for (const Sample &sample : samples) {
    for (size_t t = 0; t < sample.labels.size(); ++t) {
      open.emplace_back(sample.id, static_cast<int>(t));
    }
  }
  std::set<std::pair<int, int>> closed;
  const auto is_changed = [&](int sample, int token) {
    return samples[sample].labels[token] !=
           corpus.samples[sample].labels[token];
  };

  Rng rng(config.seed);
  size_t changed = 0;
  size_t rejections = 0;
  const size_t max_rejections = 64 + 16 * result.total_labels;
  std::vector<std::string> options;
  while (changed < result.target_changes && !open.empty() &&
         rejections < max_rejections) {
    const size_t slot = rng.Uniform(open.size());
    const auto [sample_id, token] = open[slot];
    if (closed.count(open[slot])) {
      open[slot] = open.back();
      open.pop_back();
      continue;
    }
    std::vector<std::string> &labels = samples[sample_id].labels;
    options.clear();
    for (const std::string &target : targets) {
      if (target != labels[token]) options.push_back(target);
    }
    if (options.empty()) {
      ++rejections;
      continue;
    }
    const std::string &replacement = options[rng.Uniform(options.size())];

    std::vector<std::string> trial = labels;
    const std::vector<int> rewritten = FlipLabel(trial, token, replacement);
    long delta = 0;
    for (int j : rewritten) {
      const std::string &original = corpus.samples[sample_id].labels[j];
      delta += (trial[j] != original) - (labels[j] != original);
    }
    if (static_cast<long>(changed) + delta > static_cast<long>(ceiling)) {
      // A repair cascade would overshoot the tolerance band.
      ++rejections;
      continue;
    }
    labels = std::move(trial);
    changed += delta;
    for (int j : rewritten) closed.emplace(sample_id, j);
    open[slot] = open.back();
    open.pop_back();
  }

  for (const Sample &sample : samples) {
    for (size_t t = 0; t < sample.labels.size(); ++t) {
      if (is_changed(sample.id, static_cast<int>(t))) {
        result.changed_token_positions.emplace(sample.id,
                                               static_cast<int>(t));
        result.touched_sample_ids.insert(sample.id);
      }
    }
  }
  result.budget_reached =
      result.changed_token_positions.size() >= result.target_changes;
  return result;
}

void WriteMask(const InjectionResult &result, std::ostream &out) {
  out << "# changed_labels=" << result.changed_token_positions.size()
      << " total=" << result.total_labels << '\n';
  for (int id : result.touched_sample_ids) out << id << '\n';
}

std::set<int> ReadMask(std::istream &in) {
  std::set<int> ids;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    int id;
    auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), id);
    if (ec != std::errc() || ptr != line.data() + line.size() || id < 0) {
      throw ParseError(ErrorKind::kFormat, line_number,
                       "expected a sample id, got '" + line + "'");
    }
    ids.insert(id);
  }
  return ids;
}

}  // namespace subregweigh
