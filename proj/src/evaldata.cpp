#include "mmax/evaldata.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mmax/errors.hpp"

namespace mmax {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

bool is_punct(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u < 128 && std::ispunct(u);
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

}  // namespace

const std::vector<std::string>& label_names(Task task) {
  static const std::vector<std::string> none;
  static const std::vector<std::string> entailment = {"entailment", "contradiction", "neutral"};
  static const std::vector<std::string> paraphrase = {"0", "1"};
  switch (task) {
    case Task::Entailment: return entailment;
    case Task::Paraphrase: return paraphrase;
    default: return none;
  }
}

std::size_t class_count(Task task, std::size_t score_k) {
  return task == Task::Sts ? score_k : label_names(task).size();
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    if (j == i) break;
    std::string_view chunk = text.substr(i, j - i);
    i = j;

    std::size_t lead = 0;
    while (lead < chunk.size() && is_punct(chunk[lead])) ++lead;
    std::size_t trail = chunk.size();
    while (trail > lead && is_punct(chunk[trail - 1])) --trail;

    for (std::size_t k = 0; k < lead; ++k) out.emplace_back(1, chunk[k]);
    if (trail > lead) out.push_back(lower(chunk.substr(lead, trail - lead)));
    for (std::size_t k = trail; k < chunk.size(); ++k) out.emplace_back(1, chunk[k]);
  }
  return out;
}

PairDataset parse_pairs(std::string_view text, Task task, bool lenient, std::ostream* warnings,
                        std::string_view source) {
  PairDataset data;
  data.task = task;
  data.label_names = label_names(task);

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty()) continue;

    auto fail = [&](const std::string& why) {
      std::string msg = std::string(source) + ":" + std::to_string(line_no) + ": " + why;
      if (!lenient) throw DataError(msg);
      if (warnings) *warnings << "warning: skipped " << msg << '\n';
    };

    auto fields = split_tabs(line);
    if (fields.size() != 3) {
      fail("expected 3 tab-separated fields, found " + std::to_string(fields.size()));
      continue;
    }
    SentencePairExample ex;
    ex.tokens1 = tokenize(fields[0]);
    ex.tokens2 = tokenize(fields[1]);
    if (ex.tokens1.empty() || ex.tokens2.empty()) {
      fail("empty sentence after tokenization");
      continue;
    }
    const std::string_view gold = trim(fields[2]);
    if (task == Task::Sts) {
      double v = 0.0;
      std::string_view g = gold;
      if (!g.empty() && g.front() == '+') g.remove_prefix(1);
      auto [ptr, ec] = std::from_chars(g.data(), g.data() + g.size(), v);
      if (g.empty() || ec != std::errc() || ptr != g.data() + g.size() || !std::isfinite(v)) {
        fail("invalid score '" + std::string(gold) + "'");
        continue;
      }
      ex.gold_score = v;
    } else {
      const std::string key = lower(gold);
      std::optional<std::size_t> idx;
      for (std::size_t k = 0; k < data.label_names.size(); ++k) {
        if (data.label_names[k] == key) idx = k;
      }
      if (!idx) {
        fail("unknown label '" + std::string(gold) + "'");
        continue;
      }
      ex.gold_label = idx;
    }
    data.vocab.insert(ex.tokens1.begin(), ex.tokens1.end());
    data.vocab.insert(ex.tokens2.begin(), ex.tokens2.end());
    data.examples.push_back(std::move(ex));
  }
  return data;
}

PairDataset load_pairs(const std::string& path, Task task, bool lenient, std::ostream* warnings) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open data file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_pairs(buf.str(), task, lenient, warnings, path);
}

std::string serialize_pairs(const PairDataset& data) {
  std::ostringstream out;
  out.precision(17);
  auto join = [&](const std::vector<std::string>& toks) {
    for (std::size_t i = 0; i < toks.size(); ++i) out << (i ? " " : "") << toks[i];
  };
  for (const auto& ex : data.examples) {
    join(ex.tokens1);
    out << '\t';
    join(ex.tokens2);
    out << '\t';
    if (ex.gold_score) {
      out << *ex.gold_score;
    } else {
      out << data.label_names.at(*ex.gold_label);
    }
    out << '\n';
  }
  return out.str();
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DataError("pearson: sequences differ in length");
  if (x.size() < 2) throw UndefinedMetricError("pearson needs at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw UndefinedMetricError("pearson correlation undefined for a constant sequence");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

ClassificationMetrics classification_metrics(std::span<const std::size_t> gold, std::span<const std::size_t> pred,
                                             bool binary) {
  if (gold.size() != pred.size()) throw DataError("classification_metrics: length mismatch");
  if (gold.empty()) throw DataError("classification_metrics: no examples");
  ClassificationMetrics m;
  std::size_t correct = 0, tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i] == pred[i]) ++correct;
    if (pred[i] == 1 && gold[i] == 1) ++tp;
    if (pred[i] == 1 && gold[i] != 1) ++fp;
    if (pred[i] != 1 && gold[i] == 1) ++fn;
  }
  m.accuracy = static_cast<double>(correct) / static_cast<double>(gold.size());
  if (binary) {
    const double p = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double r = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
    m.precision = p;
    m.recall = r;
    m.f1 = p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
  }
  return m;
}

}  // namespace mmax
