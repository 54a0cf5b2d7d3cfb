#include <cmath>
#include <sstream>

#include "doctest.h"
#include "mmax/errors.hpp"
#include "mmax/evaldata.hpp"
#include "support.hpp"

using namespace mmax;
using namespace mmax::test;

namespace {

using Tokens = std::vector<std::string>;

std::string join(const Tokens& t) {
  std::string s;
  for (const auto& w : t) s += (s.empty() ? "" : " ") + w;
  return s;
}

std::string random_text(Rng& rng) {
  static const std::string alphabet = "abcXYZ019 .,!?'\"()-\t";
  std::string s;
  const std::size_t n = rng.below(30);
  for (std::size_t i = 0; i < n; ++i) s += alphabet[rng.below(alphabet.size())];
  return s;
}

}  // namespace

TEST_CASE("load_pairs: sts fixture parses scores exactly") {
  TempDir dir;
  const auto path = dir.write("s.tsv", "A b.\tC d.\t0.0\nE f\tG h\t2.5\r\nI j\tK l\t5.0\n");
  const PairDataset d = load_pairs(path, Task::Sts);
  REQUIRE(d.examples.size() == 3);
  CHECK(*d.examples[0].gold_score == 0.0);
  CHECK(*d.examples[1].gold_score == 2.5);
  CHECK(*d.examples[2].gold_score == 5.0);
  CHECK(d.examples[0].tokens1 == Tokens{"a", "b", "."});
  CHECK(d.vocab.count("k") == 1);
  CHECK(d.label_names.empty());
}

TEST_CASE("load_pairs: malformed lines are fatal and name the line") {
  TempDir dir;
  const auto two = dir.write("two.tsv", "only\ttwo\n");
  CHECK_THROWS_WITH_AS(load_pairs(two, Task::Sts), doctest::Contains(doctest::String((two + ":1:").c_str())), DataError);

  const auto label = dir.write("label.tsv", "a\tb\tentailment\na\tb\tmaybe\n");
  CHECK_THROWS_WITH_AS(load_pairs(label, Task::Entailment), doctest::Contains(doctest::String((label + ":2:").c_str())), DataError);

  const auto score = dir.write("score.tsv", "a\tb\tfive\n");
  CHECK_THROWS_AS(load_pairs(score, Task::Sts), DataError);

  const auto empty = dir.write("empty.tsv", "a\t  \t1\n");
  CHECK_THROWS_AS(load_pairs(empty, Task::Paraphrase), DataError);
  CHECK_THROWS_AS(load_pairs(dir.file("absent.tsv"), Task::Sts), DataError);
}

TEST_CASE("load_pairs: labels are case-insensitive in a fixed order") {
  const PairDataset d =
      parse_pairs("a\tb\tENTAILMENT\na\tb\tContradiction\na\tb\tneutral\n", Task::Entailment);
  REQUIRE(d.examples.size() == 3);
  CHECK(*d.examples[0].gold_label == 0);
  CHECK(*d.examples[1].gold_label == 1);
  CHECK(*d.examples[2].gold_label == 2);
  const PairDataset p = parse_pairs("a\tb\t1\na\tb\t0\n", Task::Paraphrase);
  CHECK(*p.examples[0].gold_label == 1);
  CHECK(*p.examples[1].gold_label == 0);
  CHECK(class_count(Task::Entailment, 6) == 3);
  CHECK(class_count(Task::Paraphrase, 6) == 2);
  CHECK(class_count(Task::Sts, 6) == 6);
}

TEST_CASE("load_pairs: lenient mode skips and reports") {
  std::ostringstream warnings;
  const PairDataset d = parse_pairs("a\tb\t1\nbroken line\na\tb\t2\n", Task::Paraphrase, true, &warnings, "x.tsv");
  CHECK(d.examples.size() == 1);
  const std::string w = warnings.str();
  CHECK(w.find("x.tsv:2:") != std::string::npos);
  CHECK(w.find("x.tsv:3:") != std::string::npos);
}

TEST_CASE("tokenize examples") {
  CHECK(tokenize("Bob likes Mary.") == Tokens{"bob", "likes", "mary", "."});
  CHECK(tokenize("  ").empty());
  CHECK(tokenize("").empty());
  CHECK(tokenize("don't stop") == Tokens{"don't", "stop"});
  CHECK(tokenize("(Hello), world!") == Tokens{"(", "hello", ")", ",", "world", "!"});
}

TEST_CASE("tokenize property: idempotent on its own joined output") {
  Rng rng = Rng::stream(1, "test");
  for (int trial = 0; trial < 2000; ++trial) {
    const std::string s = random_text(rng);
    const Tokens once = tokenize(s);
    CHECK(tokenize(join(once)) == once);
    for (const auto& w : once) CHECK(!w.empty());
  }
}

TEST_CASE("pearson examples") {
  CHECK(pearson(Vector{1, 2, 3, 4}, Vector{3, 5, 7, 9}) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(pearson(Vector{1, 2, 3}, Vector{-1, -2, -3}) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(std::abs(pearson(Vector{1, 2, 3}, Vector{1, 3, 2}) - 0.5) < 1e-12);
  CHECK_THROWS_AS(pearson(Vector{1, 1, 1}, Vector{1, 2, 3}), UndefinedMetricError);
  CHECK_THROWS_AS(pearson(Vector{1, 2}, Vector{1, 2, 3}), DataError);
}

TEST_CASE("pearson property: symmetric and invariant under positive affine maps") {
  Rng rng = Rng::stream(2, "test");
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 2 + rng.below(30);
    const Vector x = random_vector(rng, n, -5, 5);
    const Vector y = random_vector(rng, n, -5, 5);
    const double r = pearson(x, y);
    CHECK(r >= -1.0);
    CHECK(r <= 1.0);
    CHECK(std::abs(pearson(y, x) - r) < 1e-12);
    const double a = rng.uniform(0.1, 10), b = rng.uniform(-10, 10);
    Vector ax = x;
    for (double& v : ax) v = a * v + b;
    CHECK(std::abs(pearson(ax, y) - r) < 1e-12);
  }
}

TEST_CASE("classification metrics") {
  const std::vector<std::size_t> gold{1, 1, 0, 0};
  const auto m = classification_metrics(gold, std::vector<std::size_t>{1, 0, 0, 1}, true);
  CHECK(m.accuracy == 0.5);
  CHECK(*m.precision == 0.5);
  CHECK(*m.recall == 0.5);
  CHECK(*m.f1 == 0.5);

  const auto perfect = classification_metrics(gold, gold, true);
  CHECK(perfect.accuracy == 1.0);
  CHECK(*perfect.f1 == 1.0);
  CHECK(*classification_metrics(gold, std::vector<std::size_t>{0, 0, 0, 0}, true).f1 == 0.0);

  const auto three = classification_metrics(std::vector<std::size_t>{0, 1, 2}, std::vector<std::size_t>{0, 2, 2}, false);
  CHECK(three.accuracy == doctest::Approx(2.0 / 3.0));
  CHECK_FALSE(three.f1.has_value());
}

TEST_CASE("serialize_pairs round trip keeps tokens and golds") {
  for (const auto& [file, task] : {std::pair{"sts_toy.tsv", Task::Sts}, std::pair{"nli_toy.tsv", Task::Entailment},
                                   std::pair{"para_toy.tsv", Task::Paraphrase}}) {
    const PairDataset d = load_pairs(data_path(file), task);
    const PairDataset back = parse_pairs(serialize_pairs(d), task);
    REQUIRE(back.examples.size() == d.examples.size());
    for (std::size_t i = 0; i < d.examples.size(); ++i) {
      CHECK(back.examples[i].tokens1 == d.examples[i].tokens1);
      CHECK(back.examples[i].tokens2 == d.examples[i].tokens2);
      CHECK(back.examples[i].gold_score == d.examples[i].gold_score);
      CHECK(back.examples[i].gold_label == d.examples[i].gold_label);
    }
    CHECK(back.vocab == d.vocab);
  }
}
