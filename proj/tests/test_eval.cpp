#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <map>
#include <random>

#include "doctest.h"
#include "scmp/eval.hpp"

using namespace scmp;

namespace {

// brute-force Mann-Whitney oracle: count pairwise wins, half for ties
double auc_bruteforce(const std::vector<ScoredExample>& ex) {
  double wins = 0.0;
  std::size_t pairs = 0;
  for (const ScoredExample& p : ex) {
    if (!p.label) continue;
    for (const ScoredExample& n : ex) {
      if (n.label) continue;
      ++pairs;
      if (p.score > n.score) wins += 1.0;
      else if (p.score == n.score) wins += 0.5;
    }
  }
  return wins / static_cast<double>(pairs);
}

}  // namespace

TEST_CASE("auc closed forms") {
  CHECK(auc({{1, 1}, {1, 1}, {0, 0}, {0, 0}}) == 1.0);
  CHECK(auc({{0.5, 1}, {0.5, 0}, {0.5, 1}, {0.5, 0}}) == 0.5);
  // pos {0.9, 0.8}, neg {0.7, 0.85}: 3 of 4 pairs won
  CHECK(auc({{0.9, 1}, {0.8, 1}, {0.7, 0}, {0.85, 0}}) == 0.75);
}

TEST_CASE("auc errors") {
  CHECK_THROWS_AS(auc({{1.0, 1}, {0.5, 1}}), std::invalid_argument);
  CHECK_THROWS_AS(auc({}), std::invalid_argument);
  CHECK_THROWS_AS(auc({{std::nan(""), 1}, {0.0, 0}}), std::invalid_argument);
}

TEST_CASE("auc equals brute force on random score sets") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    std::size_t n = 2 + rng() % 19;
    std::vector<ScoredExample> ex;
    bool has_pos = false, has_neg = false;
    for (std::size_t i = 0; i < n; ++i) {
      // coarse grid so ties actually occur
      double score = static_cast<double>(rng() % 8) / 4.0;
      int label = static_cast<int>(rng() % 2);
      (label ? has_pos : has_neg) = true;
      ex.push_back({score, label});
    }
    if (!has_pos) ex.push_back({0.1, 1});
    if (!has_neg) ex.push_back({0.2, 0});
    CHECK(auc(ex) == auc_bruteforce(ex));
  }
}

TEST_CASE("auc invariances") {
  std::mt19937_64 rng(8);
  std::vector<ScoredExample> ex;
  for (int i = 0; i < 30; ++i)
    ex.push_back({std::normal_distribution<double>(0, 1)(rng), static_cast<int>(rng() % 2)});
  ex.push_back({5.0, 1});
  ex.push_back({-5.0, 0});
  double base = auc(ex);

  auto mapped = ex;
  for (auto& e : mapped) e.score = 2.0 * e.score + 1.0;
  CHECK(auc(mapped) == base);
  mapped = ex;
  for (auto& e : mapped) e.score = 1.0 / (1.0 + std::exp(-e.score));
  CHECK(auc(mapped) == doctest::Approx(base).epsilon(1e-12));

  // flipping labels complements AUC when scores are tie-free
  auto flipped = ex;
  for (auto& e : flipped) e.label = 1 - e.label;
  CHECK(auc(flipped) == doctest::Approx(1.0 - base).epsilon(1e-12));
}

TEST_CASE("fitb accuracy with lookup scorers") {
  std::vector<FitbQuestion> qs = {
      {{"p1", "p2"}, {"a", "b", "c", "d"}, 1},
      {{"p3", "p4"}, {"e", "f", "g", "h"}, 3},
  };
  // oracle scorer: ranks the true completion highest
  auto perfect = [&](const std::vector<std::string>& items) {
    const std::string& added = items.back();
    return (added == "b" || added == "h") ? 1.0 : 0.0;
  };
  CHECK(fitb_accuracy(qs, perfect) == 1.0);

  // lookup table: question 1 answered correctly, question 2 not
  std::map<std::string, double> table = {{"a", 0.1}, {"b", 0.9}, {"c", 0.2}, {"d", 0.3},
                                         {"e", 0.8}, {"f", 0.1}, {"g", 0.2}, {"h", 0.4}};
  auto lookup = [&](const std::vector<std::string>& items) { return table.at(items.back()); };
  CHECK(fitb_accuracy(qs, lookup) == 0.5);

  // constant scorer: tie broken to index 0; answers at 1 and 3 both missed
  auto constant = [](const std::vector<std::string>&) { return 0.5; };
  CHECK(fitb_accuracy(qs, constant) == 0.0);
}

TEST_CASE("constant scorer approaches 0.25 on uniform answer positions") {
  std::mt19937_64 rng(12);
  std::vector<FitbQuestion> qs;
  int at_zero = 0;
  for (int i = 0; i < 4000; ++i) {
    FitbQuestion q;
    q.partial_set = {"x", "y"};
    q.choices = {"a", "b", "c", "d"};
    q.answer_index = static_cast<int>(rng() % 4);
    if (q.answer_index == 0) ++at_zero;
    qs.push_back(q);
  }
  auto constant = [](const std::vector<std::string>&) { return 1.0; };
  double acc = fitb_accuracy(qs, constant);
  CHECK(acc == doctest::Approx(static_cast<double>(at_zero) / 4000.0));
  CHECK(acc == doctest::Approx(0.25).epsilon(0.15));
}

TEST_CASE("fitb accuracy is order invariant") {
  std::vector<FitbQuestion> qs = {
      {{"p1", "p2"}, {"a", "b", "c", "d"}, 0},
      {{"p3", "p4"}, {"e", "f", "g", "h"}, 2},
      {{"p5", "p6"}, {"i", "j", "k", "l"}, 1},
  };
  auto scorer = [](const std::vector<std::string>& items) {
    return static_cast<double>(items.back()[0] % 5);
  };
  double base = fitb_accuracy(qs, scorer);
  std::reverse(qs.begin(), qs.end());
  CHECK(fitb_accuracy(qs, scorer) == base);
}

TEST_CASE("emit_report writes key=value lines") {
  std::string path = std::string(std::tmpnam(nullptr)) + ".report";
  emit_report({{"auc", "0.93"}, {"seed", "7"}}, path);
  std::ifstream is(path);
  std::string l1, l2;
  std::getline(is, l1);
  std::getline(is, l2);
  std::remove(path.c_str());
  CHECK(l1 == "auc=0.93");
  CHECK(l2 == "seed=7");
}
