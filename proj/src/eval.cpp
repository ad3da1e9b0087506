#include "scmp/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace scmp {

double auc(const std::vector<ScoredExample>& examples) {
  std::size_t pos = 0, neg = 0;
  for (const ScoredExample& e : examples) {
    if (!std::isfinite(e.score)) throw std::invalid_argument("auc: non-finite score");
    (e.label ? pos : neg)++;
  }
  if (pos == 0 || neg == 0)
    throw std::invalid_argument("auc: need at least one positive and one negative");

  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return examples[a].score < examples[b].score;
  });

  // rank sum over positives with average ranks for ties
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && examples[order[j]].score == examples[order[i]].score) ++j;
    double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k)
      if (examples[order[k]].label) rank_sum_pos += avg_rank;
    i = j;
  }
  double u = rank_sum_pos - static_cast<double>(pos) * (static_cast<double>(pos) + 1.0) / 2.0;
  return u / (static_cast<double>(pos) * static_cast<double>(neg));
}

double fitb_accuracy(const std::vector<FitbQuestion>& questions,
                     const std::function<double(const std::vector<std::string>&)>& scorer) {
  if (questions.empty()) return 0.0;
  std::size_t correct = 0;
  for (const FitbQuestion& q : questions) {
    int best = 0;
    double best_score = 0.0;
    for (int c = 0; c < 4; ++c) {
      std::vector<std::string> completed = q.partial_set;
      completed.push_back(q.choices[static_cast<std::size_t>(c)]);
      double s = scorer(completed);
      if (c == 0 || s > best_score) {
        best = c;
        best_score = s;
      }
    }
    if (best == q.answer_index) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(questions.size());
}

void emit_report(const std::vector<std::pair<std::string, std::string>>& entries,
                 const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write report: " + path);
  for (const auto& [k, v] : entries) os << k << "=" << v << "\n";
  if (!os) throw std::runtime_error("report write failed: " + path);
}

}  // namespace scmp
