#ifndef SCMP_EVAL_HPP
#define SCMP_EVAL_HPP

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "scmp/data.hpp"

namespace scmp {

struct ScoredExample {
  double score = 0.0;
  int label = 0;
};

// Mann-Whitney AUC: fraction of (pos, neg) pairs with pos score > neg score,
// ties counted 1/2. Computed by rank sums; exact for half-integer arithmetic.
// Requires at least one example of each class.
double auc(const std::vector<ScoredExample>& examples);

// Scores the 4 completions of each question with `scorer` (higher is better);
// the argmax is the prediction, ties broken toward the lowest choice index.
double fitb_accuracy(const std::vector<FitbQuestion>& questions,
                     const std::function<double(const std::vector<std::string>&)>& scorer);

// key=value report, one pair per line, in the order given.
void emit_report(const std::vector<std::pair<std::string, std::string>>& entries,
                 const std::string& path);

}  // namespace scmp

#endif
