#pragma once

#include <map>
#include <vector>

namespace hsmm {

/// Greedy one-to-one matching of inferred labels to true labels.
struct LabelMatch {
  std::map<int, int> mapping;     // inferred -> true
  std::vector<int> unmatched;     // inferred labels left without a partner
  long matched_frames = 0;
};

/// Repeatedly pairs the (inferred, true) labels with the largest frame
/// overlap, ties going to the smallest inferred then smallest true label.
LabelMatch greedy_match(const std::vector<int>& inferred, const std::vector<int>& truth);

/// 1 - (frames agreeing under the greedy matching) / T. Superfluous or
/// missing states count fully as error.
double hamming_error(const std::vector<int>& inferred, const std::vector<int>& truth);

/// Number of labels covering at least `threshold_fraction` of the frames.
int used_states(const std::vector<int>& labels, double threshold_fraction);

}  // namespace hsmm
