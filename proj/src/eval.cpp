#include "hsmm/eval.hpp"

#include <algorithm>

#include "hsmm/errors.hpp"

namespace hsmm {

LabelMatch greedy_match(const std::vector<int>& inferred, const std::vector<int>& truth) {
  if (inferred.size() != truth.size()) throw InvalidParameter("label sequences differ in length");
  std::vector<int> rows(inferred.begin(), inferred.end());
  std::vector<int> cols(truth.begin(), truth.end());
  std::sort(rows.begin(), rows.end());
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
  std::sort(cols.begin(), cols.end());
  cols.erase(std::unique(cols.begin(), cols.end()), cols.end());

  auto index_of = [](const std::vector<int>& v, int x) {
    return static_cast<std::size_t>(std::lower_bound(v.begin(), v.end(), x) - v.begin());
  };
  std::vector<std::vector<long>> overlap(rows.size(), std::vector<long>(cols.size(), 0));
  for (std::size_t t = 0; t < inferred.size(); ++t) ++overlap[index_of(rows, inferred[t])][index_of(cols, truth[t])];

  LabelMatch match;
  std::vector<bool> row_used(rows.size(), false);
  std::vector<bool> col_used(cols.size(), false);
  const std::size_t pairs = std::min(rows.size(), cols.size());
  for (std::size_t step = 0; step < pairs; ++step) {
    long best = -1;
    std::size_t bi = 0;
    std::size_t bj = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (row_used[i]) continue;
      for (std::size_t j = 0; j < cols.size(); ++j) {
        if (col_used[j] || overlap[i][j] <= best) continue;
        best = overlap[i][j];
        bi = i;
        bj = j;
      }
    }
    row_used[bi] = true;
    col_used[bj] = true;
    match.mapping[rows[bi]] = cols[bj];
    match.matched_frames += best;
  }
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (!row_used[i]) match.unmatched.push_back(rows[i]);
  return match;
}

double hamming_error(const std::vector<int>& inferred, const std::vector<int>& truth) {
  const LabelMatch match = greedy_match(inferred, truth);
  if (truth.empty()) return 0.0;
  return 1.0 - static_cast<double>(match.matched_frames) / static_cast<double>(truth.size());
}

int used_states(const std::vector<int>& labels, double threshold_fraction) {
  if (!(threshold_fraction >= 0.0 && threshold_fraction < 1.0))
    throw InvalidParameter("threshold fraction must lie in [0, 1)");
  if (labels.empty()) return 0;
  std::map<int, long> counts;
  for (int l : labels) ++counts[l];
  int used = 0;
  const double total = static_cast<double>(labels.size());
  for (const auto& [label, count] : counts)
    if (static_cast<double>(count) / total >= threshold_fraction) ++used;
  return used;
}

}  // namespace hsmm
