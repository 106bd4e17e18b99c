#include "hsmm/blocksampler.hpp"

#include <cmath>
#include <vector>

#include "hsmm/errors.hpp"

namespace hsmm {

int sample_first_state(const MessageTable& msgs, const ProbVector& init, Rng& rng) {
  const int N = msgs.states();
  if (static_cast<int>(init.size()) != N) throw InvalidParameter("initial distribution length mismatch");
  std::vector<double> logits(N);
  for (int i = 0; i < N; ++i) logits[i] = std::log(init[i]) + msgs.log_bstar(0, i);
  try {
    return static_cast<int>(categorical_sample(logits, rng));
  } catch (const EmptySupport&) {
    throw ImpossibleEvidence("observations have zero probability under every initial state");
  }
}

DurationDraw sample_segment_duration(const MessageTable& msgs, const CumSegLoglikes& cum,
                                     const Duration& family, int state, int start, Rng& rng) {
  const int T = msgs.frames();
  if (start < 0 || start >= T) throw DomainError("segment start must lie inside the sequence");
  if (msgs.log_bstar(start, state) == kNegInf)
    throw ImpossibleEvidence("segment start has zero posterior mass");

  const int remaining = T - start;
  const int max_d = std::min(msgs.d_max, remaining);
  const bool with_censor = msgs.censors(state) && remaining <= msgs.d_max;
  std::vector<double> logits;
  logits.reserve(static_cast<std::size_t>(max_d) + 1);
  for (int d = 1; d <= max_d; ++d)
    logits.push_back(msgs.log_b(start + d, state) + log_pmf(family, d) + cum.segment(state, start, start + d));
  if (with_censor) logits.push_back(log_sf(family, remaining) + cum.segment(state, start, T));

  std::size_t pick;
  try {
    pick = categorical_sample(logits, rng);
  } catch (const EmptySupport&) {
    throw ImpossibleEvidence("no segment duration has positive posterior mass");
  }
  if (with_censor && pick + 1 == logits.size()) return {remaining, true};
  return {static_cast<int>(pick) + 1, false};
}

SegmentSequence sample_segmentation(const MessageTable& msgs, const CumSegLoglikes& cum,
                                    std::span<const Duration> durations, const TransitionKernel& kernel,
                                    const ProbVector& init, Rng& rng) {
  const int T = msgs.frames();
  const int N = msgs.states();
  SegmentSequence seq;
  if (T == 0) return seq;

  int state = sample_first_state(msgs, init, rng);
  int t = 0;
  std::vector<double> logits(N);
  while (true) {
    const DurationDraw draw = sample_segment_duration(msgs, cum, durations[state], state, t, rng);
    seq.segments.push_back({state, draw.duration});
    t += draw.duration;
    if (draw.censored) {
      seq.censored_last = true;
      break;
    }
    if (t == T) break;
    for (int j = 0; j < N; ++j) logits[j] = kernel.log_probs(state, j) + msgs.log_bstar(t, j);
    try {
      state = static_cast<int>(categorical_sample(logits, rng));
    } catch (const EmptySupport&) {
      throw ImpossibleEvidence("no successor state has positive posterior mass");
    }
  }
  return seq;
}

}  // namespace hsmm
