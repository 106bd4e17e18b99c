#pragma once

#include <span>

#include "hsmm/messages.hpp"
#include "hsmm/segments.hpp"

namespace hsmm {

// Messages-backwards, sample-forwards draws of the hidden segmentation given
// parameters. All functions expect a MessageTable computed from the same
// CumSegLoglikes, durations and kernel that are passed alongside it.

struct DurationDraw {
  int duration = 1;
  bool censored = false;  // segment continues past the end of the data
};

/// Posterior draw of x_1: p(x_1 = i | y) proportional to init[i] beta*_0(i).
int sample_first_state(const MessageTable& msgs, const ProbVector& init, Rng& rng);

/// Posterior duration of a segment of `state` starting at 0-based frame `start`.
DurationDraw sample_segment_duration(const MessageTable& msgs, const CumSegLoglikes& cum,
                                     const Duration& family, int state, int start, Rng& rng);

SegmentSequence sample_segmentation(const MessageTable& msgs, const CumSegLoglikes& cum,
                                    std::span<const Duration> durations, const TransitionKernel& kernel,
                                    const ProbVector& init, Rng& rng);

}  // namespace hsmm
