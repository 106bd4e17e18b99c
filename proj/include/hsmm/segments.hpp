#pragma once

#include <vector>

namespace hsmm {

struct Segment {
  int label = 0;
  int duration = 1;

  bool operator==(const Segment&) const = default;
};

/// A hidden trajectory as super-states with durations. Durations sum to the
/// observation length T; when `censored_last` is set the final duration is the
/// observed part of a segment that continues past T.
struct SegmentSequence {
  std::vector<Segment> segments;
  bool censored_last = false;

  int length() const;
  std::size_t size() const { return segments.size(); }

  /// Per-frame labels x_1..x_T.
  std::vector<int> frame_labels() const;
  /// Start frame (0-based) of every segment.
  std::vector<int> starts() const;

  static SegmentSequence from_frame_labels(const std::vector<int>& labels, bool censored_last);

  /// Throws InvalidParameter if the invariants do not hold for length T.
  void validate(int T) const;

  bool operator==(const SegmentSequence&) const = default;
};

}  // namespace hsmm
