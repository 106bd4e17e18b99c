#include "hsmm/segments.hpp"

#include <string>

#include "hsmm/errors.hpp"

namespace hsmm {

int SegmentSequence::length() const {
  int total = 0;
  for (const auto& s : segments) total += s.duration;
  return total;
}

std::vector<int> SegmentSequence::frame_labels() const {
  std::vector<int> out;
  out.reserve(length());
  for (const auto& s : segments) out.insert(out.end(), s.duration, s.label);
  return out;
}

std::vector<int> SegmentSequence::starts() const {
  std::vector<int> out;
  out.reserve(segments.size());
  int t = 0;
  for (const auto& s : segments) {
    out.push_back(t);
    t += s.duration;
  }
  return out;
}

SegmentSequence SegmentSequence::from_frame_labels(const std::vector<int>& labels, bool censored_last) {
  SegmentSequence seq;
  for (int label : labels) {
    if (!seq.segments.empty() && seq.segments.back().label == label)
      ++seq.segments.back().duration;
    else
      seq.segments.push_back({label, 1});
  }
  seq.censored_last = censored_last && !seq.segments.empty();
  return seq;
}

void SegmentSequence::validate(int T) const {
  if (segments.empty()) throw InvalidParameter("segment sequence is empty");
  for (std::size_t s = 0; s < segments.size(); ++s) {
    if (segments[s].duration < 1) throw InvalidParameter("segment duration must be >= 1");
    if (segments[s].label < 0) throw InvalidParameter("segment label must be >= 0");
    if (s > 0 && segments[s].label == segments[s - 1].label)
      throw InvalidParameter("adjacent segments share label " + std::to_string(segments[s].label));
  }
  if (length() != T)
    throw InvalidParameter("segment durations sum to " + std::to_string(length()) + ", expected " +
                           std::to_string(T));
}

}  // namespace hsmm
