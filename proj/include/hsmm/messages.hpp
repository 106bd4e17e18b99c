#pragma once

#include <span>
#include <vector>

#include "hsmm/distributions.hpp"
#include "hsmm/durations.hpp"

namespace hsmm {

/// Per-frame log-likelihoods: values(t, i) = log f(y_t | theta_i), T x N.
struct FrameLoglikes {
  Matrix values;

  int frames() const { return static_cast<int>(values.rows()); }
  int states() const { return static_cast<int>(values.cols()); }
};

/// Prefix sums of frame log-likelihoods giving O(1) segment scores.
/// Frames with -inf likelihood are tracked separately so differences never
/// produce NaN.
class CumSegLoglikes {
 public:
  CumSegLoglikes() = default;
  explicit CumSegLoglikes(const FrameLoglikes& frames);

  int frames() const { return static_cast<int>(prefix_.rows()) - 1; }
  int states() const { return static_cast<int>(prefix_.cols()); }

  /// Log-likelihood of frames [begin, end) (0-based, half-open) under `state`.
  double segment(int state, int begin, int end) const {
    if (impossible_(end, state) != impossible_(begin, state)) return kNegInf;
    return prefix_(end, state) - prefix_(begin, state);
  }

  /// C[t][i] = sum of finite frame log-likelihoods over frames [0, t).
  const Matrix& prefix() const { return prefix_; }
  bool has_impossible_frames(int state) const { return impossible_(frames(), state) > 0; }

 private:
  Matrix prefix_;
  Eigen::MatrixXi impossible_;
};

CumSegLoglikes cum_seg_loglikes(const FrameLoglikes& frames);

/// log p(x_{t+1} = j | x_t = i), N x N.
struct TransitionKernel {
  Matrix log_probs;

  int states() const { return static_cast<int>(log_probs.rows()); }

  static TransitionKernel from_probs(const Matrix& probs);
  /// Rows of the full transition matrix with the diagonal removed and renormalized.
  static TransitionKernel without_self_transitions(const std::vector<ProbVector>& rows);
};

struct MessageOptions {
  static constexpr int kExact = std::numeric_limits<int>::max();

  int d_max = kExact;  // values >= T are exact
  bool censoring = true;
  /// Optional per-state switch for the censoring term; empty means all states.
  std::vector<bool> censorable;
  /// Optional per-state switch for ending a complete segment exactly at T; empty means all states.
  std::vector<bool> terminal;
};

/// Backward messages in log space.
/// log_b(t, i) = log beta_t(i) for t = 0..T; log_bstar(t, i) = log beta*_t(i) for t = 0..T-1.
struct MessageTable {
  Matrix log_b;
  Matrix log_bstar;
  int d_max = 1;
  bool censoring = true;
  std::vector<bool> censorable;

  int frames() const { return static_cast<int>(log_bstar.rows()); }
  int states() const { return static_cast<int>(log_bstar.cols()); }
  bool censors(int state) const { return censoring && (censorable.empty() || censorable[state]); }
};

/// HSMM backward recursion with duration truncation at d_max and an optional
/// survival-function term for a final segment running past T. Cost is
/// O(T d_max N + T N^2).
MessageTable backward_messages(const CumSegLoglikes& cum, std::span<const Duration> durations,
                               const TransitionKernel& kernel, const MessageOptions& options);

/// log sum_i init[i] beta*_0(i).
double total_loglike(const MessageTable& msgs, const ProbVector& init);

/// d_max covering all but `tail_mass` of every state's duration distribution, capped at T.
int adaptive_d_max(std::span<const Duration> durations, int T, double tail_mass = 1e-6);

}  // namespace hsmm
