#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hsmm/durations.hpp"
#include "hsmm/messages.hpp"
#include "hsmm/observations.hpp"
#include "hsmm/segments.hpp"

namespace hsmm {

// Whole-number counts held in doubles: dummy self-transition counts can be
// astronomically large when pi_jj is within rounding of one.
using CountMatrix = Eigen::MatrixXd;

struct WeakLimitConfig {
  int L = 8;  // truncation level
  double gamma = 1.0;
  double alpha = 1.0;
  EmissionPrior emission;
  /// Duration family and its prior; the parameter values are ignored.
  Duration duration = GeometricDuration{};
  int d_max = 0;  // 0 selects the smallest d_max leaving < d_max_tail mass per state
  double d_max_tail = 1e-6;
  bool censoring = true;
  int init_segment_length = 25;

  void validate() const;
};

/// Full Gibbs state of the finite (weak-limit) HDP-HSMM.
struct WeakLimitState {
  WeakLimitConfig config;
  ProbVector beta;
  std::vector<ProbVector> rows;   // full pi_j including the diagonal atom
  std::vector<ProbVector> leave;  // pi_j with the diagonal removed; survives pi_jj rounding to 1
  std::vector<MixtureEmission> emissions;
  std::vector<Duration> durations;
  SegmentSequence seg;
  CountMatrix counts;  // transitions including dummy self-transitions
  CountMatrix tables;

  int L() const { return static_cast<int>(beta.size()); }
  /// x_1 is drawn from the global weights.
  const ProbVector& init() const { return beta; }
  /// Throws InvalidParameter if a type invariant is violated.
  void validate(int T) const;
};

struct SweepDiagnostics {
  double loglike = 0.0;  // log evidence of the data under the parameters the labels were drawn with
  int used_states = 0;
  int segments = 0;
  int d_max = 0;
};

/// Prior draw of all parameters plus an initial segmentation into uniform
/// blocks with labels drawn uniformly without adjacent repeats.
WeakLimitState init_state(const WeakLimitConfig& config, const Matrix& data, Rng& rng);

/// Observed super-state transition counts completed with geometric counts of
/// the self-transitions that were rejected before each observed transition.
CountMatrix augment_self_transitions(const SegmentSequence& seg, const std::vector<ProbVector>& rows, Rng& rng);
/// Same, given log(1 - pi_jj) per state.
CountMatrix augment_self_transitions(const SegmentSequence& seg, std::span<const double> log_leave, Rng& rng);

/// log(1 - pi_jj) drawn from Beta(alpha (1 - b_j), alpha b_j). Given beta this is
/// the exact conditional of the diagonal atom, which the likelihood never sees.
std::vector<double> sample_log_leave(const ProbVector& beta, double alpha, Rng& rng);

/// Chinese-restaurant table counts: m[j][k] = sum_i Bernoulli(a b_k / (a b_k + i - 1)).
/// Customers past kExactTableCustomers are added as one Poisson draw with the same mean.
inline constexpr std::int64_t kExactTableCustomers = 100000;
CountMatrix sample_tables(const CountMatrix& counts, double alpha, const ProbVector& beta, Rng& rng);
CountMatrix sample_tables(const CountMatrix& counts, double alpha, std::span<const double> weights, Rng& rng);

ProbVector sample_beta(const CountMatrix& tables, double gamma, Rng& rng);
/// Same, with one extra count for the first label, which is itself a draw from beta.
ProbVector sample_beta(const CountMatrix& tables, double gamma, int first_label, Rng& rng);

std::vector<ProbVector> sample_rows(const CountMatrix& counts, double alpha, const ProbVector& beta, Rng& rng);
/// Rows drawn as Dir(alpha beta + n) but split by aggregation: the off-diagonal
/// part Dir(alpha b_k + n_jk, k != j) goes to `leave`, the diagonal atom to `rows`.
void sample_rows(const CountMatrix& counts, double alpha, const ProbVector& beta, std::vector<ProbVector>& rows,
                 std::vector<ProbVector>& leave, Rng& rng);

/// Emission and duration parameters from their conditionals given the segmentation.
void resample_params(WeakLimitState& state, const Matrix& data, Rng& rng);

/// Frame log-likelihoods of every state.
FrameLoglikes frame_loglikes(const std::vector<MixtureEmission>& emissions, const Matrix& data);

/// Block-samples the segmentation given the current parameters.
SweepDiagnostics resample_segmentation(WeakLimitState& state, const Matrix& data, Rng& rng);

/// One sweep: segmentation, self-transition augmentation, tables/beta/rows, parameters.
SweepDiagnostics gibbs_sweep(WeakLimitState& state, const Matrix& data, Rng& rng);

/// Observed (complete, censored) durations of the segments labelled `label`.
void segment_durations(const SegmentSequence& seg, int label, std::vector<int>& complete,
                       std::vector<int>& censored);

/// Rows of `data` whose frame label equals `label`.
Matrix frames_with_label(const Matrix& data, const std::vector<int>& labels, int label);

}  // namespace hsmm
