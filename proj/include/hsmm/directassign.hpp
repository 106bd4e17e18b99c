#pragma once

#include <vector>

#include "hsmm/durations.hpp"
#include "hsmm/messages.hpp"
#include "hsmm/segments.hpp"
#include "hsmm/weaklimit.hpp"

namespace hsmm {

struct DirectAssignConfig {
  double gamma = 1.0;
  double alpha = 1.0;
  NIWParams obs_prior;
  Duration duration = GeometricDuration{};  // family and prior
  int d_max = 0;                             // 0: adaptive, as in the weak-limit sampler
  double d_max_tail = 1e-6;
  bool censoring = true;
  int init_segment_length = 25;
  int init_states = 2;
  bool resample_beta = true;

  void validate() const;
};

/// Collapsed (direct-assignment) sampler state. Transition rows and, during
/// label resampling, observation parameters are integrated out.
struct CrfState {
  DirectAssignConfig config;
  SegmentSequence seg;
  std::vector<double> beta;  // weights of instantiated states
  double beta_rem = 1.0;     // mass of all uninstantiated states
  std::vector<Duration> durations;
  std::vector<GaussianParams> obs_params;  // drawn at the start of segmentation resampling
  std::vector<NiwStats> stats;             // sufficient statistics of each state's frames
  CountMatrix transitions;                 // observed super-state transitions
  CountMatrix counts;                      // transitions plus dummy self-transitions
  long rejections = 0;                     // self-transition proposals rejected in the last sweep
  double last_loglike = 0.0;

  int states() const { return static_cast<int>(beta.size()); }
  /// Throws InvalidParameter if a type invariant is violated.
  void validate(const Matrix& data) const;
};

CrfState init_direct_state(const DirectAssignConfig& config, const Matrix& data, Rng& rng);

/// Rebuilds sufficient statistics and transition counts from the segmentation.
void recompute_bookkeeping(CrfState& state, const Matrix& data);

/// Gibbs update of the label of segment `s` (0-based). Draws from the
/// unconstrained collapsed predictive are rejected while they equal a
/// neighbouring label; a fresh state split off the remainder mass is always
/// available as a candidate.
void resample_superstate_label(CrfState& state, int s, const Matrix& data, Rng& rng);

/// Removes states without segments, returning their weight to the remainder.
void prune_unused_states(CrfState& state);

/// Draws a segmentation with the super-state sequence `labels` fixed, using
/// the left-to-right HSMM whose s-th state emits with the parameters of
/// labels[s]. Only the last constructed state may be censored.
SegmentSequence sample_segmentation_given_superstates(const std::vector<int>& labels,
                                                      const std::vector<GaussianParams>& obs_params,
                                                      const std::vector<Duration>& durations, const Matrix& data,
                                                      const MessageOptions& options, Rng& rng,
                                                      double* loglike = nullptr);

/// Samples per-state parameters from their posteriors and then the
/// segmentation given the current super-state sequence.
SegmentSequence resample_segmentation_given_superstates(CrfState& state, const Matrix& data, Rng& rng);

/// Dummy self-transition counts, table counts and a fresh draw of beta.
void resample_global_weights(CrfState& state, Rng& rng);

SweepDiagnostics direct_sweep(CrfState& state, const Matrix& data, Rng& rng);

}  // namespace hsmm
