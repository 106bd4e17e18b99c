#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hsmm/durations.hpp"
#include "hsmm/observations.hpp"
#include "hsmm/segments.hpp"

namespace hsmm {

/// Parameters of a finite explicit-duration HSMM.
struct HsmmParams {
  ProbVector init;
  Matrix transitions;  // row-stochastic, zero diagonal
  std::vector<Duration> durations;
  std::vector<MixtureEmission> emissions;

  int states() const { return static_cast<int>(durations.size()); }
  int dim() const { return emissions.front().components.front().dim(); }
};

struct GroundTruth {
  SegmentSequence seg;
  std::vector<int> frame_labels;
  HsmmParams params;
};

struct Simulation {
  GroundTruth truth;
  Matrix data;  // T x dim, one frame per row
};

/// Super-state loop: draw a label, draw its duration, repeat until T frames
/// are covered; the final segment is cut off at T and flagged censored when
/// its drawn duration overruns.
SegmentSequence sample_segments(const HsmmParams& params, int T, Rng& rng);

/// iid frames for each segment from its state's emission distribution.
Matrix sample_observations(const SegmentSequence& seg, const std::vector<MixtureEmission>& emissions,
                           Rng& rng);

Simulation generate_hsmm(const HsmmParams& params, int T, Rng& rng);

/// Knobs of the synthetic experiment datasets. None of these values come
/// from real recordings; they are chosen to keep desk-scale runs short.
struct ExperimentOptions {
  int T = 500;
  // poisson-hsmm
  std::vector<double> poisson_rates = {2.0, 4.0, 7.0, 11.0};
  double mixture_spread = 3.0;  // std-dev of state centers; smaller means more overlap
  // hmm-10d
  std::vector<double> geometric_p = {0.2, 0.2, 0.2, 0.2};
  // morse-synth: dit and dah widths in the usual 1:3 ratio
  int short_tone_wait = 4;
  int long_tone_wait = 14;
  double tone_p = 0.9;
  int silence_wait = 3;
  double silence_p = 0.2;
};

struct DatasetBundle {
  std::string spec;
  std::uint64_t seed = 0;
  ExperimentOptions options;
  Simulation sim;
};

/// Valid experiment ids, in a stable order.
const std::vector<std::string>& experiment_specs();

/// Builds one of the synthetic datasets: poisson-hsmm, hmm-10d or morse-synth.
DatasetBundle make_experiment(const std::string& spec, std::uint64_t seed,
                              const ExperimentOptions& options = {});

}  // namespace hsmm
