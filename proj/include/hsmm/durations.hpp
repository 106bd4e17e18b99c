#pragma once

#include <span>
#include <string>
#include <variant>
#include <vector>

#include "hsmm/rng.hpp"

namespace hsmm {

// Duration distributions over segment lengths d >= 1.
//
// Every family shares one contract: log_pmf(d), log_sf(d) = log P(D > d),
// sample(), and posterior_resample() given complete durations and right-censored
// observed lengths. A censored entry `c` means the segment was cut off after
// `c` frames, so the true duration satisfies D > c.

struct BetaPrior {
  double a = 1.0;
  double b = 1.0;
};

struct GammaPrior {
  double shape = 2.0;
  double rate = 0.2;
};

/// pmf(d) = p (1 - p)^(d - 1); p is the per-frame termination probability.
struct GeometricDuration {
  double p = 0.5;
  BetaPrior prior;
};

/// d - 1 ~ Poisson(rate).
struct PoissonDuration {
  double rate = 1.0;
  GammaPrior prior;
};

/// d - 1 ~ NegBin(r, p), the number of failures before the r-th success.
struct NegBinDuration {
  int r = 1;
  double p = 0.5;
  std::vector<int> r_support = {1, 2, 3, 4, 5, 6};
  BetaPrior prior;
};

/// d = wait + g with g ~ Geometric(p) on {1, 2, ...}.
struct DelayedGeometricDuration {
  int wait = 0;
  double p = 0.5;
  std::vector<int> wait_support = default_wait_support();
  BetaPrior prior;

  static std::vector<int> default_wait_support() {
    std::vector<int> s(21);
    for (int i = 0; i <= 20; ++i) s[i] = i;
    return s;
  }
};

using Duration = std::variant<GeometricDuration, PoissonDuration, NegBinDuration,
                              DelayedGeometricDuration>;

/// Throws InvalidParameter if the parameters or priors are out of range.
void validate(const Duration& dur);

double log_pmf(const Duration& dur, int d);
double log_sf(const Duration& dur, int d);
int sample(const Duration& dur, Rng& rng);

/// A fresh parameter draw from the family's prior (priors and supports kept).
Duration sample_prior(const Duration& dur, Rng& rng);

/// Draws new parameters from the conditional posterior. Censored lengths are
/// first imputed from the truncated tail under the current parameters.
Duration posterior_resample(const Duration& dur, std::span<const int> complete,
                            std::span<const int> censored, Rng& rng);

/// Draws D conditioned on D > bound under the current parameters.
int sample_tail(const Duration& dur, int bound, Rng& rng);

/// Family name as used in configs: geometric, poisson, negbin, delayed-geometric.
std::string family_name(const Duration& dur);

/// Smallest d with log_sf(d) < log(tail_mass), capped at `cap`.
int tail_cutoff(const Duration& dur, double tail_mass, int cap);

}  // namespace hsmm
