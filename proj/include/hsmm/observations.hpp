#pragma once

#include <vector>

#include "hsmm/distributions.hpp"

namespace hsmm {

/// Prior over a state's emission distribution: a mixture of `components`
/// Gaussians with NIW-distributed parameters and symmetric Dirichlet weights.
struct EmissionPrior {
  NIWParams niw;
  int components = 1;
  double concentration = 1.0;  // total mass of the symmetric weight prior
};

/// Emission distribution of one state; a single Gaussian when it has one component.
struct MixtureEmission {
  std::vector<double> weights;
  std::vector<GaussianParams> components;

  int size() const { return static_cast<int>(components.size()); }
};

MixtureEmission sample_emission_prior(const EmissionPrior& prior, Rng& rng);

/// Log-likelihood of every row of `data`.
Vector emission_loglikes(const MixtureEmission& emission, const Matrix& data);

/// Conditional posterior draw given the frames assigned to the state. Mixture
/// component indicators are sampled per frame and then discarded.
MixtureEmission resample_emission(const MixtureEmission& current, const EmissionPrior& prior,
                                  const Matrix& frames, Rng& rng);

Vector sample_frame(const MixtureEmission& emission, Rng& rng);

}  // namespace hsmm
