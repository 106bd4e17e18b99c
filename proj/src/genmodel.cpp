#include "hsmm/genmodel.hpp"

#include <cmath>

#include "hsmm/errors.hpp"

namespace hsmm {

SegmentSequence sample_segments(const HsmmParams& params, int T, Rng& rng) {
  const int N = params.states();
  if (params.transitions.rows() != N || params.transitions.cols() != N)
    throw InvalidParameter("transition matrix shape mismatch");
  for (int i = 0; i < N; ++i)
    if (params.transitions(i, i) != 0.0) throw InvalidParameter("transition matrix must have a zero diagonal");

  auto draw_row = [&](std::span<const double> probs) {
    std::vector<double> logits(probs.size());
    for (std::size_t j = 0; j < probs.size(); ++j) logits[j] = std::log(probs[j]);
    return static_cast<int>(categorical_sample(logits, rng));
  };

  SegmentSequence seq;
  int state = draw_row(params.init.weights());
  int tau = 0;
  std::vector<double> row(N);
  while (tau < T) {
    const int d = sample(params.durations[state], rng);
    if (d > T - tau) {
      seq.segments.push_back({state, T - tau});
      seq.censored_last = true;
      break;
    }
    seq.segments.push_back({state, d});
    tau += d;
    if (tau == T) break;
    for (int j = 0; j < N; ++j) row[j] = params.transitions(state, j);
    state = draw_row(row);
  }
  return seq;
}

Matrix sample_observations(const SegmentSequence& seg, const std::vector<MixtureEmission>& emissions,
                           Rng& rng) {
  const int dim = emissions.front().components.front().dim();
  Matrix data(seg.length(), dim);
  int t = 0;
  for (const auto& s : seg.segments)
    for (int k = 0; k < s.duration; ++k) data.row(t++) = sample_frame(emissions[s.label], rng).transpose();
  return data;
}

Simulation generate_hsmm(const HsmmParams& params, int T, Rng& rng) {
  Simulation sim;
  sim.truth.params = params;
  sim.truth.seg = sample_segments(params, T, rng);
  sim.truth.frame_labels = sim.truth.seg.frame_labels();
  sim.data = sample_observations(sim.truth.seg, params.emissions, rng);
  return sim;
}

namespace {

Matrix random_off_diagonal_rows(int n, Rng& rng) {
  Matrix out = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const std::vector<double> alpha(n - 1, 1.0);
    const ProbVector row = dirichlet_sample(alpha, rng);
    for (int j = 0, k = 0; j < n; ++j)
      if (j != i) out(i, j) = row[k++];
  }
  return out;
}

NIWParams isotropic_niw(const Vector& mean, double scale, double dof, double variance) {
  const int d = static_cast<int>(mean.size());
  return {mean, scale, dof, Matrix::Identity(d, d) * variance * (dof - d - 1)};
}

HsmmParams poisson_hsmm_params(const ExperimentOptions& opt, Rng& rng) {
  constexpr int kDim = 2;
  constexpr int kComponents = 2;
  HsmmParams p;
  const int n = static_cast<int>(opt.poisson_rates.size());
  p.init = ProbVector::uniform(n);
  p.transitions = random_off_diagonal_rows(n, rng);
  for (int j = 0; j < n; ++j) {
    p.durations.push_back(PoissonDuration{opt.poisson_rates[j], {}});
    const Vector center = opt.mixture_spread * standard_normal_vector(kDim, rng);
    MixtureEmission e;
    e.weights = dirichlet_sample(std::vector<double>(kComponents, 4.0), rng).weights();
    for (int c = 0; c < kComponents; ++c) e.components.push_back(niw_sample(isotropic_niw(center, 2.0, 8.0, 1.0), rng));
    p.emissions.push_back(std::move(e));
  }
  return p;
}

HsmmParams hmm_10d_params(const ExperimentOptions& opt, Rng& rng) {
  constexpr int kDim = 10;
  HsmmParams p;
  const int n = static_cast<int>(opt.geometric_p.size());
  p.init = ProbVector::uniform(n);
  p.transitions = random_off_diagonal_rows(n, rng);
  for (int j = 0; j < n; ++j) {
    p.durations.push_back(GeometricDuration{opt.geometric_p[j], {}});
    p.emissions.push_back({{1.0}, {niw_sample(isotropic_niw(Vector::Zero(kDim), 0.1, kDim + 4.0, 1.0), rng)}});
  }
  return p;
}

HsmmParams morse_params(const ExperimentOptions& opt, Rng& rng) {
  constexpr int kDim = 2;
  // States: 0 short tone, 1 long tone, 2 silence.
  HsmmParams p;
  p.init = ProbVector::uniform(3);
  p.transitions = Matrix::Zero(3, 3);
  p.transitions(0, 2) = 1.0;
  p.transitions(1, 2) = 1.0;
  p.transitions(2, 0) = 0.5;
  p.transitions(2, 1) = 0.5;
  DelayedGeometricDuration short_tone;
  short_tone.wait = opt.short_tone_wait;
  short_tone.p = opt.tone_p;
  DelayedGeometricDuration long_tone = short_tone;
  long_tone.wait = opt.long_tone_wait;
  DelayedGeometricDuration silence = short_tone;
  silence.wait = opt.silence_wait;
  silence.p = opt.silence_p;
  p.durations = {short_tone, long_tone, silence};

  const GaussianParams tone = niw_sample(isotropic_niw(Vector::Constant(kDim, 3.0), 4.0, kDim + 20.0, 0.6), rng);
  const GaussianParams quiet = niw_sample(isotropic_niw(Vector::Zero(kDim), 4.0, kDim + 20.0, 0.6), rng);
  p.emissions = {{{1.0}, {tone}}, {{1.0}, {tone}}, {{1.0}, {quiet}}};
  return p;
}

}  // namespace

const std::vector<std::string>& experiment_specs() {
  static const std::vector<std::string> specs = {"poisson-hsmm", "hmm-10d", "morse-synth"};
  return specs;
}

DatasetBundle make_experiment(const std::string& spec, std::uint64_t seed, const ExperimentOptions& options) {
  if (options.T < 1) throw InvalidConfig("experiment length T must be >= 1");
  Rng rng(seed);
  HsmmParams params;
  if (spec == "poisson-hsmm")
    params = poisson_hsmm_params(options, rng);
  else if (spec == "hmm-10d")
    params = hmm_10d_params(options, rng);
  else if (spec == "morse-synth")
    params = morse_params(options, rng);
  else
    throw InvalidConfig("unknown experiment spec '" + spec + "' (valid: poisson-hsmm, hmm-10d, morse-synth)");

  DatasetBundle bundle;
  bundle.spec = spec;
  bundle.seed = seed;
  bundle.options = options;
  bundle.sim = generate_hsmm(params, options.T, rng);
  return bundle;
}

}  // namespace hsmm
