#include "hsmm/observations.hpp"

#include "hsmm/errors.hpp"

namespace hsmm {

MixtureEmission sample_emission_prior(const EmissionPrior& prior, Rng& rng) {
  if (prior.components < 1) throw InvalidParameter("emission needs at least one component");
  MixtureEmission out;
  if (prior.components == 1) {
    out.weights = {1.0};
  } else {
    const std::vector<double> alpha(prior.components, prior.concentration / prior.components);
    out.weights = dirichlet_sample(alpha, rng).weights();
  }
  for (int c = 0; c < prior.components; ++c) out.components.push_back(niw_sample(prior.niw, rng));
  return out;
}

Vector emission_loglikes(const MixtureEmission& emission, const Matrix& data) {
  if (emission.size() == 1) return gaussian_logpdf_rows(emission.components[0], data);
  Matrix per(data.rows(), emission.size());
  for (int c = 0; c < emission.size(); ++c)
    per.col(c) = gaussian_logpdf_rows(emission.components[c], data).array() + std::log(emission.weights[c]);
  Vector out(data.rows());
  for (Eigen::Index t = 0; t < data.rows(); ++t) {
    const Eigen::VectorXd row = per.row(t).transpose();
    out(t) = log_sum_exp(std::span<const double>(row.data(), row.size()));
  }
  return out;
}

MixtureEmission resample_emission(const MixtureEmission& current, const EmissionPrior& prior,
                                  const Matrix& frames, Rng& rng) {
  const int K = current.size();
  if (K == 1) return {{1.0}, {niw_sample(niw_posterior(prior.niw, frames), rng)}};

  const int dim = prior.niw.dim();
  std::vector<NiwStats> stats(K, NiwStats(dim));
  if (frames.rows() > 0) {
    Matrix per(frames.rows(), K);
    for (int c = 0; c < K; ++c)
      per.col(c) = gaussian_logpdf_rows(current.components[c], frames).array() + std::log(current.weights[c]);
    std::vector<double> logits(K);
    for (Eigen::Index t = 0; t < frames.rows(); ++t) {
      for (int c = 0; c < K; ++c) logits[c] = per(t, c);
      stats[categorical_sample(logits, rng)].add_row(frames.row(t).transpose());
    }
  }
  MixtureEmission out;
  std::vector<double> alpha(K);
  for (int c = 0; c < K; ++c) alpha[c] = prior.concentration / K + stats[c].count;
  out.weights = dirichlet_sample(alpha, rng).weights();
  for (int c = 0; c < K; ++c) out.components.push_back(niw_sample(niw_posterior(prior.niw, stats[c]), rng));
  return out;
}

Vector sample_frame(const MixtureEmission& emission, Rng& rng) {
  std::vector<double> logits(emission.size());
  for (int c = 0; c < emission.size(); ++c) logits[c] = std::log(emission.weights[c]);
  const auto& g = emission.components[categorical_sample(logits, rng)];
  return g.mean + cholesky_lower(g.covariance) * standard_normal_vector(g.dim(), rng);
}

}  // namespace hsmm
