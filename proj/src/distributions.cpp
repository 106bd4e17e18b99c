#include "hsmm/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "hsmm/errors.hpp"

namespace hsmm {

double log_sum_exp(std::span<const double> values) {
  double hi = kNegInf;
  for (double v : values) hi = std::max(hi, v);
  if (hi == kNegInf) return kNegInf;
  if (hi == std::numeric_limits<double>::infinity()) return hi;
  double acc = 0.0;
  for (double v : values) acc += std::exp(v - hi);
  return hi + std::log(acc);
}

double log_sum_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

// ---------------------------------------------------------------------------
// ProbVector

ProbVector::ProbVector(std::vector<double> weights) : weights_(std::move(weights)) {
  if (weights_.empty()) throw InvalidParameter("ProbVector: empty");
  double total = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0) || !std::isfinite(w))
      throw InvalidParameter("ProbVector: negative or non-finite weight");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw InvalidParameter("ProbVector: weights sum to " + std::to_string(total));
}

ProbVector ProbVector::normalized(std::vector<double> weights) {
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w))
      throw InvalidParameter("ProbVector: negative or non-finite weight");
    total += w;
  }
  if (!(total > 0.0)) throw InvalidParameter("ProbVector: zero total mass");
  for (double& w : weights) w /= total;
  return ProbVector(std::move(weights));
}

ProbVector ProbVector::uniform(std::size_t size) {
  return ProbVector::normalized(std::vector<double>(size, 1.0));
}

// ---------------------------------------------------------------------------
// NIW bookkeeping

void NIWParams::validate() const {
  const int d = dim();
  if (d < 1) throw InvalidParameter("NIW: empty mean");
  if (scatter.rows() != d || scatter.cols() != d)
    throw InvalidParameter("NIW: scatter shape does not match mean");
  if (!(scale > 0.0) || !std::isfinite(scale)) throw InvalidParameter("NIW: scale must be > 0");
  if (!(dof > d - 1) || !std::isfinite(dof)) throw InvalidParameter("NIW: dof must exceed dim - 1");
  if ((scatter - scatter.transpose()).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + scatter.cwiseAbs().maxCoeff()))
    throw InvalidParameter("NIW: scatter is not symmetric");
  cholesky_lower(scatter);
}

NiwStats NiwStats::of_rows(const Matrix& data, int begin, int end) {
  NiwStats s(static_cast<int>(data.cols()));
  const auto block = data.middleRows(begin, end - begin);
  s.count = end - begin;
  s.sum = block.colwise().sum().transpose();
  s.outer.noalias() = block.transpose() * block;
  return s;
}

void NiwStats::add(const NiwStats& other) {
  count += other.count;
  sum += other.sum;
  outer += other.outer;
}

void NiwStats::remove(const NiwStats& other) {
  count -= other.count;
  sum -= other.sum;
  outer -= other.outer;
}

void NiwStats::add_row(const Eigen::Ref<const Vector>& x) {
  ++count;
  sum += x;
  outer.noalias() += x * x.transpose();
}

Matrix cholesky_lower(const Matrix& m) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Matrix jittered = m;
  jittered.diagonal().array() += 1e-8;
  llt.compute(jittered);
  if (llt.info() != Eigen::Success) throw InvalidParameter("matrix is not positive definite");
  return llt.matrixL();
}

namespace {

double log_det_from_cholesky(const Matrix& lower) {
  return 2.0 * lower.diagonal().array().log().sum();
}

void check_dim(const NIWParams& prior, Eigen::Index cols) {
  if (cols != prior.dim())
    throw InvalidParameter("data dimension " + std::to_string(cols) +
                           " does not match prior dimension " + std::to_string(prior.dim()));
}

}  // namespace

Vector gaussian_logpdf_rows(const GaussianParams& g, const Matrix& data) {
  const Matrix lower = cholesky_lower(g.covariance);
  const double d = static_cast<double>(g.dim());
  const double norm = -0.5 * d * std::log(2.0 * std::numbers::pi) - 0.5 * log_det_from_cholesky(lower);
  Matrix centered = (data.rowwise() - g.mean.transpose()).transpose();
  lower.triangularView<Eigen::Lower>().solveInPlace(centered);
  return (norm - 0.5 * centered.colwise().squaredNorm().array()).matrix().transpose();
}

double gaussian_logpdf(const GaussianParams& g, const Vector& x) {
  return gaussian_logpdf_rows(g, x.transpose())(0);
}

double log_multivariate_gamma(double a, int dim) {
  double out = 0.25 * dim * (dim - 1) * std::log(std::numbers::pi);
  for (int j = 0; j < dim; ++j) out += std::lgamma(a - 0.5 * j);
  return out;
}

// ---------------------------------------------------------------------------
// Sampling

Vector standard_normal_vector(int dim, Rng& rng) {
  std::normal_distribution<double> normal;
  Vector z(dim);
  for (int i = 0; i < dim; ++i) z(i) = normal(rng);
  return z;
}

double log_gamma_sample(double shape, Rng& rng) {
  if (!(shape > 0.0) || !std::isfinite(shape))
    throw InvalidParameter("gamma shape must be positive and finite");
  if (shape >= 1.0) {
    std::gamma_distribution<double> gamma(shape, 1.0);
    return std::log(gamma(rng));
  }
  // Gamma(a) = Gamma(a + 1) * U^(1/a), kept in log space so tiny shapes do not underflow.
  std::gamma_distribution<double> gamma(shape + 1.0, 1.0);
  const double u = 1.0 - std::generate_canonical<double, 53>(rng);
  return std::log(gamma(rng)) + std::log(u) / shape;
}

double gamma_sample(double shape, double rate, Rng& rng) {
  if (!(rate > 0.0)) throw InvalidParameter("gamma rate must be positive");
  return std::exp(log_gamma_sample(shape, rng)) / rate;
}

ProbVector dirichlet_sample(std::span<const double> alpha, Rng& rng) {
  if (alpha.empty()) throw InvalidParameter("dirichlet: empty parameter vector");
  std::vector<double> logs(alpha.size());
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    if (!(alpha[i] > 0.0) || !std::isfinite(alpha[i]))
      throw InvalidParameter("dirichlet: parameters must be positive and finite");
    logs[i] = log_gamma_sample(alpha[i], rng);
  }
  const double total = log_sum_exp(logs);
  std::vector<double> w(alpha.size());
  for (std::size_t i = 0; i < w.size(); ++i)
    w[i] = std::max(std::exp(logs[i] - total), std::numeric_limits<double>::min());
  return ProbVector::normalized(std::move(w));
}

double beta_sample(double a, double b, Rng& rng) {
  if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b))
    throw InvalidParameter("beta: parameters must be positive and finite");
  const double la = log_gamma_sample(a, rng);
  const double lb = log_gamma_sample(b, rng);
  const double x = 1.0 / (1.0 + std::exp(lb - la));
  return std::clamp(x, std::numeric_limits<double>::min(), std::nextafter(1.0, 0.0));
}

std::size_t categorical_sample(std::span<const double> logits, Rng& rng) {
  double hi = kNegInf;
  for (double v : logits) {
    if (std::isnan(v)) throw InvalidParameter("categorical: NaN logit");
    hi = std::max(hi, v);
  }
  if (hi == kNegInf) throw EmptySupport("categorical: all logits are -inf");
  std::vector<double> cdf(logits.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    acc += std::exp(logits[i] - hi);
    cdf[i] = acc;
  }
  const double u = std::generate_canonical<double, 53>(rng) * acc;
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  std::size_t idx = static_cast<std::size_t>(it - cdf.begin());
  if (idx >= logits.size()) idx = logits.size() - 1;
  // Never land on a zero-mass atom through rounding at the upper edge.
  while (logits[idx] == kNegInf) --idx;
  return idx;
}

std::pair<double, double> log_beta_sample(double a, double b, Rng& rng) {
  if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b))
    throw InvalidParameter("beta: parameters must be positive and finite");
  const double la = log_gamma_sample(a, rng);
  const double lb = log_gamma_sample(b, rng);
  const double total = log_sum_exp(la, lb);
  return {la - total, lb - total};
}

double geometric_failures(double success, Rng& rng) {
  if (!(success >= 0.0)) throw InvalidParameter("geometric: success probability must be >= 0");
  return geometric_failures_total(1, std::log(success), rng);
}

double geometric_failures_total(std::int64_t trials, double log_success, Rng& rng) {
  if (std::isnan(log_success)) throw InvalidParameter("geometric: NaN success probability");
  if (trials <= 0 || log_success >= 0.0) return 0.0;
  if (log_success == kNegInf) return kCountCap;
  const double q = std::exp(log_success);
  if (q > 1e-6) {
    const double rate = -std::log1p(-q);
    double total = 0.0;
    for (std::int64_t i = 0; i < trials; ++i) {
      const double u = 1.0 - std::generate_canonical<double, 53>(rng);
      total += std::floor(-std::log(u) / rate);
    }
    return std::min(total, kCountCap);
  }
  // failures * q -> Exp(1) as q -> 0, so the sum is Gamma(trials) / q
  const double log_total = log_gamma_sample(static_cast<double>(trials), rng) - log_success;
  if (log_total >= std::log(kCountCap)) return kCountCap;
  return std::floor(std::exp(log_total));
}

GaussianParams niw_sample(const NIWParams& prior, Rng& rng) {
  prior.validate();
  const int d = prior.dim();
  // Bartlett decomposition of W ~ Wishart(dof, scatter^-1); covariance = W^-1.
  const Matrix scatter_inv = prior.scatter.llt().solve(Matrix::Identity(d, d));
  const Matrix c = cholesky_lower(0.5 * (scatter_inv + scatter_inv.transpose()));
  Matrix a = Matrix::Zero(d, d);
  std::normal_distribution<double> normal;
  for (int i = 0; i < d; ++i) {
    a(i, i) = std::sqrt(2.0 * std::exp(log_gamma_sample(0.5 * (prior.dof - i), rng)));
    for (int j = 0; j < i; ++j) a(i, j) = normal(rng);
  }
  const Matrix b = c * a;
  const Matrix b_inv = b.triangularView<Eigen::Lower>().solve(Matrix::Identity(d, d));
  Matrix cov = b_inv.transpose() * b_inv;
  cov = 0.5 * (cov + cov.transpose());

  GaussianParams out;
  out.covariance = cov;
  out.mean = prior.mean + cholesky_lower(cov / prior.scale) * standard_normal_vector(d, rng);
  return out;
}

NIWParams niw_posterior(const NIWParams& prior, const NiwStats& stats) {
  check_dim(prior, stats.sum.size());
  if (stats.count == 0) return prior;
  const double n = stats.count;
  const Vector xbar = stats.sum / n;
  const Matrix within = stats.outer - n * xbar * xbar.transpose();
  const Vector diff = xbar - prior.mean;

  NIWParams post;
  post.scale = prior.scale + n;
  post.dof = prior.dof + n;
  post.mean = (prior.scale * prior.mean + stats.sum) / post.scale;
  post.scatter = prior.scatter + within + (prior.scale * n / post.scale) * diff * diff.transpose();
  post.scatter = 0.5 * (post.scatter + post.scatter.transpose());
  return post;
}

NIWParams niw_posterior(const NIWParams& prior, const Matrix& data) {
  check_dim(prior, data.cols());
  return niw_posterior(prior, NiwStats::of_rows(data, 0, static_cast<int>(data.rows())));
}

double niw_marginal_loglike(const NIWParams& prior, const NiwStats& stats) {
  check_dim(prior, stats.sum.size());
  if (stats.count == 0) return 0.0;
  const NIWParams post = niw_posterior(prior, stats);
  const int d = prior.dim();
  const double n = stats.count;
  return -0.5 * n * d * std::log(std::numbers::pi) +
         log_multivariate_gamma(0.5 * post.dof, d) - log_multivariate_gamma(0.5 * prior.dof, d) +
         0.5 * prior.dof * log_det_from_cholesky(cholesky_lower(prior.scatter)) -
         0.5 * post.dof * log_det_from_cholesky(cholesky_lower(post.scatter)) +
         0.5 * d * (std::log(prior.scale) - std::log(post.scale));
}

double niw_marginal_loglike(const NIWParams& prior, const Matrix& data) {
  check_dim(prior, data.cols());
  return niw_marginal_loglike(prior, NiwStats::of_rows(data, 0, static_cast<int>(data.rows())));
}

NIWParams default_niw_prior(const Matrix& data) {
  const int d = static_cast<int>(data.cols());
  NIWParams prior;
  prior.scale = 0.1;
  prior.dof = d + 2.0;
  if (data.rows() < 2) {
    prior.mean = data.rows() == 1 ? Vector(data.row(0).transpose()) : Vector::Zero(d);
    prior.scatter = Matrix::Identity(d, d) * (prior.dof - d - 1);
    return prior;
  }
  prior.mean = data.colwise().mean().transpose();
  const Matrix centered = data.rowwise() - prior.mean.transpose();
  const Matrix cov = centered.transpose() * centered / static_cast<double>(data.rows());
  prior.scatter = cov * (prior.dof - d - 1);
  return prior;
}

}  // namespace hsmm
