#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hsmm/rng.hpp"

namespace hsmm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Numerically stable log(sum(exp(x))). Returns -inf for empty or all -inf input.
double log_sum_exp(std::span<const double> values);
double log_sum_exp(double a, double b);

/// A point on the probability simplex.
class ProbVector {
 public:
  ProbVector() = default;
  /// Takes weights that already sum to one (within 1e-12).
  explicit ProbVector(std::vector<double> weights);

  /// Normalizes nonnegative weights with positive total mass.
  static ProbVector normalized(std::vector<double> weights);
  static ProbVector uniform(std::size_t size);

  std::size_t size() const { return weights_.size(); }
  double operator[](std::size_t i) const { return weights_[i]; }
  const std::vector<double>& weights() const { return weights_; }

 private:
  std::vector<double> weights_;
};

/// Normal-Inverse-Wishart hyperparameters.
struct NIWParams {
  Vector mean;
  double scale = 1.0;  // pseudo-count on the mean
  double dof = 3.0;
  Matrix scatter;

  int dim() const { return static_cast<int>(mean.size()); }
  /// Throws InvalidParameter when the invariants do not hold.
  void validate() const;
};

struct GaussianParams {
  Vector mean;
  Matrix covariance;

  int dim() const { return static_cast<int>(mean.size()); }
};

/// Sufficient statistics of a set of vectors: count, sum and sum of outer products.
struct NiwStats {
  int count = 0;
  Vector sum;
  Matrix outer;

  explicit NiwStats(int dim = 0)
      : sum(Vector::Zero(dim)), outer(Matrix::Zero(dim, dim)) {}

  /// Statistics of the rows [begin, end) of a T x D data matrix.
  static NiwStats of_rows(const Matrix& data, int begin, int end);

  void add(const NiwStats& other);
  void remove(const NiwStats& other);
  void add_row(const Eigen::Ref<const Vector>& x);
};

/// Lower Cholesky factor of a symmetric matrix. A matrix that fails the
/// factorization is retried once with 1e-8 added to its diagonal; if that
/// also fails an InvalidParameter error is thrown.
Matrix cholesky_lower(const Matrix& m);

/// Log density of every row of `data` under a Gaussian.
Vector gaussian_logpdf_rows(const GaussianParams& g, const Matrix& data);
double gaussian_logpdf(const GaussianParams& g, const Vector& x);

double log_multivariate_gamma(double a, int dim);

Vector standard_normal_vector(int dim, Rng& rng);

/// Log of a Gamma(shape, 1) draw; accurate for very small shapes.
double log_gamma_sample(double shape, Rng& rng);
double gamma_sample(double shape, double rate, Rng& rng);

ProbVector dirichlet_sample(std::span<const double> alpha, Rng& rng);
GaussianParams niw_sample(const NIWParams& prior, Rng& rng);
NIWParams niw_posterior(const NIWParams& prior, const Matrix& data);
NIWParams niw_posterior(const NIWParams& prior, const NiwStats& stats);
/// Log marginal likelihood of the rows of `data` with the Gaussian
/// parameters integrated against the NIW prior.
double niw_marginal_loglike(const NIWParams& prior, const Matrix& data);
double niw_marginal_loglike(const NIWParams& prior, const NiwStats& stats);

/// Draws an index with probability proportional to exp(logits).
std::size_t categorical_sample(std::span<const double> logits, Rng& rng);
double beta_sample(double a, double b, Rng& rng);
/// Log of a Beta(a, b) draw and log of its complement. Both stay exact when
/// the draw is within rounding of 0 or 1.
std::pair<double, double> log_beta_sample(double a, double b, Rng& rng);
/// Counts are whole numbers held in doubles; anything beyond this is clamped.
inline constexpr double kCountCap = 1e300;
/// Failures before the first success (support 0, 1, ...), capped at kCountCap.
double geometric_failures(double success, Rng& rng);
/// Total failures of `trials` independent geometric draws with success
/// probability exp(log_success). Below 1e-6 the scaled exponential limit is
/// used (relative error under 1e-6), so the log-success may be far below the
/// smallest double.
double geometric_failures_total(std::int64_t trials, double log_success, Rng& rng);

/// Default weakly informative NIW prior fitted to the rows of `data`:
/// empirical mean, scale 0.1, dof dim + 2, and scatter chosen so that the
/// prior mean covariance scatter / (dof - dim - 1) is the data covariance.
NIWParams default_niw_prior(const Matrix& data);

}  // namespace hsmm
