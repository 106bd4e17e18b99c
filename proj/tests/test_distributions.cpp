#include <doctest.h>

#include <boost/math/special_functions/digamma.hpp>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>

#include "hsmm/distributions.hpp"
#include "hsmm/errors.hpp"
#include "oracles.hpp"

using namespace hsmm;

namespace {

NIWParams niw1(double mean, double scale, double dof, double scatter) {
  NIWParams p;
  p.mean = Vector::Constant(1, mean);
  p.scale = scale;
  p.dof = dof;
  p.scatter = Matrix::Constant(1, 1, scatter);
  return p;
}

NIWParams random_niw(int d, Rng& rng) {
  NIWParams p;
  p.mean = standard_normal_vector(d, rng);
  p.scale = oracle::uniform(rng, 0.2, 3.0);
  p.dof = d + oracle::uniform(rng, 0.5, 4.0);
  Matrix a = Matrix::Random(d, d);
  p.scatter = a * a.transpose() + Matrix::Identity(d, d);
  return p;
}

// Multivariate Student-t log density written out from its textbook form.
double student_t_logpdf(const Vector& x, double nu, const Vector& mu, const Matrix& shape) {
  const int d = static_cast<int>(x.size());
  const Vector diff = x - mu;
  const double q = diff.dot(shape.ldlt().solve(diff));
  return std::lgamma(0.5 * (nu + d)) - std::lgamma(0.5 * nu) - 0.5 * d * std::log(nu * std::numbers::pi) -
         0.5 * std::log(shape.determinant()) - 0.5 * (nu + d) * std::log1p(q / nu);
}

double predictive(const NIWParams& p, const Vector& x) {
  const int d = p.dim();
  const double nu = p.dof - d + 1.0;
  return student_t_logpdf(x, nu, p.mean, p.scatter * (p.scale + 1.0) / (p.scale * nu));
}

}  // namespace

TEST_CASE("log_sum_exp handles empty and -inf input") {
  CHECK(log_sum_exp(std::vector<double>{}) == kNegInf);
  CHECK(log_sum_exp(std::vector<double>{kNegInf, kNegInf}) == kNegInf);
  CHECK(log_sum_exp(std::vector<double>{std::log(0.25), std::log(0.75)}) == doctest::Approx(0.0));
  CHECK(log_sum_exp(1000.0, 1000.0) == doctest::Approx(1000.0 + std::log(2.0)));
}

TEST_CASE("ProbVector enforces the simplex") {
  CHECK_THROWS_AS(ProbVector({0.5, 0.6}), InvalidParameter);
  CHECK_THROWS_AS(ProbVector({-0.1, 1.1}), InvalidParameter);
  CHECK_THROWS_AS(ProbVector::normalized({0.0, 0.0}), InvalidParameter);
  const ProbVector p = ProbVector::normalized({1.0, 3.0});
  CHECK(p[1] == doctest::Approx(0.75));
  CHECK(ProbVector::uniform(4)[2] == doctest::Approx(0.25));
}

TEST_CASE("dirichlet_sample") {
  Rng rng(1);
  SUBCASE("one component") {
    CHECK(dirichlet_sample(std::vector<double>{3.7}, rng)[0] == 1.0);
  }
  SUBCASE("bad parameters") {
    CHECK_THROWS_AS(dirichlet_sample(std::vector<double>{1.0, 0.0}, rng), InvalidParameter);
    CHECK_THROWS_AS(dirichlet_sample(std::vector<double>{1.0, NAN}, rng), InvalidParameter);
    CHECK_THROWS_AS(dirichlet_sample(std::vector<double>{1.0, INFINITY}, rng), InvalidParameter);
  }
  SUBCASE("mean at (2, 1)") {
    double m0 = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) m0 += dirichlet_sample(std::vector<double>{2.0, 1.0}, rng)[0];
    CHECK(m0 / n == doctest::Approx(2.0 / 3.0).epsilon(0.015));
  }
  SUBCASE("variance at (1, 1)") {
    // Var(x_i) = a_i (a0 - a_i) / (a0^2 (a0 + 1)) = 1/12 for a = (1, 1).
    std::vector<double> x;
    for (int i = 0; i < 100000; ++i) x.push_back(dirichlet_sample(std::vector<double>{1.0, 1.0}, rng)[0]);
    const double m = oracle::mean(x);
    double v = 0.0;
    for (double xi : x) v += (xi - m) * (xi - m);
    v /= static_cast<double>(x.size() - 1);
    CHECK(v == doctest::Approx(1.0 / 12.0).epsilon(0.10));
  }
  SUBCASE("tiny concentrations stay on the simplex") {
    for (int i = 0; i < 1000; ++i) {
      const ProbVector p = dirichlet_sample(std::vector<double>(8, 1e-3), rng);
      double total = 0.0;
      for (double w : p.weights()) {
        CHECK(w > 0.0);
        total += w;
      }
      CHECK(std::abs(total - 1.0) < 1e-12);
    }
  }
  SUBCASE("same seed, same draw") {
    Rng a(42), b(42);
    CHECK(dirichlet_sample(std::vector<double>{0.3, 2.0, 1.0}, a).weights() ==
          dirichlet_sample(std::vector<double>{0.3, 2.0, 1.0}, b).weights());
  }
}

TEST_CASE("niw_sample") {
  Rng rng(2);
  SUBCASE("concentration limit") {
    NIWParams p;
    p.mean = Vector::Constant(2, 1.5);
    p.scale = 1e6;
    p.dof = 1e6;
    p.scatter = Matrix::Identity(2, 2) * 2e6;
    const GaussianParams g = niw_sample(p, rng);
    CHECK((g.mean - p.mean).cwiseAbs().maxCoeff() < 0.015);
    const Matrix target = p.scatter / p.dof;
    CHECK((g.covariance - target).cwiseAbs().maxCoeff() < 0.02 * target(0, 0));
  }
  SUBCASE("1-D variance marginal is Inverse-Gamma(dof/2, scatter/2)") {
    const NIWParams p = niw1(0.0, 1.0, 6.0, 2.0);
    double m = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) m += niw_sample(p, rng).covariance(0, 0);
    // IG(a, b) mean b / (a - 1) with a = 3, b = 1.
    CHECK(m / n == doctest::Approx(0.5).epsilon(0.02));
  }
  SUBCASE("always positive definite") {
    for (int i = 0; i < 10000; ++i) {
      Rng r(i);
      const GaussianParams g = niw_sample(random_niw(3, r), r);
      CHECK(Eigen::LLT<Matrix>(g.covariance).info() == Eigen::Success);
    }
  }
  SUBCASE("non-PD scatter is rejected") {
    NIWParams p = niw1(0.0, 1.0, 3.0, -1.0);
    CHECK_THROWS_AS(niw_sample(p, rng), InvalidParameter);
  }
}

TEST_CASE("cholesky_lower jitters once") {
  Matrix m(2, 2);
  m << 1.0, 1.0, 1.0, 1.0;  // PSD, singular: fixed by 1e-8 jitter
  const Matrix l = cholesky_lower(m);
  CHECK((l * l.transpose() - m).cwiseAbs().maxCoeff() < 1e-7);
  m << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(cholesky_lower(m), InvalidParameter);
}

TEST_CASE("niw_posterior") {
  Rng rng(3);
  const NIWParams prior = random_niw(2, rng);
  SUBCASE("empty data leaves the prior") {
    const NIWParams post = niw_posterior(prior, Matrix(0, 2));
    CHECK(post.mean == prior.mean);
    CHECK(post.scatter == prior.scatter);
    CHECK(post.scale == prior.scale);
  }
  SUBCASE("datum at the prior mean") {
    const Matrix x = prior.mean.transpose();
    const NIWParams post = niw_posterior(prior, x);
    CHECK((post.mean - prior.mean).norm() < 1e-12);
    CHECK(post.scale == doctest::Approx(prior.scale + 1.0));
  }
  SUBCASE("batch equals sequential, order irrelevant") {
    Matrix x(2, 2);
    x << 0.3, -1.0, 2.0, 0.5;
    const NIWParams batch = niw_posterior(prior, x);
    const NIWParams seq = niw_posterior(niw_posterior(prior, Matrix(x.row(0))), Matrix(x.row(1)));
    Matrix swapped(2, 2);
    swapped << x.row(1), x.row(0);
    const NIWParams rev = niw_posterior(prior, swapped);
    CHECK((batch.mean - seq.mean).norm() < 1e-12);
    CHECK((batch.scatter - seq.scatter).norm() < 1e-10);
    CHECK((batch.scatter - rev.scatter).norm() < 1e-10);
    CHECK(batch.dof == seq.dof);
  }
  SUBCASE("dimension mismatch") {
    CHECK_THROWS_AS(niw_posterior(prior, Matrix(1, 3)), InvalidParameter);
    CHECK_THROWS_AS(niw_marginal_loglike(prior, Matrix(1, 3)), InvalidParameter);
  }
}

TEST_CASE("niw_marginal_loglike") {
  Rng rng(4);
  SUBCASE("empty data") { CHECK(niw_marginal_loglike(random_niw(2, rng), Matrix(0, 2)) == 0.0); }
  SUBCASE("chain rule against a Student-t predictive") {
    for (int rep = 0; rep < 20; ++rep) {
      const int d = 1 + rep % 3;
      const NIWParams prior = random_niw(d, rng);
      Matrix y(3, d);
      for (int t = 0; t < 3; ++t) y.row(t) = standard_normal_vector(d, rng).transpose();
      double chain = 0.0;
      for (int t = 0; t < 3; ++t) {
        const NIWParams post = niw_posterior(prior, Matrix(y.topRows(t)));
        chain += predictive(post, y.row(t).transpose());
      }
      CHECK(niw_marginal_loglike(prior, y) == doctest::Approx(chain).epsilon(1e-10));
      // Same identity through the library's own posterior.
      const double split = niw_marginal_loglike(prior, Matrix(y.topRows(1))) +
                           niw_marginal_loglike(niw_posterior(prior, Matrix(y.topRows(1))), Matrix(y.bottomRows(2)));
      CHECK(std::abs(niw_marginal_loglike(prior, y) - split) < 1e-10);
    }
  }
  SUBCASE("1-D quadrature") {
    // p(y) = int int prod_t N(y_t | mu, s2) N(mu | m0, s2 / k) IG(s2 | dof/2, scatter/2) dmu ds2
    const NIWParams p = niw1(0.4, 0.7, 3.5, 1.8);
    const std::vector<double> ys = {0.1, 1.3};
    auto log_ig = [&](double s2) {
      const double a = 0.5 * p.dof, b = 0.5 * p.scatter(0, 0);
      return a * std::log(b) - std::lgamma(a) - (a + 1.0) * std::log(s2) - b / s2;
    };
    auto norm = [](double x, double m, double v) {
      return std::exp(-0.5 * (x - m) * (x - m) / v) / std::sqrt(2.0 * std::numbers::pi * v);
    };
    auto inner = [&](double s2) {
      auto f = [&](double mu) {
        double v = norm(mu, p.mean(0), s2 / p.scale);
        for (double y : ys) v *= norm(y, mu, s2);
        return v;
      };
      return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
                 f, -std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(), 15, 1e-12) *
             std::exp(log_ig(s2));
    };
    boost::math::quadrature::exp_sinh<double> outer;
    const double integral = outer.integrate(inner, 0.0, std::numeric_limits<double>::infinity());
    Matrix y(2, 1);
    y << ys[0], ys[1];
    CHECK(std::exp(niw_marginal_loglike(p, y)) == doctest::Approx(integral).epsilon(1e-6));
  }
}

TEST_CASE("categorical_sample") {
  Rng rng(5);
  CHECK_THROWS_AS(categorical_sample(std::vector<double>{kNegInf, kNegInf}, rng), EmptySupport);
  for (int i = 0; i < 1000; ++i) CHECK(categorical_sample(std::vector<double>{0.0, kNegInf}, rng) == 0);
  const int n = 100000;
  std::vector<double> counts(3, 0.0);
  for (int i = 0; i < n; ++i) counts[categorical_sample(std::vector<double>{0.0, std::log(2.0), std::log(3.0)}, rng)]++;
  CHECK(counts[0] / n == doctest::Approx(1.0 / 6.0).epsilon(0.06));
  CHECK(counts[1] / n == doctest::Approx(2.0 / 6.0).epsilon(0.03));
  CHECK(counts[2] / n == doctest::Approx(3.0 / 6.0).epsilon(0.02));
  double half = 0.0;
  for (int i = 0; i < n; ++i) half += categorical_sample(std::vector<double>{0.0, 0.0}, rng);
  CHECK(std::abs(half / n - 0.5) < 0.01);
  // Large offsets must not overflow.
  CHECK(categorical_sample(std::vector<double>{-1e300, 1e3, kNegInf}, rng) == 1);
}

TEST_CASE("beta_sample") {
  Rng rng(6);
  CHECK_THROWS_AS(beta_sample(0.0, 1.0, rng), InvalidParameter);
  CHECK_THROWS_AS(beta_sample(1.0, -2.0, rng), InvalidParameter);
  const int n = 100000;
  double m11 = 0.0, m21 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = beta_sample(1.0, 1.0, rng);
    const double y = beta_sample(2.0, 1.0, rng);
    CHECK_MESSAGE((x > 0.0 && x < 1.0 && y > 0.0 && y < 1.0), "draw outside (0, 1)");
    m11 += x;
    m21 += y;
  }
  CHECK(std::abs(m11 / n - 0.5) < 0.005);
  CHECK(std::abs(m21 / n - 2.0 / 3.0) < 0.01);
  for (int i = 0; i < 1000; ++i) {
    const double x = beta_sample(1e-3, 1e-3, rng);
    CHECK((x > 0.0 && x < 1.0));
  }
}

TEST_CASE("log_beta_sample") {
  Rng rng(9);
  const int n = 100000;
  double m = 0.0, c = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto [lx, l1x] = log_beta_sample(2.0, 3.0, rng);
    CHECK(std::exp(lx) + std::exp(l1x) == doctest::Approx(1.0));
    m += std::exp(lx);
  }
  CHECK(m / n == doctest::Approx(0.4).epsilon(0.01));
  // Beta(0.01, 1): P(x < e^-200) = e^-2, far below anything a double can hold.
  for (int i = 0; i < n; ++i) c += log_beta_sample(0.01, 1.0, rng).first < -200.0;
  CHECK(c / n == doctest::Approx(std::exp(-2.0)).epsilon(0.03));
  CHECK_THROWS_AS(log_beta_sample(0.0, 1.0, rng), InvalidParameter);
}

TEST_CASE("gamma and geometric helpers") {
  Rng rng(7);
  const int n = 100000;
  double g = 0.0, geo = 0.0;
  for (int i = 0; i < n; ++i) {
    g += gamma_sample(0.5, 2.0, rng);
    geo += static_cast<double>(geometric_failures(0.25, rng));
  }
  CHECK(g / n == doctest::Approx(0.25).epsilon(0.03));
  CHECK(geo / n == doctest::Approx(3.0).epsilon(0.03));  // (1 - q) / q
  CHECK(geometric_failures(1.0, rng) == 0);
  CHECK(geometric_failures(0.0, rng) == kCountCap);
  CHECK_THROWS_AS(geometric_failures(-0.1, rng), InvalidParameter);
  // Far below double precision the total is Gamma(trials) / q: E log(total q) = digamma(trials).
  double lg = 0.0, scaled = 0.0;
  for (int i = 0; i < n; ++i) {
    lg += std::log(geometric_failures_total(3, -600.0, rng)) - 600.0;
    scaled += geometric_failures_total(3, std::log(1e-8), rng) * 1e-8;
  }
  CHECK(lg / n == doctest::Approx(boost::math::digamma(3.0)).epsilon(0.02));
  CHECK(scaled / n == doctest::Approx(3.0).epsilon(0.02));
  CHECK(geometric_failures_total(2, -2000.0, rng) == kCountCap);
  CHECK(geometric_failures_total(0, -1.0, rng) == 0.0);
  // Log-space small-shape draws stay finite.
  for (int i = 0; i < 100; ++i) CHECK(std::isfinite(log_gamma_sample(1e-4, rng)));
}

TEST_CASE("default_niw_prior") {
  Matrix data(4, 2);
  data << 0, 0, 2, 0, 0, 2, 2, 2;
  const NIWParams p = default_niw_prior(data);
  CHECK(p.mean(0) == doctest::Approx(1.0));
  CHECK(p.scale == doctest::Approx(0.1));
  CHECK(p.dof == doctest::Approx(4.0));
  CHECK(p.scatter(0, 0) == doctest::Approx(1.0));  // E[Sigma] = scatter / (dof - 3) = population variance 1
  CHECK(p.scatter(0, 1) == doctest::Approx(0.0));
}
