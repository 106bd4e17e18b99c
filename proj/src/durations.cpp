#include "hsmm/durations.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "hsmm/distributions.hpp"
#include "hsmm/errors.hpp"

namespace hsmm {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

double log_beta_fn(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

/// log(1 - x) choosing the accurate branch given both x and 1 - x.
double log_from_complements(double upper, double lower) {
  return upper < 0.5 ? std::log(upper) : std::log1p(-lower);
}

void check_beta_prior(const BetaPrior& prior) {
  if (!(prior.a > 0.0) || !(prior.b > 0.0)) throw InvalidParameter("Beta prior parameters must be > 0");
}

void check_probability(double p) {
  if (!(p > 0.0 && p <= 1.0)) throw InvalidParameter("duration probability must lie in (0, 1]");
}

double geometric_log_pmf(double p, int k) {  // k >= 1 trials, pmf p (1-p)^(k-1)
  if (p == 1.0) return k == 1 ? 0.0 : kNegInf;
  return std::log(p) + (k - 1) * std::log1p(-p);
}

double geometric_log_sf(double p, int k) {  // P(G > k)
  if (k <= 0) return 0.0;
  if (p == 1.0) return kNegInf;
  return k * std::log1p(-p);
}

int geometric_sample(double p, Rng& rng) {
  if (p == 1.0) return 1;
  std::geometric_distribution<int> geom(p);
  return 1 + geom(rng);
}

int uniform_index(std::size_t n, Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  return static_cast<int>(pick(rng));
}

// Each overload receives canonicalized (sorted) complete durations.

Duration resample(const GeometricDuration& g, const std::vector<int>& durations, Rng& rng) {
  double failures = 0.0;
  for (int d : durations) failures += d - 1;
  GeometricDuration out = g;
  out.p = beta_sample(g.prior.a + static_cast<double>(durations.size()), g.prior.b + failures, rng);
  return out;
}

Duration resample(const PoissonDuration& pd, const std::vector<int>& durations, Rng& rng) {
  double excess = 0.0;
  for (int d : durations) excess += d - 1;
  PoissonDuration out = pd;
  out.rate = gamma_sample(pd.prior.shape + excess,
                          pd.prior.rate + static_cast<double>(durations.size()), rng);
  out.rate = std::max(out.rate, std::numeric_limits<double>::min());
  return out;
}

Duration resample(const NegBinDuration& nb, const std::vector<int>& durations, Rng& rng) {
  const double n = static_cast<double>(durations.size());
  double failures = 0.0;
  for (int d : durations) failures += d - 1;
  std::vector<double> logits(nb.r_support.size());
  for (std::size_t k = 0; k < nb.r_support.size(); ++k) {
    const double r = nb.r_support[k];
    double lp = log_beta_fn(nb.prior.a + n * r, nb.prior.b + failures) - log_beta_fn(nb.prior.a, nb.prior.b);
    for (int d : durations) {
      const double x = d - 1;
      lp += std::lgamma(x + r) - std::lgamma(r) - std::lgamma(x + 1.0);
    }
    logits[k] = lp;
  }
  NegBinDuration out = nb;
  out.r = nb.r_support[categorical_sample(logits, rng)];
  out.p = beta_sample(nb.prior.a + n * out.r, nb.prior.b + failures, rng);
  return out;
}

Duration resample(const DelayedGeometricDuration& dg, const std::vector<int>& durations, Rng& rng) {
  const double n = static_cast<double>(durations.size());
  const int shortest = durations.empty() ? std::numeric_limits<int>::max() : durations.front();
  double total = 0.0;
  for (int d : durations) total += d;
  std::vector<double> logits(dg.wait_support.size(), kNegInf);
  for (std::size_t k = 0; k < dg.wait_support.size(); ++k) {
    const int w = dg.wait_support[k];
    if (w >= shortest) continue;
    const double failures = total - n * (w + 1);
    logits[k] = log_beta_fn(dg.prior.a + n, dg.prior.b + failures) - log_beta_fn(dg.prior.a, dg.prior.b);
  }
  if (std::all_of(logits.begin(), logits.end(), [](double v) { return v == kNegInf; }))
    throw DegeneratePosterior("delayed geometric: every wait in the support exceeds an observed duration");
  DelayedGeometricDuration out = dg;
  out.wait = dg.wait_support[categorical_sample(logits, rng)];
  out.p = beta_sample(dg.prior.a + n, dg.prior.b + total - n * (out.wait + 1), rng);
  return out;
}

}  // namespace

void validate(const Duration& dur) {
  std::visit(Overloaded{
                 [](const GeometricDuration& g) {
                   check_probability(g.p);
                   check_beta_prior(g.prior);
                 },
                 [](const PoissonDuration& pd) {
                   if (!(pd.rate > 0.0) || !std::isfinite(pd.rate))
                     throw InvalidParameter("Poisson duration rate must be > 0");
                   if (!(pd.prior.shape > 0.0) || !(pd.prior.rate > 0.0))
                     throw InvalidParameter("Gamma prior parameters must be > 0");
                 },
                 [](const NegBinDuration& nb) {
                   check_probability(nb.p);
                   check_beta_prior(nb.prior);
                   if (nb.r_support.empty() || *std::min_element(nb.r_support.begin(), nb.r_support.end()) < 1)
                     throw InvalidParameter("NegBin r support must be nonempty and >= 1");
                   if (nb.r < 1) throw InvalidParameter("NegBin r must be >= 1");
                 },
                 [](const DelayedGeometricDuration& dg) {
                   check_probability(dg.p);
                   check_beta_prior(dg.prior);
                   if (dg.wait_support.empty() ||
                       *std::min_element(dg.wait_support.begin(), dg.wait_support.end()) < 0)
                     throw InvalidParameter("wait support must be nonempty and >= 0");
                   if (dg.wait < 0) throw InvalidParameter("wait must be >= 0");
                 },
             },
             dur);
}

double log_pmf(const Duration& dur, int d) {
  if (d < 1) throw DomainError("log_pmf: duration must be >= 1");
  return std::visit(
      Overloaded{
          [d](const GeometricDuration& g) { return geometric_log_pmf(g.p, d); },
          [d](const PoissonDuration& pd) {
            const double k = d - 1;
            return k * std::log(pd.rate) - pd.rate - std::lgamma(k + 1.0);
          },
          [d](const NegBinDuration& nb) {
            const double x = d - 1;
            const double r = nb.r;
            const double tail = nb.p == 1.0 ? (x == 0.0 ? 0.0 : kNegInf) : x * std::log1p(-nb.p);
            return std::lgamma(x + r) - std::lgamma(r) - std::lgamma(x + 1.0) + r * std::log(nb.p) + tail;
          },
          [d](const DelayedGeometricDuration& dg) {
            return d <= dg.wait ? kNegInf : geometric_log_pmf(dg.p, d - dg.wait);
          },
      },
      dur);
}

double log_sf(const Duration& dur, int d) {
  if (d < 0) throw DomainError("log_sf: argument must be >= 0");
  if (d == 0) return 0.0;
  return std::visit(
      Overloaded{
          [d](const GeometricDuration& g) { return geometric_log_sf(g.p, d); },
          [d](const PoissonDuration& pd) {
            // P(D > d) = P(X >= d) for X ~ Poisson(rate).
            return log_from_complements(boost::math::gamma_p(static_cast<double>(d), pd.rate),
                                        boost::math::gamma_q(static_cast<double>(d), pd.rate));
          },
          [d](const NegBinDuration& nb) {
            if (nb.p == 1.0) return kNegInf;
            // P(X >= d) = 1 - I_p(r, d) for X failures before the r-th success.
            const double r = nb.r;
            return log_from_complements(boost::math::ibetac(r, static_cast<double>(d), nb.p),
                                        boost::math::ibeta(r, static_cast<double>(d), nb.p));
          },
          [d](const DelayedGeometricDuration& dg) { return geometric_log_sf(dg.p, d - dg.wait); },
      },
      dur);
}

int sample(const Duration& dur, Rng& rng) {
  return std::visit(Overloaded{
                        [&rng](const GeometricDuration& g) { return geometric_sample(g.p, rng); },
                        [&rng](const PoissonDuration& pd) {
                          std::poisson_distribution<int> pois(pd.rate);
                          return 1 + pois(rng);
                        },
                        [&rng](const NegBinDuration& nb) {
                          if (nb.p == 1.0) return 1;
                          std::negative_binomial_distribution<int> negbin(nb.r, nb.p);
                          return 1 + negbin(rng);
                        },
                        [&rng](const DelayedGeometricDuration& dg) {
                          return dg.wait + geometric_sample(dg.p, rng);
                        },
                    },
                    dur);
}

int sample_tail(const Duration& dur, int bound, Rng& rng) {
  if (bound < 0) throw DomainError("sample_tail: bound must be >= 0");
  const double tail = log_sf(dur, bound);
  if (tail == kNegInf) throw DegeneratePosterior("censored duration has zero tail mass");

  // Memoryless cases are exact in closed form.
  if (const auto* g = std::get_if<GeometricDuration>(&dur)) return bound + geometric_sample(g->p, rng);
  if (const auto* dg = std::get_if<DelayedGeometricDuration>(&dur); dg && bound >= dg->wait)
    return bound + geometric_sample(dg->p, rng);

  constexpr int kMaxSteps = 100000;
  const double u = std::generate_canonical<double, 53>(rng);
  double cumulative = 0.0;
  for (int d = bound + 1; d <= bound + kMaxSteps; ++d) {
    cumulative += std::exp(log_pmf(dur, d) - tail);
    if (u <= cumulative || cumulative >= 1.0 - 1e-12) return d;
  }
  return bound + sample(dur, rng);
}

Duration sample_prior(const Duration& dur, Rng& rng) { return posterior_resample(dur, {}, {}, rng); }

Duration posterior_resample(const Duration& dur, std::span<const int> complete,
                            std::span<const int> censored, Rng& rng) {
  validate(dur);
  std::vector<int> durations(complete.begin(), complete.end());
  std::vector<int> bounds(censored.begin(), censored.end());
  for (int d : durations)
    if (d < 1) throw DomainError("complete durations must be >= 1");
  for (int c : bounds)
    if (c < 1) throw DomainError("censored lengths must be >= 1");
  std::sort(durations.begin(), durations.end());
  std::sort(bounds.begin(), bounds.end());
  for (int c : bounds) durations.push_back(sample_tail(dur, c, rng));
  std::sort(durations.begin(), durations.end());
  return std::visit([&](const auto& family) { return resample(family, durations, rng); }, dur);
}

std::string family_name(const Duration& dur) {
  return std::visit(Overloaded{
                        [](const GeometricDuration&) { return std::string("geometric"); },
                        [](const PoissonDuration&) { return std::string("poisson"); },
                        [](const NegBinDuration&) { return std::string("negbin"); },
                        [](const DelayedGeometricDuration&) { return std::string("delayed-geometric"); },
                    },
                    dur);
}

int tail_cutoff(const Duration& dur, double tail_mass, int cap) {
  const double target = std::log(tail_mass);
  if (log_sf(dur, cap) >= target) return cap;
  int lo = 0;  // log_sf(lo) >= target
  int hi = cap;
  while (hi - lo > 1) {
    const int mid = lo + (hi - lo) / 2;
    if (log_sf(dur, mid) < target)
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

}  // namespace hsmm
