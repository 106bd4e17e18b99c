#include "hsmm/weaklimit.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include <boost/math/special_functions/digamma.hpp>

#include "hsmm/blocksampler.hpp"
#include "hsmm/errors.hpp"

namespace hsmm {

void WeakLimitConfig::validate() const {
  if (L < 2) throw InvalidConfig("weak-limit truncation L must be >= 2");
  if (!(gamma > 0.0) || !(alpha > 0.0)) throw InvalidConfig("gamma and alpha must be > 0");
  if (d_max < 0) throw InvalidConfig("d_max must be >= 0");
  if (!(d_max_tail > 0.0 && d_max_tail < 1.0)) throw InvalidConfig("d_max tail mass must lie in (0, 1)");
  if (init_segment_length < 1) throw InvalidConfig("initial segment length must be >= 1");
  if (emission.components < 1) throw InvalidConfig("emission needs at least one mixture component");
  emission.niw.validate();
  hsmm::validate(duration);
}

void WeakLimitState::validate(int T) const {
  const int n = L();
  if (static_cast<int>(rows.size()) != n || static_cast<int>(leave.size()) != n ||
      static_cast<int>(emissions.size()) != n ||
      static_cast<int>(durations.size()) != n)
    throw InvalidParameter("weak-limit state: per-state vectors must have length L");
  ProbVector check(beta.weights());
  for (const auto& r : rows) {
    if (static_cast<int>(r.size()) != n) throw InvalidParameter("weak-limit state: row length != L");
    ProbVector row_check(r.weights());
  }
  for (int j = 0; j < n; ++j)
    if (static_cast<int>(leave[j].size()) != n || leave[j][j] != 0.0)
      throw InvalidParameter("weak-limit state: leave row must have length L and a zero diagonal");
  seg.validate(T);
  for (const auto& s : seg.segments)
    if (s.label >= n) throw InvalidParameter("weak-limit state: label out of range");
  if (counts.size() > 0) {
    if ((counts.array() < 0).any() || (tables.array() < 0).any())
      throw InvalidParameter("weak-limit state: negative counts");
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        if (tables(j, k) > counts(j, k) || (counts(j, k) >= 1 && tables(j, k) < 1))
          throw InvalidParameter("weak-limit state: table counts out of range");
  }
}

namespace {

double rest_of(const ProbVector& beta, int j) {
  double rest = 0.0;
  for (int k = 0; k < static_cast<int>(beta.size()); ++k)
    if (k != j) rest += beta[k];
  return rest;
}

CountMatrix raw_transition_counts(const SegmentSequence& seg, int L) {
  CountMatrix n = CountMatrix::Zero(L, L);
  for (std::size_t s = 0; s + 1 < seg.size(); ++s) ++n(seg.segments[s].label, seg.segments[s + 1].label);
  return n;
}

}  // namespace

WeakLimitState init_state(const WeakLimitConfig& config, const Matrix& data, Rng& rng) {
  config.validate();
  const int L = config.L;
  const int T = static_cast<int>(data.rows());
  if (T < 1) throw InvalidParameter("data must contain at least one frame");
  if (data.cols() != config.emission.niw.dim())
    throw InvalidParameter("data dimension does not match the emission prior");

  WeakLimitState state;
  state.config = config;
  state.beta = dirichlet_sample(std::vector<double>(L, config.gamma / L), rng);
  sample_rows(CountMatrix::Zero(L, L), config.alpha, state.beta, state.rows, state.leave, rng);
  for (int j = 0; j < L; ++j) {
    state.emissions.push_back(sample_emission_prior(config.emission, rng));
    state.durations.push_back(sample_prior(config.duration, rng));
  }

  std::uniform_int_distribution<int> first(0, L - 1);
  std::uniform_int_distribution<int> other(0, L - 2);
  int label = first(rng);
  for (int t = 0; t < T; t += config.init_segment_length) {
    if (t > 0) {
      const int next = other(rng);
      label = next >= label ? next + 1 : next;
    }
    state.seg.segments.push_back({label, std::min(config.init_segment_length, T - t)});
  }
  state.counts = raw_transition_counts(state.seg, L);
  state.tables = sample_tables(state.counts, config.alpha, state.beta, rng);
  return state;
}

CountMatrix augment_self_transitions(const SegmentSequence& seg, const std::vector<ProbVector>& rows, Rng& rng) {
  std::vector<double> log_leave;
  for (std::size_t j = 0; j < rows.size(); ++j) log_leave.push_back(std::log1p(-rows[j][j]));
  return augment_self_transitions(seg, log_leave, rng);
}

CountMatrix augment_self_transitions(const SegmentSequence& seg, std::span<const double> log_leave, Rng& rng) {
  const int L = static_cast<int>(log_leave.size());
  CountMatrix n = raw_transition_counts(seg, L);
  // Each observed transition out of j was preceded by a geometric number of
  // rejected self-transitions; the final segment has no observed exit.
  for (int j = 0; j < L; ++j) {
    const auto exits = static_cast<std::int64_t>(n.row(j).sum());
    n(j, j) += geometric_failures_total(exits, log_leave[j], rng);
  }
  return n;
}

std::vector<double> sample_log_leave(const ProbVector& beta, double alpha, Rng& rng) {
  std::vector<double> out;
  for (int j = 0; j < static_cast<int>(beta.size()); ++j)
    out.push_back(log_beta_sample(alpha * rest_of(beta, j), alpha * beta[j], rng).first);
  return out;
}

CountMatrix sample_tables(const CountMatrix& counts, double alpha, const ProbVector& beta, Rng& rng) {
  return sample_tables(counts, alpha, std::span<const double>(beta.weights()), rng);
}

CountMatrix sample_tables(const CountMatrix& counts, double alpha, std::span<const double> beta, Rng& rng) {
  if (static_cast<Eigen::Index>(beta.size()) != counts.cols())
    throw InvalidParameter("table sampler: weight vector length mismatch");
  const int L = static_cast<int>(counts.rows());
  CountMatrix m = CountMatrix::Zero(L, counts.cols());
  for (int j = 0; j < L; ++j) {
    for (int k = 0; k < counts.cols(); ++k) {
      const double ab = alpha * beta[k];
      const double n = counts(j, k);
      const auto exact = static_cast<std::int64_t>(std::min(n, static_cast<double>(kExactTableCustomers)));
      std::int64_t tables = 0;
      for (std::int64_t i = 0; i < exact; ++i) {
        if (i == 0 || std::generate_canonical<double, 53>(rng) * (ab + i) < ab) ++tables;
      }
      if (n > exact && ab > 0.0) {
        // Rare-event tail: sum_{i=exact}^{n-1} ab / (ab + i) as digamma difference.
        const double mean =
            ab * (boost::math::digamma(ab + n) - boost::math::digamma(ab + static_cast<double>(exact)));
        tables += std::poisson_distribution<std::int64_t>(mean)(rng);
      }
      m(j, k) = static_cast<double>(tables);
    }
  }
  return m;
}

ProbVector sample_beta(const CountMatrix& tables, double gamma, Rng& rng) {
  return sample_beta(tables, gamma, -1, rng);
}

ProbVector sample_beta(const CountMatrix& tables, double gamma, int first_label, Rng& rng) {
  const int L = static_cast<int>(tables.cols());
  std::vector<double> a(L);
  for (int k = 0; k < L; ++k) a[k] = gamma / L + static_cast<double>(tables.col(k).sum());
  if (first_label >= 0) a[first_label] += 1.0;
  return dirichlet_sample(a, rng);
}

std::vector<ProbVector> sample_rows(const CountMatrix& counts, double alpha, const ProbVector& beta, Rng& rng) {
  std::vector<ProbVector> rows, leave;
  sample_rows(counts, alpha, beta, rows, leave, rng);
  return rows;
}

void sample_rows(const CountMatrix& counts, double alpha, const ProbVector& beta, std::vector<ProbVector>& rows,
                 std::vector<ProbVector>& leave, Rng& rng) {
  const int L = static_cast<int>(beta.size());
  rows.clear();
  leave.clear();
  std::vector<double> a;
  for (int j = 0; j < L; ++j) {
    a.clear();
    double exits = 0.0;
    for (int k = 0; k < L; ++k) {
      if (k == j) continue;
      a.push_back(alpha * beta[k] + counts(j, k));
      exits += counts(j, k);
    }
    const ProbVector off = dirichlet_sample(a, rng);
    std::vector<double> w(L, 0.0);
    for (int k = 0, i = 0; k < L; ++k)
      if (k != j) w[k] = off[i++];
    leave.push_back(ProbVector::normalized(w));
    const double stay =
        std::exp(log_beta_sample(alpha * beta[j] + counts(j, j), alpha * rest_of(beta, j) + exits, rng).first);
    for (int k = 0; k < L; ++k) w[k] *= 1.0 - stay;
    w[j] = stay;
    rows.push_back(ProbVector::normalized(std::move(w)));
  }
}

void segment_durations(const SegmentSequence& seg, int label, std::vector<int>& complete,
                       std::vector<int>& censored) {
  complete.clear();
  censored.clear();
  for (std::size_t s = 0; s < seg.size(); ++s) {
    if (seg.segments[s].label != label) continue;
    const bool cut = seg.censored_last && s + 1 == seg.size();
    (cut ? censored : complete).push_back(seg.segments[s].duration);
  }
}

Matrix frames_with_label(const Matrix& data, const std::vector<int>& labels, int label) {
  const auto count = std::count(labels.begin(), labels.end(), label);
  Matrix out(count, data.cols());
  Eigen::Index r = 0;
  for (std::size_t t = 0; t < labels.size(); ++t)
    if (labels[t] == label) out.row(r++) = data.row(static_cast<Eigen::Index>(t));
  return out;
}

void resample_params(WeakLimitState& state, const Matrix& data, Rng& rng) {
  const std::vector<int> labels = state.seg.frame_labels();
  std::vector<int> complete;
  std::vector<int> censored;
  for (int j = 0; j < state.L(); ++j) {
    state.emissions[j] =
        resample_emission(state.emissions[j], state.config.emission, frames_with_label(data, labels, j), rng);
    segment_durations(state.seg, j, complete, censored);
    state.durations[j] = posterior_resample(state.durations[j], complete, censored, rng);
  }
}

FrameLoglikes frame_loglikes(const std::vector<MixtureEmission>& emissions, const Matrix& data) {
  FrameLoglikes out;
  out.values.resize(data.rows(), static_cast<Eigen::Index>(emissions.size()));
  for (std::size_t j = 0; j < emissions.size(); ++j)
    out.values.col(static_cast<Eigen::Index>(j)) = emission_loglikes(emissions[j], data);
  return out;
}

SweepDiagnostics resample_segmentation(WeakLimitState& state, const Matrix& data, Rng& rng) {
  const int T = static_cast<int>(data.rows());
  const CumSegLoglikes cum(frame_loglikes(state.emissions, data));
  const TransitionKernel kernel = TransitionKernel::without_self_transitions(state.leave);
  MessageOptions options;
  options.d_max = state.config.d_max > 0 ? state.config.d_max
                                         : adaptive_d_max(state.durations, T, state.config.d_max_tail);
  options.censoring = state.config.censoring;
  const MessageTable msgs = backward_messages(cum, state.durations, kernel, options);
  const ProbVector& init = state.init();

  SweepDiagnostics diag;
  diag.loglike = total_loglike(msgs, init);
  diag.d_max = msgs.d_max;
  state.seg = sample_segmentation(msgs, cum, state.durations, kernel, init, rng);
  std::set<int> used;
  for (const auto& s : state.seg.segments) used.insert(s.label);
  diag.used_states = static_cast<int>(used.size());
  diag.segments = static_cast<int>(state.seg.size());
  return diag;
}

SweepDiagnostics gibbs_sweep(WeakLimitState& state, const Matrix& data, Rng& rng) {
  const SweepDiagnostics diag = resample_segmentation(state, data, rng);
  // pi_jj is redrawn from its conditional given beta rather than reused; the
  // segmentation never sees it, and reusing it makes log n_jj a slow random walk.
  state.counts =
      augment_self_transitions(state.seg, sample_log_leave(state.beta, state.config.alpha, rng), rng);
  state.tables = sample_tables(state.counts, state.config.alpha, state.beta, rng);
  state.beta = sample_beta(state.tables, state.config.gamma, state.seg.segments.front().label, rng);
  sample_rows(state.counts, state.config.alpha, state.beta, state.rows, state.leave, rng);
  resample_params(state, data, rng);
  return diag;
}

}  // namespace hsmm
