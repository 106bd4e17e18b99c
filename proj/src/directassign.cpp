#include "hsmm/directassign.hpp"

#include <algorithm>
#include <cmath>

#include "hsmm/blocksampler.hpp"
#include "hsmm/errors.hpp"

namespace hsmm {

void DirectAssignConfig::validate() const {
  if (!(gamma > 0.0) || !(alpha > 0.0)) throw InvalidConfig("gamma and alpha must be > 0");
  if (d_max < 0) throw InvalidConfig("d_max must be >= 0");
  if (!(d_max_tail > 0.0 && d_max_tail < 1.0)) throw InvalidConfig("d_max tail mass must lie in (0, 1)");
  if (init_segment_length < 1) throw InvalidConfig("initial segment length must be >= 1");
  if (init_states < 1) throw InvalidConfig("initial state count must be >= 1");
  obs_prior.validate();
  hsmm::validate(duration);
}

void CrfState::validate(const Matrix& data) const {
  const int K = states();
  seg.validate(static_cast<int>(data.rows()));
  if (static_cast<int>(durations.size()) != K || static_cast<int>(stats.size()) != K)
    throw InvalidParameter("direct-assignment state: per-state vectors disagree in length");
  std::vector<int> used(K, 0);
  for (const auto& s : seg.segments) {
    if (s.label >= K) throw InvalidParameter("direct-assignment state: label out of range");
    used[s.label] = 1;
  }
  if (std::find(used.begin(), used.end(), 0) != used.end())
    throw InvalidParameter("direct-assignment state: instantiated state without segments");
  double total = beta_rem;
  for (double b : beta) {
    if (!(b >= 0.0)) throw InvalidParameter("direct-assignment state: negative weight");
    total += b;
  }
  if (std::abs(total - 1.0) > 1e-12) throw InvalidParameter("direct-assignment state: weights do not sum to one");
  if ((transitions.array() < 0).any()) throw InvalidParameter("direct-assignment state: negative counts");
}

namespace {

/// Appends an empty state split off the remainder with a Beta(1, gamma) stick.
void instantiate_candidate(CrfState& state, Rng& rng) {
  const double nu = beta_sample(1.0, state.config.gamma, rng);
  const double w = nu * state.beta_rem;
  state.beta.push_back(w);
  state.beta_rem -= w;
  state.durations.push_back(sample_prior(state.config.duration, rng));
  state.obs_params.push_back({});
  state.stats.emplace_back(state.config.obs_prior.dim());
  const int K = state.states();
  state.transitions.conservativeResize(K, K);
  state.transitions.row(K - 1).setZero();
  state.transitions.col(K - 1).setZero();
}

void drop_last_state(CrfState& state) {
  state.beta_rem += state.beta.back();
  state.beta.pop_back();
  state.durations.pop_back();
  state.obs_params.pop_back();
  state.stats.pop_back();
  const int K = state.states();
  state.transitions.conservativeResize(K, K);
}

MessageOptions message_options(const DirectAssignConfig& config, std::span<const Duration> durations, int T) {
  MessageOptions options;
  options.d_max = config.d_max > 0 ? config.d_max : adaptive_d_max(durations, T, config.d_max_tail);
  options.censoring = config.censoring;
  return options;
}

}  // namespace

void recompute_bookkeeping(CrfState& state, const Matrix& data) {
  const int K = state.states();
  state.stats.assign(K, NiwStats(static_cast<int>(data.cols())));
  state.transitions = CountMatrix::Zero(K, K);
  const std::vector<int> starts = state.seg.starts();
  for (std::size_t s = 0; s < state.seg.size(); ++s) {
    const auto& segment = state.seg.segments[s];
    state.stats[segment.label].add(NiwStats::of_rows(data, starts[s], starts[s] + segment.duration));
    if (s + 1 < state.seg.size()) ++state.transitions(segment.label, state.seg.segments[s + 1].label);
  }
}

CrfState init_direct_state(const DirectAssignConfig& config, const Matrix& data, Rng& rng) {
  config.validate();
  const int T = static_cast<int>(data.rows());
  if (T < 1) throw InvalidParameter("data must contain at least one frame");
  if (data.cols() != config.obs_prior.dim()) throw InvalidParameter("data dimension does not match the prior");

  CrfState state;
  state.config = config;
  const int K0 = std::min(config.init_states, (T + config.init_segment_length - 1) / config.init_segment_length);
  if (K0 == 1) {
    state.seg.segments.push_back({0, T});
  } else {
    std::uniform_int_distribution<int> first(0, K0 - 1);
    std::uniform_int_distribution<int> other(0, K0 - 2);
    int label = first(rng);
    for (int t = 0; t < T; t += config.init_segment_length) {
      if (t > 0) {
        const int next = other(rng);
        label = next >= label ? next + 1 : next;
      }
      state.seg.segments.push_back({label, std::min(config.init_segment_length, T - t)});
    }
  }
  // Relabel so that states are numbered by first appearance and all are used.
  std::vector<int> remap(K0, -1);
  int next_label = 0;
  for (auto& s : state.seg.segments) {
    if (remap[s.label] < 0) remap[s.label] = next_label++;
    s.label = remap[s.label];
  }
  state.beta_rem = 1.0;
  for (int k = 0; k < next_label; ++k) {
    const double w = beta_sample(1.0, config.gamma, rng) * state.beta_rem;
    state.beta.push_back(w);
    state.beta_rem -= w;
    state.durations.push_back(sample_prior(config.duration, rng));
  }
  state.obs_params.resize(next_label);
  recompute_bookkeeping(state, data);
  state.counts = state.transitions;
  return state;
}

void resample_superstate_label(CrfState& state, int s, const Matrix& data, Rng& rng) {
  const int S = static_cast<int>(state.seg.size());
  if (s < 0 || s >= S) throw DomainError("segment index out of range");
  const double alpha = state.config.alpha;
  const NIWParams& prior = state.config.obs_prior;

  int begin = 0;
  for (int i = 0; i < s; ++i) begin += state.seg.segments[i].duration;
  Segment& seg = state.seg.segments[s];
  const NiwStats seg_stats = NiwStats::of_rows(data, begin, begin + seg.duration);
  const bool censored = state.seg.censored_last && s == S - 1;
  const int prev = s > 0 ? state.seg.segments[s - 1].label : -1;
  const int next = s + 1 < S ? state.seg.segments[s + 1].label : -1;

  // Remove the segment's contribution.
  state.stats[seg.label].remove(seg_stats);
  if (prev >= 0) --state.transitions(prev, seg.label);
  if (next >= 0) --state.transitions(seg.label, next);

  instantiate_candidate(state, rng);
  const int K = state.states();

  std::vector<double> logits(K);
  for (int k = 0; k < K; ++k) {
    const double b = state.beta[k];
    double lp = prev >= 0 ? std::log(alpha * b + state.transitions(prev, k)) : std::log(b);
    if (next >= 0) {
      lp += std::log(alpha * state.beta[next] + state.transitions(k, next)) -
            std::log(alpha * (1.0 - b) + state.transitions.row(k).sum());
    }
    NiwStats with = state.stats[k];
    with.add(seg_stats);
    lp += niw_marginal_loglike(prior, with) - niw_marginal_loglike(prior, state.stats[k]);
    lp += censored ? log_sf(state.durations[k], seg.duration) : log_pmf(state.durations[k], seg.duration);
    logits[k] = lp;
  }

  // Rejection loop over the unconstrained predictive.
  double hi = kNegInf;
  for (double v : logits) hi = std::max(hi, std::isnan(v) ? kNegInf : v);
  if (hi == kNegInf) throw DegenerateModel("segment label has no candidate with positive mass");
  std::vector<double> cdf(K);
  double acc = 0.0;
  for (int k = 0; k < K; ++k) {
    acc += std::isnan(logits[k]) ? 0.0 : std::exp(logits[k] - hi);
    cdf[k] = acc;
  }
  constexpr long kMaxRejections = 1000000;
  int chosen = -1;
  for (long attempt = 0; attempt <= kMaxRejections; ++attempt) {
    const double u = std::generate_canonical<double, 53>(rng) * acc;
    int k = static_cast<int>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    k = std::min(k, K - 1);
    if (k == prev || k == next) {
      ++state.rejections;
      continue;
    }
    chosen = k;
    break;
  }
  if (chosen < 0) throw DegenerateModel("label resampling exceeded the rejection cap");

  seg.label = chosen;
  state.stats[chosen].add(seg_stats);
  if (prev >= 0) ++state.transitions(prev, chosen);
  if (next >= 0) ++state.transitions(chosen, next);
  if (chosen != K - 1) drop_last_state(state);
}

void prune_unused_states(CrfState& state) {
  const int K = state.states();
  std::vector<int> used(K, 0);
  for (const auto& s : state.seg.segments) used[s.label] = 1;
  std::vector<int> remap(K, -1);
  int kept = 0;
  for (int k = 0; k < K; ++k)
    if (used[k]) remap[k] = kept++;
  if (kept == K) return;

  CrfState& st = state;
  std::vector<double> beta;
  std::vector<Duration> durations;
  std::vector<GaussianParams> obs;
  std::vector<NiwStats> stats;
  CountMatrix transitions = CountMatrix::Zero(kept, kept);
  for (int k = 0; k < K; ++k) {
    if (!used[k]) {
      st.beta_rem += st.beta[k];
      continue;
    }
    beta.push_back(st.beta[k]);
    durations.push_back(st.durations[k]);
    obs.push_back(st.obs_params[k]);
    stats.push_back(st.stats[k]);
    for (int j = 0; j < K; ++j)
      if (used[j]) transitions(remap[k], remap[j]) = st.transitions(k, j);
  }
  for (auto& s : st.seg.segments) s.label = remap[s.label];
  st.beta = std::move(beta);
  st.durations = std::move(durations);
  st.obs_params = std::move(obs);
  st.stats = std::move(stats);
  st.transitions = std::move(transitions);
}

SegmentSequence sample_segmentation_given_superstates(const std::vector<int>& labels,
                                                      const std::vector<GaussianParams>& obs_params,
                                                      const std::vector<Duration>& durations, const Matrix& data,
                                                      const MessageOptions& options, Rng& rng, double* loglike) {
  const int S = static_cast<int>(labels.size());
  const int T = static_cast<int>(data.rows());
  if (S < 1) throw InvalidParameter("super-state sequence is empty");

  // Left-to-right chain: constructed state s emits with the parameters of labels[s].
  std::vector<Vector> per_label(obs_params.size());
  FrameLoglikes frames;
  frames.values.resize(T, S);
  std::vector<Duration> chain_durations;
  chain_durations.reserve(S);
  for (int s = 0; s < S; ++s) {
    const int k = labels[s];
    if (per_label[k].size() == 0) per_label[k] = gaussian_logpdf_rows(obs_params[k], data);
    frames.values.col(s) = per_label[k];
    chain_durations.push_back(durations[k]);
  }
  TransitionKernel kernel;
  kernel.log_probs = Matrix::Constant(S, S, kNegInf);
  for (int s = 0; s + 1 < S; ++s) kernel.log_probs(s, s + 1) = 0.0;
  std::vector<double> init_w(S, 0.0);
  init_w[0] = 1.0;
  const ProbVector init(std::move(init_w));

  MessageOptions chain_options = options;
  chain_options.censorable.assign(S, false);
  chain_options.censorable[S - 1] = true;
  chain_options.terminal.assign(S, false);
  chain_options.terminal[S - 1] = true;

  const CumSegLoglikes cum(frames);
  MessageTable msgs = backward_messages(cum, chain_durations, kernel, chain_options);
  double evidence = total_loglike(msgs, init);
  if (evidence == kNegInf && chain_options.d_max < T) {
    chain_options.d_max = MessageOptions::kExact;
    msgs = backward_messages(cum, chain_durations, kernel, chain_options);
    evidence = total_loglike(msgs, init);
  }
  if (evidence == kNegInf)
    throw ImpossibleEvidence("super-state sequence cannot cover the observations");
  if (loglike) *loglike = evidence;

  SegmentSequence out = sample_segmentation(msgs, cum, chain_durations, kernel, init, rng);
  for (auto& seg : out.segments) seg.label = labels[seg.label];
  return out;
}

SegmentSequence resample_segmentation_given_superstates(CrfState& state, const Matrix& data, Rng& rng) {
  const int K = state.states();
  state.obs_params.resize(K);
  std::vector<int> complete;
  std::vector<int> censored;
  for (int k = 0; k < K; ++k) {
    state.obs_params[k] = niw_sample(niw_posterior(state.config.obs_prior, state.stats[k]), rng);
    segment_durations(state.seg, k, complete, censored);
    state.durations[k] = posterior_resample(state.durations[k], complete, censored, rng);
  }
  std::vector<int> labels;
  labels.reserve(state.seg.size());
  for (const auto& s : state.seg.segments) labels.push_back(s.label);
  std::vector<Duration> used_durations;
  for (int k : labels) used_durations.push_back(state.durations[k]);
  const MessageOptions options = message_options(state.config, used_durations, static_cast<int>(data.rows()));
  return sample_segmentation_given_superstates(labels, state.obs_params, state.durations, data, options, rng,
                                               &state.last_loglike);
}

void resample_global_weights(CrfState& state, Rng& rng) {
  const int K = state.states();
  const double alpha = state.config.alpha;
  state.counts = state.transitions;
  // Dummy self-transitions: pi_jj is independent of the observed transitions
  // given beta, so draw it from Beta(alpha b_j, alpha (1 - b_j)) and complete
  // each observed exit from j with geometric failures.
  for (int j = 0; j < K; ++j) {
    const auto exits = static_cast<std::int64_t>(state.transitions.row(j).sum());
    if (exits == 0) continue;
    const double rest = 1.0 - state.beta[j];
    if (!(rest > 0.0)) continue;
    const double log_leave = log_beta_sample(alpha * rest, alpha * state.beta[j], rng).first;
    state.counts(j, j) += geometric_failures_total(exits, log_leave, rng);
  }
  const CountMatrix tables = sample_tables(state.counts, alpha, std::span<const double>(state.beta), rng);
  std::vector<double> a(K + 1);
  for (int k = 0; k < K; ++k) a[k] = static_cast<double>(tables.col(k).sum());
  a[state.seg.segments.front().label] += 1.0;  // x_1 is drawn from beta itself
  a[K] = state.config.gamma;
  for (int k = 0; k < K; ++k)
    if (!(a[k] > 0.0)) throw DegenerateModel("instantiated state without any table");
  const ProbVector draw = dirichlet_sample(a, rng);
  for (int k = 0; k < K; ++k) state.beta[k] = draw[k];
  state.beta_rem = draw[K];
}

SweepDiagnostics direct_sweep(CrfState& state, const Matrix& data, Rng& rng) {
  state.rejections = 0;
  for (int s = 0; s < static_cast<int>(state.seg.size()); ++s) resample_superstate_label(state, s, data, rng);
  prune_unused_states(state);

  state.seg = resample_segmentation_given_superstates(state, data, rng);
  recompute_bookkeeping(state, data);
  if (state.config.resample_beta) resample_global_weights(state, rng);

  SweepDiagnostics diag;
  diag.loglike = state.last_loglike;
  diag.used_states = state.states();
  diag.segments = static_cast<int>(state.seg.size());
  return diag;
}

}  // namespace hsmm
