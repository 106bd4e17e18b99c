#include "hsmm/messages.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hsmm/errors.hpp"

namespace hsmm {

CumSegLoglikes::CumSegLoglikes(const FrameLoglikes& frames) {
  const int T = frames.frames();
  const int N = frames.states();
  prefix_ = Matrix::Zero(T + 1, N);
  impossible_ = Eigen::MatrixXi::Zero(T + 1, N);
  for (int i = 0; i < N; ++i) {
    for (int t = 0; t < T; ++t) {
      const double v = frames.values(t, i);
      if (std::isnan(v) || v == std::numeric_limits<double>::infinity())
        throw InvalidParameter("frame log-likelihoods must be finite or -inf");
      const bool impossible = v == kNegInf;
      prefix_(t + 1, i) = prefix_(t, i) + (impossible ? 0.0 : v);
      impossible_(t + 1, i) = impossible_(t, i) + (impossible ? 1 : 0);
    }
  }
}

CumSegLoglikes cum_seg_loglikes(const FrameLoglikes& frames) { return CumSegLoglikes(frames); }

TransitionKernel TransitionKernel::from_probs(const Matrix& probs) {
  TransitionKernel k;
  k.log_probs = probs.array().log().matrix();
  return k;
}

TransitionKernel TransitionKernel::without_self_transitions(const std::vector<ProbVector>& rows) {
  const int n = static_cast<int>(rows.size());
  TransitionKernel k;
  k.log_probs = Matrix::Constant(n, n, kNegInf);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(rows[i].size()) != n) throw InvalidParameter("transition rows must be square");
    double off = 0.0;
    for (int j = 0; j < n; ++j)
      if (j != i) off += rows[i][j];
    if (!(off > 0.0)) throw DegenerateModel("transition row has no off-diagonal mass");
    const double log_off = std::log(off);
    for (int j = 0; j < n; ++j)
      if (j != i) k.log_probs(i, j) = std::log(rows[i][j]) - log_off;
  }
  return k;
}

MessageTable backward_messages(const CumSegLoglikes& cum, std::span<const Duration> durations,
                               const TransitionKernel& kernel, const MessageOptions& options) {
  if (options.d_max < 1) throw DomainError("d_max must be >= 1");
  const int T = cum.frames();
  const int N = cum.states();
  if (static_cast<int>(durations.size()) != N) throw InvalidParameter("one duration family per state required");
  if (kernel.states() != N || kernel.log_probs.cols() != N) throw InvalidParameter("kernel shape mismatch");
  if (!options.censorable.empty() && static_cast<int>(options.censorable.size()) != N)
    throw InvalidParameter("censorable mask must have one entry per state");
  if (!options.terminal.empty() && static_cast<int>(options.terminal.size()) != N)
    throw InvalidParameter("terminal mask must have one entry per state");

  const int D = std::min(options.d_max, T);
  MessageTable msgs;
  msgs.d_max = D;
  msgs.censoring = options.censoring;
  msgs.censorable = options.censorable;
  msgs.log_b = Matrix::Constant(T + 1, N, kNegInf);
  msgs.log_bstar = Matrix::Constant(T, N, kNegInf);
  if (T == 0) {
    msgs.log_b.row(0).setZero();
    return msgs;
  }

  // pmf(d, i) for d = 1..D stored at row d - 1; survival at rows 1..D.
  Matrix pmf(D, N);
  Matrix sf(D + 1, N);
  for (int i = 0; i < N; ++i) {
    for (int d = 1; d <= D; ++d) pmf(d - 1, i) = log_pmf(durations[i], d);
    for (int d = 0; d <= D; ++d) sf(d, i) = log_sf(durations[i], d);
  }

  const Matrix& prefix = cum.prefix();
  // v(s, i) = log beta_s(i) + C[s][i]; the segment score then splits off -C[t][i].
  Matrix v = Matrix::Constant(T + 1, N, kNegInf);
  msgs.log_b.row(T).setZero();
  for (int i = 0; i < static_cast<int>(options.terminal.size()); ++i)
    if (!options.terminal[i]) msgs.log_b(T, i) = kNegInf;
  v.row(T) = msgs.log_b.row(T) + prefix.row(T);

  std::vector<double> terms(static_cast<std::size_t>(D) + 1);
  std::vector<double> row_terms(N);
  std::vector<double> scaled(N);
  const Matrix probs = kernel.log_probs.unaryExpr([](double x) { return std::exp(x); });
  constexpr double kSafeSum = 1e-280;  // below this the linear-space sum may have lost digits
  for (int t = T - 1; t >= 0; --t) {
    const int remaining = T - t;
    const int max_d = std::min(D, remaining);
    for (int i = 0; i < N; ++i) {
      const bool with_censor = msgs.censors(i) && remaining <= D;
      std::size_t count = 0;
      double result;
      if (!cum.has_impossible_frames(i)) {
        const double* vc = v.col(i).data() + t;
        const double* pc = pmf.col(i).data() - 1;
        double hi = kNegInf;
        for (int d = 1; d <= max_d; ++d) {
          const double x = vc[d] + pc[d];
          terms[count++] = x;
          hi = std::max(hi, x);
        }
        if (with_censor) {
          const double x = sf(remaining, i) + prefix(T, i);
          terms[count++] = x;
          hi = std::max(hi, x);
        }
        if (hi == kNegInf) {
          result = kNegInf;
        } else {
          double acc = 0.0;
          // Clamping keeps exp off its slow path for huge negative arguments;
          // a clamped term is below 1e-217 of the largest one.
          for (std::size_t k = 0; k < count; ++k) acc += std::exp(std::max(terms[k] - hi, -500.0));
          result = hi + std::log(acc) - prefix(t, i);
        }
      } else {
        for (int d = 1; d <= max_d; ++d)
          terms[count++] = msgs.log_b(t + d, i) + pmf(d - 1, i) + cum.segment(i, t, t + d);
        if (with_censor) terms[count++] = sf(remaining, i) + cum.segment(i, t, T);
        result = log_sum_exp(std::span<const double>(terms.data(), count));
      }
      msgs.log_bstar(t, i) = result;
    }
    // beta_t(i) = sum_j A(i, j) beta*_t(j), with one shared shift per frame.
    const double shift = msgs.log_bstar.row(t).maxCoeff();
    if (shift == kNegInf) continue;  // log_b and v stay -inf
    for (int j = 0; j < N; ++j) scaled[j] = std::exp(msgs.log_bstar(t, j) - shift);
    for (int i = 0; i < N; ++i) {
      double sum = 0.0;
      for (int j = 0; j < N; ++j) sum += probs(i, j) * scaled[j];
      if (sum >= kSafeSum) {
        msgs.log_b(t, i) = shift + std::log(sum);
      } else {
        for (int j = 0; j < N; ++j) row_terms[j] = msgs.log_bstar(t, j) + kernel.log_probs(i, j);
        msgs.log_b(t, i) = log_sum_exp(row_terms);
      }
      v(t, i) = msgs.log_b(t, i) + prefix(t, i);
    }
  }
  return msgs;
}

double total_loglike(const MessageTable& msgs, const ProbVector& init) {
  if (static_cast<int>(init.size()) != msgs.states())
    throw InvalidParameter("initial distribution length does not match state count");
  std::vector<double> terms(init.size());
  for (std::size_t i = 0; i < init.size(); ++i)
    terms[i] = std::log(init[i]) + msgs.log_bstar(0, static_cast<int>(i));
  return log_sum_exp(terms);
}

int adaptive_d_max(std::span<const Duration> durations, int T, double tail_mass) {
  int out = 1;
  for (const auto& dur : durations) out = std::max(out, tail_cutoff(dur, tail_mass, T));
  return std::min(out, std::max(T, 1));
}

}  // namespace hsmm
