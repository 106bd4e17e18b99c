#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hsmm/directassign.hpp"
#include "hsmm/genmodel.hpp"
#include "hsmm/weaklimit.hpp"

namespace hsmm::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

inline const std::vector<std::string> kModels = {"hdp-hsmm-weak-limit", "hdp-hsmm-direct", "hdp-hmm-equivalent"};
inline const std::vector<std::string> kDurations = {"geometric", "poisson", "negbin", "delayed-geometric"};

struct NiwOverrides {
  std::optional<std::vector<double>> mean;
  std::optional<double> scale;
  std::optional<double> dof;
  std::optional<std::vector<std::vector<double>>> scatter;
};

struct RunConfig {
  std::string model = "hdp-hsmm-weak-limit";
  std::string duration = "poisson";
  BetaPrior p_prior;
  GammaPrior rate_prior;
  std::vector<int> r_support = {1, 2, 3, 4, 5, 6};
  std::vector<int> wait_support = DelayedGeometricDuration::default_wait_support();
  int L = 8;
  int d_max = 0;  // 0: adaptive
  double gamma = 1.0;
  double alpha = 1.0;
  NiwOverrides niw;
  int mixture_components = 1;
  double mixture_concentration = 1.0;
  int init_segment_length = 25;
  int chains = 1;
  int iterations = 100;
  std::uint64_t seed = 0;
  std::string data;
  std::string out;
  double used_state_threshold = 0.01;

  /// Throws InvalidConfig describing the first invalid field.
  void validate() const;
};

RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& config);

/// Duration family with the configured priors and the family the model implies.
Duration duration_template(const RunConfig& config);
NIWParams obs_prior(const RunConfig& config, const Matrix& data);
WeakLimitConfig weak_limit_config(const RunConfig& config, const Matrix& data);
DirectAssignConfig direct_config(const RunConfig& config, const Matrix& data);

struct TraceRecord {
  int chain = 0;
  int iteration = 0;
  std::optional<double> hamming_error;
  int used_states = 0;
  int segments = 0;
  double loglike = 0.0;
  double wall_ms = 0.0;
};

nlohmann::json to_json(const TraceRecord& r);
TraceRecord trace_from_json(const nlohmann::json& j);

struct ChainResult {
  std::vector<int> frame_labels;
  nlohmann::json final_state;
};

/// Runs one chain for config.iterations sweeps; `on_record` sees every trace record.
ChainResult run_chain(const RunConfig& config, const Matrix& data, const std::vector<int>* truth, int chain_id,
                      const std::function<void(const TraceRecord&)>& on_record);

nlohmann::json duration_to_json(const Duration& dur);
nlohmann::json weak_limit_state_json(const WeakLimitState& state);
nlohmann::json direct_state_json(const CrfState& state);

// Dataset files: data.csv (T rows of comma-separated reals), truth.csv (T
// integer labels) and meta.json.
struct Dataset {
  Matrix data;
  std::optional<std::vector<int>> truth;
  nlohmann::json meta;
};

void write_dataset(const DatasetBundle& bundle, const std::string& dir);
Dataset read_dataset(const std::string& dir);
Matrix read_matrix_csv(const std::string& path);
std::vector<int> read_labels_csv(const std::string& path);

/// Nearest-rank percentile (p in (0, 100]) of unsorted values.
double nearest_rank(std::vector<double> values, double p);

struct EvalSummary {
  struct Row {
    int iteration = 0;
    int chains = 0;
    double median = 0.0;
    double p10 = 0.0;
    double p90 = 0.0;
  };
  std::vector<Row> hamming;             // empty when no Hamming errors are available
  std::vector<std::pair<int, int>> used_state_histogram;  // (used states, chains)
  std::vector<std::string> warnings;
};

EvalSummary summarize_traces(const std::vector<TraceRecord>& records);

int cmd_generate(const std::string& spec, std::uint64_t seed, const std::string& out, const ExperimentOptions& options);
int cmd_fit(const RunConfig& config);
int cmd_eval(const std::vector<std::string>& trace_files, const std::optional<std::string>& truth,
             const std::vector<std::string>& state_files, const std::string& out);

/// Worker count: HSMM_NPB_THREADS if set, else hardware concurrency, capped by `jobs`.
int worker_count(int jobs);

}  // namespace hsmm::cli
