#include "hsmm/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "hsmm/errors.hpp"
#include "hsmm/eval.hpp"

namespace hsmm::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool contains(const std::vector<std::string>& names, const std::string& x) {
  return std::find(names.begin(), names.end(), x) != names.end();
}

std::string joined(const std::vector<std::string>& names) {
  std::string out;
  for (const auto& n : names) out += (out.empty() ? "" : ", ") + n;
  return out;
}

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json matrix_json(const Matrix& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(row);
  }
  return out;
}

json vector_json(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

json gaussian_json(const GaussianParams& g) {
  return {{"mean", vector_json(g.mean)}, {"covariance", matrix_json(g.covariance)}};
}

json segments_json(const SegmentSequence& seg) {
  json out = json::array();
  for (const auto& s : seg.segments) out.push_back({s.label, s.duration});
  return out;
}

std::ofstream open_for_write(const fs::path& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return f;
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

void RunConfig::validate() const {
  if (!contains(kModels, model)) throw InvalidConfig("unknown model '" + model + "' (valid: " + joined(kModels) + ")");
  if (!contains(kDurations, duration))
    throw InvalidConfig("unknown duration family '" + duration + "' (valid: " + joined(kDurations) + ")");
  if (L < 2) throw InvalidConfig("L must be >= 2");
  if (d_max < 0) throw InvalidConfig("dmax must be >= 0 (0 selects it adaptively)");
  if (!(gamma > 0.0) || !(alpha > 0.0)) throw InvalidConfig("gamma and alpha must be > 0");
  if (chains < 1) throw InvalidConfig("chains must be >= 1");
  if (iterations < 1) throw InvalidConfig("iterations must be >= 1");
  if (mixture_components < 1) throw InvalidConfig("mixture_components must be >= 1");
  if (!(mixture_concentration > 0.0)) throw InvalidConfig("mixture_concentration must be > 0");
  if (init_segment_length < 1) throw InvalidConfig("init_segment_length must be >= 1");
  if (!(used_state_threshold >= 0.0 && used_state_threshold < 1.0))
    throw InvalidConfig("used_state_threshold must lie in [0, 1)");
  if (model == "hdp-hsmm-direct" && mixture_components != 1)
    throw InvalidConfig("the direct-assignment sampler supports single-Gaussian emissions only");
  if (data.empty()) throw InvalidConfig("a dataset path is required");
  if (out.empty()) throw InvalidConfig("an output path is required");
  hsmm::validate(duration_template(*this));
}

RunConfig config_from_json(const json& j) {
  RunConfig c;
  auto get = [&j](const char* key, auto& field) {
    if (j.contains(key) && !j.at(key).is_null()) j.at(key).get_to(field);
  };
  try {
    get("model", c.model);
    get("duration", c.duration);
    if (j.contains("duration_prior")) {
      const json& p = j.at("duration_prior");
      if (p.contains("beta_a")) p.at("beta_a").get_to(c.p_prior.a);
      if (p.contains("beta_b")) p.at("beta_b").get_to(c.p_prior.b);
      if (p.contains("gamma_shape")) p.at("gamma_shape").get_to(c.rate_prior.shape);
      if (p.contains("gamma_rate")) p.at("gamma_rate").get_to(c.rate_prior.rate);
      if (p.contains("r_support")) p.at("r_support").get_to(c.r_support);
      if (p.contains("wait_support")) p.at("wait_support").get_to(c.wait_support);
    }
    get("L", c.L);
    get("d_max", c.d_max);
    get("gamma", c.gamma);
    get("alpha", c.alpha);
    if (j.contains("niw")) {
      const json& n = j.at("niw");
      if (n.contains("mean")) c.niw.mean = n.at("mean").get<std::vector<double>>();
      if (n.contains("scale")) c.niw.scale = n.at("scale").get<double>();
      if (n.contains("dof")) c.niw.dof = n.at("dof").get<double>();
      if (n.contains("scatter")) c.niw.scatter = n.at("scatter").get<std::vector<std::vector<double>>>();
    }
    get("mixture_components", c.mixture_components);
    get("mixture_concentration", c.mixture_concentration);
    get("init_segment_length", c.init_segment_length);
    get("chains", c.chains);
    get("iterations", c.iterations);
    get("seed", c.seed);
    get("data", c.data);
    get("out", c.out);
    get("used_state_threshold", c.used_state_threshold);
  } catch (const json::exception& e) {
    throw InvalidConfig(std::string("malformed config: ") + e.what());
  }
  return c;
}

json config_to_json(const RunConfig& c) {
  json j = {{"model", c.model},
            {"duration", c.duration},
            {"duration_prior",
             {{"beta_a", c.p_prior.a},
              {"beta_b", c.p_prior.b},
              {"gamma_shape", c.rate_prior.shape},
              {"gamma_rate", c.rate_prior.rate},
              {"r_support", c.r_support},
              {"wait_support", c.wait_support}}},
            {"L", c.L},
            {"d_max", c.d_max},
            {"gamma", c.gamma},
            {"alpha", c.alpha},
            {"mixture_components", c.mixture_components},
            {"mixture_concentration", c.mixture_concentration},
            {"init_segment_length", c.init_segment_length},
            {"chains", c.chains},
            {"iterations", c.iterations},
            {"seed", c.seed},
            {"data", c.data},
            {"out", c.out},
            {"used_state_threshold", c.used_state_threshold}};
  json niw = json::object();
  if (c.niw.mean) niw["mean"] = *c.niw.mean;
  if (c.niw.scale) niw["scale"] = *c.niw.scale;
  if (c.niw.dof) niw["dof"] = *c.niw.dof;
  if (c.niw.scatter) niw["scatter"] = *c.niw.scatter;
  j["niw"] = niw;
  return j;
}

Duration duration_template(const RunConfig& config) {
  const std::string family = config.model == "hdp-hmm-equivalent" ? "geometric" : config.duration;
  if (family == "geometric") return GeometricDuration{0.5, config.p_prior};
  if (family == "poisson") return PoissonDuration{1.0, config.rate_prior};
  if (family == "negbin") {
    NegBinDuration nb;
    nb.r_support = config.r_support;
    nb.r = config.r_support.empty() ? 1 : config.r_support.front();
    nb.prior = config.p_prior;
    return nb;
  }
  if (family == "delayed-geometric") {
    DelayedGeometricDuration dg;
    dg.wait_support = config.wait_support;
    dg.wait = config.wait_support.empty() ? 0 : config.wait_support.front();
    dg.prior = config.p_prior;
    return dg;
  }
  throw InvalidConfig("unknown duration family '" + family + "'");
}

NIWParams obs_prior(const RunConfig& config, const Matrix& data) {
  NIWParams prior = default_niw_prior(data);
  const int d = prior.dim();
  if (config.niw.mean) {
    if (static_cast<int>(config.niw.mean->size()) != d) throw InvalidConfig("niw.mean has the wrong dimension");
    prior.mean = Eigen::Map<const Vector>(config.niw.mean->data(), d);
  }
  if (config.niw.scale) prior.scale = *config.niw.scale;
  if (config.niw.dof) {
    // Keep the implied prior mean covariance when only dof changes.
    if (!config.niw.scatter && *config.niw.dof > d + 1)
      prior.scatter *= (*config.niw.dof - d - 1) / (prior.dof - d - 1);
    prior.dof = *config.niw.dof;
  }
  if (config.niw.scatter) {
    const auto& rows = *config.niw.scatter;
    if (static_cast<int>(rows.size()) != d) throw InvalidConfig("niw.scatter has the wrong dimension");
    for (int i = 0; i < d; ++i) {
      if (static_cast<int>(rows[i].size()) != d) throw InvalidConfig("niw.scatter has the wrong dimension");
      for (int k = 0; k < d; ++k) prior.scatter(i, k) = rows[i][k];
    }
  }
  try {
    prior.validate();
  } catch (const InvalidParameter& e) {
    throw InvalidConfig(std::string("invalid NIW prior: ") + e.what());
  }
  return prior;
}

WeakLimitConfig weak_limit_config(const RunConfig& config, const Matrix& data) {
  WeakLimitConfig wl;
  wl.L = config.L;
  wl.gamma = config.gamma;
  wl.alpha = config.alpha;
  wl.emission.niw = obs_prior(config, data);
  wl.emission.components = config.mixture_components;
  wl.emission.concentration = config.mixture_concentration;
  wl.duration = duration_template(config);
  wl.d_max = config.d_max;
  wl.init_segment_length = config.init_segment_length;
  return wl;
}

DirectAssignConfig direct_config(const RunConfig& config, const Matrix& data) {
  DirectAssignConfig da;
  da.gamma = config.gamma;
  da.alpha = config.alpha;
  da.obs_prior = obs_prior(config, data);
  da.duration = duration_template(config);
  da.d_max = config.d_max;
  da.init_segment_length = config.init_segment_length;
  return da;
}

// ---------------------------------------------------------------------------
// Traces and state files

json to_json(const TraceRecord& r) {
  json j = {{"chain", r.chain},
            {"iteration", r.iteration},
            {"hamming_error", nullptr},
            {"used_states", r.used_states},
            {"segments", r.segments},
            {"loglike", r.loglike},
            {"wall_ms", r.wall_ms}};
  if (r.hamming_error) j["hamming_error"] = *r.hamming_error;
  return j;
}

TraceRecord trace_from_json(const json& j) {
  TraceRecord r;
  r.chain = j.at("chain").get<int>();
  r.iteration = j.at("iteration").get<int>();
  if (j.contains("hamming_error") && !j.at("hamming_error").is_null())
    r.hamming_error = j.at("hamming_error").get<double>();
  r.used_states = j.at("used_states").get<int>();
  r.segments = j.at("segments").get<int>();
  r.loglike = j.at("loglike").is_null() ? kNegInf : j.at("loglike").get<double>();
  r.wall_ms = j.value("wall_ms", 0.0);
  return r;
}

json duration_to_json(const Duration& dur) {
  json j = {{"family", family_name(dur)}};
  std::visit(
      [&j](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, GeometricDuration>) {
          j["p"] = d.p;
        } else if constexpr (std::is_same_v<T, PoissonDuration>) {
          j["rate"] = d.rate;
        } else if constexpr (std::is_same_v<T, NegBinDuration>) {
          j["r"] = d.r;
          j["p"] = d.p;
        } else {
          j["wait"] = d.wait;
          j["p"] = d.p;
        }
      },
      dur);
  return j;
}

json weak_limit_state_json(const WeakLimitState& state) {
  json j;
  j["beta"] = state.beta.weights();
  json rows = json::array();
  for (const auto& r : state.rows) rows.push_back(r.weights());
  j["rows"] = rows;
  json leave = json::array();
  for (const auto& r : state.leave) leave.push_back(r.weights());
  j["leave_rows"] = leave;
  json durations = json::array();
  for (const auto& d : state.durations) durations.push_back(duration_to_json(d));
  j["durations"] = durations;
  json emissions = json::array();
  for (const auto& e : state.emissions) {
    json comps = json::array();
    for (const auto& g : e.components) comps.push_back(gaussian_json(g));
    emissions.push_back({{"weights", e.weights}, {"components", comps}});
  }
  j["emissions"] = emissions;
  j["segments"] = segments_json(state.seg);
  j["censored_last"] = state.seg.censored_last;
  j["frame_labels"] = state.seg.frame_labels();
  return j;
}

json direct_state_json(const CrfState& state) {
  json j;
  j["beta"] = state.beta;
  j["beta_remainder"] = state.beta_rem;
  json durations = json::array();
  for (const auto& d : state.durations) durations.push_back(duration_to_json(d));
  j["durations"] = durations;
  json obs = json::array();
  for (const auto& g : state.obs_params) obs.push_back(g.mean.size() ? gaussian_json(g) : json(nullptr));
  j["obs_params"] = obs;
  j["segments"] = segments_json(state.seg);
  j["censored_last"] = state.seg.censored_last;
  j["frame_labels"] = state.seg.frame_labels();
  return j;
}

ChainResult run_chain(const RunConfig& config, const Matrix& data, const std::vector<int>* truth, int chain_id,
                      const std::function<void(const TraceRecord&)>& on_record) {
  Rng rng(mix_seed(config.seed, static_cast<std::uint64_t>(chain_id)));
  const bool direct = config.model == "hdp-hsmm-direct";
  std::optional<WeakLimitState> wl;
  std::optional<CrfState> da;
  if (direct)
    da = init_direct_state(direct_config(config, data), data, rng);
  else
    wl = init_state(weak_limit_config(config, data), data, rng);

  std::vector<int> labels;
  for (int it = 1; it <= config.iterations; ++it) {
    const auto start = std::chrono::steady_clock::now();
    const SweepDiagnostics diag = direct ? direct_sweep(*da, data, rng) : gibbs_sweep(*wl, data, rng);
    const auto stop = std::chrono::steady_clock::now();
    labels = direct ? da->seg.frame_labels() : wl->seg.frame_labels();

    TraceRecord r;
    r.chain = chain_id;
    r.iteration = it;
    if (truth) r.hamming_error = hamming_error(labels, *truth);
    r.used_states = used_states(labels, config.used_state_threshold);
    r.segments = diag.segments;
    r.loglike = diag.loglike;
    r.wall_ms = std::chrono::duration<double, std::milli>(stop - start).count();
    if (on_record) on_record(r);
  }
  ChainResult result;
  result.frame_labels = labels;
  result.final_state = direct ? direct_state_json(*da) : weak_limit_state_json(*wl);
  result.final_state["model"] = config.model;
  result.final_state["chain"] = chain_id;
  return result;
}

// ---------------------------------------------------------------------------
// Dataset files

void write_dataset(const DatasetBundle& bundle, const std::string& dir) {
  fs::create_directories(dir);
  const Matrix& data = bundle.sim.data;
  {
    std::ofstream f = open_for_write(fs::path(dir) / "data.csv");
    for (Eigen::Index t = 0; t < data.rows(); ++t) {
      for (Eigen::Index k = 0; k < data.cols(); ++k) f << (k ? "," : "") << format_real(data(t, k));
      f << '\n';
    }
  }
  {
    std::ofstream f = open_for_write(fs::path(dir) / "truth.csv");
    for (int label : bundle.sim.truth.frame_labels) f << label << '\n';
  }
  const ExperimentOptions& o = bundle.options;
  json meta = {{"spec", bundle.spec},
               {"seed", bundle.seed},
               {"T", data.rows()},
               {"dim", data.cols()},
               {"states", bundle.sim.truth.params.states()},
               {"segments", bundle.sim.truth.seg.size()},
               {"censored_last", bundle.sim.truth.seg.censored_last},
               {"options",
                {{"T", o.T},
                 {"poisson_rates", o.poisson_rates},
                 {"mixture_spread", o.mixture_spread},
                 {"geometric_p", o.geometric_p},
                 {"short_tone_wait", o.short_tone_wait},
                 {"long_tone_wait", o.long_tone_wait},
                 {"tone_p", o.tone_p},
                 {"silence_wait", o.silence_wait},
                 {"silence_p", o.silence_p}}}};
  json durations = json::array();
  for (const auto& d : bundle.sim.truth.params.durations) durations.push_back(duration_to_json(d));
  meta["durations"] = durations;
  std::ofstream f = open_for_write(fs::path(dir) / "meta.json");
  f << meta.dump(2) << '\n';
}

Matrix read_matrix_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw std::runtime_error(path + ":" + std::to_string(line_no) + ": not a number: '" + cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": inconsistent column count");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error(path + ": no data rows");
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t k = 0; k < rows[i].size(); ++k) m(i, k) = rows[i][k];
  return m;
}

std::vector<int> read_labels_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::vector<int> labels;
  std::string line;
  int line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      labels.push_back(std::stoi(line));
    } catch (const std::exception&) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": not an integer label");
    }
  }
  return labels;
}

Dataset read_dataset(const std::string& path) {
  Dataset ds;
  const fs::path p(path);
  if (fs::is_directory(p)) {
    ds.data = read_matrix_csv((p / "data.csv").string());
    if (fs::exists(p / "truth.csv")) ds.truth = read_labels_csv((p / "truth.csv").string());
    if (fs::exists(p / "meta.json")) {
      std::ifstream f(p / "meta.json");
      ds.meta = json::parse(f);
    }
  } else {
    ds.data = read_matrix_csv(path);
  }
  if (ds.truth && static_cast<Eigen::Index>(ds.truth->size()) != ds.data.rows())
    throw std::runtime_error(path + ": truth.csv and data.csv differ in length");
  return ds;
}

// ---------------------------------------------------------------------------
// Evaluation

double nearest_rank(std::vector<double> values, double p) {
  if (values.empty()) throw InvalidParameter("percentile of an empty set");
  std::sort(values.begin(), values.end());
  const auto n = static_cast<double>(values.size());
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * n - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

EvalSummary summarize_traces(const std::vector<TraceRecord>& records) {
  EvalSummary summary;
  std::map<int, std::vector<double>> by_iteration;
  std::map<int, TraceRecord> last_by_chain;
  for (const auto& r : records) {
    if (r.hamming_error) by_iteration[r.iteration].push_back(*r.hamming_error);
    auto it = last_by_chain.find(r.chain);
    if (it == last_by_chain.end() || it->second.iteration < r.iteration) last_by_chain[r.chain] = r;
  }
  if (by_iteration.empty() && !records.empty())
    summary.warnings.push_back("no ground truth available; Hamming error summary omitted");
  for (const auto& [iteration, values] : by_iteration) {
    summary.hamming.push_back({iteration, static_cast<int>(values.size()), nearest_rank(values, 50.0),
                               nearest_rank(values, 10.0), nearest_rank(values, 90.0)});
  }
  std::map<int, int> hist;
  for (const auto& [chain, r] : last_by_chain) ++hist[r.used_states];
  summary.used_state_histogram.assign(hist.begin(), hist.end());
  return summary;
}

// ---------------------------------------------------------------------------
// Commands

int worker_count(int jobs) {
  int n = static_cast<int>(std::thread::hardware_concurrency());
  if (const char* env = std::getenv("HSMM_NPB_THREADS")) {
    try {
      n = std::stoi(env);
    } catch (const std::exception&) {
      n = 1;
    }
  }
  return std::clamp(n, 1, std::max(jobs, 1));
}

int cmd_generate(const std::string& spec, std::uint64_t seed, const std::string& out, const ExperimentOptions& options) {
  DatasetBundle bundle;
  try {
    bundle = make_experiment(spec, seed, options);
  } catch (const InvalidConfig& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  try {
    write_dataset(bundle, out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  std::cout << "wrote " << bundle.sim.data.rows() << " frames (" << spec << ", seed " << seed << ") to " << out
            << '\n';
  return kExitOk;
}

int cmd_fit(const RunConfig& config) {
  try {
    config.validate();
  } catch (const InvalidConfig& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  Dataset ds;
  try {
    ds = read_dataset(config.data);
    // Builds and checks the model configuration before any sampling starts.
    if (config.model == "hdp-hsmm-direct")
      direct_config(config, ds.data).validate();
    else
      weak_limit_config(config, ds.data).validate();
    fs::create_directories(config.out);
    std::ofstream f = open_for_write(fs::path(config.out) / "config.json");
    f << config_to_json(config).dump(2) << '\n';
  } catch (const InvalidConfig& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }

  std::atomic<int> next{0};
  std::atomic<int> failures{0};
  std::mutex log_mutex;
  const std::vector<int>* truth = ds.truth ? &*ds.truth : nullptr;
  auto worker = [&] {
    for (int chain = next++; chain < config.chains; chain = next++) {
      char name[64];
      std::snprintf(name, sizeof name, "trace_chain_%03d.jsonl", chain);
      try {
        std::ofstream trace = open_for_write(fs::path(config.out) / name);
        const ChainResult result = run_chain(config, ds.data, truth, chain, [&trace](const TraceRecord& r) {
          trace << to_json(r).dump() << '\n';
          trace.flush();
        });
        std::snprintf(name, sizeof name, "state_chain_%03d.json", chain);
        std::ofstream state = open_for_write(fs::path(config.out) / name);
        state << result.final_state.dump() << '\n';
      } catch (const std::exception& e) {
        ++failures;
        std::lock_guard<std::mutex> lock(log_mutex);
        std::cerr << "chain " << chain << " failed: " << e.what() << '\n';
      }
    }
  };
  const int n_workers = worker_count(config.chains);
  std::vector<std::thread> pool;
  for (int w = 1; w < n_workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  if (failures > 0) {
    std::cerr << failures << " of " << config.chains << " chains failed\n";
    return kExitRuntime;
  }
  std::cout << "fit " << config.chains << " chain(s) x " << config.iterations << " iterations -> " << config.out
            << '\n';
  return kExitOk;
}

int cmd_eval(const std::vector<std::string>& trace_files, const std::optional<std::string>& truth,
             const std::vector<std::string>& state_files, const std::string& out) {
  std::vector<TraceRecord> records;
  try {
    for (const auto& path : trace_files) {
      std::ifstream f(path);
      if (!f) throw std::runtime_error("cannot open " + path);
      std::string line;
      int line_no = 0;
      while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
          records.push_back(trace_from_json(json::parse(line)));
        } catch (const json::exception& e) {
          throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }

  EvalSummary summary = summarize_traces(records);
  std::vector<double> final_errors;
  if (truth && !state_files.empty()) {
    try {
      const std::vector<int> labels = read_labels_csv(*truth);
      for (const auto& path : state_files) {
        std::ifstream f(path);
        if (!f) throw std::runtime_error("cannot open " + path);
        const json state = json::parse(f);
        final_errors.push_back(hamming_error(state.at("frame_labels").get<std::vector<int>>(), labels));
      }
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kExitRuntime;
    }
  } else if (!truth && summary.hamming.empty()) {
    summary.warnings.push_back("no --truth given; metrics requiring ground truth are omitted");
  }
  for (const auto& w : summary.warnings) std::cerr << "warning: " << w << '\n';

  try {
    fs::create_directories(out);
    {
      std::ofstream f = open_for_write(fs::path(out) / "hamming_summary.csv");
      f << "iteration,chains,median,p10,p90\n";
      for (const auto& r : summary.hamming)
        f << r.iteration << ',' << r.chains << ',' << format_real(r.median) << ',' << format_real(r.p10) << ','
          << format_real(r.p90) << '\n';
    }
    {
      std::ofstream f = open_for_write(fs::path(out) / "used_states_histogram.csv");
      f << "used_states,chains\n";
      for (const auto& [k, n] : summary.used_state_histogram) f << k << ',' << n << '\n';
    }
    if (!final_errors.empty()) {
      std::ofstream f = open_for_write(fs::path(out) / "final_hamming.csv");
      f << "state_file,hamming_error\n";
      for (std::size_t i = 0; i < final_errors.size(); ++i)
        f << state_files[i] << ',' << format_real(final_errors[i]) << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }

  if (!summary.hamming.empty()) {
    const auto& last = summary.hamming.back();
    std::cout << "iteration " << last.iteration << ": median Hamming error " << last.median << " (p10 " << last.p10
              << ", p90 " << last.p90 << ", " << last.chains << " chains)\n";
  }
  std::cout << "final used-state counts:";
  for (const auto& [k, n] : summary.used_state_histogram) std::cout << ' ' << k << "x" << n;
  std::cout << '\n';
  return kExitOk;
}

}  // namespace hsmm::cli
