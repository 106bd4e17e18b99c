#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hsmm/cli.hpp"
#include "hsmm/errors.hpp"

using namespace hsmm;

int main(int argc, char** argv) {
  CLI::App app{"HDP-HSMM experiments: generate synthetic data, fit chains, summarize traces"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "write a synthetic dataset");
  std::string gen_spec;
  std::uint64_t gen_seed = 0;
  std::string gen_out;
  int gen_T = 0;
  gen->add_option("--spec", gen_spec, "poisson-hsmm | hmm-10d | morse-synth")->required();
  gen->add_option("--seed", gen_seed, "dataset seed");
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--T", gen_T, "sequence length (default 500)")->check(CLI::PositiveNumber);

  // fit
  auto* fit = app.add_subcommand("fit", "run sampler chains on a dataset");
  std::string config_path;
  cli::RunConfig flags;
  fit->add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
  auto* o_data = fit->add_option("--data", flags.data, "dataset directory or data.csv");
  auto* o_out = fit->add_option("--out", flags.out, "output directory");
  auto* o_chains = fit->add_option("--chains", flags.chains);
  auto* o_iters = fit->add_option("--iterations", flags.iterations);
  auto* o_model = fit->add_option("--model", flags.model, "hdp-hsmm-weak-limit | hdp-hsmm-direct | hdp-hmm-equivalent");
  auto* o_dur = fit->add_option("--duration", flags.duration, "geometric | poisson | negbin | delayed-geometric");
  auto* o_L = fit->add_option("--L", flags.L, "weak-limit truncation");
  auto* o_dmax = fit->add_option("--dmax", flags.d_max, "maximum segment length (0: adaptive)");
  auto* o_seed = fit->add_option("--seed", flags.seed);

  // eval
  auto* ev = app.add_subcommand("eval", "summarize trace files");
  std::vector<std::string> traces;
  std::vector<std::string> states;
  std::string truth;
  std::string ev_out = ".";
  ev->add_option("--traces", traces, "trace_chain_*.jsonl files")->required();
  auto* o_truth = ev->add_option("--truth", truth, "truth.csv for final-state Hamming errors");
  ev->add_option("--states", states, "state_chain_*.json files");
  ev->add_option("--out", ev_out, "directory for the summary CSVs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kExitOk : cli::kExitUsage;
  }

  if (*gen) {
    ExperimentOptions options;
    if (gen_T > 0) options.T = gen_T;
    return cli::cmd_generate(gen_spec, gen_seed, gen_out, options);
  }

  if (*fit) {
    cli::RunConfig config;
    if (!config_path.empty()) {
      try {
        std::ifstream f(config_path);
        config = cli::config_from_json(nlohmann::json::parse(f));
      } catch (const std::exception& e) {
        std::cerr << "error: " << config_path << ": " << e.what() << '\n';
        return cli::kExitUsage;
      }
    }
    if (o_data->count()) config.data = flags.data;
    if (o_out->count()) config.out = flags.out;
    if (o_chains->count()) config.chains = flags.chains;
    if (o_iters->count()) config.iterations = flags.iterations;
    if (o_model->count()) config.model = flags.model;
    if (o_dur->count()) config.duration = flags.duration;
    if (o_L->count()) config.L = flags.L;
    if (o_dmax->count()) config.d_max = flags.d_max;
    if (o_seed->count()) config.seed = flags.seed;
    return cli::cmd_fit(config);
  }

  std::optional<std::string> truth_path;
  if (o_truth->count()) truth_path = truth;
  return cli::cmd_eval(traces, truth_path, states, ev_out);
}
