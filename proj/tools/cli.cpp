#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "dpcopula/commands.hpp"
#include "dpcopula/errors.hpp"
#include "dpcopula/parallel.hpp"

using namespace dpcopula;

namespace {

void add_common(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--input", cfg.input, "original data CSV (header required)")->required();
  cmd->add_option("--schema", cfg.schema, "attribute schema JSON")->required();
  cmd->add_option("--out", cfg.output_dir, "output directory")->required();
  cmd->add_option("--epsilon", cfg.epsilon, "total privacy budget");
  cmd->add_option("--delta", cfg.delta, "delta for advanced composition");
  cmd->add_option("--threads", cfg.threads, "worker threads");
  cmd->add_option("--integration", "expected-product route: orthant or quadrature")
      ->check(CLI::IsMember({"orthant", "quadrature"}))
      ->each([&cfg](const std::string& v) {
        cfg.integration = v == "quadrature" ? IntegrationMethod::quadrature : IntegrationMethod::orthant;
      });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differentially private synthetic data through a Gaussian copula over dummy-coded attributes"};
  app.set_version_flag("--version", std::string(DPCOPULA_VERSION));
  app.require_subcommand(1);

  RunConfig cfg;
  cfg.threads = default_thread_count();
  std::uint64_t seed = 0;

  auto* synth = app.add_subcommand("synth", "release a synthetic binary dataset");
  add_common(synth, cfg);
  auto* synth_seed = synth->add_option("--seed", seed, "RNG seed (generated and recorded if absent)");
  synth->add_option("--decode", "also map rows back to attribute values: strict or repair")
      ->check(CLI::IsMember({"strict", "repair"}))
      ->each([&cfg](const std::string& v) { cfg.decode = v == "repair" ? DecodeMode::repair : DecodeMode::strict; });
  synth->add_flag("--dump-model", cfg.dump_model, "write model.json with marginals and correlation");

  auto* eval = app.add_subcommand("eval", "compare a synthetic dataset and baselines against the original");
  add_common(eval, cfg);
  auto* eval_seed = eval->add_option("--seed", seed, "seed for the baselines");
  eval->add_option("--synthetic", cfg.synthetic, "binary CSV written by synth");
  std::vector<std::string> variants;
  eval->add_option("--variants", variants, "dpc, Lap, cop, cop-ID, cop-1, no-cor")->delimiter(',');
  eval->add_option("--orders", cfg.orders, "query orders among 1, 2, 3")->delimiter(',');
  eval->add_flag("--unsafe-diagnostics", cfg.unsafe_diagnostics,
                 "allow variants computed from exact (non-private) statistics");
  eval->add_flag("--errors-csv", cfg.errors_csv, "write per-query errors");

  auto* demo = app.add_subcommand("demo", "numeric illustrations: order-sensitivity, sensitivity");
  std::string demo_name;
  DemoParams demo_params;
  demo->add_option("name", demo_name)->required();
  demo->add_option("--n", demo_params.n, "number of rows");
  demo->add_option("--lambda", demo_params.lambda, "fraction of reversed entries");

  auto* budget = app.add_subcommand("budget", "solve the per-mechanism epsilon");
  double budget_eps = 1.0;
  double budget_delta = kDefaultDelta;
  std::size_t budget_k = 0;
  std::size_t budget_m = 0;
  budget->add_option("--epsilon", budget_eps)->required();
  budget->add_option("--delta", budget_delta);
  auto* k_opt = budget->add_option("--k", budget_k, "number of mechanisms");
  auto* m_opt = budget->add_option("--attributes", budget_m, "m attributes, k = m + m(m-1)/2");
  k_opt->excludes(m_opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (!variants.empty()) {
      cfg.variants.clear();
      for (const auto& v : variants) cfg.variants.push_back(parse_variant(v));
    }
    if (*synth_seed || *eval_seed) cfg.seed = seed;

    if (*synth) {
      cmd_synth(cfg, std::cerr);
    } else if (*eval) {
      cmd_eval(cfg, std::cout);
    } else if (*demo) {
      cmd_demo(demo_name, demo_params, std::cout);
    } else if (*budget) {
      if (!*k_opt && !*m_opt) throw ConfigError("budget needs --k or --attributes");
      cmd_budget(budget_eps, budget_delta, *k_opt ? budget_k : PrivacyPlan::synthesis_mechanisms(budget_m), std::cout);
    }
  } catch (...) {
    return report_failure(std::cerr);
  }
  return kExitOk;
}
