#include "dpcopula/commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

#include "dpcopula/errors.hpp"
#include "dpcopula/pipeline.hpp"
#include "dpcopula/schema_config.hpp"

namespace dpcopula {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Re-throws the module errors with the failing stage named, keeping their type.
template <typename Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string(name) + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(std::string(name) + ": " + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(std::string(name) + ": " + e.what());
  }
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::string_view integration_name(IntegrationMethod m) { return m == IntegrationMethod::orthant ? "orthant" : "quadrature"; }

std::string format_fixed(double v) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(0) << v;
  return ss.str();
}

struct LoadedData {
  AttributeSchema schema;
  TabularDataset binned;
  BinaryDataset binary;
};

LoadedData load_input(const RunConfig& cfg) {
  AttributeSchema schema = load_schema(cfg.schema);
  TabularDataset binned = apply_binning(load_csv(cfg.input, schema));
  BinaryDataset binary = dummy_encode(binned);
  return {std::move(schema), std::move(binned), std::move(binary)};
}

std::uint64_t fresh_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

bool is_non_private(Variant v) {
  return v == Variant::cop || v == Variant::cop_id || v == Variant::cop_1 || v == Variant::no_cor;
}

}  // namespace

void RunConfig::validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ConfigError("--epsilon must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("--delta must lie in (0, 1)");
  if (input.empty()) throw ConfigError("--input is required");
  if (schema.empty()) throw ConfigError("--schema is required");
  if (output_dir.empty()) throw ConfigError("--out is required");
  if (threads == 0) throw ConfigError("--threads must be at least 1");
  for (int o : orders) {
    if (o < 1 || o > 3) throw ConfigError("--orders accepts 1, 2 and 3");
  }
}

json RunConfig::to_json() const {
  json variants_json = json::array();
  for (auto v : variants) variants_json.push_back(std::string(dpcopula::to_string(v)));
  json j{{"input", input.string()},
         {"schema", schema.string()},
         {"epsilon", epsilon},
         {"delta", delta},
         {"seed", seed ? json(*seed) : json(nullptr)},
         {"integration", std::string(integration_name(integration))},
         {"decode", decode ? json(*decode == DecodeMode::strict ? "strict" : "repair") : json(nullptr)},
         {"dump_model", dump_model},
         {"unsafe_diagnostics", unsafe_diagnostics},
         {"variants", std::move(variants_json)},
         {"orders", orders},
         {"version", DPCOPULA_VERSION}};
  if (!synthetic.empty()) j["synthetic"] = synthetic.string();
  return j;
}

void cmd_synth(RunConfig cfg, std::ostream& log) {
  stage("config", [&] { cfg.validate(); });
  if (!cfg.seed) {
    cfg.seed = fresh_seed();
    log << "no --seed given; using " << *cfg.seed << " (recorded in run.json)\n";
  }

  LoadedData data = stage("ingest", [&] { return load_input(cfg); });
  log << "ingested " << data.binned.rows() << " rows, " << data.schema.size() << " attributes, "
      << data.binary.width() << " binary columns\n";

  fs::create_directories(cfg.output_dir);
  const fs::path plan_path = cfg.output_dir / "plan.json";
  if (fs::exists(plan_path)) {
    std::ifstream in(plan_path);
    double previous = 0.0;
    try {
      previous = json::parse(in).at("target_epsilon").get<double>();
    } catch (const json::exception&) {
    }
    log << "warning: " << cfg.output_dir.string() << " already holds a release (epsilon " << previous
        << "); releasing again from the same data spends privacy budget cumulatively\n";
  }

  SynthesisOptions options;
  options.epsilon = cfg.epsilon;
  options.delta = cfg.delta;
  options.seed = *cfg.seed;
  options.threads = cfg.threads;
  options.copula.integration = cfg.integration;
  options.keep_latent = cfg.decode == DecodeMode::repair;

  PrivacyPlan plan = stage("privacy", [&] {
    return PrivacyPlan::solve(cfg.epsilon, PrivacyPlan::synthesis_mechanisms(data.schema.size()), cfg.delta);
  });
  const NoisyStatistics stats = stage("privacy", [&] {
    return build_noisy_statistics(data.binned, data.binary, plan, NoiseSource::laplace(*cfg.seed), cfg.threads);
  });
  log << "spent " << plan.ledger().size() << " mechanisms at eps' = " << plan.per_mechanism_epsilon()
      << " (composed epsilon " << plan.composed_epsilon() << ")\n";

  // post-processing only from here on: the original data is no longer consulted
  const CopulaModel model = stage("copula", [&] { return model_from_statistics(stats, options); });
  const SyntheticSample sample = stage("sampling", [&] {
    return sample_synthetic(model, stats.rows, options.seed, options.threads, options.keep_latent);
  });

  stage("output", [&] {
    write_binary_csv(sample.data, cfg.output_dir / "synthetic.csv");
    json plan_json = plan.to_json();
    plan_json["rows"] = stats.rows;
    plan_json["attributes"] = data.schema.size();
    plan_json["binary_columns"] = data.binary.width();
    write_file(plan_path, dump(plan_json));
    json run = cfg.to_json();
    run["schema_document"] = schema_to_json(data.schema);
    write_file(cfg.output_dir / "run.json", dump(run));
    if (cfg.dump_model) write_file(cfg.output_dir / "model.json", dump(model.to_json()));
    if (cfg.decode) {
      const DecodeResult decoded = decode_rows(sample.data, sample.latent, *cfg.decode);
      if (!decoded.rows.empty()) write_tabular_csv(decoded.to_dataset(data.schema), cfg.output_dir / "decoded.csv");
      write_file(cfg.output_dir / "decode.json",
                 dump({{"mode", *cfg.decode == DecodeMode::strict ? "strict" : "repair"},
                       {"rows_written", decoded.rows.size()},
                       {"inconsistent_rows", decoded.inconsistent_rows},
                       {"inconsistent_groups", decoded.inconsistent_groups}}));
    }
  });
  log << "wrote " << (cfg.output_dir / "synthetic.csv").string() << "\n";
}

std::string format_alpha_beta_table(const std::vector<ErrorReport>& reports) {
  std::ostringstream ss;
  ss << std::left << std::setw(28) << "mechanism";
  for (double b : kReportBetas) {
    const std::string head = format_fixed(100.0 * (1.0 - b)) + "%";
    ss << std::right << std::setw(10) << (head + " ave") << std::setw(10) << (head + " max");
  }
  ss << "\n";
  for (const auto& r : reports) {
    std::string name = r.variant + " (" + r.query_class + ")";
    if (r.non_private) name += " *";
    ss << std::left << std::setw(28) << name;
    for (const auto& s : r.summaries) {
      ss << std::right << std::setw(10) << format_fixed(s.average) << std::setw(10) << format_fixed(s.maximum);
    }
    ss << "\n";
  }
  ss << "(* non-private diagnostic)\n";
  return ss.str();
}

void cmd_eval(const RunConfig& cfg_in, std::ostream& out) {
  RunConfig cfg = cfg_in;
  stage("config", [&] {
    cfg.validate();
    for (auto v : cfg.variants) {
      if (is_non_private(v) && !cfg.unsafe_diagnostics) {
        throw ConfigError("variant '" + std::string(to_string(v)) +
                          "' uses exact statistics; pass --unsafe-diagnostics to run it");
      }
      if (v == Variant::dpc && cfg.synthetic.empty()) throw ConfigError("variant dpc needs --synthetic");
    }
  });
  if (!cfg.seed) cfg.seed = fresh_seed();

  const LoadedData data = stage("ingest", [&] { return load_input(cfg); });
  const GroupMap& groups = data.binary.groups();
  const std::size_t m = data.schema.size();

  std::optional<BinaryDataset> dpc;
  for (auto v : cfg.variants) {
    if (v == Variant::dpc) dpc = stage("ingest", [&] { return read_binary_csv(cfg.synthetic, groups); });
  }

  SynthesisOptions options;
  options.epsilon = cfg.epsilon;
  options.delta = cfg.delta;
  options.seed = *cfg.seed;
  options.threads = cfg.threads;
  options.copula.integration = cfg.integration;

  std::map<Variant, BinaryDataset> synthetic;
  std::optional<NoisyStatistics> exact;
  for (auto v : cfg.variants) {
    if (v == Variant::cop || v == Variant::cop_id || v == Variant::cop_1) {
      synthetic.emplace(v, stage("baselines", [&] { return synthesize_variant(v, data.binned, data.binary, options); }));
    }
    if (v == Variant::no_cor && !exact) exact = exact_statistics(data.binned, data.binary, cfg.threads);
  }

  const double matched_eps =
      solve_per_mechanism_epsilon(cfg.epsilon, PrivacyPlan::synthesis_mechanisms(m), cfg.delta);
  const NoiseSource lap_noise = NoiseSource::laplace(*cfg.seed);

  std::vector<ErrorReport> reports;
  json splits = json::array();
  json lap_budgets = json::object();
  for (int order : cfg.orders) {
    const std::string cls = "Q" + std::to_string(order);
    const auto queries = enumerate_queries(groups, order);
    if (queries.empty()) continue;
    const auto truth = answer_queries(data.binary, queries, cfg.threads);

    std::optional<CorrelationSplit> split;
    if (order == 2 && cfg.unsafe_diagnostics) {
      split = correlation_split(queries, exact_pearson_matrix(data.binned, data.binary, cfg.threads), 0.5);
      splits.push_back({{"threshold", 0.5}, {"high", split->high.size()}, {"low", split->low.size()}});
    }

    for (auto v : cfg.variants) {
      std::vector<double> answers;
      switch (v) {
        case Variant::dpc:
          answers = answer_queries(*dpc, queries, cfg.threads);
          break;
        case Variant::cop:
        case Variant::cop_id:
        case Variant::cop_1:
          answers = answer_queries(synthetic.at(v), queries, cfg.threads);
          break;
        case Variant::no_cor:
          if (order == 1) continue;
          answers = independence_answers(exact->marginals, data.binary.rows(), queries);
          break;
        case Variant::lap: {
          // Q1/Q2 share the synthesiser's eps'; Q3 is budgeted on its own over |Q3| queries
          const double eps = order == 3 ? solve_per_mechanism_epsilon(cfg.epsilon, queries.size(), cfg.delta) : matched_eps;
          lap_budgets[cls] = eps;
          answers = laplace_answers(truth, eps, lap_noise, "lap:" + cls);
          break;
        }
      }
      ErrorReport report = ErrorReport::from_answers(std::string(to_string(v)), cls, truth, answers);
      report.non_private = is_non_private(v);
      if (cfg.errors_csv) {
        std::string csv = "query,columns,truth,answer,abs_error\n";
        for (std::size_t i = 0; i < queries.size(); ++i) {
          std::string cols;
          for (int k = 0; k < queries[i].order; ++k) {
            if (k) cols += "&";
            cols += groups.column_name(queries[i].columns[static_cast<std::size_t>(k)]);
          }
          if (order == 1) cols += queries[i].bit ? "=1" : "=0";
          std::ostringstream row;
          row << std::setprecision(17) << i << ",\"" << cols << "\"," << truth[i] << "," << answers[i] << ","
              << std::fabs(truth[i] - answers[i]) << "\n";
          csv += row.str();
        }
        fs::create_directories(cfg.output_dir);
        write_file(cfg.output_dir / ("errors_" + report.variant + "_" + cls + ".csv"), csv);
      }
      if (split) {
        for (const auto& [bucket, indices] : {std::pair{"|r|>=0.5", &split->high}, std::pair{"|r|<0.5", &split->low}}) {
          if (indices->empty()) continue;
          std::vector<double> errors;
          errors.reserve(indices->size());
          for (auto i : *indices) errors.push_back(std::fabs(truth[i] - answers[i]));
          ErrorReport part = ErrorReport::from_errors(report.variant, cls + " " + bucket, std::move(errors));
          part.non_private = true;
          reports.push_back(std::move(part));
        }
      }
      reports.push_back(std::move(report));
    }
  }

  json reports_json = json::array();
  for (const auto& r : reports) reports_json.push_back(r.to_json());
  const json doc{{"config", cfg.to_json()},
                 {"rows", data.binary.rows()},
                 {"binary_columns", data.binary.width()},
                 {"synthesis_per_mechanism_epsilon", matched_eps},
                 {"lap_per_query_epsilon", lap_budgets},
                 {"correlation_splits", splits},
                 {"reports", reports_json}};
  const std::string table = format_alpha_beta_table(reports);
  stage("output", [&] {
    fs::create_directories(cfg.output_dir);
    write_file(cfg.output_dir / "eval.json", dump(doc));
    write_file(cfg.output_dir / "alpha_beta.txt", table);
  });
  out << table;
}

void cmd_demo(const std::string& name, const DemoParams& params, std::ostream& out) {
  out << std::setprecision(15);
  if (name == "order-sensitivity") {
    const auto r = artificial_order_demo(params.n, params.lambda);
    out << "n = " << params.n << ", lambda = " << params.lambda << "\n"
        << "predicted r0 - r_lambda = " << r.predicted << "\n"
        << "measured  r0 - r_lambda = " << r.measured << "\n";
  } else if (name == "sensitivity") {
    const auto r = sensitivity_demo(params.n);
    out << "n = " << params.n << "\n"
        << "r1 (one co-occurring row)          = " << r.r1 << "  closed form " << r.r1_closed_form
        << " (not sqrt(1 - 1/n) = " << std::sqrt(1.0 - 1.0 / static_cast<double>(params.n)) << ")\n"
        << "r2 (neighbour, one extra X = 1)    = " << r.r2 << "  closed form " << r.r2_closed_form << "\n"
        << "r1 - r2                            = " << r.gap << "  (1 - 1/sqrt(2) = " << 1.0 - 1.0 / std::sqrt(2.0)
        << ")\n"
        << "a single row moves the phi coefficient by ~0.29, so noising it directly would swamp the signal;"
        << " the pipeline noises counts instead\n";
  } else {
    throw ConfigError("unknown demo '" + name + "' (expected order-sensitivity or sensitivity)");
  }
}

void cmd_budget(double epsilon, double delta, std::size_t k, std::ostream& out) {
  const PrivacyPlan plan = PrivacyPlan::solve(epsilon, k, delta);
  out << std::setprecision(10) << "target epsilon     " << plan.target_epsilon() << "\n"
      << "delta              " << plan.delta() << "\n"
      << "mechanisms k       " << plan.mechanisms() << "\n"
      << "per-mechanism eps' " << plan.per_mechanism_epsilon() << "\n"
      << "composed epsilon   " << plan.composed_epsilon() << "\n";
}

int report_failure(std::ostream& err) {
  try {
    throw;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
}

}  // namespace dpcopula
