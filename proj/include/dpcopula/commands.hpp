#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dpcopula/copula.hpp"
#include "dpcopula/eval.hpp"
#include "dpcopula/privacy.hpp"

namespace dpcopula {

/// Process exit codes.
enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitData = 2, kExitNumerical = 3 };

struct RunConfig {
  std::filesystem::path input;
  std::filesystem::path schema;
  std::filesystem::path output_dir;
  std::filesystem::path synthetic;  // eval: binary CSV written by synth
  double epsilon = 1.0;
  double delta = kDefaultDelta;
  std::optional<std::uint64_t> seed;
  std::vector<Variant> variants{Variant::dpc, Variant::lap};
  std::vector<int> orders{1, 2};
  unsigned threads = 1;
  std::optional<DecodeMode> decode;
  bool dump_model = false;
  bool unsafe_diagnostics = false;
  bool errors_csv = false;
  IntegrationMethod integration = IntegrationMethod::orthant;

  /// Throws ConfigError. Checked before any data is read.
  void validate() const;
  /// Snapshot of everything that affects outputs (thread count excluded).
  nlohmann::json to_json() const;
};

/// ingest -> private statistics -> copula -> sample. Writes synthetic.csv, plan.json,
/// run.json and optionally model.json and decoded.csv/decode.json into output_dir.
void cmd_synth(RunConfig cfg, std::ostream& log);

/// Compares the synthetic binary CSV and the requested baselines against the original
/// data. Writes eval.json and alpha_beta.txt (and per-query error CSVs on request).
void cmd_eval(const RunConfig& cfg, std::ostream& out);

struct DemoParams {
  std::size_t n = 5;
  double lambda = 0.6;
};

/// "order-sensitivity" or "sensitivity".
void cmd_demo(const std::string& name, const DemoParams& params, std::ostream& out);

/// Prints the solved per-mechanism epsilon for k mechanisms without touching data.
void cmd_budget(double epsilon, double delta, std::size_t k, std::ostream& out);

/// Maps an in-flight exception to an exit code and prints its diagnostic.
int report_failure(std::ostream& err);

std::string format_alpha_beta_table(const std::vector<ErrorReport>& reports);

}  // namespace dpcopula
