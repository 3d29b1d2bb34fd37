#pragma once

// Batch front end: state specifications, experiment configs, report
// serialization and the `qmap` subcommands.
//
// Explicit matrices are row-major lists of [re, im] pairs with the basis
// ordered by layout factor order (leftmost factor most significant).

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qmap/protocols.hpp"
#include "qmap/qstate.hpp"
#include "qmap/regions.hpp"

namespace qmap::cli {

using Json = nlohmann::json;

enum ExitCode : int {
  kExitOk = 0,
  kExitValidation = 2,
  kExitInvariant = 3,
  kExitBudget = 4,
};

struct StateSpec {
  DensityMatrix rho = DensityMatrix::maximally_mixed(SystemLayout({{"A", 2}}));
  Roles roles;
  std::string preset;  // empty for explicit specs
};

// Presets: bell, ghz {k}, werner {p}, product {senders}, two-bell,
// cq {distribution}. Roles default per preset and may be overridden.
StateSpec parse_state_spec(const Json& j);
// Explicit form with the resolved matrix; parse_state_spec inverts it exactly.
Json state_spec_to_json(const StateSpec& spec);

struct ExperimentConfig {
  std::size_t n = 1;
  std::optional<std::vector<double>> rates;
  std::optional<std::vector<std::size_t>> messages;    // M
  std::optional<std::vector<std::size_t>> randomizers; // L
  std::optional<std::vector<std::size_t>> codewords;   // K
  std::vector<std::vector<std::size_t>> l_sweep;
  std::vector<std::vector<std::size_t>> k_sweep;
  double delta = 0.1;
  std::size_t trials = 1;
  std::size_t samples = 1024;
  std::optional<std::uint64_t> master_seed;
  FamilyKind family = FamilyKind::kHaar;
  DecoderKind decoder = DecoderKind::kSequential;
  std::optional<Labels> v;  // decoding side information, default B ∪ E
  std::optional<Labels> w;  // randomization reference, default E
};

ExperimentConfig parse_config(const Json& j);

Json to_json(const SetFunction& f);
SetFunction set_function_from_json(const Json& j);
Json to_json(const RateRegion& r);
Json to_json(const SimulationReport& r);
// RFC 4180; one row per (trial, metric).
std::string to_csv(const SimulationReport& r);
// Shortest round-trip decimal form.
std::string format_double(double v);

// Command bodies. Each returns the JSON artifact; `violations` collects
// invariant failures that should turn the exit code to 3.
Json cmd_region(const StateSpec& spec);
Json cmd_check(const StateSpec& spec, const ExperimentConfig& config);
Json cmd_split(const StateSpec& spec, const ExperimentConfig& config);

struct SimulationOutput {
  Json json;
  std::string csv;
  bool violated = false;
};

SimulationOutput cmd_simulate_randomization(const StateSpec& spec, const ExperimentConfig& config);
SimulationOutput cmd_simulate_encoding(const StateSpec& spec, const ExperimentConfig& config);
SimulationOutput cmd_simulate_code(const StateSpec& spec, const ExperimentConfig& config);

struct LemmaOptions {
  std::uint64_t seed = 0;
  std::size_t states = 20;        // random states per structural suite
  std::size_t union_trials = 200; // random trials for the union bound
  bool inject_counterexample = false;
};

SimulationOutput cmd_verify_lemmas(const LemmaOptions& options);

// Full command line: `qmap <command> [--spec FILE] [--config FILE] [--out DIR]
// [--seed N] [--inject-counterexample]`. Returns the exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace qmap::cli
