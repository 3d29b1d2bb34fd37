#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include <CLI11.hpp>

#include "qmap/cli.hpp"
#include "qmap/error.hpp"

namespace qmap::cli {

namespace {

Json members_json(Subset s) {
  Json a = Json::array();
  for (int m : subset_members(s)) a.push_back(m);
  return a;
}

Labels join(const Labels& a, const Labels& b) {
  Labels out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

RateTuple require_rates(const StateSpec& spec, const ExperimentConfig& config) {
  if (!config.rates) throw ValidationError("this command needs rates", "$.rates");
  if (config.rates->size() != spec.roles.senders.size()) {
    throw ValidationError("need one rate per sender", "$.rates");
  }
  return RateTuple{*config.rates};
}

std::uint64_t require_seed(const ExperimentConfig& config) {
  if (config.family == FamilyKind::kWeyl) return config.master_seed.value_or(0);
  if (!config.master_seed) {
    throw ValidationError("stochastic commands need a master seed", "$.master_seed");
  }
  return *config.master_seed;
}

std::string sizes_tag(const char* name, const std::vector<std::size_t>& sizes) {
  std::string s = std::string(name) + "=";
  for (std::size_t i = 0; i < sizes.size(); ++i) s += (i ? "x" : "") + std::to_string(sizes[i]);
  return s;
}

// Runs one report per size tuple; CSV metric names carry the tuple when
// there is more than one.
template <typename Fn>
SimulationOutput sweep(const std::string& command, const char* size_name,
                       const std::vector<std::vector<std::size_t>>& tuples, Json header, Fn run) {
  SimulationReport merged;
  Json runs = Json::array();
  bool violated = false;
  for (const auto& sizes : tuples) {
    const SimulationReport r = run(sizes);
    violated = violated || !r.violations.empty();
    runs.push_back({{size_name, sizes}, {"report", to_json(r)}});
    merged.kind = r.kind;
    for (const auto& [name, xs] : r.samples) {
      const std::string key = tuples.size() > 1 ? sizes_tag(size_name, sizes) + "/" + name : name;
      merged.samples.emplace_back(key, xs);
    }
  }
  header["command"] = command;
  header["runs"] = runs;
  header["passed"] = !violated;
  return {header, to_csv(merged), violated};
}

std::vector<std::vector<std::size_t>> tuples_from(const std::optional<std::vector<std::size_t>>& one,
                                                  const std::vector<std::vector<std::size_t>>& many,
                                                  const char* key, std::size_t z) {
  std::vector<std::vector<std::size_t>> out = many;
  if (one) out.insert(out.begin(), *one);
  if (out.empty()) throw ValidationError("this command needs " + std::string(key), "$." + std::string(key));
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i].size() != z) {
      throw ValidationError("need one size per sender", "$." + std::string(key));
    }
  }
  return out;
}

}  // namespace

Json cmd_region(const StateSpec& spec) {
  const Roles& r = spec.roles;
  const MainRegion main = main_region_detail(spec.rho, r.senders, r.receiver, r.eavesdropper);
  Json residuals = Json::array();
  for (Subset s = 1; s < main.residual.size(); ++s) {
    residuals.push_back({{"subset", members_json(s)}, {"value", main.residual[s]}});
  }
  return {{"command", "region"},
          {"senders", r.senders},
          {"receiver", r.receiver},
          {"eavesdropper", r.eavesdropper},
          {"region", to_json(main.region)},
          {"chat", to_json(main.chat)},
          {"dhat", to_json(main.dhat)},
          {"residuals", residuals},
          {"max_residual", main.max_residual}};
}

Json cmd_check(const StateSpec& spec, const ExperimentConfig& config) {
  const Roles& r = spec.roles;
  const RateTuple rates = require_rates(spec, config);
  const RateRegion region = main_region(spec.rho, r.senders, r.receiver, r.eavesdropper);
  const Membership m = membership(region, rates, kEntropicTol);
  Json margins = Json::array();
  for (const auto& c : region.constraints()) {
    margins.push_back({{"subset", members_json(c.subset)},
                       {"bound", c.bound},
                       {"margin", c.bound - rates.sum_over(c.subset)}});
  }
  return {{"command", "check"},
          {"rates", rates.rates},
          {"member", m.member},
          {"worst_subset", members_json(m.worst)},
          {"worst_margin", m.worst_margin},
          {"constraints", margins}};
}

Json cmd_split(const StateSpec& spec, const ExperimentConfig& config) {
  const Roles& r = spec.roles;
  const RateTuple rates = require_rates(spec, config);
  const MainRegion main = main_region_detail(spec.rho, r.senders, r.receiver, r.eavesdropper);
  const RateSplit split = rate_split(rates, main.chat, main.dhat);
  return {{"command", "split"},
          {"rates", rates.rates},
          {"C", split.c.rates},
          {"D", split.d.rates},
          {"c_margin", split.c_margin},
          {"d_margin", split.d_margin},
          {"chat", to_json(main.chat)},
          {"dhat", to_json(main.dhat)}};
}

SimulationOutput cmd_simulate_randomization(const StateSpec& spec, const ExperimentConfig& config) {
  const Labels w = config.w.value_or(spec.roles.eavesdropper);
  const std::uint64_t seed = require_seed(config);
  const auto tuples =
      tuples_from(config.randomizers, config.l_sweep, "L", spec.roles.senders.size());
  Json header = {{"n", config.n},
                 {"family", to_string(config.family)},
                 {"W", w},
                 {"master_seed", seed},
                 {"trials", config.trials}};
  return sweep("simulate-randomization", "L", tuples, header, [&](const auto& sizes) {
    ChainConfig c{config.n, sizes, config.trials, config.family, seed};
    return chained_randomization_experiment(spec.rho, spec.roles.senders, w, c);
  });
}

SimulationOutput cmd_simulate_encoding(const StateSpec& spec, const ExperimentConfig& config) {
  const Labels v = config.v.value_or(join(spec.roles.receiver, spec.roles.eavesdropper));
  const std::uint64_t seed = require_seed(config);
  const auto tuples =
      tuples_from(config.codewords, config.k_sweep, "K", spec.roles.senders.size());
  Json header = {{"n", config.n},
                 {"family", to_string(config.family)},
                 {"decoder", to_string(config.decoder)},
                 {"V", v},
                 {"master_seed", seed},
                 {"trials", config.trials}};
  return sweep("simulate-encoding", "K", tuples, header, [&](const auto& sizes) {
    EncodingConfig c{config.n, sizes, config.trials, config.family, config.decoder, seed};
    return encoding_experiment(spec.rho, spec.roles.senders, v, c);
  });
}

SimulationOutput cmd_simulate_code(const StateSpec& spec, const ExperimentConfig& config) {
  const Roles& r = spec.roles;
  const std::uint64_t seed = require_seed(config);
  Json out = {{"command", "simulate-code"},
              {"n", config.n},
              {"family", to_string(config.family)},
              {"decoder", to_string(config.decoder)},
              {"master_seed", seed}};
  CodeSizes sizes;
  if (config.messages || config.randomizers) {
    if (!config.messages) throw ValidationError("give M together with L", "$.M");
    if (!config.randomizers) throw ValidationError("give L together with M", "$.L");
    if (config.messages->size() != r.senders.size()) {
      throw ValidationError("need one size per sender", "$.M");
    }
    if (config.randomizers->size() != r.senders.size()) {
      throw ValidationError("need one size per sender", "$.L");
    }
    sizes = {*config.messages, *config.randomizers};
  } else {
    const RateTuple rates = require_rates(spec, config);
    const MainRegion main = main_region_detail(spec.rho, r.senders, r.receiver, r.eavesdropper);
    const RateSplit split = rate_split(rates, main.chat, main.dhat);
    sizes = sizes_from_rates(config.n, rates, split.c, split.d);
    out["rates"] = rates.rates;
    out["C"] = split.c.rates;
    out["D"] = split.d.rates;
  }
  const CodeSpec code = build_qmap_code(spec.rho, r, config.n, sizes, config.family,
                                        config.decoder, seed);
  const SimulationReport report = evaluate_code(code, spec.rho, config.samples);
  out["M"] = code.messages;
  out["L"] = code.randomizers;
  out["K"] = code.codewords;
  out["report"] = to_json(report);
  out["passed"] = report.violations.empty();
  return {out, to_csv(report), !report.violations.empty()};
}

// ---------------------------------------------------------------------------

namespace {

struct Suite {
  explicit Suite(std::string n) : name(std::move(n)) {}

  std::string name;
  std::size_t cases = 0;
  double worst = -std::numeric_limits<double>::infinity();
  std::vector<std::string> failures;

  void record(double violation) { worst = std::max(worst, violation); }
  void fail(std::string what) {
    if (failures.size() < 20) failures.push_back(std::move(what));
  }
  Json json() const {
    return {{"name", name},
            {"passed", failures.empty()},
            {"cases", cases},
            {"worst", worst},
            {"failures", failures}};
  }
};

void check_properties(Suite& s, const SetFunction& f, SetFunctionKind kind,
                      const std::string& label) {
  const PropertyReport rep = check_set_function_properties(f, kind);
  for (const auto& c : rep.checks) {
    s.record(c.worst);
    if (!c.passed) {
      s.fail(label + ": " + c.name + " fails at " + subset_to_string(c.first) +
             (c.second ? ", " + subset_to_string(c.second) : "") + " by " +
             format_double(c.worst));
    }
  }
}

}  // namespace

SimulationOutput cmd_verify_lemmas(const LemmaOptions& o) {
  const SystemLayout layout({{"A1", 2}, {"A2", 2}, {"A3", 2}, {"B", 2}, {"E", 2}});
  const Labels senders{"A1", "A2", "A3"};
  Suite structure{"set_function_properties"};
  Suite identity{"region_identity"};
  Suite vertices{"greedy_vertices"};
  Suite split{"rate_split"};
  Suite union_bound{"union_bound"};

  for (std::size_t i = 0; i < o.states; ++i) {
    const std::string tag = "state " + std::to_string(i);
    Rng rng(derive_seed(o.seed, {1, i}));
    const std::size_t rank = 1 + static_cast<std::size_t>(rng() % 32);
    const DensityMatrix rho = random_density(layout, rank, derive_seed(o.seed, {2, i}));
    const std::vector<double> logs = sender_log_dims(rho, senders);

    SetFunction chat_b = chat_from_state(rho, senders, {"B"});
    if (o.inject_counterexample && i == 0) {
      // Monotone but not submodular: f({1,2}) > f({1}) + f({2}).
      chat_b = SetFunction(3, {0.0, 1.0, 1.0, 3.0, 1.0, 2.0, 2.0, 3.0});
    }
    const SetFunction dhat = dhat_from_state(rho, senders, {"E"});
    const SetFunction dcheck = dcheck_from_dhat(dhat, logs);
    check_properties(structure, chat_b, SetFunctionKind::kSubadditiveMonotone, tag + " chat(V=B)");
    check_properties(structure, dcheck, SetFunctionKind::kSubadditiveMonotone, tag + " dcheck");
    check_properties(structure, dhat, SetFunctionKind::kSuperadditive, tag + " dhat");
    ++structure.cases;

    ++identity.cases;
    std::optional<MainRegion> main;
    try {
      main = main_region_detail(rho, senders, {"B"}, {"E"});
      identity.record(main->max_residual);
    } catch (const InvariantViolation& e) {
      identity.fail(tag + ": " + e.what());
      continue;
    }

    for (const Vertex& v : polymatroid_vertices(main->chat)) {
      ++vertices.cases;
      const Membership m = membership(RateRegion::at_most(main->chat), v.rates, kEntropicTol);
      vertices.record(-m.worst_margin);
      if (!m.member) vertices.fail(tag + ": vertex outside the region at " + subset_to_string(m.worst));
      Subset chain = 0;
      for (int z : v.permutation) {
        chain |= Subset{1} << (z - 1);
        const double gap = std::abs(v.rates.sum_over(chain) - main->chat(chain));
        vertices.record(gap);
        if (gap > 1e-12) vertices.fail(tag + ": chain " + subset_to_string(chain) + " not tight");
      }
    }

    // Strictly interior rates: a random direction scaled to half the tightest bound.
    std::uniform_real_distribution<double> weight(0.1, 1.0);
    std::vector<double> w(senders.size());
    for (double& x : w) x = weight(rng);
    double scale = std::numeric_limits<double>::infinity();
    for (const auto& c : main->region.constraints()) {
      double ws = 0.0;
      for (int z : subset_members(c.subset)) ws += w[static_cast<std::size_t>(z - 1)];
      scale = std::min(scale, c.bound / ws);
    }
    RateTuple r;
    for (double x : w) r.rates.push_back(0.5 * scale * x);
    ++split.cases;
    try {
      const RateSplit rs = rate_split(r, main->chat, main->dhat);
      split.record(-std::min(rs.c_margin, rs.d_margin));
      if (!(rs.c_margin > 0.0 && rs.d_margin > 0.0)) split.fail(tag + ": margin not positive");
      for (std::size_t z = 0; z < r.size(); ++z) {
        if (rs.c.rates[z] != rs.d.rates[z] + r.rates[z]) split.fail(tag + ": C != D + R");
      }
    } catch (const Error& e) {
      split.fail(tag + ": " + e.what());
    }
  }

  const SystemLayout s8({{"S", 8}});
  for (std::size_t t = 0; t < o.union_trials; ++t) {
    Rng rng(derive_seed(o.seed, {3, t}));
    std::vector<Matrix> lambdas;
    for (int j = 0; j < 3; ++j) lambdas.push_back(random_effect(8, rng));
    const std::size_t rank = 1 + static_cast<std::size_t>(rng() % 8);
    const double scale = 1.0 - std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const DensityMatrix base = random_density(s8, rank, derive_seed(o.seed, {4, t}));
    const DensityMatrix rho = DensityMatrix::subnormalized(scale * base.matrix(), s8);
    const UnionBound ub = union_bound_check(lambdas, rho);
    ++union_bound.cases;
    union_bound.record(ub.lhs - ub.rhs);
    if (!ub.holds) union_bound.fail("trial " + std::to_string(t) + ": bound violated");
    if (!ub.routes_agree) union_bound.fail("trial " + std::to_string(t) + ": evaluations disagree");
  }

  SimulationReport csv_rows;
  bool passed = true;
  Json suites = Json::array();
  for (const Suite* s : {&structure, &identity, &vertices, &split, &union_bound}) {
    suites.push_back(s->json());
    passed = passed && s->failures.empty();
    csv_rows.samples.emplace_back(s->name + "/passed",
                                  std::vector<double>{s->failures.empty() ? 1.0 : 0.0});
  }
  Json out = {{"command", "verify-lemmas"},
              {"seed", o.seed},
              {"states", o.states},
              {"union_trials", o.union_trials},
              {"injected_counterexample", o.inject_counterexample},
              {"suites", suites},
              {"passed", passed}};
  return {out, to_csv(csv_rows), !passed};
}

// ---------------------------------------------------------------------------

namespace {

Json read_json(const std::string& file, const std::string& what) {
  std::ifstream in(file);
  if (!in) throw ValidationError("cannot open " + what + " file '" + file + "'", "$");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ValidationError(what + " file '" + file + "' is not valid JSON: " + e.what(), "$");
  }
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path.string() + "'");
  out << text;
}

Json error_json(const char* kind, const std::string& message) {
  return {{"error", kind}, {"message", message}};
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Rate regions and finite-size simulations for distributed quantum message coding",
               "qmap"};
  app.require_subcommand(1);
  std::string spec_file;
  std::string config_file;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  bool inject = false;

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"region", "rate region, Ĉ and D̂ tables"},
      {"check", "membership of a rate tuple"},
      {"split", "split interior rates into (C, D)"},
      {"simulate-randomization", "randomization distance over sampled families"},
      {"simulate-encoding", "decoding success over sampled families"},
      {"simulate-code", "build and evaluate a full code"},
      {"verify-lemmas", "randomized structural property suites"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    if (name != "verify-lemmas") sub->add_option("--spec", spec_file, "state spec JSON")->required();
    sub->add_option("--config", config_file, "experiment config JSON");
    sub->add_option("--out", out_dir, "directory for report files");
    sub->add_option("--seed", seed, "master seed (overrides the config)");
    if (name == "verify-lemmas") {
      sub->add_flag("--inject-counterexample", inject, "plant a non-submodular table");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    ExperimentConfig config =
        config_file.empty() ? ExperimentConfig{} : parse_config(read_json(config_file, "config"));
    if (seed) config.master_seed = *seed;

    Json result;
    std::string csv;
    bool violated = false;
    if (command == "verify-lemmas") {
      LemmaOptions o;
      o.seed = config.master_seed.value_or(0);
      if (config.trials > 1) o.states = config.trials;
      o.inject_counterexample = inject;
      const SimulationOutput s = cmd_verify_lemmas(o);
      result = s.json;
      csv = s.csv;
      violated = s.violated;
    } else {
      const StateSpec spec = [&] {
        try {
          return parse_state_spec(read_json(spec_file, "spec"));
        } catch (const ValidationError& e) {
          throw ValidationError(std::string("spec: ") + e.what(), e.path());
        }
      }();
      if (command == "region") {
        result = cmd_region(spec);
      } else if (command == "check") {
        result = cmd_check(spec, config);
      } else if (command == "split") {
        result = cmd_split(spec, config);
      } else {
        const SimulationOutput s = command == "simulate-randomization" ? cmd_simulate_randomization(spec, config)
                                   : command == "simulate-encoding"    ? cmd_simulate_encoding(spec, config)
                                                                       : cmd_simulate_code(spec, config);
        result = s.json;
        csv = s.csv;
        violated = s.violated;
      }
    }

    const std::string text = result.dump(2) + "\n";
    if (!out_dir.empty()) {
      std::filesystem::create_directories(out_dir);
      write_file(std::filesystem::path(out_dir) / (command + ".json"), text);
      if (!csv.empty()) write_file(std::filesystem::path(out_dir) / (command + ".csv"), csv);
    }
    out << text;
    if (violated) {
      err << error_json("invariant", "one or more checks failed; see the report").dump() << "\n";
      return kExitInvariant;
    }
    return kExitOk;
  } catch (const ValidationError& e) {
    Json j = error_json("validation", e.what());
    if (!e.path().empty()) j["path"] = e.path();
    err << j.dump() << "\n";
    return kExitValidation;
  } catch (const SubsetError& e) {
    Json j = error_json("validation", e.what());
    j["subset"] = members_json(e.subset());
    err << j.dump() << "\n";
    return kExitValidation;
  } catch (const BudgetExceeded& e) {
    err << error_json("budget", e.what()).dump() << "\n";
    return kExitBudget;
  } catch (const InvariantViolation& e) {
    err << error_json("invariant", e.what()).dump() << "\n";
    return kExitInvariant;
  } catch (const std::filesystem::filesystem_error& e) {
    err << error_json("validation", e.what()).dump() << "\n";
    return kExitValidation;
  }
}

}  // namespace qmap::cli
