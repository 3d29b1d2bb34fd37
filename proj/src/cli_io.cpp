#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

#include "qmap/cli.hpp"
#include "qmap/error.hpp"

namespace qmap::cli {

namespace {

std::string at(const std::string& path, const std::string& key) { return path + "." + key; }
std::string at(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

const Json& require(const Json& j, const std::string& key, const std::string& path) {
  if (!j.contains(key)) throw ValidationError("missing field '" + key + "'", at(path, key));
  return j.at(key);
}

double as_double(const Json& j, const std::string& path) {
  if (!j.is_number()) throw ValidationError("expected a number", path);
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ValidationError("expected a finite number", path);
  return v;
}

std::uint64_t as_uint(const Json& j, const std::string& path) {
  if (!j.is_number_integer() && !j.is_number_unsigned()) {
    throw ValidationError("expected a non-negative integer", path);
  }
  if (j.is_number_integer() && j.get<std::int64_t>() < 0) {
    throw ValidationError("expected a non-negative integer", path);
  }
  return j.get<std::uint64_t>();
}

std::size_t as_positive(const Json& j, const std::string& path) {
  const std::uint64_t v = as_uint(j, path);
  if (v == 0) throw ValidationError("expected a positive integer", path);
  return static_cast<std::size_t>(v);
}

std::string as_string(const Json& j, const std::string& path) {
  if (!j.is_string()) throw ValidationError("expected a string", path);
  return j.get<std::string>();
}

const Json& as_array(const Json& j, const std::string& path) {
  if (!j.is_array()) throw ValidationError("expected an array", path);
  return j;
}

Labels as_labels(const Json& j, const std::string& path) {
  Labels out;
  for (std::size_t i = 0; i < as_array(j, path).size(); ++i) {
    out.push_back(as_string(j[i], at(path, i)));
  }
  return out;
}

std::vector<double> as_doubles(const Json& j, const std::string& path) {
  std::vector<double> out;
  for (std::size_t i = 0; i < as_array(j, path).size(); ++i) {
    out.push_back(as_double(j[i], at(path, i)));
  }
  return out;
}

std::vector<std::size_t> as_sizes(const Json& j, const std::string& path) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < as_array(j, path).size(); ++i) {
    out.push_back(as_positive(j[i], at(path, i)));
  }
  return out;
}

void reject_unknown(const Json& j, const std::set<std::string>& known, const std::string& path) {
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ValidationError("unknown field '" + key + "'", at(path, key));
  }
}

Json members_json(Subset s) {
  Json a = Json::array();
  for (int m : subset_members(s)) a.push_back(m);
  return a;
}

// ---------------------------------------------------------------------------
// Presets

StateSpec bell() {
  StateSpec s;
  s.rho = DensityMatrix::maximally_entangled("A", "B", 2);
  s.roles = {{"A"}, {"B"}, {}};
  return s;
}

StateSpec ghz(const Json& params, const std::string& path) {
  const std::size_t k = params.contains("k") ? as_positive(params["k"], at(path, "k")) : 3;
  if (k < 2 || k > 12) throw ValidationError("ghz needs 2 <= k <= 12", at(path, "k"));
  std::vector<Factor> fs;
  StateSpec s;
  for (std::size_t i = 1; i < k; ++i) {
    fs.push_back({"A" + std::to_string(i), 2});
    s.roles.senders.push_back(fs.back().label);
  }
  fs.push_back({"B", 2});
  s.roles.receiver = {"B"};
  SystemLayout layout(fs);
  Vector psi = Vector::Zero(static_cast<Eigen::Index>(layout.total_dim()));
  psi(0) = 1.0;
  psi(psi.size() - 1) = 1.0;
  s.rho = DensityMatrix::pure(psi, layout);
  return s;
}

StateSpec werner(const Json& params, const std::string& path) {
  const double p = params.contains("p") ? as_double(params["p"], at(path, "p")) : 0.5;
  if (p < 0.0 || p > 1.0) throw ValidationError("werner needs 0 <= p <= 1", at(path, "p"));
  SystemLayout layout({{"A", 2}, {"B", 2}});
  Vector singlet = Vector::Zero(4);
  singlet(1) = 1.0 / std::sqrt(2.0);
  singlet(2) = -1.0 / std::sqrt(2.0);
  Matrix m = p * singlet * singlet.adjoint() + (1.0 - p) * Matrix::Identity(4, 4) / 4.0;
  StateSpec s;
  s.rho = DensityMatrix::from_matrix(m, layout);
  s.roles = {{"A"}, {"B"}, {}};
  return s;
}

StateSpec product(const Json& params, const std::string& path) {
  const std::size_t z =
      params.contains("senders") ? as_positive(params["senders"], at(path, "senders")) : 2;
  if (z > 10) throw ValidationError("product supports at most 10 senders", at(path, "senders"));
  std::vector<Factor> fs;
  StateSpec s;
  for (std::size_t i = 1; i <= z; ++i) {
    fs.push_back({"A" + std::to_string(i), 2});
    s.roles.senders.push_back(fs.back().label);
  }
  fs.push_back({"B", 2});
  fs.push_back({"E", 2});
  s.roles.receiver = {"B"};
  s.roles.eavesdropper = {"E"};
  s.rho = DensityMatrix::basis(SystemLayout(fs), 0);
  return s;
}

StateSpec two_bell() {
  const DensityMatrix pair =
      tensor(DensityMatrix::maximally_entangled("A1", "B1", 2),
             DensityMatrix::maximally_entangled("A2", "B2", 2));
  StateSpec s;
  s.rho = reorder(pair, {"A1", "A2", "B1", "B2"});
  s.roles = {{"A1", "A2"}, {"B1", "B2"}, {}};
  return s;
}

StateSpec cq(const Json& params, const std::string& path) {
  const std::string p = at(path, "distribution");
  const std::vector<double> dist = params.contains("distribution")
                                       ? as_doubles(params["distribution"], p)
                                       : std::vector<double>{0.5, 0.5};
  if (dist.size() < 2 || dist.size() > 64) throw ValidationError("cq needs 2 to 64 outcomes", p);
  double total = 0.0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (dist[i] < 0.0) throw ValidationError("negative probability", at(p, i));
    total += dist[i];
  }
  if (std::abs(total - 1.0) > 1e-9) throw ValidationError("distribution must sum to 1", p);
  const std::size_t d = dist.size();
  SystemLayout layout({{"A", d}, {"B", d}});
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(d * d), static_cast<Eigen::Index>(d * d));
  for (std::size_t x = 0; x < d; ++x) {
    const auto i = static_cast<Eigen::Index>(x * d + x);
    m(i, i) = dist[x];
  }
  StateSpec s;
  s.rho = DensityMatrix::from_matrix(m, layout);
  s.roles = {{"A"}, {"B"}, {}};
  return s;
}

StateSpec resolve_preset(const std::string& name, const Json& params, const std::string& path) {
  if (name == "bell") return bell();
  if (name == "ghz") return ghz(params, path);
  if (name == "werner") return werner(params, path);
  if (name == "product") return product(params, path);
  if (name == "two-bell") return two_bell();
  if (name == "cq") return cq(params, path);
  throw ValidationError("unknown preset '" + name + "'", "$.preset");
}

DensityMatrix explicit_state(const Json& j) {
  std::vector<Factor> fs;
  const Json& layout = as_array(require(j, "layout", "$"), "$.layout");
  for (std::size_t i = 0; i < layout.size(); ++i) {
    const std::string p = at("$.layout", i);
    if (!layout[i].is_object()) throw ValidationError("expected {label, dim}", p);
    fs.push_back({as_string(require(layout[i], "label", p), at(p, "label")),
                  as_positive(require(layout[i], "dim", p), at(p, "dim"))});
  }
  if (fs.empty()) throw ValidationError("layout is empty", "$.layout");
  SystemLayout sl;
  try {
    sl = SystemLayout(fs);
  } catch (const ValidationError& e) {
    throw ValidationError(e.what(), "$.layout");
  }
  if (sl.total_dim() > kMaxDim) throw BudgetExceeded("explicit state is too large");
  const auto d = static_cast<Eigen::Index>(sl.total_dim());
  const Json& rows = as_array(require(j, "matrix", "$"), "$.matrix");
  if (static_cast<Eigen::Index>(rows.size()) != d) {
    throw ValidationError("matrix needs " + std::to_string(d) + " rows", "$.matrix");
  }
  Matrix m(d, d);
  for (Eigen::Index r = 0; r < d; ++r) {
    const std::string rp = at("$.matrix", static_cast<std::size_t>(r));
    const Json& row = as_array(rows[static_cast<std::size_t>(r)], rp);
    if (static_cast<Eigen::Index>(row.size()) != d) {
      throw ValidationError("row needs " + std::to_string(d) + " entries", rp);
    }
    for (Eigen::Index c = 0; c < d; ++c) {
      const std::string cp = at(rp, static_cast<std::size_t>(c));
      const Json& e = row[static_cast<std::size_t>(c)];
      if (!e.is_array() || e.size() != 2) throw ValidationError("expected [re, im]", cp);
      m(r, c) = Complex(as_double(e[0], at(cp, 0)), as_double(e[1], at(cp, 1)));
    }
  }
  try {
    return DensityMatrix::from_matrix(std::move(m), std::move(sl));
  } catch (const ValidationError& e) {
    throw ValidationError(e.what(), "$.matrix");
  }
}

}  // namespace

StateSpec parse_state_spec(const Json& j) {
  if (!j.is_object()) throw ValidationError("state spec must be an object", "$");
  reject_unknown(j, {"preset", "params", "layout", "matrix", "senders", "receiver", "eavesdropper"},
                 "$");
  StateSpec spec;
  if (j.contains("preset")) {
    if (j.contains("layout") || j.contains("matrix")) {
      throw ValidationError("give either a preset or an explicit matrix", "$.preset");
    }
    const Json params = j.contains("params") ? j.at("params") : Json::object();
    if (!params.is_object()) throw ValidationError("expected an object", "$.params");
    spec = resolve_preset(as_string(j.at("preset"), "$.preset"), params, "$.params");
    spec.preset = j.at("preset").get<std::string>();
  } else {
    spec.rho = explicit_state(j);
    for (const char* role : {"senders", "receiver"}) require(j, role, "$");
  }
  if (j.contains("senders")) spec.roles.senders = as_labels(j.at("senders"), "$.senders");
  if (j.contains("receiver")) spec.roles.receiver = as_labels(j.at("receiver"), "$.receiver");
  if (j.contains("eavesdropper")) {
    spec.roles.eavesdropper = as_labels(j.at("eavesdropper"), "$.eavesdropper");
  }

  if (spec.roles.senders.empty()) throw ValidationError("need at least one sender", "$.senders");
  if (spec.roles.senders.size() > kMaxSenders) {
    throw ValidationError("at most 12 senders", "$.senders");
  }
  // Roles partition the layout.
  std::set<std::string> seen;
  const std::pair<const char*, const Labels*> lists[] = {{"senders", &spec.roles.senders},
                                                        {"receiver", &spec.roles.receiver},
                                                        {"eavesdropper", &spec.roles.eavesdropper}};
  for (const auto& [name, labels] : lists) {
    for (std::size_t i = 0; i < labels->size(); ++i) {
      const std::string p = at(std::string("$.") + name, i);
      if (!spec.rho.layout().contains((*labels)[i])) {
        throw ValidationError("unknown system '" + (*labels)[i] + "'", p);
      }
      if (!seen.insert((*labels)[i]).second) {
        throw ValidationError("system '" + (*labels)[i] + "' has two roles", p);
      }
    }
  }
  for (const auto& l : spec.rho.layout().labels()) {
    if (!seen.count(l)) throw ValidationError("system '" + l + "' has no role", "$");
  }
  return spec;
}

Json state_spec_to_json(const StateSpec& spec) {
  Json j;
  Json layout = Json::array();
  for (const auto& f : spec.rho.layout().factors()) {
    layout.push_back({{"label", f.label}, {"dim", f.dim}});
  }
  j["layout"] = layout;
  Json rows = Json::array();
  const Matrix& m = spec.rho.matrix();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back({m(r, c).real(), m(r, c).imag()});
    rows.push_back(row);
  }
  j["matrix"] = rows;
  j["senders"] = spec.roles.senders;
  j["receiver"] = spec.roles.receiver;
  j["eavesdropper"] = spec.roles.eavesdropper;
  return j;
}

ExperimentConfig parse_config(const Json& j) {
  ExperimentConfig c;
  if (j.is_null()) return c;
  if (!j.is_object()) throw ValidationError("config must be an object", "$");
  reject_unknown(j,
                 {"n", "rates", "M", "L", "K", "L_sweep", "K_sweep", "delta", "trials", "samples",
                  "master_seed", "family", "decoder", "V", "W"},
                 "$");
  if (j.contains("n")) c.n = as_positive(j["n"], "$.n");
  if (j.contains("rates")) c.rates = as_doubles(j["rates"], "$.rates");
  if (j.contains("M")) c.messages = as_sizes(j["M"], "$.M");
  if (j.contains("L")) c.randomizers = as_sizes(j["L"], "$.L");
  if (j.contains("K")) c.codewords = as_sizes(j["K"], "$.K");
  for (const auto& [key, dest] :
       {std::pair<const char*, std::vector<std::vector<std::size_t>>*>{"L_sweep", &c.l_sweep},
        {"K_sweep", &c.k_sweep}}) {
    if (!j.contains(key)) continue;
    const std::string p = at("$", key);
    for (std::size_t i = 0; i < as_array(j[key], p).size(); ++i) {
      dest->push_back(as_sizes(j[key][i], at(p, i)));
    }
  }
  if (j.contains("delta")) {
    c.delta = as_double(j["delta"], "$.delta");
    if (c.delta < 0.0) throw ValidationError("delta must be >= 0", "$.delta");
  }
  if (j.contains("trials")) c.trials = as_positive(j["trials"], "$.trials");
  if (j.contains("samples")) c.samples = as_positive(j["samples"], "$.samples");
  if (j.contains("master_seed")) c.master_seed = as_uint(j["master_seed"], "$.master_seed");
  if (j.contains("family")) {
    const std::string f = as_string(j["family"], "$.family");
    if (f == "haar") {
      c.family = FamilyKind::kHaar;
    } else if (f == "pauli") {
      c.family = FamilyKind::kWeyl;
    } else {
      throw ValidationError("family must be 'haar' or 'pauli'", "$.family");
    }
  }
  if (j.contains("decoder")) {
    const std::string d = as_string(j["decoder"], "$.decoder");
    if (d == "sequential") {
      c.decoder = DecoderKind::kSequential;
    } else if (d == "joint_pgm") {
      c.decoder = DecoderKind::kJointPgm;
    } else {
      throw ValidationError("decoder must be 'sequential' or 'joint_pgm'", "$.decoder");
    }
  }
  if (j.contains("V")) c.v = as_labels(j["V"], "$.V");
  if (j.contains("W")) c.w = as_labels(j["W"], "$.W");
  return c;
}

// ---------------------------------------------------------------------------

Json to_json(const SetFunction& f) {
  Json entries = Json::array();
  for (Subset s = 1; s < f.table_size(); ++s) {
    entries.push_back({{"subset", members_json(s)}, {"value", f(s)}});
  }
  return {{"z", f.z_count()}, {"entries", entries}};
}

SetFunction set_function_from_json(const Json& j) {
  if (!j.is_object()) throw ValidationError("set function must be an object", "$");
  const std::size_t z = as_positive(require(j, "z", "$"), "$.z");
  if (z > kMaxSenders) throw ValidationError("at most 12 senders", "$.z");
  SetFunction f(z);
  const Json& entries = as_array(require(j, "entries", "$"), "$.entries");
  std::set<Subset> seen;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const std::string p = at("$.entries", i);
    std::vector<int> members;
    const std::string sp = at(p, "subset");
    const Json& sj = as_array(require(entries[i], "subset", p), sp);
    for (std::size_t k = 0; k < sj.size(); ++k) {
      const std::uint64_t m = as_uint(sj[k], at(sp, k));
      if (m < 1 || m > z) throw ValidationError("sender index out of range", at(sp, k));
      members.push_back(static_cast<int>(m));
    }
    const Subset s = subset_from_members(members);
    if (s == 0) throw ValidationError("empty subset is fixed at 0", sp);
    if (!seen.insert(s).second) throw ValidationError("subset listed twice", sp);
    f.set(s, as_double(require(entries[i], "value", p), at(p, "value")));
  }
  if (seen.size() + 1 != f.table_size()) {
    throw ValidationError("every nonempty subset needs a value", "$.entries");
  }
  return f;
}

Json to_json(const RateRegion& r) {
  Json cs = Json::array();
  for (const auto& c : r.constraints()) {
    cs.push_back({{"subset", members_json(c.subset)},
                  {"direction", c.direction == Direction::kAtMost ? "at_most" : "at_least"},
                  {"bound", c.bound}});
  }
  return {{"z", r.z_count()}, {"constraints", cs}};
}

Json to_json(const SimulationReport& r) {
  Json estimates = Json::object();
  for (const auto& [k, v] : r.estimates) estimates[k] = v;
  Json errors = Json::object();
  for (const auto& [k, v] : r.standard_errors) errors[k] = v;
  Json samples = Json::object();
  for (const auto& [k, v] : r.samples) samples[k] = v;
  return {{"kind", r.kind},
          {"master_seed", r.master_seed},
          {"trials", r.trials},
          {"exact", r.exact},
          {"estimates", estimates},
          {"standard_errors", errors},
          {"samples", samples},
          {"notes", r.notes},
          {"violations", r.violations}};
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string to_csv(const SimulationReport& r) {
  std::ostringstream os;
  os << "trial_index,metric_name,value\r\n";
  std::size_t rows = 0;
  for (const auto& [k, v] : r.samples) rows = std::max(rows, v.size());
  for (std::size_t t = 0; t < rows; ++t) {
    for (const auto& [k, v] : r.samples) {
      if (t < v.size()) os << t << ',' << csv_field(k) << ',' << format_double(v[t]) << "\r\n";
    }
  }
  return os.str();
}

}  // namespace qmap::cli
