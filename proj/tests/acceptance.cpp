// Acceptance run: one PASS/FAIL line per criterion. Tolerances and sizes are
// fixed below; nothing is read from the environment.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "qmap/cli.hpp"
#include "qmap/error.hpp"
#include "qmap/protocols.hpp"
#include "qmap/regions.hpp"

using namespace qmap;

namespace {

constexpr double kEntropyTol = 1e-9;
constexpr double kPropertyTol = 1e-9;
constexpr double kIdentityTol = 1e-9;
constexpr double kVertexTol = 1e-9;
constexpr double kChainTol = 1e-12;
constexpr double kGridStep = 1e-2;
constexpr double kUnionTol = 1e-9;
constexpr double kRouteTol = 1e-10;
constexpr double kExactCodeTol = 1e-10;
constexpr std::uint64_t kSeed = 20240601;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail = what;
    pass = pass && ok;
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::vector<std::size_t> dims_of(const DensityMatrix& r) {
  std::vector<std::size_t> d;
  for (const auto& f : r.layout().factors()) d.push_back(f.dim);
  return d;
}

// Entropy of the marginal on the factors flagged in `keep`, via the oracle.
double oracle_entropy(const DensityMatrix& r, const std::vector<bool>& keep) {
  bool any = false;
  for (bool k : keep) any = any || k;
  if (!any) return 0.0;
  return oracle::entropy_bits(oracle::partial_trace(r.matrix(), dims_of(r), keep));
}

const SystemLayout kFive({{"A1", 2}, {"A2", 2}, {"A3", 2}, {"B", 2}, {"E", 2}});
const Labels kSenders{"A1", "A2", "A3"};

DensityMatrix five_qubit_state(std::size_t i) {
  Rng rng(derive_seed(kSeed, {2, i}));
  const std::size_t rank = 1 + static_cast<std::size_t>(rng() % 32);
  return random_density(kFive, rank, derive_seed(kSeed, {3, i}));
}

// ---------------------------------------------------------------------------

Outcome criterion_1() {
  Outcome o;
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (std::size_t i = 0; i < 100; ++i) {
    const std::size_t d = 2 + i % 3;
    const std::size_t rank = 1 + (i / 3) % d;
    const DensityMatrix r = random_density(SystemLayout({{"Q", d}}), rank, derive_seed(kSeed, {10, i}));
    worst = std::max(worst, std::abs(entropy(r) - oracle::entropy_bits(r.matrix())));
  }
  o.require(worst <= kEntropyTol, "entropy differs from oracle by " + fmt(worst));

  double min_cmi = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < 100; ++i) {
    const std::size_t da = 2 + i % 2;
    const std::size_t dc = 2 + (i / 2) % 2;
    const SystemLayout l({{"A", da}, {"B", 2}, {"C", dc}});
    const std::size_t rank = 1 + i % l.total_dim();
    const DensityMatrix r = random_density(l, rank, derive_seed(kSeed, {11, i}));
    min_cmi = std::min(min_cmi, conditional_mutual_information(r, {"A"}, {"C"}, {"B"}));
  }
  o.require(min_cmi >= -kEntropyTol, "strong subadditivity fails by " + fmt(-min_cmi));
  const double secs = seconds_since(t0);
  o.require(secs < 10.0, "took " + fmt(secs) + " s");
  if (o.pass) o.detail = "max |S - oracle| = " + fmt(worst) + ", min I(A:C|B) = " + fmt(min_cmi);
  return o;
}

Outcome criterion_2() {
  Outcome o;
  const auto t0 = Clock::now();
  std::size_t checked = 0;
  for (std::size_t i = 0; i < 50; ++i) {
    const DensityMatrix r = five_qubit_state(i);
    const auto logs = sender_log_dims(r, kSenders);
    const SetFunction dhat = dhat_from_state(r, kSenders, {"E"});
    const std::vector<std::pair<std::string, std::pair<SetFunction, SetFunctionKind>>> fs{
        {"chat(V=B)", {chat_from_state(r, kSenders, {"B"}), SetFunctionKind::kSubadditiveMonotone}},
        {"chat(V=BE)", {chat_from_state(r, kSenders, {"B", "E"}), SetFunctionKind::kSubadditiveMonotone}},
        {"dcheck", {dcheck_from_dhat(dhat, logs), SetFunctionKind::kSubadditiveMonotone}},
        {"dhat", {dhat, SetFunctionKind::kSuperadditive}}};
    for (const auto& [name, f] : fs) {
      const PropertyReport rep = check_set_function_properties(f.first, f.second, kPropertyTol);
      ++checked;
      if (!rep.passed()) {
        for (const auto& c : rep.checks) {
          o.require(c.passed, "state " + std::to_string(i) + " " + name + " fails " + c.name);
        }
      }
    }
  }
  const double secs = seconds_since(t0);
  o.require(secs < 60.0, "took " + fmt(secs) + " s");
  if (o.pass) o.detail = std::to_string(checked) + " set functions checked";
  return o;
}

Outcome criterion_3() {
  Outcome o;
  double worst = 0.0;
  for (std::size_t i = 0; i < 50; ++i) {
    const DensityMatrix r = five_qubit_state(i);
    const SetFunction chat = chat_from_state(r, kSenders, {"B", "E"});
    const SetFunction dhat = dhat_from_state(r, kSenders, {"E"});
    for (Subset g = 1; g < 8; ++g) {
      // I(X:Y|E) = S(XE) + S(YE) − S(XYE) − S(E), X = A_Γ, Y = A_Γc B; factors
      // are A1 A2 A3 B E.
      std::vector<bool> x(5, false);
      std::vector<bool> y(5, false);
      for (int z = 0; z < 3; ++z) ((g >> z) & 1u ? x : y)[static_cast<std::size_t>(z)] = true;
      y[3] = true;
      std::vector<bool> xe = x;
      std::vector<bool> ye = y;
      std::vector<bool> all(5, true);
      std::vector<bool> e(5, false);
      xe[4] = ye[4] = e[4] = true;
      const double cmi = oracle_entropy(r, xe) + oracle_entropy(r, ye) - oracle_entropy(r, all) -
                         oracle_entropy(r, e);
      worst = std::max(worst, std::abs(cmi - (chat(g) - dhat(g))));
    }
    try {
      const MainRegion m = main_region_detail(r, kSenders, {"B"}, {"E"});
      worst = std::max(worst, m.max_residual);
    } catch (const InvariantViolation& e) {
      o.require(false, e.what());
    }
  }
  o.require(worst <= kIdentityTol, "identity off by " + fmt(worst));
  if (o.pass) o.detail = "max deviation " + fmt(worst);
  return o;
}

// Support function comparison between the down-closed hull of the greedy
// vertices and a point grid over {R ≥ 0 : Σ_Γ R ≤ f(Γ)}.
bool grid_agrees(const SetFunction& f, const std::vector<Vertex>& vs, std::string& why) {
  const std::size_t z = f.z_count();
  std::vector<std::size_t> len(z);
  std::size_t total = 1;
  for (std::size_t i = 0; i < z; ++i) {
    len[i] = static_cast<std::size_t>(std::floor(std::max(0.0, f(Subset{1} << i)) / kGridStep)) + 2;
    total *= len[i];
  }
  auto coords = [&](std::size_t idx) {
    std::vector<std::size_t> c(z);
    for (std::size_t i = z; i-- > 0;) {
      c[i] = idx % len[i];
      idx /= len[i];
    }
    return c;
  };
  std::vector<char> feasible(total);
  for (std::size_t idx = 0; idx < total; ++idx) {
    const auto c = coords(idx);
    bool ok = true;
    for (Subset s = 1; s <= f.full_set() && ok; ++s) {
      double sum = 0.0;
      for (std::size_t i = 0; i < z; ++i) {
        if ((s >> i) & 1u) sum += static_cast<double>(c[i]) * kGridStep;
      }
      ok = sum <= f(s) + 1e-12;
    }
    feasible[idx] = ok;
  }
  // Only grid-maximal feasible points can attain a support value for w ≥ 0.
  std::vector<std::vector<double>> frontier;
  for (std::size_t idx = 0; idx < total; ++idx) {
    if (!feasible[idx]) continue;
    const auto c = coords(idx);
    bool maximal = true;
    std::size_t stride = 1;
    for (std::size_t i = z; i-- > 0;) {
      if (c[i] + 1 < len[i] && feasible[idx + stride]) maximal = false;
      stride *= len[i];
    }
    if (!maximal) continue;
    std::vector<double> p(z);
    for (std::size_t i = 0; i < z; ++i) p[i] = static_cast<double>(c[i]) * kGridStep;
    frontier.push_back(p);
  }

  // Directions on the simplex, step 0.05.
  std::vector<std::vector<double>> dirs;
  const int steps = 20;
  std::function<void(std::vector<double>&, int)> gen = [&](std::vector<double>& w, int left) {
    if (w.size() + 1 == z) {
      w.push_back(static_cast<double>(left) / steps);
      dirs.push_back(w);
      w.pop_back();
      return;
    }
    for (int k = 0; k <= left; ++k) {
      w.push_back(static_cast<double>(k) / steps);
      gen(w, left - k);
      w.pop_back();
    }
  };
  std::vector<double> w0;
  gen(w0, steps);

  for (const auto& w : dirs) {
    double grid = -1.0;
    for (const auto& p : frontier) {
      double s = 0.0;
      for (std::size_t i = 0; i < z; ++i) s += w[i] * p[i];
      grid = std::max(grid, s);
    }
    double hull = -1.0;
    for (const auto& v : vs) {
      double s = 0.0;
      for (std::size_t i = 0; i < z; ++i) s += w[i] * v.rates[i];
      hull = std::max(hull, s);
    }
    // No feasible grid point beyond the hull, and the hull is no further than
    // one grid step beyond the grid (Σ w = 1).
    if (grid > hull + 1e-9) {
      why = "grid point outside the vertex hull, excess " + fmt(grid - hull);
      return false;
    }
    if (hull - grid > kGridStep + 1e-9) {
      why = "vertex hull overshoots the grid by " + fmt(hull - grid);
      return false;
    }
  }
  return true;
}

Outcome criterion_4() {
  Outcome o;
  std::size_t vertices = 0;
  double worst_chain = 0.0;
  std::size_t grids = 0;
  for (std::size_t z = 1; z <= 3; ++z) {
    std::vector<Factor> fs;
    Labels senders;
    for (std::size_t i = 1; i <= z; ++i) {
      fs.push_back({"A" + std::to_string(i), 2});
      senders.push_back(fs.back().label);
    }
    fs.push_back({"V", 2});
    const SystemLayout l(fs);
    for (std::size_t i = 0; i < 10; ++i) {
      const DensityMatrix r =
          random_density(l, 1 + i % l.total_dim(), derive_seed(kSeed, {40, z, i}));
      const SetFunction c = chat_from_state(r, senders, {"V"});
      const auto vs = polymatroid_vertices(c);
      for (const auto& v : vs) {
        ++vertices;
        const Membership m = membership(RateRegion::at_most(c), v.rates, kVertexTol);
        o.require(m.member, "vertex outside region at " + subset_to_string(m.worst));
        Subset chain = 0;
        for (int s : v.permutation) {
          chain |= Subset{1} << (s - 1);
          const double gap = std::abs(v.rates.sum_over(chain) - c(chain));
          worst_chain = std::max(worst_chain, gap);
        }
      }
      // The grid sweep is the expensive part; run it on half the instances.
      if (i % 2 == 0) {
        std::string why;
        o.require(grid_agrees(c, vs, why), "Z=" + std::to_string(z) + ": " + why);
        ++grids;
      }
    }
  }
  o.require(worst_chain <= kChainTol, "chain not tight, gap " + fmt(worst_chain));
  if (o.pass) {
    o.detail = std::to_string(vertices) + " vertices, max chain gap " + fmt(worst_chain) + ", " +
               std::to_string(grids) + " grid comparisons";
  }
  return o;
}

Outcome criterion_5() {
  Outcome o;
  double min_margin = std::numeric_limits<double>::infinity();
  std::size_t components = 0;
  std::size_t exact_sub = 0;
  double worst_sub = 0.0;
  for (std::size_t i = 0; i < 50; ++i) {
    const DensityMatrix r = five_qubit_state(i);
    const SetFunction chat = chat_from_state(r, kSenders, {"B", "E"});
    const SetFunction dhat = dhat_from_state(r, kSenders, {"E"});
    Rng rng(derive_seed(kSeed, {50, i}));
    std::uniform_real_distribution<double> weight(0.1, 1.0);
    std::vector<double> w(3);
    for (double& x : w) x = weight(rng);
    double scale = std::numeric_limits<double>::infinity();
    for (Subset g = 1; g < 8; ++g) {
      double ws = 0.0;
      for (int z : subset_members(g)) ws += w[static_cast<std::size_t>(z - 1)];
      scale = std::min(scale, (chat(g) - dhat(g)) / ws);
    }
    if (!(scale > 0.0)) {
      o.require(false, "state " + std::to_string(i) + " has no strict interior");
      continue;
    }
    RateTuple rates;
    for (double x : w) rates.rates.push_back(0.5 * scale * x);
    try {
      const RateSplit s = rate_split(rates, chat, dhat);
      for (Subset g = 1; g < 8; ++g) {
        const double mc = chat(g) - s.c.sum_over(g);
        const double md = s.d.sum_over(g) - dhat(g);
        min_margin = std::min({min_margin, mc, md});
      }
      // C is built as the floating-point sum D + R, so that identity is
      // bit-exact. Subtracting back need not return R's last bits when C
      // needs more than 53 significant bits; that residual is reported.
      for (std::size_t z = 0; z < 3; ++z) {
        o.require(s.c[z] == s.d[z] + rates[z], "c != d + r for state " + std::to_string(i));
        ++components;
        if (s.c[z] - s.d[z] == rates[z]) ++exact_sub;
        worst_sub = std::max(worst_sub, std::abs((s.c[z] - s.d[z]) - rates[z]));
      }
    } catch (const Error& e) {
      o.require(false, e.what());
    }
  }
  o.require(min_margin > 0.0, "sandwich margin " + fmt(min_margin));
  if (o.pass) {
    o.detail = "min strict margin " + fmt(min_margin) + ", c == d + r on all " +
               std::to_string(components) + " components; c - d == r on " + std::to_string(exact_sub) +
               " (max |c - d - r| " + fmt(worst_sub) + ")";
  }
  return o;
}

Outcome criterion_6() {
  Outcome o;
  const SystemLayout s8({{"S", 8}});
  double worst_gap = -std::numeric_limits<double>::infinity();
  double worst_route = 0.0;
  for (std::size_t t = 0; t < 1000; ++t) {
    Rng rng(derive_seed(kSeed, {60, t}));
    std::vector<Matrix> lambdas;
    for (int j = 0; j < 3; ++j) lambdas.push_back(random_effect(8, rng));
    const std::size_t rank = 1 + static_cast<std::size_t>(rng() % 8);
    const double scale = 1.0 - std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const DensityMatrix base = random_density(s8, rank, derive_seed(kSeed, {61, t}));
    const DensityMatrix rho = DensityMatrix::subnormalized(scale * base.matrix(), s8);
    const UnionBound u = union_bound_check(lambdas, rho);
    worst_gap = std::max(worst_gap, u.lhs - u.rhs);
    worst_route = std::max(worst_route, std::abs(u.chain_value - u.lambda_hat_value));
  }
  o.require(worst_gap <= kUnionTol, "bound violated by " + fmt(worst_gap));
  o.require(worst_route <= kRouteTol, "evaluations differ by " + fmt(worst_route));
  if (o.pass) {
    o.detail = "max lhs - rhs " + fmt(worst_gap) + ", max route gap " + fmt(worst_route);
  }
  return o;
}

Outcome criterion_7() {
  Outcome o;
  const DensityMatrix phi = DensityMatrix::maximally_entangled("A", "B", 2);
  const CodeSpec sd = build_qmap_code(phi, Roles{{"A"}, {"B"}, {}}, 1, CodeSizes{{4}, {1}},
                                      FamilyKind::kWeyl, DecoderKind::kSequential, 0);
  const SimulationReport a = evaluate_code(sd, phi);
  const double eps = std::abs(a.estimate("epsilon"));
  o.require(a.exact, "superdense code was not evaluated exactly");
  o.require(eps <= kExactCodeTol, "superdense epsilon " + fmt(eps));

  // One-time pad: B is the eavesdropper and nobody decodes.
  const CodeSpec pad = build_qmap_code(phi, Roles{{"A"}, {}, {"B"}}, 1, CodeSizes{{1}, {4}},
                                       FamilyKind::kWeyl, DecoderKind::kSequential, 0);
  const SimulationReport b = evaluate_code(pad, phi);
  const double leak = std::abs(b.estimate("leakage"));
  const double dist = std::abs(b.estimate("randomization_distance"));
  o.require(leak <= kExactCodeTol, "pad leakage " + fmt(leak));
  o.require(dist <= kExactCodeTol, "pad randomization distance " + fmt(dist));
  if (o.pass) {
    o.detail = "epsilon " + fmt(eps) + ", leakage " + fmt(leak) + ", distance " + fmt(dist);
  }
  return o;
}

Outcome criterion_8() {
  Outcome o;
  const auto t0 = Clock::now();
  const std::size_t seeds = 20;
  std::ostringstream summary;

  struct RandCase {
    std::string name;
    DensityMatrix rho;
    Labels senders;
    std::size_t n;
  };
  const std::vector<RandCase> rcases{
      {"Z=2 n=1", random_density(SystemLayout({{"A1", 2}, {"A2", 2}, {"W", 2}}), 3, derive_seed(kSeed, {80})),
       {"A1", "A2"}, 1},
      {"Z=1 n=2", random_density(SystemLayout({{"A", 2}, {"W", 2}}), 2, derive_seed(kSeed, {81})), {"A"}, 2}};
  for (const auto& c : rcases) {
    double prev = std::numeric_limits<double>::infinity();
    summary << c.name << " distance:";
    for (std::size_t l : {2, 4, 8, 16}) {
      ChainConfig cfg{c.n, std::vector<std::size_t>(c.senders.size(), l), seeds, FamilyKind::kHaar,
                      derive_seed(kSeed, {82, c.n})};
      const SimulationReport rep = chained_randomization_experiment(c.rho, c.senders, {"W"}, cfg);
      const double mean = rep.estimate("total_distance");
      o.require(rep.violations.empty(), c.name + ": " + (rep.violations.empty() ? "" : rep.violations[0]));
      o.require(mean <= prev, c.name + ": distance rises at L=" + std::to_string(l));
      summary << ' ' << fmt(mean);
      prev = mean;
    }
    summary << "; ";
  }

  struct EncCase {
    std::string name;
    DensityMatrix rho;
    Labels senders;
    Labels v;
    std::size_t n;
  };
  const std::vector<EncCase> ecases{
      {"Z=1 n=1", random_density(SystemLayout({{"A", 2}, {"B", 2}}), 2, derive_seed(kSeed, {83})), {"A"}, {"B"}, 1},
      {"Z=1 n=2", random_density(SystemLayout({{"A", 2}, {"B", 2}}), 2, derive_seed(kSeed, {83})), {"A"}, {"B"}, 2},
      {"Z=2 n=1", random_density(SystemLayout({{"A1", 2}, {"A2", 2}, {"B", 2}}), 2, derive_seed(kSeed, {84})),
       {"A1", "A2"}, {"B"}, 1}};
  for (const auto& c : ecases) {
    double prev = std::numeric_limits<double>::infinity();
    summary << c.name << " success:";
    for (std::size_t k : {1, 2, 4, 8, 16}) {
      EncodingConfig cfg{c.n, std::vector<std::size_t>(c.senders.size(), k), seeds, FamilyKind::kHaar,
                         DecoderKind::kSequential, derive_seed(kSeed, {85, c.n})};
      const SimulationReport rep = encoding_experiment(c.rho, c.senders, c.v, cfg);
      const double mean = rep.estimate("success");
      o.require(mean <= prev, c.name + ": success rises at K=" + std::to_string(k));
      summary << ' ' << fmt(mean);
      prev = mean;
    }
    summary << "; ";
  }
  const double secs = seconds_since(t0);
  o.require(secs < 600.0, "took " + fmt(secs) + " s");
  if (o.pass) o.detail = summary.str() + fmt(secs) + " s";
  return o;
}

Outcome criterion_9() {
  Outcome o;
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = 0.9;
  m(1, 1) = 0.1;
  const DensityMatrix rho = DensityMatrix::from_matrix(m, SystemLayout({{"Q", 2}}));
  const std::size_t n = 10;
  const double delta = 0.2;
  const TypicalProjector tp = typical_projector(rho, n, delta);

  const double s = -(0.9 * std::log2(0.9) + 0.1 * std::log2(0.1));
  std::size_t count = 0;
  double mass = 0.0;
  for (unsigned bits = 0; bits < (1u << n); ++bits) {
    double p = 1.0;
    for (std::size_t i = 0; i < n; ++i) p *= (bits >> i) & 1u ? 0.1 : 0.9;
    if (std::abs(-std::log2(p) / static_cast<double>(n) - s) <= delta) {
      ++count;
      mass += p;
    }
  }
  o.require(tp.rank == count, "rank " + std::to_string(tp.rank) + " vs " + std::to_string(count));
  o.require(std::abs(tp.mass - mass) <= 1e-10, "mass " + fmt(tp.mass) + " vs " + fmt(mass));
  // Bounds with the achieved ε = 1 − mass.
  o.require(tp.mass >= 1.0 - tp.epsilon - 1e-12, "mass bound");
  o.require(static_cast<double>(count) <= std::pow(2.0, static_cast<double>(n) * (s + delta)),
            "rank bound");
  o.require(tp.max_eigenvalue <= std::pow(2.0, -static_cast<double>(n) * (s - delta)) + 1e-12,
            "operator bound");
  o.require(tp.mass_ok && tp.rank_ok && tp.operator_ok, "library diagnostics disagree");
  if (o.pass) {
    o.detail = "rank " + std::to_string(tp.rank) + ", mass " + fmt(tp.mass) + ", eps " + fmt(tp.epsilon);
  }
  return o;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome criterion_10() {
  Outcome o;
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "qmap_acceptance_repro";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto put = [&](const std::string& name, const cli::Json& j) {
    std::ofstream(dir / name) << j.dump();
    return (dir / name).string();
  };
  const std::string bell = put("bell.json", {{"preset", "bell"}});
  const std::string three = put("three.json", {{"preset", "product"}, {"params", {{"senders", 2}}}});
  const std::string werner = put("werner.json", {{"preset", "werner"}, {"params", {{"p", 0.8}}},
                                                 {"receiver", {"B"}}});
  struct Job {
    std::string command;
    std::vector<std::string> args;
  };
  const std::vector<Job> jobs{
      {"simulate-randomization",
       {"--spec", three, "--config",
        put("r.json", {{"L_sweep", {{2, 2}, {4, 1}}}, {"trials", 3}, {"master_seed", 7}})}},
      {"simulate-encoding",
       {"--spec", werner, "--config", put("e.json", {{"K", {3}}, {"trials", 3}, {"master_seed", 7}})}},
      {"simulate-code",
       {"--spec", bell, "--config", put("c.json", {{"M", {2}}, {"L", {2}}, {"master_seed", 7}})}},
      {"verify-lemmas", {"--seed", "7"}}};
  std::size_t files = 0;
  for (const auto& job : jobs) {
    std::string first;
    for (int rep = 0; rep < 2; ++rep) {
      const fs::path out = dir / (job.command + "_" + std::to_string(rep));
      std::vector<std::string> args{"qmap", job.command};
      args.insert(args.end(), job.args.begin(), job.args.end());
      args.push_back("--out");
      args.push_back(out.string());
      std::vector<const char*> argv;
      for (const auto& a : args) argv.push_back(a.c_str());
      std::ostringstream sout;
      std::ostringstream serr;
      const int code = cli::run(static_cast<int>(argv.size()), argv.data(), sout, serr);
      o.require(code == cli::kExitOk, job.command + " exited " + std::to_string(code) + ": " + serr.str());
      const std::string bytes = slurp(out / (job.command + ".json")) + "\n--\n" +
                                slurp(out / (job.command + ".csv")) + "\n--\n" + sout.str();
      if (rep == 0) {
        first = bytes;
      } else {
        o.require(bytes == first, job.command + " output differs between runs");
        files += 2;
      }
    }
  }
  fs::remove_all(dir);
  if (o.pass) o.detail = std::to_string(jobs.size()) + " commands, " + std::to_string(files) + " files identical";
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"entropy kernel", criterion_1},
      {"set function structure", criterion_2},
      {"region identity", criterion_3},
      {"greedy vertices", criterion_4},
      {"rate splitting", criterion_5},
      {"non-commutative union bound", criterion_6},
      {"exact superdense / one-time-pad codes", criterion_7},
      {"Haar trends", criterion_8},
      {"typical projector", criterion_9},
      {"reproducibility", criterion_10}};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto t0 = Clock::now();
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = seconds_since(t0);
    std::cout << (o.pass ? "PASS" : "FAIL") << "  [" << (i + 1) << "] " << criteria[i].first << " ("
              << fmt(secs) << " s): " << o.detail << std::endl;
    if (!o.pass) ++failed;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed")
            << std::endl;
  return failed == 0 ? 0 : 1;
}
