#include <algorithm>
#include <cmath>
#include <string>

#include "protocols_detail.hpp"
#include "qmap/error.hpp"
#include "qmap/protocols.hpp"

namespace qmap {

using detail::join;
using detail::trace_product;

namespace {

constexpr double kInvariantTol = 1e-9;
constexpr std::size_t kExactMessageLimit = 4096;

// π on `mixed` ⊗ marginal of s on the remaining factors, in s's layout order.
DensityMatrix mixed_times_rest(const DensityMatrix& s, const Labels& mixed) {
  Labels rest;
  for (const auto& l : s.layout().labels()) {
    if (std::find(mixed.begin(), mixed.end(), l) == mixed.end()) rest.push_back(l);
  }
  DensityMatrix pi = DensityMatrix::maximally_mixed(s.layout().restrict_to(mixed));
  if (rest.empty()) return reorder(pi, s.layout().labels());
  return reorder(tensor(pi, partial_trace(s, rest)), s.layout().labels());
}

std::size_t pow2(double exponent) {
  if (exponent > 30.0) throw BudgetExceeded("code size 2^" + std::to_string(exponent) + " is too large");
  return std::size_t{1} << static_cast<unsigned>(std::max(exponent, 0.0));
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

std::vector<std::size_t> digits_of(std::size_t index, const std::vector<std::size_t>& radix) {
  std::vector<std::size_t> d(radix.size());
  for (std::size_t z = radix.size(); z-- > 0;) {
    d[z] = index % radix[z];
    index /= radix[z];
  }
  return d;
}

const char* kPauliNote =
    "pauli families are a deterministic extension used for exact twirls; the random-coding "
    "construction itself uses Haar families";

}  // namespace

Randomization randomize(const DensityMatrix& rho, const Labels& senders, const Labels& w,
                        std::size_t n, const std::vector<UnitaryFamily>& families) {
  detail::check_labels(rho.layout(), join(senders, w), "randomize");
  detail::check_families(rho, senders, n, families);
  const DensityMatrix marg = partial_trace(rho, join(senders, w));
  check_budget(marg.dim(), n);
  const DensityMatrix rn = tensor_power(marg, n);

  Operator x = rn.as_operator();
  for (std::size_t z = 0; z < senders.size(); ++z) {
    x = apply_mixture(x, copies_of(senders[z], n), detail::blocks_of(families[z]));
  }
  Randomization out{DensityMatrix::assume_valid(std::move(x.matrix), x.layout), 0.0, 0.0};
  const DensityMatrix target = tensor_power(mixed_times_rest(marg, senders), n);
  out.distance = trace_norm(out.rho_bar.matrix() - target.matrix());
  if (!w.empty()) {
    Labels w_in_order;
    for (const auto& l : marg.layout().labels()) {
      if (std::find(w.begin(), w.end(), l) != w.end()) w_in_order.push_back(l);
    }
    const Operator wb = partial_trace(out.rho_bar.as_operator(), copies_of(w_in_order, n));
    const DensityMatrix wn = tensor_power(partial_trace(marg, w), n);
    out.w_marginal_deviation = detail::max_abs(wb.matrix - wn.matrix());
  }
  return out;
}

const char* to_string(DecoderKind kind) {
  return kind == DecoderKind::kSequential ? "sequential" : "joint_pgm";
}

CodeSizes sizes_from_rates(std::size_t n, const RateTuple& rates, const RateTuple& c,
                           const RateTuple& d) {
  if (rates.size() != c.size() || rates.size() != d.size()) {
    throw ValidationError("rate, C and D tuples must have the same length");
  }
  CodeSizes out;
  const auto dn = static_cast<double>(n);
  for (std::size_t z = 0; z < rates.size(); ++z) {
    if (std::abs(c[z] - (d[z] + rates[z])) > kInvariantTol) {
      throw ValidationError("split for sender " + std::to_string(z + 1) + " has C != D + R");
    }
    if (rates[z] < -kInvariantTol) {
      throw ValidationError("rate for sender " + std::to_string(z + 1) + " is negative");
    }
    out.messages.push_back(pow2(std::floor(dn * rates[z] + kInvariantTol)));
    out.randomizers.push_back(pow2(std::ceil(dn * d[z] - kInvariantTol)));
  }
  return out;
}

std::size_t CodeSpec::message_count() const {
  std::size_t m = 1;
  for (std::size_t x : messages) m *= x;
  return m;
}

CodeSpec build_qmap_code(const DensityMatrix& rho, const Roles& roles, std::size_t n,
                         const CodeSizes& sizes, FamilyKind family, DecoderKind decoder,
                         std::uint64_t seed) {
  const std::size_t z_count = roles.senders.size();
  if (z_count == 0 || z_count > kMaxSenders) throw ValidationError("need 1 to 12 senders");
  if (sizes.messages.size() != z_count || sizes.randomizers.size() != z_count) {
    throw ValidationError("need M and L for every sender");
  }
  const Labels v = join(roles.receiver, roles.eavesdropper);
  detail::check_labels(rho.layout(), join(roles.senders, v), "roles");

  CodeSpec code;
  code.n = n;
  code.z_count = z_count;
  code.messages = sizes.messages;
  code.randomizers = sizes.randomizers;
  code.roles = roles;
  code.family_kind = family;
  code.decoder_kind = decoder;
  code.seed = seed;
  for (std::size_t z = 0; z < z_count; ++z) {
    if (sizes.messages[z] == 0 || sizes.randomizers[z] == 0) {
      throw ValidationError("M and L must be positive");
    }
    code.codewords.push_back(sizes.messages[z] * sizes.randomizers[z]);
    code.families.push_back(make_family(family, z + 1, n, code.codewords[z],
                                        rho.layout().dim(roles.senders[z]), seed));
  }

  const SequentialDecoder dec =
      decoder == DecoderKind::kSequential
          ? sequential_decoder(rho, roles.senders, v, n, code.families)
          : joint_pgm_decoder(rho, roles.senders, v, n, code.families);
  code.layout = dec.layout;
  code.fine_decoder = dec.povm;
  code.fine_success = dec.success;

  // Λ_m = Σ of Λ_k over the block k_z ∈ [m_z L_z, (m_z + 1) L_z).
  const auto dim = static_cast<Eigen::Index>(dec.layout.total_dim());
  code.decoder.elements.assign(code.message_count(), Matrix::Zero(dim, dim));
  for (std::size_t k = 0; k < dec.povm.size(); ++k) {
    const auto kd = digits_of(k, code.codewords);
    std::size_t m = 0;
    for (std::size_t z = 0; z < z_count; ++z) m = m * code.messages[z] + kd[z] / code.randomizers[z];
    code.decoder.elements[m] += dec.povm.elements[k];
  }
  const double residual = code.decoder.completeness_residual();
  if (residual > 1e-8) {
    throw InvariantViolation("coarse-grained decoder is not complete: residual " +
                             std::to_string(residual));
  }
  return code;
}

// ---------------------------------------------------------------------------

double SimulationReport::estimate(const std::string& name) const {
  for (const auto& [k, v] : estimates) {
    if (k == name) return v;
  }
  throw ValidationError("report has no estimate '" + name + "'");
}

const std::vector<double>& SimulationReport::sample(const std::string& name) const {
  for (const auto& [k, v] : samples) {
    if (k == name) return v;
  }
  throw ValidationError("report has no sample series '" + name + "'");
}

std::vector<double>& SimulationReport::sample_slot(const std::string& name) {
  for (auto& [k, v] : samples) {
    if (k == name) return v;
  }
  samples.emplace_back(name, std::vector<double>{});
  return samples.back().second;
}

void SimulationReport::set_estimate(const std::string& name, double value) {
  for (auto& [k, v] : estimates) {
    if (k == name) {
      v = value;
      return;
    }
  }
  estimates.emplace_back(name, value);
}

void SimulationReport::set_standard_error(const std::string& name, double value) {
  for (auto& [k, v] : standard_errors) {
    if (k == name) {
      v = value;
      return;
    }
  }
  standard_errors.emplace_back(name, value);
}

void SimulationReport::summarize() {
  for (const auto& [name, xs] : samples) {
    const double m = mean_of(xs);
    set_estimate(name, m);
    double var = 0.0;
    for (double x : xs) var += (x - m) * (x - m);
    const auto count = static_cast<double>(xs.size());
    set_standard_error(name, xs.size() > 1 ? std::sqrt(var / (count - 1.0) / count) : 0.0);
  }
}

SimulationReport evaluate_code(const CodeSpec& code, const DensityMatrix& rho,
                               std::size_t sampled) {
  const Roles& roles = code.roles;
  const Labels all = join(roles.senders, join(roles.receiver, roles.eavesdropper));
  detail::check_labels(rho.layout(), all, "evaluate_code");
  const DensityMatrix marg = partial_trace(rho, all);
  if (!(marg.layout().power(code.n) == code.layout)) {
    throw ValidationError("code was built for a different state layout");
  }
  const std::size_t n = code.n;
  const DensityMatrix rn = tensor_power(marg, n);

  std::vector<std::vector<Matrix>> blocks;
  for (const auto& f : code.families) blocks.push_back(detail::blocks_of(f));

  // A'E^n marginals.
  Labels keep_single;
  for (const auto& l : marg.layout().labels()) {
    const bool sender =
        std::find(roles.senders.begin(), roles.senders.end(), l) != roles.senders.end();
    const bool eve = std::find(roles.eavesdropper.begin(), roles.eavesdropper.end(), l) !=
                     roles.eavesdropper.end();
    if (sender || eve) keep_single.push_back(l);
  }
  const Labels keep = copies_of(keep_single, n);

  Operator full_mix = rn.as_operator();
  for (std::size_t z = 0; z < code.z_count; ++z) {
    full_mix = apply_mixture(full_mix, copies_of(roles.senders[z], n), blocks[z]);
  }
  const DensityMatrix bar =
      partial_trace(DensityMatrix::assume_valid(full_mix.matrix, full_mix.layout), keep);
  const DensityMatrix target = mixed_times_rest(bar, copies_of(roles.senders, n));

  SimulationReport report;
  report.kind = "code";
  report.master_seed = code.seed;
  const std::size_t total = code.message_count();
  report.exact = total <= kExactMessageLimit;
  std::vector<std::size_t> chosen;
  if (report.exact) {
    for (std::size_t m = 0; m < total; ++m) chosen.push_back(m);
  } else {
    Rng rng(derive_seed(code.seed, {0x6d657373u}));
    std::uniform_int_distribution<std::size_t> pick(0, total - 1);
    for (std::size_t t = 0; t < std::max<std::size_t>(sampled, 1); ++t) chosen.push_back(pick(rng));
  }
  report.trials = chosen.size();

  for (const char* name : {"success", "leakage", "randomization_distance"}) report.sample_slot(name);
  auto& success = report.sample_slot("success");
  auto& leakage = report.sample_slot("leakage");
  auto& distance = report.sample_slot("randomization_distance");
  for (std::size_t m : chosen) {
    const auto md = digits_of(m, code.messages);
    Operator x = rn.as_operator();
    for (std::size_t z = 0; z < code.z_count; ++z) {
      const std::size_t l = code.randomizers[z];
      std::vector<Matrix> us(blocks[z].begin() + static_cast<std::ptrdiff_t>(md[z] * l),
                             blocks[z].begin() + static_cast<std::ptrdiff_t>((md[z] + 1) * l));
      x = apply_mixture(x, copies_of(roles.senders[z], n), us);
    }
    success.push_back(trace_product(code.decoder.elements[m], x.matrix));
    const Operator seen = partial_trace(x, keep);
    leakage.push_back(trace_norm(seen.matrix - bar.matrix()));
    distance.push_back(trace_norm(seen.matrix - target.matrix()));
  }
  report.summarize();
  report.set_estimate("epsilon", 1.0 - report.estimate("success"));
  for (const auto& [name, se] : report.standard_errors) {
    if (name == "success") {
      report.set_standard_error("epsilon", se);
      break;
    }
  }
  report.set_estimate("leakage_bound", 2.0 * report.estimate("randomization_distance"));
  report.set_estimate("fine_success", code.fine_success);
  report.set_estimate("decoder_residual", code.decoder.completeness_residual());

  if (code.family_kind == FamilyKind::kWeyl) report.notes.emplace_back(kPauliNote);
  if (!report.exact) {
    report.notes.emplace_back("message tuples sampled uniformly; estimates carry standard errors");
  } else {
    if (report.estimate("success") < code.fine_success - kInvariantTol) {
      report.violations.emplace_back("coarse-grained success fell below fine-grained success");
    }
    if (report.estimate("leakage") > report.estimate("leakage_bound") + kInvariantTol) {
      report.violations.emplace_back("leakage exceeds twice the randomization distance");
    }
  }
  if (report.estimate("decoder_residual") > 1e-8) {
    report.violations.emplace_back("decoder elements do not sum to identity");
  }
  return report;
}

std::vector<std::size_t> randomizer_counts(std::size_t n, const RateTuple& d_rates) {
  std::vector<std::size_t> out;
  for (double d : d_rates.rates) {
    out.push_back(pow2(std::ceil(static_cast<double>(n) * d - kInvariantTol)));
  }
  return out;
}

SimulationReport chained_randomization_experiment(const DensityMatrix& rho, const Labels& senders,
                                                  const Labels& w, const ChainConfig& config) {
  const std::size_t z_count = senders.size();
  if (z_count == 0) throw ValidationError("need at least one sender");
  if (config.randomizers.size() != z_count) throw ValidationError("need L for every sender");
  if (config.trials == 0) throw ValidationError("trials must be positive");
  detail::check_labels(rho.layout(), join(senders, w), "randomization");
  const std::size_t n = config.n;
  check_budget(partial_trace(rho, join(senders, w)).dim(), n);

  // Stage inputs (ρ^{A_≥z W})^{⊗n} and targets π^{A_z^n} ⊗ (ρ^{A_>z W})^{⊗n}.
  std::vector<DensityMatrix> inputs;
  std::vector<DensityMatrix> targets;
  for (std::size_t z = 0; z < z_count; ++z) {
    const Labels tail = join(Labels(senders.begin() + static_cast<std::ptrdiff_t>(z), senders.end()), w);
    const DensityMatrix s = partial_trace(rho, tail);
    inputs.push_back(tensor_power(s, n));
    targets.push_back(tensor_power(mixed_times_rest(s, {senders[z]}), n));
  }

  SimulationReport report;
  report.kind = "randomization";
  report.master_seed = config.seed;
  report.trials = config.trials;
  report.exact = false;
  report.sample_slot("total_distance");
  report.sample_slot("w_marginal_deviation");
  for (std::size_t z = 0; z < z_count; ++z) {
    report.sample_slot("stage_" + std::to_string(z + 1) + "_distance");
  }
  // Slots exist now, so these references stay valid.
  auto& total = report.sample_slot("total_distance");
  auto& wdev = report.sample_slot("w_marginal_deviation");
  std::vector<std::vector<double>*> stages;
  for (std::size_t z = 0; z < z_count; ++z) {
    stages.push_back(&report.sample_slot("stage_" + std::to_string(z + 1) + "_distance"));
  }
  for (std::size_t t = 0; t < config.trials; ++t) {
    std::vector<UnitaryFamily> fams;
    for (std::size_t z = 0; z < z_count; ++z) {
      fams.push_back(make_family(config.family, z + 1, n, config.randomizers[z],
                                 rho.layout().dim(senders[z]), derive_seed(config.seed, {t})));
    }
    const Randomization r = randomize(rho, senders, w, n, fams);
    total.push_back(r.distance);
    wdev.push_back(r.w_marginal_deviation);
    double sum = 0.0;
    for (std::size_t z = 0; z < z_count; ++z) {
      const Operator x = apply_mixture(inputs[z].as_operator(), copies_of(senders[z], n),
                                       detail::blocks_of(fams[z]));
      const double dz = trace_norm(x.matrix - targets[z].matrix());
      stages[z]->push_back(dz);
      sum += dz;
    }
    if (r.distance > sum + kInvariantTol) {
      report.violations.emplace_back("trial " + std::to_string(t) +
                                     ": total distance exceeds the sum of stage distances");
    }
    if (r.w_marginal_deviation > 1e-10) {
      report.violations.emplace_back("trial " + std::to_string(t) +
                                     ": randomization changed the W marginal");
    }
  }
  report.summarize();
  if (config.family == FamilyKind::kWeyl) report.notes.emplace_back(kPauliNote);
  return report;
}

SimulationReport encoding_experiment(const DensityMatrix& rho, const Labels& senders,
                                     const Labels& v, const EncodingConfig& config) {
  const std::size_t z_count = senders.size();
  if (z_count == 0) throw ValidationError("need at least one sender");
  if (config.codewords.size() != z_count) throw ValidationError("need K for every sender");
  if (config.trials == 0) throw ValidationError("trials must be positive");
  detail::check_labels(rho.layout(), join(senders, v), "encoding");

  SimulationReport report;
  report.kind = "encoding";
  report.master_seed = config.seed;
  report.trials = config.trials;
  report.sample_slot("success");
  report.sample_slot("decoder_residual");
  const bool staged = config.decoder == DecoderKind::kSequential;
  for (std::size_t z = 0; staged && z < z_count; ++z) {
    report.sample_slot("stage_" + std::to_string(z + 1) + "_success");
  }
  auto& success = report.sample_slot("success");
  auto& residual = report.sample_slot("decoder_residual");
  std::vector<std::vector<double>*> stages;
  for (std::size_t z = 0; staged && z < z_count; ++z) {
    stages.push_back(&report.sample_slot("stage_" + std::to_string(z + 1) + "_success"));
  }
  for (std::size_t t = 0; t < config.trials; ++t) {
    std::vector<UnitaryFamily> fams;
    for (std::size_t z = 0; z < z_count; ++z) {
      fams.push_back(make_family(config.family, z + 1, config.n, config.codewords[z],
                                 rho.layout().dim(senders[z]), derive_seed(config.seed, {t})));
    }
    const SequentialDecoder dec =
        config.decoder == DecoderKind::kSequential
            ? sequential_decoder(rho, senders, v, config.n, fams)
            : joint_pgm_decoder(rho, senders, v, config.n, fams);
    success.push_back(dec.success);
    residual.push_back(dec.residual);
    for (std::size_t z = 0; z < stages.size(); ++z) stages[z]->push_back(dec.stage_success[z]);
  }
  report.summarize();
  if (config.family == FamilyKind::kWeyl) report.notes.emplace_back(kPauliNote);
  return report;
}

TypicalProjector typical_projector(const DensityMatrix& rho, std::size_t n, double delta) {
  if (rho.is_subnormalized()) throw ValidationError("typical_projector needs a normalized state");
  if (n == 0) throw ValidationError("n must be positive");
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw ValidationError("delta must be >= 0");
  check_budget(rho.dim(), n);

  Eigen::SelfAdjointEigenSolver<Matrix> es(rho.matrix());
  const Eigen::VectorXd lambda = es.eigenvalues().cwiseMax(0.0);
  const std::size_t d = rho.dim();
  std::size_t full = 1;
  for (std::size_t i = 0; i < n; ++i) full *= d;

  TypicalProjector out;
  out.entropy = entropy(rho);
  Eigen::VectorXd flags = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(full));
  for (std::size_t x = 0; x < full; ++x) {
    double surprisal = 0.0;
    double prob = 1.0;
    bool possible = true;
    std::size_t rest = x;
    for (std::size_t i = 0; i < n; ++i) {
      const double l = lambda(static_cast<Eigen::Index>(rest % d));
      rest /= d;
      if (l <= kEntropyCutoff) {
        possible = false;
        break;
      }
      surprisal -= std::log2(l);
      prob *= l;
    }
    if (!possible) continue;
    surprisal /= static_cast<double>(n);
    if (std::abs(surprisal - out.entropy) <= delta + 1e-12) {
      flags(static_cast<Eigen::Index>(x)) = 1.0;
      ++out.rank;
      out.enumerated_mass += prob;
    }
  }

  Matrix vn = Matrix::Identity(1, 1);
  for (std::size_t i = 0; i < n; ++i) vn = Eigen::kroneckerProduct(vn, es.eigenvectors()).eval();
  const Matrix proj = vn * flags.asDiagonal() * vn.adjoint();
  out.projector = Operator{hermitize(proj), rho.layout().power(n)};

  const DensityMatrix rn = tensor_power(rho, n);
  out.mass = trace_product(out.projector.matrix, rn.matrix());
  out.epsilon = 1.0 - out.mass;
  const Matrix squeezed = out.projector.matrix * rn.matrix() * out.projector.matrix;
  out.max_eigenvalue = out.rank == 0 ? 0.0 : hermitian_eigenvalues(squeezed).maxCoeff();
  const double dn = static_cast<double>(n);
  out.rank_bound = std::exp2(dn * (out.entropy + delta));
  out.operator_bound = std::exp2(-dn * (out.entropy - delta));

  const double trace_pi = out.projector.matrix.trace().real();
  out.mass_ok = std::abs(out.mass - out.enumerated_mass) <= 1e-9 &&
                std::abs(trace_pi - static_cast<double>(out.rank)) <= 1e-9;
  out.rank_ok = static_cast<double>(out.rank) <= out.rank_bound * (1.0 + 1e-12);
  out.operator_ok = out.max_eigenvalue <= out.operator_bound + 1e-12;
  return out;
}

}  // namespace qmap
