#include "qmap/regions.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>

#include "qmap/error.hpp"
#include "qmap/lp.hpp"

namespace qmap {

int subset_size(Subset s) { return std::popcount(s); }

std::vector<int> subset_members(Subset s) {
  std::vector<int> out;
  for (int z = 0; s != 0; ++z, s >>= 1) {
    if (s & 1u) out.push_back(z + 1);
  }
  return out;
}

Subset subset_from_members(const std::vector<int>& members) {
  Subset s = 0;
  for (int z : members) {
    if (z < 1 || z > static_cast<int>(kMaxSenders)) {
      throw ValidationError("sender index " + std::to_string(z) + " out of range");
    }
    s |= Subset{1} << (z - 1);
  }
  return s;
}

std::string subset_to_string(Subset s) {
  std::string out = "{";
  bool first = true;
  for (int z : subset_members(s)) {
    if (!first) out += ",";
    out += std::to_string(z);
    first = false;
  }
  return out + "}";
}

// ---------------------------------------------------------------------------

SetFunction::SetFunction(std::size_t z_count)
    : SetFunction(z_count, std::vector<double>(std::size_t{1} << std::min(z_count, kMaxSenders), 0.0)) {}

SetFunction::SetFunction(std::size_t z_count, std::vector<double> values)
    : z_count_(z_count), values_(std::move(values)) {
  if (z_count_ < 1 || z_count_ > kMaxSenders) {
    throw ValidationError("sender count must be in [1, 12]");
  }
  if (values_.size() != (std::size_t{1} << z_count_)) {
    throw ValidationError("set function table must have 2^Z entries");
  }
  if (values_[0] != 0.0) throw ValidationError("set function must vanish on the empty set");
  for (double v : values_) {
    if (!std::isfinite(v)) throw ValidationError("set function value is not finite");
  }
}

void SetFunction::set(Subset s, double v) {
  if (s == 0 && v != 0.0) throw ValidationError("set function must vanish on the empty set");
  if (!std::isfinite(v)) throw ValidationError("set function value is not finite");
  values_.at(s) = v;
}

double RateTuple::sum_over(Subset s) const {
  double acc = 0.0;
  for (std::size_t z = 0; z < rates.size(); ++z) {
    if (s & (Subset{1} << z)) acc += rates[z];
  }
  return acc;
}

RateRegion::RateRegion(std::size_t z_count, std::vector<Constraint> constraints)
    : z_count_(z_count), constraints_(std::move(constraints)) {
  const std::size_t expected = (std::size_t{1} << z_count_) - 1;
  if (constraints_.size() != expected) {
    throw ValidationError("rate region needs one constraint per nonempty subset");
  }
  std::vector<bool> seen(expected + 1, false);
  for (const auto& c : constraints_) {
    if (c.subset == 0 || c.subset > expected || seen[c.subset]) {
      throw ValidationError("rate region constraint subsets must be distinct and nonempty");
    }
    if (!std::isfinite(c.bound)) throw ValidationError("rate region bound is not finite");
    seen[c.subset] = true;
  }
}

namespace {

RateRegion region_from(const SetFunction& f, Direction dir) {
  std::vector<Constraint> cs;
  for (Subset s = 1; s <= f.full_set(); ++s) cs.push_back({s, f(s), dir});
  return RateRegion(f.z_count(), std::move(cs));
}

Labels senders_in(const Labels& senders, Subset s) {
  Labels out;
  for (std::size_t z = 0; z < senders.size(); ++z) {
    if (s & (Subset{1} << z)) out.push_back(senders[z]);
  }
  return out;
}

Labels join(Labels a, const Labels& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

void check_roles(const DensityMatrix& rho, const Labels& senders,
                 const std::vector<const Labels*>& others) {
  if (senders.empty() || senders.size() > kMaxSenders) {
    throw ValidationError("need between 1 and 12 senders");
  }
  Labels all = senders;
  for (const Labels* o : others) all = join(all, *o);
  for (std::size_t i = 0; i < all.size(); ++i) {
    (void)rho.layout().index_of(all[i]);
    for (std::size_t j = i + 1; j < all.size(); ++j) {
      if (all[i] == all[j]) {
        throw ValidationError("label '" + all[i] + "' assigned to more than one role");
      }
    }
  }
}

double log_dim_sum(const std::vector<double>& log_dims, Subset s) {
  double acc = 0.0;
  for (std::size_t z = 0; z < log_dims.size(); ++z) {
    if (s & (Subset{1} << z)) acc += log_dims[z];
  }
  return acc;
}

}  // namespace

RateRegion RateRegion::at_most(const SetFunction& f) { return region_from(f, Direction::kAtMost); }
RateRegion RateRegion::at_least(const SetFunction& f) { return region_from(f, Direction::kAtLeast); }

std::vector<double> sender_log_dims(const DensityMatrix& rho, const Labels& senders) {
  std::vector<double> out;
  for (const auto& l : senders) out.push_back(std::log2(static_cast<double>(rho.layout().dim(l))));
  return out;
}

SetFunction chat_from_state(const DensityMatrix& rho, const Labels& senders, const Labels& v) {
  check_roles(rho, senders, {&v});
  const std::size_t z = senders.size();
  const auto logd = sender_log_dims(rho, senders);
  // Work on the marginal A_[Z] V once.
  DensityMatrix marg = partial_trace(rho, join(senders, v));
  const double s_all = entropy(marg);
  SetFunction f(z);
  const Subset full = f.full_set();
  for (Subset g = 1; g <= full; ++g) {
    // S(A_Γ | A_Γc V) = S(A_[Z] V) − S(A_Γc V)
    const double cond = s_all - entropy(marg, join(senders_in(senders, full & ~g), v));
    f.set(g, log_dim_sum(logd, g) - cond);
  }
  return f;
}

SetFunction dhat_from_state(const DensityMatrix& rho, const Labels& senders, const Labels& w) {
  check_roles(rho, senders, {&w});
  const std::size_t z = senders.size();
  const auto logd = sender_log_dims(rho, senders);
  DensityMatrix marg = partial_trace(rho, join(senders, w));
  const double s_w = entropy(marg, w);
  SetFunction f(z);
  for (Subset g = 1; g <= f.full_set(); ++g) {
    const double cond = entropy(marg, join(senders_in(senders, g), w)) - s_w;
    f.set(g, log_dim_sum(logd, g) - cond);
  }
  return f;
}

SetFunction dcheck_from_dhat(const SetFunction& dhat, const std::vector<double>& log_dims) {
  if (log_dims.size() != dhat.z_count()) throw ValidationError("log_dims size mismatch");
  SetFunction f(dhat.z_count());
  for (Subset g = 1; g <= f.full_set(); ++g) f.set(g, 2.0 * log_dim_sum(log_dims, g) - dhat(g));
  return f;
}

MainRegion main_region_detail(const DensityMatrix& rho, const Labels& senders, const Labels& b,
                              const Labels& e) {
  check_roles(rho, senders, {&b, &e});
  const Labels all = join(join(senders, b), e);
  if (all.size() != rho.layout().size()) {
    throw ValidationError("sender, receiver and eavesdropper labels must cover the layout");
  }
  SetFunction chat = chat_from_state(rho, senders, join(b, e));
  SetFunction dhat = dhat_from_state(rho, senders, e);
  const Subset full = chat.full_set();
  std::vector<Constraint> cs;
  std::vector<double> residual(chat.table_size(), 0.0);
  double worst = 0.0;
  for (Subset g = 1; g <= full; ++g) {
    const Labels a_g = senders_in(senders, g);
    const Labels rest = join(senders_in(senders, full & ~g), b);
    const double bound = conditional_mutual_information(rho, a_g, rest, e);
    residual[g] = bound - (chat(g) - dhat(g));
    worst = std::max(worst, std::abs(residual[g]));
    cs.push_back({g, bound, Direction::kAtMost});
  }
  if (worst > kEntropicTol) {
    throw InvariantViolation("I(A_G : A_Gc B | E) differs from Chat - Dhat by " +
                             std::to_string(worst));
  }
  return MainRegion{RateRegion(senders.size(), std::move(cs)), std::move(chat), std::move(dhat),
                    std::move(residual), worst};
}

RateRegion main_region(const DensityMatrix& rho, const Labels& senders, const Labels& b,
                       const Labels& e) {
  return main_region_detail(rho, senders, b, e).region;
}

// ---------------------------------------------------------------------------

bool PropertyReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

const PropertyCheck& PropertyReport::check(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return c;
  }
  throw ValidationError("no property check named '" + name + "'");
}

PropertyReport check_set_function_properties(const SetFunction& f, SetFunctionKind kind,
                                             double tol) {
  PropertyReport report;
  report.kind = kind;
  const Subset full = f.full_set();
  const double lowest = -std::numeric_limits<double>::infinity();

  PropertyCheck zero{"zero_empty", f(0) == 0.0, std::abs(f(0)), 0, 0};
  report.checks.push_back(zero);

  if (kind == SetFunctionKind::kSubadditiveMonotone) {
    PropertyCheck nonneg{"nonnegative", true, lowest, 0, 0};
    for (Subset s = 0; s <= full; ++s) {
      const double v = -f(s);
      if (v > nonneg.worst) nonneg = {"nonnegative", true, v, s, 0};
    }
    nonneg.passed = nonneg.worst <= tol;
    report.checks.push_back(nonneg);

    PropertyCheck mono{"monotone", true, lowest, 0, 0};
    for (Subset big = 0; big <= full; ++big) {
      // Every proper subset of `big`.
      for (Subset small = big;; small = (small - 1) & big) {
        if (small != big) {
          const double v = f(small) - f(big);
          if (v > mono.worst) mono = {"monotone", true, v, small, big};
        }
        if (small == 0) break;
      }
    }
    mono.passed = mono.worst <= tol;
    report.checks.push_back(mono);
  }

  const bool sub = kind == SetFunctionKind::kSubadditiveMonotone;
  PropertyCheck mod{sub ? "submodular" : "supermodular", true, lowest, 0, 0};
  for (Subset a = 0; a <= full; ++a) {
    for (Subset b = a; b <= full; ++b) {
      const double lhs = f(a) + f(b);
      const double rhs = f(a | b) + f(a & b);
      const double v = sub ? rhs - lhs : lhs - rhs;
      if (v > mod.worst) {
        mod.worst = v;
        mod.first = a;
        mod.second = b;
      }
    }
  }
  mod.passed = mod.worst <= tol;
  report.checks.push_back(mod);
  return report;
}

namespace {

std::vector<Vertex> greedy_vertices(const SetFunction& f) {
  const std::size_t z = f.z_count();
  std::vector<int> perm(z);
  std::iota(perm.begin(), perm.end(), 1);
  std::vector<Vertex> out;
  do {
    RateTuple r{std::vector<double>(z, 0.0)};
    Subset chain = 0;
    for (int member : perm) {
      const Subset next = chain | (Subset{1} << (member - 1));
      r.rates[static_cast<std::size_t>(member - 1)] = f(next) - f(chain);
      chain = next;
    }
    const bool duplicate = std::any_of(out.begin(), out.end(), [&](const Vertex& v) {
      for (std::size_t i = 0; i < z; ++i) {
        if (std::abs(v.rates.rates[i] - r.rates[i]) > kEntropicTol) return false;
      }
      return true;
    });
    if (!duplicate) out.push_back({std::move(r), perm});
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

std::string describe_failure(const PropertyReport& rep) {
  for (const auto& c : rep.checks) {
    if (!c.passed) {
      return c.name + " fails at " + subset_to_string(c.first) + ", " +
             subset_to_string(c.second) + " by " + std::to_string(c.worst);
    }
  }
  return "ok";
}

}  // namespace

std::vector<Vertex> polymatroid_vertices(const SetFunction& f) {
  auto rep = check_set_function_properties(f, SetFunctionKind::kSubadditiveMonotone);
  if (!rep.passed()) throw ValidationError("not a polymatroid rank function: " + describe_failure(rep));
  return greedy_vertices(f);
}

std::vector<Vertex> contrapolymatroid_vertices(const SetFunction& d,
                                               const std::optional<std::vector<double>>& log_dims) {
  if (log_dims) {
    auto rep = check_set_function_properties(dcheck_from_dhat(d, *log_dims),
                                             SetFunctionKind::kSubadditiveMonotone);
    if (!rep.passed()) {
      throw ValidationError("complement is not a polymatroid rank function: " + describe_failure(rep));
    }
  } else {
    auto rep = check_set_function_properties(d, SetFunctionKind::kSuperadditive);
    if (!rep.passed()) throw ValidationError("not supermodular: " + describe_failure(rep));
  }
  return greedy_vertices(d);
}

Membership membership(const RateRegion& region, const RateTuple& r, double slack) {
  if (r.size() != region.z_count()) throw ValidationError("rate tuple has the wrong length");
  Membership m;
  m.worst_margin = std::numeric_limits<double>::infinity();
  for (const auto& c : region.constraints()) {
    const double sum = r.sum_over(c.subset);
    const double margin = c.direction == Direction::kAtMost ? c.bound - sum : sum - c.bound;
    if (margin < m.worst_margin) {
      m.worst_margin = margin;
      m.worst = c.subset;
    }
  }
  m.member = m.worst_margin >= -slack;
  return m;
}

RateTuple separate(const SetFunction& f, const SetFunction& g, bool strict) {
  if (f.z_count() != g.z_count()) throw ValidationError("separate: sender counts differ");
  const std::size_t z = f.z_count();
  const Subset full = f.full_set();

  // Sandwich condition with its tightest subset.
  Subset tight = 1;
  double tight_gap = std::numeric_limits<double>::infinity();
  double delta = std::numeric_limits<double>::infinity();
  for (Subset s = 1; s <= full; ++s) {
    const double gap = f(s) - g(s);
    if (gap < tight_gap) {
      tight_gap = gap;
      tight = s;
    }
    delta = std::min(delta, gap / (2.0 * subset_size(s)));
  }
  if (tight_gap < 0.0 || (strict && tight_gap <= 0.0)) {
    throw SubsetError("separate: g(A) " + std::string(strict ? ">=" : ">") + " f(A) at A = " +
                          subset_to_string(tight),
                      tight);
  }
  if (!strict) delta = 0.0;

  // Variables (R_1..R_Z, t); maximize the common slack t.
  const auto rows = static_cast<Eigen::Index>(2 * full);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(rows, static_cast<Eigen::Index>(z + 1));
  Eigen::VectorXd b(rows);
  for (Subset s = 1; s <= full; ++s) {
    const Eigen::Index up = 2 * (s - 1);
    const Eigen::Index lo = up + 1;
    for (std::size_t k = 0; k < z; ++k) {
      if (s & (Subset{1} << k)) {
        a(up, static_cast<Eigen::Index>(k)) = 1.0;
        a(lo, static_cast<Eigen::Index>(k)) = -1.0;
      }
    }
    a(up, static_cast<Eigen::Index>(z)) = 1.0;
    a(lo, static_cast<Eigen::Index>(z)) = 1.0;
    b(up) = f(s) - subset_size(s) * delta;
    b(lo) = -(g(s) + subset_size(s) * delta);
  }
  Eigen::VectorXd c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(z + 1));
  c(static_cast<Eigen::Index>(z)) = 1.0;
  lp::Result res = lp::maximize(a, b, c);
  if (res.status != lp::Status::kOptimal) {
    throw InvariantViolation("separate: linear program did not reach an optimum");
  }

  RateTuple r{std::vector<double>(res.y.data(), res.y.data() + z)};
  // Check the answer against the original (unshrunk) tables.
  Subset worst = 0;
  double worst_margin = std::numeric_limits<double>::infinity();
  for (Subset s = 1; s <= full; ++s) {
    const double sum = r.sum_over(s);
    const double margin = std::min(f(s) - sum, sum - g(s));
    if (margin < worst_margin) {
      worst_margin = margin;
      worst = s;
    }
  }
  const bool ok = strict ? worst_margin > 0.0 : worst_margin >= -kEntropicTol;
  if (!ok) {
    throw SubsetError("separate: no separating tuple; tightest subset " + subset_to_string(worst),
                      worst);
  }
  return r;
}

RateSplit rate_split(const RateTuple& r, const SetFunction& chat, const SetFunction& dhat) {
  const std::size_t z = chat.z_count();
  if (dhat.z_count() != z || r.size() != z) throw ValidationError("rate_split: size mismatch");
  for (double x : r.rates) {
    if (!std::isfinite(x)) throw ValidationError("rate_split: rate is not finite");
  }
  const Subset full = chat.full_set();
  for (Subset s = 1; s <= full; ++s) {
    if (!(r.sum_over(s) < chat(s) - dhat(s))) {
      throw SubsetError("rate_split: rates not strictly inside the region at " + subset_to_string(s),
                        s);
    }
  }
  SetFunction upper(z);
  for (Subset s = 1; s <= full; ++s) upper.set(s, chat(s) - r.sum_over(s));

  RateSplit out;
  out.d = separate(upper, dhat, /*strict=*/true);
  out.c.rates.resize(z);
  for (std::size_t k = 0; k < z; ++k) out.c.rates[k] = out.d.rates[k] + r.rates[k];

  out.c_margin = std::numeric_limits<double>::infinity();
  out.d_margin = std::numeric_limits<double>::infinity();
  for (Subset s = 1; s <= full; ++s) {
    out.c_margin = std::min(out.c_margin, chat(s) - out.c.sum_over(s));
    out.d_margin = std::min(out.d_margin, out.d.sum_over(s) - dhat(s));
  }
  if (!(out.c_margin > 0.0) || !(out.d_margin > 0.0)) {
    throw InvariantViolation("rate_split: split lost strictness");
  }
  return out;
}

}  // namespace qmap
