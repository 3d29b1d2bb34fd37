#pragma once

// Set functions over sender subsets and the rate regions they define.
//
// Subsets of [Z] are bitmasks: sender z (1-based) is bit z-1.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qmap/qstate.hpp"

namespace qmap {

using Subset = std::uint32_t;

inline constexpr std::size_t kMaxSenders = 12;
// Tolerance for comparisons between entropic quantities.
inline constexpr double kEntropicTol = 1e-9;

int subset_size(Subset s);
// 1-based members in increasing order.
std::vector<int> subset_members(Subset s);
Subset subset_from_members(const std::vector<int>& members);
std::string subset_to_string(Subset s);

class SetFunction {
 public:
  explicit SetFunction(std::size_t z_count);
  // values[mask] for every mask in [0, 2^Z); values[0] must be exactly 0.
  SetFunction(std::size_t z_count, std::vector<double> values);

  std::size_t z_count() const noexcept { return z_count_; }
  Subset full_set() const noexcept { return static_cast<Subset>((1u << z_count_) - 1u); }
  std::size_t table_size() const noexcept { return values_.size(); }
  double operator()(Subset s) const { return values_.at(s); }
  void set(Subset s, double v);
  const std::vector<double>& values() const noexcept { return values_; }

 private:
  std::size_t z_count_;
  std::vector<double> values_;
};

struct RateTuple {
  std::vector<double> rates;

  std::size_t size() const noexcept { return rates.size(); }
  double operator[](std::size_t i) const { return rates[i]; }
  double sum_over(Subset s) const;
};

enum class Direction { kAtMost, kAtLeast };

struct Constraint {
  Subset subset = 0;
  double bound = 0.0;
  Direction direction = Direction::kAtMost;
};

class RateRegion {
 public:
  RateRegion(std::size_t z_count, std::vector<Constraint> constraints);
  // Σ_{z∈Γ} R_z ≤ f(Γ) for every nonempty Γ.
  static RateRegion at_most(const SetFunction& f);
  // Σ_{z∈Γ} R_z ≥ f(Γ) for every nonempty Γ.
  static RateRegion at_least(const SetFunction& f);

  std::size_t z_count() const noexcept { return z_count_; }
  const std::vector<Constraint>& constraints() const noexcept { return constraints_; }

 private:
  std::size_t z_count_;
  std::vector<Constraint> constraints_;
};

// ---------------------------------------------------------------------------
// Set functions from states. `senders` holds one label per sender.

// Ĉ(Γ) = Σ_{z∈Γ} log d_z − S(A_Γ | A_Γc V)
SetFunction chat_from_state(const DensityMatrix& rho, const Labels& senders,
                            const Labels& v);
// D̂(Γ) = Σ_{z∈Γ} log d_z − S(A_Γ | W)
SetFunction dhat_from_state(const DensityMatrix& rho, const Labels& senders,
                            const Labels& w);
// Ď(Γ) = 2 Σ_{z∈Γ} log d_z − D̂(Γ)
SetFunction dcheck_from_dhat(const SetFunction& dhat, const std::vector<double>& log_dims);
std::vector<double> sender_log_dims(const DensityMatrix& rho, const Labels& senders);

struct MainRegion {
  RateRegion region;
  SetFunction chat;              // with V = B ∪ E
  SetFunction dhat;              // with W = E
  std::vector<double> residual;  // bound − (Ĉ − D̂), per mask
  double max_residual = 0.0;
};

// Σ_{z∈Γ} R_z ≤ I(A_Γ : A_Γc B | E) for every nonempty Γ. Throws
// InvariantViolation if the bound disagrees with Ĉ − D̂ beyond 1e-9.
MainRegion main_region_detail(const DensityMatrix& rho, const Labels& senders,
                              const Labels& b, const Labels& e);
RateRegion main_region(const DensityMatrix& rho, const Labels& senders,
                       const Labels& b, const Labels& e);

// ---------------------------------------------------------------------------
// Structural checks

enum class SetFunctionKind { kSubadditiveMonotone, kSuperadditive };

struct PropertyCheck {
  std::string name;
  bool passed = true;
  // Largest violation amount found (≤ 0 when the property holds strictly).
  double worst = 0.0;
  Subset first = 0;
  Subset second = 0;
};

struct PropertyReport {
  SetFunctionKind kind = SetFunctionKind::kSubadditiveMonotone;
  std::vector<PropertyCheck> checks;

  bool passed() const;
  const PropertyCheck& check(const std::string& name) const;
};

PropertyReport check_set_function_properties(const SetFunction& f, SetFunctionKind kind,
                                             double tol = kEntropicTol);

struct Vertex {
  RateTuple rates;
  std::vector<int> permutation;  // 1-based sender order that produced it
};

// Greedy vertices over all permutations, duplicates (within 1e-9) removed.
std::vector<Vertex> polymatroid_vertices(const SetFunction& f);
// Greedy vertices of {R : Σ_Γ R ≥ d(Γ)}. With log_dims, the precondition is
// checked on Ď = 2Σ log d − d; without, d must be zero and supermodular.
std::vector<Vertex> contrapolymatroid_vertices(
    const SetFunction& d, const std::optional<std::vector<double>>& log_dims = std::nullopt);

struct Membership {
  bool member = true;
  Subset worst = 0;          // constraint with the smallest margin
  double worst_margin = 0.0; // negative when violated
};

Membership membership(const RateRegion& region, const RateTuple& r, double slack);

// R with g(A) ≤ Σ_{s∈A} R_s ≤ f(A) for every nonempty A; strict inequalities
// when `strict`. Throws SubsetError naming a witness when no such R exists.
RateTuple separate(const SetFunction& f, const SetFunction& g, bool strict);

struct RateSplit {
  RateTuple c;
  RateTuple d;
  double c_margin = 0.0;  // min over Γ of Ĉ(Γ) − Σ_Γ c
  double d_margin = 0.0;  // min over Γ of Σ_Γ d − D̂(Γ)
};

// (C, D) with Σ_Γ C < Ĉ(Γ), Σ_Γ D > D̂(Γ) and C = D + R componentwise.
RateSplit rate_split(const RateTuple& r, const SetFunction& chat, const SetFunction& dhat);

}  // namespace qmap
