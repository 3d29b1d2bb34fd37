#pragma once

// Finite-n realizations of the coding constructions: unitary families,
// distributed randomization, distributed encoding with pretty-good and
// sequential decoders, full one-time-pad codes and typical projectors.
//
// Multi-index conventions: a tuple (k_1, ..., k_Z) is flattened mixed-radix
// with sender 1 most significant. States raised to the n-th power use the
// copy-major layout of SystemLayout::power.

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "qmap/qstate.hpp"
#include "qmap/regions.hpp"

namespace qmap {

using Rng = std::mt19937_64;

// Counter-based stream derivation: one independent seed per path, e.g.
// (trial, sender, index, copy). Independent of evaluation order.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path);

// Haar-distributed d×d unitary: Ginibre matrix, QR, phases of R's diagonal
// folded into Q.
Matrix haar_unitary(std::size_t d, Rng& rng);

// V diag(u) V† with V Haar and u_i uniform on [0, 1]: a random 0 ≤ Λ ≤ I.
Matrix random_effect(std::size_t d, Rng& rng);

// Generalized Pauli X^a Z^b on C^d.
Matrix weyl_operator(std::size_t d, std::size_t a, std::size_t b);

enum class FamilyKind { kHaar, kWeyl };
const char* to_string(FamilyKind kind);

struct UnitaryFamily {
  std::size_t sender = 1;  // 1-based
  std::size_t n = 1;
  std::size_t dim = 1;     // single-copy dimension of the sender's factor
  FamilyKind kind = FamilyKind::kHaar;
  std::uint64_t seed = 0;
  // per_index[k][i] is the unitary applied to copy i+1 for index k.
  std::vector<std::vector<Matrix>> per_index;

  std::size_t size() const noexcept { return per_index.size(); }
  // ⊗_i U_{k,i}, copy 1 most significant.
  Matrix block(std::size_t k) const;
};

// `count` tensor-product unitaries with independent Haar factors; factor
// (k, i) is drawn from the stream derive_seed(master, {sender, k, i}).
UnitaryFamily sample_family(std::size_t sender, std::size_t n, std::size_t count, std::size_t dim,
                            std::uint64_t master_seed);
// The first `count` of the d^(2n) tensor products of Weyl operators, in
// lexicographic order (index 0 is the identity).
UnitaryFamily weyl_family(std::size_t sender, std::size_t n, std::size_t count, std::size_t dim);
UnitaryFamily make_family(FamilyKind kind, std::size_t sender, std::size_t n, std::size_t count,
                          std::size_t dim, std::uint64_t master_seed);

// Labels of the n copies of a factor.
Labels copies_of(const std::string& label, std::size_t n);
Labels copies_of(const Labels& labels, std::size_t n);

// (1/|us|) Σ (U on `on`) X (U on `on`)†
Operator apply_mixture(const Operator& x, const Labels& on, const std::vector<Matrix>& us);

// ---------------------------------------------------------------------------

struct Randomization {
  DensityMatrix rho_bar;
  // ‖ρ̄ − π^{A^n} ⊗ (ρ^W)^{⊗n}‖₁ (full trace norm, no ½).
  double distance = 0.0;
  // Largest entry of |Tr_A ρ̄ − (ρ^W)^{⊗n}|.
  double w_marginal_deviation = 0.0;
};

// Applies ⊗_z R_z to ρ^{⊗n} (ρ restricted to senders ∪ w); R_z mixes the
// block unitaries of families[z-1] uniformly.
Randomization randomize(const DensityMatrix& rho, const Labels& senders, const Labels& w,
                        std::size_t n, const std::vector<UnitaryFamily>& families);

struct Povm {
  std::vector<Matrix> elements;

  std::size_t size() const noexcept { return elements.size(); }
  // max |Σ Λ − I| entry.
  double completeness_residual() const;
};

// Square-root measurement Λ_k = ρ̄^{-1/2} p_k ρ_k ρ̄^{-1/2}, pseudo-inverse on
// the support of ρ̄ (cutoff 1e-10·λ_max). The null-space projector is split
// evenly across the outcomes so the K elements sum to I.
Povm pgm_decoder(const std::vector<Matrix>& states, const std::vector<double>& priors);
Povm pgm_decoder(const std::vector<DensityMatrix>& states, const std::vector<double>& priors);
double success_probability(const Povm& povm, const std::vector<Matrix>& states,
                           const std::vector<double>& priors);

struct SequentialDecoder {
  Povm povm;                          // over k ∈ K, on A^n V^n
  SystemLayout layout;                // layout of the decoded space
  std::vector<std::size_t> counts;    // K_z
  double success = 0.0;               // (1/|K|) Σ Tr[Λ_k ρ_k]
  std::vector<double> stage_success;  // per-stage PGM success
  double residual = 0.0;              // completeness residual
};

// Successive decoding: stage z discriminates the family of sender z on
// A_[z]^n V^n with a PGM; stages are chained with gentle-measurement
// operators Υ^(0) = Υ², Υ^(1) = Υ√(I − Υ²).
SequentialDecoder sequential_decoder(const DensityMatrix& rho, const Labels& senders,
                                     const Labels& v, std::size_t n,
                                     const std::vector<UnitaryFamily>& families);
// One PGM over all encoded states ρ_k on A^n V^n.
SequentialDecoder joint_pgm_decoder(const DensityMatrix& rho, const Labels& senders,
                                    const Labels& v, std::size_t n,
                                    const std::vector<UnitaryFamily>& families);

struct UnionBound {
  double trace = 0.0;             // Tr ϱ
  double lambda_hat_value = 0.0;  // Tr[Λ̂ ϱ], by enumeration over x ∈ {0,1}^J
  double chain_value = 0.0;       // Tr[Π̂ ϱ Π̂†], via the ancilla chain
  double lhs = 0.0;               // Tr ϱ − Tr[Λ̂ ϱ]
  double rhs = 0.0;               // 2 √(Σ_j Tr[(I − Λ_j) ϱ])
  bool holds = false;             // lhs ≤ rhs + 1e-9
  bool routes_agree = false;      // |chain − Λ̂| ≤ 1e-10
};

UnionBound union_bound_check(const std::vector<Matrix>& lambdas, const DensityMatrix& rho);

// ---------------------------------------------------------------------------

enum class DecoderKind { kSequential, kJointPgm };
const char* to_string(DecoderKind kind);

struct Roles {
  Labels senders;
  Labels receiver;      // B
  Labels eavesdropper;  // E
};

struct CodeSizes {
  std::vector<std::size_t> messages;     // M_z
  std::vector<std::size_t> randomizers;  // L_z
};

// M_z = 2^⌊n R_z⌋, L_z = 2^⌈n D_z⌉ after checking C = D + R within 1e-9.
CodeSizes sizes_from_rates(std::size_t n, const RateTuple& rates, const RateTuple& c,
                           const RateTuple& d);

struct CodeSpec {
  std::size_t n = 1;
  std::size_t z_count = 1;
  std::vector<std::size_t> messages;     // M_z
  std::vector<std::size_t> randomizers;  // L_z
  std::vector<std::size_t> codewords;    // K_z = L_z M_z
  Roles roles;
  FamilyKind family_kind = FamilyKind::kHaar;
  DecoderKind decoder_kind = DecoderKind::kSequential;
  std::uint64_t seed = 0;
  std::vector<UnitaryFamily> families;
  SystemLayout layout;  // ρ^{⊗n}
  Povm fine_decoder;    // over k
  Povm decoder;         // over m: Λ_m = Σ_{k in block m} Λ_k
  double fine_success = 0.0;

  std::size_t message_count() const;
};

CodeSpec build_qmap_code(const DensityMatrix& rho, const Roles& roles, std::size_t n,
                         const CodeSizes& sizes, FamilyKind family, DecoderKind decoder,
                         std::uint64_t seed);

// ---------------------------------------------------------------------------

struct SimulationReport {
  std::string kind;
  std::uint64_t master_seed = 0;
  std::size_t trials = 0;
  bool exact = false;
  std::vector<std::pair<std::string, double>> estimates;
  std::vector<std::pair<std::string, double>> standard_errors;
  std::vector<std::pair<std::string, std::vector<double>>> samples;
  std::vector<std::string> notes;
  std::vector<std::string> violations;

  double estimate(const std::string& name) const;
  const std::vector<double>& sample(const std::string& name) const;
  std::vector<double>& sample_slot(const std::string& name);
  void set_estimate(const std::string& name, double value);
  void set_standard_error(const std::string& name, double value);
  // Means (and standard errors) of every sample series.
  void summarize();
};

// Exact ε and ϑ by enumerating every message tuple when |M| ≤ 4096, else
// `sampled` uniformly drawn tuples with standard errors.
SimulationReport evaluate_code(const CodeSpec& code, const DensityMatrix& rho,
                               std::size_t sampled = 1024);

struct ChainConfig {
  std::size_t n = 1;
  std::vector<std::size_t> randomizers;  // L_z
  std::size_t trials = 1;
  FamilyKind family = FamilyKind::kHaar;
  std::uint64_t seed = 0;
};

// L_z = 2^⌈n D_z⌉
std::vector<std::size_t> randomizer_counts(std::size_t n, const RateTuple& d_rates);

// Successive randomization per sender with per-stage distances
// ‖R_z((ρ^{A_≥z W})^{⊗n}) − π^{A_z^n} ⊗ (ρ^{A_>z W})^{⊗n}‖₁ and the total.
SimulationReport chained_randomization_experiment(const DensityMatrix& rho, const Labels& senders,
                                                  const Labels& w, const ChainConfig& config);

struct EncodingConfig {
  std::size_t n = 1;
  std::vector<std::size_t> codewords;  // K_z
  std::size_t trials = 1;
  FamilyKind family = FamilyKind::kHaar;
  DecoderKind decoder = DecoderKind::kSequential;
  std::uint64_t seed = 0;
};

// Distributed encoding: sample families, build the decoder, record success.
SimulationReport encoding_experiment(const DensityMatrix& rho, const Labels& senders,
                                     const Labels& v, const EncodingConfig& config);

struct TypicalProjector {
  Operator projector;
  std::size_t rank = 0;
  double entropy = 0.0;          // S(ρ), bits
  double mass = 0.0;             // Tr[Π ρ^{⊗n}] from the matrices
  double enumerated_mass = 0.0;  // Σ over typical sequences of Π λ
  double epsilon = 0.0;          // 1 − mass
  double rank_bound = 0.0;       // 2^{n(S+δ)}
  double max_eigenvalue = 0.0;   // of Π ρ^{⊗n} Π
  double operator_bound = 0.0;   // 2^{−n(S−δ)}
  bool mass_ok = false;
  bool rank_ok = false;
  bool operator_ok = false;
};

// Projector onto eigen-sequences whose empirical surprisal lies within δ of S(ρ).
TypicalProjector typical_projector(const DensityMatrix& rho, std::size_t n, double delta);

// Budget in qubits for n-copy experiments: 12 by default, QMAP_BUDGET_QUBITS
// overrides (capped at 14).
double qubit_budget();
// Throws BudgetExceeded when n · log2(dim) exceeds the budget.
void check_budget(std::size_t dim, std::size_t n);

}  // namespace qmap
