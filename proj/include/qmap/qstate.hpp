#pragma once

// Dense linear algebra over labeled multipartite systems.
//
// A SystemLayout is an ordered list of (label, dim) factors. Basis states are
// ordered with the leftmost factor most significant, so the matrix of
// tensor(a, b) is the Kronecker product kron(a, b).

#include <complex>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

namespace qmap {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using Labels = std::vector<std::string>;

inline constexpr double kHermitianTol = 1e-10;
inline constexpr double kPsdTol = 1e-10;
inline constexpr double kTraceTol = 1e-10;
inline constexpr double kUnitaryTol = 1e-10;
// Eigenvalues at or below this contribute nothing to the entropy sum.
inline constexpr double kEntropyCutoff = 1e-12;
// Largest total dimension any state in this library is allowed to have.
inline constexpr std::size_t kMaxDim = 4096;

struct Factor {
  std::string label;
  std::size_t dim = 1;

  friend bool operator==(const Factor&, const Factor&) = default;
};

// Label of the i-th copy (1-based) of a factor in an n-fold tensor power.
std::string copy_label(std::string_view label, std::size_t copy);

class SystemLayout {
 public:
  SystemLayout() = default;
  explicit SystemLayout(std::vector<Factor> factors);

  const std::vector<Factor>& factors() const noexcept { return factors_; }
  std::size_t size() const noexcept { return factors_.size(); }
  bool empty() const noexcept { return factors_.empty(); }
  std::size_t total_dim() const noexcept { return total_dim_; }

  bool contains(std::string_view label) const;
  // Position of a label; throws ValidationError when absent.
  std::size_t index_of(std::string_view label) const;
  std::size_t dim(std::string_view label) const;
  std::size_t dim_of(const Labels& labels) const;
  Labels labels() const;

  // Disjoint union, this layout's factors first.
  SystemLayout concat(const SystemLayout& other) const;
  // n copies, copy-major: A_1 B_1 A_2 B_2 ... for layout (A, B).
  SystemLayout power(std::size_t n) const;
  // Factors named in `keep`, in this layout's order.
  SystemLayout restrict_to(const Labels& keep) const;
  // Same factors in the caller's order; `order` must be a permutation.
  SystemLayout reordered(const Labels& order) const;

  friend bool operator==(const SystemLayout& a, const SystemLayout& b) {
    return a.factors_ == b.factors_;
  }

 private:
  std::vector<Factor> factors_;
  std::size_t total_dim_ = 1;
};

// A plain operator bound to a layout. Used for POVM elements, projectors and
// the intermediate products of decoder constructions.
struct Operator {
  Matrix matrix;
  SystemLayout layout;
};

// Permute tensor factors: output factor j is input factor perm[j].
Matrix permute_factors(const Matrix& m, const std::vector<std::size_t>& dims,
                       const std::vector<std::size_t>& perm);

Operator reorder(const Operator& op, const Labels& order);
// op ⊗ I on the factors of `full` that op does not name, in full's order.
Operator embed(const Operator& op, const SystemLayout& full);
// Partial trace of an arbitrary operator; kept factors keep their order.
Operator partial_trace(const Operator& op, const Labels& keep);

class DensityMatrix {
 public:
  // Full validation: shape, Hermiticity, PSD, unit trace.
  static DensityMatrix from_matrix(Matrix m, SystemLayout layout);
  // Trace in [0, 1 + tol]; flagged so entropy refuses it.
  static DensityMatrix subnormalized(Matrix m, SystemLayout layout);
  // Skips the eigenvalue-based PSD check. For operations that preserve
  // positivity by construction (mixtures, conjugations, partial traces).
  static DensityMatrix assume_valid(Matrix m, SystemLayout layout);

  static DensityMatrix pure(const Vector& psi, SystemLayout layout);
  static DensityMatrix basis(SystemLayout layout, std::size_t index);
  static DensityMatrix maximally_mixed(SystemLayout layout);
  // |Φ⁺⟩ = Σ_i |ii⟩/√d on (a, b).
  static DensityMatrix maximally_entangled(const std::string& a,
                                           const std::string& b,
                                           std::size_t d);

  const Matrix& matrix() const noexcept { return matrix_; }
  const SystemLayout& layout() const noexcept { return layout_; }
  std::size_t dim() const noexcept { return layout_.total_dim(); }
  bool is_subnormalized() const noexcept { return subnormalized_; }
  double trace() const { return matrix_.trace().real(); }
  Operator as_operator() const { return {matrix_, layout_}; }

 private:
  DensityMatrix(Matrix m, SystemLayout layout, bool sub)
      : matrix_(std::move(m)), layout_(std::move(layout)), subnormalized_(sub) {}

  Matrix matrix_;
  SystemLayout layout_;
  bool subnormalized_ = false;
};

class UnitaryMatrix {
 public:
  static UnitaryMatrix from_matrix(Matrix m, SystemLayout layout);
  static UnitaryMatrix identity(SystemLayout layout);

  const Matrix& matrix() const noexcept { return matrix_; }
  const SystemLayout& layout() const noexcept { return layout_; }

 private:
  UnitaryMatrix(Matrix m, SystemLayout layout)
      : matrix_(std::move(m)), layout_(std::move(layout)) {}
  Matrix matrix_;
  SystemLayout layout_;
};

DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b);
DensityMatrix tensor_power(const DensityMatrix& s, std::size_t n);
DensityMatrix partial_trace(const DensityMatrix& s, const Labels& keep);
DensityMatrix reorder(const DensityMatrix& s, const Labels& order);

// Conjugation by u on the factors `on` (matched to u's factors by position)
// and identity elsewhere.
DensityMatrix apply_unitary(const DensityMatrix& s, const UnitaryMatrix& u,
                            const Labels& on);
// Same, acting on the factors named by u's own layout.
DensityMatrix apply_unitary(const DensityMatrix& s, const UnitaryMatrix& u);
// Raw kernel: (U ⊗ I) m (U ⊗ I)† where U acts on the leading d_u
// (most significant) index of m.
Matrix conjugate_leading(const Matrix& m, const Matrix& u);
// Raw kernel: (U ⊗ I) m on the leading index.
Matrix multiply_leading(const Matrix& u, const Matrix& m);

// Hermitian part (M + M†)/2.
Matrix hermitize(const Matrix& m);
// Eigenvalues of the Hermitian part, ascending.
Eigen::VectorXd hermitian_eigenvalues(const Matrix& m);
// Function of a Hermitian PSD operator applied through its eigenbasis.
Matrix hermitian_sqrt(const Matrix& m);

// Von Neumann entropy in bits.
double entropy(const DensityMatrix& s);
// Entropy of the marginal on `labels`; zero for the empty set.
double entropy(const DensityMatrix& s, const Labels& labels);
double conditional_entropy(const DensityMatrix& s, const Labels& a,
                           const Labels& b);
double mutual_information(const DensityMatrix& s, const Labels& a,
                          const Labels& b);
double conditional_mutual_information(const DensityMatrix& s, const Labels& a,
                                      const Labels& b, const Labels& c);

// Sum of singular values.
double trace_norm(const Matrix& x);
// ½‖a − b‖₁.
double trace_distance(const DensityMatrix& a, const DensityMatrix& b);

// Random state of the given rank from a Ginibre matrix, deterministic in seed.
DensityMatrix random_density(const SystemLayout& layout, std::size_t rank,
                             std::uint64_t seed);

}  // namespace qmap
