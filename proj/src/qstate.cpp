#include "qmap/qstate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "qmap/error.hpp"

namespace qmap {

namespace {

double max_abs_entry(const Matrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

void require_square(const Matrix& m, const SystemLayout& layout,
                    const char* what) {
  if (m.rows() != m.cols() ||
      static_cast<std::size_t>(m.rows()) != layout.total_dim()) {
    throw ValidationError(std::string(what) + ": matrix is " +
                          std::to_string(m.rows()) + "x" +
                          std::to_string(m.cols()) + " but layout dimension is " +
                          std::to_string(layout.total_dim()));
  }
}

void require_disjoint(const Labels& a, const Labels& b, const char* what) {
  for (const auto& x : a) {
    if (std::find(b.begin(), b.end(), x) != b.end()) {
      throw ValidationError(std::string(what) + ": label '" + x +
                            "' appears in more than one set");
    }
  }
}

Labels merge(const Labels& a, const Labels& b) {
  Labels out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

}  // namespace

std::string copy_label(std::string_view label, std::size_t copy) {
  return std::string(label) + "_" + std::to_string(copy);
}

// ---------------------------------------------------------------------------
// SystemLayout

SystemLayout::SystemLayout(std::vector<Factor> factors)
    : factors_(std::move(factors)) {
  std::set<std::string> seen;
  total_dim_ = 1;
  for (const auto& f : factors_) {
    if (f.label.empty()) throw ValidationError("empty factor label");
    if (f.dim < 1) {
      throw ValidationError("factor '" + f.label + "' has dimension 0");
    }
    if (!seen.insert(f.label).second) {
      throw ValidationError("duplicate factor label '" + f.label + "'");
    }
    if (total_dim_ > kMaxDim * kMaxDim / f.dim) {
      throw BudgetExceeded("layout dimension overflows");
    }
    total_dim_ *= f.dim;
  }
}

bool SystemLayout::contains(std::string_view label) const {
  return std::any_of(factors_.begin(), factors_.end(),
                     [&](const Factor& f) { return f.label == label; });
}

std::size_t SystemLayout::index_of(std::string_view label) const {
  for (std::size_t i = 0; i < factors_.size(); ++i) {
    if (factors_[i].label == label) return i;
  }
  throw ValidationError("unknown label '" + std::string(label) + "'");
}

std::size_t SystemLayout::dim(std::string_view label) const {
  return factors_[index_of(label)].dim;
}

std::size_t SystemLayout::dim_of(const Labels& labels) const {
  std::size_t d = 1;
  for (const auto& l : labels) d *= dim(l);
  return d;
}

Labels SystemLayout::labels() const {
  Labels out;
  out.reserve(factors_.size());
  for (const auto& f : factors_) out.push_back(f.label);
  return out;
}

SystemLayout SystemLayout::concat(const SystemLayout& other) const {
  std::vector<Factor> all = factors_;
  for (const auto& f : other.factors_) {
    if (contains(f.label)) {
      throw ValidationError("label collision on '" + f.label + "'");
    }
    all.push_back(f);
  }
  return SystemLayout(std::move(all));
}

SystemLayout SystemLayout::power(std::size_t n) const {
  std::vector<Factor> all;
  all.reserve(factors_.size() * n);
  for (std::size_t i = 1; i <= n; ++i) {
    for (const auto& f : factors_) all.push_back({copy_label(f.label, i), f.dim});
  }
  return SystemLayout(std::move(all));
}

SystemLayout SystemLayout::restrict_to(const Labels& keep) const {
  for (const auto& l : keep) (void)index_of(l);
  std::vector<Factor> out;
  for (const auto& f : factors_) {
    if (std::find(keep.begin(), keep.end(), f.label) != keep.end()) {
      out.push_back(f);
    }
  }
  return SystemLayout(std::move(out));
}

SystemLayout SystemLayout::reordered(const Labels& order) const {
  if (order.size() != factors_.size()) {
    throw ValidationError("reorder needs every label exactly once");
  }
  std::vector<Factor> out;
  out.reserve(order.size());
  for (const auto& l : order) out.push_back(factors_[index_of(l)]);
  return SystemLayout(std::move(out));
}

// ---------------------------------------------------------------------------
// Factor permutation and partial trace kernels

Matrix permute_factors(const Matrix& m, const std::vector<std::size_t>& dims,
                       const std::vector<std::size_t>& perm) {
  const std::size_t k = dims.size();
  const std::size_t total = static_cast<std::size_t>(m.rows());
  bool identity = true;
  for (std::size_t j = 0; j < k; ++j) identity = identity && perm[j] == j;
  if (identity) return m;

  // Row-major strides of the input factors.
  std::vector<std::size_t> in_stride(k, 1);
  for (std::size_t j = k; j-- > 1;) in_stride[j - 1] = in_stride[j] * dims[j];

  std::vector<std::size_t> map(total);
  std::vector<std::size_t> digit(k, 0);
  for (std::size_t out = 0; out < total; ++out) {
    std::size_t in = 0;
    for (std::size_t j = 0; j < k; ++j) in += digit[j] * in_stride[perm[j]];
    map[out] = in;
    // Increment the mixed-radix counter over output dims.
    for (std::size_t j = k; j-- > 0;) {
      if (++digit[j] < dims[perm[j]]) break;
      digit[j] = 0;
    }
  }
  Matrix out(m.rows(), m.cols());
  for (std::size_t c = 0; c < total; ++c) {
    for (std::size_t r = 0; r < total; ++r) {
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          m(static_cast<Eigen::Index>(map[r]), static_cast<Eigen::Index>(map[c]));
    }
  }
  return out;
}

namespace {

std::vector<std::size_t> dims_of(const SystemLayout& l) {
  std::vector<std::size_t> d;
  for (const auto& f : l.factors()) d.push_back(f.dim);
  return d;
}

}  // namespace

Operator reorder(const Operator& op, const Labels& order) {
  SystemLayout target = op.layout.reordered(order);
  std::vector<std::size_t> perm;
  perm.reserve(order.size());
  for (const auto& l : order) perm.push_back(op.layout.index_of(l));
  return {permute_factors(op.matrix, dims_of(op.layout), perm), target};
}

Operator embed(const Operator& op, const SystemLayout& full) {
  Labels rest;
  for (const auto& f : full.factors()) {
    if (!op.layout.contains(f.label)) rest.push_back(f.label);
  }
  for (const auto& f : op.layout.factors()) {
    if (full.dim(f.label) != f.dim) {
      throw ValidationError("embed: dimension mismatch on '" + f.label + "'");
    }
  }
  const auto drest = static_cast<Eigen::Index>(full.dim_of(rest));
  Matrix big = Eigen::kroneckerProduct(op.matrix, Matrix::Identity(drest, drest))
                   .eval();
  SystemLayout joined = op.layout.concat(full.restrict_to(rest));
  return reorder(Operator{std::move(big), std::move(joined)}, full.labels());
}

Operator partial_trace(const Operator& op, const Labels& keep) {
  for (const auto& l : keep) (void)op.layout.index_of(l);
  Labels kept_order;
  Labels traced;
  for (const auto& f : op.layout.factors()) {
    if (std::find(keep.begin(), keep.end(), f.label) != keep.end()) {
      kept_order.push_back(f.label);
    } else {
      traced.push_back(f.label);
    }
  }
  const std::size_t dk = op.layout.dim_of(kept_order);
  const std::size_t dt = op.layout.dim_of(traced);
  Operator perm = reorder(op, merge(kept_order, traced));
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(dk),
                            static_cast<Eigen::Index>(dk));
  for (std::size_t j = 0; j < dk; ++j) {
    for (std::size_t i = 0; i < dk; ++i) {
      Complex acc = 0.0;
      for (std::size_t t = 0; t < dt; ++t) {
        acc += perm.matrix(static_cast<Eigen::Index>(i * dt + t),
                           static_cast<Eigen::Index>(j * dt + t));
      }
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = acc;
    }
  }
  return {std::move(out), op.layout.restrict_to(kept_order)};
}

// ---------------------------------------------------------------------------
// DensityMatrix / UnitaryMatrix

Matrix hermitize(const Matrix& m) { return (m + m.adjoint()) / 2.0; }

Eigen::VectorXd hermitian_eigenvalues(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

Matrix hermitian_sqrt(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(m));
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

DensityMatrix DensityMatrix::from_matrix(Matrix m, SystemLayout layout) {
  require_square(m, layout, "density matrix");
  if (max_abs_entry(m - m.adjoint()) > kHermitianTol) {
    throw ValidationError("density matrix is not Hermitian");
  }
  const double tr = m.trace().real();
  if (std::abs(tr - 1.0) > kTraceTol) {
    throw ValidationError("density matrix trace is " + std::to_string(tr));
  }
  if (m.rows() > 0 && hermitian_eigenvalues(m).minCoeff() < -kPsdTol) {
    throw ValidationError("density matrix is not positive semidefinite");
  }
  return DensityMatrix(std::move(m), std::move(layout), false);
}

DensityMatrix DensityMatrix::subnormalized(Matrix m, SystemLayout layout) {
  require_square(m, layout, "subnormalized state");
  if (max_abs_entry(m - m.adjoint()) > kHermitianTol) {
    throw ValidationError("subnormalized state is not Hermitian");
  }
  const double tr = m.trace().real();
  if (tr < -kTraceTol || tr > 1.0 + kTraceTol) {
    throw ValidationError("subnormalized state trace out of [0, 1]");
  }
  if (m.rows() > 0 && hermitian_eigenvalues(m).minCoeff() < -kPsdTol) {
    throw ValidationError("subnormalized state is not positive semidefinite");
  }
  return DensityMatrix(std::move(m), std::move(layout), true);
}

DensityMatrix DensityMatrix::assume_valid(Matrix m, SystemLayout layout) {
  require_square(m, layout, "density matrix");
  const double tr = m.trace().real();
  if (std::abs(tr - 1.0) > 1e-8) {
    throw InvariantViolation("state lost normalization: trace " +
                             std::to_string(tr));
  }
  return DensityMatrix(hermitize(m), std::move(layout), false);
}

DensityMatrix DensityMatrix::pure(const Vector& psi, SystemLayout layout) {
  if (static_cast<std::size_t>(psi.size()) != layout.total_dim()) {
    throw ValidationError("state vector length does not match layout");
  }
  const double norm = psi.norm();
  if (norm == 0.0) throw ValidationError("zero state vector");
  Vector v = psi / norm;
  return DensityMatrix(v * v.adjoint(), std::move(layout), false);
}

DensityMatrix DensityMatrix::basis(SystemLayout layout, std::size_t index) {
  if (index >= layout.total_dim()) throw ValidationError("basis index out of range");
  Vector v = Vector::Zero(static_cast<Eigen::Index>(layout.total_dim()));
  v(static_cast<Eigen::Index>(index)) = 1.0;
  return pure(v, std::move(layout));
}

DensityMatrix DensityMatrix::maximally_mixed(SystemLayout layout) {
  const auto d = static_cast<Eigen::Index>(layout.total_dim());
  return DensityMatrix(Matrix::Identity(d, d) / static_cast<double>(d),
                       std::move(layout), false);
}

DensityMatrix DensityMatrix::maximally_entangled(const std::string& a,
                                                 const std::string& b,
                                                 std::size_t d) {
  SystemLayout layout({{a, d}, {b, d}});
  Vector v = Vector::Zero(static_cast<Eigen::Index>(d * d));
  for (std::size_t i = 0; i < d; ++i) v(static_cast<Eigen::Index>(i * d + i)) = 1.0;
  return pure(v, std::move(layout));
}

UnitaryMatrix UnitaryMatrix::from_matrix(Matrix m, SystemLayout layout) {
  require_square(m, layout, "unitary");
  const auto d = m.rows();
  if (max_abs_entry(m.adjoint() * m - Matrix::Identity(d, d)) > kUnitaryTol) {
    throw ValidationError("matrix is not unitary");
  }
  return UnitaryMatrix(std::move(m), std::move(layout));
}

UnitaryMatrix UnitaryMatrix::identity(SystemLayout layout) {
  const auto d = static_cast<Eigen::Index>(layout.total_dim());
  return UnitaryMatrix(Matrix::Identity(d, d), std::move(layout));
}

// ---------------------------------------------------------------------------
// Operations

DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b) {
  SystemLayout joined = a.layout().concat(b.layout());
  if (joined.total_dim() > kMaxDim) {
    throw BudgetExceeded("tensor product exceeds dimension " +
                         std::to_string(kMaxDim));
  }
  Matrix k = Eigen::kroneckerProduct(a.matrix(), b.matrix()).eval();
  if (a.is_subnormalized() || b.is_subnormalized()) {
    return DensityMatrix::subnormalized(std::move(k), std::move(joined));
  }
  return DensityMatrix::assume_valid(std::move(k), std::move(joined));
}

DensityMatrix tensor_power(const DensityMatrix& s, std::size_t n) {
  if (n == 0) throw ValidationError("tensor power needs n >= 1");
  SystemLayout target = s.layout().power(n);
  if (target.total_dim() > kMaxDim) {
    throw BudgetExceeded("tensor power exceeds dimension " + std::to_string(kMaxDim));
  }
  Matrix m = s.matrix();
  for (std::size_t i = 1; i < n; ++i) {
    m = Eigen::kroneckerProduct(m, s.matrix()).eval();
  }
  return DensityMatrix::assume_valid(std::move(m), std::move(target));
}

DensityMatrix partial_trace(const DensityMatrix& s, const Labels& keep) {
  Operator r = partial_trace(s.as_operator(), keep);
  if (s.is_subnormalized()) {
    return DensityMatrix::subnormalized(std::move(r.matrix), std::move(r.layout));
  }
  return DensityMatrix::assume_valid(std::move(r.matrix), std::move(r.layout));
}

DensityMatrix reorder(const DensityMatrix& s, const Labels& order) {
  Operator r = reorder(s.as_operator(), order);
  return DensityMatrix::assume_valid(std::move(r.matrix), std::move(r.layout));
}

Matrix multiply_leading(const Matrix& u, const Matrix& m) {
  const Eigen::Index du = u.rows();
  const Eigen::Index dr = m.rows() / du;
  Matrix out = Matrix::Zero(m.rows(), m.cols());
  for (Eigen::Index a = 0; a < du; ++a) {
    for (Eigen::Index b = 0; b < du; ++b) {
      const Complex c = u(a, b);
      if (c == Complex(0.0, 0.0)) continue;
      out.middleRows(a * dr, dr) += c * m.middleRows(b * dr, dr);
    }
  }
  return out;
}

Matrix conjugate_leading(const Matrix& m, const Matrix& u) {
  const Eigen::Index du = u.rows();
  const Eigen::Index dr = m.rows() / du;
  Matrix left = multiply_leading(u, m);
  Matrix out = Matrix::Zero(m.rows(), m.cols());
  for (Eigen::Index a = 0; a < du; ++a) {
    for (Eigen::Index b = 0; b < du; ++b) {
      const Complex c = std::conj(u(a, b));
      if (c == Complex(0.0, 0.0)) continue;
      out.middleCols(a * dr, dr) += c * left.middleCols(b * dr, dr);
    }
  }
  return out;
}

DensityMatrix apply_unitary(const DensityMatrix& s, const UnitaryMatrix& u,
                            const Labels& on) {
  const auto& uf = u.layout().factors();
  if (on.size() != uf.size()) {
    throw ValidationError("apply_unitary: unitary has " + std::to_string(uf.size()) +
                          " factors but " + std::to_string(on.size()) +
                          " target labels given");
  }
  for (std::size_t i = 0; i < on.size(); ++i) {
    if (s.layout().dim(on[i]) != uf[i].dim) {
      throw ValidationError("apply_unitary: dimension mismatch on '" + on[i] + "'");
    }
  }
  Labels rest;
  for (const auto& f : s.layout().factors()) {
    if (std::find(on.begin(), on.end(), f.label) == on.end()) rest.push_back(f.label);
  }
  const Labels original = s.layout().labels();
  Operator front = reorder(s.as_operator(), merge(on, rest));
  front.matrix = conjugate_leading(front.matrix, u.matrix());
  Operator back = reorder(front, original);
  if (s.is_subnormalized()) {
    return DensityMatrix::subnormalized(std::move(back.matrix), std::move(back.layout));
  }
  return DensityMatrix::assume_valid(std::move(back.matrix), std::move(back.layout));
}

DensityMatrix apply_unitary(const DensityMatrix& s, const UnitaryMatrix& u) {
  return apply_unitary(s, u, u.layout().labels());
}

double entropy(const DensityMatrix& s) {
  if (s.is_subnormalized()) {
    throw ValidationError("entropy is undefined for a subnormalized state");
  }
  if (s.dim() == 1) return 0.0;
  const Eigen::VectorXd ev = hermitian_eigenvalues(s.matrix());
  double h = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    double lambda = ev(i);
    if (lambda < -kPsdTol) {
      throw ValidationError("entropy: eigenvalue " + std::to_string(lambda) +
                            " below tolerance");
    }
    if (lambda <= kEntropyCutoff) continue;
    h -= lambda * std::log2(lambda);
  }
  return h;
}

double entropy(const DensityMatrix& s, const Labels& labels) {
  if (labels.empty()) return 0.0;
  return entropy(partial_trace(s, labels));
}

double conditional_entropy(const DensityMatrix& s, const Labels& a,
                           const Labels& b) {
  require_disjoint(a, b, "conditional_entropy");
  return entropy(s, merge(a, b)) - entropy(s, b);
}

double mutual_information(const DensityMatrix& s, const Labels& a,
                          const Labels& b) {
  require_disjoint(a, b, "mutual_information");
  return entropy(s, a) + entropy(s, b) - entropy(s, merge(a, b));
}

double conditional_mutual_information(const DensityMatrix& s, const Labels& a,
                                      const Labels& b, const Labels& c) {
  require_disjoint(a, b, "conditional_mutual_information");
  require_disjoint(a, c, "conditional_mutual_information");
  require_disjoint(b, c, "conditional_mutual_information");
  // S(A|C) − S(A|BC)
  return entropy(s, merge(a, c)) - entropy(s, c) - entropy(s, merge(merge(a, b), c)) +
         entropy(s, merge(b, c));
}

double trace_norm(const Matrix& x) {
  if (x.rows() != x.cols()) throw ValidationError("trace_norm needs a square matrix");
  if (x.size() == 0) return 0.0;
  const double scale = std::max(1.0, max_abs_entry(x));
  if (max_abs_entry(x - x.adjoint()) <= 1e-13 * scale) {
    return hermitian_eigenvalues(x).cwiseAbs().sum();
  }
  Eigen::BDCSVD<Matrix> svd(x);
  return svd.singularValues().sum();
}

double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
  if (a.dim() != b.dim()) throw ValidationError("trace_distance: dimension mismatch");
  return 0.5 * trace_norm(a.matrix() - b.matrix());
}

DensityMatrix random_density(const SystemLayout& layout, std::size_t rank,
                             std::uint64_t seed) {
  const std::size_t d = layout.total_dim();
  if (rank < 1 || rank > d) {
    throw ValidationError("random_density: rank " + std::to_string(rank) +
                          " outside [1, " + std::to_string(d) + "]");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(rank));
  for (Eigen::Index j = 0; j < g.cols(); ++j) {
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
      const double re = normal(rng);
      const double im = normal(rng);
      g(i, j) = Complex(re, im);
    }
  }
  Matrix rho = g * g.adjoint();
  rho /= rho.trace().real();
  return DensityMatrix::assume_valid(hermitize(rho), layout);
}

}  // namespace qmap
