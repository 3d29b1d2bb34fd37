#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <string>

#include "qmap/error.hpp"
#include "qmap/protocols.hpp"

namespace qmap {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::size_t checked_pow(std::size_t base, std::size_t exp) {
  std::size_t r = 1;
  for (std::size_t i = 0; i < exp; ++i) {
    if (r > kMaxDim * kMaxDim / base) throw BudgetExceeded("family size overflows");
    r *= base;
  }
  return r;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = splitmix64(master);
  for (std::uint64_t c : path) h = splitmix64(h ^ splitmix64(c + 0x632be59bd9b4e019ULL));
  return h;
}

Matrix haar_unitary(std::size_t d, Rng& rng) {
  if (d == 0) throw ValidationError("haar_unitary: dimension must be positive");
  std::normal_distribution<double> g(0.0, std::sqrt(0.5));
  const auto n = static_cast<Eigen::Index>(d);
  Matrix z(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double re = g(rng);
      const double im = g(rng);
      z(i, j) = Complex(re, im);
    }
  }
  Eigen::HouseholderQR<Matrix> qr(z);
  Matrix q = qr.householderQ();
  for (Eigen::Index i = 0; i < n; ++i) {
    const Complex r = qr.matrixQR()(i, i);
    const double a = std::abs(r);
    q.col(i) *= a > 0.0 ? r / a : Complex(1.0, 0.0);
  }
  return q;
}

Matrix random_effect(std::size_t d, Rng& rng) {
  const Matrix v = haar_unitary(d, rng);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::VectorXd u(static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < u.size(); ++i) u(i) = unit(rng);
  return hermitize(v * u.asDiagonal() * v.adjoint());
}

Matrix weyl_operator(std::size_t d, std::size_t a, std::size_t b) {
  if (d == 0) throw ValidationError("weyl_operator: dimension must be positive");
  const auto n = static_cast<Eigen::Index>(d);
  Matrix m = Matrix::Zero(n, n);
  for (std::size_t j = 0; j < d; ++j) {
    const double phase = 2.0 * std::numbers::pi * static_cast<double>((b * j) % d) /
                         static_cast<double>(d);
    m(static_cast<Eigen::Index>((j + a) % d), static_cast<Eigen::Index>(j)) =
        std::polar(1.0, phase);
  }
  return m;
}

const char* to_string(FamilyKind kind) {
  return kind == FamilyKind::kHaar ? "haar" : "pauli";
}

Matrix UnitaryFamily::block(std::size_t k) const {
  const auto& fs = per_index.at(k);
  Matrix out = Matrix::Identity(1, 1);
  for (const Matrix& f : fs) out = Eigen::kroneckerProduct(out, f).eval();
  return out;
}

UnitaryFamily sample_family(std::size_t sender, std::size_t n, std::size_t count, std::size_t dim,
                            std::uint64_t master_seed) {
  if (count == 0 || n == 0) throw ValidationError("sample_family: K and n must be positive");
  checked_pow(dim, n);
  UnitaryFamily fam;
  fam.sender = sender;
  fam.n = n;
  fam.dim = dim;
  fam.kind = FamilyKind::kHaar;
  fam.seed = master_seed;
  fam.per_index.resize(count);
  for (std::size_t k = 0; k < count; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      Rng rng(derive_seed(master_seed, {sender, k, i}));
      fam.per_index[k].push_back(haar_unitary(dim, rng));
    }
  }
  return fam;
}

UnitaryFamily weyl_family(std::size_t sender, std::size_t n, std::size_t count, std::size_t dim) {
  if (count == 0 || n == 0) throw ValidationError("weyl_family: K and n must be positive");
  const std::size_t full = checked_pow(dim * dim, n);
  if (count > full) {
    throw ValidationError("weyl_family: at most " + std::to_string(full) +
                          " distinct Weyl products for this dimension");
  }
  UnitaryFamily fam;
  fam.sender = sender;
  fam.n = n;
  fam.dim = dim;
  fam.kind = FamilyKind::kWeyl;
  fam.per_index.resize(count);
  for (std::size_t k = 0; k < count; ++k) {
    std::vector<std::size_t> digits(n);
    std::size_t rest = k;
    for (std::size_t i = n; i-- > 0;) {
      digits[i] = rest % (dim * dim);
      rest /= dim * dim;
    }
    for (std::size_t p : digits) fam.per_index[k].push_back(weyl_operator(dim, p / dim, p % dim));
  }
  return fam;
}

UnitaryFamily make_family(FamilyKind kind, std::size_t sender, std::size_t n, std::size_t count,
                          std::size_t dim, std::uint64_t master_seed) {
  if (kind == FamilyKind::kWeyl) return weyl_family(sender, n, count, dim);
  return sample_family(sender, n, count, dim, master_seed);
}

Labels copies_of(const std::string& label, std::size_t n) {
  Labels out;
  for (std::size_t i = 1; i <= n; ++i) out.push_back(copy_label(label, i));
  return out;
}

Labels copies_of(const Labels& labels, std::size_t n) {
  Labels out;
  for (std::size_t i = 1; i <= n; ++i) {
    for (const auto& l : labels) out.push_back(copy_label(l, i));
  }
  return out;
}

Operator apply_mixture(const Operator& x, const Labels& on, const std::vector<Matrix>& us) {
  if (us.empty()) throw ValidationError("apply_mixture: empty unitary list");
  const std::size_t d = x.layout.dim_of(on);
  Labels order = on;
  for (const auto& l : x.layout.labels()) {
    if (std::find(on.begin(), on.end(), l) == on.end()) order.push_back(l);
  }
  Operator y = reorder(x, order);
  Matrix acc = Matrix::Zero(y.matrix.rows(), y.matrix.cols());
  for (const Matrix& u : us) {
    if (static_cast<std::size_t>(u.rows()) != d || u.rows() != u.cols()) {
      throw ValidationError("apply_mixture: unitary dimension does not match its factors");
    }
    acc += conjugate_leading(y.matrix, u);
  }
  acc /= static_cast<double>(us.size());
  return reorder(Operator{std::move(acc), y.layout}, x.layout.labels());
}

double qubit_budget() {
  double budget = 12.0;
  if (const char* env = std::getenv("QMAP_BUDGET_QUBITS")) {
    char* end = nullptr;
    const double v = std::strtod(env, &end);
    if (end != env && std::isfinite(v) && v > 0.0) budget = std::min(v, 14.0);
  }
  return budget;
}

void check_budget(std::size_t dim, std::size_t n) {
  const double q = static_cast<double>(n) * std::log2(static_cast<double>(dim));
  if (q > qubit_budget() + 1e-9) {
    throw BudgetExceeded("n-copy system needs " + std::to_string(q) + " qubits, budget is " +
                         std::to_string(qubit_budget()));
  }
}

}  // namespace qmap
