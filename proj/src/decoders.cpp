#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <set>
#include <string>

#include "protocols_detail.hpp"
#include "qmap/error.hpp"
#include "qmap/protocols.hpp"

namespace qmap {

namespace detail {

Labels join(const Labels& a, const Labels& b) {
  Labels out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

void check_labels(const SystemLayout& layout, const Labels& labels, const char* what) {
  std::set<std::string> seen;
  for (const auto& l : labels) {
    if (!layout.contains(l)) {
      throw ValidationError(std::string(what) + ": unknown system '" + l + "'");
    }
    if (!seen.insert(l).second) {
      throw ValidationError(std::string(what) + ": system '" + l + "' listed twice");
    }
  }
}

void check_families(const DensityMatrix& rho, const Labels& senders, std::size_t n,
                    const std::vector<UnitaryFamily>& families) {
  if (n == 0) throw ValidationError("n must be positive");
  if (families.size() != senders.size()) {
    throw ValidationError("need one unitary family per sender");
  }
  for (std::size_t z = 0; z < senders.size(); ++z) {
    const auto& f = families[z];
    if (f.dim != rho.layout().dim(senders[z]) || f.n != n || f.size() == 0) {
      throw ValidationError("family " + std::to_string(z + 1) +
                            " does not match sender factor " + senders[z]);
    }
  }
}

std::vector<Matrix> blocks_of(const UnitaryFamily& family) {
  std::vector<Matrix> out;
  out.reserve(family.size());
  for (std::size_t k = 0; k < family.size(); ++k) out.push_back(family.block(k));
  return out;
}

double trace_product(const Matrix& a, const Matrix& b) {
  return a.cwiseProduct(b.transpose()).sum().real();
}

double max_abs(const Matrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

}  // namespace detail

using detail::trace_product;

double Povm::completeness_residual() const {
  if (elements.empty()) return 1.0;
  Matrix sum = Matrix::Zero(elements[0].rows(), elements[0].cols());
  for (const auto& e : elements) sum += e;
  sum -= Matrix::Identity(sum.rows(), sum.cols());
  return detail::max_abs(sum);
}

Povm pgm_decoder(const std::vector<Matrix>& states, const std::vector<double>& priors) {
  if (states.empty()) throw ValidationError("pgm_decoder: no states");
  if (priors.size() != states.size()) throw ValidationError("pgm_decoder: priors/states mismatch");
  const Eigen::Index d = states[0].rows();
  double psum = 0.0;
  for (std::size_t k = 0; k < states.size(); ++k) {
    if (states[k].rows() != d || states[k].cols() != d) {
      throw ValidationError("pgm_decoder: states have different dimensions");
    }
    if (!(priors[k] >= 0.0)) throw ValidationError("pgm_decoder: negative prior");
    psum += priors[k];
  }
  if (std::abs(psum - 1.0) > 1e-9) throw ValidationError("pgm_decoder: priors do not sum to 1");

  Matrix avg = Matrix::Zero(d, d);
  for (std::size_t k = 0; k < states.size(); ++k) avg += priors[k] * states[k];
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(avg));
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double lmax = ev.maxCoeff();
  if (!(lmax > 0.0)) throw ValidationError("pgm_decoder: average state is zero");
  const double cutoff = 1e-10 * lmax;
  Eigen::VectorXd inv_sqrt(d);
  Eigen::VectorXd null(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    inv_sqrt(i) = ev(i) > cutoff ? 1.0 / std::sqrt(ev(i)) : 0.0;
    null(i) = ev(i) > cutoff ? 0.0 : 1.0;
  }
  const Matrix& v = es.eigenvectors();
  const Matrix s = v * inv_sqrt.asDiagonal() * v.adjoint();
  const Matrix p0 = v * null.asDiagonal() * v.adjoint() / static_cast<double>(states.size());

  Povm povm;
  povm.elements.reserve(states.size());
  for (std::size_t k = 0; k < states.size(); ++k) {
    povm.elements.push_back(hermitize(s * (priors[k] * states[k]) * s) + p0);
  }
  return povm;
}

Povm pgm_decoder(const std::vector<DensityMatrix>& states, const std::vector<double>& priors) {
  std::vector<Matrix> ms;
  ms.reserve(states.size());
  for (const auto& s : states) ms.push_back(s.matrix());
  return pgm_decoder(ms, priors);
}

double success_probability(const Povm& povm, const std::vector<Matrix>& states,
                           const std::vector<double>& priors) {
  if (povm.size() != states.size() || priors.size() != states.size()) {
    throw ValidationError("success_probability: size mismatch");
  }
  double p = 0.0;
  for (std::size_t k = 0; k < states.size(); ++k) {
    p += priors[k] * trace_product(povm.elements[k], states[k]);
  }
  return p;
}

namespace {

struct Setup {
  DensityMatrix rn;
  std::vector<std::vector<Matrix>> blocks;
  std::vector<std::size_t> counts;
  std::size_t total = 1;
};

Setup prepare(const DensityMatrix& rho, const Labels& senders, const Labels& v, std::size_t n,
              const std::vector<UnitaryFamily>& families) {
  detail::check_labels(rho.layout(), detail::join(senders, v), "decoder");
  detail::check_families(rho, senders, n, families);
  DensityMatrix marg = partial_trace(rho, detail::join(senders, v));
  check_budget(marg.dim(), n);
  Setup s{tensor_power(marg, n), {}, {}, 1};
  for (const auto& f : families) {
    s.blocks.push_back(detail::blocks_of(f));
    s.counts.push_back(f.size());
    s.total *= f.size();
  }
  // Every decoder keeps one D×D element per k.
  const double bytes = static_cast<double>(s.total) * static_cast<double>(s.rn.dim()) *
                       static_cast<double>(s.rn.dim()) * 16.0;
  if (bytes > 2.0e9) throw BudgetExceeded("decoder would need more than 2 GB of POVM elements");
  return s;
}

// ρ_k = Ũ_k ρ^{⊗n} Ũ_k† (or Ũ_k X Ũ_k† for any operator X on the same layout).
Matrix encode(const Matrix& x, const SystemLayout& layout, const Labels& senders, std::size_t n,
              const Setup& s, std::size_t k) {
  Operator op{x, layout};
  std::size_t rest = k;
  std::vector<std::size_t> digits(senders.size());
  for (std::size_t z = senders.size(); z-- > 0;) {
    digits[z] = rest % s.counts[z];
    rest /= s.counts[z];
  }
  for (std::size_t z = 0; z < senders.size(); ++z) {
    op = apply_mixture(op, copies_of(senders[z], n), {s.blocks[z][digits[z]]});
  }
  return op.matrix;
}

double average_success(const SequentialDecoder& dec, const Setup& s, const Labels& senders,
                       std::size_t n) {
  double total = 0.0;
  for (std::size_t k = 0; k < s.total; ++k) {
    total += trace_product(dec.povm.elements[k],
                           encode(s.rn.matrix(), s.rn.layout(), senders, n, s, k));
  }
  return total / static_cast<double>(s.total);
}

void finish(SequentialDecoder& dec) {
  dec.residual = dec.povm.completeness_residual();
  if (dec.residual > 1e-8) {
    throw InvariantViolation("decoder is not complete: max |Σ Λ − I| = " +
                             std::to_string(dec.residual));
  }
}

}  // namespace

SequentialDecoder sequential_decoder(const DensityMatrix& rho, const Labels& senders,
                                     const Labels& v, std::size_t n,
                                     const std::vector<UnitaryFamily>& families) {
  const Setup s = prepare(rho, senders, v, n, families);
  const SystemLayout& full = s.rn.layout();
  const auto dim = static_cast<Eigen::Index>(full.total_dim());
  const std::size_t z_count = senders.size();

  SequentialDecoder dec;
  dec.layout = full;
  dec.counts = s.counts;

  // ups[z][k] = {Υ², Υ√(I − Υ²)} embedded in the full space.
  std::vector<std::vector<std::array<Matrix, 2>>> ups(z_count);
  for (std::size_t z = 0; z < z_count; ++z) {
    Labels stage(senders.begin(), senders.begin() + static_cast<std::ptrdiff_t>(z + 1));
    stage = detail::join(stage, v);
    const DensityMatrix st = partial_trace(s.rn, copies_of(stage, n));
    const Labels on = copies_of(senders[z], n);
    const std::size_t kz = s.counts[z];

    std::vector<Matrix> states;
    states.reserve(kz);
    for (std::size_t k = 0; k < kz; ++k) {
      states.push_back(apply_mixture(st.as_operator(), on, {s.blocks[z][k]}).matrix);
    }
    const std::vector<double> priors(kz, 1.0 / static_cast<double>(kz));
    const Povm stage_povm = pgm_decoder(states, priors);
    dec.stage_success.push_back(success_probability(stage_povm, states, priors));

    const auto sd = static_cast<Eigen::Index>(st.dim());
    for (std::size_t k = 0; k < kz; ++k) {
      // Υ = U† √Λ U
      const Operator root{hermitian_sqrt(stage_povm.elements[k]), st.layout()};
      const Matrix y =
          hermitize(apply_mixture(root, on, {s.blocks[z][k].adjoint()}).matrix);
      const Matrix y2 = hermitize(y * y);
      const Matrix y1 = y * hermitian_sqrt(Matrix::Identity(sd, sd) - y2);
      ups[z].push_back({embed(Operator{y2, st.layout()}, full).matrix,
                        embed(Operator{y1, st.layout()}, full).matrix});
    }
  }

  // G_k = Σ_x (Υ^x)† Υ^x with Υ^x = Υ_Z^(x_Z) ⋯ Υ_1^(x_1), built from the last
  // stage inwards so suffixes are shared.
  dec.povm.elements.assign(s.total, Matrix());
  const std::function<void(std::size_t, const Matrix&, std::size_t, std::size_t)> descend =
      [&](std::size_t z, const Matrix& h, std::size_t suffix, std::size_t stride) {
        for (std::size_t k = 0; k < s.counts[z]; ++k) {
          Matrix next = Matrix::Zero(dim, dim);
          for (const Matrix& y : ups[z][k]) next.noalias() += y.adjoint() * h * y;
          const std::size_t index = k * stride + suffix;
          if (z == 0) {
            dec.povm.elements[index] = encode(hermitize(next), full, senders, n, s, index);
          } else {
            descend(z - 1, next, index, stride * s.counts[z]);
          }
        }
      };
  descend(z_count - 1, Matrix::Identity(dim, dim), 0, 1);

  dec.success = average_success(dec, s, senders, n);
  finish(dec);
  return dec;
}

SequentialDecoder joint_pgm_decoder(const DensityMatrix& rho, const Labels& senders,
                                    const Labels& v, std::size_t n,
                                    const std::vector<UnitaryFamily>& families) {
  const Setup s = prepare(rho, senders, v, n, families);
  std::vector<Matrix> states;
  states.reserve(s.total);
  for (std::size_t k = 0; k < s.total; ++k) {
    states.push_back(encode(s.rn.matrix(), s.rn.layout(), senders, n, s, k));
  }
  const std::vector<double> priors(s.total, 1.0 / static_cast<double>(s.total));
  SequentialDecoder dec;
  dec.layout = s.rn.layout();
  dec.counts = s.counts;
  dec.povm = pgm_decoder(states, priors);
  dec.success = success_probability(dec.povm, states, priors);
  dec.stage_success.push_back(dec.success);
  finish(dec);
  return dec;
}

UnionBound union_bound_check(const std::vector<Matrix>& lambdas, const DensityMatrix& rho) {
  if (lambdas.empty()) throw ValidationError("union_bound_check: no operators");
  if (lambdas.size() > 16) throw BudgetExceeded("union_bound_check: at most 16 operators");
  const auto d = static_cast<Eigen::Index>(rho.dim());
  const Matrix id = Matrix::Identity(d, d);
  std::vector<std::array<Matrix, 2>> parts;
  for (std::size_t j = 0; j < lambdas.size(); ++j) {
    const Matrix& l = lambdas[j];
    if (l.rows() != d || l.cols() != d) {
      throw ValidationError("union_bound_check: operator " + std::to_string(j + 1) +
                            " has the wrong dimension");
    }
    if (detail::max_abs(l - l.adjoint()) > kHermitianTol) {
      throw ValidationError("union_bound_check: operator " + std::to_string(j + 1) +
                            " is not Hermitian");
    }
    const Eigen::VectorXd ev = hermitian_eigenvalues(l);
    if (ev.minCoeff() < -1e-10 || ev.maxCoeff() > 1.0 + 1e-10) {
      throw ValidationError("union_bound_check: operator " + std::to_string(j + 1) +
                            " is outside [0, I]");
    }
    parts.push_back({l, hermitian_sqrt(l) * hermitian_sqrt(id - l)});
  }
  const Matrix& r = rho.matrix();

  UnionBound out;
  out.trace = rho.trace();

  // Λ̂ = Σ_x L_x† L_x with L_x = Λ_J^(x_J) ⋯ Λ_1^(x_1).
  const std::size_t j_count = lambdas.size();
  Matrix lambda_hat = Matrix::Zero(d, d);
  for (std::size_t x = 0; x < (std::size_t{1} << j_count); ++x) {
    Matrix lx = id;
    for (std::size_t j = 0; j < j_count; ++j) lx = parts[j][(x >> j) & 1u] * lx;
    lambda_hat.noalias() += lx.adjoint() * lx;
  }
  out.lambda_hat_value = trace_product(lambda_hat, r);

  // Π̂ as a stacked map S → S ⊗ M_1 ⊗ ⋯ ⊗ M_J, one ancilla qubit per step.
  Matrix chain = id;
  for (std::size_t j = 0; j < j_count; ++j) {
    const Eigen::Index blocks = chain.rows() / d;
    Matrix next(2 * chain.rows(), d);
    for (Eigen::Index b = 0; b < blocks; ++b) {
      const auto block = chain.middleRows(b * d, d);
      next.middleRows(2 * b * d, d) = parts[j][0] * block;
      next.middleRows((2 * b + 1) * d, d) = parts[j][1] * block;
    }
    chain = std::move(next);
  }
  out.chain_value = (chain * r * chain.adjoint()).trace().real();

  double deficit = 0.0;
  for (const auto& l : lambdas) deficit += trace_product(id - l, r);
  out.lhs = out.trace - out.lambda_hat_value;
  out.rhs = 2.0 * std::sqrt(std::max(deficit, 0.0));
  out.holds = out.lhs <= out.rhs + 1e-9;
  out.routes_agree = std::abs(out.chain_value - out.lambda_hat_value) <= 1e-10;
  return out;
}

}  // namespace qmap
