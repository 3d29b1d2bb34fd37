#include <doctest.h>

#include <cmath>
#include <cstdlib>

#include "oracles.hpp"
#include "qmap/error.hpp"
#include "qmap/protocols.hpp"

using namespace qmap;

namespace {

double unitarity_error(const Matrix& u) {
  return (u.adjoint() * u - Matrix::Identity(u.rows(), u.cols())).cwiseAbs().maxCoeff();
}

Vector bell_vector(int which) {
  // |Φ±⟩, |Ψ±⟩ on two qubits, first qubit most significant.
  Vector v = Vector::Zero(4);
  const double s = 1.0 / std::sqrt(2.0);
  switch (which) {
    case 0: v(0) = s; v(3) = s; break;
    case 1: v(0) = s; v(3) = -s; break;
    case 2: v(1) = s; v(2) = s; break;
    default: v(1) = s; v(2) = -s; break;
  }
  return v;
}

DensityMatrix phi_plus() { return DensityMatrix::maximally_entangled("A", "B", 2); }

DensityMatrix two_bell() {
  return reorder(tensor(DensityMatrix::maximally_entangled("A1", "B1", 2),
                        DensityMatrix::maximally_entangled("A2", "B2", 2)),
                 {"A1", "A2", "B1", "B2"});
}

}  // namespace

TEST_CASE("seed derivation") {
  CHECK(derive_seed(1, {2, 3}) == derive_seed(1, {2, 3}));
  CHECK(derive_seed(1, {2, 3}) != derive_seed(1, {3, 2}));
  CHECK(derive_seed(1, {2}) != derive_seed(2, {2}));
}

TEST_CASE("Haar unitaries") {
  Rng rng(7);
  const Matrix one = haar_unitary(1, rng);
  CHECK(std::abs(std::abs(one(0, 0)) - 1.0) < 1e-12);
  for (int t = 0; t < 1000; ++t) CHECK(unitarity_error(haar_unitary(4, rng)) <= 1e-10);

  // E[U|0⟩⟨0|U†] = π₂
  Matrix mean = Matrix::Zero(2, 2);
  const int samples = 5000;
  for (int t = 0; t < samples; ++t) {
    const Matrix u = haar_unitary(2, rng);
    mean += u.col(0) * u.col(0).adjoint();
  }
  mean /= static_cast<double>(samples);
  const Matrix diff = mean - 0.5 * Matrix::Identity(2, 2);
  CHECK(0.5 * oracle::trace_norm(diff) <= 0.05);
}

TEST_CASE("random effects lie between 0 and I") {
  Rng rng(11);
  for (int t = 0; t < 50; ++t) {
    const auto ev = oracle::hermitian_eigenvalues(random_effect(5, rng));
    CHECK(ev.front() >= -1e-12);
    CHECK(ev.back() <= 1.0 + 1e-12);
  }
}

TEST_CASE("Weyl operators") {
  const Matrix x = weyl_operator(2, 1, 0);
  const Matrix z = weyl_operator(2, 0, 1);
  CHECK(std::abs(x(0, 1) - 1.0) < 1e-15);
  CHECK(std::abs(z(1, 1) + 1.0) < 1e-12);
  for (std::size_t a = 0; a < 3; ++a) {
    for (std::size_t b = 0; b < 3; ++b) CHECK(unitarity_error(weyl_operator(3, a, b)) <= 1e-12);
  }
}

TEST_CASE("unitary families") {
  const UnitaryFamily f = sample_family(1, 3, 2, 2, 99);
  REQUIRE(f.size() == 2);
  for (std::size_t k = 0; k < f.size(); ++k) {
    REQUIRE(f.per_index[k].size() == 3);
    for (const auto& u : f.per_index[k]) CHECK(unitarity_error(u) <= 1e-10);
    const Matrix expect = oracle::kron(oracle::kron(f.per_index[k][0], f.per_index[k][1]),
                                       f.per_index[k][2]);
    CHECK((f.block(k) - expect).cwiseAbs().maxCoeff() <= 1e-12);
  }
  const UnitaryFamily same = sample_family(1, 3, 2, 2, 99);
  const UnitaryFamily other = sample_family(1, 3, 2, 2, 100);
  CHECK(same.block(1) == f.block(1));
  CHECK((other.block(0) - f.block(0)).cwiseAbs().maxCoeff() > 1e-3);

  // A larger family extends a smaller one index by index.
  const UnitaryFamily longer = sample_family(1, 3, 4, 2, 99);
  CHECK(longer.block(1) == f.block(1));

  const UnitaryFamily w = weyl_family(1, 2, 16, 2);
  CHECK(w.block(0).isApprox(Matrix::Identity(4, 4)));
  CHECK(w.kind == FamilyKind::kWeyl);
  CHECK_THROWS_AS(weyl_family(1, 1, 5, 2), ValidationError);
}

TEST_CASE("randomization") {
  const DensityMatrix zero = DensityMatrix::basis(SystemLayout({{"A", 2}}), 0);
  CHECK(randomize(zero, {"A"}, {}, 1, {sample_family(1, 1, 1, 2, 5)}).distance ==
        doctest::Approx(1.0).epsilon(1e-10));
  CHECK(randomize(zero, {"A"}, {}, 1, {weyl_family(1, 1, 4, 2)}).distance <= 1e-10);

  SUBCASE("no randomization") {
    const DensityMatrix r = random_density(SystemLayout({{"A", 2}, {"W", 2}}), 2, 17);
    const Randomization out = randomize(r, {"A"}, {"W"}, 1, {weyl_family(1, 1, 1, 2)});
    const DensityMatrix target =
        tensor(DensityMatrix::maximally_mixed(SystemLayout({{"A_1", 2}})),
               reorder(partial_trace(out.rho_bar, {"W_1"}), {"W_1"}));
    CHECK(out.distance == doctest::Approx(oracle::trace_norm(out.rho_bar.matrix() - target.matrix())));
  }

  SUBCASE("W marginal is untouched") {
    const SystemLayout l({{"A1", 2}, {"A2", 2}, {"W", 2}});
    for (std::uint64_t t = 0; t < 10; ++t) {
      const DensityMatrix r = random_density(l, 1 + t % 8, 50 + t);
      const Randomization out = randomize(
          r, {"A1", "A2"}, {"W"}, 1,
          {sample_family(1, 1, 3, 2, t), sample_family(2, 1, 2, 2, t)});
      CHECK(out.w_marginal_deviation <= 1e-10);
      const Matrix w = oracle::partial_trace(out.rho_bar.matrix(), {2, 2, 2}, {false, false, true});
      const Matrix w0 = oracle::partial_trace(r.matrix(), {2, 2, 2}, {false, false, true});
      CHECK((w - w0).cwiseAbs().maxCoeff() <= 1e-10);
    }
  }

  CHECK_THROWS_AS(randomize(zero, {"A"}, {}, 1, {weyl_family(1, 1, 4, 3)}), ValidationError);
}

TEST_CASE("pretty-good measurement") {
  const SystemLayout q({{"Q", 2}});
  const std::vector<DensityMatrix> orth{DensityMatrix::basis(q, 0), DensityMatrix::basis(q, 1)};
  const Povm p = pgm_decoder(orth, {0.5, 0.5});
  CHECK(p.completeness_residual() <= 1e-8);
  std::vector<Matrix> om{orth[0].matrix(), orth[1].matrix()};
  CHECK(success_probability(p, om, {0.5, 0.5}) == doctest::Approx(1.0).epsilon(1e-10));

  const DensityMatrix mixed = random_density(q, 2, 3);
  const std::vector<Matrix> same(3, mixed.matrix());
  const std::vector<double> third(3, 1.0 / 3.0);
  const Povm ps = pgm_decoder(same, third);
  CHECK(ps.completeness_residual() <= 1e-8);
  CHECK(success_probability(ps, same, third) == doctest::Approx(1.0 / 3.0).epsilon(1e-10));

  std::vector<Matrix> bells;
  for (int b = 0; b < 4; ++b) bells.push_back(bell_vector(b) * bell_vector(b).adjoint());
  const std::vector<double> quarter(4, 0.25);
  const Povm pb = pgm_decoder(bells, quarter);
  for (int b = 0; b < 4; ++b) {
    CHECK((pb.elements[static_cast<std::size_t>(b)] - bells[static_cast<std::size_t>(b)])
              .cwiseAbs()
              .maxCoeff() <= 1e-10);
  }
  CHECK(success_probability(pb, bells, quarter) == doctest::Approx(1.0).epsilon(1e-10));

  // Rank-deficient mixture: the null space is still covered.
  const std::vector<Matrix> partial{orth[0].matrix(), orth[0].matrix()};
  CHECK(pgm_decoder(partial, {0.5, 0.5}).completeness_residual() <= 1e-8);

  CHECK_THROWS_AS(pgm_decoder(om, {0.4, 0.4}), ValidationError);
  CHECK_THROWS_AS(pgm_decoder(std::vector<Matrix>{Matrix::Zero(2, 2)}, {1.0}), ValidationError);
}

TEST_CASE("sequential decoder") {
  SUBCASE("single sender reduces to its stage") {
    const DensityMatrix r = random_density(SystemLayout({{"A", 2}, {"B", 2}}), 2, 8);
    const SequentialDecoder d = sequential_decoder(r, {"A"}, {"B"}, 1, {sample_family(1, 1, 3, 2, 4)});
    REQUIRE(d.stage_success.size() == 1);
    CHECK(std::abs(d.success - d.stage_success[0]) <= 1e-10);
    CHECK(d.residual <= 1e-8);
  }
  SUBCASE("one codeword per sender") {
    const DensityMatrix r = random_density(SystemLayout({{"A1", 2}, {"A2", 2}, {"B", 2}}), 3, 9);
    const SequentialDecoder d = sequential_decoder(
        r, {"A1", "A2"}, {"B"}, 1, {sample_family(1, 1, 1, 2, 1), sample_family(2, 1, 1, 2, 1)});
    CHECK(d.povm.size() == 1);
    CHECK(d.success == doctest::Approx(1.0).epsilon(1e-10));
  }
  SUBCASE("two Bell pairs with Pauli families") {
    const SequentialDecoder d = sequential_decoder(
        two_bell(), {"A1", "A2"}, {"B1", "B2"}, 1, {weyl_family(1, 1, 4, 2), weyl_family(2, 1, 4, 2)});
    CHECK(d.povm.size() == 16);
    CHECK(d.residual <= 1e-8);
    CHECK(d.success == doctest::Approx(1.0).epsilon(1e-9));

    // Oracle: the encoded states are the 16 products of Bell states, mutually
    // orthogonal, and Λ_k is the projector onto the k-th one.
    const DensityMatrix rho = two_bell();
    for (std::size_t k = 0; k < 16; ++k) {
      const Matrix u1 = weyl_family(1, 1, 4, 2).block(k / 4);
      const Matrix u2 = weyl_family(2, 1, 4, 2).block(k % 4);
      const Matrix u = oracle::kron(oracle::kron(u1, u2), Matrix::Identity(4, 4));
      const Matrix rk = u * rho.matrix() * u.adjoint();
      CHECK(std::abs((d.povm.elements[k] * rk).trace().real() - 1.0) <= 1e-9);
    }
  }
  SUBCASE("joint PGM on the same problem") {
    const SequentialDecoder d = joint_pgm_decoder(
        two_bell(), {"A1", "A2"}, {"B1", "B2"}, 1, {weyl_family(1, 1, 4, 2), weyl_family(2, 1, 4, 2)});
    CHECK(d.success == doctest::Approx(1.0).epsilon(1e-9));
  }
  SUBCASE("random families stay complete") {
    const SystemLayout l({{"A1", 2}, {"A2", 2}, {"B", 2}});
    for (std::uint64_t t = 0; t < 5; ++t) {
      const DensityMatrix r = random_density(l, 1 + t, 60 + t);
      const SequentialDecoder d = sequential_decoder(
          r, {"A1", "A2"}, {"B"}, 1, {sample_family(1, 1, 3, 2, t), sample_family(2, 1, 2, 2, t)});
      CHECK(d.residual <= 1e-8);
      for (const auto& e : d.povm.elements) CHECK(oracle::hermitian_eigenvalues(e).front() >= -1e-10);
      CHECK(d.success <= 1.0 + 1e-10);
    }
  }
}

TEST_CASE("union bound") {
  Rng rng(21);
  const SystemLayout l({{"Q", 8}});
  const DensityMatrix sub =
      DensityMatrix::subnormalized(0.7 * random_density(l, 3, 22).matrix(), l);

  const Matrix lam = random_effect(8, rng);
  const UnionBound one = union_bound_check({lam}, sub);
  const double gap = ((Matrix::Identity(8, 8) - lam) * sub.matrix()).trace().real();
  CHECK(one.lhs == doctest::Approx(gap).epsilon(1e-10));
  CHECK(one.holds);
  CHECK(one.routes_agree);

  const UnionBound ident = union_bound_check(std::vector<Matrix>(3, Matrix::Identity(8, 8)), sub);
  CHECK(std::abs(ident.lhs) <= 1e-12);

  for (int t = 0; t < 100; ++t) {
    const DensityMatrix r = random_density(l, 1 + static_cast<std::size_t>(t) % 8, 500 + t);
    const UnionBound u =
        union_bound_check({random_effect(8, rng), random_effect(8, rng), random_effect(8, rng)}, r);
    CHECK(u.holds);
    CHECK(u.routes_agree);
  }

  Matrix too_big = 1.5 * Matrix::Identity(8, 8);
  CHECK_THROWS_AS(union_bound_check({too_big}, sub), ValidationError);
}

TEST_CASE("code sizes from rates") {
  const CodeSizes s = sizes_from_rates(2, RateTuple{{1.0}}, RateTuple{{1.25}}, RateTuple{{0.25}});
  CHECK(s.messages == std::vector<std::size_t>{4});
  CHECK(s.randomizers == std::vector<std::size_t>{2});
  CHECK_THROWS_AS(sizes_from_rates(1, RateTuple{{1.0}}, RateTuple{{1.5}}, RateTuple{{0.0}}),
                  ValidationError);
  CHECK(randomizer_counts(3, RateTuple{{0.5, 0.0}}) == std::vector<std::size_t>{4, 1});
}

TEST_CASE("codes") {
  const Roles roles{{"A"}, {"B"}, {}};

  SUBCASE("superdense coding") {
    const CodeSpec code = build_qmap_code(phi_plus(), roles, 1, CodeSizes{{4}, {1}},
                                          FamilyKind::kWeyl, DecoderKind::kSequential, 0);
    CHECK(code.codewords == std::vector<std::size_t>{4});
    CHECK(code.decoder.completeness_residual() <= 1e-8);
    const SimulationReport rep = evaluate_code(code, phi_plus());
    CHECK(rep.exact);
    CHECK(std::abs(rep.estimate("epsilon")) <= 1e-10);
    CHECK(std::abs(rep.estimate("leakage")) <= 1e-10);
  }

  SUBCASE("no randomization layer") {
    const CodeSpec code = build_qmap_code(phi_plus(), roles, 1, CodeSizes{{3}, {1}},
                                          FamilyKind::kHaar, DecoderKind::kSequential, 12);
    REQUIRE(code.decoder.size() == code.fine_decoder.size());
    for (std::size_t m = 0; m < code.decoder.size(); ++m) {
      CHECK(code.decoder.elements[m] == code.fine_decoder.elements[m]);
    }
  }

  SUBCASE("nothing to decode") {
    const Roles r3{{"A"}, {"B"}, {"E"}};
    const DensityMatrix rho = random_density(SystemLayout({{"A", 2}, {"B", 2}, {"E", 2}}), 3, 31);
    const CodeSpec code =
        build_qmap_code(rho, r3, 1, CodeSizes{{1}, {2}}, FamilyKind::kHaar, DecoderKind::kSequential, 3);
    CHECK(code.decoder.size() == 1);
    CHECK((code.decoder.elements[0] - Matrix::Identity(8, 8)).cwiseAbs().maxCoeff() <= 1e-8);
    const SimulationReport rep = evaluate_code(code, rho);
    CHECK(std::abs(rep.estimate("epsilon")) <= 1e-10);
    CHECK(std::abs(rep.estimate("leakage")) <= 1e-10);
  }

  SUBCASE("invariants on random codes") {
    const Roles r2{{"A1", "A2"}, {"B"}, {"E"}};
    const SystemLayout l({{"A1", 2}, {"A2", 2}, {"B", 2}, {"E", 2}});
    for (std::uint64_t t = 0; t < 4; ++t) {
      const DensityMatrix rho = random_density(l, 2 + t, 70 + t);
      const CodeSpec code = build_qmap_code(rho, r2, 1, CodeSizes{{2, 2}, {2, 1}}, FamilyKind::kHaar,
                                            t % 2 ? DecoderKind::kJointPgm : DecoderKind::kSequential,
                                            t);
      CHECK(code.codewords == std::vector<std::size_t>{4, 2});
      CHECK(code.decoder.completeness_residual() <= 1e-8);
      const SimulationReport rep = evaluate_code(code, rho);
      CHECK(rep.violations.empty());
      CHECK(rep.estimate("success") >= code.fine_success - 1e-9);
      CHECK(rep.estimate("leakage") <= rep.estimate("leakage_bound") + 1e-9);
    }
  }

  SUBCASE("Haar codes below capacity decode better than above") {
    double below = 0.0;
    double above = 0.0;
    for (std::uint64_t s = 0; s < 20; ++s) {
      below += evaluate_code(build_qmap_code(phi_plus(), roles, 2, CodeSizes{{4}, {1}},
                                             FamilyKind::kHaar, DecoderKind::kSequential, s),
                             phi_plus())
                   .estimate("epsilon");
      above += evaluate_code(build_qmap_code(phi_plus(), roles, 2, CodeSizes{{32}, {1}},
                                             FamilyKind::kHaar, DecoderKind::kSequential, s),
                             phi_plus())
                   .estimate("epsilon");
    }
    CHECK(below < above);
    // 32 messages in a 16-dimensional space: at most half can be decoded.
    CHECK(above / 20.0 >= 0.5 - 1e-9);
  }

  SUBCASE("evaluation is reproducible") {
    const CodeSpec a = build_qmap_code(phi_plus(), roles, 1, CodeSizes{{2}, {2}}, FamilyKind::kHaar,
                                       DecoderKind::kSequential, 77);
    const CodeSpec b = build_qmap_code(phi_plus(), roles, 1, CodeSizes{{2}, {2}}, FamilyKind::kHaar,
                                       DecoderKind::kSequential, 77);
    CHECK(evaluate_code(a, phi_plus()).samples == evaluate_code(b, phi_plus()).samples);
  }
}

TEST_CASE("chained randomization") {
  const SystemLayout l({{"A", 2}, {"W", 2}});
  const DensityMatrix r = random_density(l, 2, 41);

  ChainConfig cfg;
  cfg.randomizers = {4};
  cfg.trials = 3;
  cfg.seed = 5;
  const SimulationReport rep = chained_randomization_experiment(r, {"A"}, {"W"}, cfg);
  REQUIRE(rep.sample("total_distance").size() == 3);
  for (std::size_t t = 0; t < 3; ++t) {
    const Randomization direct =
        randomize(r, {"A"}, {"W"}, 1, {sample_family(1, 1, 4, 2, derive_seed(5, {t}))});
    CHECK(rep.sample("total_distance")[t] == doctest::Approx(direct.distance).epsilon(1e-10));
    CHECK(rep.sample("stage_1_distance")[t] == doctest::Approx(direct.distance).epsilon(1e-10));
  }

  const DensityMatrix r3 = random_density(SystemLayout({{"A1", 2}, {"A2", 2}, {"W", 2}}), 3, 42);
  ChainConfig pauli;
  pauli.randomizers = {4, 4};
  pauli.family = FamilyKind::kWeyl;
  const SimulationReport pr = chained_randomization_experiment(r3, {"A1", "A2"}, {"W"}, pauli);
  CHECK(pr.sample("total_distance")[0] <= 1e-10);
  CHECK(pr.violations.empty());

  ChainConfig haar;
  haar.randomizers = {2, 3};
  haar.trials = 4;
  haar.seed = 8;
  const SimulationReport hr = chained_randomization_experiment(r3, {"A1", "A2"}, {"W"}, haar);
  CHECK(hr.violations.empty());
  CHECK(hr.samples == chained_randomization_experiment(r3, {"A1", "A2"}, {"W"}, haar).samples);
}

TEST_CASE("encoding experiment") {
  EncodingConfig cfg;
  cfg.codewords = {4, 4};
  cfg.family = FamilyKind::kWeyl;
  const SimulationReport rep = encoding_experiment(two_bell(), {"A1", "A2"}, {"B1", "B2"}, cfg);
  CHECK(rep.estimate("success") == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(rep.estimate("decoder_residual") <= 1e-8);
}

TEST_CASE("typical projector") {
  const DensityMatrix half = DensityMatrix::maximally_mixed(SystemLayout({{"Q", 2}}));
  const TypicalProjector full = typical_projector(half, 4, 0.1);
  CHECK(full.rank == 16);
  CHECK(full.mass == doctest::Approx(1.0).epsilon(1e-12));

  const DensityMatrix pure = random_density(SystemLayout({{"Q", 2}}), 1, 5);
  const TypicalProjector one = typical_projector(pure, 3, 0.1);
  CHECK(one.rank == 1);
  CHECK(one.mass == doctest::Approx(1.0).epsilon(1e-10));

  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 0.9;
  d(1, 1) = 0.1;
  const DensityMatrix skew = DensityMatrix::from_matrix(d, SystemLayout({{"Q", 2}}));
  const TypicalProjector tp = typical_projector(skew, 10, 0.2);

  // Exhaustive enumeration of the 2^10 eigen-sequences.
  const double s = -(0.9 * std::log2(0.9) + 0.1 * std::log2(0.1));
  std::size_t count = 0;
  double mass = 0.0;
  for (unsigned bits = 0; bits < 1024; ++bits) {
    const int ones = __builtin_popcount(bits);
    const double p = std::pow(0.9, 10 - ones) * std::pow(0.1, ones);
    if (std::abs(-std::log2(p) / 10.0 - s) <= 0.2) {
      ++count;
      mass += p;
    }
  }
  CHECK(count == 10);
  CHECK(tp.rank == count);
  CHECK(tp.mass == doctest::Approx(mass).epsilon(1e-10));
  CHECK(tp.enumerated_mass == doctest::Approx(mass).epsilon(1e-10));
  CHECK(tp.mass_ok);
  CHECK(tp.rank_ok);
  CHECK(tp.operator_ok);
  CHECK(oracle::trace_norm(tp.projector.matrix * tp.projector.matrix - tp.projector.matrix) <= 1e-9);

  CHECK_THROWS_AS(typical_projector(skew, 13, 0.1), BudgetExceeded);
}

TEST_CASE("budget") {
  CHECK_NOTHROW(check_budget(2, 12));
  CHECK_THROWS_AS(check_budget(2, 13), BudgetExceeded);
  ::setenv("QMAP_BUDGET_QUBITS", "14", 1);
  CHECK_NOTHROW(check_budget(2, 13));
  ::setenv("QMAP_BUDGET_QUBITS", "99", 1);
  CHECK(qubit_budget() == 14.0);
  ::unsetenv("QMAP_BUDGET_QUBITS");
  CHECK(qubit_budget() == 12.0);
}
