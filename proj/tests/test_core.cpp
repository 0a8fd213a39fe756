// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "l2rom/core.hpp"
#include "l2rom/linalg.hpp"
#include "l2rom/spectral.hpp"
#include "test_support.hpp"

using namespace l2rom;
using l2rom::testing::Rng;

TEST_CASE("scalar families evaluate signed monomials") {
  CHECK(ScalarFamily::constant(1.0).eval(ParamPoint(cplx{3.0, -1.0})) == cplx{1.0, 0.0});
  const auto sxi = ScalarFamily::monomial(1.0, {1, 1}, 2);
  CHECK(std::abs(sxi.eval(ParamPoint(2.0, cplx{0.0, 3.0})) - cplx{0.0, 6.0}) < 1e-15);
  const auto minus_s = ScalarFamily::coordinate(0, -1.0);
  CHECK(std::abs(eval_family(minus_s, ParamPoint(cplx{1.0, 2.0})) - cplx{-1.0, -2.0}) < 1e-15);

  SUBCASE("arity mismatch is rejected") {
    CHECK_THROWS_AS(sxi.eval(ParamPoint(cplx{1.0, 0.0})), InvalidArgument);
    CHECK_THROWS_AS(ScalarFamily(1, {Monomial{1.0, {0, 1}}}), InvalidArgument);
    CHECK_THROWS_AS(ScalarFamily(1, {Monomial{1.0, {-1, 0}}}), InvalidArgument);
  }
  SUBCASE("real coefficients commute with conjugation") {
    const ScalarFamily f(2, {Monomial{2.0, {2, 1}}, Monomial{-0.5, {0, 3}}});
    const ParamPoint p(cplx{0.3, -1.2}, cplx{-0.7, 0.4});
    CHECK(std::abs(f.eval(p.conj()) - std::conj(f.eval(p))) < 1e-14);
  }
}

TEST_CASE("operator assembly") {
  Rng rng(1);
  SUBCASE("LTI at s = 0 gives -A") {
    const auto rom = l2rom::testing::random_lti_rom(rng, 3, 1, 1);
    const MatC A0 = assemble_operator(rom, ParamPoint(cplx{0.0, 0.0}), Block::A);
    CHECK((A0 + rom.a_terms[1].matrix.cast<cplx>()).norm() == doctest::Approx(0.0));
  }
  SUBCASE("stationary at p = 1 gives A1 + A2") {
    const auto rom = l2rom::testing::random_stationary_rom(rng, 3, 1, 1);
    const MatC A = assemble_operator(rom, ParamPoint(cplx{1.0, 0.0}), Block::A);
    const MatR expected = rom.a_terms[0].matrix + rom.a_terms[1].matrix;
    CHECK((A - expected.cast<cplx>()).norm() <= 1e-14 * expected.norm());
  }
  SUBCASE("Kronecker product form equals the four-term sum") {
    for (int trial = 0; trial < 10; ++trial) {
      const auto rom = l2rom::testing::random_kron_rom(rng, 2, 3, 2, 2);
      const ParamPoint p(rng.complex(), rng.complex());
      const MatC prod = assemble_operator(rom, p, Block::A);
      const MatC sum = assemble_operator_terms(rom, p, Block::A);
      CHECK(relative_error(prod, sum) <= 1e-14);
    }
  }
  SUBCASE("inconsistent Kronecker terms fail validation") {
    auto rom = l2rom::testing::random_kron_rom(rng, 2, 2, 1, 1);
    rom.a_terms[2].matrix(0, 0) += 1.0;
    CHECK_THROWS_AS(rom.validate(), InvalidArgument);
    rom.refresh_kron_terms();
    CHECK_NOTHROW(rom.validate());
  }
  SUBCASE("shape mismatch fails validation") {
    CHECK_THROWS_AS(make_lti_rom(MatR::Identity(2, 2), MatR::Identity(3, 3), MatR::Ones(2, 1),
                                 MatR::Ones(1, 2)),
                    InvalidArgument);
  }
}

TEST_CASE("primal and dual reduced solves") {
  SUBCASE("1/(p+1) at p = 0") {
    const auto rom = make_lti_rom(MatR::Ones(1, 1), -MatR::Ones(1, 1), MatR::Ones(1, 1),
                                  MatR::Ones(1, 1));
    CHECK(std::abs(evaluate_output(rom, ParamPoint(cplx{0.0, 0.0})).output(0, 0) - 1.0) < 1e-15);
    CHECK_THROWS_AS(evaluate_output(rom, ParamPoint(cplx{-1.0, 0.0})), SingularOperator);
    CHECK_THROWS_AS(evaluate_dual(rom, ParamPoint(cplx{-1.0, 0.0})), SingularOperator);
  }
  SUBCASE("self-dual symmetric system") {
    Rng rng(2);
    const MatR M = rng.matrix(4, 4);
    const MatR A = -(M * M.transpose()) - MatR::Identity(4, 4);
    const MatR B = rng.matrix(4, 1);
    const auto rom = make_lti_rom(MatR::Identity(4, 4), A, B, B.transpose());
    const ParamPoint p(cplx{0.7, 0.0});
    const auto ev = evaluate_primal_dual(rom, p);
    CHECK((ev.dual - ev.state.conjugate()).norm() <= 1e-13 * ev.state.norm());
  }
  SUBCASE("duality identity on random roms") {
    Rng rng(3);
    for (int trial = 0; trial < 10; ++trial) {
      const auto rom = l2rom::testing::random_lti_rom(rng, 3, 2, 2);
      const ParamPoint p(rng.complex());
      const auto ev = evaluate_primal_dual(rom, p);
      const MatC Bp = assemble_operator(rom, p, Block::B);
      const MatC via_dual = (ev.dual.adjoint() * Bp);
      CHECK(relative_error(ev.output, via_dual) <= 1e-13);
    }
  }
  SUBCASE("conjugate points give conjugate outputs") {
    Rng rng(4);
    const auto rom = l2rom::testing::random_kron_rom(rng, 2, 2, 2, 1);
    for (int trial = 0; trial < 20; ++trial) {
      const ParamPoint p(rng.complex(), rng.complex());
      const MatC y = evaluate_output(rom, p).output;
      const MatC yc = evaluate_output(rom, p.conj()).output;
      CHECK(relative_error(yc, y.conjugate()) <= 1e-13);
    }
  }
  SUBCASE("output equals pole-residue evaluation") {
    Rng rng(5);
    const auto rom = l2rom::testing::random_lti_rom(rng, 4, 2, 3);
    const PoleResidue pr = pole_residue(rom);
    for (int trial = 0; trial < 20; ++trial) {
      const cplx s = rng.complex(3.0);
      CHECK(relative_error(pole_residue_eval(pr, s), evaluate_output(rom, ParamPoint(s)).output) <=
            1e-10);
    }
  }
}

TEST_CASE("conjugation closure of sample sets") {
  SampleSet s;
  s.n_params = 1;
  s.points = {ParamPoint(cplx{0.0, 1.0}), ParamPoint(cplx{0.0, -1.0})};
  s.values = {MatC::Constant(1, 1, cplx{1.0, 2.0}), MatC::Constant(1, 1, cplx{1.0, -2.0})};
  s.weights = {1.0, 1.0};
  CHECK(check_conjugation_closure(s).closed);

  SampleSet single = s;
  single.points.resize(1);
  single.values.resize(1);
  single.weights.resize(1);
  const auto rep = check_conjugation_closure(single);
  CHECK_FALSE(rep.closed);
  REQUIRE(rep.violations.size() == 1);
  CHECK(rep.violations[0] == 0);

  SampleSet wrong_weight = s;
  wrong_weight.weights[1] = 2.0;
  CHECK_FALSE(check_conjugation_closure(wrong_weight).closed);

  SampleSet wrong_value = s;
  wrong_value.values[1](0, 0) = cplx{1.0, 2.0};
  CHECK_FALSE(check_conjugation_closure(wrong_value).closed);

  SUBCASE("real points are self-paired") {
    SampleSet r;
    r.n_params = 1;
    r.points = {ParamPoint(cplx{0.5, 0.0})};
    r.values = {MatC::Constant(1, 1, cplx{3.0, 0.0})};
    r.weights = {1.0};
    CHECK(check_conjugation_closure(r).closed);
  }
}

TEST_CASE("fom partial falls back to finite differences") {
  FomEvaluator f;
  f.n_inputs = f.n_outputs = 1;
  f.n_params = 2;
  f.evaluate = [](const ParamPoint& p) {
    return MatC::Constant(1, 1, 1.0 / ((p[0] + 1.0) * (p[1] - 2.0)));
  };
  const ParamPoint p(cplx{0.3, 0.5}, cplx{0.1, -0.2});
  const cplx ds = -1.0 / ((p[0] + 1.0) * (p[0] + 1.0) * (p[1] - 2.0));
  const cplx dxi = -1.0 / ((p[0] + 1.0) * (p[1] - 2.0) * (p[1] - 2.0));
  CHECK(std::abs(fom_partial(f, p, 0)(0, 0) - ds) <= 1e-8 * std::abs(ds));
  CHECK(std::abs(fom_partial(f, p, 1)(0, 0) - dxi) <= 1e-8 * std::abs(dxi));
  CHECK_THROWS_AS(fom_partial(f, p, 2), InvalidArgument);
}
