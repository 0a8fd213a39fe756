// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "l2rom/certify.hpp"
#include "l2rom/linalg.hpp"
#include "l2rom/optimize.hpp"
#include "quadrature_oracle.hpp"
#include "test_support.hpp"

using namespace l2rom;
using l2rom::testing::Rng;

namespace {

PoleResidue dense_pole_residue(const AffineLtiFom& fom) {
  return pole_residue_lti(MatR(fom.E), MatR(fom.A), fom.B, fom.C);
}

PoleResidue real_pole_form(Rng& rng, const std::vector<double>& poles, int no, int ni,
                           bool with_constant) {
  PoleResidue pr;
  const int n = static_cast<int>(poles.size());
  pr.poles.resize(n);
  for (int j = 0; j < n; ++j) pr.poles(j) = poles[static_cast<std::size_t>(j)];
  pr.left = rng.matrix(no, n).cast<cplx>();
  pr.right = rng.matrix(ni, n).cast<cplx>();
  pr.constant = with_constant ? MatC(rng.matrix(no, ni).cast<cplx>()) : MatC::Zero(no, ni);
  return pr;
}

}  // namespace

TEST_CASE("family names round-trip") {
  for (auto f : {Family::h2_ct, Family::h2_dt, Family::h2l2, Family::discrete_ls,
                 Family::stationary})
    CHECK(parse_family(family_name(f)) == f);
  CHECK(parse_family("h2-ct") == Family::h2_ct);
  CHECK(parse_family("discrete-ls") == Family::discrete_ls);
  CHECK_THROWS_AS(parse_family("h3"), InvalidArgument);
}

TEST_CASE("Cauchy identities behind the mirrored interpolation points") {
  const auto fom = make_random_stable(6, 1, 1, 17);
  Rng rng(41);
  for (int trial = 0; trial < 3; ++trial) {
    const cplx lambda{-rng.uniform(0.2, 2.0), rng.uniform(-2.0, 2.0)};
    const cplx sigma = -std::conj(lambda);
    const cplx value = l2rom::testing::axis_integral(
        [&](cplx s) { return fom.transfer(s)(0, 0) / (-s - std::conj(lambda)); });
    CHECK(std::abs(value - fom.transfer(sigma)(0, 0)) <= 1e-4 * std::abs(fom.transfer(sigma)(0, 0)));
    const cplx deriv = l2rom::testing::axis_integral([&](cplx s) {
      const cplx d = -s - std::conj(lambda);
      return fom.transfer(s)(0, 0) / (d * d);
    });
    const cplx dH = fom.transfer_derivative(sigma)(0, 0);
    CHECK(std::abs(deriv + dH) <= 1e-4 * std::abs(dH));
  }
  SUBCASE("unit circle") {
    const auto dt = make_random_stable(6, 1, 1, 18, TimeDomain::discrete);
    const cplx lambda{0.3, -0.4};
    const cplx value = l2rom::testing::circle_integral(
        [&](cplx z) { return dt.transfer(z)(0, 0) / (1.0 / z - std::conj(lambda)); });
    const cplx expected = dt.transfer(1.0 / std::conj(lambda))(0, 0) / std::conj(lambda);
    CHECK(std::abs(value - expected) <= 1e-8 * std::abs(expected));
  }
}

TEST_CASE("continuous-time H2 certificate") {
  SUBCASE("rom equal to the fom") {
    const auto fom = make_random_stable(6, 2, 1, 3);
    const Certificate c = h2_ct_residuals(fom.evaluator(), dense_pole_residue(fom));
    CHECK(c.pass);
    CHECK(c.rows.size() == 6);
    CHECK(c.max_residual() <= 1e-10);
  }
  SUBCASE("IRKA fixed point, and a perturbation probe") {
    const auto fom = make_random_stable(30, 1, 1, 1);
    const IrkaResult res = irka_init(fom, 4);
    REQUIRE(res.converged);
    PoleResidue pr = pole_residue(res.rom);
    const Certificate c = h2_ct_residuals(fom.evaluator(), pr);
    CHECK(c.pass);
    CHECK(c.max_residual() <= 1e-6);

    pr.right.col(0) *= 1.1;
    const Certificate bad = h2_ct_residuals(fom.evaluator(), pr);
    CHECK_FALSE(bad.pass);
    CHECK(bad.max_residual() > 1e-3);
  }
  SUBCASE("unstable rom poles are rejected") {
    const auto fom = make_random_stable(4, 1, 1, 3);
    PoleResidue pr = dense_pole_residue(fom);
    pr.poles(0) = cplx{0.5, 0.0};
    CHECK_THROWS_AS(h2_ct_residuals(fom.evaluator(), pr), DomainError);
  }
  SUBCASE("finite-difference fallback for black-box derivatives") {
    const auto fom = make_random_stable(6, 1, 1, 5);
    FomEvaluator bare = fom.evaluator();
    bare.partials = nullptr;
    const Certificate c = h2_ct_residuals(bare, dense_pole_residue(fom));
    CHECK(c.max_residual() <= 1e-6);
  }
}

TEST_CASE("certificates are invariant under residue-factor rescaling") {
  const auto fom = make_random_stable(30, 1, 1, 1);
  IrkaOptions o;
  o.max_iters = 3;
  const PoleResidue pr = pole_residue(irka_init(fom, 4, o).rom);
  PoleResidue scaled = pr;
  const cplx gamma{2.0, -1.5};
  for (int k = 0; k < pr.size(); ++k) {
    scaled.left.col(k) *= gamma;
    scaled.right.col(k) /= std::conj(gamma);
  }
  const Certificate a = h2_ct_residuals(fom.evaluator(), pr, 1e-3);
  const Certificate b = h2_ct_residuals(fom.evaluator(), scaled, 1e-3);
  CHECK(a.pass == b.pass);
  for (std::size_t k = 0; k < a.rows.size(); ++k) {
    CHECK(a.rows[k].right == doctest::Approx(b.rows[k].right).epsilon(1e-8));
    CHECK(a.rows[k].hermite == doctest::Approx(b.rows[k].hermite).epsilon(1e-8));
  }
}

TEST_CASE("discrete-time H2 certificate") {
  const auto fom = make_random_stable(10, 1, 1, 4, TimeDomain::discrete);
  SUBCASE("rom equal to the fom") {
    CHECK(h2_dt_residuals(fom.evaluator(), dense_pole_residue(fom)).max_residual() <= 1e-10);
  }
  SUBCASE("fit on a dense unit-circle rule") {
    const SampleSet data = sample_unit_circle(fom.evaluator(), 512);
    const IrkaResult init = irka_init(fom, 2);
    const FitTrace tr = fit(init.rom, data);
    CHECK(tr.converged);
    const Certificate c = h2_dt_residuals(fom.evaluator(), pole_residue(tr.rom), 1e-4);
    CHECK(c.pass);
  }
  SUBCASE("poles on or outside the unit circle are rejected") {
    PoleResidue pr = dense_pole_residue(fom);
    pr.poles(0) = cplx{1.0, 0.0};
    CHECK_THROWS_AS(h2_dt_residuals(fom.evaluator(), pr), DomainError);
  }
}

TEST_CASE("H2xL2 certificate") {
  const KronParametricFom fom = make_kron_parametric(2, 2, 2, 2, 5);
  const Certificate c = h2l2_residuals(fom.evaluator(), fom.terms);
  CHECK(c.pass);
  CHECK(c.max_residual() <= 1e-12);
  CHECK(c.rows.size() == 2 * 2 + 2 + 2);

  SUBCASE("perturbed rom fails") {
    PoleResidue2D pr = fom.terms;
    pr.right *= 1.05;
    CHECK_FALSE(h2l2_residuals(fom.evaluator(), pr).pass);
  }
  SUBCASE("pole placement is checked") {
    PoleResidue2D pr = fom.terms;
    pr.xi_poles(0) = cplx{0.5, 0.0};
    CHECK_THROWS_AS(h2l2_residuals(fom.evaluator(), pr), DomainError);
  }
  SUBCASE("one-parameter fom is rejected") {
    CHECK_THROWS_AS(h2l2_residuals(make_random_stable(3, 2, 2, 1).evaluator(), fom.terms),
                    InvalidArgument);
  }
}

TEST_CASE("modified least-squares transfer functions") {
  SampleSet one;
  one.points = {ParamPoint(cplx{0.0, 0.0})};
  one.values = {MatC::Ones(1, 1)};
  one.weights = {1.0};
  CHECK(std::abs(modified_ls_tf_eval(one, nullptr, cplx{1.0, 0.0})(0, 0) - 1.0) < 1e-15);
  CHECK_THROWS_AS(modified_ls_tf_eval(one, nullptr, cplx{0.0, 0.0}), DomainError);

  const auto fom = make_random_stable(8, 1, 1, 6);
  const SampleSet data = sample_frequency_response(fom, logspace(0.1, 100.0, 20),
                                                   std::vector<double>(20, 1.0));
  const cplx s{0.7, 0.4};
  const double h = 1e-5;
  const MatC fd = (modified_ls_tf_eval(data, nullptr, s + h) - modified_ls_tf_eval(data, nullptr, s - h)) /
                  (2.0 * h);
  CHECK(relative_error(modified_ls_tf_eval(data, nullptr, s, 1), fd) <= 1e-8);
  const MatC g_real = modified_ls_tf_eval(data, nullptr, cplx{1.3, 0.0});
  CHECK(std::abs(g_real(0, 0).imag()) <= 1e-14 * std::abs(g_real(0, 0)));
}

TEST_CASE("discrete least-squares certificate") {
  const auto fom = make_random_stable(10, 1, 1, 8);
  const std::vector<double> freqs = logspace(0.1, 30.0, 30);
  const SampleSet data = sample_frequency_response(fom, freqs, std::vector<double>(30, 1.0));

  SUBCASE("zero misfit") {
    const auto rom = l2rom::testing::random_lti_rom(*std::make_unique<Rng>(3), 3, 1, 1);
    const PoleResidue pr = pole_residue(rom);
    SampleSet exact = data;
    for (std::size_t i = 0; i < exact.size(); ++i)
      exact.values[i] = evaluate_output(rom, exact.points[i]).output;
    const Certificate c = ls_residuals(exact, pr);
    CHECK(c.max_residual() <= 1e-12);
    CHECK(c.consistency <= 1e-12);
  }
  SUBCASE("converged fit Hermite-interpolates G") {
    const FitTrace tr = fit(irka_init(fom, 2).rom, data);
    REQUIRE(tr.converged);
    const Certificate c = ls_residuals(data, pole_residue(tr.rom));
    CHECK(c.max_residual() <= 1e-5);
    CHECK(c.consistency <= 1e-12);
  }
  SUBCASE("a non-optimal rom fails") {
    Rng rng(9);
    const auto rom = l2rom::testing::random_lti_rom(rng, 2, 1, 1);
    const Certificate c = ls_residuals(data, pole_residue(rom));
    CHECK(c.max_residual() > 1e-2);
    CHECK(c.consistency <= 1e-12);
  }
  SUBCASE("samples off the imaginary axis are rejected") {
    SampleSet off = data;
    off.points[0] = ParamPoint(cplx{0.1, 1.0});
    off.points[1] = ParamPoint(cplx{0.1, -1.0});
    CHECK_THROWS_AS(ls_residuals(off, dense_pole_residue(fom)), InvalidArgument);
  }
}

TEST_CASE("f_sigma") {
  CHECK(f_sigma_eval(0.0, 1.0, 2.0, 2.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(std::abs(f_sigma_eval(0.0, 1.0, 2.0, 2.0 + 1e-6) - 0.5) <= 1e-5);
  CHECK_THROWS_AS(f_sigma_eval(0.0, 1.0, 1.0, 2.0), DomainError);
  CHECK_THROWS_AS(f_sigma_eval(0.0, 1.0, 2.0, 0.0), DomainError);

  const double a = 0.1, b = 10.0;
  for (double sigma : {-3.2, -0.3, 12.0}) {
    const double closed = (b - a) * (a + b - 2 * sigma) /
                          (2 * std::pow(sigma - a, 2) * std::pow(sigma - b, 2));
    CHECK(f_sigma_eval(a, b, sigma, sigma, 1) == doctest::Approx(closed).epsilon(1e-12));
    for (double p : {-5.0, -1.0, -0.05, 11.0, 20.0}) {
      if (std::abs(p - sigma) < 0.1) continue;
      const double h = 1e-6 * (1.0 + std::abs(p));
      const double fd = (f_sigma_eval(a, b, sigma, p + h) - f_sigma_eval(a, b, sigma, p - h)) / (2 * h);
      CHECK(f_sigma_eval(a, b, sigma, p, 1) == doctest::Approx(fd).epsilon(1e-7));
    }
    // Both sides of the series/difference-quotient switch agree with
    // f'(p) = int_a^b dt / ((t - sigma)(t - p)^2).
    const double dist = std::min(std::abs(sigma - a), std::abs(sigma - b));
    for (double r : {0.5e-3, 0.999e-3, 1.001e-3, 2e-3}) {
      const double p = sigma + r * dist;
      const double direct = l2rom::testing::integrate(
          [&](double t) { return cplx{1.0 / ((t - sigma) * (t - p) * (t - p)), 0.0}; }, a, b).real();
      CHECK(f_sigma_eval(a, b, sigma, p, 1) == doctest::Approx(direct).epsilon(1e-10));
    }
    // The value agrees with a direct integral of 1/((t - sigma)(t - p)).
    const double p = sigma - 0.7;
    const double direct = l2rom::testing::integrate(
        [&](double t) { return cplx{1.0 / ((t - sigma) * (t - p)), 0.0}; }, a, b).real();
    CHECK(f_sigma_eval(a, b, sigma, p) == doctest::Approx(direct).epsilon(1e-10));
  }
}

TEST_CASE("modified outputs") {
  Rng rng(42);
  const Interval iv{0.1, 10.0};
  const PoleResidue fom = real_pole_form(rng, {-0.4, -2.0, -7.5, 14.0}, 2, 1, true);
  for (double p : {-3.0, -0.25, 12.0}) {
    // Y(p) = int_a^b y(t) / (t - p) dt
    MatR direct(2, 1);
    for (int i = 0; i < 2; ++i) {
      direct(i, 0) = l2rom::testing::integrate(
                         [&](double t) {
                           return pole_residue_eval(fom, cplx{t, 0.0})(i, 0) / (t - p);
                         },
                         iv.a, iv.b)
                         .real();
    }
    CHECK(relative_error(modified_output_eval(fom, iv, p), direct) <= 1e-8);
    const double h = 1e-6 * (1.0 + std::abs(p));
    const MatR fd = (modified_output_eval(fom, iv, p + h) - modified_output_eval(fom, iv, p - h)) /
                    (2 * h);
    CHECK(relative_error(modified_output_eval(fom, iv, p, 1), fd) <= 1e-7);
  }
  CHECK_THROWS_AS(modified_output_eval(fom, iv, iv.a), DomainError);
  const PoleResidue inside = real_pole_form(rng, {1.0}, 1, 1, false);
  CHECK_THROWS_AS(modified_output_eval(inside, iv, -1.0), DomainError);

  SUBCASE("matching single-pole forms agree at the pole") {
    const PoleResidue one = real_pole_form(rng, {-1.5}, 1, 1, false);
    CHECK(modified_output_eval(one, one, iv, -1.5, 0, OutputSide::fom) ==
          modified_output_eval(one, one, iv, -1.5, 0, OutputSide::rom));
  }
}

TEST_CASE("stationary certificate") {
  Rng rng(43);
  const Interval iv{0.1, 10.0};
  SUBCASE("rom equal to the fom") {
    const PoleResidue pr = real_pole_form(rng, {-0.3, -3.0}, 1, 1, false);
    const Certificate c = stationary_residuals(pr, pr, iv);
    CHECK(c.pass);
    CHECK(c.max_residual() <= 1e-14);
  }
  SUBCASE("converged Poisson rom on a coarse mesh") {
    const AffineStationaryFom fom = make_poisson(8);
    const SampleSet data = sample_stationary(fom, 60);
    const GreedyResult init = greedy_rb_init(fom, 2, logspace(0.1, 10.0, 20));
    const FitTrace tr = fit(init.rom, data);
    REQUIRE(tr.converged);
    const Certificate c = stationary_residuals(fom.pole_residue(), pole_residue(tr.rom), iv);
    CHECK(c.max_residual() <= 1e-5);
  }
  SUBCASE("a rom pole inside the interval is rejected") {
    const PoleResidue fom = real_pole_form(rng, {-0.3}, 1, 1, true);
    const PoleResidue bad = real_pole_form(rng, {2.0}, 1, 1, false);
    CHECK_THROWS_AS(stationary_residuals(fom, bad, iv), DomainError);
  }
}
