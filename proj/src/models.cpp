// SPDX-License-Identifier: Apache-2.0
#include "l2rom/models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>

#include "l2rom/linalg.hpp"

namespace l2rom {
namespace {

using Triplet = Eigen::Triplet<double>;

SpMatC shifted(const SpMat& X, cplx s, const SpMat& Y, cplx t) {
  SpMatC out = s * X.cast<cplx>() + t * Y.cast<cplx>();
  out.makeCompressed();
  return out;
}

template <typename Matrix>
void factor_or_throw(Eigen::SparseLU<Matrix>& lu, const Matrix& m, const char* what) {
  lu.analyzePattern(m);
  lu.factorize(m);
  if (lu.info() != Eigen::Success) throw SingularOperator(what, 0.0);
}

void check_fom_shapes(Eigen::Index n, const MatR& B, const MatR& C) {
  if (n <= 0) throw InvalidArgument("fom order must be positive");
  if (B.rows() != n || C.cols() != n) throw InvalidArgument("fom B or C does not match the order");
  if (B.cols() == 0 || C.rows() == 0) throw InvalidArgument("fom needs inputs and outputs");
}

}  // namespace

void AffineLtiFom::validate(bool check_spectrum) const {
  const auto n = A.rows();
  if (A.cols() != n || E.rows() != n || E.cols() != n)
    throw InvalidArgument("E and A must be square of equal size");
  check_fom_shapes(n, B, C);
  const MatR Ed = MatR(E);
  Eigen::PartialPivLU<MatR> lu(Ed);
  if (const double rc = lu_rcond(lu); !(rc >= kSingularRcond)) throw SingularOperator("E is singular", rc);
  if (!check_spectrum) return;
  Eigen::EigenSolver<MatR> es(lu.solve(MatR(A)), false);
  for (Eigen::Index i = 0; i < n; ++i) {
    const cplx l = es.eigenvalues()(i);
    const bool ok = time == TimeDomain::continuous ? l.real() < 0.0 : std::abs(l) < 1.0;
    if (!ok) throw DomainError("fom is not stable");
  }
}

MatC AffineLtiFom::resolvent_apply(cplx s, const MatC& rhs, bool adjoint) const {
  Eigen::SparseLU<SpMatC> lu;
  if (!adjoint) {
    factor_or_throw(lu, shifted(E, s, A, -1.0), "sE - A is singular");
  } else {
    const SpMat Et = E.transpose();
    const SpMat At = A.transpose();
    factor_or_throw(lu, shifted(Et, std::conj(s), At, -1.0), "sE - A is singular");
  }
  return lu.solve(rhs);
}

MatC AffineLtiFom::transfer(cplx s) const {
  return C.cast<cplx>() * resolvent_apply(s, B.cast<cplx>());
}

MatC AffineLtiFom::transfer_derivative(cplx s) const {
  Eigen::SparseLU<SpMatC> lu;
  factor_or_throw(lu, shifted(E, s, A, -1.0), "sE - A is singular");
  const MatC x = lu.solve(B.cast<cplx>());
  const MatC ex = E.cast<cplx>() * x;
  return -(C.cast<cplx>() * lu.solve(ex));
}

FomEvaluator AffineLtiFom::evaluator() const {
  FomEvaluator f;
  f.n_inputs = n_inputs();
  f.n_outputs = n_outputs();
  f.n_params = 1;
  f.evaluate = [fom = *this](const ParamPoint& p) { return fom.transfer(p[0]); };
  f.partials = [fom = *this](const ParamPoint& p) {
    return std::vector<MatC>{fom.transfer_derivative(p[0])};
  };
  return f;
}

void AffineStationaryFom::validate() const {
  const auto n = A1.rows();
  if (A1.cols() != n || A2.rows() != n || A2.cols() != n)
    throw InvalidArgument("A1 and A2 must be square of equal size");
  check_fom_shapes(n, B, C);
  if (!(a < b)) throw InvalidArgument("parameter interval needs a < b");
  for (int k = 0; k < 100; ++k) {
    const double p = a + (b - a) * k / 99.0;
    SpMat K = A1 + p * A2;
    K.makeCompressed();
    Eigen::SparseLU<SpMat> lu;
    factor_or_throw(lu, K, "A1 + p A2 is singular inside the parameter interval");
  }
}

MatR AffineStationaryFom::state(double p) const {
  SpMat K = A1 + p * A2;
  K.makeCompressed();
  Eigen::SparseLU<SpMat> lu;
  factor_or_throw(lu, K, "A1 + p A2 is singular");
  return lu.solve(B);
}

MatC AffineStationaryFom::output(cplx p) const {
  if (p.imag() == 0.0) return (C * state(p.real())).cast<cplx>();
  Eigen::SparseLU<SpMatC> lu;
  factor_or_throw(lu, shifted(A1, 1.0, A2, p), "A1 + p A2 is singular");
  return C.cast<cplx>() * lu.solve(B.cast<cplx>());
}

MatC AffineStationaryFom::output_derivative(cplx p) const {
  Eigen::SparseLU<SpMatC> lu;
  factor_or_throw(lu, shifted(A1, 1.0, A2, p), "A1 + p A2 is singular");
  const MatC x = lu.solve(B.cast<cplx>());
  const MatC ax = A2.cast<cplx>() * x;
  return -(C.cast<cplx>() * lu.solve(ax));
}

PoleResidue AffineStationaryFom::pole_residue() const {
  return pole_residue_affine_singular(MatR(A1), MatR(A2), B, C);
}

FomEvaluator AffineStationaryFom::evaluator() const {
  FomEvaluator f;
  f.n_inputs = n_inputs();
  f.n_outputs = n_outputs();
  f.n_params = 1;
  f.evaluate = [fom = *this](const ParamPoint& p) { return fom.output(p[0]); };
  f.partials = [fom = *this](const ParamPoint& p) {
    return std::vector<MatC>{fom.output_derivative(p[0])};
  };
  return f;
}

void KronParametricFom::validate() const {
  const auto& t = terms;
  const auto count = static_cast<Eigen::Index>(t.n_s()) * t.n_xi();
  if (count == 0 || t.left.cols() != count || t.right.cols() != count)
    throw InvalidArgument("Kronecker fom factor counts do not match the poles");
  for (int i = 0; i < t.n_s(); ++i)
    if (!(t.s_poles(i).real() < 0.0)) throw DomainError("s-pole outside the open left half-plane");
  for (int j = 0; j < t.n_xi(); ++j)
    if (!(std::abs(t.xi_poles(j)) > 1.0)) throw DomainError("xi-pole inside the closed unit disk");
}

FomEvaluator KronParametricFom::evaluator() const {
  FomEvaluator f;
  f.n_inputs = n_inputs();
  f.n_outputs = n_outputs();
  f.n_params = 2;
  f.evaluate = [t = terms](const ParamPoint& p) { return pole_residue_eval(t, p[0], p[1]); };
  f.partials = [t = terms](const ParamPoint& p) {
    return std::vector<MatC>{pole_residue_eval(t, p[0], p[1], Partial::ds),
                             pole_residue_eval(t, p[0], p[1], Partial::dxi)};
  };
  return f;
}

AffineLtiFom make_penzl() {
  constexpr int n = 1006;
  std::vector<Triplet> a;
  const double freq[3] = {100.0, 200.0, 400.0};
  for (int k = 0; k < 3; ++k) {
    const int o = 2 * k;
    a.emplace_back(o, o, -1.0);
    a.emplace_back(o, o + 1, freq[k]);
    a.emplace_back(o + 1, o, -freq[k]);
    a.emplace_back(o + 1, o + 1, -1.0);
  }
  for (int k = 0; k < 1000; ++k) a.emplace_back(6 + k, 6 + k, -(k + 1.0));

  AffineLtiFom fom;
  fom.A.resize(n, n);
  fom.A.setFromTriplets(a.begin(), a.end());
  fom.E.resize(n, n);
  fom.E.setIdentity();
  fom.B = MatR::Ones(n, 1);
  fom.B.topRows(6).setConstant(10.0);
  fom.C = fom.B.transpose();
  return fom;
}

AffineStationaryFom make_poisson(int cells_per_side) {
  if (cells_per_side < 4) throw InvalidArgument("cells_per_side must be at least 4");
  const int N = cells_per_side;
  const int side = N + 1;
  const int n = side * side;
  const double h = 1.0 / N;
  auto id = [side](int i, int j) { return j * side + i; };
  auto on_boundary = [N](int i, int j) { return i == 0 || j == 0 || i == N || j == N; };

  // Two-point Gauss rule on [0, 1]; exact for the cubic element integrands.
  const double g[2] = {0.5 - 0.5 / std::sqrt(3.0), 0.5 + 0.5 / std::sqrt(3.0)};
  const int loc[4][2] = {{0, 0}, {1, 0}, {0, 1}, {1, 1}};

  std::vector<Triplet> t1, t2;
  VecR load = VecR::Zero(n);
  for (int ey = 0; ey < N; ++ey) {
    for (int ex = 0; ex < N; ++ex) {
      double k1[4][4] = {}, k2[4][4] = {}, f[4] = {};
      for (double qx : g) {
        for (double qy : g) {
          const double z1 = (ex + qx) * h;
          const double w = 0.25 * h * h;
          double phi[4], gx[4], gy[4];
          for (int a = 0; a < 4; ++a) {
            const double bx = loc[a][0] ? qx : 1.0 - qx;
            const double by = loc[a][1] ? qy : 1.0 - qy;
            const double dx = loc[a][0] ? 1.0 : -1.0;
            const double dy = loc[a][1] ? 1.0 : -1.0;
            phi[a] = bx * by;
            gx[a] = dx * by / h;
            gy[a] = bx * dy / h;
          }
          for (int a = 0; a < 4; ++a) {
            f[a] += w * phi[a];
            for (int c = 0; c < 4; ++c) {
              const double s = gx[a] * gx[c] + gy[a] * gy[c];
              k1[a][c] += w * z1 * s;
              k2[a][c] += w * (1.0 - z1) * s;
            }
          }
        }
      }
      for (int a = 0; a < 4; ++a) {
        const int ia = ex + loc[a][0], ja = ey + loc[a][1];
        if (on_boundary(ia, ja)) continue;
        load(id(ia, ja)) += f[a];
        for (int c = 0; c < 4; ++c) {
          const int ic = ex + loc[c][0], jc = ey + loc[c][1];
          if (on_boundary(ic, jc)) continue;
          t1.emplace_back(id(ia, ja), id(ic, jc), k1[a][c]);
          t2.emplace_back(id(ia, ja), id(ic, jc), k2[a][c]);
        }
      }
    }
  }
  for (int j = 0; j < side; ++j)
    for (int i = 0; i < side; ++i)
      if (on_boundary(i, j)) t1.emplace_back(id(i, j), id(i, j), 1.0);

  AffineStationaryFom fom;
  fom.A1.resize(n, n);
  fom.A1.setFromTriplets(t1.begin(), t1.end());
  fom.A2.resize(n, n);
  fom.A2.setFromTriplets(t2.begin(), t2.end());
  fom.A1.makeCompressed();
  fom.A2.makeCompressed();
  fom.B = load;
  fom.C = load.transpose();
  fom.a = 0.1;
  fom.b = 10.0;
  return fom;
}

AffineLtiFom make_random_stable(int n, int n_inputs, int n_outputs, std::uint64_t seed,
                                TimeDomain time) {
  if (n < 1 || n_inputs < 1 || n_outputs < 1)
    throw InvalidArgument("random system dimensions must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto random = [&](int r, int c) {
    MatR m(r, c);
    for (int j = 0; j < c; ++j)
      for (int i = 0; i < r; ++i) m(i, j) = normal(rng);
    return m;
  };

  MatR A;
  if (time == TimeDomain::continuous) {
    const MatR M = random(n, n) / std::sqrt(static_cast<double>(n));
    const MatR S = random(n, n) / std::sqrt(static_cast<double>(n));
    A = (S - S.transpose()) - M * M.transpose() - 0.1 * MatR::Identity(n, n);
  } else {
    const MatR G = random(n, n) / std::sqrt(static_cast<double>(n));
    Eigen::EigenSolver<MatR> es(G, false);
    const double radius = std::max(es.eigenvalues().cwiseAbs().maxCoeff(), 1e-12);
    A = (0.8 / radius) * G;
  }
  AffineLtiFom fom;
  fom.time = time;
  fom.A = A.sparseView();
  fom.E.resize(n, n);
  fom.E.setIdentity();
  fom.B = random(n, n_inputs);
  fom.C = random(n_outputs, n);
  return fom;
}

namespace {

// Conjugation-closed pole set: reals first, then consecutive conjugate pairs.
// partner[k] is the index of conj(pole k).
void closed_poles(int count, bool xi_domain, std::mt19937_64& rng, VecC& poles,
                  std::vector<int>& partner) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int pairs = (count - (count % 2 == 0 ? 2 : 1)) / 2;
  const int reals = count - 2 * std::max(pairs, 0);
  poles.resize(count);
  partner.resize(static_cast<std::size_t>(count));
  int k = 0;
  for (; k < reals; ++k) {
    if (xi_domain) {
      const double mag = 1.5 + 1.5 * unit(rng);
      poles(k) = unit(rng) < 0.5 ? -mag : mag;
    } else {
      poles(k) = -(0.3 + 2.7 * unit(rng));
    }
    partner[static_cast<std::size_t>(k)] = k;
  }
  for (; k + 1 < count; k += 2) {
    cplx p;
    if (xi_domain) {
      const double mag = 1.5 + 1.5 * unit(rng);
      const double ang = (0.15 + 0.7 * unit(rng)) * std::numbers::pi;
      p = std::polar(mag, ang);
    } else {
      p = cplx{-(0.3 + 2.7 * unit(rng)), 0.5 + 2.5 * unit(rng)};
    }
    poles(k) = p;
    poles(k + 1) = std::conj(p);
    partner[static_cast<std::size_t>(k)] = k + 1;
    partner[static_cast<std::size_t>(k + 1)] = k;
  }
}

}  // namespace

KronParametricFom make_kron_parametric(int n_s_terms, int n_xi_terms, int n_inputs,
                                       int n_outputs, std::uint64_t seed) {
  if (n_s_terms < 1 || n_xi_terms < 1 || n_inputs < 1 || n_outputs < 1)
    throw InvalidArgument("Kronecker fom dimensions must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  KronParametricFom fom;
  auto& t = fom.terms;
  std::vector<int> ps, px;
  closed_poles(n_s_terms, false, rng, t.s_poles, ps);
  closed_poles(n_xi_terms, true, rng, t.xi_poles, px);
  const int count = n_s_terms * n_xi_terms;
  t.left.resize(n_outputs, count);
  t.right.resize(n_inputs, count);
  for (int i = 0; i < n_s_terms; ++i) {
    for (int j = 0; j < n_xi_terms; ++j) {
      const int c = t.index(i, j);
      const int m = t.index(ps[static_cast<std::size_t>(i)], px[static_cast<std::size_t>(j)]);
      if (m < c) {
        t.left.col(c) = t.left.col(m).conjugate();
        t.right.col(c) = t.right.col(m).conjugate();
        continue;
      }
      const bool real = m == c;
      for (int r = 0; r < n_outputs; ++r)
        t.left(r, c) = real ? cplx{normal(rng), 0.0} : cplx{normal(rng), normal(rng)};
      for (int r = 0; r < n_inputs; ++r)
        t.right(r, c) = real ? cplx{normal(rng), 0.0} : cplx{normal(rng), normal(rng)};
    }
  }
  return fom;
}

void gauss_legendre(int n, double a, double b, VecR& nodes, VecR& weights) {
  if (n < 1) throw InvalidArgument("Gauss-Legendre rule needs at least one node");
  nodes.resize(n);
  weights.resize(n);
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  // P_n(x) and P_n'(x) by the three-term recurrence.
  auto legendre = [n](double x) {
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    return std::pair<double, double>{p1, n * (x * p1 - p0) / (x * x - 1.0)};
  };
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      const auto [p, dp] = legendre(x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double dp = legendre(x).second;
    nodes(i) = mid - half * x;
    nodes(n - 1 - i) = mid + half * x;
    weights(i) = weights(n - 1 - i) = half * 2.0 / ((1.0 - x * x) * dp * dp);
  }
  if (n % 2 == 1) nodes(n / 2) = mid;
}

SampleSet sample_points(const FomEvaluator& fom, const std::vector<ParamPoint>& points,
                        const std::vector<double>& weights) {
  if (points.size() != weights.size()) throw InvalidArgument("points and weights differ in length");
  SampleSet s;
  s.n_params = fom.n_params;
  s.points = points;
  s.weights = weights;
  s.values.resize(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) s.values[i] = fom.evaluate(points[i]);
  s.validate();
  return s;
}

SampleSet sample_frequency_response(const FomEvaluator& fom, const std::vector<double>& freqs,
                                    const std::vector<double>& weights) {
  if (freqs.size() != weights.size()) throw InvalidArgument("frequencies and weights differ in length");
  if (freqs.empty()) throw InvalidArgument("no frequencies given");
  SampleSet s;
  s.n_params = 1;
  for (std::size_t i = 0; i < freqs.size(); ++i) {
    if (!(freqs[i] > 0.0)) throw InvalidArgument("frequencies must be positive");
    const cplx p{0.0, freqs[i]};
    const MatC v = fom.evaluate(ParamPoint(p));
    s.points.emplace_back(p);
    s.values.push_back(v);
    s.weights.push_back(weights[i]);
  }
  for (std::size_t i = 0; i < freqs.size(); ++i) {
    s.points.push_back(s.points[i].conj());
    s.values.push_back(s.values[i].conjugate());
    s.weights.push_back(weights[i]);
  }
  s.validate();
  return s;
}

SampleSet sample_frequency_response(const AffineLtiFom& fom, const std::vector<double>& freqs,
                                    const std::vector<double>& weights) {
  return sample_frequency_response(fom.evaluator(), freqs, weights);
}

SampleSet sample_stationary(const AffineStationaryFom& fom, int nodes) {
  if (nodes < 2) throw InvalidArgument("stationary sampling needs at least two nodes");
  VecR x, w;
  gauss_legendre(nodes, fom.a, fom.b, x, w);
  SampleSet s;
  s.n_params = 1;
  for (int i = 0; i < nodes; ++i) {
    s.points.emplace_back(cplx{x(i), 0.0});
    s.values.push_back((fom.C * fom.state(x(i))).cast<cplx>());
    s.weights.push_back(w(i));
  }
  s.validate();
  return s;
}

void imaginary_axis_rule(int n, double scale, std::vector<cplx>& points,
                         std::vector<double>& weights) {
  if (n < 2 || !(scale > 0.0)) throw InvalidArgument("imaginary-axis rule needs n >= 2, scale > 0");
  points.assign(static_cast<std::size_t>(n), cplx{});
  weights.assign(static_cast<std::size_t>(n), 0.0);
  const double dtheta = std::numbers::pi / n;
  for (int k = 0; k < n / 2; ++k) {
    const double theta = -0.5 * std::numbers::pi + (k + 0.5) * dtheta;
    const double c = std::cos(theta);
    const double omega = scale * std::tan(theta);
    const double w = scale * dtheta / (c * c) / (2.0 * std::numbers::pi);
    points[static_cast<std::size_t>(k)] = cplx{0.0, omega};
    points[static_cast<std::size_t>(n - 1 - k)] = cplx{0.0, -omega};
    weights[static_cast<std::size_t>(k)] = weights[static_cast<std::size_t>(n - 1 - k)] = w;
  }
  if (n % 2 == 1) {
    points[static_cast<std::size_t>(n / 2)] = cplx{0.0, 0.0};
    weights[static_cast<std::size_t>(n / 2)] = scale * dtheta / (2.0 * std::numbers::pi);
  }
}

void unit_circle_rule(int n, std::vector<cplx>& points, std::vector<double>& weights) {
  if (n < 2) throw InvalidArgument("unit-circle rule needs n >= 2");
  points.assign(static_cast<std::size_t>(n), cplx{});
  weights.assign(static_cast<std::size_t>(n), 1.0 / n);
  for (int k = 0; k < n / 2; ++k) {
    const double theta = 2.0 * std::numbers::pi * (k + 0.5) / n;
    const cplx z = std::polar(1.0, theta);
    points[static_cast<std::size_t>(k)] = z;
    points[static_cast<std::size_t>(n - 1 - k)] = std::conj(z);
  }
  if (n % 2 == 1) points[static_cast<std::size_t>(n / 2)] = cplx{-1.0, 0.0};
}

namespace {

// Samples on a rule whose point k mirrors point n-1-k; evaluates only half of
// the points so that closure under conjugation holds exactly.
SampleSet sample_mirrored_1d(const FomEvaluator& fom, const std::vector<cplx>& pts,
                             const std::vector<double>& w) {
  const std::size_t n = pts.size();
  SampleSet s;
  s.n_params = 1;
  s.weights = w;
  s.values.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    s.points.emplace_back(pts[k]);
    const std::size_t m = n - 1 - k;
    if (m < k) s.values[k] = s.values[m].conjugate();
    else s.values[k] = fom.evaluate(ParamPoint(pts[k]));
  }
  s.validate();
  return s;
}

}  // namespace

SampleSet sample_imaginary_axis(const FomEvaluator& fom, int n, double scale) {
  if (fom.n_params != 1) throw InvalidArgument("imaginary-axis sampling needs a one-parameter fom");
  std::vector<cplx> pts;
  std::vector<double> w;
  imaginary_axis_rule(n, scale, pts, w);
  return sample_mirrored_1d(fom, pts, w);
}

SampleSet sample_unit_circle(const FomEvaluator& fom, int n) {
  if (fom.n_params != 1) throw InvalidArgument("unit-circle sampling needs a one-parameter fom");
  std::vector<cplx> pts;
  std::vector<double> w;
  unit_circle_rule(n, pts, w);
  return sample_mirrored_1d(fom, pts, w);
}

SampleSet sample_product(const FomEvaluator& fom, int n_s, double s_scale, int n_xi) {
  if (fom.n_params != 2) throw InvalidArgument("product sampling needs a two-parameter fom");
  std::vector<cplx> sp, xp;
  std::vector<double> sw, xw;
  imaginary_axis_rule(n_s, s_scale, sp, sw);
  unit_circle_rule(n_xi, xp, xw);
  SampleSet s;
  s.n_params = 2;
  const std::size_t total = sp.size() * xp.size();
  s.values.resize(total);
  for (std::size_t k = 0; k < sp.size(); ++k) {
    for (std::size_t j = 0; j < xp.size(); ++j) {
      const std::size_t idx = k * xp.size() + j;
      const std::size_t mirror = (sp.size() - 1 - k) * xp.size() + (xp.size() - 1 - j);
      s.points.emplace_back(sp[k], xp[j]);
      s.weights.push_back(sw[k] * xw[j]);
      if (mirror < idx) s.values[idx] = s.values[mirror].conjugate();
      else s.values[idx] = fom.evaluate(s.points.back());
    }
  }
  s.validate();
  return s;
}

std::vector<double> logspace(double lo, double hi, int n) {
  if (n < 1 || !(lo > 0.0) || !(hi > 0.0)) throw InvalidArgument("logspace needs positive bounds");
  std::vector<double> out(static_cast<std::size_t>(n));
  const double a = std::log10(lo), b = std::log10(hi);
  for (int k = 0; k < n; ++k)
    out[static_cast<std::size_t>(k)] = n == 1 ? lo : std::pow(10.0, a + (b - a) * k / (n - 1));
  if (n > 1) {
    out.front() = lo;
    out.back() = hi;
  }
  return out;
}

}  // namespace l2rom
