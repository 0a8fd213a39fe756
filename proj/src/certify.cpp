// SPDX-License-Identifier: Apache-2.0
#include "l2rom/certify.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <string>

namespace l2rom {

std::string_view family_name(Family f) {
  switch (f) {
    case Family::h2_ct: return "H2_CT";
    case Family::h2_dt: return "H2_DT";
    case Family::h2l2: return "H2xL2";
    case Family::discrete_ls: return "DISCRETE_LS";
    case Family::stationary: return "STATIONARY";
  }
  return "UNKNOWN";
}

Family parse_family(std::string_view name) {
  std::string s;
  for (char c : name) s.push_back(c == '-' ? '_' : static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (s == "h2_ct" || s == "h2") return Family::h2_ct;
  if (s == "h2_dt") return Family::h2_dt;
  if (s == "h2xl2" || s == "h2l2") return Family::h2l2;
  if (s == "discrete_ls" || s == "ls") return Family::discrete_ls;
  if (s == "stationary") return Family::stationary;
  throw InvalidArgument("unknown certificate family '" + std::string(name) + "'");
}

double Certificate::max_residual() const {
  double m = 0.0;
  for (const auto& r : rows)
    for (double v : {r.right, r.left, r.hermite})
      if (!std::isnan(v)) m = std::max(m, v);
  return m;
}

void Certificate::finalize(double tol) {
  if (!(tol > 0.0)) throw InvalidArgument("certificate tolerance must be positive");
  tolerance = tol;
  pass = true;
  for (const auto& r : rows)
    for (double v : {r.right, r.left, r.hermite})
      if (!std::isnan(v) && !(v <= tol)) pass = false;
}

namespace {

constexpr double kNotApplicable = std::numeric_limits<double>::quiet_NaN();

template <typename Diff, typename Ref>
double relative(const Diff& diff, const Ref& ref) {
  return diff.norm() / std::max(ref.norm(), kResidualFloor);
}

double relative(cplx diff, cplx ref) { return std::abs(diff) / std::max(std::abs(ref), kResidualFloor); }

MatC fom_value(const FomEvaluator& fom, const ParamPoint& p) {
  if (!fom.evaluate) throw InvalidArgument("fom evaluator has no evaluation routine");
  return fom.evaluate(p);
}

void check_io(const FomEvaluator& fom, int n_outputs, int n_inputs) {
  if (fom.n_outputs != n_outputs || fom.n_inputs != n_inputs)
    throw InvalidArgument("fom and rom input/output sizes differ");
}

// Shared bitangential Hermite rows for the one-parameter transfer-function
// families; `mirror` maps a rom pole to its interpolation point.
template <typename Mirror>
Certificate tangential_rows(Family family, const FomEvaluator& fom, const PoleResidue& rom,
                            double tol, Mirror mirror) {
  if (fom.n_params != 1) throw InvalidArgument("certificate needs a one-parameter fom");
  check_io(fom, rom.n_outputs(), rom.n_inputs());
  Certificate cert;
  cert.family = family;
  for (int k = 0; k < rom.size(); ++k) {
    const cplx sigma = mirror(rom.poles(k));
    const ParamPoint p(sigma);
    const MatC H = fom_value(fom, p);
    const MatC Hr = pole_residue_eval(rom, sigma, 0);
    const MatC dH = fom_partial(fom, p, 0);
    const MatC dHr = pole_residue_eval(rom, sigma, 1);
    const VecC b = rom.right.col(k);
    const VecC c = rom.left.col(k);
    CertificateRow row;
    row.k = k;
    row.point = sigma;
    row.right = relative((H - Hr) * b, H * b);
    row.left = relative(c.adjoint() * (H - Hr), c.adjoint() * H);
    row.hermite = relative(c.dot((dH - dHr) * b), c.dot(dH * b));
    cert.rows.push_back(row);
  }
  cert.finalize(tol);
  return cert;
}

}  // namespace

Certificate h2_ct_residuals(const FomEvaluator& fom, const PoleResidue& rom, double tol) {
  for (int k = 0; k < rom.size(); ++k)
    if (!(rom.poles(k).real() < 0.0))
      throw DomainError("H2 certificate needs rom poles in the open left half-plane");
  return tangential_rows(Family::h2_ct, fom, rom, tol, [](cplx l) { return -std::conj(l); });
}

Certificate h2_dt_residuals(const FomEvaluator& fom, const PoleResidue& rom, double tol) {
  for (int k = 0; k < rom.size(); ++k)
    if (!(std::abs(rom.poles(k)) < 1.0))
      throw DomainError("discrete-time certificate needs rom poles inside the open unit disk");
  return tangential_rows(Family::h2_dt, fom, rom, tol, [](cplx l) { return 1.0 / std::conj(l); });
}

Certificate h2l2_residuals(const FomEvaluator& fom, const PoleResidue2D& rom, double tol) {
  if (fom.n_params != 2) throw InvalidArgument("H2xL2 certificate needs a two-parameter fom");
  check_io(fom, static_cast<int>(rom.left.rows()), static_cast<int>(rom.right.rows()));
  for (int i = 0; i < rom.n_s(); ++i)
    if (!(rom.s_poles(i).real() < 0.0))
      throw DomainError("H2xL2 certificate needs s-poles in the open left half-plane");
  for (int j = 0; j < rom.n_xi(); ++j)
    if (!(std::abs(rom.xi_poles(j)) > 1.0))
      throw DomainError("H2xL2 certificate needs xi-poles outside the closed unit disk");

  const int rs = rom.n_s(), rx = rom.n_xi();
  Certificate cert;
  cert.family = Family::h2l2;
  // Cache values and partials at every mirrored point pair.
  struct Eval {
    MatC H, Hr, dsH, dsHr, dxH, dxHr;
  };
  std::vector<Eval> ev(static_cast<std::size_t>(rs * rx));
  for (int k = 0; k < rs; ++k) {
    for (int l = 0; l < rx; ++l) {
      const cplx s = -std::conj(rom.s_poles(k));
      const cplx xi = 1.0 / std::conj(rom.xi_poles(l));
      const ParamPoint p(s, xi);
      std::vector<MatC> parts = fom.has_partials()
                                    ? fom.partials(p)
                                    : std::vector<MatC>{fom_partial(fom, p, 0), fom_partial(fom, p, 1)};
      auto& e = ev[static_cast<std::size_t>(rom.index(k, l))];
      e.H = fom_value(fom, p);
      e.Hr = pole_residue_eval(rom, s, xi);
      e.dsH = parts.at(0);
      e.dxH = parts.at(1);
      e.dsHr = pole_residue_eval(rom, s, xi, Partial::ds);
      e.dxHr = pole_residue_eval(rom, s, xi, Partial::dxi);

      const VecC b = rom.right.col(rom.index(k, l));
      const VecC c = rom.left.col(rom.index(k, l));
      CertificateRow row;
      row.k = k;
      row.l = l;
      row.point = s;
      row.point2 = xi;
      row.right = relative((e.H - e.Hr) * b, e.H * b);
      row.left = relative(c.adjoint() * (e.H - e.Hr), c.adjoint() * e.H);
      row.hermite = kNotApplicable;
      cert.rows.push_back(row);
    }
  }
  for (int k = 0; k < rs; ++k) {
    cplx full{}, reduced{};
    for (int j = 0; j < rx; ++j) {
      const int c = rom.index(k, j);
      const auto& e = ev[static_cast<std::size_t>(c)];
      const cplx w = 1.0 / std::conj(rom.xi_poles(j));
      full += w * rom.left.col(c).dot(e.dsH * rom.right.col(c));
      reduced += w * rom.left.col(c).dot(e.dsHr * rom.right.col(c));
    }
    CertificateRow row;
    row.k = k;
    row.point = -std::conj(rom.s_poles(k));
    row.right = row.left = kNotApplicable;
    row.hermite = relative(full - reduced, full);
    cert.rows.push_back(row);
  }
  for (int l = 0; l < rx; ++l) {
    cplx full{}, reduced{};
    for (int i = 0; i < rs; ++i) {
      const int c = rom.index(i, l);
      const auto& e = ev[static_cast<std::size_t>(c)];
      full += rom.left.col(c).dot(e.dxH * rom.right.col(c));
      reduced += rom.left.col(c).dot(e.dxHr * rom.right.col(c));
    }
    CertificateRow row;
    row.l = l;
    row.point2 = 1.0 / std::conj(rom.xi_poles(l));
    row.right = row.left = kNotApplicable;
    row.hermite = relative(full - reduced, full);
    cert.rows.push_back(row);
  }
  cert.finalize(tol);
  return cert;
}

namespace {

void check_off_nodes(const SampleSet& data, cplx s) {
  for (const auto& p : data.points)
    if (std::abs(s - p[0]) <= 1e-12 * (1.0 + std::abs(p[0])))
      throw DomainError("evaluation point coincides with a sample node");
}

std::vector<MatC> rom_values(const SampleSet& data, const PoleResidue& rom) {
  std::vector<MatC> out;
  out.reserve(data.size());
  for (const auto& p : data.points) out.push_back(pole_residue_eval(rom, p[0], 0));
  return out;
}

MatC cauchy_sum(const SampleSet& data, const std::vector<MatC>& values, cplx s, int order) {
  MatC out = MatC::Zero(values.front().rows(), values.front().cols());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const cplx w = 1.0 / (s - data.points[i][0]);
    out += data.weights[i] * (order == 0 ? w : -w * w) * values[i];
  }
  return out;
}

}  // namespace

MatC modified_ls_tf_eval(const SampleSet& data, const PoleResidue* rom, cplx s, int order) {
  if (order != 0 && order != 1) throw InvalidArgument("derivative order must be 0 or 1");
  if (data.n_params != 1) throw InvalidArgument("modified transfer functions need one-parameter data");
  data.validate();
  check_off_nodes(data, s);
  if (!rom) return cauchy_sum(data, data.values, s, order);
  return cauchy_sum(data, rom_values(data, *rom), s, order);
}

Certificate ls_residuals(const SampleSet& data, const PoleResidue& rom, double tol) {
  if (data.n_params != 1) throw InvalidArgument("least-squares certificate needs one-parameter data");
  data.validate();
  for (const auto& p : data.points)
    if (std::abs(p[0].real()) > 1e-14 * std::abs(p[0]))
      throw InvalidArgument("least-squares certificate needs samples on the imaginary axis");
  if (data.values.front().rows() != rom.n_outputs() || data.values.front().cols() != rom.n_inputs())
    throw InvalidArgument("sample and rom input/output sizes differ");

  const std::vector<MatC> reduced = rom_values(data, rom);
  Certificate cert;
  cert.family = Family::discrete_ls;
  for (int k = 0; k < rom.size(); ++k) {
    const cplx sigma = -std::conj(rom.poles(k));
    check_off_nodes(data, sigma);
    const MatC G = cauchy_sum(data, data.values, sigma, 0);
    const MatC Gr = cauchy_sum(data, reduced, sigma, 0);
    const MatC dG = cauchy_sum(data, data.values, sigma, 1);
    const MatC dGr = cauchy_sum(data, reduced, sigma, 1);
    const VecC b = rom.right.col(k);
    const VecC c = rom.left.col(k);

    CertificateRow row;
    row.k = k;
    row.point = sigma;
    row.right = relative((G - Gr) * b, G * b);
    row.left = relative(c.adjoint() * (G - Gr), c.adjoint() * G);
    row.hermite = relative(c.dot((dG - dGr) * b), c.dot(dG * b));
    cert.rows.push_back(row);

    // Direct weighted sums with denominators conj(p_i - lambda_k).
    VecC r1 = VecC::Zero(rom.n_outputs());
    Eigen::RowVectorXcd r2 = Eigen::RowVectorXcd::Zero(rom.n_inputs());
    cplx r3{};
    for (std::size_t i = 0; i < data.size(); ++i) {
      const cplx den = std::conj(data.points[i][0] - rom.poles(k));
      const MatC diff = data.values[i] - reduced[i];
      r1 += data.weights[i] / den * (diff * b);
      r2 += data.weights[i] / den * (c.adjoint() * diff);
      r3 += data.weights[i] / (den * den) * c.dot(diff * b);
    }
    cert.consistency = std::max(
        {cert.consistency, relative(r1 - (G - Gr) * b, G * b),
         relative(r2 - c.adjoint() * (G - Gr), c.adjoint() * G),
         relative(r3 + c.dot((dG - dGr) * b), c.dot(dG * b))});
  }
  cert.finalize(tol);
  return cert;
}

void Interval::validate() const {
  if (!(a < b) || !std::isfinite(a) || !std::isfinite(b))
    throw InvalidArgument("interval needs finite a < b");
}

namespace {

// ln|(x - b)/(x - a)|
double log_ratio(double a, double b, double x) {
  const double t = (a - b) / (x - a);
  if (std::abs(t) < 0.5) return std::log1p(t);
  return std::log(std::abs((x - b) / (x - a)));
}

double log_ratio_derivative(double a, double b, double x) { return (b - a) / ((x - a) * (x - b)); }

}  // namespace

double f_sigma_eval(double a, double b, double sigma, double p, int order) {
  if (order != 0 && order != 1) throw InvalidArgument("derivative order must be 0 or 1");
  if (!(a < b)) throw InvalidArgument("interval needs a < b");
  if (p == a || p == b || sigma == a || sigma == b)
    throw DomainError("f_sigma is undefined at the interval end points");

  auto value = [&](double x) {
    if (x == sigma) return (b - a) / ((sigma - a) * (sigma - b));
    const double scale = (b - a) / ((x - a) * (sigma - b));
    const double u = scale * (x - sigma);
    if (std::abs(u) < 0.5) return scale * std::log1p(u) / u;
    return std::log(std::abs(((x - b) * (sigma - a)) / ((x - a) * (sigma - b)))) / (x - sigma);
  };
  if (order == 0) return value(p);

  const double h = p - sigma;
  const double dist = std::min(std::abs(sigma - a), std::abs(sigma - b));
  if (std::abs(h) <= 1e-3 * dist) {
    // sum_k (k-1)/k! g^(k)(sigma) h^(k-2) with g = ln|(x-b)/(x-a)|
    double sum = 0.0, hp = 1.0, sign = -1.0;
    for (int k = 2; k <= 7; ++k) {
      const double bracket = std::pow(sigma - b, -k) - std::pow(sigma - a, -k);
      sum += sign * (k - 1.0) / k * bracket * hp;
      hp *= h;
      sign = -sign;
    }
    return sum;
  }
  return (log_ratio_derivative(a, b, p) - value(p)) / h;
}

namespace {

void check_real_poles(const PoleResidue& pr, const Interval& iv, const char* who) {
  const double margin = 1e-10 * (iv.b - iv.a);
  for (int j = 0; j < pr.size(); ++j) {
    const cplx l = pr.poles(j);
    if (std::abs(l.imag()) > 1e-10 * (1.0 + std::abs(l)))
      throw DomainError(std::string(who) + " has a non-real pole");
    if (l.real() >= iv.a - margin && l.real() <= iv.b + margin)
      throw DomainError(std::string(who) + " has a pole inside the parameter interval");
  }
}

}  // namespace

MatR modified_output_eval(const PoleResidue& pr, const Interval& interval, double p, int order) {
  interval.validate();
  if (order != 0 && order != 1) throw InvalidArgument("derivative order must be 0 or 1");
  if (p == interval.a || p == interval.b) throw DomainError("modified output undefined at the end points");
  check_real_poles(pr, interval, "pole-residue form");
  const double a = interval.a, b = interval.b;
  MatR out = (order == 0 ? log_ratio(a, b, p) : log_ratio_derivative(a, b, p)) * pr.constant.real();
  for (int j = 0; j < pr.size(); ++j)
    out += f_sigma_eval(a, b, pr.poles(j).real(), p, order) * pr.residue(j).real();
  return out;
}

MatR modified_output_eval(const PoleResidue& fom, const PoleResidue& rom, const Interval& interval,
                          double p, int order, OutputSide which) {
  return modified_output_eval(which == OutputSide::fom ? fom : rom, interval, p, order);
}

Certificate stationary_residuals(const PoleResidue& fom, const PoleResidue& rom,
                                 const Interval& interval, double tol) {
  interval.validate();
  check_real_poles(fom, interval, "fom");
  check_real_poles(rom, interval, "rom");
  if (fom.n_outputs() != rom.n_outputs() || fom.n_inputs() != rom.n_inputs())
    throw InvalidArgument("fom and rom input/output sizes differ");
  Certificate cert;
  cert.family = Family::stationary;
  for (int k = 0; k < rom.size(); ++k) {
    const double lambda = rom.poles(k).real();
    const MatR Y = modified_output_eval(fom, interval, lambda, 0);
    const MatR Yr = modified_output_eval(rom, interval, lambda, 0);
    const MatR dY = modified_output_eval(fom, interval, lambda, 1);
    const MatR dYr = modified_output_eval(rom, interval, lambda, 1);
    // Residue factors of a real pole can carry a common complex phase that
    // cancels in c b^*; undo it before taking real parts.
    VecC bc = rom.right.col(k), cc = rom.left.col(k);
    Eigen::Index idx = 0;
    cc.cwiseAbs().maxCoeff(&idx);
    const cplx phase = cc(idx) / std::abs(cc(idx));
    const VecR c = (cc / phase).real();
    const VecR bv = (bc / phase).real();
    CertificateRow row;
    row.k = k;
    row.point = lambda;
    row.right = relative((Y - Yr) * bv, Y * bv);
    row.left = relative(c.transpose() * (Y - Yr), c.transpose() * Y);
    row.hermite = relative(cplx{c.dot((dY - dYr) * bv)}, cplx{c.dot(dY * bv)});
    cert.rows.push_back(row);
  }
  cert.finalize(tol);
  return cert;
}

}  // namespace l2rom
