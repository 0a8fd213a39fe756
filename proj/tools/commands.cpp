// SPDX-License-Identifier: Apache-2.0
#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "l2rom/certify.hpp"
#include "l2rom/io.hpp"
#include "l2rom/models.hpp"
#include "l2rom/optimize.hpp"

namespace l2rom::cli {

namespace fs = std::filesystem;

namespace {

class UsageError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

std::string format_complex(cplx z) {
  if (z.imag() == 0.0) return fmt::format("{:.10g}", z.real());
  return fmt::format("{:.10g}{:+.10g}i", z.real(), z.imag());
}

std::string join_poles(const VecC& poles) {
  std::string out;
  for (Eigen::Index i = 0; i < poles.size(); ++i) {
    if (i) out += ", ";
    out += format_complex(poles(i));
  }
  return out;
}

std::string default_trace_path(const std::string& out) {
  fs::path p(out);
  p.replace_extension();
  return p.string() + ".trace.json";
}

template <typename T>
const T& expect_model(const io::Model& m, const char* what) {
  if (const T* p = std::get_if<T>(&m)) return *p;
  throw UsageError(std::string("expected a ") + what + " model");
}

double parse_number(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || !std::isfinite(v)) throw UsageError("not a number: '" + s + "'");
  return v;
}

int parse_count(const std::string& s) {
  const double v = parse_number(s);
  if (v < 1 || v != std::floor(v) || v > 1e7) throw UsageError("not a positive count: '" + s + "'");
  return static_cast<int>(v);
}

std::vector<std::string> tokens(const std::vector<std::string>& parts) {
  std::vector<std::string> out;
  for (const auto& p : parts) {
    std::istringstream in(p);
    for (std::string t; in >> t;) out.push_back(t);
  }
  return out;
}

SampleSet draw_samples(const io::Model& model, const std::vector<std::string>& spec) {
  if (spec.empty()) throw UsageError("empty sampler specification");
  const std::string& rule = spec[0];
  auto need = [&](std::size_t lo, std::size_t hi) {
    if (spec.size() - 1 < lo || spec.size() - 1 > hi)
      throw UsageError("wrong number of arguments for sampler '" + rule + "'");
  };
  if (rule == "logspace") {
    need(3, 3);
    const auto& fom = expect_model<AffineLtiFom>(model, "state-space");
    const double lo = parse_number(spec[1]), hi = parse_number(spec[2]);
    if (!(lo > 0.0 && hi > lo)) throw UsageError("logspace needs 0 < lo < hi");
    const auto freqs = logspace(lo, hi, parse_count(spec[3]));
    return sample_frequency_response(fom, freqs, std::vector<double>(freqs.size(), 1.0));
  }
  if (rule == "axis") {
    need(1, 2);
    const auto& fom = expect_model<AffineLtiFom>(model, "state-space");
    const double scale = spec.size() > 2 ? parse_number(spec[2]) : 1.0;
    if (!(scale > 0.0)) throw UsageError("axis scale must be positive");
    return sample_imaginary_axis(fom.evaluator(), parse_count(spec[1]), scale);
  }
  if (rule == "circle") {
    need(1, 1);
    return sample_unit_circle(expect_model<AffineLtiFom>(model, "state-space").evaluator(),
                              parse_count(spec[1]));
  }
  if (rule == "gauss") {
    need(1, 1);
    const int n = parse_count(spec[1]);
    if (n < 2) throw UsageError("gauss needs at least two nodes");
    return sample_stationary(expect_model<AffineStationaryFom>(model, "stationary"), n);
  }
  if (rule == "product") {
    need(3, 3);
    const auto& fom = expect_model<KronParametricFom>(model, "kron-parametric");
    const double scale = parse_number(spec[2]);
    if (!(scale > 0.0)) throw UsageError("product scale must be positive");
    return sample_product(fom.evaluator(), parse_count(spec[1]), scale, parse_count(spec[3]));
  }
  throw UsageError("unknown sampler '" + rule + "' (logspace, axis, circle, gauss, product)");
}

std::string describe_poles(const StructuredRom& rom) {
  if (rom.structure == RomStructure::kron) {
    const PoleResidue2D pr = kron_pole_residue(rom);
    return "s-poles: " + join_poles(pr.s_poles) + "\nxi-poles: " + join_poles(pr.xi_poles);
  }
  return "poles: " + join_poles(pole_residue(rom).poles);
}

StructuredRom initial_rom(const FitArgs& args, RomStructure structure, const SampleSet& data,
                          std::ostream& log) {
  const int ni = data.values.front().cols();
  const int no = data.values.front().rows();
  if (args.init == "random")
    return random_rom(structure, args.order, ni, no, args.seed, args.order_xi);
  if (args.init == "file") {
    if (args.init_file.empty()) throw UsageError("--init file needs --init-file");
    StructuredRom rom = io::read_rom(args.init_file);
    if (rom.structure != structure) throw UsageError("initial rom has a different structure");
    return rom;
  }
  if (args.model.empty()) throw UsageError("--init " + args.init + " needs --model");
  const io::Model model = io::read_model(args.model);
  if (args.init == "irka") {
    if (structure != RomStructure::lti && structure != RomStructure::lti_dt)
      throw UsageError("irka initialises lti and lti-dt roms only");
    const auto& fom = expect_model<AffineLtiFom>(model, "state-space");
    if ((fom.time == TimeDomain::discrete) != (structure == RomStructure::lti_dt))
      throw UsageError("model time domain does not match the rom structure");
    const IrkaResult res = irka_init(fom, args.order);
    log << fmt::format("irka: {} after {} sweeps (pole change {:.3e})\n",
                       res.converged ? "converged" : "not converged", res.iterations,
                       res.pole_change);
    return res.rom;
  }
  if (args.init == "rb") {
    if (structure != RomStructure::stationary) throw UsageError("rb initialises stationary roms only");
    const auto& fom = expect_model<AffineStationaryFom>(model, "stationary");
    const GreedyResult res = greedy_rb_init(fom, args.order, logspace(fom.a, fom.b, 100));
    if (res.truncated) log << "rb: " << res.warning << "\n";
    return res.rom;
  }
  throw UsageError("unknown init '" + args.init + "' (irka, rb, random, file)");
}

bool family_matches(Family f, RomStructure s) {
  switch (f) {
    case Family::h2_ct:
    case Family::discrete_ls: return s == RomStructure::lti;
    case Family::h2_dt: return s == RomStructure::lti_dt;
    case Family::h2l2: return s == RomStructure::kron;
    case Family::stationary: return s == RomStructure::stationary;
  }
  return false;
}

double default_tolerance(Family f) { return f == Family::h2l2 ? 1e-4 : 1e-6; }

Certificate compute_certificate(Family family, const std::string& input, const StructuredRom& rom,
                                double tol) {
  if (family == Family::discrete_ls) return ls_residuals(io::read_samples(input), pole_residue(rom), tol);
  const io::Model model = io::read_model(input);
  switch (family) {
    case Family::h2_ct:
    case Family::h2_dt: {
      const auto& fom = expect_model<AffineLtiFom>(model, "state-space");
      const bool discrete = family == Family::h2_dt;
      if ((fom.time == TimeDomain::discrete) != discrete)
        throw UsageError("model time domain does not match the certificate family");
      return discrete ? h2_dt_residuals(fom.evaluator(), pole_residue(rom), tol)
                      : h2_ct_residuals(fom.evaluator(), pole_residue(rom), tol);
    }
    case Family::h2l2:
      return h2l2_residuals(expect_model<KronParametricFom>(model, "kron-parametric").evaluator(),
                            kron_pole_residue(rom), tol);
    case Family::stationary: {
      const auto& fom = expect_model<AffineStationaryFom>(model, "stationary");
      return stationary_residuals(fom.pole_residue(), pole_residue(rom), Interval{fom.a, fom.b}, tol);
    }
    default: break;
  }
  throw UsageError("unsupported certificate family");
}

std::string residual_text(double v) { return std::isnan(v) ? "-" : fmt::format("{:.3e}", v); }

// Section writers for the report.  Every block starts with '#' header lines
// and blocks are separated by two blank lines.

void report_rows(const Certificate& c, std::ostream& out) {
  out << "# rows: k l re(point) im(point) re(point2) im(point2) right left hermite\n";
  for (const auto& r : c.rows)
    out << fmt::format("{} {} {:.17g} {:.17g} {:.17g} {:.17g} {} {} {}\n", r.k, r.l,
                       r.point.real(), r.point.imag(), r.point2.real(), r.point2.imag(),
                       residual_text(r.right), residual_text(r.left), residual_text(r.hermite));
}

void report_ls(const SampleSet& data, const StructuredRom& rom, int points, std::ostream& out) {
  const PoleResidue pr = pole_residue(rom);
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (Eigen::Index k = 0; k < pr.poles.size(); ++k) {
    const double m = std::abs(pr.poles(k));
    lo = std::min(lo, std::abs(pr.poles(k).real()));
    hi = std::max(hi, m);
  }
  if (!(lo > 0.0) || !std::isfinite(lo)) lo = 1e-2;
  if (!(hi > 0.0)) hi = 1.0;
  out << "\n\n# modified transfer functions on the positive real axis, entry (1,1)\n"
         "# s G Ghat G-Ghat\n";
  for (double s : logspace(lo / 10.0, hi * 10.0, points)) {
    const cplx g = modified_ls_tf_eval(data, nullptr, s)(0, 0);
    const cplx gh = modified_ls_tf_eval(data, &pr, s)(0, 0);
    out << fmt::format("{:.10e} {:.10e} {:.10e} {:.10e}\n", s, g.real(), gh.real(),
                       (g - gh).real());
  }
  out << "\n\n# mirrored poles -conj(lambda_k)\n# re im G Ghat G-Ghat\n";
  for (Eigen::Index k = 0; k < pr.poles.size(); ++k) {
    const cplx mu = -std::conj(pr.poles(k));
    const cplx g = modified_ls_tf_eval(data, nullptr, mu)(0, 0);
    const cplx gh = modified_ls_tf_eval(data, &pr, mu)(0, 0);
    out << fmt::format("{:.10e} {:.10e} {:.10e} {:.10e} {:.3e}\n", mu.real(), mu.imag(), g.real(),
                       gh.real(), std::abs(g - gh));
  }
}

void report_stationary(const AffineStationaryFom& fom, const StructuredRom& rom, int points,
                       std::ostream& out) {
  const PoleResidue fpr = fom.pole_residue();
  const PoleResidue rpr = pole_residue(rom);
  const Interval iv{fom.a, fom.b};
  double lo = 0.0;
  for (Eigen::Index k = 0; k < rpr.poles.size(); ++k) lo = std::min(lo, rpr.poles(k).real());
  lo = lo < 0.0 ? 1.5 * lo : iv.a - (iv.b - iv.a);
  const double hi = std::min(iv.a, 0.0) - 0.02 * (std::min(iv.a, 0.0) - lo);
  auto y = [&](double p, OutputSide side) {
    return modified_output_eval(fpr, rpr, iv, p, 0, side)(0, 0);
  };
  out << "\n\n# modified outputs left of the interval, entry (1,1)\n# p Y Yhat Y-Yhat\n";
  for (int i = 0; i < points; ++i) {
    const double p = lo + (hi - lo) * i / std::max(points - 1, 1);
    const double a = y(p, OutputSide::fom), b = y(p, OutputSide::rom);
    out << fmt::format("{:.10e} {:.10e} {:.10e} {:.10e}\n", p, a, b, a - b);
  }
  out << "\n\n# rom poles lambda_k\n# p Y Yhat Y-Yhat\n";
  for (Eigen::Index k = 0; k < rpr.poles.size(); ++k) {
    const double p = rpr.poles(k).real();
    const double a = y(p, OutputSide::fom), b = y(p, OutputSide::rom);
    out << fmt::format("{:.10e} {:.10e} {:.10e} {:.3e}\n", p, a, b, a - b);
  }
}

void report_certificate(const std::string& path, int points, std::ostream& out) {
  const io::CertificateFile file = io::read_certificate(path);
  const Certificate& c = file.certificate;
  out << fmt::format("# certificate {} family {} tolerance {:.3e} max residual {:.3e} {}\n", path,
                     family_name(c.family), c.tolerance, c.max_residual(),
                     c.pass ? "PASS" : "FAIL");
  report_rows(c, out);
  if (c.family != Family::discrete_ls && c.family != Family::stationary) return;
  if (file.data_path.empty() || file.rom_path.empty())
    throw io::FormatError(path + ": certificate does not name its inputs");
  const StructuredRom rom = io::read_rom(file.rom_path);
  if (c.family == Family::discrete_ls)
    report_ls(io::read_samples(file.data_path), rom, points, out);
  else
    report_stationary(expect_model<AffineStationaryFom>(io::read_model(file.data_path), "stationary"),
                      rom, points, out);
}

void report_trace(const std::string& path, std::ostream& out) {
  const FitTrace t = io::read_trace(path);
  out << fmt::format("# trace {} converged {} ({})\n# step J grad_norm alpha\n", path,
                     t.converged ? "yes" : "no", t.message);
  for (std::size_t i = 0; i < t.iterations.size(); ++i) {
    const auto& it = t.iterations[i];
    out << fmt::format("{} {:.17g} {:.17g} {:.17g}\n", i, it.objective, it.grad_norm, it.step);
  }
}

}  // namespace

int generate(const GenerateArgs& args, std::ostream& log) {
  io::Model model;
  if (args.model == "penzl") {
    model = make_penzl();
  } else if (args.model == "poisson") {
    if (args.cells < 4) throw UsageError("--cells must be at least 4");
    model = make_poisson(args.cells);
  } else if (args.model == "random-lti") {
    model = make_random_stable(args.order, args.inputs, args.outputs, args.seed,
                               args.discrete ? TimeDomain::discrete : TimeDomain::continuous);
  } else if (args.model == "kron-parametric") {
    model = make_kron_parametric(args.s_terms, args.xi_terms, args.inputs, args.outputs, args.seed);
  } else {
    throw UsageError("unknown model '" + args.model +
                     "' (penzl, poisson, random-lti, kron-parametric)");
  }
  io::write_model(args.out, model);
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, KronParametricFom>)
          log << fmt::format("{}: {} x {} terms, inputs {}, outputs {}\n", args.model,
                             m.terms.n_s(), m.terms.n_xi(), m.n_inputs(), m.n_outputs());
        else
          log << fmt::format("{}: n = {}, inputs {}, outputs {}\n", args.model, m.order(),
                             m.n_inputs(), m.n_outputs());
      },
      model);
  return kSuccess;
}

int sample(const SampleArgs& args, std::ostream& log) {
  const io::Model model = io::read_model(args.model);
  const SampleSet s = draw_samples(model, tokens(args.spec));
  io::write_samples(args.out, s);
  const ClosureReport closure = check_conjugation_closure(s);
  log << fmt::format("N = {}\nclosed under conjugation: {}\n", s.size(),
                     closure.closed ? "yes" : "no");
  return kSuccess;
}

int fit(const FitArgs& args, std::ostream& log) {
  if (args.order < 1 || args.order_xi < 1) throw UsageError("rom orders must be positive");
  if (args.restarts < 1) throw UsageError("--restarts must be positive");
  const RomStructure structure = io::parse_structure(args.structure);
  if (structure == RomStructure::generic) throw UsageError("generic roms are not fitted");
  const SampleSet data = io::read_samples(args.samples);
  if (data.size() == 0) throw UsageError("no samples");
  if ((structure == RomStructure::kron) != (data.n_params == 2))
    throw UsageError("sample dimension does not match the rom structure");

  FitOptions opts;
  opts.max_iters = args.max_iters;
  opts.grad_tol = args.tol;
  if (args.optimizer == "steepest")
    opts.kind = OptimizerKind::steepest_descent;
  else if (args.optimizer != "lbfgs")
    throw UsageError("unknown optimizer '" + args.optimizer + "'");
  opts.validate();

  if (args.restarts > 1 && args.init != "random")
    throw UsageError("--restarts only applies to --init random");
  FitTrace best;
  bool have = false;
  for (int k = 0; k < args.restarts; ++k) {
    FitArgs a = args;
    a.seed = args.seed + static_cast<std::uint64_t>(k);
    FitTrace t = l2rom::fit(initial_rom(a, structure, data, log), data, opts);
    if (args.restarts > 1)
      log << fmt::format("restart {}: J = {:.10e}\n", k + 1, t.final_objective());
    if (!have || t.final_objective() < best.final_objective()) {
      best = std::move(t);
      have = true;
    }
  }
  io::write_rom(args.out, best.rom);
  io::write_trace(args.trace.empty() ? default_trace_path(args.out) : args.trace, best);
  log << fmt::format("J = {:.10e}\ngradient norm = {:.3e} (relative {:.3e})\n",
                     best.final_objective(), best.final_grad_norm(),
                     best.final_grad_norm() / std::max(best.initial_grad_norm(), 1e-300));
  log << fmt::format("converged: {} ({}, {} steps)\n", best.converged ? "yes" : "no",
                     best.message, best.accepted_steps());
  log << describe_poles(best.rom) << "\n";
  return kSuccess;
}

int certify(const CertifyArgs& args, std::ostream& log) {
  const Family family = parse_family(args.family);
  const double tol = args.tol > 0.0 ? args.tol : default_tolerance(family);
  const StructuredRom rom = io::read_rom(args.rom);
  if (!family_matches(family, rom.structure))
    throw UsageError("family " + std::string(family_name(family)) + " does not apply to a " +
                     std::string(io::structure_name(rom.structure)) + " rom");
  const Certificate c = compute_certificate(family, args.input, rom, tol);
  if (!args.out.empty())
    io::write_certificate(args.out, {c, fs::absolute(args.input).string(),
                                     fs::absolute(args.rom).string()});
  log << fmt::format("family {}: {} conditions, max residual {:.3e}, tolerance {:.1e}\n",
                     family_name(family), c.rows.size(), c.max_residual(), tol);
  if (family == Family::discrete_ls) log << fmt::format("consistency {:.3e}\n", c.consistency);
  log << (c.pass ? "PASS\n" : "FAIL\n");
  return c.pass ? kSuccess : kCertificateFail;
}

int report(const ReportArgs& args, std::ostream& log) {
  if (args.inputs.empty()) throw UsageError("report needs at least one input");
  if (args.points < 2) throw UsageError("--points must be at least 2");
  std::ostringstream out;
  for (std::size_t i = 0; i < args.inputs.size(); ++i) {
    if (i) out << "\n\n";
    const std::string& path = args.inputs[i];
    switch (io::read_kind(path)) {
      case io::Kind::certificate: report_certificate(path, args.points, out); break;
      case io::Kind::trace: report_trace(path, out); break;
      default: throw UsageError(path + ": report takes certificate and trace files");
    }
  }
  if (args.out.empty() || args.out == "-") {
    log << out.str();
  } else {
    io::write_text_atomic(args.out, out.str());
    log << "wrote " << args.out << "\n";
  }
  return kSuccess;
}

}  // namespace l2rom::cli
