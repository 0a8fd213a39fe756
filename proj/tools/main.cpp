// SPDX-License-Identifier: Apache-2.0
#include <CLI11.hpp>

#include <functional>
#include <iostream>

#include "commands.hpp"
#include "l2rom/io.hpp"

namespace cli = l2rom::cli;

namespace {

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const l2rom::io::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kIo;
  } catch (const l2rom::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kUsage;
  } catch (const std::bad_alloc&) {
    std::cerr << "error: out of memory\n";
    return cli::kIo;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structured L2-optimal reduced models: generate, sample, fit, certify, report"};
  app.set_config("--config", "", "Read option defaults from a TOML/INI file");
  app.require_subcommand(1);

  cli::GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Write a full-order model file");
  g->add_option("model", gen.model, "penzl | poisson | random-lti | kron-parametric")->required();
  g->add_option("-o,--out", gen.out, "Output model file")->required();
  g->add_option("-r,--order", gen.order, "State dimension of random-lti")->check(CLI::PositiveNumber);
  g->add_option("--inputs", gen.inputs, "Inputs of random-lti and kron-parametric")
      ->check(CLI::PositiveNumber);
  g->add_option("--outputs", gen.outputs, "Outputs of random-lti and kron-parametric")
      ->check(CLI::PositiveNumber);
  g->add_option("--cells", gen.cells, "Cells per side of the poisson mesh");
  g->add_option("--s-terms", gen.s_terms, "s-terms of kron-parametric")->check(CLI::PositiveNumber);
  g->add_option("--xi-terms", gen.xi_terms, "xi-terms of kron-parametric")
      ->check(CLI::PositiveNumber);
  g->add_flag("--discrete", gen.discrete, "Discrete-time random-lti");
  g->add_option("--seed", gen.seed, "Generator seed");

  cli::SampleArgs smp;
  auto* s = app.add_subcommand("sample", "Sample a model into a weighted data set");
  s->add_option("model", smp.model, "Model file")->required();
  s->add_option("spec", smp.spec,
                "Sampler: 'logspace LO HI N', 'axis N [SCALE]', 'circle N', 'gauss N', "
                "'product NS SCALE NXI'")
      ->required();
  s->add_option("-o,--out", smp.out, "Output samples file")->required();

  cli::FitArgs fit;
  auto* f = app.add_subcommand("fit", "Fit a structured rom to samples");
  f->add_option("samples", fit.samples, "Samples file")->required();
  f->add_option("--structure", fit.structure, "lti | lti-dt | kron | stationary");
  f->add_option("--init", fit.init, "irka | rb | random | file");
  f->add_option("--model", fit.model, "Model file for irka and rb initialisation");
  f->add_option("--init-file", fit.init_file, "Rom file for --init file");
  f->add_option("-r,--order", fit.order, "Rom order (s-order for kron)");
  f->add_option("--order-xi", fit.order_xi, "xi-order of a kron rom");
  f->add_option("--tol", fit.tol, "Relative gradient tolerance")->check(CLI::PositiveNumber);
  f->add_option("--max-iters", fit.max_iters, "Iteration limit")->check(CLI::NonNegativeNumber);
  f->add_option("--optimizer", fit.optimizer, "lbfgs | steepest");
  f->add_option("--restarts", fit.restarts, "Random restarts, keeping the lowest objective");
  f->add_option("--seed", fit.seed, "Seed of random initialisation");
  f->add_option("-o,--out", fit.out, "Output rom file")->required();
  f->add_option("--trace", fit.trace, "Output trace file (default: <out>.trace.json)");

  cli::CertifyArgs cert;
  auto* c = app.add_subcommand("certify", "Check first-order optimality conditions of a rom");
  c->add_option("input", cert.input, "Model file, or samples file for discrete-ls")->required();
  c->add_option("rom", cert.rom, "Rom file")->required();
  c->add_option("--family", cert.family, "h2-ct | h2-dt | h2xl2 | discrete-ls | stationary")
      ->required();
  c->add_option("--tol", cert.tol, "Residual tolerance (default 1e-6, 1e-4 for h2xl2)")
      ->check(CLI::PositiveNumber);
  c->add_option("-o,--out", cert.out, "Output certificate file");

  cli::ReportArgs rep;
  auto* r = app.add_subcommand("report", "Write plot-ready columns for certificates and traces");
  r->add_option("inputs", rep.inputs, "Certificate and trace files");
  r->add_option("-o,--out", rep.out, "Output text file (default: standard output)");
  r->add_option("--points", rep.points, "Grid points per curve");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return cli::kUsage;
  }

  if (g->parsed()) return guarded([&] { return cli::generate(gen, std::cout); });
  if (s->parsed()) return guarded([&] { return cli::sample(smp, std::cout); });
  if (f->parsed()) return guarded([&] { return cli::fit(fit, std::cout); });
  if (c->parsed()) return guarded([&] { return cli::certify(cert, std::cout); });
  return guarded([&] { return cli::report(rep, std::cout); });
}
