// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace l2rom::cli {

enum ExitCode : int { kSuccess = 0, kCertificateFail = 1, kUsage = 2, kIo = 3 };

struct GenerateArgs {
  std::string model;
  std::string out;
  int order = 30;
  int inputs = 1;
  int outputs = 1;
  int cells = 32;
  int s_terms = 6;
  int xi_terms = 5;
  bool discrete = false;
  std::uint64_t seed = 1;
};

struct SampleArgs {
  std::string model;
  std::vector<std::string> spec;
  std::string out;
};

struct FitArgs {
  std::string samples;
  std::string structure = "lti";
  std::string init = "irka";
  std::string model;
  std::string init_file;
  std::string out;
  std::string trace;
  std::string optimizer = "lbfgs";
  int order = 2;
  int order_xi = 2;
  int max_iters = 2000;
  int restarts = 1;
  double tol = 1e-8;
  std::uint64_t seed = 1;
};

struct CertifyArgs {
  std::string input;
  std::string rom;
  std::string family;
  std::string out;
  double tol = 0.0;  ///< zero selects the family default
};

struct ReportArgs {
  std::vector<std::string> inputs;
  std::string out;
  int points = 400;
};

int generate(const GenerateArgs& args, std::ostream& log);
int sample(const SampleArgs& args, std::ostream& log);
int fit(const FitArgs& args, std::ostream& log);
int certify(const CertifyArgs& args, std::ostream& log);
int report(const ReportArgs& args, std::ostream& log);

}  // namespace l2rom::cli
