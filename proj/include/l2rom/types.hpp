// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace l2rom {

using cplx = std::complex<double>;
using MatC = Eigen::MatrixXcd;
using MatR = Eigen::MatrixXd;
using VecC = Eigen::VectorXcd;
using VecR = Eigen::VectorXd;

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed arguments: dimension or arity mismatch, bad tags, bad sizes.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A linear solve hit a (numerically) singular operator, typically because
/// the evaluation point coincides with a pole.
class SingularOperator : public Error {
 public:
  SingularOperator(const std::string& what, double rcond)
      : Error(what + " (reciprocal condition estimate " + std::to_string(rcond) + ")"),
        rcond_(rcond) {}
  double rcond() const noexcept { return rcond_; }

 private:
  double rcond_;
};

/// Pencil or matrix without a well-conditioned eigenbasis with simple eigenvalues.
class NotDiagonalizable : public Error {
 public:
  using Error::Error;
};

/// A precondition on pole locations, evaluation points or data closure failed.
class DomainError : public Error {
 public:
  using Error::Error;
};

}  // namespace l2rom
