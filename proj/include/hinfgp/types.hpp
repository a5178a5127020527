#pragma once

#include <complex>
#include <functional>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace hinfgp {

using cplx = std::complex<double>;

using ScalarKernelFn = std::function<cplx(cplx, cplx)>;
using RealKernelFn = std::function<double(cplx, cplx)>;

/// Parameter or argument outside the region where an operation is defined.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A matrix could not be factorized, or is too close to singular to trust.
class ConditioningError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Evaluation hit a pole of a rational kernel or transfer function.
class SingularPointError : public DomainError {
 public:
  using DomainError::DomainError;
};

inline constexpr double kPi = 3.14159265358979323846;

}  // namespace hinfgp
