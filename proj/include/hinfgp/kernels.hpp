#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hinfgp/types.hpp"

namespace hinfgp {

using ParamMap = std::map<std::string, double>;

/// Hermitian/complementary covariance pair of a zero-mean z-domain Gaussian
/// process, valid on |z| >= domain_radius.
///
/// hermitian(z, w)     = E[f(z) f*(w)]
/// complementary(z, w) = E[f(z) f(w)]
///
/// Instances are immutable; evaluation is pure and thread-safe as long as the
/// wrapped callables are.
class ComplexKernel {
 public:
  ComplexKernel(std::string name, ScalarKernelFn hermitian,
                ScalarKernelFn complementary, ParamMap hyperparams = {},
                double domain_radius = 1.0);

  /// Throws DomainError when either argument lies inside the domain radius.
  [[nodiscard]] cplx hermitian(cplx z, cplx w) const;
  [[nodiscard]] cplx complementary(cplx z, cplx w) const;

  [[nodiscard]] bool in_domain(cplx z) const;
  [[nodiscard]] const std::string& name() const { return name_; }
  [[nodiscard]] const ParamMap& hyperparams() const { return hyperparams_; }
  [[nodiscard]] double domain_radius() const { return domain_radius_; }

 private:
  void check_domain(cplx z, cplx w) const;

  std::string name_;
  ScalarKernelFn hermitian_;
  ScalarKernelFn complementary_;
  ParamMap hyperparams_;
  double domain_radius_;
};

/// Nonnegative coefficients a_n^2 of a Hermitian-stationary H-infinity
/// process f(z) = sum a_n w_n z^-n. Closed forms keep their tag so that
/// kernels built from them use the analytic sum.
class StationarySequence {
 public:
  enum class Kind { geometric, exponential, explicit_list };

  static StationarySequence geometric(double alpha);
  static StationarySequence exponential();
  static StationarySequence explicit_list(std::vector<double> a_squared);

  [[nodiscard]] Kind kind() const { return kind_; }
  [[nodiscard]] double alpha() const { return alpha_; }

  /// a_n^2; zero past the end of an explicit list.
  [[nodiscard]] double a_squared(std::size_t n) const;
  /// sum of a_n = sqrt(a_n^2).
  [[nodiscard]] double sum_a() const;
  /// Number of stored coefficients for explicit lists; 0 for closed forms.
  [[nodiscard]] std::size_t explicit_length() const { return coeffs_.size(); }
  [[nodiscard]] const std::vector<double>& coefficients() const { return coeffs_; }
  [[nodiscard]] std::string describe() const;

 private:
  StationarySequence(Kind kind, double alpha, std::vector<double> coeffs);

  Kind kind_;
  double alpha_ = 0.0;
  std::vector<double> coeffs_;
};

/// Pole radius a in (0,1) and resonance frequency omega0 in [0, pi] of the
/// damped-cosine ("cozine") process.
struct CozineParams {
  double a = 0.5;
  double omega0 = 0.0;

  void validate() const;
};

enum class CovPart { hermitian, complementary };

/// zw*/(zw* - alpha) and zw/(zw - alpha).
ComplexKernel geometric_kernel(double alpha);

/// exp((zw*)^-1) and exp((zw)^-1): the sum of (zw*)^-n / n!.
ComplexKernel exponential_kernel();

/// sum a_n^2 (zw*)^-n and sum a_n^2 (zw)^-n. Closed-form sequences delegate to
/// geometric_kernel / exponential_kernel; explicit lists are summed directly.
ComplexKernel stationary_kernel(const StationarySequence& seq);

/// Covariances of the random second-order transfer function
///   f(z) = (X - a(X cos w0 - Y sin w0) z^-1) / (1 - 2a cos w0 z^-1 + a^2 z^-2).
ComplexKernel cozine_kernel(const CozineParams& p);

/// w1*k1 + w2*k2 for both covariance parts.
ComplexKernel mixture_kernel(const ComplexKernel& k1, double w1,
                             const ComplexKernel& k2, double w2);

/// s*k for both covariance parts (records "scale" in the hyperparameters).
ComplexKernel scaled_kernel(const ComplexKernel& k, double s);

/// Same Hermitian covariance, complementary covariance forced to zero (a
/// circular process). Not conjugate symmetric; used as a counterexample.
ComplexKernel circular_kernel(const ComplexKernel& k);

struct RealImagKernels {
  RealKernelFn real;  ///< 1/2 Re{k + k~}
  RealKernelFn imag;  ///< 1/2 Re{k - k~}
};

RealImagKernels real_imag_kernels(const ComplexKernel& k);

/// Gram matrix of one covariance part over `points`, with noise_var added to
/// the diagonal. The Hermitian part is made exactly Hermitian and the
/// complementary part exactly symmetric by mirroring the upper triangle.
Eigen::MatrixXcd gram(const ComplexKernel& k, std::span<const cplx> points,
                      CovPart part = CovPart::hermitian, double noise_var = 0.0);

/// Declarative kernel description: a name plus parameters, with child specs
/// for "mixture" and a coefficient list for "stationary_list".
///
/// Recognized names: geometric(alpha), exponential, cozine(a, omega0),
/// stationary_list(coefficients), mixture(components), h2, circular(base).
/// Any kernel accepts an optional "scale" multiplier.
struct KernelSpec {
  std::string name;
  ParamMap params;
  std::vector<double> coefficients;
  std::vector<std::pair<double, KernelSpec>> components;
};

ComplexKernel make_kernel(const KernelSpec& spec);

/// Stationary sequence behind a spec, when it has one (geometric,
/// exponential, stationary_list). Throws DomainError otherwise.
StationarySequence sequence_from_spec(const KernelSpec& spec);

}  // namespace hinfgp
