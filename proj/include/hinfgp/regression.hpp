#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "hinfgp/kernels.hpp"
#include "hinfgp/types.hpp"

namespace hinfgp {

/// Noisy frequency-response observations y_i = g(z_i) + e_i, with circular
/// complex noise E|e_i|^2 = noise_var, or site_noise_var[i] when per-site
/// variances are given.
struct FrequencyDataset {
  std::vector<cplx> sites;
  std::vector<cplx> responses;
  double noise_var = 0.0;
  std::vector<double> site_noise_var;  ///< empty, or one variance per site

  [[nodiscard]] std::size_t size() const { return sites.size(); }
  [[nodiscard]] double noise_at(std::size_t i) const {
    return site_noise_var.empty() ? noise_var : site_noise_var[i];
  }

  /// Throws DomainError on length mismatch, empty data, sites inside the unit
  /// circle or negative noise; ConditioningError on repeated sites without noise.
  void validate() const;
};

/// Fitted strictly linear regression state. Immutable after construction and
/// safe to share between threads for prediction.
class Posterior {
 public:
  Posterior(ComplexKernel kernel, FrequencyDataset data);

  [[nodiscard]] const ComplexKernel& kernel() const { return kernel_; }
  [[nodiscard]] const FrequencyDataset& dataset() const { return data_; }
  /// K_yy including noise (and jitter, if any was needed).
  [[nodiscard]] const Eigen::MatrixXcd& gram() const { return gram_; }
  [[nodiscard]] const Eigen::LLT<Eigen::MatrixXcd>& factorization() const { return llt_; }
  /// K_yy^-1 y
  [[nodiscard]] const Eigen::VectorXcd& weights() const { return weights_; }
  [[nodiscard]] double log_det() const;
  [[nodiscard]] double jitter() const { return jitter_; }

 private:
  ComplexKernel kernel_;
  FrequencyDataset data_;
  Eigen::MatrixXcd gram_;
  Eigen::LLT<Eigen::MatrixXcd> llt_;
  Eigen::VectorXcd weights_;
  double jitter_ = 0.0;
};

/// Factorizes K_yy = K + diag(noise) once. If the Cholesky factorization
/// fails, 1e-10 * mean(diag) is added to the diagonal and the factorization
/// retried once before a ConditioningError is raised.
Posterior fit(const ComplexKernel& kernel, const FrequencyDataset& data);

struct Prediction {
  cplx mean;
  double variance;  ///< Hermitian predictive variance, clamped at 0
};

/// mean = K_xy^H K_yy^-1 y, variance = k(z,z) - K_xy^H K_yy^-1 K_xy.
Prediction predict_sl(const Posterior& post, cplx z);

struct SchurComplement {
  Eigen::MatrixXcd P;
  double relative_norm = 0.0;  ///< ||P||_2 / ||K_yy||_2
};

/// P = K_yy - K~_yy (K_yy*)^-1 K~_yy*, the error covariance of estimating y*
/// from y under the prior. The complementary Gram carries no noise term.
SchurComplement schur_P(const Posterior& post);

struct WidelyLinearPrediction {
  cplx mean;
  double hermitian_var = 0.0;
  cplx complementary_var{0.0, 0.0};
  bool fell_back = false;  ///< P was negligible; strictly linear result returned
};

/// Widely linear (y and y*) predictor. P is eigen-decomposed once and its
/// eigenvalues floored at p_floor * ||P||_2 before inversion. If ||P||_2 is
/// itself below p_floor * ||K_yy||_2 the predictor falls back to the strictly
/// linear estimator and flags it.
class WidelyLinearPredictor {
 public:
  explicit WidelyLinearPredictor(const Posterior& post, double p_floor = 1e-8);

  [[nodiscard]] WidelyLinearPrediction operator()(cplx z) const;
  [[nodiscard]] bool fell_back() const { return fallback_; }
  [[nodiscard]] double relative_norm() const { return relative_norm_; }

 private:
  Posterior post_;
  bool fallback_ = false;
  double relative_norm_ = 0.0;
  Eigen::MatrixXcd x_;      // K_yy^-1 K~_yy
  Eigen::MatrixXcd a_;      // floored P^-1
  Eigen::VectorXcd a_y_;    // P^-1 y
  Eigen::VectorXcd ac_yc_;  // conj(P)^-1 y*
};

WidelyLinearPrediction predict_wl(const Posterior& post, cplx z, double p_floor = 1e-8);

/// Disk of radius eta * sigma around the predictive mean, with the magnitude
/// and phase intervals it implies.
struct EllipsoidBound {
  cplx center;
  double radius = 0.0;
  double eta = 0.0;
  double mag_lo = 0.0;
  double mag_hi = 0.0;
  double phase_lo = -kPi;  ///< radians; arg(center) -/+ asin(radius/|center|)
  double phase_hi = kPi;
  bool full_circle = false;

  [[nodiscard]] bool contains(cplx w) const { return std::abs(w - center) <= radius; }
};

EllipsoidBound ellipsoid_from(cplx center, double variance, double eta);
EllipsoidBound ellipsoid(const Posterior& post, cplx z, double eta);

// ---------------------------------------------------------------------------
// Hyperparameters and likelihood

enum class ParamDomain {
  nonnegative,  ///< [0, inf), log transform
  unit_open,    ///< (0, 1), logit transform
  angle,        ///< [0, pi], scaled logit transform
};

struct Hyperparameter {
  std::string name;
  double value = 0.0;
  ParamDomain domain = ParamDomain::nonnegative;
  bool tunable = true;
};

class Hyperparameters {
 public:
  Hyperparameters() = default;
  explicit Hyperparameters(std::vector<Hyperparameter> params);

  [[nodiscard]] double get(const std::string& name) const;
  void set(const std::string& name, double value);
  void set_tunable(const std::string& name, bool tunable);
  [[nodiscard]] bool contains(const std::string& name) const;
  [[nodiscard]] const std::vector<Hyperparameter>& items() const { return params_; }
  [[nodiscard]] std::size_t tunable_count() const;

  /// Throws DomainError when a value is outside its declared domain.
  void validate() const;

  /// Unconstrained coordinates of the tunable parameters.
  [[nodiscard]] std::vector<double> to_unconstrained() const;
  /// Copy with tunable parameters replaced from unconstrained coordinates.
  [[nodiscard]] Hyperparameters from_unconstrained(const std::vector<double>& x) const;

 private:
  [[nodiscard]] const Hyperparameter& find(const std::string& name) const;
  std::vector<Hyperparameter> params_;
};

/// A parameterized kernel family with its default hyperparameters.
struct KernelFamily {
  std::string name;
  std::function<ComplexKernel(const Hyperparameters&)> build;
  Hyperparameters defaults;
};

/// scale * geometric(alpha)
KernelFamily geometric_family();
/// scale * exponential
KernelFamily exponential_family();
/// scale * cozine(a, omega0)
KernelFamily cozine_family();
/// sigma_g2 * geometric(alpha) + sigma_c2 * cozine(a, omega0)
KernelFamily geometric_cozine_family();
/// Lookup by name: "geometric", "exponential", "cozine", "geometric_cozine".
KernelFamily family_by_name(const std::string& name);

/// Reserved hyperparameter name: when present in theta it replaces the
/// dataset's scalar noise variance (per-site variances are scaled by
/// noise_var / data.noise_var instead), so the noise level can be tuned with
/// the kernel.
inline constexpr const char* kNoiseVarParam = "noise_var";

/// -1/2 (y^H K_yy^-1 y + log det K_yy + n log 2 pi), or -infinity when K_yy
/// cannot be factorized.
double log_marginal_likelihood(const KernelFamily& family, const Hyperparameters& theta,
                               const FrequencyDataset& data);

struct OptimizerOptions {
  std::size_t budget = 2000;  ///< total likelihood evaluations, all starts included
  std::size_t restarts = 4;   ///< jittered restarts after the start from init
  double jitter = 0.75;       ///< restart perturbation (unconstrained coordinates)
  double initial_step = 0.5;  ///< initial simplex size (unconstrained coordinates)
  std::uint64_t seed = 0;
};

struct OptimizationResult {
  Hyperparameters best;
  double log_likelihood = -std::numeric_limits<double>::infinity();
  std::size_t evaluations = 0;
};

/// Maximizes the log marginal likelihood over the tunable hyperparameters by
/// Nelder-Mead in unconstrained coordinates, from init and from jittered
/// restarts. Throws std::runtime_error if every evaluation was -infinity.
OptimizationResult optimize_hyperparameters(const KernelFamily& family,
                                            const FrequencyDataset& data,
                                            const Hyperparameters& init,
                                            const OptimizerOptions& opts = {});

}  // namespace hinfgp
