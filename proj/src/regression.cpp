#include "hinfgp/regression.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>

#include <spdlog/spdlog.h>

namespace hinfgp {

namespace {

constexpr double kVarianceTolerance = 1e-9;

double clamp_variance(double v, double prior) {
  if (v < 0.0 && v < -kVarianceTolerance * std::max(1.0, prior)) {
    spdlog::debug("predictive variance {} below zero beyond tolerance; clamping", v);
  }
  return std::max(v, 0.0);
}

// Largest absolute eigenvalue of a Hermitian matrix.
double hermitian_norm(const Eigen::MatrixXcd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

Eigen::MatrixXcd hermitize(const Eigen::MatrixXcd& m) {
  return 0.5 * (m + m.adjoint());
}

// c_i = k(z, z_i) and c~_i = k~(z, z_i).
Eigen::VectorXcd cross_cov(const ComplexKernel& k, const std::vector<cplx>& sites, cplx z,
                           CovPart part) {
  Eigen::VectorXcd c(static_cast<Eigen::Index>(sites.size()));
  for (std::size_t i = 0; i < sites.size(); ++i) {
    c(static_cast<Eigen::Index>(i)) = part == CovPart::hermitian
                                          ? k.hermitian(z, sites[i])
                                          : k.complementary(z, sites[i]);
  }
  return c;
}

Eigen::Map<const Eigen::VectorXcd> as_vector(const std::vector<cplx>& v) {
  return {v.data(), static_cast<Eigen::Index>(v.size())};
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double logit(double p) {
  constexpr double eps = 1e-12;
  p = std::clamp(p, eps, 1.0 - eps);
  return std::log(p / (1.0 - p));
}

}  // namespace

void FrequencyDataset::validate() const {
  if (sites.size() != responses.size()) {
    throw DomainError("dataset: sites and responses differ in length");
  }
  if (sites.empty()) throw DomainError("dataset: no observations");
  if (!(noise_var >= 0.0)) throw DomainError("dataset: noise variance must be >= 0");
  if (!site_noise_var.empty()) {
    if (site_noise_var.size() != sites.size()) {
      throw DomainError("dataset: per-site noise variances differ in length from the sites");
    }
    for (double v : site_noise_var) {
      if (!(v >= 0.0)) throw DomainError("dataset: noise variance must be >= 0");
    }
  }
  for (cplx z : sites) {
    if (std::abs(z) < 1.0 - 1e-12) throw DomainError("dataset: site inside the unit circle");
  }
  std::set<std::pair<double, double>> seen;
  for (std::size_t i = 0; i < sites.size(); ++i) {
    if (noise_at(i) > 0.0) continue;
    if (!seen.emplace(sites[i].real(), sites[i].imag()).second) {
      throw ConditioningError("dataset: repeated site with zero noise variance");
    }
  }
}

// ---------------------------------------------------------------------------

Posterior::Posterior(ComplexKernel kernel, FrequencyDataset data)
    : kernel_(std::move(kernel)), data_(std::move(data)) {
  data_.validate();
  gram_ = hinfgp::gram(kernel_, data_.sites, CovPart::hermitian, 0.0);
  for (std::size_t i = 0; i < data_.size(); ++i) {
    gram_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) += data_.noise_at(i);
  }
  llt_.compute(gram_);
  if (llt_.info() != Eigen::Success) {
    jitter_ = 1e-10 * gram_.diagonal().real().mean();
    gram_.diagonal().array() += jitter_;
    llt_.compute(gram_);
    if (llt_.info() != Eigen::Success) {
      throw ConditioningError("fit: K_yy is not positive definite even after jitter");
    }
    spdlog::debug("fit: added jitter {} to K_yy", jitter_);
  }
  weights_ = llt_.solve(as_vector(data_.responses));
}

double Posterior::log_det() const {
  const auto d = llt_.matrixL().nestedExpression().diagonal().real();
  return 2.0 * d.array().log().sum();
}

Posterior fit(const ComplexKernel& kernel, const FrequencyDataset& data) {
  return Posterior(kernel, data);
}

Prediction predict_sl(const Posterior& post, cplx z) {
  const ComplexKernel& k = post.kernel();
  const Eigen::VectorXcd c = cross_cov(k, post.dataset().sites, z, CovPart::hermitian);
  // k(z_i, z) = conj(c_i), so K_xy = conj(c) and K_xy^H = c^T.
  const Eigen::VectorXcd b = c.conjugate();
  const cplx mean = (c.transpose() * post.weights()).value();
  const Eigen::VectorXcd v = post.factorization().matrixL().solve(b);
  const double prior = k.hermitian(z, z).real();
  return {mean, clamp_variance(prior - v.squaredNorm(), prior)};
}

SchurComplement schur_P(const Posterior& post) {
  const Eigen::MatrixXcd kc =
      gram(post.kernel(), post.dataset().sites, CovPart::complementary, 0.0);
  const Eigen::MatrixXcd x = post.factorization().solve(kc);
  SchurComplement out;
  out.P = hermitize(post.gram() - kc * x.conjugate());
  out.relative_norm = hermitian_norm(out.P) / hermitian_norm(post.gram());
  return out;
}

// ---------------------------------------------------------------------------
// Widely linear prediction.
//
// With X = K^-1 K~ and P = K - K~ conj(X), the augmented inverse has blocks
// A = P^-1 and B = -A X^T = -X conj(A). For a query z with c = k(z, .) and
// c~ = k~(z, .), let
//   r1 = c^T - c~^T conj(X),   r2 = c~^T - c^T X.
// Then
//   mean = r1 A y + r2 conj(A) y*
//   var  = k(z,z)  - r1 A conj(c) - r2 conj(A) conj(c~)
//   cvar = k~(z,z) - r1 A c~      - r2 conj(A) c
// A is replaced by the inverse of P with its eigenvalues floored.

WidelyLinearPredictor::WidelyLinearPredictor(const Posterior& post, double p_floor)
    : post_(post) {
  const Eigen::MatrixXcd kc =
      gram(post_.kernel(), post_.dataset().sites, CovPart::complementary, 0.0);
  x_ = post_.factorization().solve(kc);
  const Eigen::MatrixXcd p = hermitize(post_.gram() - kc * x_.conjugate());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(p);
  const double p_norm = es.eigenvalues().cwiseAbs().maxCoeff();
  const double k_norm = hermitian_norm(post_.gram());
  relative_norm_ = p_norm / k_norm;
  if (!(p_norm > p_floor * k_norm)) {
    fallback_ = true;
    return;
  }
  const Eigen::VectorXd lam = es.eigenvalues().cwiseMax(p_floor * p_norm);
  const Eigen::MatrixXcd& u = es.eigenvectors();
  a_ = u * lam.cwiseInverse().asDiagonal() * u.adjoint();
  const auto y = as_vector(post_.dataset().responses);
  a_y_ = a_ * y;
  ac_yc_ = a_.conjugate() * y.conjugate();
}

WidelyLinearPrediction WidelyLinearPredictor::operator()(cplx z) const {
  if (fallback_) {
    const Prediction sl = predict_sl(post_, z);
    return {sl.mean, sl.variance, post_.kernel().complementary(z, z), true};
  }
  const ComplexKernel& k = post_.kernel();
  const auto& sites = post_.dataset().sites;
  const Eigen::VectorXcd c = cross_cov(k, sites, z, CovPart::hermitian);
  const Eigen::VectorXcd ct = cross_cov(k, sites, z, CovPart::complementary);

  const Eigen::RowVectorXcd r1 = c.transpose() - ct.transpose() * x_.conjugate();
  const Eigen::RowVectorXcd r2 = ct.transpose() - c.transpose() * x_;
  const Eigen::RowVectorXcd r1a = r1 * a_;
  const Eigen::RowVectorXcd r2ac = r2 * a_.conjugate();

  WidelyLinearPrediction out;
  out.mean = (r1 * a_y_).value() + (r2 * ac_yc_).value();
  const double prior = k.hermitian(z, z).real();
  const cplx var = prior - (r1a * c.conjugate()).value() - (r2ac * ct.conjugate()).value();
  out.hermitian_var = clamp_variance(var.real(), prior);
  out.complementary_var = k.complementary(z, z) - (r1a * ct).value() - (r2ac * c).value();
  return out;
}

WidelyLinearPrediction predict_wl(const Posterior& post, cplx z, double p_floor) {
  return WidelyLinearPredictor(post, p_floor)(z);
}

// ---------------------------------------------------------------------------

EllipsoidBound ellipsoid_from(cplx center, double variance, double eta) {
  if (!(eta > 0.0)) throw DomainError("ellipsoid: eta must be > 0");
  EllipsoidBound e;
  e.center = center;
  e.eta = eta;
  e.radius = eta * std::sqrt(std::max(variance, 0.0));
  const double mag = std::abs(center);
  e.mag_lo = std::max(0.0, mag - e.radius);
  e.mag_hi = mag + e.radius;
  if (e.radius >= mag) {
    e.full_circle = true;
    e.phase_lo = -kPi;
    e.phase_hi = kPi;
  } else {
    const double half = std::asin(e.radius / mag);
    const double phase = std::arg(center);
    e.phase_lo = phase - half;
    e.phase_hi = phase + half;
  }
  return e;
}

EllipsoidBound ellipsoid(const Posterior& post, cplx z, double eta) {
  const Prediction p = predict_sl(post, z);
  return ellipsoid_from(p.mean, p.variance, eta);
}

// ---------------------------------------------------------------------------

Hyperparameters::Hyperparameters(std::vector<Hyperparameter> params)
    : params_(std::move(params)) {
  std::set<std::string> names;
  for (const auto& p : params_) {
    if (!names.insert(p.name).second) {
      throw DomainError("hyperparameter '" + p.name + "' declared twice");
    }
  }
  validate();
}

const Hyperparameter& Hyperparameters::find(const std::string& name) const {
  for (const auto& p : params_) {
    if (p.name == name) return p;
  }
  throw DomainError("unknown hyperparameter '" + name + "'");
}

double Hyperparameters::get(const std::string& name) const { return find(name).value; }

void Hyperparameters::set(const std::string& name, double value) {
  auto& p = const_cast<Hyperparameter&>(find(name));
  const double old = p.value;
  p.value = value;
  try {
    validate();
  } catch (...) {
    p.value = old;
    throw;
  }
}

void Hyperparameters::set_tunable(const std::string& name, bool tunable) {
  const_cast<Hyperparameter&>(find(name)).tunable = tunable;
}

bool Hyperparameters::contains(const std::string& name) const {
  return std::any_of(params_.begin(), params_.end(),
                     [&](const Hyperparameter& p) { return p.name == name; });
}

std::size_t Hyperparameters::tunable_count() const {
  return static_cast<std::size_t>(std::count_if(
      params_.begin(), params_.end(), [](const Hyperparameter& p) { return p.tunable; }));
}

void Hyperparameters::validate() const {
  for (const auto& p : params_) {
    const double v = p.value;
    bool ok = std::isfinite(v);
    switch (p.domain) {
      case ParamDomain::nonnegative: ok = ok && v >= 0.0; break;
      case ParamDomain::unit_open: ok = ok && v > 0.0 && v < 1.0; break;
      case ParamDomain::angle: ok = ok && v >= 0.0 && v <= kPi; break;
    }
    if (!ok) {
      throw DomainError("hyperparameter '" + p.name + "' = " + std::to_string(v) +
                        " is outside its domain");
    }
  }
}

std::vector<double> Hyperparameters::to_unconstrained() const {
  std::vector<double> x;
  for (const auto& p : params_) {
    if (!p.tunable) continue;
    switch (p.domain) {
      case ParamDomain::nonnegative: x.push_back(std::log(std::max(p.value, 1e-300))); break;
      case ParamDomain::unit_open: x.push_back(logit(p.value)); break;
      case ParamDomain::angle: x.push_back(logit(p.value / kPi)); break;
    }
  }
  return x;
}

Hyperparameters Hyperparameters::from_unconstrained(const std::vector<double>& x) const {
  if (x.size() != tunable_count()) {
    throw DomainError("from_unconstrained: expected " + std::to_string(tunable_count()) +
                      " coordinates");
  }
  Hyperparameters out = *this;
  std::size_t i = 0;
  for (auto& p : out.params_) {
    if (!p.tunable) continue;
    const double xi = x[i++];
    switch (p.domain) {
      case ParamDomain::nonnegative: p.value = std::exp(xi); break;
      case ParamDomain::unit_open: p.value = sigmoid(xi); break;
      case ParamDomain::angle: p.value = kPi * sigmoid(xi); break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

KernelFamily geometric_family() {
  return {"geometric",
          [](const Hyperparameters& t) {
            return scaled_kernel(geometric_kernel(t.get("alpha")), t.get("scale"));
          },
          Hyperparameters({{"scale", 1.0, ParamDomain::nonnegative, true},
                           {"alpha", 0.5, ParamDomain::unit_open, true}})};
}

KernelFamily exponential_family() {
  return {"exponential",
          [](const Hyperparameters& t) {
            return scaled_kernel(exponential_kernel(), t.get("scale"));
          },
          Hyperparameters({{"scale", 1.0, ParamDomain::nonnegative, true}})};
}

KernelFamily cozine_family() {
  return {"cozine",
          [](const Hyperparameters& t) {
            return scaled_kernel(cozine_kernel({t.get("a"), t.get("omega0")}), t.get("scale"));
          },
          Hyperparameters({{"scale", 1.0, ParamDomain::nonnegative, true},
                           {"a", 0.5, ParamDomain::unit_open, true},
                           {"omega0", kPi / 2.0, ParamDomain::angle, true}})};
}

KernelFamily geometric_cozine_family() {
  return {"geometric_cozine",
          [](const Hyperparameters& t) {
            return mixture_kernel(geometric_kernel(t.get("alpha")), t.get("sigma_g2"),
                                  cozine_kernel({t.get("a"), t.get("omega0")}),
                                  t.get("sigma_c2"));
          },
          Hyperparameters({{"sigma_g2", 1.0, ParamDomain::nonnegative, true},
                           {"alpha", 0.5, ParamDomain::unit_open, true},
                           {"sigma_c2", 1.0, ParamDomain::nonnegative, true},
                           {"omega0", kPi / 2.0, ParamDomain::angle, true},
                           {"a", 0.5, ParamDomain::unit_open, true}})};
}

KernelFamily family_by_name(const std::string& name) {
  if (name == "geometric") return geometric_family();
  if (name == "exponential") return exponential_family();
  if (name == "cozine") return cozine_family();
  if (name == "geometric_cozine") return geometric_cozine_family();
  throw DomainError("unknown kernel family '" + name + "'");
}

double log_marginal_likelihood(const KernelFamily& family, const Hyperparameters& theta,
                               const FrequencyDataset& data) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  theta.validate();
  data.validate();
  FrequencyDataset d = data;
  if (theta.contains(kNoiseVarParam)) {
    const double v = theta.get(kNoiseVarParam);
    if (!d.site_noise_var.empty() && d.noise_var > 0.0) {
      for (double& s : d.site_noise_var) s *= v / d.noise_var;
    }
    d.noise_var = v;
  }
  try {
    const Posterior post(family.build(theta), d);
    const auto y = as_vector(d.responses);
    const double quad = y.dot(post.weights()).real();  // y^H K^-1 y
    const double n = static_cast<double>(d.size());
    const double l = -0.5 * (quad + post.log_det() + n * std::log(2.0 * kPi));
    return std::isfinite(l) ? l : kNegInf;
  } catch (const ConditioningError&) {
    return kNegInf;
  } catch (const SingularPointError&) {
    return kNegInf;
  }
}

}  // namespace hinfgp
