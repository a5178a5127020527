#include "hinfgp/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hinfgp {

namespace {

constexpr double kDomainSlack = 1e-12;

cplx checked_ratio(cplx num, cplx den, const char* what) {
  if (std::abs(den) < 1e-300) {
    throw SingularPointError(std::string(what) + ": evaluation at a pole");
  }
  return num / den;
}

// sum_{n} c_n x^n by Horner's rule
cplx power_series(const std::vector<double>& c, cplx x) {
  cplx acc = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * x + *it;
  return acc;
}

}  // namespace

ComplexKernel::ComplexKernel(std::string name, ScalarKernelFn hermitian,
                             ScalarKernelFn complementary, ParamMap hyperparams,
                             double domain_radius)
    : name_(std::move(name)),
      hermitian_(std::move(hermitian)),
      complementary_(std::move(complementary)),
      hyperparams_(std::move(hyperparams)),
      domain_radius_(domain_radius) {
  if (!(domain_radius_ >= 1.0)) {
    throw DomainError("kernel domain radius must be >= 1");
  }
}

bool ComplexKernel::in_domain(cplx z) const {
  return std::abs(z) >= domain_radius_ * (1.0 - kDomainSlack);
}

void ComplexKernel::check_domain(cplx z, cplx w) const {
  if (!in_domain(z) || !in_domain(w)) {
    std::ostringstream msg;
    msg << name_ << ": argument inside domain radius " << domain_radius_
        << " (|z|=" << std::abs(z) << ", |w|=" << std::abs(w) << ")";
    throw DomainError(msg.str());
  }
}

cplx ComplexKernel::hermitian(cplx z, cplx w) const {
  check_domain(z, w);
  return hermitian_(z, w);
}

cplx ComplexKernel::complementary(cplx z, cplx w) const {
  check_domain(z, w);
  return complementary_(z, w);
}

// ---------------------------------------------------------------------------

StationarySequence::StationarySequence(Kind kind, double alpha,
                                       std::vector<double> coeffs)
    : kind_(kind), alpha_(alpha), coeffs_(std::move(coeffs)) {}

StationarySequence StationarySequence::geometric(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw DomainError("geometric sequence requires 0 < alpha < 1");
  }
  return {Kind::geometric, alpha, {}};
}

StationarySequence StationarySequence::exponential() {
  return {Kind::exponential, 0.0, {}};
}

StationarySequence StationarySequence::explicit_list(std::vector<double> a_squared) {
  if (a_squared.empty()) {
    throw DomainError("stationary sequence needs at least one coefficient");
  }
  for (double c : a_squared) {
    if (!(c >= 0.0) || !std::isfinite(c)) {
      throw DomainError("stationary sequence coefficients must be finite and >= 0");
    }
  }
  return {Kind::explicit_list, 0.0, std::move(a_squared)};
}

double StationarySequence::a_squared(std::size_t n) const {
  switch (kind_) {
    case Kind::geometric:
      return std::pow(alpha_, static_cast<double>(n));
    case Kind::exponential:
      return std::exp(-std::lgamma(static_cast<double>(n) + 1.0));
    case Kind::explicit_list:
      return n < coeffs_.size() ? coeffs_[n] : 0.0;
  }
  return 0.0;
}

double StationarySequence::sum_a() const {
  switch (kind_) {
    case Kind::geometric:
      return 1.0 / (1.0 - std::sqrt(alpha_));
    case Kind::exponential: {
      // sum 1/sqrt(n!) has no elementary closed form; terms fall below
      // 1e-17 well before n = 40.
      double sum = 0.0;
      for (int n = 0; n < 60; ++n) sum += std::exp(-0.5 * std::lgamma(n + 1.0));
      return sum;
    }
    case Kind::explicit_list: {
      double sum = 0.0;
      for (double c : coeffs_) sum += std::sqrt(c);
      return sum;
    }
  }
  return 0.0;
}

std::string StationarySequence::describe() const {
  std::ostringstream s;
  switch (kind_) {
    case Kind::geometric:
      s << "geometric(alpha=" << alpha_ << ")";
      break;
    case Kind::exponential:
      s << "exponential";
      break;
    case Kind::explicit_list:
      s << "stationary_list(N=" << coeffs_.size() << ")";
      break;
  }
  return s.str();
}

void CozineParams::validate() const {
  if (!(a > 0.0 && a < 1.0)) throw DomainError("cozine requires 0 < a < 1");
  if (!(omega0 >= 0.0 && omega0 <= kPi)) {
    throw DomainError("cozine requires 0 <= omega0 <= pi");
  }
}

// ---------------------------------------------------------------------------

ComplexKernel geometric_kernel(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw DomainError("geometric kernel requires 0 < alpha < 1");
  }
  auto herm = [alpha](cplx z, cplx w) {
    const cplx p = z * std::conj(w);
    return checked_ratio(p, p - alpha, "geometric");
  };
  auto comp = [alpha](cplx z, cplx w) {
    const cplx p = z * w;
    return checked_ratio(p, p - alpha, "geometric");
  };
  return {"geometric", herm, comp, {{"alpha", alpha}}};
}

ComplexKernel exponential_kernel() {
  auto herm = [](cplx z, cplx w) {
    const cplx p = z * std::conj(w);
    if (p == 0.0) throw DomainError("exponential kernel: zw* = 0");
    return std::exp(1.0 / p);
  };
  auto comp = [](cplx z, cplx w) {
    const cplx p = z * w;
    if (p == 0.0) throw DomainError("exponential kernel: zw = 0");
    return std::exp(1.0 / p);
  };
  return {"exponential", herm, comp};
}

ComplexKernel stationary_kernel(const StationarySequence& seq) {
  switch (seq.kind()) {
    case StationarySequence::Kind::geometric:
      return geometric_kernel(seq.alpha());
    case StationarySequence::Kind::exponential:
      return exponential_kernel();
    case StationarySequence::Kind::explicit_list:
      break;
  }
  auto coeffs = seq.coefficients();
  auto herm = [coeffs](cplx z, cplx w) {
    return power_series(coeffs, 1.0 / (z * std::conj(w)));
  };
  auto comp = [coeffs](cplx z, cplx w) {
    return power_series(coeffs, 1.0 / (z * w));
  };
  return {"stationary_list", herm, comp,
          {{"length", static_cast<double>(coeffs.size())}}};
}

ComplexKernel cozine_kernel(const CozineParams& p) {
  p.validate();
  const double a = p.a;
  const double ac = a * std::cos(p.omega0);
  const double a2 = a * a;
  // Both parts share one form; they differ only in whether w enters conjugated.
  auto form = [ac, a2](cplx z, cplx v) {
    const cplx zi = 1.0 / z;
    const cplx vi = 1.0 / v;
    const cplx num = 1.0 - ac * (zi + vi) + a2 * zi * vi;
    const cplx den = (1.0 - 2.0 * ac * zi + a2 * zi * zi) *
                     (1.0 - 2.0 * ac * vi + a2 * vi * vi);
    return checked_ratio(num, den, "cozine");
  };
  auto herm = [form](cplx z, cplx w) { return form(z, std::conj(w)); };
  auto comp = [form](cplx z, cplx w) { return form(z, w); };
  return {"cozine", herm, comp, {{"a", p.a}, {"omega0", p.omega0}}};
}

ComplexKernel mixture_kernel(const ComplexKernel& k1, double w1,
                             const ComplexKernel& k2, double w2) {
  if (!(w1 >= 0.0) || !(w2 >= 0.0)) {
    throw DomainError("mixture weights must be nonnegative");
  }
  auto herm = [k1, w1, k2, w2](cplx z, cplx w) {
    return w1 * k1.hermitian(z, w) + w2 * k2.hermitian(z, w);
  };
  auto comp = [k1, w1, k2, w2](cplx z, cplx w) {
    return w1 * k1.complementary(z, w) + w2 * k2.complementary(z, w);
  };
  ParamMap params{{"w1", w1}, {"w2", w2}};
  for (const auto& [key, value] : k1.hyperparams()) params["k1." + key] = value;
  for (const auto& [key, value] : k2.hyperparams()) params["k2." + key] = value;
  return {"mixture", herm, comp, std::move(params),
          std::max(k1.domain_radius(), k2.domain_radius())};
}

ComplexKernel scaled_kernel(const ComplexKernel& k, double s) {
  if (!(s >= 0.0)) throw DomainError("kernel scale must be >= 0");
  ParamMap params = k.hyperparams();
  params["scale"] = s;
  return {k.name(), [k, s](cplx z, cplx w) { return s * k.hermitian(z, w); },
          [k, s](cplx z, cplx w) { return s * k.complementary(z, w); },
          std::move(params), k.domain_radius()};
}

ComplexKernel circular_kernel(const ComplexKernel& k) {
  auto herm = [k](cplx z, cplx w) { return k.hermitian(z, w); };
  auto comp = [](cplx, cplx) { return cplx(0.0); };
  return {"circular(" + k.name() + ")", herm, comp, k.hyperparams(),
          k.domain_radius()};
}

RealImagKernels real_imag_kernels(const ComplexKernel& k) {
  return {
      [k](cplx z, cplx w) {
        return 0.5 * std::real(k.hermitian(z, w) + k.complementary(z, w));
      },
      [k](cplx z, cplx w) {
        return 0.5 * std::real(k.hermitian(z, w) - k.complementary(z, w));
      },
  };
}

Eigen::MatrixXcd gram(const ComplexKernel& k, std::span<const cplx> points,
                      CovPart part, double noise_var) {
  if (!(noise_var >= 0.0)) throw DomainError("noise variance must be >= 0");
  for (cplx z : points) {
    if (!k.in_domain(z)) {
      throw DomainError("gram: point inside kernel domain radius");
    }
  }
  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXcd g(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      if (part == CovPart::hermitian) {
        const cplx v = k.hermitian(points[i], points[j]);
        g(i, j) = (i == j) ? cplx(v.real(), 0.0) : v;
        g(j, i) = std::conj(g(i, j));
      } else {
        const cplx v = k.complementary(points[i], points[j]);
        g(i, j) = v;
        g(j, i) = v;
      }
    }
    g(i, i) += noise_var;
  }
  return g;
}

}  // namespace hinfgp
