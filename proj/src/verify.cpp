#include "hinfgp/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace hinfgp {

namespace {

const double kGoldenAngle = kPi * (3.0 - std::sqrt(5.0));

// Least-squares slope of y against x.
double ls_slope(std::span<const double> x, std::span<const double> y) {
  const auto m = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= m;
  my /= m;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxx > 0.0 ? sxy / sxx : 0.0;
}

void reject_duplicates(std::span<const cplx> pts) {
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      if (std::abs(pts[i] - pts[j]) <= 1e-12 * std::max(1.0, std::abs(pts[i]))) {
        std::ostringstream msg;
        msg << "driscoll_test: duplicate points " << i << " and " << j
            << " make R^n singular";
        throw ConditioningError(msg.str());
      }
    }
  }
}

}  // namespace

cplx h2_kernel(cplx z, cplx w) {
  const cplx p = z * std::conj(w);
  if (std::abs(p - 1.0) < 1e-15) {
    throw SingularPointError("h2_kernel: zw* = 1");
  }
  if (!(std::abs(p) > 1.0)) {
    throw DomainError("h2_kernel: requires |zw*| > 1");
  }
  return p / (p - 1.0);
}

ComplexKernel h2_process_kernel() {
  return {"h2", [](cplx z, cplx w) { return h2_kernel(z, w); },
          [](cplx z, cplx w) { return h2_kernel(z, std::conj(w)); }};
}

// ---------------------------------------------------------------------------

PointSource PointSource::golden_spiral(double r_inner, double r_outer, double decay) {
  if (!(r_inner > 1.0) || !(r_outer >= r_inner)) {
    throw DomainError("golden_spiral: need 1 < r_inner <= r_outer");
  }
  if (!(decay > 0.0 && decay < 1.0)) {
    throw DomainError("golden_spiral: radial decay must lie in (0, 1)");
  }
  PointSource s;
  s.spiral_ = true;
  s.r_inner_ = r_inner;
  s.r_outer_ = r_outer;
  s.decay_ = decay;
  return s;
}

PointSource PointSource::explicit_points(std::vector<cplx> points) {
  for (cplx z : points) {
    if (!(std::abs(z) > 1.0)) {
      throw DomainError("point source: points must lie strictly outside the unit circle");
    }
  }
  PointSource s;
  s.spiral_ = false;
  s.points_ = std::move(points);
  return s;
}

std::vector<cplx> PointSource::first(std::size_t n) const {
  if (!spiral_) {
    if (n > points_.size()) {
      throw DomainError("point source: explicit list shorter than requested");
    }
    return {points_.begin(), points_.begin() + static_cast<std::ptrdiff_t>(n)};
  }
  std::vector<cplx> out;
  out.reserve(n);
  double shrink = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double r = r_inner_ + (r_outer_ - r_inner_) * shrink;
    out.push_back(std::polar(r, kGoldenAngle * static_cast<double>(k)));
    shrink *= decay_;
  }
  return out;
}

std::string PointSource::describe() const {
  std::ostringstream s;
  if (spiral_) {
    s << "golden_spiral(r_inner=" << r_inner_ << ", r_outer=" << r_outer_
      << ", decay=" << decay_ << ")";
  } else {
    s << "explicit(" << points_.size() << " points)";
  }
  return s.str();
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::converging:
      return "converging";
    case Verdict::diverging:
      return "diverging";
    case Verdict::inconclusive:
      return "inconclusive";
  }
  return "inconclusive";
}

DriscollReport driscoll_test(const ScalarKernelFn& candidate, std::size_t n_max,
                             const PointSource& points, const DriscollOptions& opts) {
  if (n_max < 10) throw DomainError("driscoll_test: n_max must be >= 10");
  if (opts.n_start == 0 || opts.n_step == 0) {
    throw DomainError("driscoll_test: n_start and n_step must be positive");
  }
  const std::vector<cplx> pts = points.first(n_max);
  for (cplx z : pts) {
    if (!(std::abs(z) > 1.0)) {
      throw DomainError("driscoll_test: points must lie strictly outside the unit circle");
    }
  }
  reject_duplicates(pts);

  const auto nn = static_cast<Eigen::Index>(n_max);
  Eigen::MatrixXcd r_full(nn, nn);
  Eigen::MatrixXcd k_full(nn, nn);
  for (Eigen::Index i = 0; i < nn; ++i) {
    for (Eigen::Index j = i; j < nn; ++j) {
      const cplx v = h2_kernel(pts[i], pts[j]);
      r_full(i, j) = (i == j) ? cplx(v.real(), 0.0) : v;
      r_full(j, i) = std::conj(r_full(i, j));
    }
    for (Eigen::Index j = 0; j < nn; ++j) k_full(i, j) = candidate(pts[i], pts[j]);
  }

  DriscollReport report;
  std::vector<std::size_t> sizes;
  for (std::size_t n = opts.n_start; n <= n_max; n += opts.n_step) sizes.push_back(n);
  if (sizes.empty() || sizes.back() != n_max) sizes.push_back(n_max);

  for (std::size_t n : sizes) {
    const auto m = static_cast<Eigen::Index>(n);
    Eigen::MatrixXcd r = r_full.topLeftCorner(m, m);
    Eigen::LLT<Eigen::MatrixXcd> llt(r);
    if (llt.info() != Eigen::Success) {
      const double jitter = 1e-12 * r.trace().real() / static_cast<double>(n);
      r.diagonal().array() += jitter;
      llt.compute(r);
      report.jittered = true;
      if (llt.info() != Eigen::Success) {
        std::ostringstream msg;
        msg << "driscoll_test: H2 Gram not factorizable at n=" << n
            << " even with jitter";
        throw ConditioningError(msg.str());
      }
    }
    const Eigen::MatrixXcd x = llt.solve(k_full.topLeftCorner(m, m));
    report.n_values.push_back(n);
    report.traces.push_back(x.trace().real());
  }

  // Classify on the final third of the sequence (at least two entries).
  const std::size_t count = report.traces.size();
  std::size_t start = (2 * count) / 3;
  if (count >= 2) start = std::min(start, count - 2);
  std::vector<double> xs, ys;
  for (std::size_t i = start; i < count; ++i) {
    xs.push_back(static_cast<double>(report.n_values[i]));
    ys.push_back(report.traces[i]);
  }
  report.growth_slope = ls_slope(xs, ys);
  const auto [lo, hi] = std::minmax_element(ys.begin(), ys.end());
  const double scale = std::max({std::abs(*lo), std::abs(*hi), 1e-300});
  const bool cauchy = (*hi - *lo) <= opts.trace_tol * scale;
  if (report.growth_slope > opts.slope_tol) {
    report.verdict = Verdict::diverging;
  } else if (cauchy && count >= 2) {
    report.verdict = Verdict::converging;
  } else {
    report.verdict = Verdict::inconclusive;
  }
  return report;
}

DriscollReport driscoll_test(const RealKernelFn& candidate, std::size_t n_max,
                             const PointSource& points, const DriscollOptions& opts) {
  const ScalarKernelFn wrapped = [candidate](cplx z, cplx w) {
    return cplx(candidate(z, w), 0.0);
  };
  return driscoll_test(wrapped, n_max, points, opts);
}

// ---------------------------------------------------------------------------

SymmetryReport symmetry_test(const ComplexKernel& k, std::span<const cplx> grid) {
  if (grid.empty()) throw DomainError("symmetry_test: empty grid");
  SymmetryReport report;
  report.grid.assign(grid.begin(), grid.end());
  for (cplx z : grid) {
    const cplx kzz = k.hermitian(z, z);
    const cplx zc = std::conj(z);
    report.max_err_diag = std::max(report.max_err_diag, std::abs(kzz - k.hermitian(zc, zc)));
    report.max_err_cross = std::max(report.max_err_cross, std::abs(kzz - k.complementary(z, zc)));
  }
  return report;
}

std::vector<cplx> annulus_grid(std::size_t n, double r_min, double r_max) {
  if (!(r_min >= 1.0) || !(r_max >= r_min)) {
    throw DomainError("annulus_grid: need 1 <= r_min <= r_max");
  }
  std::vector<cplx> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double frac = (static_cast<double>(k) + 0.5) / static_cast<double>(n);
    out.push_back(std::polar(r_min + (r_max - r_min) * frac,
                             kGoldenAngle * static_cast<double>(k)));
  }
  return out;
}

// ---------------------------------------------------------------------------

ContinuityReport continuity_probe(const RealKernelFn& k,
                                  std::span<const std::pair<double, double>> angle_pairs,
                                  double C, double alpha, double radius) {
  if (!(C > 0.0) || !(alpha > 0.0)) {
    throw DomainError("continuity_probe: C and alpha must be positive");
  }
  ContinuityReport report;
  report.worst_margin = std::numeric_limits<double>::infinity();
  for (const auto& [theta, phi] : angle_pairs) {
    const double d = std::abs(theta - phi);
    if (d == 0.0) throw DomainError("continuity_probe: degenerate pair theta == phi");
    if (!(d < 1.0)) throw DomainError("continuity_probe: requires |theta - phi| < 1");
    const cplx zt = std::polar(radius, theta);
    const cplx zp = std::polar(radius, phi);
    const double increment = k(zt, zt) + k(zp, zp) - 2.0 * k(zt, zp);
    const double bound = C / std::pow(std::abs(std::log(d)), 1.0 + alpha);
    const double margin = bound - increment;
    if (margin < report.worst_margin) {
      report.worst_margin = margin;
      report.worst_theta = theta;
      report.worst_phi = phi;
    }
    ++report.pairs_checked;
  }
  report.passed = report.worst_margin >= 0.0;
  return report;
}

std::vector<std::pair<double, double>> log_spaced_angle_pairs(std::size_t count,
                                                              double d_min, double d_max) {
  if (count == 0) return {};
  if (!(d_min > 0.0) || !(d_max >= d_min) || !(d_max < 1.0)) {
    throw DomainError("log_spaced_angle_pairs: need 0 < d_min <= d_max < 1");
  }
  std::vector<std::pair<double, double>> out;
  out.reserve(count);
  const double lmin = std::log(d_min);
  const double lmax = std::log(d_max);
  for (std::size_t i = 0; i < count; ++i) {
    const double frac = count > 1 ? static_cast<double>(i) / static_cast<double>(count - 1) : 0.0;
    const double d = std::exp(lmin + (lmax - lmin) * frac);
    const double theta = std::remainder(kGoldenAngle * static_cast<double>(i), 2.0 * kPi);
    out.emplace_back(theta, theta + d);
  }
  return out;
}

ContinuitySearch search_continuity_constants(
    const RealKernelFn& k, std::span<const std::pair<double, double>> angle_pairs,
    double radius) {
  ContinuitySearch out;
  for (int e = -2; e <= 3; ++e) {
    const double C = std::pow(10.0, e);
    for (double alpha : {0.1, 1.0, 2.0}) {
      ContinuityReport rep = continuity_probe(k, angle_pairs, C, alpha, radius);
      if (rep.passed) {
        out.found = true;
        out.C = C;
        out.alpha = alpha;
        out.report = rep;
        return out;
      }
      out.report = rep;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

void to_json(nlohmann::json& j, const DriscollReport& r) {
  j = nlohmann::json{{"n_values", r.n_values},
                     {"traces", r.traces},
                     {"verdict", to_string(r.verdict)},
                     {"growth_slope", r.growth_slope},
                     {"jittered", r.jittered}};
}

void to_json(nlohmann::json& j, const SymmetryReport& r) {
  j = nlohmann::json{{"max_err_diag", r.max_err_diag},
                     {"max_err_cross", r.max_err_cross},
                     {"grid_size", r.grid.size()},
                     {"passed", r.passed()}};
}

void to_json(nlohmann::json& j, const ContinuityReport& r) {
  j = nlohmann::json{{"passed", r.passed},
                     {"worst_margin", r.worst_margin},
                     {"worst_theta", r.worst_theta},
                     {"worst_phi", r.worst_phi},
                     {"pairs_checked", r.pairs_checked}};
}

}  // namespace hinfgp
