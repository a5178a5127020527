#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "hinfgp/kernels.hpp"
#include "hinfgp/types.hpp"

namespace hinfgp {

/// Reproducing kernel of discrete-time H2 on |z| > 1: zw*/(zw* - 1).
cplx h2_kernel(cplx z, cplx w);

/// The H2 kernel packaged as a ComplexKernel (complementary part r(z, w*)),
/// i.e. the stationary process with a_n^2 = 1 for every n.
ComplexKernel h2_process_kernel();

/// Deterministic sequence of evaluation points strictly outside the unit
/// circle. The default golden-angle spiral has radii
///   r_k = r_inner + (r_outer - r_inner) * decay^k
/// which accumulate on the circle |z| = r_inner; every angle is visited
/// densely, so the sequence is a uniqueness set for H2.
class PointSource {
 public:
  static PointSource golden_spiral(double r_inner = 1.05, double r_outer = 3.0,
                                   double decay = 0.5);
  static PointSource explicit_points(std::vector<cplx> points);

  /// First n points; throws DomainError if an explicit list is too short.
  [[nodiscard]] std::vector<cplx> first(std::size_t n) const;
  [[nodiscard]] std::string describe() const;

 private:
  PointSource() = default;

  bool spiral_ = true;
  double r_inner_ = 1.05;
  double r_outer_ = 3.0;
  double decay_ = 0.5;
  std::vector<cplx> points_;
};

enum class Verdict { converging, diverging, inconclusive };

std::string to_string(Verdict v);

struct DriscollOptions {
  std::size_t n_start = 10;
  std::size_t n_step = 10;
  double slope_tol = 0.01;  ///< trace growth per point above which we call divergence
  double trace_tol = 1e-3;  ///< relative spread allowed over the final third
};

struct DriscollReport {
  std::vector<std::size_t> n_values;
  std::vector<double> traces;
  Verdict verdict = Verdict::inconclusive;
  double growth_slope = 0.0;
  bool jittered = false;  ///< some R^n needed diagonal jitter to factor
};

/// trace(K^n (R^n)^-1) for n = n_start, n_start + n_step, ..., n_max, where K
/// is the candidate kernel's Gram and R the H2 kernel's Gram on the first n
/// points, followed by a heuristic classification of the sequence.
DriscollReport driscoll_test(const ScalarKernelFn& candidate, std::size_t n_max,
                             const PointSource& points = PointSource::golden_spiral(),
                             const DriscollOptions& opts = {});
DriscollReport driscoll_test(const RealKernelFn& candidate, std::size_t n_max,
                             const PointSource& points = PointSource::golden_spiral(),
                             const DriscollOptions& opts = {});

struct SymmetryReport {
  double max_err_diag = 0.0;   ///< max |k(z,z) - k(z*,z*)|
  double max_err_cross = 0.0;  ///< max |k(z,z) - k~(z,z*)|
  std::vector<cplx> grid;

  [[nodiscard]] bool passed(double tol = 1e-10) const {
    return max_err_diag < tol && max_err_cross < tol;
  }
};

/// Checks the two identities that make a Gaussian process conjugate
/// symmetric (real impulse response) at every grid point.
SymmetryReport symmetry_test(const ComplexKernel& k, std::span<const cplx> grid);

/// n deterministic points in r_min <= |z| <= r_max (golden-angle spiral with
/// radii spread uniformly over the annulus).
std::vector<cplx> annulus_grid(std::size_t n, double r_min = 1.1, double r_max = 5.0);

struct ContinuityReport {
  bool passed = true;
  double worst_margin = 0.0;  ///< min over pairs of bound - increment
  double worst_theta = 0.0;
  double worst_phi = 0.0;
  std::size_t pairs_checked = 0;
};

/// Checks k(e^jt, e^jt) + k(e^jp, e^jp) - 2 k(e^jt, e^jp) <= C / |log|t - p||^(1+alpha)
/// at every (t, p) pair, with points on the circle of the given radius.
/// Requires 0 < |t - p| < 1 for every pair.
ContinuityReport continuity_probe(const RealKernelFn& k,
                                  std::span<const std::pair<double, double>> angle_pairs,
                                  double C, double alpha, double radius = 1.0);

/// `count` pairs (t, t + d) with d log-spaced in [d_min, d_max] and t spread
/// around the circle.
std::vector<std::pair<double, double>> log_spaced_angle_pairs(std::size_t count,
                                                              double d_min, double d_max);

struct ContinuitySearch {
  bool found = false;
  double C = 0.0;
  double alpha = 0.0;
  ContinuityReport report;
};

/// Smallest C in {1e-2, ..., 1e3} (decades), then smallest alpha in
/// {0.1, 1, 2}, for which the probe passes.
ContinuitySearch search_continuity_constants(
    const RealKernelFn& k, std::span<const std::pair<double, double>> angle_pairs,
    double radius = 1.0);

void to_json(nlohmann::json& j, const DriscollReport& r);
void to_json(nlohmann::json& j, const SymmetryReport& r);
void to_json(nlohmann::json& j, const ContinuityReport& r);

}  // namespace hinfgp
