#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hinfgp/kernels.hpp"
#include "hinfgp/types.hpp"

namespace hinfgp {

using Rng = std::mt19937_64;

/// Independent generator for stream `stream` under a 64-bit base seed. The
/// pair is mixed through splitmix64 so that neighbouring seeds and streams
/// give unrelated states.
Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0);

/// Seed of the i-th substream of `seed`, for APIs that take a bare seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Real impulse response h(0..N) of one realization of a conjugate-symmetric
/// H-infinity process.
struct SampledPath {
  std::vector<double> impulse;
  std::vector<double> latent;  ///< underlying N(0,1) draws: w_n, or (X, Y) for cozine
  std::string origin;
  std::uint64_t seed = 0;
};

inline constexpr std::size_t kDefaultTruncation = 200;

/// h(n) = a_n w_n for n = 0..trunc (explicit lists stop at their last stored
/// coefficient), w_n i.i.d. N(0,1).
SampledPath sample_stationary(const StationarySequence& seq, std::size_t trunc,
                              std::uint64_t seed);

/// Draws X, Y ~ N(0,1) and stores the impulse response
///   h(n) = a^n (X cos(n w0) + Y sin(n w0)),
/// cut once the envelope a^n (|X| + |Y|) drops below 1e-12.
SampledPath sample_cozine(const CozineParams& p, std::uint64_t seed);

/// sum h(n) z^-n. Throws DomainError for |z| < 1.
cplx eval_path(const SampledPath& path, cplx z);

/// sum |h(n)|.
double abs_sum(const SampledPath& path);

/// One coefficient per line, full precision, preceded by '#' header lines.
void write_path(std::ostream& os, const SampledPath& path);

/// Mean of i.i.d. complex samples with separate standard errors for the
/// real and imaginary parts.
struct MomentEstimate {
  cplx mean{0.0, 0.0};
  double se_re = 0.0;
  double se_im = 0.0;
  std::size_t count = 0;

  /// |Re(mean - target)| <= n_se * se_re + abs_slack, likewise for Im.
  [[nodiscard]] bool within(cplx target, double n_se, double abs_slack = 1e-12) const;
};

class MomentAccumulator {
 public:
  void add(cplx x);
  [[nodiscard]] MomentEstimate estimate() const;

 private:
  std::size_t n_ = 0;
  cplx mean_{0.0, 0.0};
  double m2_re_ = 0.0;
  double m2_im_ = 0.0;
};

using PathSampler = std::function<SampledPath(std::uint64_t seed)>;

struct CovarianceEstimate {
  MomentEstimate hermitian;      ///< of f(z) f*(w)
  MomentEstimate complementary;  ///< of f(z) f(w)
};

/// Monte Carlo estimates of E[f(z) f*(w)] and E[f(z) f(w)] at each (z, w)
/// pair, from `count` paths drawn with seeds derive_seed(seed, i).
std::vector<CovarianceEstimate> mc_covariance(
    const PathSampler& sampler, std::size_t count,
    std::span<const std::pair<cplx, cplx>> pairs, std::uint64_t seed);

}  // namespace hinfgp
