#include "hinfgp/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <sstream>

#include <spdlog/spdlog.h>

namespace hinfgp {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr double kTailFloor = 1e-12;

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(~stream));
}

Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  return Rng(derive_seed(seed, stream));
}

SampledPath sample_stationary(const StationarySequence& seq, std::size_t trunc,
                              std::uint64_t seed) {
  if (trunc < 1) throw DomainError("sample_stationary: truncation must be >= 1");
  std::size_t len = trunc + 1;
  if (seq.kind() == StationarySequence::Kind::explicit_list) {
    len = std::min(len, seq.explicit_length());
  }
  Rng rng = make_rng(seed);
  std::normal_distribution<double> normal;
  SampledPath path;
  path.seed = seed;
  path.origin = seq.describe();
  path.impulse.resize(len);
  path.latent.resize(len);
  for (std::size_t n = 0; n < len; ++n) {
    path.latent[n] = normal(rng);
    path.impulse[n] = std::sqrt(seq.a_squared(n)) * path.latent[n];
  }
  return path;
}

SampledPath sample_cozine(const CozineParams& p, std::uint64_t seed) {
  p.validate();
  Rng rng = make_rng(seed);
  std::normal_distribution<double> normal;
  const double x = normal(rng);
  const double y = normal(rng);

  SampledPath path;
  path.seed = seed;
  std::ostringstream origin;
  origin << "cozine(a=" << p.a << ", omega0=" << p.omega0 << ")";
  path.origin = origin.str();
  path.latent = {x, y};

  const double amp = std::abs(x) + std::abs(y);
  double envelope = 1.0;
  for (std::size_t n = 0;; ++n) {
    const double phase = static_cast<double>(n) * p.omega0;
    path.impulse.push_back(envelope * (x * std::cos(phase) + y * std::sin(phase)));
    envelope *= p.a;
    if (envelope * amp < kTailFloor) break;
  }
  return path;
}

cplx eval_path(const SampledPath& path, cplx z) {
  const double r = std::abs(z);
  if (r < 1.0) throw DomainError("eval_path: requires |z| >= 1");
  if (r == 1.0 && !path.impulse.empty() && std::abs(path.impulse.back()) >= kTailFloor) {
    // Monte Carlo loops hit this for every path; once per process is enough.
    static std::once_flag warned;
    std::call_once(warned, [&] {
      spdlog::warn("eval_path: evaluating on |z| = 1 with undecayed tail |h(N)| = {}",
                   std::abs(path.impulse.back()));
    });
  }
  const cplx zi = 1.0 / z;
  cplx acc = 0.0;
  for (auto it = path.impulse.rbegin(); it != path.impulse.rend(); ++it) {
    acc = acc * zi + *it;
  }
  return acc;
}

double abs_sum(const SampledPath& path) {
  double s = 0.0;
  for (double h : path.impulse) s += std::abs(h);
  return s;
}

void write_path(std::ostream& os, const SampledPath& path) {
  os << "# origin=" << path.origin << "\n# seed=" << path.seed
     << "\n# length=" << path.impulse.size() << "\n";
  os << std::setprecision(17);
  for (double h : path.impulse) os << h << "\n";
}

// ---------------------------------------------------------------------------

bool MomentEstimate::within(cplx target, double n_se, double abs_slack) const {
  return std::abs(mean.real() - target.real()) <= n_se * se_re + abs_slack &&
         std::abs(mean.imag() - target.imag()) <= n_se * se_im + abs_slack;
}

void MomentAccumulator::add(cplx x) {
  ++n_;
  const cplx delta = x - mean_;
  mean_ += delta / static_cast<double>(n_);
  const cplx delta2 = x - mean_;
  m2_re_ += delta.real() * delta2.real();
  m2_im_ += delta.imag() * delta2.imag();
}

MomentEstimate MomentAccumulator::estimate() const {
  MomentEstimate e;
  e.count = n_;
  e.mean = mean_;
  if (n_ >= 2) {
    const auto n = static_cast<double>(n_);
    e.se_re = std::sqrt(m2_re_ / (n - 1.0) / n);
    e.se_im = std::sqrt(m2_im_ / (n - 1.0) / n);
  }
  return e;
}

std::vector<CovarianceEstimate> mc_covariance(
    const PathSampler& sampler, std::size_t count,
    std::span<const std::pair<cplx, cplx>> pairs, std::uint64_t seed) {
  std::vector<MomentAccumulator> herm(pairs.size());
  std::vector<MomentAccumulator> comp(pairs.size());
  for (std::size_t i = 0; i < count; ++i) {
    const SampledPath path = sampler(derive_seed(seed, i));
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const cplx fz = eval_path(path, pairs[p].first);
      const cplx fw = eval_path(path, pairs[p].second);
      herm[p].add(fz * std::conj(fw));
      comp[p].add(fz * fw);
    }
  }
  std::vector<CovarianceEstimate> out(pairs.size());
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    out[p] = {herm[p].estimate(), comp[p].estimate()};
  }
  return out;
}

}  // namespace hinfgp
