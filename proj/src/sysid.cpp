#include "hinfgp/sysid.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include <spdlog/spdlog.h>
#include <unsupported/Eigen/MatrixFunctions>

#include "hinfgp/sampling.hpp"

namespace hinfgp {

namespace {

// sum c_k x^k by Horner, with x = z^-1.
cplx poly_inv(const std::vector<double>& c, cplx zi) {
  cplx acc = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * zi + *it;
  return acc;
}

}  // namespace

DiscreteTF::DiscreteTF(std::vector<double> num, std::vector<double> den, double sample_rate)
    : num_(std::move(num)), den_(std::move(den)), fs_(sample_rate) {
  if (num_.empty()) throw DomainError("transfer function: empty numerator");
  if (den_.empty() || std::abs(den_.front() - 1.0) > 1e-12) {
    throw DomainError("transfer function: denominator must be monic");
  }
  if (!(fs_ > 0.0)) throw DomainError("transfer function: sample rate must be > 0");
  for (cplx p : poles()) {
    if (std::abs(p) >= 1.0) {
      std::ostringstream msg;
      msg << "transfer function: pole " << p << " is not strictly inside the unit circle";
      throw DomainError(msg.str());
    }
  }
}

cplx DiscreteTF::operator()(cplx z) const {
  const cplx zi = 1.0 / z;
  const cplx d = poly_inv(den_, zi);
  if (std::abs(d) == 0.0) throw SingularPointError("transfer function evaluated at a pole");
  return poly_inv(num_, zi) / d;
}

cplx DiscreteTF::at_frequency(double omega) const { return (*this)(std::polar(1.0, omega)); }

std::vector<cplx> DiscreteTF::poles() const {
  // Trailing zero coefficients only add poles at the origin.
  std::size_t q = den_.size() - 1;
  while (q > 0 && den_[q] == 0.0) --q;
  std::vector<cplx> out(den_.size() - 1 - q, cplx(0.0));
  if (q == 0) return out;
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(q),
                                                    static_cast<Eigen::Index>(q));
  for (std::size_t k = 0; k < q; ++k) companion(0, static_cast<Eigen::Index>(k)) = -den_[k + 1];
  for (std::size_t k = 1; k < q; ++k) {
    companion(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k - 1)) = 1.0;
  }
  Eigen::EigenSolver<Eigen::MatrixXd> es(companion, false);
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) out.push_back(es.eigenvalues()(i));
  return out;
}

DiscreteTF make_resonant_system(double omega0, double xi, double fs) {
  if (!(omega0 > 0.0)) throw DomainError("resonant system: omega0 must be > 0");
  if (!(xi > 0.0 && xi < 1.0)) throw DomainError("resonant system: xi must lie in (0, 1)");
  if (!(fs > omega0 / kPi)) throw DomainError("resonant system: fs below the Nyquist rate");

  const double t = 1.0 / fs;
  Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
  m(0, 1) = 1.0;
  m(1, 0) = -omega0 * omega0;
  m(1, 1) = -2.0 * xi * omega0;
  m(1, 2) = omega0 * omega0;
  const Eigen::Matrix3d e = (m * t).exp();
  const Eigen::Matrix2d ad = e.topLeftCorner<2, 2>();
  const Eigen::Vector2d bd = e.topRightCorner<2, 1>();

  // C (zI - Ad)^-1 Bd with C = [1 0], through the 2x2 adjugate.
  const double b1 = bd(0);
  const double b2 = ad(0, 1) * bd(1) - ad(1, 1) * bd(0);
  return {{0.0, b1, b2}, {1.0, -ad.trace(), ad.determinant()}, fs};
}

DiscreteTF make_allpass(cplx pole, double fs) {
  if (!(std::abs(pole) < 1.0)) throw DomainError("allpass: pole must lie inside the unit circle");
  const double r2 = std::norm(pole);
  const double c = -2.0 * pole.real();
  return {{r2, c, 1.0}, {1.0, c, r2}, fs};
}

// ---------------------------------------------------------------------------

void TimeTrace::validate() const {
  if (!(sample_rate > 0.0)) throw DomainError("trace: sample rate must be > 0");
  for (double s : samples) {
    if (!std::isfinite(s)) throw DomainError("trace: non-finite sample");
  }
}

TimeTrace white_noise(std::size_t length, double variance, double sample_rate,
                      std::uint64_t seed) {
  if (!(variance >= 0.0)) throw DomainError("white_noise: variance must be >= 0");
  TimeTrace t{std::vector<double>(length, 0.0), sample_rate};
  t.validate();
  Rng rng = make_rng(seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(variance));
  for (double& s : t.samples) s = normal(rng);
  return t;
}

TimeTrace add_noise(const TimeTrace& trace, double variance, std::uint64_t seed) {
  if (!(variance >= 0.0)) throw DomainError("add_noise: variance must be >= 0");
  TimeTrace out = trace;
  if (variance == 0.0) return out;
  Rng rng = make_rng(seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(variance));
  for (double& s : out.samples) s += normal(rng);
  return out;
}

TimeTrace simulate(const DiscreteTF& tf, const TimeTrace& input, std::uint64_t seed,
                   double noise_var) {
  input.validate();
  if (std::abs(input.sample_rate - tf.sample_rate()) > 1e-12 * tf.sample_rate()) {
    throw DomainError("simulate: input and system sample rates differ");
  }
  const auto& b = tf.num();
  const auto& a = tf.den();
  const auto& u = input.samples;
  TimeTrace y{std::vector<double>(u.size(), 0.0), input.sample_rate};
  for (std::size_t n = 0; n < u.size(); ++n) {
    double acc = 0.0;
    for (std::size_t k = 0; k < b.size() && k <= n; ++k) acc += b[k] * u[n - k];
    for (std::size_t k = 1; k < a.size() && k <= n; ++k) acc -= a[k] * y.samples[n - k];
    y.samples[n] = acc;
  }
  return add_noise(y, noise_var, seed);
}

// ---------------------------------------------------------------------------

WindowConvention window_convention_from_string(const std::string& s) {
  if (s == "printed") return WindowConvention::printed;
  if (s == "half_width") return WindowConvention::half_width;
  throw DomainError("unknown window convention '" + s + "' (expected printed or half_width)");
}

std::string to_string(WindowConvention c) {
  return c == WindowConvention::printed ? "printed" : "half_width";
}

std::vector<double> gaussian_window(std::size_t taps, double sigma,
                                    WindowConvention convention) {
  if (taps < 1) throw DomainError("gaussian_window: taps must be >= 1");
  if (!(sigma > 0.0)) throw DomainError("gaussian_window: sigma must be > 0");
  const double len = static_cast<double>(taps);
  const double center = len / 2.0;
  std::vector<double> w(taps);
  for (std::size_t n = 0; n < taps; ++n) {
    const double d = static_cast<double>(n) - center;
    const double x = convention == WindowConvention::printed ? sigma * d / len
                                                             : d / (sigma * len);
    w[n] = std::exp(-0.5 * x * x);
  }
  return w;
}

FilterBankSpec FilterBankSpec::uniform(std::size_t count, std::size_t taps,
                                       double window_sigma) {
  FilterBankSpec spec;
  spec.taps = taps;
  spec.window_sigma = window_sigma;
  for (std::size_t i = 1; i <= count; ++i) {
    spec.center_freqs.push_back(static_cast<double>(i) * kPi / static_cast<double>(count + 1));
  }
  return spec;
}

void FilterBankSpec::validate() const {
  if (taps < 1) throw DomainError("filter bank: taps must be >= 1");
  if (!(window_sigma > 0.0)) throw DomainError("filter bank: window sigma must be > 0");
  if (center_freqs.empty()) throw DomainError("filter bank: no center frequencies");
  for (std::size_t i = 0; i < center_freqs.size(); ++i) {
    const double w = center_freqs[i];
    if (!(w > 0.0 && w < kPi)) throw DomainError("filter bank: frequencies must lie in (0, pi)");
    if (i > 0 && !(w > center_freqs[i - 1])) {
      throw DomainError("filter bank: frequencies must be strictly increasing");
    }
  }
}

EtfeResult etfe(const TimeTrace& u, const TimeTrace& y, const FilterBankSpec& spec,
                double floor_rel, std::size_t offset) {
  spec.validate();
  u.validate();
  y.validate();
  if (u.size() != y.size()) throw DomainError("etfe: input and output lengths differ");
  if (u.size() < offset + spec.taps) throw DomainError("etfe: traces shorter than the filter");

  const std::vector<double> w = gaussian_window(spec.taps, spec.window_sigma, spec.convention);
  const std::size_t last = offset + spec.taps - 1;
  double u_norm2 = 0.0;
  for (std::size_t n = offset; n <= last; ++n) u_norm2 += u.samples[n] * u.samples[n];
  const double floor = floor_rel * std::sqrt(u_norm2);

  EtfeResult out;
  for (double omega : spec.center_freqs) {
    // Filter output at the last sample: sum_m h(m) x(N - m), h(m) = e^{j omega m} w(m).
    cplx ui = 0.0;
    cplx yi = 0.0;
    for (std::size_t m = 0; m < spec.taps; ++m) {
      const cplx h = std::polar(w[m], omega * static_cast<double>(m));
      ui += h * u.samples[last - m];
      yi += h * y.samples[last - m];
    }
    if (!(std::abs(ui) >= floor) || std::abs(ui) == 0.0) {
      spdlog::warn("etfe: dropping omega = {} (|u_i(N)| = {} below floor {})", omega,
                   std::abs(ui), floor);
      out.dropped.push_back(omega);
      continue;
    }
    out.omegas.push_back(omega);
    out.data.sites.push_back(std::polar(1.0, omega));
    out.data.responses.push_back(yi / ui);
  }
  return out;
}

SegmentedEtfe etfe_segments(const TimeTrace& u, const TimeTrace& y,
                            const FilterBankSpec& spec, std::size_t segments,
                            double floor_rel) {
  if (segments < 2) throw DomainError("etfe_segments: need at least two segments");
  std::vector<EtfeResult> parts;
  parts.reserve(segments);
  for (std::size_t s = 0; s < segments; ++s) {
    parts.push_back(etfe(u, y, spec, floor_rel, s * spec.taps));
  }

  SegmentedEtfe out;
  out.first = parts.front();
  out.segments = segments;
  std::vector<double> usable;
  for (std::size_t i = 0; i < out.first.omegas.size(); ++i) {
    const double omega = out.first.omegas[i];
    std::vector<cplx> values;
    for (const auto& p : parts) {
      for (std::size_t j = 0; j < p.omegas.size(); ++j) {
        if (p.omegas[j] == omega) values.push_back(p.data.responses[j]);
      }
    }
    double var = 0.0;
    if (values.size() >= 2) {
      cplx mean = 0.0;
      for (cplx v : values) mean += v;
      mean /= static_cast<double>(values.size());
      for (cplx v : values) var += std::norm(v - mean);
      var /= static_cast<double>(values.size() - 1);
      usable.push_back(var);
    }
    out.segment_var.push_back(var);
  }
  if (usable.empty()) throw DomainError("etfe_segments: no frequency kept in two or more segments");
  // Ratio estimates are heavy tailed (a segment whose filtered input nearly
  // vanishes produces a huge outlier), so the pooled value is the median.
  std::sort(usable.begin(), usable.end());
  const std::size_t m = usable.size() / 2;
  out.pooled_var = usable.size() % 2 ? usable[m] : 0.5 * (usable[m - 1] + usable[m]);
  return out;
}

// ---------------------------------------------------------------------------

void write_trace(std::ostream& os, const TimeTrace& trace) {
  os << "# sample_rate=" << std::setprecision(17) << trace.sample_rate << "\n";
  for (double s : trace.samples) os << s << "\n";
}

TimeTrace read_trace(std::istream& is) {
  TimeTrace t;
  bool have_rate = false;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line.front() == '#') {
      const auto pos = line.find("sample_rate=");
      if (pos != std::string::npos) {
        t.sample_rate = std::stod(line.substr(pos + 12));
        have_rate = true;
      }
      continue;
    }
    t.samples.push_back(std::stod(line));
  }
  if (!have_rate) throw DomainError("read_trace: missing '# sample_rate=' header");
  t.validate();
  return t;
}

}  // namespace hinfgp
