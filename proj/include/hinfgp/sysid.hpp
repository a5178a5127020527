#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "hinfgp/regression.hpp"
#include "hinfgp/types.hpp"

namespace hinfgp {

/// g(z) = (b0 + b1 z^-1 + ... + bp z^-p) / (1 + a1 z^-1 + ... + aq z^-q).
/// Construction rejects a non-monic denominator and any pole on or outside
/// the unit circle.
class DiscreteTF {
 public:
  DiscreteTF(std::vector<double> num, std::vector<double> den, double sample_rate);

  [[nodiscard]] cplx operator()(cplx z) const;
  /// Response at z = e^{j omega}.
  [[nodiscard]] cplx at_frequency(double omega) const;
  [[nodiscard]] std::vector<cplx> poles() const;

  [[nodiscard]] const std::vector<double>& num() const { return num_; }
  [[nodiscard]] const std::vector<double>& den() const { return den_; }
  [[nodiscard]] double sample_rate() const { return fs_; }

 private:
  std::vector<double> num_;
  std::vector<double> den_;
  double fs_;
};

/// Zero-order-hold discretization of omega0^2 / (s^2 + 2 xi omega0 s + omega0^2)
/// at sample rate fs, computed from the exponential of the augmented
/// state-space matrix.
DiscreteTF make_resonant_system(double omega0, double xi, double fs);

/// Second-order allpass with poles pole and conj(pole):
///   (|p|^2 - 2Re(p) z^-1 + z^-2) / (1 - 2Re(p) z^-1 + |p|^2 z^-2).
DiscreteTF make_allpass(cplx pole, double fs);

struct TimeTrace {
  std::vector<double> samples;
  double sample_rate = 1.0;

  [[nodiscard]] std::size_t size() const { return samples.size(); }
  void validate() const;
};

/// i.i.d. N(0, variance) samples.
TimeTrace white_noise(std::size_t length, double variance, double sample_rate,
                      std::uint64_t seed);

/// Copy of `trace` plus i.i.d. N(0, variance) noise; variance 0 returns it unchanged.
TimeTrace add_noise(const TimeTrace& trace, double variance, std::uint64_t seed);

/// Difference-equation response from zero initial state, plus output noise of
/// variance noise_var. Throws DomainError if the sample rates differ.
TimeTrace simulate(const DiscreteTF& tf, const TimeTrace& input, std::uint64_t seed,
                   double noise_var);

enum class WindowConvention {
  printed,     ///< exp(-1/2 (sigma (n - taps/2) / taps)^2)
  half_width,  ///< exp(-1/2 ((n - taps/2) / (sigma taps))^2)
};

WindowConvention window_convention_from_string(const std::string& s);
std::string to_string(WindowConvention c);

/// w(0..taps-1); values outside that range are zero and not stored.
std::vector<double> gaussian_window(std::size_t taps, double sigma,
                                    WindowConvention convention = WindowConvention::printed);

struct FilterBankSpec {
  std::size_t taps = 1000;
  double window_sigma = 0.25;
  WindowConvention convention = WindowConvention::printed;
  std::vector<double> center_freqs;  ///< rad/sample, strictly increasing in (0, pi)

  /// `count` frequencies i*pi/(count+1), i = 1..count.
  static FilterBankSpec uniform(std::size_t count, std::size_t taps = 1000,
                                double window_sigma = 0.25);
  void validate() const;
};

struct EtfeResult {
  std::vector<double> omegas;   ///< frequencies that were kept
  FrequencyDataset data;        ///< sites e^{j omega}; noise_var left at 0
  std::vector<double> dropped;  ///< frequencies whose filtered input fell below the floor
};

/// Filters u and y with h_i(n) = e^{j w_i n} w(n) and returns y_i(N)/u_i(N)
/// at N = offset + taps - 1. A frequency is dropped, with a warning, when
/// |u_i(N)| < floor_rel * ||u segment||_2.
EtfeResult etfe(const TimeTrace& u, const TimeTrace& y, const FilterBankSpec& spec,
                double floor_rel = 1e-9, std::size_t offset = 0);

struct SegmentedEtfe {
  EtfeResult first;                 ///< estimate from the first segment
  std::vector<double> segment_var;  ///< per kept frequency, across segments
  double pooled_var = 0.0;          ///< median of segment_var
  std::size_t segments = 0;
};

/// ETFE over `segments` consecutive, non-overlapping windows of `taps`
/// samples. The scatter of the per-segment estimates at each frequency gives
/// a noise variance for the first-segment observations. Needs segments >= 2
/// and traces of at least segments * taps samples.
SegmentedEtfe etfe_segments(const TimeTrace& u, const TimeTrace& y,
                            const FilterBankSpec& spec, std::size_t segments,
                            double floor_rel = 1e-9);

/// Single column of samples preceded by '#' header lines, the first of which
/// records the sample rate.
void write_trace(std::ostream& os, const TimeTrace& trace);
TimeTrace read_trace(std::istream& is);

}  // namespace hinfgp
