#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"

#include "hinfgp/kernels.hpp"
#include "hinfgp/regression.hpp"
#include "hinfgp/sampling.hpp"
#include "hinfgp/sysid.hpp"
#include "hinfgp/verify.hpp"

namespace hinfgp {

// ---------------------------------------------------------------------------
// Configuration. Every section is parsed strictly: unknown keys, wrong types
// and out-of-range values raise ConfigError naming the offending path.

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ResonantSystemConfig {
  double omega0 = 20.0 * kPi;
  double xi = 0.1;
  double sample_rate = 100.0;
};

struct AllpassSystemConfig {
  double pole_radius = 0.5;
  double pole_angle = kPi / 4.0;
  double sample_rate = 100.0;
};

struct ExternalSystemConfig {
  std::vector<double> num;
  std::vector<double> den;
  double sample_rate = 100.0;
};

using SystemConfig = std::variant<ResonantSystemConfig, AllpassSystemConfig, ExternalSystemConfig>;

DiscreteTF build_system(const SystemConfig& cfg);

struct DataConfig {
  double input_var = 0.01;          ///< variance of the white-noise excitation
  double input_noise_var = 1e-6;    ///< measurement noise added to the recorded input
  double output_noise_var = 1e-6;   ///< measurement noise added to the recorded output
  std::size_t segments = 8;         ///< trace length in filter lengths
};

struct IdentifyConfig {
  SystemConfig system = ResonantSystemConfig{};
  DataConfig data;
  FilterBankSpec filter_bank = FilterBankSpec::uniform(25);
  /// Regression noise variance; nullopt estimates it from the segment scatter.
  std::optional<double> noise_var;
  /// Use each frequency's own segment scatter as its noise variance.
  bool per_site_noise = false;
  /// Tune the noise level by maximum likelihood, starting from the value above.
  bool tune_noise = false;
  std::string family = "geometric_cozine";
  Hyperparameters init;  ///< family defaults overridden by the config
  /// Start omega0 at the frequency of the largest ETFE magnitude.
  bool omega0_from_peak = false;
  OptimizerOptions optimizer;
  bool widely_linear = false;  ///< estimator: "strict" or "wide"
  double p_floor = 1e-8;
  bool schur_diagnostic = false;
  double eta = 3.0;
  std::size_t grid_points = 512;
  std::size_t verify_n_max = 100;
  std::size_t symmetry_grid = 200;
};

struct VerifyConfig {
  KernelSpec kernel;
  std::size_t n_max = 200;
  std::size_t symmetry_grid = 200;
  DriscollOptions driscoll;
  double symmetry_tol = 1e-10;
};

struct SampleConfig {
  KernelSpec kernel;
  std::size_t count = 1000;
  std::size_t truncation = kDefaultTruncation;
  std::size_t write_paths = 20;  ///< paths stored in paths.txt (the rest only feed the statistics)
  std::vector<std::pair<cplx, cplx>> covariance_pairs;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "out";
  std::optional<IdentifyConfig> identify;
  std::optional<VerifyConfig> verify;
  std::optional<SampleConfig> sample;
  /// FNV-1a of the canonical document with "seed" and "output_dir" removed, in hex.
  std::string config_hash;
};

ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);

KernelSpec parse_kernel_spec(const nlohmann::json& j, const std::string& where = "kernel");

/// Hex FNV-1a 64 of the canonical dump of `doc` without "seed" and "output_dir".
std::string config_hash(const nlohmann::json& doc);

// ---------------------------------------------------------------------------
// Runs. Each returns its results in memory; when out_dir is non-empty the
// tables and reports are also written there.

struct RunContext {
  std::uint64_t seed = 0;
  std::string config_hash;
  std::filesystem::path out_dir;  ///< empty: write nothing
};

/// RNG stream numbers under the run seed.
enum class SeedStream : std::uint64_t {
  input = 1,
  output_noise = 2,
  input_noise = 3,
  optimizer = 4,
  sampling = 5,
};

std::uint64_t stream_seed(std::uint64_t seed, SeedStream stream);

struct IdentifyResult {
  DiscreteTF system;
  SegmentedEtfe etfe;
  double noise_var = 0.0;
  std::string noise_var_source;  ///< "config", "segments" or "per_site", plus "+tuned"
  FrequencyDataset data;         ///< regression input, final noise model included
  OptimizationResult tuning;
  std::vector<double> grid;      ///< rad/sample
  std::vector<cplx> truth;
  std::vector<cplx> mean;
  std::vector<double> variance;  ///< Hermitian predictive variance of the reported estimator
  std::vector<cplx> sl_mean;     ///< strictly linear mean (always computed)
  double median_rel_error = 0.0;  ///< median |mean - truth| / max |truth|
  std::size_t etfe_inside = 0;    ///< ETFE points inside their eta-ellipsoids
  std::size_t etfe_total = 0;
  std::optional<double> p_relative_norm;
  std::optional<double> wl_sl_rms;  ///< rms|wl - sl| / rms|sl| over the grid
  bool wl_fell_back = false;
  nlohmann::json verification;
};

IdentifyResult run_identify(const IdentifyConfig& cfg, const RunContext& ctx);

struct VerifyResult {
  SymmetryReport symmetry;
  bool symmetry_passed = false;
  DriscollReport hermitian;
  DriscollReport real;
  DriscollReport imag;
};

VerifyResult run_verify(const VerifyConfig& cfg, const RunContext& ctx);

struct SampleResult {
  std::size_t count = 0;
  MomentEstimate abs_sum;  ///< real-valued; se_im unused
  std::vector<CovarianceEstimate> covariance;
  std::vector<std::pair<cplx, cplx>> expected;  ///< analytic (k, k~) per pair
};

SampleResult run_sample(const SampleConfig& cfg, const RunContext& ctx);

/// Evenly spaced prediction frequencies (k+1) pi / (n+1), k = 0..n-1.
std::vector<double> prediction_grid(std::size_t n);

}  // namespace hinfgp
