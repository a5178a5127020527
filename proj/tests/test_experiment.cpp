#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "hinfgp/experiment.hpp"

using namespace hinfgp;
using nlohmann::json;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("hinfgp_test_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

json small_identify() {
  return json::parse(R"({
    "seed": 3,
    "identify": {
      "system": {"type": "allpass"},
      "data": {"segments": 2},
      "filter_bank": {"num_filters": 8, "taps": 200},
      "kernel": {"family": "geometric"},
      "optimizer": {"budget": 60, "restarts": 1},
      "grid_points": 32,
      "verify_n_max": 10,
      "symmetry_grid": 20,
      "schur_diagnostic": true
    }
  })");
}

}  // namespace

TEST(Config, DefaultsAndOverrides) {
  const ExperimentConfig c = parse_config(json::parse(R"({
    "seed": 9, "output_dir": "x",
    "identify": {"kernel": {"family": "geometric_cozine",
                            "init": {"omega0": "etfe_peak", "a": 0.9},
                            "fixed": ["alpha"]},
                 "noise_var": 1e-4, "estimator": "wide"}
  })"));
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.output_dir, "x");
  ASSERT_TRUE(c.identify);
  const IdentifyConfig& id = *c.identify;
  EXPECT_TRUE(std::holds_alternative<ResonantSystemConfig>(id.system));
  EXPECT_EQ(id.filter_bank.center_freqs.size(), 25u);
  EXPECT_EQ(id.filter_bank.taps, 1000u);
  EXPECT_TRUE(id.omega0_from_peak);
  EXPECT_DOUBLE_EQ(id.init.get("a"), 0.9);
  EXPECT_DOUBLE_EQ(*id.noise_var, 1e-4);
  EXPECT_TRUE(id.widely_linear);
  EXPECT_EQ(id.init.tunable_count(), 4u);
  EXPECT_FALSE(c.verify);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  const char* bad[] = {
      R"({"sede": 1})",
      R"({"seed": -1})",
      R"({"identify": {"kernel": {"family": "geometric"}, "bogus": 1}})",
      R"({"identify": {"kernel": {"family": "nope"}}})",
      R"({"identify": {"kernel": {"family": "geometric", "init": {"alpha": 1.5}}}})",
      R"({"identify": {"kernel": {"family": "geometric", "fixed": ["omega0"]}}})",
      R"({"identify": {"kernel": {"family": "geometric"}, "estimator": "both"}})",
      R"({"identify": {"kernel": {"family": "geometric"}, "system": {"type": "allpass", "pole_radius": 1.2}}})",
      R"({"identify": {"kernel": {"family": "geometric"}, "filter_bank": {"window_convention": "hann"}}})",
      R"({"identify": {"kernel": {"family": "geometric"}, "noise_var": "guess"}})",
      R"({"verify": {"kernel": {"name": "geometric"}}})",
      R"({"verify": {"kernel": {"name": "geometric", "alpha": 0.5}, "n_max": 5}})",
      R"({"sample": {"kernel": {"name": "geometric", "alpha": 0.5}, "covariance_pairs": [[0.5, 0, 2, 0]]}})",
      R"({"sample": {"kernel": {"name": "mixture", "components": []}}})",
  };
  for (const char* text : bad) {
    EXPECT_THROW(parse_config(json::parse(text)), ConfigError) << text;
  }
}

TEST(Config, KernelSpecParsing) {
  const KernelSpec s = parse_kernel_spec(json::parse(R"({
    "name": "mixture",
    "components": [
      {"weight": 2.0, "kernel": {"name": "geometric", "alpha": 0.5}},
      {"kernel": {"name": "cozine", "a": 0.5, "omega0": 1.0}}
    ]})"));
  ASSERT_EQ(s.components.size(), 2u);
  EXPECT_EQ(s.components[0].first, 2.0);
  EXPECT_EQ(s.components[1].first, 1.0);
  EXPECT_EQ(s.components[1].second.name, "cozine");
  const KernelSpec circ =
      parse_kernel_spec(json::parse(R"({"name": "circular", "base": {"name": "exponential"}})"));
  EXPECT_EQ(make_kernel(circ).complementary(2.0, 2.0), cplx(0.0, 0.0));
}

TEST(Config, HashIgnoresSeedAndOutputDir) {
  json a = small_identify();
  json b = a;
  b["seed"] = 99;
  b["output_dir"] = "elsewhere";
  EXPECT_EQ(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a).size(), 16u);
  b["identify"]["grid_points"] = 33;
  EXPECT_NE(config_hash(a), config_hash(b));
  EXPECT_EQ(parse_config(a).config_hash, config_hash(a));
}

TEST(Config, LoadReportsMissingFileAndBadJson) {
  EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
  const auto dir = scratch_dir("badjson");
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "c.json") << "{ not json";
  EXPECT_THROW(load_config(dir / "c.json"), ConfigError);
}

TEST(Streams, DistinctPerPurpose) {
  EXPECT_NE(stream_seed(1, SeedStream::input), stream_seed(1, SeedStream::output_noise));
  EXPECT_NE(stream_seed(1, SeedStream::input), stream_seed(2, SeedStream::input));
  EXPECT_EQ(stream_seed(5, SeedStream::sampling), stream_seed(5, SeedStream::sampling));
}

TEST(PredictionGrid, EvenlySpacedInsideZeroPi) {
  const auto g = prediction_grid(3);
  ASSERT_EQ(g.size(), 3u);
  EXPECT_DOUBLE_EQ(g[0], kPi / 4.0);
  EXPECT_DOUBLE_EQ(g[2], 3.0 * kPi / 4.0);
}

TEST(RunSample, ZeroCountWritesEmptySummary) {
  const ExperimentConfig c = parse_config(json::parse(R"({
    "sample": {"kernel": {"name": "geometric", "alpha": 0.25}, "count": 0}})"));
  const auto dir = scratch_dir("sample0");
  const SampleResult r = run_sample(*c.sample, {1, c.config_hash, dir});
  EXPECT_EQ(r.count, 0u);
  const json summary = json::parse(slurp(dir / "summary.json"));
  EXPECT_EQ(summary.at("count"), 0);
  EXPECT_FALSE(summary.contains("abs_sum_mean"));
  EXPECT_EQ(summary.at("config_hash"), c.config_hash);
}

TEST(RunSample, CovarianceAgainstKernel) {
  const ExperimentConfig c = parse_config(json::parse(R"({
    "sample": {"kernel": {"name": "cozine", "a": 0.5, "omega0": 1.5707963267948966},
               "count": 4000, "covariance_pairs": [[1.5, 0.5, 2.0, -1.0]]}})"));
  const SampleResult r = run_sample(*c.sample, {2, c.config_hash, {}});
  ASSERT_EQ(r.covariance.size(), 1u);
  EXPECT_TRUE(r.covariance[0].hermitian.within(r.expected[0].first, 4.0));
  EXPECT_TRUE(r.covariance[0].complementary.within(r.expected[0].second, 4.0));
}

TEST(RunVerify, GeometricKernelReport) {
  const ExperimentConfig c = parse_config(json::parse(R"({
    "verify": {"kernel": {"name": "geometric", "alpha": 0.5}, "n_max": 60}})"));
  const auto dir = scratch_dir("verify");
  const VerifyResult r = run_verify(*c.verify, {0, c.config_hash, dir});
  EXPECT_TRUE(r.symmetry_passed);
  EXPECT_EQ(r.hermitian.verdict, Verdict::converging);
  const std::string csv = slurp(dir / "driscoll.csv");
  EXPECT_EQ(csv.rfind("# config_hash=" + c.config_hash + "\n# seed=0\n", 0), 0u);

  const ExperimentConfig circ = parse_config(json::parse(R"({
    "verify": {"kernel": {"name": "circular", "base": {"name": "geometric", "alpha": 0.5}},
               "n_max": 20}})"));
  EXPECT_FALSE(run_verify(*circ.verify, {0, circ.config_hash, {}}).symmetry_passed);
}

TEST(RunIdentify, SmallAllpassRunIsDeterministic) {
  const ExperimentConfig c = parse_config(small_identify());
  const auto dir_a = scratch_dir("identify_a");
  const auto dir_b = scratch_dir("identify_b");
  const IdentifyResult a = run_identify(*c.identify, {c.seed, c.config_hash, dir_a});
  const IdentifyResult b = run_identify(*c.identify, {c.seed, c.config_hash, dir_b});
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.grid.size(), 32u);
  EXPECT_EQ(a.etfe_total, 8u);
  ASSERT_TRUE(a.p_relative_norm);
  EXPECT_EQ(a.noise_var_source, "segments");
  for (const char* f : {"etfe.csv", "prediction.csv", "hyperparameters.json", "verify.json",
                        "summary.json"}) {
    const std::string text = slurp(dir_a / f);
    EXPECT_FALSE(text.empty()) << f;
    EXPECT_EQ(text, slurp(dir_b / f)) << f;
    EXPECT_NE(text.find(c.config_hash), std::string::npos) << f;
  }
  const IdentifyResult other = run_identify(*c.identify, {c.seed + 1, c.config_hash, {}});
  EXPECT_NE(other.mean, a.mean);
}

TEST(RunIdentify, FullPrecisionTables) {
  const ExperimentConfig c = parse_config(small_identify());
  const auto dir = scratch_dir("identify_prec");
  const IdentifyResult r = run_identify(*c.identify, {c.seed, c.config_hash, dir});
  std::istringstream in(slurp(dir / "prediction.csv"));
  std::string line;
  for (int i = 0; i < 4; ++i) std::getline(in, line);  // two provenance lines, header, first row
  const double omega = std::stod(line.substr(0, line.find(',')));
  EXPECT_EQ(omega, r.grid[0]);
}
