#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "hinfgp/kernels.hpp"
#include "hinfgp/regression.hpp"
#include "hinfgp/sampling.hpp"

using namespace hinfgp;

namespace {

FrequencyDataset single_point(cplx y = 1.0, double noise = 0.0) {
  return {{cplx(2.0, 0.0)}, {y}, noise};
}

// Random sites in 1 <= |z| <= 3 with random responses.
FrequencyDataset random_dataset(std::mt19937_64& rng, std::size_t n, double noise) {
  std::uniform_real_distribution<double> rad(1.0, 3.0), ang(-kPi, kPi), val(-2.0, 2.0);
  FrequencyDataset d;
  d.noise_var = noise;
  for (std::size_t i = 0; i < n; ++i) {
    d.sites.push_back(std::polar(rad(rng), ang(rng)));
    d.responses.emplace_back(val(rng), val(rng));
  }
  return d;
}

ComplexKernel random_symmetric_kernel(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.1, 0.9), w(0.0, kPi), s(0.2, 2.0);
  return mixture_kernel(geometric_kernel(u(rng)), s(rng), cozine_kernel({u(rng), w(rng)}), s(rng));
}

// Widely linear estimate from the full augmented system [y; y*], solved
// directly with a 2n x 2n LU factorization.
struct AugmentedOracle {
  cplx mean;
  double var;
  cplx cvar;
};

AugmentedOracle augmented(const ComplexKernel& k, const FrequencyDataset& d, cplx z) {
  const auto n = static_cast<Eigen::Index>(d.size());
  Eigen::MatrixXcd big(2 * n, 2 * n);
  Eigen::VectorXcd yy(2 * n);
  Eigen::RowVectorXcd h(2 * n), hc(2 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const cplx kij = k.hermitian(d.sites[i], d.sites[j]) + (i == j ? d.noise_var : 0.0);
      const cplx ktij = k.complementary(d.sites[i], d.sites[j]);
      big(i, j) = kij;
      big(i, n + j) = ktij;
      big(n + i, j) = std::conj(ktij);
      big(n + i, n + j) = std::conj(kij);
    }
    yy(i) = d.responses[i];
    yy(n + i) = std::conj(d.responses[i]);
    // E[g(z) conj(y_i)] and E[g(z) y_i]
    h(i) = k.hermitian(z, d.sites[i]);
    h(n + i) = k.complementary(z, d.sites[i]);
    hc(i) = k.complementary(z, d.sites[i]);
    hc(n + i) = k.hermitian(z, d.sites[i]);
  }
  const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(big);
  const Eigen::RowVectorXcd w = lu.solve(h.adjoint()).adjoint();  // h big^-1 (big Hermitian)
  AugmentedOracle o;
  o.mean = (w * yy).value();
  o.var = (k.hermitian(z, z) - (w * h.adjoint()).value()).real();
  o.cvar = k.complementary(z, z) - (w * hc.transpose()).value();
  return o;
}

}  // namespace

TEST(Fit, SinglePointGram) {
  const Posterior post = fit(geometric_kernel(0.5), single_point());
  ASSERT_EQ(post.gram().rows(), 1);
  EXPECT_NEAR(post.gram()(0, 0).real(), 8.0 / 7.0, 1e-15);
  EXPECT_NEAR(post.log_det(), std::log(8.0 / 7.0), 1e-15);
}

TEST(Fit, RejectsBadData) {
  const ComplexKernel k = geometric_kernel(0.5);
  EXPECT_THROW(fit(k, FrequencyDataset{}), DomainError);
  EXPECT_THROW(fit(k, FrequencyDataset{{2.0, 2.0}, {1.0, 1.0}, 0.0}), ConditioningError);
  EXPECT_NO_THROW(fit(k, FrequencyDataset{{2.0, 2.0}, {1.0, 1.0}, 0.1}));
  EXPECT_THROW(fit(k, FrequencyDataset{{0.5}, {1.0}, 0.0}), DomainError);
  EXPECT_THROW(fit(k, FrequencyDataset{{2.0}, {1.0, 2.0}, 0.0}), DomainError);
  EXPECT_THROW(fit(k, FrequencyDataset{{2.0}, {1.0}, -1.0}), DomainError);
}

TEST(PredictSL, HandComputedSinglePoint) {
  const Posterior post = fit(geometric_kernel(0.5), single_point());
  const Prediction at_site = predict_sl(post, 2.0);
  EXPECT_NEAR(std::abs(at_site.mean - 1.0), 0.0, 1e-12);
  EXPECT_NEAR(at_site.variance, 0.0, 1e-12);

  const Prediction p = predict_sl(post, 3.0);
  EXPECT_NEAR(std::abs(p.mean - 21.0 / 22.0), 0.0, 1e-10);
  const double var = 18.0 / 17.0 - (12.0 / 11.0) * (12.0 / 11.0) * (7.0 / 8.0);
  EXPECT_NEAR(p.variance, var, 1e-10);
  EXPECT_NEAR(p.variance, 0.017501, 1e-6);
}

TEST(PredictSL, LinearInResponses) {
  std::mt19937_64 rng(1);
  const ComplexKernel k = random_symmetric_kernel(rng);
  FrequencyDataset d = random_dataset(rng, 8, 0.05);
  const cplx c(0.3, -1.7), z(1.4, 0.6);
  const Prediction a = predict_sl(fit(k, d), z);
  for (cplx& y : d.responses) y *= c;
  const Prediction b = predict_sl(fit(k, d), z);
  EXPECT_LT(std::abs(b.mean - c * a.mean), 1e-12 * std::abs(b.mean));
  EXPECT_NEAR(b.variance, a.variance, 1e-14);
}

TEST(PredictSL, InterpolationAndSandwichOnRandomInstances) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> rad(1.0, 4.0), ang(-kPi, kPi);
  for (int inst = 0; inst < 50; ++inst) {
    const ComplexKernel k = geometric_kernel(0.5);
    const FrequencyDataset d = random_dataset(rng, 4, 0.0);
    const Posterior post = fit(k, d);
    for (std::size_t i = 0; i < d.size(); ++i) {
      const Prediction p = predict_sl(post, d.sites[i]);
      EXPECT_LT(std::abs(p.mean - d.responses[i]), 1e-8) << inst;
      EXPECT_LT(p.variance, 1e-8) << inst;
    }
    for (int q = 0; q < 10; ++q) {
      const cplx z = std::polar(rad(rng), ang(rng));
      const Prediction p = predict_sl(post, z);
      EXPECT_GE(p.variance, 0.0);
      EXPECT_LE(p.variance, k.hermitian(z, z).real() + 1e-9);
    }
  }
}

TEST(PredictSL, AddingDataNeverIncreasesVariance) {
  std::mt19937_64 rng(3);
  for (int inst = 0; inst < 20; ++inst) {
    const ComplexKernel k = random_symmetric_kernel(rng);
    FrequencyDataset d = random_dataset(rng, 10, 0.01);
    FrequencyDataset fewer = d;
    fewer.sites.pop_back();
    fewer.responses.pop_back();
    const Posterior big = fit(k, d), small = fit(k, fewer);
    for (cplx z : {cplx(1.2, 0.0), cplx(-0.5, 1.5), cplx(2.0, -2.0)}) {
      EXPECT_LE(predict_sl(big, z).variance, predict_sl(small, z).variance + 1e-8);
    }
  }
}

TEST(PredictSL, ConjugatePairDataGiveConjugateSymmetricMean) {
  std::mt19937_64 rng(4);
  const ComplexKernel k = random_symmetric_kernel(rng);
  FrequencyDataset half = random_dataset(rng, 6, 0.02);
  FrequencyDataset d = half;
  for (std::size_t i = 0; i < half.size(); ++i) {
    d.sites.push_back(std::conj(half.sites[i]));
    d.responses.push_back(std::conj(half.responses[i]));
  }
  const Posterior post = fit(k, d);
  for (cplx z : {cplx(1.1, 0.7), cplx(-2.0, 0.3), cplx(0.2, -1.3)}) {
    EXPECT_LT(std::abs(predict_sl(post, std::conj(z)).mean - std::conj(predict_sl(post, z).mean)),
              1e-8);
  }
}

TEST(SchurP, CircularKernelGivesKyy) {
  std::mt19937_64 rng(5);
  const FrequencyDataset d = random_dataset(rng, 6, 0.1);
  const Posterior post = fit(circular_kernel(geometric_kernel(0.4)), d);
  const SchurComplement s = schur_P(post);
  EXPECT_LT((s.P - post.gram()).norm(), 1e-12);
  EXPECT_NEAR(s.relative_norm, 1.0, 1e-12);
}

TEST(SchurP, MaximallyImproperSinglePoint) {
  const SchurComplement s = schur_P(fit(geometric_kernel(0.5), single_point()));
  EXPECT_NEAR(std::abs(s.P(0, 0)), 0.0, 1e-15);
}

TEST(SchurP, HermitianPositiveSemidefinite) {
  std::mt19937_64 rng(6);
  for (int inst = 0; inst < 10; ++inst) {
    const Posterior post = fit(random_symmetric_kernel(rng), random_dataset(rng, 12, 0.01));
    const SchurComplement s = schur_P(post);
    EXPECT_LT((s.P - s.P.adjoint()).norm(), 1e-10 * s.P.norm());
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(s.P);
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-9 * s.P.trace().real());
  }
}

TEST(PredictWL, MatchesAugmentedOracle) {
  std::mt19937_64 rng(7);
  for (int inst = 0; inst < 10; ++inst) {
    const ComplexKernel k = random_symmetric_kernel(rng);
    const FrequencyDataset d = random_dataset(rng, 7, 0.05);
    const WidelyLinearPredictor wl(fit(k, d));
    ASSERT_FALSE(wl.fell_back());
    for (cplx z : {cplx(1.3, 0.2), cplx(-1.0, 1.0), cplx(2.5, -0.5)}) {
      const WidelyLinearPrediction p = wl(z);
      const AugmentedOracle o = augmented(k, d, z);
      EXPECT_LT(std::abs(p.mean - o.mean), 1e-9 * std::max(1.0, std::abs(o.mean))) << inst;
      EXPECT_NEAR(p.hermitian_var, std::max(o.var, 0.0), 1e-9) << inst;
      EXPECT_LT(std::abs(p.complementary_var - o.cvar), 1e-9) << inst;
    }
  }
}

TEST(PredictWL, CircularKernelReducesToStrictlyLinear) {
  std::mt19937_64 rng(8);
  const FrequencyDataset d = random_dataset(rng, 9, 0.02);
  const Posterior post = fit(circular_kernel(cozine_kernel({0.6, 1.0})), d);
  for (cplx z : {cplx(1.5, 0.5), cplx(-1.2, -0.4)}) {
    const WidelyLinearPrediction wl = predict_wl(post, z);
    const Prediction sl = predict_sl(post, z);
    EXPECT_FALSE(wl.fell_back);
    EXPECT_LT(std::abs(wl.mean - sl.mean), 1e-10);
    EXPECT_NEAR(wl.hermitian_var, sl.variance, 1e-10);
  }
}

TEST(PredictWL, FallsBackWhenPVanishes) {
  const Posterior post = fit(geometric_kernel(0.5), single_point());
  const WidelyLinearPrediction p = predict_wl(post, 3.0);
  EXPECT_TRUE(p.fell_back);
  EXPECT_LT(std::abs(p.mean - 21.0 / 22.0), 1e-10);
}

TEST(PredictWL, NeverWorseThanStrictlyLinear) {
  std::mt19937_64 rng(9);
  for (int inst = 0; inst < 20; ++inst) {
    const Posterior post = fit(random_symmetric_kernel(rng), random_dataset(rng, 8, 0.05));
    const WidelyLinearPredictor wl(post);
    for (cplx z : {cplx(1.1, 0.9), cplx(-2.0, 0.1), cplx(0.0, 1.0)}) {
      EXPECT_LE(wl(z).hermitian_var, predict_sl(post, z).variance + 1e-9);
    }
  }
}

TEST(Ellipsoid, Examples) {
  const EllipsoidBound zero = ellipsoid_from(cplx(0.0, 2.0), 0.0, 3.0);
  EXPECT_EQ(zero.radius, 0.0);
  EXPECT_DOUBLE_EQ(zero.mag_lo, 2.0);
  EXPECT_DOUBLE_EQ(zero.mag_hi, 2.0);
  EXPECT_NEAR(zero.phase_lo, kPi / 2.0, 1e-15);

  const EllipsoidBound unit = ellipsoid_from(1.0, 1.0, 3.0);
  EXPECT_DOUBLE_EQ(unit.radius, 3.0);
  EXPECT_DOUBLE_EQ(unit.mag_lo, 0.0);
  EXPECT_DOUBLE_EQ(unit.mag_hi, 4.0);
  EXPECT_TRUE(unit.full_circle);

  const EllipsoidBound four = ellipsoid_from(4.0, 1.0, 3.0);
  EXPECT_DOUBLE_EQ(four.mag_lo, 1.0);
  EXPECT_DOUBLE_EQ(four.mag_hi, 7.0);
  EXPECT_FALSE(four.full_circle);
  EXPECT_NEAR(four.phase_hi, 0.848062078981481, 1e-12);
  EXPECT_NEAR(four.phase_lo, -0.848062078981481, 1e-12);
  EXPECT_TRUE(four.contains(cplx(4.0, 2.9)));
  EXPECT_FALSE(four.contains(cplx(7.1, 0.0)));

  EXPECT_THROW(ellipsoid_from(1.0, 1.0, 0.0), DomainError);
}

TEST(Hyperparameters, DomainsAndTransforms) {
  Hyperparameters h = geometric_cozine_family().defaults;
  EXPECT_THROW(h.set("alpha", 1.0), DomainError);
  EXPECT_DOUBLE_EQ(h.get("alpha"), 0.5);  // rolled back
  EXPECT_THROW(h.set("omega0", 4.0), DomainError);
  EXPECT_THROW(h.set("sigma_g2", -1.0), DomainError);
  EXPECT_THROW((void)h.get("nope"), DomainError);
  EXPECT_THROW(Hyperparameters({{"a", 0.1}, {"a", 0.2}}), DomainError);

  h.set("omega0", 2.0);
  h.set("sigma_c2", 3.5);
  h.set_tunable("alpha", false);
  EXPECT_EQ(h.tunable_count(), 4u);
  const Hyperparameters back = h.from_unconstrained(h.to_unconstrained());
  for (std::size_t i = 0; i < h.items().size(); ++i) {
    EXPECT_NEAR(back.items()[i].value, h.items()[i].value, 1e-12);
  }
  const Hyperparameters wild = h.from_unconstrained({50.0, -50.0, 30.0, -30.0});
  EXPECT_NO_THROW(wild.validate());
}

TEST(LogMarginalLikelihood, ScalarExamples) {
  const KernelFamily fam = geometric_family();
  Hyperparameters th = fam.defaults;
  th.set("scale", 0.0);
  EXPECT_NEAR(log_marginal_likelihood(fam, th, {{2.0}, {0.0}, 1.0}), -0.9189385332046727, 1e-12);
  // k(2,2) = 8/7 scale, so scale 7/8 and noise 1 give K_yy = 2.
  th.set("scale", 7.0 / 8.0);
  EXPECT_NEAR(log_marginal_likelihood(fam, th, {{2.0}, {std::sqrt(2.0)}, 1.0}),
              -0.5 * (1.0 + std::log(2.0) + std::log(2.0 * kPi)), 1e-12);
  EXPECT_NEAR(log_marginal_likelihood(fam, th, {{2.0}, {std::sqrt(2.0)}, 1.0}), -1.7655121, 1e-7);
}

TEST(LogMarginalLikelihood, FailureIsMinusInfinity) {
  const KernelFamily fam = geometric_family();
  Hyperparameters th = fam.defaults;
  th.set("scale", 0.0);
  EXPECT_EQ(log_marginal_likelihood(fam, th, {{2.0}, {1.0}, 0.0}),
            -std::numeric_limits<double>::infinity());
}

TEST(LogMarginalLikelihood, NoiseOverrideParameter) {
  const KernelFamily base = geometric_family();
  KernelFamily fam = base;
  std::vector<Hyperparameter> items = base.defaults.items();
  items.push_back({kNoiseVarParam, 0.3, ParamDomain::nonnegative, true});
  const Hyperparameters with_noise(items);
  const FrequencyDataset d{{2.0, cplx(0.0, 1.5)}, {1.0, cplx(0.5, 0.5)}, 0.01};
  FrequencyDataset d2 = d;
  d2.noise_var = 0.3;
  EXPECT_NEAR(log_marginal_likelihood(fam, with_noise, d),
              log_marginal_likelihood(base, base.defaults, d2), 1e-13);
}

// On data drawn from the prior, inflating the noise far past the true level
// lowers the likelihood.
TEST(LogMarginalLikelihood, PrefersTrueNoiseScale) {
  const auto seq = StationarySequence::geometric(0.5);
  const SampledPath path = sample_stationary(seq, 200, 31);
  FrequencyDataset d;
  d.noise_var = 1e-4;
  for (int i = 1; i <= 25; ++i) {
    const cplx z = std::polar(1.0, i * kPi / 26.0);
    d.sites.push_back(z);
    d.responses.push_back(eval_path(path, z));
  }
  const KernelFamily fam = geometric_family();
  FrequencyDataset noisy = d;
  noisy.noise_var = 100.0;
  EXPECT_GT(log_marginal_likelihood(fam, fam.defaults, d),
            log_marginal_likelihood(fam, fam.defaults, noisy));
}

TEST(Optimizer, BudgetOneReturnsInit) {
  const KernelFamily fam = geometric_family();
  Hyperparameters init = fam.defaults;
  init.set("alpha", 0.3);
  const FrequencyDataset d{{2.0, cplx(0.0, 1.5), cplx(-1.2, 0.2)}, {1.0, 0.5, -0.2}, 0.01};
  OptimizerOptions o;
  o.budget = 1;
  const OptimizationResult r = optimize_hyperparameters(fam, d, init, o);
  EXPECT_EQ(r.evaluations, 1u);
  EXPECT_EQ(r.best.get("alpha"), 0.3);
  EXPECT_EQ(r.best.get("scale"), 1.0);
  EXPECT_EQ(r.log_likelihood, log_marginal_likelihood(fam, init, d));
}

TEST(Optimizer, ImprovesLikelihoodAndRespectsBudget) {
  std::mt19937_64 rng(10);
  const FrequencyDataset d = random_dataset(rng, 10, 0.05);
  const KernelFamily fam = cozine_family();
  OptimizerOptions o;
  o.budget = 300;
  o.seed = 4;
  const OptimizationResult r = optimize_hyperparameters(fam, d, fam.defaults, o);
  EXPECT_LE(r.evaluations, 300u);
  EXPECT_GE(r.log_likelihood, log_marginal_likelihood(fam, fam.defaults, d));
  EXPECT_NO_THROW(r.best.validate());
}

TEST(Optimizer, FixedParametersStayPut) {
  std::mt19937_64 rng(11);
  const FrequencyDataset d = random_dataset(rng, 8, 0.05);
  const KernelFamily fam = geometric_family();
  Hyperparameters init = fam.defaults;
  init.set("scale", 2.5);
  init.set_tunable("scale", false);
  OptimizerOptions o;
  o.budget = 100;
  const OptimizationResult r = optimize_hyperparameters(fam, d, init, o);
  EXPECT_EQ(r.best.get("scale"), 2.5);
}

TEST(Optimizer, InvariantToDataOrder) {
  const SampledPath path = sample_stationary(StationarySequence::geometric(0.5), 200, 12);
  FrequencyDataset d;
  d.noise_var = 1e-3;
  for (int i = 1; i <= 12; ++i) {
    const cplx z = std::polar(1.2, i * kPi / 13.0);
    d.sites.push_back(z);
    d.responses.push_back(eval_path(path, z));
  }
  FrequencyDataset rev = d;
  std::reverse(rev.sites.begin(), rev.sites.end());
  std::reverse(rev.responses.begin(), rev.responses.end());
  const KernelFamily fam = geometric_family();
  OptimizerOptions o;
  o.budget = 400;
  const OptimizationResult a = optimize_hyperparameters(fam, d, fam.defaults, o);
  const OptimizationResult b = optimize_hyperparameters(fam, rev, fam.defaults, o);
  EXPECT_NEAR(a.log_likelihood, b.log_likelihood, 1e-6);
  EXPECT_NEAR(a.best.get("alpha"), b.best.get("alpha"), 1e-3);
  EXPECT_NEAR(a.best.get("scale"), b.best.get("scale"), 1e-3 * a.best.get("scale"));
}

// Self-consistency: tune alpha on paths drawn from the geometric(0.5) prior.
TEST(Optimizer, RecoversGeometricAlpha) {
  const auto seq = StationarySequence::geometric(0.5);
  const KernelFamily fam = geometric_family();
  Hyperparameters init = fam.defaults;
  init.set_tunable("scale", false);
  init.set("alpha", 0.3);
  std::vector<double> found;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const SampledPath path = sample_stationary(seq, 200, derive_seed(777, seed));
    FrequencyDataset d;
    d.noise_var = 1e-4;
    for (int i = 0; i < 25; ++i) {
      const cplx z = std::polar(1.0, -kPi + (i + 0.5) * 2.0 * kPi / 25.0);
      d.sites.push_back(z);
      d.responses.push_back(eval_path(path, z));
    }
    OptimizerOptions o;
    o.budget = 150;
    o.restarts = 1;
    o.seed = seed;
    found.push_back(optimize_hyperparameters(fam, d, init, o).best.get("alpha"));
  }
  std::nth_element(found.begin(), found.begin() + 10, found.end());
  EXPECT_NEAR(found[10], 0.5, 0.15);
}
