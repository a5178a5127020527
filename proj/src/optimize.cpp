#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>
#include <spdlog/spdlog.h>

#include "hinfgp/regression.hpp"
#include "hinfgp/sampling.hpp"

namespace hinfgp {

namespace {

// Objective value handed to the simplex for -infinity likelihoods; large but
// finite so that centroid arithmetic stays well defined.
constexpr double kPenalty = 1e300;

struct Search {
  const KernelFamily* family;
  const FrequencyDataset* data;
  const Hyperparameters* init;
  std::size_t budget;
  std::size_t evaluations = 0;
  Hyperparameters best;
  double best_l = -std::numeric_limits<double>::infinity();

  [[nodiscard]] bool exhausted() const { return evaluations >= budget; }

  double evaluate(const Hyperparameters& theta) {
    if (exhausted()) return kPenalty;
    ++evaluations;
    const double l = log_marginal_likelihood(*family, theta, *data);
    if (l > best_l) {
      best_l = l;
      best = theta;
    }
    return std::isfinite(l) ? -l : kPenalty;
  }

  double evaluate(const std::vector<double>& x) {
    Hyperparameters theta;
    try {
      theta = init->from_unconstrained(x);
      theta.validate();
    } catch (const DomainError&) {
      // Transformed coordinates can saturate (e.g. sigmoid rounding to 1).
      if (exhausted()) return kPenalty;
      ++evaluations;
      return kPenalty;
    }
    return evaluate(theta);
  }
};

double objective(const gsl_vector* v, void* params) {
  auto* s = static_cast<Search*>(params);
  std::vector<double> x(v->size);
  for (std::size_t i = 0; i < v->size; ++i) x[i] = gsl_vector_get(v, i);
  return s->evaluate(x);
}

void run_simplex(Search& search, const std::vector<double>& start, double step) {
  const std::size_t n = start.size();
  gsl_multimin_function fn{&objective, n, &search};
  gsl_vector* x = gsl_vector_alloc(n);
  gsl_vector* ss = gsl_vector_alloc(n);
  for (std::size_t i = 0; i < n; ++i) gsl_vector_set(x, i, start[i]);
  gsl_vector_set_all(ss, step);

  gsl_multimin_fminimizer* m =
      gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n);
  if (gsl_multimin_fminimizer_set(m, &fn, x, ss) == GSL_SUCCESS) {
    while (!search.exhausted()) {
      if (gsl_multimin_fminimizer_iterate(m) != GSL_SUCCESS) break;
      if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(m), 1e-7) == GSL_SUCCESS) break;
    }
  }
  gsl_multimin_fminimizer_free(m);
  gsl_vector_free(ss);
  gsl_vector_free(x);
}

}  // namespace

OptimizationResult optimize_hyperparameters(const KernelFamily& family,
                                            const FrequencyDataset& data,
                                            const Hyperparameters& init,
                                            const OptimizerOptions& opts) {
  if (opts.budget < 1) throw DomainError("optimize: budget must be >= 1");
  init.validate();
  data.validate();
  // The simplex reports failures through return codes; keep GSL from aborting.
  gsl_error_handler_t* previous = gsl_set_error_handler_off();

  Search search{&family, &data, &init, opts.budget, 0, init,
                -std::numeric_limits<double>::infinity()};
  const std::vector<double> x0 = init.to_unconstrained();
  search.evaluate(init);

  if (!x0.empty()) {
    const std::size_t starts = opts.restarts + 1;
    const std::size_t share = (opts.budget - search.evaluations) / starts;
    Rng rng = make_rng(opts.seed, 0x6f7074);
    std::normal_distribution<double> normal;
    for (std::size_t r = 0; r < starts && !search.exhausted(); ++r) {
      std::vector<double> start = x0;
      if (r > 0) {
        for (double& xi : start) xi += opts.jitter * normal(rng);
      }
      // Each start gets an equal share; the last one takes what remains.
      const std::size_t saved = search.budget;
      search.budget = (r + 1 == starts) ? saved
                                        : std::min(saved, search.evaluations + share);
      run_simplex(search, start, opts.initial_step);
      search.budget = saved;
    }
  }
  gsl_set_error_handler(previous);

  if (!std::isfinite(search.best_l)) {
    throw std::runtime_error("optimize: every likelihood evaluation failed");
  }
  OptimizationResult out{search.best, search.best_l,
                         search.evaluations};
  spdlog::debug("optimize[{}]: L = {} after {} evaluations", family.name, out.log_likelihood,
                out.evaluations);
  return out;
}

}  // namespace hinfgp
