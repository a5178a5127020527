#include "hinfgp/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

#include <spdlog/spdlog.h>

namespace hinfgp {

using nlohmann::json;

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

class OutputDir {
 public:
  explicit OutputDir(const RunContext& ctx) : ctx_(ctx) {
    if (!ctx_.out_dir.empty()) std::filesystem::create_directories(ctx_.out_dir);
  }

  [[nodiscard]] bool enabled() const { return !ctx_.out_dir.empty(); }

  // CSV file with the provenance header already written.
  [[nodiscard]] std::ofstream table(const std::string& name, const std::string& columns) const {
    std::ofstream os = open(name);
    os << "# config_hash=" << ctx_.config_hash << "\n# seed=" << ctx_.seed << "\n"
       << columns << "\n"
       << std::setprecision(17);
    return os;
  }

  void document(const std::string& name, json body) const {
    body["config_hash"] = ctx_.config_hash;
    body["seed"] = ctx_.seed;
    std::ofstream os = open(name);
    os << body.dump(2) << "\n";
  }

  [[nodiscard]] std::ofstream open(const std::string& name) const {
    std::ofstream os(ctx_.out_dir / name);
    if (!os) throw std::runtime_error("cannot write '" + (ctx_.out_dir / name).string() + "'");
    return os;
  }

 private:
  const RunContext& ctx_;
};

json complex_json(cplx c) { return json::array({c.real(), c.imag()}); }

json hyperparameters_json(const Hyperparameters& h) {
  json values = json::object();
  json fixed = json::array();
  for (const auto& p : h.items()) {
    values[p.name] = p.value;
    if (!p.tunable) fixed.push_back(p.name);
  }
  return {{"values", values}, {"fixed", fixed}};
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

json driscoll_block(const ComplexKernel& k, std::size_t n_max, const DriscollOptions& opts,
                    DriscollReport* herm_out = nullptr, DriscollReport* real_out = nullptr,
                    DriscollReport* imag_out = nullptr) {
  const ScalarKernelFn herm = [k](cplx z, cplx w) { return k.hermitian(z, w); };
  const RealImagKernels ri = real_imag_kernels(k);
  const PointSource points = PointSource::golden_spiral();
  DriscollReport h = driscoll_test(herm, n_max, points, opts);
  DriscollReport r = driscoll_test(ri.real, n_max, points, opts);
  DriscollReport i = driscoll_test(ri.imag, n_max, points, opts);
  json out = {{"points", points.describe()}, {"hermitian", h}, {"real", r}, {"imag", i}};
  if (herm_out) *herm_out = std::move(h);
  if (real_out) *real_out = std::move(r);
  if (imag_out) *imag_out = std::move(i);
  return out;
}

}  // namespace

std::uint64_t stream_seed(std::uint64_t seed, SeedStream stream) {
  return derive_seed(seed, static_cast<std::uint64_t>(stream));
}

DiscreteTF build_system(const SystemConfig& cfg) {
  return std::visit(
      Overloaded{
          [](const ResonantSystemConfig& c) {
            return make_resonant_system(c.omega0, c.xi, c.sample_rate);
          },
          [](const AllpassSystemConfig& c) {
            return make_allpass(std::polar(c.pole_radius, c.pole_angle), c.sample_rate);
          },
          [](const ExternalSystemConfig& c) { return DiscreteTF(c.num, c.den, c.sample_rate); }},
      cfg);
}

std::vector<double> prediction_grid(std::size_t n) {
  std::vector<double> g(n);
  for (std::size_t k = 0; k < n; ++k) {
    g[k] = static_cast<double>(k + 1) * kPi / static_cast<double>(n + 1);
  }
  return g;
}

// ---------------------------------------------------------------------------

IdentifyResult run_identify(const IdentifyConfig& cfg, const RunContext& ctx) {
  const DiscreteTF system = build_system(cfg.system);
  const double fs = system.sample_rate();
  const FilterBankSpec& bank = cfg.filter_bank;

  // Data generation: excitation through the system, then measurement noise on
  // both recorded traces.
  const std::size_t length = cfg.data.segments * bank.taps;
  const TimeTrace u_true =
      white_noise(length, cfg.data.input_var, fs, stream_seed(ctx.seed, SeedStream::input));
  const TimeTrace y_obs = simulate(system, u_true, stream_seed(ctx.seed, SeedStream::output_noise),
                                   cfg.data.output_noise_var);
  const TimeTrace u_obs = add_noise(u_true, cfg.data.input_noise_var,
                                    stream_seed(ctx.seed, SeedStream::input_noise));

  SegmentedEtfe etfe_out;
  if (cfg.data.segments >= 2) {
    etfe_out = etfe_segments(u_obs, y_obs, bank, cfg.data.segments);
  } else {
    etfe_out.first = etfe(u_obs, y_obs, bank);
    etfe_out.segments = 1;
    etfe_out.segment_var.assign(etfe_out.first.omegas.size(), 0.0);
  }
  if (etfe_out.first.omegas.empty()) throw DomainError("identify: every ETFE frequency was dropped");

  IdentifyResult res{system, etfe_out};
  res.noise_var = cfg.noise_var.value_or(etfe_out.pooled_var);
  res.noise_var_source = cfg.noise_var ? "config" : cfg.per_site_noise ? "per_site" : "segments";
  FrequencyDataset data = etfe_out.first.data;
  data.noise_var = res.noise_var;
  if (cfg.per_site_noise) {
    // Frequencies seen in fewer than two segments have no scatter estimate.
    for (double v : etfe_out.segment_var) {
      data.site_noise_var.push_back(v > 0.0 ? v : etfe_out.pooled_var);
    }
  }

  // Hyperparameter tuning.
  const KernelFamily family = family_by_name(cfg.family);
  Hyperparameters init = cfg.init;
  if (cfg.omega0_from_peak && init.contains("omega0")) {
    std::size_t peak = 0;
    for (std::size_t i = 1; i < data.size(); ++i) {
      if (std::abs(data.responses[i]) > std::abs(data.responses[peak])) peak = i;
    }
    init.set("omega0", etfe_out.first.omegas[peak]);
  }
  if (cfg.tune_noise) {
    std::vector<Hyperparameter> items = init.items();
    items.push_back({kNoiseVarParam, res.noise_var, ParamDomain::nonnegative, true});
    init = Hyperparameters(std::move(items));
  }
  OptimizerOptions opts = cfg.optimizer;
  opts.seed = stream_seed(ctx.seed, SeedStream::optimizer);
  res.tuning = optimize_hyperparameters(family, data, init, opts);
  if (cfg.tune_noise) {
    const double tuned = res.tuning.best.get(kNoiseVarParam);
    for (double& v : data.site_noise_var) v *= tuned / data.noise_var;
    res.noise_var = tuned;
    res.noise_var_source += "+tuned";
    data.noise_var = tuned;
  }
  res.data = data;
  const ComplexKernel kernel = family.build(res.tuning.best);
  const Posterior post = fit(kernel, data);

  // Prediction over the grid.
  res.grid = prediction_grid(cfg.grid_points);
  std::optional<WidelyLinearPredictor> wl;
  if (cfg.widely_linear || cfg.schur_diagnostic) {
    wl.emplace(post, cfg.p_floor);
    res.p_relative_norm = wl->relative_norm();
    res.wl_fell_back = wl->fell_back();
  }
  std::vector<cplx> wl_mean;
  std::vector<double> wl_var;
  for (double omega : res.grid) {
    const cplx z = std::polar(1.0, omega);
    res.truth.push_back(system(z));
    const Prediction sl = predict_sl(post, z);
    res.sl_mean.push_back(sl.mean);
    if (wl) {
      const WidelyLinearPrediction p = (*wl)(z);
      wl_mean.push_back(p.mean);
      wl_var.push_back(p.hermitian_var);
    }
    res.mean.push_back(cfg.widely_linear ? wl_mean.back() : sl.mean);
    res.variance.push_back(cfg.widely_linear ? wl_var.back() : sl.variance);
  }
  if (wl) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t k = 0; k < res.grid.size(); ++k) {
      num += std::norm(wl_mean[k] - res.sl_mean[k]);
      den += std::norm(res.sl_mean[k]);
    }
    res.wl_sl_rms = den > 0.0 ? std::sqrt(num / den) : 0.0;
  }

  double gmax = 0.0;
  for (cplx g : res.truth) gmax = std::max(gmax, std::abs(g));
  std::vector<double> rel;
  for (std::size_t k = 0; k < res.grid.size(); ++k) {
    rel.push_back(std::abs(res.mean[k] - res.truth[k]) / gmax);
  }
  res.median_rel_error = median(rel);

  // ETFE points against their ellipsoids.
  std::vector<EllipsoidBound> site_bounds;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const cplx z = data.sites[i];
    EllipsoidBound b;
    if (cfg.widely_linear) {
      const WidelyLinearPrediction p = (*wl)(z);
      b = ellipsoid_from(p.mean, p.hermitian_var, cfg.eta);
    } else {
      b = ellipsoid(post, z, cfg.eta);
    }
    res.etfe_inside += b.contains(data.responses[i]) ? 1 : 0;
    site_bounds.push_back(b);
  }
  res.etfe_total = data.size();

  // Verification of the tuned prior.
  const std::vector<cplx> sym_grid = annulus_grid(cfg.symmetry_grid);
  const SymmetryReport sym = symmetry_test(kernel, sym_grid);
  res.verification = {{"symmetry", sym},
                      {"symmetry_passed", sym.passed()},
                      {"driscoll", driscoll_block(kernel, cfg.verify_n_max, {})}};

  const OutputDir out(ctx);
  if (out.enabled()) {
    {
      std::ofstream os = out.table(
          "etfe.csv", "omega,re,im,segment_var,true_re,true_im,inside_ellipsoid");
      const auto& e = etfe_out.first;
      for (std::size_t i = 0; i < e.omegas.size(); ++i) {
        const cplx g = system(e.data.sites[i]);
        os << e.omegas[i] << ',' << e.data.responses[i].real() << ','
           << e.data.responses[i].imag() << ',' << etfe_out.segment_var[i] << ',' << g.real()
           << ',' << g.imag() << ',' << (site_bounds[i].contains(e.data.responses[i]) ? 1 : 0)
           << "\n";
      }
    }
    {
      std::ofstream os = out.table(
          "prediction.csv",
          "omega,true_re,true_im,true_mag,true_phase,mean_re,mean_im,mag,phase,sigma,"
          "mag_lo,mag_hi,phase_lo,phase_hi,full_circle");
      for (std::size_t k = 0; k < res.grid.size(); ++k) {
        const EllipsoidBound b = ellipsoid_from(res.mean[k], res.variance[k], cfg.eta);
        os << res.grid[k] << ',' << res.truth[k].real() << ',' << res.truth[k].imag() << ','
           << std::abs(res.truth[k]) << ',' << std::arg(res.truth[k]) << ','
           << res.mean[k].real() << ',' << res.mean[k].imag() << ',' << std::abs(res.mean[k])
           << ',' << std::arg(res.mean[k]) << ',' << std::sqrt(res.variance[k]) << ','
           << b.mag_lo << ',' << b.mag_hi << ',' << b.phase_lo << ',' << b.phase_hi << ','
           << (b.full_circle ? 1 : 0) << "\n";
      }
    }
    json hyper = hyperparameters_json(res.tuning.best);
    hyper["family"] = cfg.family;
    hyper["log_likelihood"] = res.tuning.log_likelihood;
    hyper["evaluations"] = res.tuning.evaluations;
    hyper["noise_var"] = res.noise_var;
    hyper["noise_var_source"] = res.noise_var_source;
    hyper["initial"] = hyperparameters_json(init)["values"];
    out.document("hyperparameters.json", hyper);
    out.document("verify.json", res.verification);

    json summary = {
        {"command", "identify"},
        {"estimator", cfg.widely_linear ? "wide" : "strict"},
        {"system", {{"num", system.num()}, {"den", system.den()}, {"sample_rate", fs}}},
        {"etfe", {{"kept", etfe_out.first.omegas.size()},
                  {"dropped", etfe_out.first.dropped},
                  {"segments", etfe_out.segments}}},
        {"eta", cfg.eta},
        {"median_relative_error", res.median_rel_error},
        {"etfe_inside_ellipsoid", res.etfe_inside},
        {"etfe_total", res.etfe_total},
        {"log_likelihood", res.tuning.log_likelihood},
    };
    if (res.p_relative_norm) {
      summary["schur_relative_norm"] = *res.p_relative_norm;
      summary["widely_linear_fell_back"] = res.wl_fell_back;
      summary["wl_sl_relative_rms"] = *res.wl_sl_rms;
    }
    out.document("summary.json", summary);
  }
  return res;
}

// ---------------------------------------------------------------------------

VerifyResult run_verify(const VerifyConfig& cfg, const RunContext& ctx) {
  const ComplexKernel k = make_kernel(cfg.kernel);
  VerifyResult res;
  const std::vector<cplx> grid = annulus_grid(cfg.symmetry_grid);
  res.symmetry = symmetry_test(k, grid);
  res.symmetry_passed = res.symmetry.passed(cfg.symmetry_tol);
  const json driscoll =
      driscoll_block(k, cfg.n_max, cfg.driscoll, &res.hermitian, &res.real, &res.imag);

  const OutputDir out(ctx);
  if (out.enabled()) {
    json symmetry = res.symmetry;
    symmetry["passed"] = res.symmetry_passed;
    symmetry["tolerance"] = cfg.symmetry_tol;
    out.document("verify.json", {{"command", "verify"},
                                 {"kernel", k.name()},
                                 {"hyperparameters", k.hyperparams()},
                                 {"symmetry", symmetry},
                                 {"driscoll", driscoll}});
    std::ofstream os = out.table("driscoll.csv", "n,trace_hermitian,trace_real,trace_imag");
    for (std::size_t i = 0; i < res.hermitian.n_values.size(); ++i) {
      os << res.hermitian.n_values[i] << ',' << res.hermitian.traces[i] << ','
         << res.real.traces[i] << ',' << res.imag.traces[i] << "\n";
    }
  }
  return res;
}

// ---------------------------------------------------------------------------

SampleResult run_sample(const SampleConfig& cfg, const RunContext& ctx) {
  PathSampler sampler;
  if (cfg.kernel.name == "cozine") {
    const CozineParams p{cfg.kernel.params.at("a"), cfg.kernel.params.at("omega0")};
    if (cfg.kernel.params.count("scale")) {
      throw DomainError("sampling does not support scaled kernels");
    }
    sampler = [p](std::uint64_t s) { return sample_cozine(p, s); };
  } else {
    const StationarySequence seq = sequence_from_spec(cfg.kernel);
    const std::size_t trunc = cfg.truncation;
    sampler = [seq, trunc](std::uint64_t s) { return sample_stationary(seq, trunc, s); };
  }
  const ComplexKernel k = make_kernel(cfg.kernel);

  SampleResult res;
  res.count = cfg.count;
  const std::uint64_t base = stream_seed(ctx.seed, SeedStream::sampling);
  MomentAccumulator abs_acc;
  std::vector<MomentAccumulator> herm(cfg.covariance_pairs.size());
  std::vector<MomentAccumulator> comp(cfg.covariance_pairs.size());

  const OutputDir out(ctx);
  std::ofstream paths;
  if (out.enabled()) paths = out.table("paths.txt", "# one block per path; blocks separated by blank lines");

  for (std::size_t i = 0; i < cfg.count; ++i) {
    const SampledPath path = sampler(derive_seed(base, i));
    abs_acc.add(abs_sum(path));
    for (std::size_t p = 0; p < cfg.covariance_pairs.size(); ++p) {
      const auto& [z, w] = cfg.covariance_pairs[p];
      const cplx fz = eval_path(path, z);
      const cplx fw = eval_path(path, w);
      herm[p].add(fz * std::conj(fw));
      comp[p].add(fz * fw);
    }
    if (out.enabled() && i < cfg.write_paths) {
      paths << "# path=" << i << "\n";
      write_path(paths, path);
      paths << "\n";
    }
  }
  res.abs_sum = abs_acc.estimate();
  json pairs = json::array();
  for (std::size_t p = 0; p < cfg.covariance_pairs.size(); ++p) {
    const auto& [z, w] = cfg.covariance_pairs[p];
    res.covariance.push_back({herm[p].estimate(), comp[p].estimate()});
    res.expected.emplace_back(k.hermitian(z, w), k.complementary(z, w));
    const auto& c = res.covariance.back();
    pairs.push_back({{"z", complex_json(z)},
                     {"w", complex_json(w)},
                     {"hermitian_mc", complex_json(c.hermitian.mean)},
                     {"hermitian_se", {c.hermitian.se_re, c.hermitian.se_im}},
                     {"hermitian_expected", complex_json(res.expected.back().first)},
                     {"complementary_mc", complex_json(c.complementary.mean)},
                     {"complementary_se", {c.complementary.se_re, c.complementary.se_im}},
                     {"complementary_expected", complex_json(res.expected.back().second)}});
  }
  if (out.enabled()) {
    json summary = {{"command", "sample"},
                    {"kernel", k.name()},
                    {"hyperparameters", k.hyperparams()},
                    {"count", cfg.count},
                    {"paths_written", std::min(cfg.count, cfg.write_paths)},
                    {"covariance", pairs}};
    if (cfg.count > 0) {
      summary["abs_sum_mean"] = res.abs_sum.mean.real();
      summary["abs_sum_se"] = res.abs_sum.se_re;
    }
    out.document("summary.json", summary);
  }
  return res;
}

}  // namespace hinfgp
