#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "hinfgp/experiment.hpp"

namespace hinfgp {

using nlohmann::json;

namespace {

// Strict view of one JSON object: every key must be read exactly once before
// finish(), otherwise the leftover keys are reported as unknown.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("expected an object");
  }

  [[nodiscard]] bool has(const std::string& key) const { return j_.contains(key); }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) fail("missing required key '" + key + "'");
    return j_.at(key);
  }

  double number(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number()) fail("'" + key + "' must be a number");
    return v.get<double>();
  }
  double number(const std::string& key, double fallback) {
    return has(key) ? number(key) : (seen_.insert(key), fallback);
  }

  std::size_t count(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
      fail("'" + key + "' must be a non-negative integer");
    }
    return v.get<std::size_t>();
  }
  std::size_t count(const std::string& key, std::size_t fallback) {
    return has(key) ? count(key) : (seen_.insert(key), fallback);
  }

  std::string text(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_string()) fail("'" + key + "' must be a string");
    return v.get<std::string>();
  }
  std::string text(const std::string& key, const std::string& fallback) {
    return has(key) ? text(key) : (seen_.insert(key), fallback);
  }

  bool flag(const std::string& key, bool fallback) {
    seen_.insert(key);
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_boolean()) fail("'" + key + "' must be true or false");
    return v.get<bool>();
  }

  std::vector<double> numbers(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_array()) fail("'" + key + "' must be an array of numbers");
    std::vector<double> out;
    for (const auto& x : v) {
      if (!x.is_number()) fail("'" + key + "' must be an array of numbers");
      out.push_back(x.get<double>());
    }
    return out;
  }

  Section child(const std::string& key) { return {raw(key), path_ + "." + key}; }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) fail("unknown key '" + key + "'");
    }
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError("config " + path_ + ": " + msg);
  }

  [[nodiscard]] const std::string& path() const { return path_; }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

SystemConfig parse_system(Section s) {
  const std::string type = s.text("type");
  SystemConfig out;
  if (type == "resonant") {
    ResonantSystemConfig c;
    c.omega0 = s.number("omega0", c.omega0);
    c.xi = s.number("xi", c.xi);
    c.sample_rate = s.number("sample_rate", c.sample_rate);
    out = c;
  } else if (type == "allpass") {
    AllpassSystemConfig c;
    c.pole_radius = s.number("pole_radius", c.pole_radius);
    c.pole_angle = s.number("pole_angle", c.pole_angle);
    c.sample_rate = s.number("sample_rate", c.sample_rate);
    out = c;
  } else if (type == "external") {
    ExternalSystemConfig c;
    c.num = s.numbers("num");
    c.den = s.numbers("den");
    c.sample_rate = s.number("sample_rate", c.sample_rate);
    out = c;
  } else {
    s.fail("unknown system type '" + type + "' (expected resonant, allpass or external)");
  }
  s.finish();
  try {
    (void)build_system(out);
  } catch (const DomainError& e) {
    s.fail(e.what());
  }
  return out;
}

DataConfig parse_data(Section s) {
  DataConfig d;
  d.input_var = s.number("input_var", d.input_var);
  d.input_noise_var = s.number("input_noise_var", d.input_noise_var);
  d.output_noise_var = s.number("output_noise_var", d.output_noise_var);
  d.segments = s.count("segments", d.segments);
  s.finish();
  if (!(d.input_var > 0.0)) s.fail("input_var must be > 0");
  if (!(d.input_noise_var >= 0.0) || !(d.output_noise_var >= 0.0)) {
    s.fail("noise variances must be >= 0");
  }
  if (d.segments < 1) s.fail("segments must be >= 1");
  return d;
}

FilterBankSpec parse_filter_bank(Section s) {
  const std::size_t n = s.count("num_filters", 25);
  const std::size_t taps = s.count("taps", 1000);
  const double sigma = s.number("window_sigma", 0.25);
  FilterBankSpec spec = FilterBankSpec::uniform(n, taps, sigma);
  if (s.has("center_freqs")) {
    spec.center_freqs = s.numbers("center_freqs");
    if (spec.center_freqs.size() != n) s.fail("center_freqs must have num_filters entries");
  }
  try {
    spec.convention = window_convention_from_string(s.text("window_convention", "printed"));
    s.finish();
    spec.validate();
  } catch (const DomainError& e) {
    s.fail(e.what());
  }
  return spec;
}

OptimizerOptions parse_optimizer(Section s) {
  OptimizerOptions o;
  o.budget = s.count("budget", o.budget);
  o.restarts = s.count("restarts", o.restarts);
  o.jitter = s.number("jitter", o.jitter);
  o.initial_step = s.number("initial_step", o.initial_step);
  s.finish();
  if (o.budget < 1) s.fail("budget must be >= 1");
  if (!(o.initial_step > 0.0)) s.fail("initial_step must be > 0");
  if (!(o.jitter >= 0.0)) s.fail("jitter must be >= 0");
  return o;
}

IdentifyConfig parse_identify(Section s) {
  IdentifyConfig c;
  if (s.has("system")) c.system = parse_system(s.child("system"));
  if (s.has("data")) c.data = parse_data(s.child("data"));
  if (s.has("filter_bank")) c.filter_bank = parse_filter_bank(s.child("filter_bank"));

  if (s.has("noise_var")) {
    const json& v = s.raw("noise_var");
    if (v.is_string() && v.get<std::string>() == "estimate") {
      c.noise_var.reset();
    } else if (v.is_string() && v.get<std::string>() == "per_site") {
      c.noise_var.reset();
      c.per_site_noise = true;
    } else if (v.is_number() && v.get<double>() >= 0.0) {
      c.noise_var = v.get<double>();
    } else {
      s.fail("noise_var must be a non-negative number, \"estimate\" or \"per_site\"");
    }
  }
  c.tune_noise = s.flag("tune_noise", c.tune_noise);
  if (!c.noise_var && c.data.segments < 2) {
    s.fail("estimating noise_var needs data.segments >= 2");
  }

  {
    Section k = s.child("kernel");
    c.family = k.text("family");
    KernelFamily fam;
    try {
      fam = family_by_name(c.family);
    } catch (const DomainError& e) {
      k.fail(e.what());
    }
    c.init = fam.defaults;
    if (k.has("init")) {
      Section init = k.child("init");
      for (const auto& p : fam.defaults.items()) {
        if (p.name == "omega0" && init.has("omega0") && init.raw("omega0").is_string()) {
          if (init.text("omega0") != "etfe_peak") init.fail("omega0 must be a number or \"etfe_peak\"");
          c.omega0_from_peak = true;
          continue;
        }
        if (!init.has(p.name)) continue;
        try {
          c.init.set(p.name, init.number(p.name));
        } catch (const DomainError& e) {
          init.fail(e.what());
        }
      }
      init.finish();
    }
    if (k.has("fixed")) {
      const json& fixed = k.raw("fixed");
      if (!fixed.is_array()) k.fail("'fixed' must be an array of parameter names");
      for (const auto& name : fixed) {
        if (!name.is_string() || !c.init.contains(name.get<std::string>())) {
          k.fail("'fixed' names an unknown parameter");
        }
        c.init.set_tunable(name.get<std::string>(), false);
      }
    }
    k.finish();
  }

  if (s.has("optimizer")) c.optimizer = parse_optimizer(s.child("optimizer"));
  const std::string est = s.text("estimator", "strict");
  if (est != "strict" && est != "wide") s.fail("estimator must be \"strict\" or \"wide\"");
  c.widely_linear = est == "wide";
  c.p_floor = s.number("p_floor", c.p_floor);
  c.schur_diagnostic = s.flag("schur_diagnostic", c.schur_diagnostic);
  c.eta = s.number("eta", c.eta);
  c.grid_points = s.count("grid_points", c.grid_points);
  c.verify_n_max = s.count("verify_n_max", c.verify_n_max);
  c.symmetry_grid = s.count("symmetry_grid", c.symmetry_grid);
  s.finish();

  if (!(c.eta > 0.0)) s.fail("eta must be > 0");
  if (!(c.p_floor > 0.0 && c.p_floor < 1.0)) s.fail("p_floor must lie in (0, 1)");
  if (c.grid_points < 1) s.fail("grid_points must be >= 1");
  if (c.verify_n_max < 10) s.fail("verify_n_max must be >= 10");
  return c;
}

VerifyConfig parse_verify(Section s) {
  VerifyConfig c;
  c.kernel = parse_kernel_spec(s.raw("kernel"), s.path() + ".kernel");
  c.n_max = s.count("n_max", c.n_max);
  c.symmetry_grid = s.count("symmetry_grid", c.symmetry_grid);
  c.symmetry_tol = s.number("symmetry_tol", c.symmetry_tol);
  c.driscoll.slope_tol = s.number("slope_tol", c.driscoll.slope_tol);
  c.driscoll.trace_tol = s.number("trace_tol", c.driscoll.trace_tol);
  s.finish();
  if (c.n_max < 10) s.fail("n_max must be >= 10");
  if (c.symmetry_grid < 1) s.fail("symmetry_grid must be >= 1");
  try {
    (void)make_kernel(c.kernel);
  } catch (const DomainError& e) {
    s.fail(e.what());
  }
  return c;
}

SampleConfig parse_sample(Section s) {
  SampleConfig c;
  c.kernel = parse_kernel_spec(s.raw("kernel"), s.path() + ".kernel");
  c.count = s.count("count", c.count);
  c.truncation = s.count("truncation", c.truncation);
  c.write_paths = s.count("write_paths", c.write_paths);
  if (s.has("covariance_pairs")) {
    const json& pairs = s.raw("covariance_pairs");
    if (!pairs.is_array()) s.fail("covariance_pairs must be an array of [zr, zi, wr, wi]");
    for (const auto& p : pairs) {
      if (!p.is_array() || p.size() != 4 ||
          !std::all_of(p.begin(), p.end(), [](const json& x) { return x.is_number(); })) {
        s.fail("covariance_pairs must be an array of [zr, zi, wr, wi]");
      }
      c.covariance_pairs.emplace_back(cplx(p[0].get<double>(), p[1].get<double>()),
                                      cplx(p[2].get<double>(), p[3].get<double>()));
    }
  }
  s.finish();
  if (c.truncation < 1) s.fail("truncation must be >= 1");
  if (c.kernel.name != "cozine") {
    try {
      (void)sequence_from_spec(c.kernel);
    } catch (const DomainError& e) {
      s.fail(e.what());
    }
  }
  try {
    const ComplexKernel k = make_kernel(c.kernel);
    for (const auto& [z, w] : c.covariance_pairs) {
      if (std::abs(z) < 1.0 || std::abs(w) < 1.0) s.fail("covariance pair inside the unit circle");
      (void)k.hermitian(z, w);
    }
  } catch (const DomainError& e) {
    s.fail(e.what());
  }
  return c;
}

}  // namespace

KernelSpec parse_kernel_spec(const json& j, const std::string& where) {
  Section s(j, where);
  KernelSpec spec;
  spec.name = s.text("name");
  for (const auto& [key, value] : j.items()) {
    if (key == "name") continue;
    if (key == "coefficients") {
      spec.coefficients = s.numbers(key);
    } else if (key == "components") {
      const json& comps = s.raw(key);
      if (!comps.is_array()) s.fail("'components' must be an array");
      for (std::size_t i = 0; i < comps.size(); ++i) {
        Section c(comps[i], where + ".components[" + std::to_string(i) + "]");
        const double weight = c.number("weight", 1.0);
        KernelSpec child = parse_kernel_spec(c.raw("kernel"), c.path() + ".kernel");
        c.finish();
        spec.components.emplace_back(weight, std::move(child));
      }
    } else if (key == "base") {
      spec.components.emplace_back(1.0, parse_kernel_spec(s.raw(key), where + ".base"));
    } else {
      spec.params[key] = s.number(key);
    }
  }
  s.finish();
  try {
    (void)make_kernel(spec);
  } catch (const DomainError& e) {
    s.fail(e.what());
  }
  return spec;
}

std::string config_hash(const json& doc) {
  json canon = doc;
  if (canon.is_object()) {
    canon.erase("seed");
    canon.erase("output_dir");
  }
  const std::string text = canon.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ExperimentConfig parse_config(const json& doc) {
  Section root(doc, "root");
  ExperimentConfig cfg;
  if (root.has("seed")) {
    const json& v = root.raw("seed");
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
      root.fail("'seed' must be a non-negative integer");
    }
    cfg.seed = v.get<std::uint64_t>();
  }
  cfg.output_dir = root.text("output_dir", "out");
  if (root.has("identify")) cfg.identify = parse_identify(root.child("identify"));
  if (root.has("verify")) cfg.verify = parse_verify(root.child("verify"));
  if (root.has("sample")) cfg.sample = parse_sample(root.child("sample"));
  root.finish();
  cfg.config_hash = config_hash(doc);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return parse_config(doc);
}

}  // namespace hinfgp
