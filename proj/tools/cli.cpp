#include "cli.hpp"

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <list>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <Eigen/Core>
#include <boost/version.hpp>
#include <nlohmann/json.hpp>

#include "perlat/envelope.hpp"
#include "perlat/error.hpp"
#include "perlat/estimators.hpp"
#include "perlat/fit.hpp"
#include "perlat/io.hpp"
#include "perlat/ktheory.hpp"
#include "perlat/lattice_sim.hpp"

#ifndef PERLAT_VERSION
#define PERLAT_VERSION "0.0.0"
#endif

namespace perlat::cli {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string option_name(const std::string& key) {
  std::string s = "--" + key;
  for (auto& c : s) {
    if (c == '_') c = '-';
  }
  return s;
}

// Options of one subcommand. Every option is mirrored by a config key of the
// same name (dashes as underscores); the effective config is the defaults,
// overridden by the config file, overridden by flags given on the command line.
class Params {
 public:
  explicit Params(CLI::App* app) : app_(app) {}

  void num(const std::string& key, std::optional<double> def, const std::string& help) {
    auto& v = doubles_.emplace_back(def.value_or(0.0));
    add(key, app_->add_option(option_name(key), v, help), [&v] { return json(v); }, def ? json(*def) : json(nullptr));
  }
  void integer(const std::string& key, long def, const std::string& help) {
    auto& v = longs_.emplace_back(def);
    add(key, app_->add_option(option_name(key), v, help), [&v] { return json(v); }, json(def));
  }
  void text(const std::string& key, const std::string& def, const std::string& help) {
    auto& v = strings_.emplace_back(def);
    add(key, app_->add_option(option_name(key), v, help), [&v] { return json(v); }, json(def));
  }
  void boolean(const std::string& key, bool def, const std::string& help) {
    auto& v = bools_.emplace_back(def);
    const std::string name = option_name(key);
    add(key, app_->add_flag(name + ",!--no-" + name.substr(2), v, help), [&v] { return json(v); }, json(def));
  }
  void list(const std::string& key, const std::string& help) {
    auto& v = lists_.emplace_back();
    add(key, app_->add_option(option_name(key), v, help)->delimiter(','), [&v] { return json(v); },
        json::array());
  }
  void seed() {
    auto& v = seeds_.emplace_back(0);
    add("seed", app_->add_option("--seed", v, "Master seed (u64); generated and recorded when absent"),
        [&v] { return json(v); }, json(nullptr));
  }

  json merge(const json& file) const {
    json merged = json::object();
    for (const auto& e : entries_) merged[e.key] = e.def;
    for (const auto& [k, v] : file.items()) {
      if (!merged.contains(k)) throw ConfigError("unknown config key '" + k + "'");
      merged[k] = v;
    }
    for (const auto& e : entries_) {
      if (e.opt->count() > 0) merged[e.key] = e.value();
    }
    return merged;
  }

 private:
  struct Entry {
    std::string key;
    CLI::Option* opt;
    std::function<json()> value;
    json def;
  };

  void add(const std::string& key, CLI::Option* opt, std::function<json()> value, json def) {
    entries_.push_back({key, opt, std::move(value), std::move(def)});
  }

  CLI::App* app_;
  std::vector<Entry> entries_;
  std::list<double> doubles_;
  std::list<long> longs_;
  std::list<std::string> strings_;
  std::list<bool> bools_;
  std::list<std::vector<double>> lists_;
  std::list<std::uint64_t> seeds_;
};

// ---------------------------------------------------------------------------
// Typed access to the effective config.

const json& at(const json& c, const std::string& k) {
  if (!c.contains(k)) throw ConfigError("missing config key '" + k + "'");
  return c.at(k);
}

double get_num(const json& c, const std::string& k) {
  const auto& v = at(c, k);
  if (!v.is_number()) throw ConfigError("config key '" + k + "' must be a number");
  return v.get<double>();
}

std::optional<double> get_opt_num(const json& c, const std::string& k) {
  if (at(c, k).is_null()) return std::nullopt;
  return get_num(c, k);
}

long get_int(const json& c, const std::string& k) {
  const auto& v = at(c, k);
  if (!v.is_number_integer()) throw ConfigError("config key '" + k + "' must be an integer");
  return v.get<long>();
}

std::size_t get_count(const json& c, const std::string& k) {
  const long v = get_int(c, k);
  if (v < 0) throw ConfigError("config key '" + k + "' must be non-negative");
  return static_cast<std::size_t>(v);
}

std::string get_str(const json& c, const std::string& k) {
  const auto& v = at(c, k);
  if (!v.is_string()) throw ConfigError("config key '" + k + "' must be a string");
  return v.get<std::string>();
}

bool get_bool(const json& c, const std::string& k) {
  const auto& v = at(c, k);
  if (!v.is_boolean()) throw ConfigError("config key '" + k + "' must be true or false");
  return v.get<bool>();
}

std::vector<double> get_list(const json& c, const std::string& k) {
  const auto& v = at(c, k);
  if (!v.is_array()) throw ConfigError("config key '" + k + "' must be an array of numbers");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) throw ConfigError("config key '" + k + "' must be an array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

// ---------------------------------------------------------------------------

struct Run {
  std::string command;
  json config;
  fs::path out;
  json report = json::object();
  std::vector<std::string> outputs;
  std::vector<std::string> plots;  // gnuplot commands

  std::string path(const std::string& name) {
    outputs.push_back(name);
    return (out / name).string();
  }
  int dim() const {
    const long d = get_int(config, "dim");
    check_dim(static_cast<int>(d));
    return static_cast<int>(d);
  }
};

std::uint64_t resolve_seed(Run& run) {
  auto& s = run.config["seed"];
  if (s.is_null()) {
    std::random_device rd;
    const std::uint64_t v = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    s = v;
    run.report["seed_generated"] = true;
  }
  if (s.is_number_unsigned()) return s.get<std::uint64_t>();
  if (s.is_number_integer() && s.get<long long>() >= 0) return static_cast<std::uint64_t>(s.get<long long>());
  throw ConfigError("seed must be a non-negative integer");
}

CovarianceModel model_from(const json& c, int dim) {
  switch (parse_model_kind(get_str(c, "model"))) {
    case ModelKind::stationarized: return CovarianceModel::stationarized(dim);
    case ModelKind::iid_gauss: return CovarianceModel::iid(get_num(c, "sigma"), dim);
    case ModelKind::powexp_gauss:
      return CovarianceModel::powexp(get_num(c, "sigma"), get_num(c, "range"), get_num(c, "gamma"), dim);
  }
  throw ConfigError("unknown model");
}

void model_params(Params& p, const std::string& kind, double sigma, double range, double gamma) {
  p.text("model", kind, "Covariance model: stationarized, iid_gauss or powexp_gauss");
  p.num("sigma", sigma, "Per-coordinate standard deviation");
  p.num("range", range, "Range of the powered exponential covariance");
  p.num("gamma", gamma, "Power of the powered exponential covariance, in [0, 2]");
}

void window_params(Params& p) {
  p.list("window_min", "Lower window corner, comma separated (use --window-min=a,b,c for negatives)");
  p.list("window_max", "Upper window corner, comma separated");
  p.text("window_json", "", "Window JSON {\"min\": [...], \"max\": [...]}");
}

void input_params(Params& p, bool rescale) {
  p.text("input", "", "Point pattern CSV");
  window_params(p);
  p.boolean("rescale", rescale, "Rescale to unit intensity about the window centre");
}

std::string sidecar_path(const std::string& csv) {
  fs::path p(csv);
  p.replace_extension(".window.json");
  return p.string();
}

// Window from flags, from --window-json, or from a sidecar next to the input.
std::optional<BoxWindow> window_from(Run& run, int dim, const std::string& input) {
  const auto lo = get_list(run.config, "window_min");
  const auto hi = get_list(run.config, "window_max");
  if (!lo.empty() || !hi.empty()) {
    if (lo.size() != static_cast<std::size_t>(dim) || hi.size() != static_cast<std::size_t>(dim)) {
      throw ConfigError("window corners need " + std::to_string(dim) + " coordinates each");
    }
    BoxWindow w;
    w.dim = dim;
    for (int k = 0; k < dim; ++k) {
      w.min[k] = lo[k];
      w.max[k] = hi[k];
    }
    w.validate();
    run.report["window_source"] = "flags";
    return w;
  }
  std::string file = get_str(run.config, "window_json");
  std::string source = "window_json";
  if (file.empty() && !input.empty() && fs::exists(sidecar_path(input))) {
    file = sidecar_path(input);
    source = "sidecar";
  }
  if (file.empty()) return std::nullopt;
  const BoxWindow w = read_window_json(file);
  if (w.dim != dim) throw ConfigError("window dimension differs from --dim");
  run.report["window_source"] = source;
  return w;
}

PointPattern load_input(Run& run) {
  const int dim = run.dim();
  const std::string input = get_str(run.config, "input");
  if (input.empty()) throw ConfigError("--input is required");
  const auto window = window_from(run, dim, input);
  if (!window) run.report["window_source"] = "bounding_box";
  PointPattern p = read_pattern_csv(input, dim, window);
  run.report["input"] = input;
  run.report["rows"] = p.size();
  run.report["window"] = to_json(p.window);
  run.report["intensity"] = p.intensity();
  if (get_bool(run.config, "rescale")) {
    p = rescale_to_unit_intensity(p);
    run.report["rescaled_window"] = to_json(p.window);
  }
  return p;
}

std::vector<double> grid_from(const json& c) {
  return linear_grid(get_num(c, "r_min"), get_num(c, "r_max"), get_num(c, "r_step"));
}

void grid_params(Params& p, double r_min, double r_max) {
  p.num("r_min", r_min, "First r of the grid");
  p.num("r_max", r_max, "Last r of the grid");
  p.num("r_step", 0.02, "Grid step");
}

void plot_curve(Run& run, const std::string& file, const std::string& title) {
  run.plots.push_back("set title '" + title + "'\nset xlabel 'r'\nplot '" + file +
                      "' using 1:2 with lines title '" + title + "'\npause -1");
}

// ---------------------------------------------------------------------------
// Commands.

void cmd_simulate(Run& run) {
  const auto& c = run.config;
  const int dim = run.dim();
  const std::uint64_t seed = resolve_seed(run);
  auto window = window_from(run, dim, "");
  if (!window) {
    window = BoxWindow::cube(dim, 0.0, get_num(c, "side"));
    window->validate();
  }
  const std::string process = get_str(c, "process");
  const std::size_t n = get_count(c, "replicates");
  if (n == 0) throw ConfigError("replicates must be positive");
  const auto stream = static_cast<std::uint64_t>(get_count(c, "stream"));

  std::function<PointPattern(const SeedSpec&)> draw;
  if (process == "lattice") {
    PerturbedLatticeSpec spec;
    spec.model = model_from(c, dim);
    spec.target_window = *window;
    spec.buffer = get_opt_num(c, "buffer");
    spec.field.padding = get_int(c, "padding");
    auto sim = std::make_shared<LatticeSimulator>(spec);
    run.report["model"] = to_json(spec.model);
    run.report["buffer"] = effective_buffer(spec);
    run.report["sampling_method"] = to_string(sim->method());
    draw = [sim](const SeedSpec& s) { return (*sim)(s); };
  } else if (process == "poisson") {
    const double intensity = get_num(c, "intensity");
    draw = [w = *window, intensity](const SeedSpec& s) { return simulate_poisson(w, intensity, s); };
  } else {
    throw ConfigError("process must be 'lattice' or 'poisson'");
  }

  json counts = json::array();
  for (std::size_t i = 0; i < n; ++i) {
    char name[64];
    if (n == 1) {
      std::snprintf(name, sizeof name, "pattern");
    } else {
      std::snprintf(name, sizeof name, "pattern_%04zu", i);
    }
    const PointPattern p = draw({seed, stream + i});
    write_pattern_csv(run.path(std::string(name) + ".csv"), p);
    write_json(run.path(std::string(name) + ".window.json"), to_json(p.window));
    counts.push_back(p.size());
  }
  run.report["window"] = to_json(*window);
  run.report["counts"] = counts;
  if (dim >= 2) {
    run.plots.push_back(std::string("set datafile separator ','\nset size ratio -1\nplot '") +
                        (n == 1 ? "pattern.csv" : "pattern_0000.csv") +
                        "' every ::1 using 1:2 with points pt 7 ps 0.3 notitle\npause -1");
  }
}

void cmd_ktheory(Run& run) {
  const auto& c = run.config;
  const int dim = run.dim();
  const CovarianceModel model = model_from(c, dim);
  const auto grid = grid_from(c);
  const double q = get_opt_num(c, "q").value_or(-1.0);
  const SummaryCurve k = k_theoretical(model, grid, q);
  write_curve_csv(run.path("k.csv"), k);
  write_curve_csv(run.path("l.csv"), l_centered_from_k(k, dim));
  plot_curve(run, "k.csv", "K");
  plot_curve(run, "l.csv", "L - r");
  run.report["q"] = q < 0.0 ? default_truncation(dim) : q;

  const auto radii = get_list(c, "numvar_radii");
  if (!radii.empty()) {
    if (model.kind == ModelKind::powexp_gauss) {
      throw ConfigError("spectral number variance is available for the stationarized and iid models only");
    }
    SummaryCurve nv;
    nv.kind = CurveKind::numvar;
    for (double r : radii) {
      if (!(r > 0.0)) throw ConfigError("numvar radii must be positive");
      nv.r.push_back(r);
      nv.values.push_back(model.kind == ModelKind::stationarized ? spectral_variance_stationarized(dim, r)
                                                                 : spectral_variance_iid(model, r));
    }
    nv.validate();
    write_curve_csv(run.path("numvar.csv"), nv);
  }
  if (get_bool(c, "decay") && model.kind != ModelKind::stationarized) {
    const DecayReport rep = hyperuniformity_condition_report(model);
    json j{{"dim", rep.dim},
           {"threshold", rep.threshold},
           {"fitted_exponent", rep.fitted_exponent},
           {"super_polynomial", rep.super_polynomial},
           {"finite_range", rep.finite_range},
           {"passes", rep.passes},
           {"verdict", rep.verdict},
           {"summability",
            {{"converged", rep.summability.converged},
             {"radii", rep.summability.radii},
             {"partial_sums", rep.summability.partial_sums}}}};
    write_json(run.path("hyperuniformity.json"), j);
    run.report["hyperuniformity_condition"] = rep.passes;
  }
}

void cmd_summarize(Run& run) {
  const auto& c = run.config;
  const PointPattern p = load_input(run);
  const auto grid = grid_from(c);
  const double bw = get_opt_num(c, "bandwidth").value_or(default_pcf_bandwidth(p));
  const SummaryCurve k = k_empirical(p, grid);
  write_curve_csv(run.path("k.csv"), k);
  write_curve_csv(run.path("l.csv"), l_centered_from_k(k, p.dim));
  write_curve_csv(run.path("pcf.csv"), pcf_empirical(p, grid, bw));
  write_curve_csv(run.path("g.csv"), g_nearest_neighbor(p, grid));
  write_json(run.path("summary.json"), {{"n", p.size()},
                                        {"intensity", p.intensity()},
                                        {"window", to_json(p.window)},
                                        {"pcf_bandwidth", bw}});
  for (const char* name : {"k", "l", "pcf", "g"}) plot_curve(run, std::string(name) + ".csv", name);
}

void write_pairs_csv(const std::string& path, const std::string& header, const std::vector<std::array<double, 2>>& v) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  out << header << "\n";
  for (const auto& x : v) out << format_double(x[0]) << "," << format_double(x[1]) << "\n";
}

void cmd_diagnose(Run& run) {
  const auto& c = run.config;
  const PointPattern p = load_input(run);
  const int dim = p.dim;
  json diag{{"n", p.size()}, {"window", to_json(p.window)}, {"intensity", p.intensity()}};
  if (get_bool(c, "rescale")) {
    write_pattern_csv(run.path("rescaled.csv"), p);
    write_json(run.path("rescaled.window.json"), to_json(p.window));
  }

  const std::string taper_name = get_str(c, "taper");
  Taper taper = Taper::none;
  if (taper_name == "sine") {
    taper = Taper::sine;
  } else if (taper_name != "none") {
    throw ConfigError("taper must be 'none' or 'sine'");
  }
  const double k_max = get_num(c, "k_max");
  const long bins = get_int(c, "bins");
  const ScatteringSpectrum spec = scattering_intensity(p, std::max(get_num(c, "k_cutoff"), k_max), taper);
  write_spectrum_csv(run.path("spectrum.csv"), spec);
  {
    const RadialSpectrum rad = radial_bins(spec, k_max, static_cast<int>(bins));
    std::ofstream out(run.path("spectrum_radial.csv"), std::ios::binary);
    out << "k_lo,k_hi,k_mean,S,modes\n";
    for (std::size_t i = 0; i < rad.k_mean.size(); ++i) {
      out << format_double(rad.bin_lo[i]) << "," << format_double(rad.bin_hi[i]) << "," << format_double(rad.k_mean[i])
          << "," << format_double(rad.s_mean[i]) << "," << rad.modes[i] << "\n";
    }
  }
  try {
    const ExponentFit fit = exponent_fit(spec, k_max, static_cast<int>(bins));
    diag["exponent_fit"] = {{"alpha_hat", fit.alpha_hat},
                            {"stderr", fit.stderr_alpha},
                            {"intercept", fit.intercept},
                            {"k_max", fit.k_max},
                            {"bins_used", fit.bins_used},
                            {"taper", taper_name}};
  } catch (const ConfigError& e) {
    diag["exponent_fit"] = {{"skipped", e.what()}};
  }
  run.plots.push_back(
      "set datafile separator ','\nset logscale xy\nplot 'spectrum_radial.csv' every ::1 using 3:4 with linespoints "
      "title 'S(k)'\nunset logscale\npause -1");

  try {
    const CountHistogram h = count_histogram(p, get_num(c, "box_side"), get_num(c, "gap"));
    Histogram observed, reference;
    for (std::size_t i = 0; i < h.values.size(); ++i) {
      for (Histogram* t : {&observed, &reference}) {
        t->lo.push_back(h.values[i] - 0.5);
        t->hi.push_back(h.values[i] + 0.5);
      }
      observed.counts.push_back(h.frequency[i]);
      reference.counts.push_back(h.poisson_reference[i]);
    }
    write_histogram_csv(run.path("counts.csv"), observed);
    write_histogram_csv(run.path("counts_poisson.csv"), reference);
    diag["box_counts"] = {{"boxes", h.boxes.counts.size()},
                          {"mean", h.boxes.mean},
                          {"variance", h.boxes.variance},
                          {"variance_to_mean", h.boxes.mean > 0.0 ? h.boxes.variance / h.boxes.mean : 0.0},
                          {"sigma_hat", h.boxes.sigma_hat}};
    run.plots.push_back(
        "set datafile separator ','\nset style fill solid 0.5\nplot 'counts.csv' every ::1 using "
        "(($1+$2)/2):3 with boxes title 'boxes', 'counts_poisson.csv' every ::1 using (($1+$2)/2):3 with "
        "linespoints title 'Poisson'\npause -1");
  } catch (const ConfigError& e) {
    diag["box_counts"] = {{"skipped", e.what()}};
  }

  if (dim >= 2) {
    static const char* names = "xyz";
    std::vector<std::array<int, 2>> planes{{0, 1}};
    if (dim == 3) planes = {{0, 1}, {0, 2}, {1, 2}};
    const long angle_bins = get_int(c, "angle_bins");
    for (const auto& ax : planes) {
      const std::string tag = std::string(1, names[ax[0]]) + names[ax[1]];
      write_histogram_csv(run.path("nn_angles_" + tag + ".csv"), nn_angle_histogram(p, ax, static_cast<int>(angle_bins)));
      write_pairs_csv(run.path("fry_" + tag + ".csv"), "dx,dy",
                      fry_slab(p, ax, get_num(c, "slab"), get_num(c, "fry_max")));
    }
    run.plots.push_back(
        "set datafile separator ','\nset size ratio -1\nplot 'fry_xy.csv' every ::1 using 1:2 with dots "
        "notitle\npause -1");
  }
  write_json(run.path("diagnose.json"), diag);
  run.report["n"] = p.size();
  run.report["diagnosed_window"] = to_json(p.window);
}

json fit_json(const FitResult& f) {
  return {{"model", to_json(f.model)},
          {"theta_hat", f.theta_hat},
          {"contrast", f.contrast_value},
          {"n_evals", f.n_evals},
          {"converged", f.converged},
          {"trace_length", f.trace.size()}};
}

void write_trace(std::ofstream& out, const std::string& stage, const FitResult& f) {
  std::size_t i = 0;
  for (const auto& t : f.trace) {
    out << stage << "," << i++;
    for (double v : t.theta) out << "," << format_double(v);
    out << "," << format_double(t.value) << "\n";
  }
}

void cmd_fit(Run& run) {
  const auto& c = run.config;
  const PointPattern p = load_input(run);
  const int dim = p.dim;
  const CovarianceModel init = model_from(c, dim);
  if (init.kind == ModelKind::stationarized) throw ConfigError("the stationarized model has no parameters to fit");

  ContrastSpec spec;
  spec.r1 = get_num(c, "r1");
  spec.r2 = get_num(c, "r2");
  spec.transform_power = get_num(c, "power");
  spec.grid_step = get_num(c, "r_step");
  spec.q = get_num(c, "q");
  spec.validate();
  OptimizerOptions opt;
  opt.max_evals = get_count(c, "max_evals");
  opt.restarts = static_cast<int>(get_count(c, "restarts"));

  const SummaryCurve k_hat = k_empirical(p, linear_grid(0.0, spec.r2, spec.grid_step));
  json result;
  FitResult final_fit;
  std::ofstream trace(run.path("trace.csv"), std::ios::binary);
  trace << "stage,eval," << (init.kind == ModelKind::iid_gauss ? "sigma" : "sigma,range,gamma") << ",value\n";
  if (get_bool(c, "two_stage")) {
    TwoStageOptions ts;
    ts.window = p.window;
    ts.n_sims = get_count(c, "n_sims");
    ts.seed = {resolve_seed(run), static_cast<std::uint64_t>(get_count(c, "stream"))};
    ts.stage2 = spec;
    ts.stage2.r1 = get_num(c, "stage2_r1");
    ts.stage2.r2 = get_num(c, "stage2_r2");
    ts.stage2.validate();
    const TwoStageResult r = fit_two_stage(k_hat, spec, init, ts, {}, opt);
    result = fit_json(r.stage2);
    result["stage1"] = fit_json(r.stage1);
    result["stage2"] = fit_json(r.stage2);
    write_curve_csv(run.path("l_variance.csv"), r.l_variance);
    write_trace(trace, "1", r.stage1);
    write_trace(trace, "2", r.stage2);
    final_fit = r.stage2;
  } else {
    final_fit = fit_min_contrast(k_hat, spec, init, {}, opt);
    result = fit_json(final_fit);
    write_trace(trace, "1", final_fit);
  }
  result["n"] = p.size();
  result["contrast_settings"] = {
      {"r1", spec.r1}, {"r2", spec.r2}, {"power", spec.transform_power}, {"r_step", spec.grid_step}, {"q", spec.q}};
  write_json(run.path("fit.json"), result);

  const SummaryCurve k_fit = k_theoretical(final_fit.model, k_hat.r, spec.q);
  std::ofstream out(run.path("fitted.csv"), std::ios::binary);
  out << "r,empirical,fitted\n";
  for (std::size_t i = 0; i < k_hat.size(); ++i) {
    out << format_double(k_hat.r[i]) << "," << format_double(k_hat.values[i]) << "," << format_double(k_fit.values[i])
        << "\n";
  }
  run.report["theta_hat"] = final_fit.theta_hat;
  run.plots.push_back(
      "set datafile separator ','\nplot 'fitted.csv' every ::1 using 1:2 with lines title 'empirical', '' every ::1 "
      "using 1:3 with lines title 'fitted'\npause -1");
}

void cmd_envelope(Run& run) {
  const auto& c = run.config;
  const PointPattern p = load_input(run);
  const std::uint64_t seed = resolve_seed(run);
  const auto grid = grid_from(c);
  const std::string null = get_str(c, "null");
  PatternSimulator sim;
  json null_json{{"process", null}};
  if (null == "lattice") {
    PerturbedLatticeSpec spec;
    spec.model = model_from(c, p.dim);
    spec.target_window = p.window;
    spec.buffer = get_opt_num(c, "buffer");
    sim = lattice_null(spec);
    null_json["model"] = to_json(spec.model);
  } else if (null == "poisson") {
    const double intensity = get_opt_num(c, "intensity").value_or(p.intensity());
    sim = poisson_null(p.window, intensity);
    null_json["intensity"] = intensity;
  } else {
    throw ConfigError("null must be 'lattice' or 'poisson'");
  }
  EnvelopeOptions eo;
  eo.alpha = get_num(c, "alpha");
  eo.measure = parse_envelope_measure(get_str(c, "measure"));
  const std::size_t n_sims = get_count(c, "n_sims");
  const EnvelopeResult r =
      global_envelope_test(p, sim, grid, n_sims, {seed, static_cast<std::uint64_t>(get_count(c, "stream"))}, eo);
  json j{{"p_interval", {r.p_lower, r.p_upper}},
         {"p_value", r.p_upper},
         {"rejected", r.rejected},
         {"settings",
          {{"alpha", r.alpha},
           {"measure", to_string(r.measure)},
           {"n_sims", r.n_sims},
           {"null", null_json},
           {"r_min", grid.front()},
           {"r_max", grid.back()},
           {"r_points", grid.size()},
           {"statistic", "L(r) - r"}}}};
  write_json(run.path("envelope.json"), j);
  std::ofstream out(run.path("envelope.csv"), std::ios::binary);
  out << "r,data,lower,upper\n";
  for (std::size_t i = 0; i < r.r.size(); ++i) {
    out << format_double(r.r[i]) << "," << format_double(r.data_curve[i]) << "," << format_double(r.lower[i]) << ","
        << format_double(r.upper[i]) << "\n";
  }
  run.report["p_interval"] = {r.p_lower, r.p_upper};
  run.plots.push_back(
      "set datafile separator ','\nplot 'envelope.csv' every ::1 using 1:3:4 with filledcurves fs transparent solid "
      "0.3 title 'envelope', '' every ::1 using 1:2 with lines title 'data'\npause -1");
}

// ---------------------------------------------------------------------------

struct Command {
  CLI::App* app;
  std::unique_ptr<Params> params;
  std::string config_path;
  void (*body)(Run&);
};

void shared_params(Command& cmd) {
  cmd.app->add_option("--config", cmd.config_path, "Config JSON (flat keys, or a previous run_manifest.json)");
  auto& p = *cmd.params;
  p.integer("dim", 3, "Dimension 1, 2 or 3");
  p.text("out", ".", "Output directory");
  p.boolean("gnuplot", false, "Also write plot.gp");
  p.seed();
}

json versions() {
  char eigen[32];
  std::snprintf(eigen, sizeof eigen, "%d.%d.%d", EIGEN_WORLD_VERSION, EIGEN_MAJOR_VERSION, EIGEN_MINOR_VERSION);
  char nl[32];
  std::snprintf(nl, sizeof nl, "%d.%d.%d", NLOHMANN_JSON_VERSION_MAJOR, NLOHMANN_JSON_VERSION_MINOR,
                NLOHMANN_JSON_VERSION_PATCH);
  return {{"perlat", PERLAT_VERSION},
          {"eigen", eigen},
          {"boost", BOOST_LIB_VERSION},
          {"fft", fft_backend_version()},
          {"nlohmann_json", nl},
          {"cli11", CLI11_VERSION}};
}

const char* error_type(const std::exception& e) {
  if (dynamic_cast<const InputError*>(&e)) return "input_error";
  if (dynamic_cast<const ConfigError*>(&e)) return "config_error";
  if (dynamic_cast<const NumericalError*>(&e)) return "numerical_error";
  return "error";
}

}  // namespace

int exit_code(const std::exception& e) {
  if (dynamic_cast<const InputError*>(&e)) return 2;
  if (dynamic_cast<const ConfigError*>(&e)) return 3;
  if (dynamic_cast<const NumericalError*>(&e)) return 4;
  if (dynamic_cast<const CLI::ParseError*>(&e)) return 3;
  return 1;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const auto t0 = std::chrono::steady_clock::now();
  CLI::App app{"Perturbed lattice point processes: simulation, summaries, fitting and envelope tests", "perlat"};
  app.require_subcommand(1);
  app.set_version_flag("--version", PERLAT_VERSION);

  std::map<std::string, Command> commands;
  auto make = [&](const std::string& name, const std::string& help, void (*body)(Run&)) -> Params& {
    Command cmd;
    cmd.app = app.add_subcommand(name, help);
    cmd.params = std::make_unique<Params>(cmd.app);
    cmd.body = body;
    auto& slot = commands[name] = std::move(cmd);
    shared_params(slot);
    return *slot.params;
  };

  {
    auto& p = make("simulate", "Simulate perturbed lattice or Poisson patterns", cmd_simulate);
    model_params(p, "iid_gauss", 0.18, 2.5, 2.0);
    window_params(p);
    p.num("side", 10.0, "Cube side when no window is given (window [0, side]^d)");
    p.text("process", "lattice", "lattice or poisson");
    p.num("intensity", 1.0, "Poisson intensity");
    p.num("buffer", std::nullopt, "Lattice buffer around the window");
    p.integer("padding", 0, "Circulant embedding padding (0 selects the default)");
    p.integer("replicates", 1, "Number of patterns");
    p.integer("stream", 0, "First stream id");
  }
  {
    auto& p = make("ktheory", "Theoretical K, L and number variance", cmd_ktheory);
    model_params(p, "iid_gauss", 0.18, 2.5, 2.0);
    grid_params(p, 0.0, 3.0);
    p.num("q", std::nullopt, "Shell truncation (default 15 in d = 3, 8 otherwise)");
    p.list("numvar_radii", "Radii for the spectral number variance");
    p.boolean("decay", true, "Write the covariance decay report");
  }
  {
    auto& p = make("summarize", "Empirical K, L, pair correlation and G", cmd_summarize);
    input_params(p, false);
    grid_params(p, 0.0, 3.0);
    p.num("bandwidth", std::nullopt, "Pair correlation bandwidth (default 0.15 rho^(-1/d))");
  }
  {
    auto& p = make("diagnose", "Hyperuniformity and isotropy diagnostics", cmd_diagnose);
    input_params(p, true);
    p.text("taper", "none", "Scattering taper: none or sine");
    p.num("k_cutoff", 3.0, "Largest |k| written to spectrum.csv");
    p.num("k_max", 1.5, "Upper end of the exponent fit");
    p.integer("bins", 12, "Radial bins of the exponent fit");
    p.num("box_side", 2.7, "Box side of the count histogram");
    p.num("gap", 1.5, "Gap between boxes");
    p.integer("angle_bins", 36, "Bins of the nearest-neighbour angle histograms");
    p.num("slab", 0.5, "Half-width of the Fry slab");
    p.num("fry_max", 3.0, "Largest planar displacement in the Fry plots");
  }
  {
    auto& p = make("fit", "Minimum contrast fit of a Gaussian perturbation model", cmd_fit);
    input_params(p, false);
    model_params(p, "iid_gauss", 0.1, 1.0, 1.5);
    p.num("r1", 0.0, "Lower end of the contrast interval");
    p.num("r2", 3.0, "Upper end of the contrast interval");
    p.num("r_step", 0.02, "Contrast grid step");
    p.num("power", 0.25, "Transformation power");
    p.num("q", 15.0, "Shell truncation");
    p.integer("max_evals", 500, "Evaluations per start");
    p.integer("restarts", 3, "Jittered restarts");
    p.boolean("two_stage", false, "Weighted second stage");
    p.integer("n_sims", 100, "Simulations for the second-stage weight");
    p.num("stage2_r1", 0.2, "Lower end of the second-stage interval");
    p.num("stage2_r2", 2.0, "Upper end of the second-stage interval");
    p.integer("stream", 0, "First stream id");
  }
  {
    auto& p = make("envelope", "Global rank envelope test of L(r) - r", cmd_envelope);
    input_params(p, false);
    p.text("null", "lattice", "Null model: lattice or poisson");
    model_params(p, "iid_gauss", 0.18, 2.5, 2.0);
    p.num("intensity", std::nullopt, "Poisson intensity (default: data intensity)");
    p.num("buffer", std::nullopt, "Lattice buffer around the window");
    p.integer("n_sims", 999, "Simulations");
    p.num("alpha", 0.05, "Global level");
    p.text("measure", "erl", "erl or area");
    grid_params(p, 0.1, 2.5);
    p.integer("stream", 0, "First stream id");
  }

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (code == 0) return 0;
    err << json{{"error", {{"type", "config_error"}, {"message", e.what()}, {"exit_code", 3}}}}.dump() << "\n";
    return 3;
  }

  Run run;
  Command* cmd = nullptr;
  for (auto& [name, c] : commands) {
    if (c.app->parsed()) {
      run.command = name;
      cmd = &c;
    }
  }
  std::optional<fs::path> out_dir;
  try {
    json file = json::object();
    if (!cmd->config_path.empty()) {
      file = read_json(cmd->config_path);
      if (!file.is_object()) throw ConfigError("config must be a JSON object");
      if (file.contains("config")) {
        if (file.contains("command") && file["command"] != run.command) {
          throw ConfigError("manifest was written by '" + file["command"].get<std::string>() + "'");
        }
        file = file["config"];
        if (!file.is_object()) throw ConfigError("manifest config must be a JSON object");
      }
    }
    run.config = cmd->params->merge(file);
    run.out = get_str(run.config, "out");
    fs::create_directories(run.out);
    out_dir = run.out;
    cmd->body(run);
    if (get_bool(run.config, "gnuplot")) {
      std::ofstream gp(run.path("plot.gp"), std::ios::binary);
      gp << "# gnuplot " << run.command << "\nset datafile separator ','\nset key autotitle columnhead\n";
      for (const auto& s : run.plots) gp << s << "\n";
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_json((run.out / "run_manifest.json").string(), {{"command", run.command},
                                                          {"status", "ok"},
                                                          {"config", run.config},
                                                          {"seed", run.config["seed"]},
                                                          {"versions", versions()},
                                                          {"wall_time_s", wall},
                                                          {"outputs", run.outputs},
                                                          {"report", run.report}});
    out << "wrote " << run.outputs.size() << " file(s) to " << run.out.string() << "\n";
    return 0;
  } catch (const std::exception& e) {
    const int code = exit_code(e);
    const json ej{{"error", {{"type", error_type(e)}, {"message", e.what()}, {"exit_code", code}}},
                  {"command", run.command}};
    err << ej.dump() << "\n";
    if (out_dir) {
      try {
        write_json((*out_dir / "error.json").string(), ej);
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        write_json((*out_dir / "run_manifest.json").string(), {{"command", run.command},
                                                               {"status", "error"},
                                                               {"config", run.config},
                                                               {"seed", run.config["seed"]},
                                                               {"versions", versions()},
                                                               {"wall_time_s", wall},
                                                               {"error", ej["error"]}});
      } catch (const std::exception&) {
      }
    }
    return code;
  }
}

}  // namespace perlat::cli
