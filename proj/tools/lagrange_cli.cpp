// Command-line front end: experiment runs, impulse responses, stability checks
// and parameter/root conversions.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "lagrange/config.hpp"
#include "lagrange/error.hpp"
#include "lagrange/experiments.hpp"
#include "lagrange/operator_params.hpp"
#include "lagrange/report.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lagrange;

namespace {

enum ExitCode { kOk = 0, kInputError = 1, kDiverged = 2, kNumericFailure = 3 };

constexpr std::size_t kMaxImpulseSamples = 20001;

json roots_json(const RootSet& roots) {
  json out = json::array();
  for (const Root& r : roots.roots()) {
    out.push_back({{"re", r.value.real()}, {"im", r.value.imag()}, {"multiplicity", r.multiplicity}});
  }
  return out;
}

std::string root_text(const Root& r) {
  std::string s = format_double(r.value.real());
  if (r.value.imag() != 0.0) {
    s += (r.value.imag() > 0 ? "+" : "") + format_double(r.value.imag()) + "i";
  }
  if (r.multiplicity > 1) s += " (x" + std::to_string(r.multiplicity) + ")";
  return s;
}

/// Polynomial from either explicit betas or (theta, alphas).
struct PolyInput {
  std::string betas;
  double theta = 0.0;
  std::string alphas;
};

MonicPoly poly_from(const PolyInput& in) {
  if (!in.betas.empty()) return MonicPoly(parse_number_list(in.betas));
  if (in.alphas.empty()) throw InvalidArgument("give --betas, or --theta with --alphas");
  const std::vector<double> a = parse_number_list(in.alphas);
  if (a.size() == 2) return betas_first(in.theta, a[0], a[1]);
  if (a.size() == 3) return betas_fourth(in.theta, a[0], a[1], a[2]);
  throw InvalidArgument("--alphas needs 2 (first order) or 3 (second order) values");
}

void add_poly_options(CLI::App* cmd, PolyInput& in) {
  auto* betas = cmd->add_option("--betas", in.betas, "Monic polynomial coefficients beta_0..beta_{n-1}");
  cmd->add_option("--theta", in.theta, "Dissipation rate")->excludes(betas);
  cmd->add_option("--alphas", in.alphas, "alpha_0..alpha_order, comma separated")->excludes(betas);
}

json stability_json(const StabilityReport& r) {
  json conds = json::array();
  for (const auto& c : r.conditions) conds.push_back({{"name", c.name}, {"satisfied", c.satisfied}, {"margin", c.margin}});
  return {{"stable", r.stable}, {"conditions", conds}};
}

// ---------------------------------------------------------------------------
// run / sweep

struct RunOptions {
  fs::path out = "out";
  bool svg = false;
  bool fail_on_divergence = false;
  std::optional<std::uint64_t> seed;
  bool json = false;
};

json run_summary(const ExperimentConfig& config, const TraceLog& log) {
  json s;
  s["name"] = config.name;
  s["iterations"] = log.iteration_means.size();
  s["final_time"] = log.final_time;
  s["diverged"] = log.diverged();
  if (log.divergence_time) {
    s["divergence_time"] = *log.divergence_time;
    s["divergence_iteration"] = *log.divergence_iteration;
  }
  if (!log.iteration_means.empty() && log.weight_names.size() <= 8) {
    json means;
    for (std::size_t w = 0; w < log.weight_names.size(); ++w) means[log.weight_names[w]] = log.iteration_means.back()[w];
    s["final_iteration_means"] = means;
  }
  json metrics = json::object();
  for (const auto& m : log.metrics) {
    json e = {{"iteration", m.iteration}, {"mse", m.metrics.mse}};
    if (m.metrics.accuracy) e["accuracy"] = *m.metrics.accuracy;
    metrics[m.set] = e;
  }
  if (!metrics.empty()) s["final_metrics"] = metrics;
  return s;
}

void write_impulse_svg(const fs::path& path, const ExperimentConfig& config, double run_span) {
  const RootSet roots = config.dynamics.roots ? *config.dynamics.roots : poly_roots(config.dynamics.poly());
  double span = run_span > 0.0 ? run_span : 1.0;
  if (roots.min_abs_real_part() > 0.0) span = std::min(span, saturation_time(roots));
  const double step = config.dynamics.tau / 10.0;
  const auto count = static_cast<std::size_t>(
      std::clamp(std::ceil(span / step) + 1.0, 2.0, static_cast<double>(kMaxImpulseSamples)));
  write_svg(path, {{"g(t)", sample_impulse_response(roots, span, count)}});
}

int execute_run(ExperimentConfig config, const RunOptions& opt, std::ostream& log_out) {
  if (opt.seed) config.seed = *opt.seed;
  const RunResult result = run_experiment(config);
  const TraceLog& log = result.trace;
  fs::create_directories(opt.out);
  write_trace_csv(opt.out / "trace.csv", log);
  write_metrics_csv(opt.out / "metrics.csv", log);
  write_iteration_means_csv(opt.out / "iterations.csv", log);
  if (opt.svg) {
    write_svg(opt.out / "weights.svg", weight_series(log, {}));
    write_impulse_svg(opt.out / "g.svg", config, log.final_time);
  }
  const json summary = run_summary(config, log);
  if (opt.json) {
    log_out << summary.dump(2) << '\n';
  } else {
    log_out << config.name << ": " << log.iteration_means.size() << " iterations, t = " << log.final_time
            << (log.diverged() ? ", DIVERGED at t = " + format_double(*log.divergence_time) : "") << '\n';
    if (summary.contains("final_iteration_means")) {
      for (const auto& [k, v] : summary["final_iteration_means"].items()) {
        log_out << "  mean " << k << " = " << v.get<double>() << '\n';
      }
    }
    if (summary.contains("final_metrics")) {
      for (const auto& [k, v] : summary["final_metrics"].items()) {
        log_out << "  " << k << ": mse = " << v["mse"].get<double>();
        if (v.contains("accuracy")) log_out << ", accuracy = " << v["accuracy"].get<double>();
        log_out << '\n';
      }
    }
  }
  return log.diverged() && opt.fail_on_divergence ? kDiverged : kOk;
}

/// Maps library exceptions to exit codes.
template <typename F>
int guarded(F&& body) {
  try {
    return body();
  } catch (const NumericFailure& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kNumericFailure;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const Infeasible& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return kInputError;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  }
}

std::size_t sweep_threads(std::size_t jobs) {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("LAGRANGE_THREADS")) {
    try {
      const long cap = std::stol(env);
      if (cap >= 1) n = std::min<std::size_t>(n, static_cast<std::size_t>(cap));
    } catch (const std::exception&) {
      std::cerr << "warning: ignoring invalid LAGRANGE_THREADS='" << env << "'\n";
    }
  }
  return std::min(n, std::max<std::size_t>(jobs, 1));
}

int execute_sweep(const std::vector<std::string>& configs, const RunOptions& opt) {
  std::atomic<std::size_t> next{0};
  std::mutex out_mutex;
  std::vector<int> codes(configs.size(), kOk);
  auto worker = [&] {
    for (std::size_t i = next++; i < configs.size(); i = next++) {
      std::ostringstream buf;
      codes[i] = guarded([&] {
        ExperimentConfig c = load_config(configs[i]);
        RunOptions o = opt;
        o.out = opt.out / fs::path(configs[i]).stem();
        return execute_run(std::move(c), o, buf);
      });
      std::lock_guard lock(out_mutex);
      std::cout << buf.str();
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < sweep_threads(configs.size()); ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  // Input errors dominate, then numeric failures, then divergence.
  for (int code : {kInputError, kNumericFailure, kDiverged}) {
    if (std::find(codes.begin(), codes.end(), code) != codes.end()) return code;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learning-as-mechanics simulator"};
  app.require_subcommand(1);
  bool as_json = false;
  app.add_flag("--json", as_json, "Machine-readable output");

  RunOptions run_opt;
  std::string config_path;
  auto* run = app.add_subcommand("run", "Run one experiment config");
  run->add_option("config", config_path, "Config JSON")->required();
  run->add_option("--out,-o", run_opt.out, "Output directory");
  run->add_flag("--svg", run_opt.svg, "Also write weights.svg and g.svg");
  run->add_flag("--fail-on-divergence", run_opt.fail_on_divergence, "Exit 2 if any weight diverges");
  run->add_option("--seed", run_opt.seed, "Override the config seed");

  std::vector<std::string> sweep_configs;
  auto* sweep = app.add_subcommand("sweep", "Run several configs in parallel (LAGRANGE_THREADS caps workers)");
  sweep->add_option("configs", sweep_configs, "Config JSON files")->required();
  sweep->add_option("--out,-o", run_opt.out, "Output root; one subdirectory per config");
  sweep->add_flag("--svg", run_opt.svg, "Also write SVG plots");
  sweep->add_flag("--fail-on-divergence", run_opt.fail_on_divergence, "Exit 2 if any run diverges");
  sweep->add_option("--seed", run_opt.seed, "Override every config seed");

  std::string roots_text;
  PolyInput impulse_poly;
  fs::path impulse_out = "out";
  std::size_t samples = 4001;
  std::optional<double> t_end;
  auto* impulse = app.add_subcommand("impulse", "Sample the impulse response g(t) to g.csv and g.svg");
  auto* impulse_roots = impulse->add_option("--roots", roots_text, "Roots, e.g. -1,-4 or -0.1+1i,-0.1-1i");
  add_poly_options(impulse, impulse_poly);
  impulse->add_option("--out,-o", impulse_out, "Output directory");
  impulse->add_option("--samples", samples, "Number of samples")->check(CLI::Range(2, 10000000));
  impulse->add_option("--t-end", t_end, "Sampling span (default 40/min|Re lambda|)");

  PolyInput stab_poly;
  auto* stability = app.add_subcommand("stability", "Routh-Hurwitz report");
  add_poly_options(stability, stab_poly);

  PolyInput p2r_poly;
  auto* params2roots = app.add_subcommand("params2roots", "Characteristic polynomial and its roots");
  add_poly_options(params2roots, p2r_poly);

  std::string r2p_roots;
  auto* roots2params = app.add_subcommand("roots2params", "Operator parameters realizing given roots");
  roots2params->add_option("--roots", r2p_roots, "2 or 4 roots")->required();

  DesignSpec design_spec;
  double design_theta = 1.0;
  std::string fractions;
  auto* design = app.add_subcommand("design", "Root set with a long memory root");
  design->add_option("--memory-span", design_spec.memory_span, "a, with lambda_1 = -1/a");
  design->add_option("--theta", design_theta, "Dissipation rate")->required();
  design->add_option("--fractions", fractions, "Remaining roots as fractions of theta");

  for (auto* sub : {run, sweep, impulse, stability, params2roots, roots2params, design}) {
    sub->add_flag("--json", as_json, "Machine-readable output");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInputError;
  }
  run_opt.json = as_json;

  if (run->parsed()) {
    return guarded([&] { return execute_run(load_config(config_path), run_opt, std::cout); });
  }
  if (sweep->parsed()) return execute_sweep(sweep_configs, run_opt);

  if (impulse->parsed()) {
    return guarded([&] {
      if (impulse_roots->count() > 0 && (!impulse_poly.betas.empty() || !impulse_poly.alphas.empty())) {
        throw InvalidArgument("give either --roots or polynomial options");
      }
      const RootSet roots = impulse_roots->count() > 0 ? parse_root_list(roots_text) : poly_roots(poly_from(impulse_poly));
      const double span = t_end ? *t_end : saturation_time(roots);
      const auto g = sample_impulse_response(roots, span, samples);
      fs::create_directories(impulse_out);
      write_samples_csv(impulse_out / "g.csv", g, "g");
      write_svg(impulse_out / "g.svg", {{"g(t)", g}});
      const auto peak = std::max_element(g.begin(), g.end(), [](auto& a, auto& b) { return a.value < b.value; });
      if (as_json) {
        std::cout << json{{"roots", roots_json(roots)}, {"t_end", span}, {"samples", samples},
                          {"peak_t", peak->t}, {"peak_g", peak->value}}.dump(2)
                  << '\n';
      } else {
        std::cout << "sampled g on [0, " << span << "] (" << samples << " samples), peak g(" << peak->t
                  << ") = " << peak->value << '\n';
      }
      return kOk;
    });
  }

  if (stability->parsed()) {
    return guarded([&] {
      const MonicPoly poly = poly_from(stab_poly);
      const StabilityReport r = routh_hurwitz(poly);
      if (as_json) {
        std::cout << stability_json(r).dump(2) << '\n';
      } else {
        std::cout << (r.stable ? "stable" : "unstable") << '\n';
        for (const auto& c : r.conditions) {
          std::cout << "  " << c.name << ": " << (c.satisfied ? "ok" : "violated") << ", margin " << c.margin << '\n';
        }
      }
      return kOk;
    });
  }

  if (params2roots->parsed()) {
    return guarded([&] {
      const MonicPoly poly = poly_from(p2r_poly);
      const RootSet roots = poly_roots(poly);
      const std::vector<double> betas(poly.coeffs().begin(), poly.coeffs().end());
      if (as_json) {
        std::cout << json{{"betas", betas}, {"roots", roots_json(roots)},
                          {"stability", stability_json(routh_hurwitz(poly))}}.dump(2)
                  << '\n';
      } else {
        std::cout << "betas:";
        for (double b : betas) std::cout << ' ' << b;
        std::cout << "\nroots:";
        for (const Root& r : roots.roots()) std::cout << ' ' << root_text(r);
        std::cout << '\n';
      }
      return kOk;
    });
  }

  if (roots2params->parsed()) {
    return guarded([&] {
      const RootSet roots = parse_root_list(r2p_roots);
      json out;
      if (roots.degree() == 2) {
        const auto e = roots.expanded();
        const FirstOrderDesign d = roots_to_params_first(e[0], e[1]);
        out = {{"order", 1}, {"theta", d.theta}, {"nu", d.nu}};
      } else if (roots.degree() == 4) {
        const SecondOrderDesign d = roots_to_params_second(roots);
        json branches = json::array();
        for (const auto& b : d.branches) branches.push_back({{"nu0", b.nu0}, {"nu1", b.nu1}, {"alpha1", b.alpha1}});
        out = {{"order", 2}, {"theta", d.theta}, {"branches", branches}};
      } else {
        throw InvalidArgument("roots2params needs 2 or 4 roots (counting multiplicity)");
      }
      if (as_json) {
        std::cout << out.dump(2) << '\n';
      } else if (out["order"] == 1) {
        std::cout << "theta = " << out["theta"].get<double>() << "\nalpha0/alpha1 candidates:";
        for (double v : out["nu"]) std::cout << ' ' << v;
        std::cout << '\n';
      } else {
        std::cout << "theta = " << out["theta"].get<double>() << '\n';
        for (const auto& b : out["branches"]) {
          std::cout << "  nu0 = " << b["nu0"].get<double>() << ", nu1 = " << b["nu1"].get<double>()
                    << ", alpha1 = " << b["alpha1"].get<double>() << " (alpha0 = alpha2 = 1)\n";
        }
      }
      return kOk;
    });
  }

  if (design->parsed()) {
    return guarded([&] {
      if (!fractions.empty()) design_spec.fractions = parse_number_list(fractions);
      const DesignResult r = design_roots(design_spec, design_theta);
      if (as_json) {
        std::cout << json{{"roots", roots_json(r.roots)}, {"warnings", r.warnings}}.dump(2) << '\n';
      } else {
        std::cout << "roots:";
        for (const Root& root : r.roots.roots()) std::cout << ' ' << root_text(root);
        std::cout << '\n';
        for (const auto& w : r.warnings) std::cout << "warning: " << w << '\n';
      }
      return kOk;
    });
  }
  return kInputError;
}
