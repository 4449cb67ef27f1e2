// Acceptance report: one PASS/FAIL line per criterion, with the measured
// values. Exit status is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "lagrange/config.hpp"
#include "lagrange/dynamics.hpp"
#include "lagrange/error.hpp"
#include "lagrange/experiments.hpp"
#include "lagrange/models.hpp"
#include "lagrange/operator_params.hpp"
#include "lagrange/rootspace.hpp"
#include "support.hpp"

using namespace lagrange;

namespace {

const std::filesystem::path kConfigs = LAGRANGE_CONFIG_DIR;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

ExperimentConfig config(const std::string& name) { return load_config(kConfigs / (name + ".json")); }

double last_mean(const TraceLog& log, const std::string& weight) {
  return log.iteration_means.back()[log.weight_index(weight)];
}

bool in(double v, double lo, double hi) { return v >= lo && v <= hi; }

// Final-iteration means of y and b inside the converged-regime box.
bool in_f1_box(const TraceLog& log) {
  return !log.diverged() && in(last_mean(log, "y"), 1.7, 2.0) && in(last_mean(log, "b"), -1.0, -0.7);
}

Outcome oracle_equivalence() {
  testing::RandomRoots gen(2024);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double tau = 0.01, kappa = 0.7;
  const int steps = 1000;
  const auto start = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const RootSet roots = gen.stable(trial % 2 == 0 ? 2 : 4, 1);
    const MonicPoly poly = characteristic_poly(roots);
    const DynamicsEngine engine(poly, tau, kappa, 1e300);
    const int n = poly.degree();
    std::vector<double> ic(n);
    for (auto& v : ic) v = u(rng);
    WeightState state(Eigen::Map<const Eigen::VectorXd>(ic.data(), n));
    std::vector<Impulse> impulses;
    std::vector<double> stepped{state.value()};
    for (int k = 0; k < steps; ++k) {
      std::optional<double> zeta;
      if (u(rng) > 0.0) {
        zeta = u(rng);
        impulses.push_back({(k + 0.5) * tau, kappa * *zeta});
      }
      engine.advance(state, zeta);
      stepped.push_back(state.value());
    }
    const ClosedFormResponse oracle(roots, ic, impulses);
    double scale = 0.0, gap = 0.0;
    for (int k = 0; k <= steps; ++k) {
      const double expected = oracle(k * tau);
      scale = std::max(scale, std::abs(expected));
      gap = std::max(gap, std::abs(expected - stepped[k]));
    }
    worst = std::max(worst, gap / scale);
  }
  const double elapsed = seconds_since(start);
  return {worst < 1e-8 && elapsed < 5.0, fmt("max rel gap %.2e over 50 sets, %.2f s", worst, elapsed)};
}

Outcome partial_fractions() {
  testing::RandomRoots gen(77);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  const auto start = std::chrono::steady_clock::now();
  double worst = 0.0;
  int repeated = 0, paired = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const RootSet r = gen.stable(gen.integer(2, 8), 3);
    bool has_repeat = false, has_pair = false;
    for (std::size_t j = 0; j < r.size(); ++j) {
      has_repeat = has_repeat || r[j].multiplicity > 1;
      has_pair = has_pair || !r.is_real(j);
    }
    repeated += has_repeat;
    paired += has_pair;
    const CoefficientSet c = partial_fraction_coefficients(r);
    const auto values = r.expanded();
    for (int k = 0; k < 16; ++k) {
      const Complex s(u(rng), u(rng));
      Complex sum = 0.0;
      for (std::size_t j = 0; j < r.size(); ++j) {
        for (int i = 1; i <= r[j].multiplicity; ++i) sum += c.values[j][i - 1] / std::pow(s - r[j].value, i);
      }
      const Complex expected = 1.0 / testing::eval_factored(values, s);
      worst = std::max(worst, std::abs(sum - expected) / std::max(1.0, std::abs(expected)));
    }
  }
  const double elapsed = seconds_since(start);
  return {worst < 1e-10 && elapsed < 1.0 && repeated > 0 && paired > 0,
          fmt("max residual %.2e (%d sets with repeats, %d with pairs), %.3f s", worst, repeated, paired, elapsed)};
}

Outcome roots_params_roundtrip() {
  const MonicPoly p = betas_fourth(4, 0.8, 1.6, 0.8);
  const double expected[] = {9, 24, 22, 8};
  double beta_err = 0.0;
  for (int q = 0; q < 4; ++q) beta_err = std::max(beta_err, std::abs(p[q] - expected[q]));

  const RootSet r = poly_roots(p);
  double root_err = 1e300;
  if (r.size() == 2 && r[0].multiplicity == 2 && r[1].multiplicity == 2) {
    const double lo = std::min(r[0].value.real(), r[1].value.real());
    const double hi = std::max(r[0].value.real(), r[1].value.real());
    root_err = std::max({std::abs(lo + 3.0), std::abs(hi + 1.0), std::abs(r[0].value.imag()),
                         std::abs(r[1].value.imag())});
  }

  double nu_err = 1e300;
  for (const SecondOrderBranch& b : roots_to_params_second(r).branches) {
    nu_err = std::min(nu_err, std::max(std::abs(b.nu0 - 1.0), std::abs(b.nu1 - 2.0)));
  }

  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> u(0.1, 5.0);
  double identity_err = 0.0;
  for (int k = 0; k < 100; ++k) {
    const MonicPoly q = betas_fourth(u(rng), u(rng), u(rng), u(rng));
    const double rel = q[3] * q[2] / 2 - std::pow(q[3], 3) / 8;
    identity_err = std::max(identity_err, std::abs(q[1] - rel) / std::max(1.0, std::abs(q[1])));
  }
  const bool pass = beta_err < 1e-12 && root_err < 1e-6 && nu_err < 1e-6 && identity_err < 1e-8;
  return {pass, fmt("betas err %.1e, roots err %.1e, (nu0,nu1) err %.1e, identity err %.1e", beta_err, root_err,
                    nu_err, identity_err)};
}

Outcome stability_cross_check() {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> theta(0.1, 6.0), alpha(0.1, 3.0);
  int agree = 0, ties = 0, stable = 0, unstable = 0;
  for (int k = 0; k < 200; ++k) {
    OperatorParams params;
    params.order = k % 2 == 0 ? 1 : 2;
    params.theta = theta(rng);
    params.alphas.clear();
    for (int i = 0; i <= params.order; ++i) params.alphas.push_back(alpha(rng));
    const MonicPoly p = characteristic_poly(params);
    const StabilityReport report = routh_hurwitz(p);
    const double max_re = poly_roots(p).max_real_part();
    bool tie = std::abs(max_re) <= 1e-9;
    for (const StabilityCondition& c : report.conditions) tie = tie || std::abs(c.margin) <= 1e-9;
    if (tie) {
      ++ties;
      continue;
    }
    (max_re < 0 ? stable : unstable) += 1;
    agree += report.stable == (max_re < 0);
  }
  const int decided = 200 - ties;
  return {agree == decided && stable > 0 && unstable > 0,
          fmt("%d/%d agree (%d stable, %d unstable, %d ties excluded)", agree, decided, stable, unstable, ties)};
}

Outcome f1_regime() {
  ExperimentConfig c = config("f1");
  c.stream.points = 20;
  const auto start = std::chrono::steady_clock::now();
  const RunResult r = run_experiment(c);
  const double elapsed = seconds_since(start);
  const TraceLog& log = r.trace;
  if (log.diverged()) return {false, fmt("l=20 diverged at t=%.3f", *log.divergence_time)};
  return {in_f1_box(log) && elapsed < 1.0, fmt("l=20: mean y %.4f in [1.7,2.0], mean b %.4f in [-1,-0.7], %.3f s",
                                               last_mean(log, "y"), last_mean(log, "b"), elapsed)};
}

Outcome theta_trend() {
  const double anchors[] = {1.956, 1.835, 1.665};
  const double thetas[] = {2.0, 5.0, 10.0};
  double ys[3];
  bool pass = true;
  for (int i = 0; i < 3; ++i) {
    ExperimentConfig c = config("f1");
    c.dynamics.params->theta = thetas[i];
    ys[i] = last_mean(run_experiment(c).trace, "y");
    pass = pass && std::abs(ys[i] - anchors[i]) <= 0.15;
    if (i > 0) pass = pass && ys[i] < ys[i - 1];
  }
  return {pass, fmt("mean y %.3f / %.3f / %.3f for theta 2 / 5 / 10", ys[0], ys[1], ys[2])};
}

Outcome divergence_regimes() {
  struct Run {
    TraceLog log;
    double seconds;
  };
  auto run = [](const std::string& name) {
    const auto start = std::chrono::steady_clock::now();
    RunResult r = run_experiment(config(name));
    return Run{std::move(r.trace), seconds_since(start)};
  };
  auto peak = [](const TraceLog& log) {
    double m = 0.0;
    for (double v : log.iteration_peaks) m = std::max(m, v);
    return m;
  };
  const Run f2 = run("f2"), f15b = run("f15b"), fs16 = run("fs16"), fs17 = run("fs17");
  const bool a = f2.log.diverged() && *f2.log.divergence_iteration <= 5;
  const bool b = f15b.log.diverged();
  const bool c16 = fs16.log.diverged();
  const bool c17 = !fs17.log.diverged() && in(last_mean(fs17.log, "y"), 1.7, 2.1) &&
                   in(last_mean(fs17.log, "b"), -1.1, -0.7);
  double slowest = 0.0;
  for (const Run* r : {&f2, &f15b, &fs16, &fs17}) slowest = std::max(slowest, r->seconds);
  std::string detail = fmt("(a) %s, peak |w| %.3g; (b) %s, peak %.3g; (c) fs16 %s, peak %.3g; fs17 y %.3f b %.3f",
                           a ? "diverged" : "bounded", peak(f2.log), b ? "diverged" : "bounded", peak(f15b.log),
                           c16 ? "diverged" : "bounded", peak(fs16.log), last_mean(fs17.log, "y"),
                           last_mean(fs17.log, "b"));
  detail += fmt("; slowest %.2f s", slowest);
  return {a && b && c16 && c17 && slowest < 2.0, detail};
}

Outcome initial_conditions() {
  const TraceLog moderate = run_experiment(config("f6")).trace;
  const TraceLog large = run_experiment(config("f8")).trace;
  return {in_f1_box(moderate) && in_f1_box(large),
          fmt("IC1 y %.3f b %.3f; IC2 y %.3f b %.3f", last_mean(moderate, "y"), last_mean(moderate, "b"),
              last_mean(large, "y"), last_mean(large, "b"))};
}

Outcome mlp_gradient_check() {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  int checked = 0;
  for (int draw = 0; draw < 100; ++draw) {
    const std::size_t in_dim = 1 + rng() % 3, hid = 1 + rng() % 20, out = 1 + rng() % 3;
    std::vector<double> w(Mlp::parameter_count_for(in_dim, hid, out));
    for (auto& v : w) v = u(rng);
    const Mlp net(in_dim, hid, out, 2, w);
    std::vector<double> x(in_dim), target(out);
    for (auto& v : x) v = u(rng);
    for (auto& v : target) v = u(rng);
    bool near_kink = false;
    for (double z : net.preactivations(w, x)) near_kink = near_kink || std::abs(z) <= 1e-4;
    if (near_kink) continue;
    ++checked;
    auto loss = [&](const std::vector<double>& params) {
      double s = 0.0;
      const auto f = net.forward_at(params, x);
      for (std::size_t o = 0; o < out; ++o) s += (f[o] - target[o]) * (f[o] - target[o]);
      return 0.5 * s;
    };
    const Gradients g = net.gradients(x, target);
    const double h = 1e-6;
    for (std::size_t p = 0; p < w.size(); ++p) {
      std::vector<double> plus = w, minus = w;
      plus[p] += h;
      minus[p] -= h;
      const double fd = (loss(plus) - loss(minus)) / (2 * h);
      worst = std::max(worst, std::abs(fd - g.zeta[p]) / std::max(1.0, std::abs(fd)));
    }
  }
  return {worst < 1e-6 && checked >= 50, fmt("max rel err %.2e over %d kink-free draws", worst, checked)};
}

Outcome ann_1d() {
  const auto start = std::chrono::steady_clock::now();
  const RunResult reg = run_experiment(config("ann1d_regression"));
  const RunResult cls = run_experiment(config("ann1d_classes"));
  const double elapsed = seconds_since(start);
  const TrainingStream reg_set = build_stream(config("ann1d_regression").stream);
  const TrainingStream cls_set = build_stream(config("ann1d_classes").stream);
  const Metrics m_reg = evaluate(*reg.model, reg_set);
  const Metrics m_cls = evaluate(*cls.model, cls_set);
  const double acc = m_cls.accuracy.value_or(0.0);
  return {m_reg.mse <= 5e-3 && acc >= 0.9,
          fmt("regression MSE %.2e on %zu labeled points; classification accuracy %.2f (MSE %.3f); %.1f s", m_reg.mse,
              m_reg.count, acc, m_cls.mse, elapsed)};
}

Outcome ann_2d() {
  ExperimentConfig c = config("ann2d_spiral");
  c.phases.resize(1);  // training phase only
  c.eval_sets.clear();
  const auto start = std::chrono::steady_clock::now();
  const RunResult r = run_experiment(c);
  const double elapsed = seconds_since(start);
  const Metrics m = evaluate(*r.model, build_stream(c.stream));
  const double acc = m.accuracy.value_or(0.0);

  // The audio table has no data here; CSV ingestion must reproduce a stream exactly.
  const TrainingStream spiral = trajectory_2d(TrajectoryKind::Spiral);
  std::string csv = "dim=2,labeled=1\n";
  for (std::size_t i = 0; i < spiral.size(); ++i) {
    csv += fmt("%.17g,%.17g,%d\n", spiral.inputs[i][0], spiral.inputs[i][1], (*spiral.labels[i])[0] == 1.0 ? 0 : 1);
  }
  const TrainingStream back = parse_feature_csv(csv);
  const bool roundtrip = back.inputs == spiral.inputs && back.labels == spiral.labels;
  return {acc >= 0.9 && roundtrip, fmt("spiral training accuracy %.2f after %zu iterations (%.1f s); CSV round-trip %s",
                                       acc, c.phases[0].iterations, elapsed, roundtrip ? "exact" : "MISMATCH")};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"oracle equivalence", oracle_equivalence},
      {"partial-fraction reconstruction", partial_fractions},
      {"roots/parameters roundtrip", roots_params_roundtrip},
      {"stability cross-check", stability_cross_check},
      {"first-order regime at l=20", f1_regime},
      {"theta trend", theta_trend},
      {"divergence regimes", divergence_regimes},
      {"initial-condition insensitivity", initial_conditions},
      {"MLP gradient check", mlp_gradient_check},
      {"1D regression and classification", ann_1d},
      {"2D spiral training and CSV ingestion", ann_2d},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%-4s %2zu %-38s %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed;
}
