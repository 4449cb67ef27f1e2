#include "lagrange/operator_params.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "lagrange/error.hpp"

namespace lagrange {

void OperatorParams::validate() const {
  if (order != 1 && order != 2) throw InvalidArgument("operator order must be 1 or 2");
  if (static_cast<int>(alphas.size()) != order + 1) {
    throw InvalidArgument("expected " + std::to_string(order + 1) + " alpha values");
  }
  if (!(theta > 0.0)) throw InvalidArgument("theta must be > 0");
  if (!(mu > 0.0)) throw InvalidArgument("mu must be > 0");
  if (!(tau > 0.0)) throw InvalidArgument("tau must be > 0");
  if (alphas.back() == 0.0) throw InvalidArgument("leading alpha must be nonzero");
  if (gamma != 1.0 && gamma != -1.0) throw InvalidArgument("gamma must be -1 or +1");
}

MonicPoly betas_first(double theta, double alpha0, double alpha1) {
  if (alpha1 == 0.0) throw InvalidArgument("betas_first: alpha1 must be nonzero");
  const double beta = (alpha0 * alpha1 * theta - alpha0 * alpha0) / (alpha1 * alpha1);
  return MonicPoly({beta, theta});
}

MonicPoly betas_fourth(double theta, double alpha0, double alpha1, double alpha2) {
  if (alpha2 == 0.0) throw InvalidArgument("betas_fourth: alpha2 must be nonzero");
  const double a22 = alpha2 * alpha2;
  const double t2 = theta * theta;
  const double b0 = (alpha0 * alpha2 * t2 - alpha0 * alpha1 * theta + alpha0 * alpha0) / a22;
  const double b1 = (alpha1 * alpha2 * t2 + (2.0 * alpha0 * alpha2 - alpha1 * alpha1) * theta) / a22;
  const double b2 = (a22 * t2 + alpha1 * alpha2 * theta + 2.0 * alpha0 * alpha2 - alpha1 * alpha1) / a22;
  return MonicPoly({b0, b1, b2, 2.0 * theta});
}

MonicPoly characteristic_poly(const OperatorParams& params) {
  params.validate();
  const auto& a = params.alphas;
  return params.order == 1 ? betas_first(params.theta, a[0], a[1])
                           : betas_fourth(params.theta, a[0], a[1], a[2]);
}

StabilityReport routh_hurwitz(const MonicPoly& poly) {
  StabilityReport report;
  auto add = [&](std::string name, double margin) {
    report.conditions.push_back({std::move(name), margin > 0.0, margin});
  };
  if (poly.degree() == 2) {
    add("beta0 > 0", poly[0]);
    add("beta1 > 0", poly[1]);
  } else if (poly.degree() == 4) {
    const double b0 = poly[0], b1 = poly[1], b2 = poly[2], b3 = poly[3];
    add("beta0 > 0", b0);
    add("beta1 > 0", b1);
    add("beta2 > 0", b2);
    add("beta3 > 0", b3);
    add("beta3*beta2 > beta1", b3 * b2 - b1);
    add("beta3*beta2*beta1 > beta1^2 + beta3^2*beta0", b3 * b2 * b1 - (b1 * b1 + b3 * b3 * b0));
  } else {
    throw InvalidArgument("routh_hurwitz: only degree 2 and 4 are supported, got " +
                          std::to_string(poly.degree()));
  }
  report.stable = std::all_of(report.conditions.begin(), report.conditions.end(),
                              [](const StabilityCondition& c) { return c.satisfied; });
  return report;
}

RootSet poly_roots(const MonicPoly& poly) {
  const int n = poly.degree();
  constexpr int kMaxIterations = 500;
  constexpr double kTolerance = 1e-12;

  // Start on a circle enclosing all roots (Cauchy bound), angles offset from
  // the real axis so that conjugate-symmetric guesses do not stall.
  double radius = 0.0;
  for (double c : poly.coeffs()) radius = std::max(radius, std::abs(c));
  radius = std::min(1.0 + radius, 1e12);
  std::vector<Complex> z(n);
  for (int k = 0; k < n; ++k) {
    z[k] = std::polar(radius, 2.0 * std::numbers::pi * k / n + 0.4);
  }

  bool converged = false;
  for (int iter = 0; iter < kMaxIterations && !converged; ++iter) {
    double max_step = 0.0;
    for (int k = 0; k < n; ++k) {
      Complex denom = 1.0;
      for (int m = 0; m < n; ++m) {
        if (m != k) denom *= z[k] - z[m];
      }
      if (std::abs(denom) == 0.0) denom = 1e-300;
      const Complex step = poly(z[k]) / denom;
      z[k] -= step;
      max_step = std::max(max_step, std::abs(step) / (1.0 + std::abs(z[k])));
    }
    converged = max_step < kTolerance;
  }
  for (const auto& v : z) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
      throw NumericFailure("poly_roots: Durand-Kerner produced non-finite values");
    }
  }
  // Repeated roots converge only linearly; the residual check below decides.
  RootSet roots = RootSet::cluster(z);
  const double limit = 1e-8 * poly.norm();
  for (const auto& r : roots.roots()) {
    const double scale = std::max(1.0, std::pow(std::abs(r.value), n));
    if (std::abs(poly(r.value)) > limit * scale) {
      std::ostringstream msg;
      msg << "poly_roots: did not converge (residual " << std::abs(poly(r.value)) << " at " << r.value << ")";
      throw NumericFailure(msg.str());
    }
  }
  return roots;
}

FirstOrderDesign roots_to_params_first(Complex lambda1, Complex lambda2) {
  if (lambda1.imag() != 0.0 || lambda2.imag() != 0.0) {
    throw InvalidArgument("roots_to_params_first: roots must be real");
  }
  const double l1 = lambda1.real();
  const double l2 = lambda2.real();
  if (!(l1 < 0.0 && l2 < 0.0)) throw InvalidArgument("roots_to_params_first: roots must be negative");
  FirstOrderDesign d;
  d.theta = -(l1 + l2);
  // ν² - θν + β = 0 with β = λ1 λ2 factors as (ν + λ1)(ν + λ2).
  d.nu = {-l1, -l2};
  std::sort(d.nu.begin(), d.nu.end());
  if (d.nu[1] == d.nu[0]) d.nu.pop_back();
  return d;
}

SecondOrderDesign roots_to_params_second(const RootSet& roots) {
  if (roots.degree() != 4) throw InvalidArgument("roots_to_params_second: four roots required");
  const MonicPoly p = characteristic_poly(roots);
  const double b0 = p[0], b1 = p[1], b2 = p[2], b3 = p[3];
  const double theta = b3 / 2.0;
  if (!(theta > 0.0)) throw Infeasible("roots_to_params_second: sum of roots must be negative (theta > 0)");

  const double predicted = b3 * b2 / 2.0 - b3 * b3 * b3 / 8.0;
  const double scale = std::max({1.0, std::abs(b1), std::abs(b3 * b2 / 2.0), std::abs(b3 * b3 * b3 / 8.0)});
  if (std::abs(b1 - predicted) > 1e-8 * scale) {
    std::ostringstream msg;
    msg << "roots_to_params_second: beta1 = " << b1 << " but the operator requires beta3*beta2/2 - beta3^3/8 = "
        << predicted << "; roots are not realizable by any (theta, alpha)";
    throw Infeasible(msg.str());
  }

  const double t = theta;
  const MonicPoly quartic({2.0 * t * b1 + b1 * b1 / (t * t) - 4.0 * b0,
                           -2.0 * t * t * t - 4.0 * b1,
                           5.0 * t * t + 2.0 * b1 / t,
                           -4.0 * t});
  const RootSet nu_roots = poly_roots(quartic);

  SecondOrderDesign d;
  d.theta = theta;
  for (const auto& r : nu_roots.roots()) {
    if (r.value.imag() != 0.0) continue;
    const double nu1 = r.value.real();
    const double nu0 = (b1 + nu1 * nu1 * t - nu1 * t * t) / (2.0 * t);
    if (!(nu0 > 0.0 && nu1 > 0.0)) continue;
    const double alpha1 = (nu0 * t * t + nu0 * nu0 - b0) / (nu0 * t);
    d.branches.push_back({nu0, nu1, alpha1});
  }
  if (d.branches.empty()) throw Infeasible("roots_to_params_second: no real positive (nu0, nu1) branch");
  std::sort(d.branches.begin(), d.branches.end(),
            [](const SecondOrderBranch& a, const SecondOrderBranch& b) { return a.nu1 < b.nu1; });
  return d;
}

DesignResult design_roots(const DesignSpec& spec, double theta) {
  if (!(spec.memory_span > 0.0)) throw InvalidArgument("design_roots: memory span a must be > 0");
  if (!(theta > 0.0)) throw InvalidArgument("design_roots: theta must be > 0");
  if (spec.fractions.empty()) throw InvalidArgument("design_roots: at least one fraction required");
  for (double f : spec.fractions) {
    if (!(f > 0.0)) throw InvalidArgument("design_roots: fractions must be positive");
  }
  const double memory_root = -1.0 / spec.memory_span;
  std::vector<Complex> values{memory_root};
  double sum = memory_root;
  double smallest_fraction = spec.fractions.front();
  for (double f : spec.fractions) {
    values.emplace_back(-f * theta);
    sum += -f * theta;
    smallest_fraction = std::min(smallest_fraction, f);
  }
  std::vector<std::string> warnings;
  if (std::abs(-sum - 2.0 * theta) > 1e-6 * std::max(1.0, theta)) {
    std::ostringstream msg;
    msg << "roots sum to " << sum << " but -2*theta = " << -2.0 * theta;
    warnings.push_back(msg.str());
  }
  if (-memory_root >= smallest_fraction * theta) {
    std::ostringstream msg;
    msg << "memory root " << memory_root << " is not small compared with the other roots";
    warnings.push_back(msg.str());
  }
  // Coinciding values (e.g. a = 1/(f θ)) collapse into one repeated root.
  return {RootSet::cluster(values), std::move(warnings)};
}

}  // namespace lagrange
