#pragma once

// Shared oracles and random generators for the test suites.

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <complex>
#include <random>
#include <vector>

#include "lagrange/rootspace.hpp"

namespace testing {

using lagrange::Complex;
using lagrange::Root;
using lagrange::RootSet;

/// Independent matrix exponential (Eigen's unsupported module).
inline Eigen::MatrixXd expm_oracle(const Eigen::MatrixXd& m) { return m.exp(); }

/// Companion matrix with last row -β, for a monic polynomial given by its roots.
inline Eigen::MatrixXd companion_from_betas(const std::vector<double>& beta) {
  const int n = static_cast<int>(beta.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) a(i, i + 1) = 1.0;
  for (int q = 0; q < n; ++q) a(n - 1, q) = -beta[q];
  return a;
}

/// Expands Π(s - λ) by repeated multiplication; ascending complex coefficients.
inline std::vector<Complex> expand_roots(const std::vector<Complex>& values) {
  std::vector<Complex> p{1.0};
  for (const Complex& l : values) {
    std::vector<Complex> next(p.size() + 1, 0.0);
    for (std::size_t k = 0; k < p.size(); ++k) {
      next[k + 1] += p[k];
      next[k] -= l * p[k];
    }
    p = next;
  }
  return p;
}

inline Complex eval_poly(const std::vector<Complex>& ascending, Complex s) {
  Complex acc = 0.0;
  for (auto it = ascending.rbegin(); it != ascending.rend(); ++it) acc = acc * s + *it;
  return acc;
}

/// Π (s - v) in product form; well conditioned near clustered roots, unlike
/// Horner evaluation of the expanded coefficients.
inline Complex eval_factored(const std::vector<Complex>& values, Complex s) {
  std::complex<long double> acc = 1.0L;
  for (const Complex& v : values) acc *= std::complex<long double>(s) - std::complex<long double>(v);
  return Complex(acc);
}

struct RandomRoots {
  std::mt19937_64 rng;
  explicit RandomRoots(std::uint64_t seed) : rng(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

  /// Stable set of given degree; real roots and conjugate pairs, pairwise
  /// separated by at least `gap`; multiplicities up to `max_mult`.
  RootSet stable(int degree, int max_mult = 1, double gap = 0.3) {
    while (true) {
      std::vector<Root> roots;
      int left = degree;
      bool ok = true;
      while (left > 0 && ok) {
        const int mult = std::min(integer(1, max_mult), left);
        const bool pair = left >= 2 * mult && uniform(0, 1) < 0.5;
        const Complex v(uniform(-3.0, -0.2), pair ? uniform(0.3, 3.0) : 0.0);
        for (const Root& r : roots) {
          if (std::abs(r.value - v) < gap || std::abs(r.value - std::conj(v)) < gap) ok = false;
        }
        roots.push_back({v, mult});
        left -= mult;
        if (pair) {
          roots.push_back({std::conj(v), mult});
          left -= mult;
        }
      }
      if (ok) return RootSet(roots);
    }
  }
};

inline bool close_rel(double a, double b, double rel, double scale = 0.0) {
  return std::abs(a - b) <= rel * std::max({std::abs(a), std::abs(b), scale, 1e-300});
}

}  // namespace testing
