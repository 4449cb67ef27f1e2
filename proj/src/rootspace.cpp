#include "lagrange/rootspace.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "lagrange/error.hpp"

namespace lagrange {

namespace {

double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double b = 1.0;
  for (int i = 1; i <= k; ++i) b = b * (n - k + i) / i;
  return b;
}

Eigen::VectorXcd solve_checked(const Eigen::MatrixXcd& a, const Eigen::VectorXcd& rhs, const char* what) {
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(a);
  const double rcond = lu.rcond();
  if (!(rcond > 1e-14)) {
    throw NumericFailure(std::string(what) + ": singular system (rcond " + std::to_string(rcond) +
                         "); coincident roots must be merged");
  }
  Eigen::VectorXcd x = lu.solve(rhs);
  if (!x.allFinite()) throw NumericFailure(std::string(what) + ": non-finite solution");
  return x;
}

CoefficientSet unpack(const RootSet& roots, const Eigen::VectorXcd& x, BasisKind kind) {
  CoefficientSet out;
  out.kind = kind;
  out.values.resize(roots.size());
  Eigen::Index col = 0;
  for (std::size_t j = 0; j < roots.size(); ++j) {
    out.values[j].resize(roots[j].multiplicity);
    for (int i = 0; i < roots[j].multiplicity; ++i) out.values[j][i] = x(col++);
  }
  // Conjugate partners share conjugate coefficients; enforce it exactly.
  for (std::size_t j = 0; j < roots.size(); ++j) {
    const std::size_t p = roots.partner(j);
    if (p == j) {
      for (auto& c : out.values[j]) c = Complex(c.real(), 0.0);
    } else if (roots[j].value.imag() > 0.0) {
      for (int i = 0; i < roots[j].multiplicity; ++i) {
        const Complex avg = 0.5 * (out.values[j][i] + std::conj(out.values[p][i]));
        out.values[j][i] = avg;
        out.values[p][i] = std::conj(avg);
      }
    }
  }
  return out;
}

double basis_scale(BasisKind kind, int power) {
  return kind == BasisKind::ImpulseResponse ? 1.0 / factorial(power) : 1.0;
}

}  // namespace

// ---------------------------------------------------------------------------
// RootSet

double RootSet::clustering_tolerance(std::span<const Complex> values) {
  double max_abs = 0.0;
  for (const auto& v : values) max_abs = std::max(max_abs, std::abs(v));
  return 1e-6 * (1.0 + max_abs);
}

RootSet::RootSet(std::vector<Root> roots) : roots_(std::move(roots)) {
  if (roots_.empty()) throw InvalidArgument("RootSet: at least one root required");
  std::vector<Complex> values;
  for (const auto& r : roots_) {
    if (r.multiplicity < 1) throw InvalidArgument("RootSet: multiplicity must be >= 1");
    if (!std::isfinite(r.value.real()) || !std::isfinite(r.value.imag())) {
      throw InvalidArgument("RootSet: non-finite root");
    }
    values.push_back(r.value);
    degree_ += r.multiplicity;
  }
  const double tol = clustering_tolerance(values);

  for (auto& r : roots_) {
    if (std::abs(r.value.imag()) <= tol) r.value = Complex(r.value.real(), 0.0);
  }
  for (std::size_t a = 0; a < roots_.size(); ++a) {
    for (std::size_t b = a + 1; b < roots_.size(); ++b) {
      if (std::abs(roots_[a].value - roots_[b].value) <= tol) {
        throw InvalidArgument("RootSet: roots closer than the clustering tolerance must be merged");
      }
    }
  }

  partner_.assign(roots_.size(), 0);
  std::vector<bool> paired(roots_.size(), false);
  for (std::size_t j = 0; j < roots_.size(); ++j) {
    if (roots_[j].value.imag() == 0.0) {
      partner_[j] = j;
      paired[j] = true;
    }
  }
  for (std::size_t j = 0; j < roots_.size(); ++j) {
    if (paired[j]) continue;
    const Complex target = std::conj(roots_[j].value);
    std::size_t best = roots_.size();
    double best_dist = tol;
    for (std::size_t k = 0; k < roots_.size(); ++k) {
      if (k == j || paired[k]) continue;
      const double d = std::abs(roots_[k].value - target);
      if (d <= best_dist) {
        best = k;
        best_dist = d;
      }
    }
    if (best == roots_.size() || roots_[best].multiplicity != roots_[j].multiplicity) {
      throw InvalidArgument("RootSet: non-real roots must come in conjugate pairs of equal multiplicity");
    }
    const Complex avg = 0.5 * (roots_[j].value + std::conj(roots_[best].value));
    roots_[j].value = avg;
    roots_[best].value = std::conj(avg);
    partner_[j] = best;
    partner_[best] = j;
    paired[j] = paired[best] = true;
  }
}

RootSet RootSet::cluster(std::span<const Complex> values) {
  if (values.empty()) throw InvalidArgument("RootSet::cluster: no values");
  const double tol = clustering_tolerance(values);
  std::vector<std::vector<Complex>> groups;
  for (const auto& v : values) {
    auto it = std::find_if(groups.begin(), groups.end(), [&](const std::vector<Complex>& g) {
      return std::any_of(g.begin(), g.end(), [&](const Complex& w) { return std::abs(w - v) <= tol; });
    });
    if (it == groups.end()) {
      groups.push_back({v});
    } else {
      it->push_back(v);
    }
  }
  std::vector<Root> roots;
  roots.reserve(groups.size());
  for (const auto& g : groups) {
    Complex mean = 0.0;
    for (const auto& v : g) mean += v;
    mean /= static_cast<double>(g.size());
    roots.push_back({mean, static_cast<int>(g.size())});
  }
  return RootSet(std::move(roots));
}

double RootSet::max_real_part() const {
  double m = -std::numeric_limits<double>::infinity();
  for (const auto& r : roots_) m = std::max(m, r.value.real());
  return m;
}

double RootSet::min_abs_real_part() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& r : roots_) m = std::min(m, std::abs(r.value.real()));
  return m;
}

std::vector<Complex> RootSet::expanded() const {
  std::vector<Complex> out;
  out.reserve(degree_);
  for (const auto& r : roots_) out.insert(out.end(), r.multiplicity, r.value);
  return out;
}

// ---------------------------------------------------------------------------
// MonicPoly

MonicPoly::MonicPoly(std::vector<double> lower_coeffs) : coeffs_(std::move(lower_coeffs)) {
  if (coeffs_.empty()) throw InvalidArgument("MonicPoly: degree must be >= 1");
  for (double c : coeffs_) {
    if (!std::isfinite(c)) throw InvalidArgument("MonicPoly: non-finite coefficient");
  }
}

Complex MonicPoly::operator()(Complex s) const {
  Complex acc = 1.0;
  for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * s + *it;
  return acc;
}

double MonicPoly::norm() const {
  double m = 1.0;
  for (double c : coeffs_) m = std::max(m, std::abs(c));
  return m;
}

// ---------------------------------------------------------------------------

namespace detail {

std::vector<Complex> poly_from_values(std::span<const Complex> values) {
  std::vector<Complex> p{1.0};
  for (const auto& v : values) {
    std::vector<Complex> next(p.size() + 1, 0.0);
    for (std::size_t q = 0; q < p.size(); ++q) {
      next[q + 1] += p[q];
      next[q] -= v * p[q];
    }
    p = std::move(next);
  }
  return p;
}

double evaluate_real(const CoefficientSet& coeffs, const RootSet& roots, double t) {
  double sum = 0.0;
  for (std::size_t j = 0; j < roots.size(); ++j) {
    const Complex lambda = roots[j].value;
    const bool real = roots.is_real(j);
    if (!real && lambda.imag() < 0.0) continue;  // folded into the partner with Im > 0
    double poly_re = 0.0;
    double poly_im = 0.0;
    double tp = 1.0;
    for (int i = 0; i < roots[j].multiplicity; ++i) {
      const Complex c = coeffs.values[j][i] * basis_scale(coeffs.kind, i);
      poly_re += c.real() * tp;
      poly_im += c.imag() * tp;
      tp *= t;
    }
    const double decay = std::exp(lambda.real() * t);
    if (real) {
      sum += poly_re * decay;
    } else {
      const double w = lambda.imag() * t;
      sum += 2.0 * decay * (poly_re * std::cos(w) - poly_im * std::sin(w));
    }
  }
  return sum;
}

Complex evaluate_complex(const CoefficientSet& coeffs, const RootSet& roots, double t) {
  Complex sum = 0.0;
  for (std::size_t j = 0; j < roots.size(); ++j) {
    const Complex e = std::exp(roots[j].value * t);
    double tp = 1.0;
    for (int i = 0; i < roots[j].multiplicity; ++i) {
      sum += coeffs.values[j][i] * basis_scale(coeffs.kind, i) * tp * e;
      tp *= t;
    }
  }
  return sum;
}

}  // namespace detail

MonicPoly characteristic_poly(const RootSet& roots) {
  const auto values = roots.expanded();
  const auto p = detail::poly_from_values(values);
  double scale = 1.0;
  for (const auto& c : p) scale = std::max(scale, std::abs(c));
  std::vector<double> lower(values.size());
  for (std::size_t q = 0; q < values.size(); ++q) {
    if (std::abs(p[q].imag()) > 1e-12 * scale) {
      throw InvalidArgument("characteristic_poly: root set is not conjugate-symmetric");
    }
    lower[q] = p[q].real();
  }
  return MonicPoly(std::move(lower));
}

CoefficientSet partial_fraction_coefficients(const RootSet& roots) {
  const int n = roots.degree();
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(n, n);
  Eigen::Index col = 0;
  for (std::size_t j = 0; j < roots.size(); ++j) {
    for (int i = 1; i <= roots[j].multiplicity; ++i) {
      // (s-λ_j)^{r_j-i} Π_{k≠j} (s-λ_k)^{r_k}
      std::vector<Complex> factors;
      for (std::size_t k = 0; k < roots.size(); ++k) {
        const int power = (k == j) ? roots[j].multiplicity - i : roots[k].multiplicity;
        factors.insert(factors.end(), power, roots[k].value);
      }
      const auto column = detail::poly_from_values(factors);
      for (std::size_t q = 0; q < column.size(); ++q) a(static_cast<Eigen::Index>(q), col) = column[q];
      ++col;
    }
  }
  Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(n);
  rhs(0) = 1.0;
  return unpack(roots, solve_checked(a, rhs, "partial_fraction_coefficients"), BasisKind::ImpulseResponse);
}

double impulse_response_eval(const CoefficientSet& coeffs, const RootSet& roots, double t) {
  if (!(t >= 0.0)) throw InvalidArgument("impulse_response_eval: t must be >= 0");
  return detail::evaluate_real(coeffs, roots, t);
}

CoefficientSet homogeneous_coefficients(const RootSet& roots, std::span<const double> initial) {
  const int n = roots.degree();
  if (static_cast<int>(initial.size()) != n) {
    throw InvalidArgument("homogeneous_coefficients: expected " + std::to_string(n) + " initial values, got " +
                          std::to_string(initial.size()));
  }
  // Row v holds d^v/dt^v [t^{i-1} e^{λt}] at t = 0, i.e. C(v, i-1) (i-1)! λ^{v-i+1}.
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(n, n);
  Eigen::Index col = 0;
  for (std::size_t j = 0; j < roots.size(); ++j) {
    const Complex lambda = roots[j].value;
    for (int i = 1; i <= roots[j].multiplicity; ++i) {
      for (int v = i - 1; v < n; ++v) {
        m(v, col) = binomial(v, i - 1) * factorial(i - 1) * std::pow(lambda, v - i + 1);
      }
      ++col;
    }
  }
  Eigen::VectorXcd rhs(n);
  for (int v = 0; v < n; ++v) rhs(v) = initial[v];
  return unpack(roots, solve_checked(m, rhs, "homogeneous_coefficients"), BasisKind::Homogeneous);
}

double homogeneous_eval(const CoefficientSet& coeffs, const RootSet& roots, double t) {
  if (!(t >= 0.0)) throw InvalidArgument("homogeneous_eval: t must be >= 0");
  return detail::evaluate_real(coeffs, roots, t);
}

double closed_form_response(const RootSet& roots, std::span<const double> initial,
                            std::span<const Impulse> impulses, double t) {
  return ClosedFormResponse(roots, initial, {impulses.begin(), impulses.end()})(t);
}

ImpulseResponse::ImpulseResponse(RootSet roots)
    : roots_(std::move(roots)), coeffs_(partial_fraction_coefficients(roots_)) {}

double ImpulseResponse::operator()(double t) const { return impulse_response_eval(coeffs_, roots_, t); }

ClosedFormResponse::ClosedFormResponse(RootSet roots, std::span<const double> initial,
                                       std::vector<Impulse> impulses)
    : response_(std::move(roots)),
      homogeneous_(homogeneous_coefficients(response_.roots(), initial)),
      impulses_(std::move(impulses)) {
  for (std::size_t k = 1; k < impulses_.size(); ++k) {
    if (!(impulses_[k].time > impulses_[k - 1].time)) {
      throw InvalidArgument("closed_form_response: impulse times must be strictly increasing");
    }
  }
}

double ClosedFormResponse::operator()(double t) const {
  double y = homogeneous_eval(homogeneous_, response_.roots(), t);
  for (const auto& imp : impulses_) {
    if (imp.time > t) break;
    y += imp.magnitude * response_(t - imp.time);
  }
  return y;
}

}  // namespace lagrange
