#pragma once

// Impulse-response and homogeneous-solution synthesis for monic linear
// constant-coefficient ODEs, given the roots of the characteristic polynomial.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace lagrange {

using Complex = std::complex<double>;

struct Root {
  Complex value;
  int multiplicity = 1;
};

/// Distinct roots with multiplicities. Non-real roots come in conjugate pairs
/// of equal multiplicity; on construction near-real roots are snapped onto the
/// real axis and conjugate partners are made exact conjugates.
class RootSet {
 public:
  explicit RootSet(std::vector<Root> roots);

  /// Groups raw root values (e.g. from an iterative solver) into distinct
  /// roots, merging values within `clustering_tolerance`.
  static RootSet cluster(std::span<const Complex> values);

  /// Merge radius 1e-6 * (1 + max |value|).
  static double clustering_tolerance(std::span<const Complex> values);

  const std::vector<Root>& roots() const { return roots_; }
  const Root& operator[](std::size_t j) const { return roots_[j]; }
  std::size_t size() const { return roots_.size(); }
  int degree() const { return degree_; }

  /// Index of the conjugate partner of root j (j itself when real).
  std::size_t partner(std::size_t j) const { return partner_[j]; }
  bool is_real(std::size_t j) const { return partner_[j] == j; }

  double max_real_part() const;
  /// Smallest |Re λ| over all roots.
  double min_abs_real_part() const;

  /// Root values repeated by multiplicity.
  std::vector<Complex> expanded() const;

 private:
  std::vector<Root> roots_;
  std::vector<std::size_t> partner_;
  int degree_ = 0;
};

/// Monic polynomial s^n + β_{n-1}s^{n-1} + ... + β_0, stored as β_0..β_{n-1}.
class MonicPoly {
 public:
  explicit MonicPoly(std::vector<double> lower_coeffs);

  int degree() const { return static_cast<int>(coeffs_.size()); }
  std::span<const double> coeffs() const { return coeffs_; }
  double operator[](std::size_t q) const { return coeffs_[q]; }

  Complex operator()(Complex s) const;
  /// Max-norm of the full coefficient vector, leading 1 included.
  double norm() const;

 private:
  std::vector<double> coeffs_;
};

enum class BasisKind {
  /// terms c_{ji} t^{i-1}/(i-1)! e^{λ_j t}: inverse Laplace of c/(s-λ)^i
  ImpulseResponse,
  /// terms K_{ji} t^{i-1} e^{λ_j t}
  Homogeneous,
};

/// One coefficient per (root j, power i = 1..r_j); `values[j][i-1]`.
struct CoefficientSet {
  BasisKind kind = BasisKind::ImpulseResponse;
  std::vector<std::vector<Complex>> values;
};

MonicPoly characteristic_poly(const RootSet& roots);

/// Partial-fraction expansion of 1 / Π (s-λ_j)^{r_j}.
CoefficientSet partial_fraction_coefficients(const RootSet& roots);

/// g(t) for t >= 0, evaluated in real form over conjugate pairs.
double impulse_response_eval(const CoefficientSet& coeffs, const RootSet& roots, double t);

/// Coefficients of the homogeneous solution matching y(0), y'(0), ..., y^{(n-1)}(0).
CoefficientSet homogeneous_coefficients(const RootSet& roots, std::span<const double> initial);

double homogeneous_eval(const CoefficientSet& coeffs, const RootSet& roots, double t);

struct Impulse {
  double time = 0.0;
  /// Already carries the signed gain.
  double magnitude = 0.0;
};

/// y(t) = y°(t) + Σ_{h_k <= t} m_k g(t - h_k).
double closed_form_response(const RootSet& roots, std::span<const double> initial,
                            std::span<const Impulse> impulses, double t);

/// g(t) bound to its roots.
class ImpulseResponse {
 public:
  explicit ImpulseResponse(RootSet roots);

  double operator()(double t) const;
  const RootSet& roots() const { return roots_; }
  const CoefficientSet& coefficients() const { return coeffs_; }

 private:
  RootSet roots_;
  CoefficientSet coeffs_;
};

/// Precomputed closed_form_response for repeated evaluation.
class ClosedFormResponse {
 public:
  ClosedFormResponse(RootSet roots, std::span<const double> initial, std::vector<Impulse> impulses);

  double operator()(double t) const;

 private:
  ImpulseResponse response_;
  CoefficientSet homogeneous_;
  std::vector<Impulse> impulses_;
};

namespace detail {

/// Evaluates the coefficient series at any real t (no causality gate), real form.
double evaluate_real(const CoefficientSet& coeffs, const RootSet& roots, double t);

/// Same series summed term by term in complex arithmetic, without pairing.
Complex evaluate_complex(const CoefficientSet& coeffs, const RootSet& roots, double t);

/// Ascending complex coefficients of Π (s - v) over `values`.
std::vector<Complex> poly_from_values(std::span<const Complex> values);

}  // namespace detail

}  // namespace lagrange
