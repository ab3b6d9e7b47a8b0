#pragma once

#include <array>
#include <vector>

#include "zetalab/types.hpp"

namespace zetalab {

struct TrigTerm {
  Frequency frequency{0, 0};
  cplx coefficient{0.0, 0.0};

  bool operator==(const TrigTerm&) const = default;
};

/// Finite Fourier sum x -> sum_k c_k exp(2 pi i k.x) on the 2-torus.
///
/// Terms with equal frequency are merged on construction and the list is kept
/// in lexicographic frequency order, so two polynomials with the same
/// coefficients compare (and serialize) identically.
class TrigPolynomial {
 public:
  TrigPolynomial() = default;
  explicit TrigPolynomial(std::vector<TrigTerm> terms);

  static TrigPolynomial constant(cplx c);
  static TrigPolynomial character(Frequency k, cplx c = 1.0);
  /// a*cos(2 pi k.x) as a conjugate-symmetric pair.
  static TrigPolynomial cosine(Frequency k, double a);
  static TrigPolynomial sine(Frequency k, double a);

  cplx operator()(const Vec2& x) const;
  std::array<cplx, 2> gradient(const Vec2& x) const;

  /// Sum of |c_k|: a rigorous bound for the sup norm.
  double coefficient_sum() const;
  /// Largest |k|_inf over the terms (0 for the empty polynomial).
  int max_frequency() const;
  cplx coefficient(Frequency k) const;
  /// c_{-k} == conj(c_k) for every k, i.e. the polynomial is real valued.
  bool is_conjugate_symmetric(double tol = 0.0) const;

  const std::vector<TrigTerm>& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }

  TrigPolynomial scaled(cplx c) const;
  TrigPolynomial operator+(const TrigPolynomial& other) const;

  friend bool operator==(const TrigPolynomial&, const TrigPolynomial&) = default;

 private:
  std::vector<TrigTerm> terms_;
};

}  // namespace zetalab
