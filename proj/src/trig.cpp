#include "zetalab/trig.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace zetalab {

TrigPolynomial::TrigPolynomial(std::vector<TrigTerm> terms) {
  std::stable_sort(terms.begin(), terms.end(),
                   [](const TrigTerm& a, const TrigTerm& b) { return a.frequency < b.frequency; });
  for (const auto& t : terms) {
    if (!terms_.empty() && terms_.back().frequency == t.frequency) {
      terms_.back().coefficient += t.coefficient;
    } else {
      terms_.push_back(t);
    }
  }
  std::erase_if(terms_, [](const TrigTerm& t) { return t.coefficient == cplx(0.0, 0.0); });
}

TrigPolynomial TrigPolynomial::constant(cplx c) { return TrigPolynomial({TrigTerm{{0, 0}, c}}); }

TrigPolynomial TrigPolynomial::character(Frequency k, cplx c) { return TrigPolynomial({TrigTerm{k, c}}); }

TrigPolynomial TrigPolynomial::cosine(Frequency k, double a) {
  return TrigPolynomial({TrigTerm{k, 0.5 * a}, TrigTerm{{-k[0], -k[1]}, 0.5 * a}});
}

TrigPolynomial TrigPolynomial::sine(Frequency k, double a) {
  // sin t = (e^{it} - e^{-it}) / 2i
  return TrigPolynomial({TrigTerm{k, cplx(0.0, -0.5 * a)}, TrigTerm{{-k[0], -k[1]}, cplx(0.0, 0.5 * a)}});
}

cplx TrigPolynomial::operator()(const Vec2& x) const {
  cplx sum = 0.0;
  for (const auto& t : terms_) {
    if (t.frequency[0] == 0 && t.frequency[1] == 0) {
      sum += t.coefficient;
      continue;
    }
    const double phase = kTwoPi * (t.frequency[0] * x[0] + t.frequency[1] * x[1]);
    sum += t.coefficient * cplx(std::cos(phase), std::sin(phase));
  }
  return sum;
}

std::array<cplx, 2> TrigPolynomial::gradient(const Vec2& x) const {
  std::array<cplx, 2> g{0.0, 0.0};
  for (const auto& t : terms_) {
    if (t.frequency[0] == 0 && t.frequency[1] == 0) continue;
    const double phase = kTwoPi * (t.frequency[0] * x[0] + t.frequency[1] * x[1]);
    const cplx value = t.coefficient * cplx(std::cos(phase), std::sin(phase)) * cplx(0.0, kTwoPi);
    g[0] += value * double(t.frequency[0]);
    g[1] += value * double(t.frequency[1]);
  }
  return g;
}

double TrigPolynomial::coefficient_sum() const {
  double s = 0.0;
  for (const auto& t : terms_) s += std::abs(t.coefficient);
  return s;
}

int TrigPolynomial::max_frequency() const {
  int m = 0;
  for (const auto& t : terms_) m = std::max({m, std::abs(t.frequency[0]), std::abs(t.frequency[1])});
  return m;
}

cplx TrigPolynomial::coefficient(Frequency k) const {
  auto it = std::lower_bound(terms_.begin(), terms_.end(), k,
                             [](const TrigTerm& t, const Frequency& f) { return t.frequency < f; });
  if (it != terms_.end() && it->frequency == k) return it->coefficient;
  return 0.0;
}

bool TrigPolynomial::is_conjugate_symmetric(double tol) const {
  for (const auto& t : terms_) {
    if (std::abs(coefficient({-t.frequency[0], -t.frequency[1]}) - std::conj(t.coefficient)) > tol) return false;
  }
  return true;
}

TrigPolynomial TrigPolynomial::scaled(cplx c) const {
  std::vector<TrigTerm> out = terms_;
  for (auto& t : out) t.coefficient *= c;
  return TrigPolynomial(std::move(out));
}

TrigPolynomial TrigPolynomial::operator+(const TrigPolynomial& other) const {
  std::vector<TrigTerm> out = terms_;
  out.insert(out.end(), other.terms_.begin(), other.terms_.end());
  return TrigPolynomial(std::move(out));
}

}  // namespace zetalab
