#pragma once

#include <cmath>
#include <complex>
#include <type_traits>

namespace zetalab {

/// Neumaier-compensated accumulator for real or complex terms.
template <class T>
class CompensatedSum {
 public:
  void add(const T& v) {
    if constexpr (std::is_floating_point_v<T>) {
      add_real(sum_, comp_, v);
    } else {
      double re = sum_.real(), ce = comp_.real();
      double im = sum_.imag(), ci = comp_.imag();
      add_real(re, ce, v.real());
      add_real(im, ci, v.imag());
      sum_ = T(re, im);
      comp_ = T(ce, ci);
    }
  }
  T value() const { return sum_ + comp_; }

 private:
  static void add_real(double& sum, double& comp, double v) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v))
      comp += (sum - t) + v;
    else
      comp += (v - t) + sum;
    sum = t;
  }
  T sum_{};
  T comp_{};
};

}  // namespace zetalab
