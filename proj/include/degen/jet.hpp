#pragma once

#include <array>
#include <cmath>

namespace degen {

/// Second-order forward-mode jet in three variables: value, gradient, Hessian.
/// Used to derive manufactured forcings exactly from closed-form fields.
struct Jet {
  double v = 0.0;
  std::array<double, 3> g{};
  std::array<std::array<double, 3>, 3> H{};

  Jet() = default;
  Jet(double value) : v(value) {}  // NOLINT(google-explicit-constructor)

  static Jet variable(double value, int k) {
    Jet j(value);
    j.g[k] = 1.0;
    return j;
  }
};

namespace jet_detail {

inline Jet chain(const Jet& a, double f0, double f1, double f2) {
  Jet r(f0);
  for (int i = 0; i < 3; ++i) {
    r.g[i] = f1 * a.g[i];
    for (int j = 0; j < 3; ++j) r.H[i][j] = f1 * a.H[i][j] + f2 * a.g[i] * a.g[j];
  }
  return r;
}

}  // namespace jet_detail

inline Jet operator+(const Jet& a, const Jet& b) {
  Jet r(a.v + b.v);
  for (int i = 0; i < 3; ++i) {
    r.g[i] = a.g[i] + b.g[i];
    for (int j = 0; j < 3; ++j) r.H[i][j] = a.H[i][j] + b.H[i][j];
  }
  return r;
}

inline Jet operator-(const Jet& a) { return jet_detail::chain(a, -a.v, -1.0, 0.0); }
inline Jet operator-(const Jet& a, const Jet& b) { return a + (-b); }

inline Jet operator*(const Jet& a, const Jet& b) {
  Jet r(a.v * b.v);
  for (int i = 0; i < 3; ++i) {
    r.g[i] = a.g[i] * b.v + a.v * b.g[i];
    for (int j = 0; j < 3; ++j)
      r.H[i][j] = a.H[i][j] * b.v + a.v * b.H[i][j] + a.g[i] * b.g[j] + a.g[j] * b.g[i];
  }
  return r;
}

inline Jet recip(const Jet& a) {
  const double inv = 1.0 / a.v;
  return jet_detail::chain(a, inv, -inv * inv, 2.0 * inv * inv * inv);
}
inline Jet operator/(const Jet& a, const Jet& b) { return a * recip(b); }

inline Jet sin(const Jet& a) { return jet_detail::chain(a, std::sin(a.v), std::cos(a.v), -std::sin(a.v)); }
inline Jet cos(const Jet& a) { return jet_detail::chain(a, std::cos(a.v), -std::sin(a.v), -std::cos(a.v)); }
inline Jet exp(const Jet& a) {
  const double e = std::exp(a.v);
  return jet_detail::chain(a, e, e, e);
}
inline Jet sqrt(const Jet& a) {
  const double s = std::sqrt(a.v);
  return jet_detail::chain(a, s, 0.5 / s, -0.25 / (s * a.v));
}
/// a^p for a > 0.
inline Jet pow(const Jet& a, double p) {
  const double f0 = std::pow(a.v, p);
  return jet_detail::chain(a, f0, p * f0 / a.v, p * (p - 1.0) * f0 / (a.v * a.v));
}

}  // namespace degen
