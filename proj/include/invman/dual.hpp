#pragma once

#include <cmath>

namespace invman {

/// Forward-mode dual number a + a' eps with eps^2 = 0.
template <typename T = double>
struct Dual {
  T value{};
  T derivative{};

  constexpr Dual() = default;
  constexpr Dual(T v) : value(v) {}  // NOLINT: implicit lift of constants
  constexpr Dual(T v, T d) : value(v), derivative(d) {}

  constexpr Dual operator-() const { return {-value, -derivative}; }
  constexpr Dual& operator+=(const Dual& o) {
    value += o.value;
    derivative += o.derivative;
    return *this;
  }
  constexpr Dual& operator-=(const Dual& o) {
    value -= o.value;
    derivative -= o.derivative;
    return *this;
  }
  constexpr Dual& operator*=(const Dual& o) {
    derivative = derivative * o.value + value * o.derivative;
    value *= o.value;
    return *this;
  }
  constexpr Dual& operator/=(const Dual& o) {
    const T v = value / o.value;
    derivative = (derivative - v * o.derivative) / o.value;
    value = v;
    return *this;
  }

  friend constexpr Dual operator+(Dual a, const Dual& b) { return a += b; }
  friend constexpr Dual operator-(Dual a, const Dual& b) { return a -= b; }
  friend constexpr Dual operator*(Dual a, const Dual& b) { return a *= b; }
  friend constexpr Dual operator/(Dual a, const Dual& b) { return a /= b; }
};

using DualValue = Dual<double>;

// Elementary functions. Each propagates the chain rule f(a)' = f'(a) a'.
// Callers are responsible for domain checks on `value`.

template <typename T>
Dual<T> sin(const Dual<T>& a) {
  using std::cos, std::sin;
  return {sin(a.value), cos(a.value) * a.derivative};
}

template <typename T>
Dual<T> cos(const Dual<T>& a) {
  using std::cos, std::sin;
  return {cos(a.value), -sin(a.value) * a.derivative};
}

template <typename T>
Dual<T> tan(const Dual<T>& a) {
  using std::cos, std::tan;
  const T c = cos(a.value);
  return {tan(a.value), a.derivative / (c * c)};
}

template <typename T>
Dual<T> exp(const Dual<T>& a) {
  using std::exp;
  const T e = exp(a.value);
  return {e, e * a.derivative};
}

template <typename T>
Dual<T> log(const Dual<T>& a) {
  using std::log;
  return {log(a.value), a.derivative / a.value};
}

template <typename T>
Dual<T> sqrt(const Dual<T>& a) {
  using std::sqrt;
  const T r = sqrt(a.value);
  return {r, a.derivative / (T(2) * r)};
}

template <typename T>
Dual<T> atan(const Dual<T>& a) {
  using std::atan;
  return {atan(a.value), a.derivative / (T(1) + a.value * a.value)};
}

template <typename T>
Dual<T> atan2(const Dual<T>& y, const Dual<T>& x) {
  using std::atan2;
  const T r2 = x.value * x.value + y.value * y.value;
  return {atan2(y.value, x.value),
          (x.value * y.derivative - y.value * x.derivative) / r2};
}

template <typename T>
Dual<T> abs(const Dual<T>& a) {
  using std::abs;
  const T s = a.value > T(0) ? T(1) : (a.value < T(0) ? T(-1) : T(0));
  return {abs(a.value), s * a.derivative};
}

/// a^b. The log term is dropped when b is constant, so negative bases with
/// integer exponents stay differentiable.
template <typename T>
Dual<T> pow(const Dual<T>& a, const Dual<T>& b) {
  using std::log, std::pow;
  const T v = pow(a.value, b.value);
  T d = T(0);
  if (a.derivative != T(0)) d += b.value * pow(a.value, b.value - T(1)) * a.derivative;
  if (b.derivative != T(0)) d += v * log(a.value) * b.derivative;
  return {v, d};
}

}  // namespace invman
