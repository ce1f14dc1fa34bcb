#pragma once

#include <cmath>

namespace equistab {

// First-order forward-mode dual number. Nesting Dual<Dual<double>> gives
// second derivatives (one seed per level).
template <typename T>
struct Dual {
    T v{};
    T d{};

    Dual() = default;
    Dual(T value, T deriv) : v(value), d(deriv) {}
    explicit Dual(double c) : v(c), d(0.0) {}
};

inline double primal(double x) { return x; }

template <typename T>
double primal(const Dual<T> &x)
{
    return primal(x.v);
}

template <typename T>
Dual<T> operator+(const Dual<T> &a, const Dual<T> &b)
{
    return {a.v + b.v, a.d + b.d};
}

template <typename T>
Dual<T> operator-(const Dual<T> &a, const Dual<T> &b)
{
    return {a.v - b.v, a.d - b.d};
}

template <typename T>
Dual<T> operator-(const Dual<T> &a)
{
    return {-a.v, -a.d};
}

template <typename T>
Dual<T> operator*(const Dual<T> &a, const Dual<T> &b)
{
    return {a.v * b.v, a.d * b.v + a.v * b.d};
}

template <typename T>
Dual<T> operator/(const Dual<T> &a, const Dual<T> &b)
{
    const T q = a.v / b.v;
    return {q, a.d / b.v - q * (b.d / b.v)};
}

template <typename T>
Dual<T> operator*(double c, const Dual<T> &a)
{
    return {c * a.v, c * a.d};
}

template <typename T>
Dual<T> sin(const Dual<T> &a)
{
    using std::cos;
    using std::sin;
    return {sin(a.v), cos(a.v) * a.d};
}

template <typename T>
Dual<T> cos(const Dual<T> &a)
{
    using std::cos;
    using std::sin;
    return {cos(a.v), -(sin(a.v) * a.d)};
}

template <typename T>
Dual<T> exp(const Dual<T> &a)
{
    using std::exp;
    const T e = exp(a.v);
    return {e, e * a.d};
}

template <typename T>
Dual<T> sqrt(const Dual<T> &a)
{
    using std::sqrt;
    const T s = sqrt(a.v);
    return {s, a.d / (2.0 * s)};
}

} // namespace equistab
