#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "ecmsim/errors.hpp"

// Special functions backing every p-value in the stats module: regularized
// incomplete gamma (chi-squared), regularized incomplete beta (t, F) and the
// complementary error function (normal). Series plus continued fractions,
// no external statistics dependencies.

namespace ecmsim::specfun {

namespace detail {

constexpr double kEps = 1e-16;
constexpr double kTiny = 1e-300;
constexpr int kMaxIter = 1000000;

// Lower regularized gamma P(a,x) by series, best for x < a + 1.
inline double gamma_p_series(double a, double x) {
    double term = 1.0 / a;
    double sum = term;
    for (int n = 1; n < kMaxIter; ++n) {
        term *= x / (a + n);
        sum += term;
        if (std::abs(term) < std::abs(sum) * kEps) {
            return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
        }
    }
    throw NumericError("incomplete gamma series did not converge (a=" +
                       std::to_string(a) + ", x=" + std::to_string(x) + ")");
}

// Upper regularized gamma Q(a,x) by modified Lentz continued fraction,
// best for x >= a + 1.
inline double gamma_q_fraction(double a, double x) {
    double b = x + 1.0 - a;
    double c = 1.0 / kTiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < kMaxIter; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < kTiny) d = kTiny;
        c = b + an / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < kEps) {
            return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
        }
    }
    throw NumericError("incomplete gamma fraction did not converge (a=" +
                       std::to_string(a) + ", x=" + std::to_string(x) + ")");
}

// Continued fraction for the incomplete beta (modified Lentz).
inline double beta_fraction(double a, double b, double x) {
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m < kMaxIter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < kEps) return h;
    }
    throw NumericError("incomplete beta fraction did not converge (a=" +
                       std::to_string(a) + ", b=" + std::to_string(b) +
                       ", x=" + std::to_string(x) + ")");
}

}  // namespace detail

// Regularized lower incomplete gamma P(a, x).
inline double gamma_p(double a, double x) {
    if (!(a > 0.0) || !(x >= 0.0)) {
        throw ValidationError("gamma_p requires a > 0 and x >= 0");
    }
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) return detail::gamma_p_series(a, x);
    return 1.0 - detail::gamma_q_fraction(a, x);
}

// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
inline double gamma_q(double a, double x) {
    if (!(a > 0.0) || !(x >= 0.0)) {
        throw ValidationError("gamma_q requires a > 0 and x >= 0");
    }
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - detail::gamma_p_series(a, x);
    return detail::gamma_q_fraction(a, x);
}

// Regularized incomplete beta I_x(a, b), symmetry-reduced so the continued
// fraction always runs in its fast region.
inline double beta_inc(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) {
        throw ValidationError("beta_inc requires positive shape parameters");
    }
    if (!(x >= 0.0 && x <= 1.0)) {
        throw ValidationError("beta_inc requires x in [0,1]");
    }
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double front = std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                                  a * std::log(x) + b * std::log1p(-x));
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * detail::beta_fraction(a, b, x) / a;
    }
    return 1.0 - front * detail::beta_fraction(b, a, 1.0 - x) / b;
}

// ---- upper-tail survival functions ----------------------------------------

inline double chi2_sf(double x, double df) {
    if (!(df > 0.0)) throw ValidationError("chi-squared df must be positive");
    if (x <= 0.0) return 1.0;
    return gamma_q(0.5 * df, 0.5 * x);
}

inline double normal_sf(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

inline double t_sf(double x, double df) {
    if (!(df > 0.0)) throw ValidationError("t df must be positive");
    if (x == 0.0) return 0.5;
    const double z = df / (df + x * x);
    const double half_tail = 0.5 * beta_inc(0.5 * df, 0.5, z);
    return x > 0.0 ? half_tail : 1.0 - half_tail;
}

inline double f_sf(double x, double df1, double df2) {
    if (!(df1 > 0.0) || !(df2 > 0.0)) throw ValidationError("F dfs must be positive");
    if (x <= 0.0) return 1.0;
    if (std::isinf(x)) return 0.0;
    return beta_inc(0.5 * df2, 0.5 * df1, df2 / (df2 + df1 * x));
}

// Upper-tail quantile of the standard normal: x with normal_sf(x) = p.
inline double normal_quantile_upper(double p) {
    if (!(p > 0.0 && p < 1.0)) throw ValidationError("quantile needs p in (0,1)");
    double lo = -40.0, hi = 40.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (normal_sf(mid) > p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// Upper-tail quantile of Student's t: x with t_sf(x, df) = p.
inline double t_quantile_upper(double p, double df) {
    if (!(p > 0.0 && p < 1.0)) throw ValidationError("quantile needs p in (0,1)");
    double hi = 2.0;
    while (t_sf(hi, df) > p && hi < 1e300) hi *= 2.0;
    double lo = -hi;
    for (int i = 0; i < 400; ++i) {
        const double mid = 0.5 * (lo + hi);
        (t_sf(mid, df) > p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace ecmsim::specfun
