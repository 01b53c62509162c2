#pragma once

namespace asdopt::normal {

inline constexpr double kInvSqrt2 = 0.70710678118654752440;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;

/// Standard normal density.
double pdf(double x);

/// Standard normal distribution function, evaluated through erfc so that
/// both tails keep full relative precision.
double cdf(double x);

/// Upper tail 1 - cdf(x).
double upper_tail(double x);

/// Standard normal quantile for p in (0, 1). Acklam's rational
/// approximation followed by one Halley step against erfc, which brings
/// the result to roughly machine precision across the whole range.
double quantile(double p);

/// quantile(1 - p) computed without forming 1 - p.
inline double upper_quantile(double p) { return -quantile(p); }

}  // namespace asdopt::normal
