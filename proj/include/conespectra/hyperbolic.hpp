#pragma once

#include <complex>
#include <span>

namespace conespectra {

using cdouble = std::complex<double>;

// Semi-metric on the upper half plane used to compare perturbed and
// unperturbed Green functions. Symmetric, zero iff the points coincide, and
// invariant under u -> -1/u; the triangle inequality can fail.
double gamma_metric(cdouble g, cdouble h);

// True hyperbolic distance: acosh(gamma/2 + 1).
double hyperbolic_distance(cdouble g, cdouble h);

/// Growth constant for the affine perturbation g -> (1 + lambda*a)g + lambda*b:
/// gamma of the perturbed point against h is at most
/// (1 + c0) * gamma(g, h) + c0 for every g in the upper half plane.
double c0_bound(double lambda, double a, double b, cdouble h);

/// Refined Jensen constant for r -> r^p on a two-point convex combination:
/// (lam*r + (1-lam)*s)^p <= (1 - delta) * (lam*r^p + (1-lam)*s^p)
/// with ratio = s/r in [0, 1].
double jensen_delta(double p, double lam, double ratio);

/// Splitting bound for p-th powers: (r + s)^p <= (1+s)^(p-1) r^p + (1+s)^p s
/// for r, s >= 0.
double power_split_bound(double r, double s, double p);

/// Smallest imaginary part among the samples; throws Degenerate if any sample
/// has nonpositive imaginary part.
double eps1(std::span<const cdouble> samples);

/// Inverse of the Euclidean-offset function of hyperbolic balls around the
/// reference points: s^2 / ((eps1 - s) * eps1) for 0 <= s < eps1.
double eta1_inverse(double s, double eps1_value);

}  // namespace conespectra
