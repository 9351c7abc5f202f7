#include "conespectra/hyperbolic.hpp"

#include <cmath>

#include "conespectra/errors.hpp"

namespace conespectra {

double gamma_metric(cdouble g, cdouble h) {
    const double d2 = std::norm(g - h);
    return d2 / (g.imag() * h.imag());
}

double hyperbolic_distance(cdouble g, cdouble h) {
    // acosh(1 + u) = log1p(u + sqrt(u * (2 + u))), stable for small gamma.
    const double u = 0.5 * gamma_metric(g, h);
    return std::log1p(u + std::sqrt(u * (2.0 + u)));
}

double c0_bound(double lambda, double a, double b, cdouble h) {
    const double t = 1.0 + 2.0 * lambda * (2.0 * std::abs(a) * std::abs(h) + std::abs(b)) / h.imag();
    return -1.0 + (1.0 + lambda * std::abs(a)) * t * t;
}

double jensen_delta(double p, double lam, double ratio) {
    if (p < 1.0) throw OutOfRange("jensen_delta: p must be >= 1");
    if (lam < 0.0 || lam > 1.0) throw OutOfRange("jensen_delta: lam must be in [0,1]");
    if (ratio < 0.0 || ratio > 1.0) throw OutOfRange("jensen_delta: ratio must be in [0,1]");
    const double gap = 1.0 - ratio;
    const double part = (p < 2.0) ? 0.5 * p * (p - 1.0) * lam * (1.0 - lam)
                                  : lam * (1.0 - std::pow(lam, p - 1.0));
    return gap * gap * part;
}

double power_split_bound(double r, double s, double p) {
    return std::pow(1.0 + s, p - 1.0) * std::pow(r, p) + std::pow(1.0 + s, p) * s;
}

double eps1(std::span<const cdouble> samples) {
    if (samples.empty()) throw Degenerate("eps1: no samples");
    double m = samples[0].imag();
    for (const auto& v : samples) {
        if (v.imag() <= 0.0) throw Degenerate("eps1: sample with nonpositive imaginary part");
        m = std::min(m, v.imag());
    }
    return m;
}

double eta1_inverse(double s, double eps1_value) {
    if (eps1_value <= 0.0) throw OutOfRange("eta1_inverse: eps1 must be positive");
    if (s < 0.0 || s >= eps1_value) throw OutOfRange("eta1_inverse: s must lie in [0, eps1)");
    return s * s / ((eps1_value - s) * eps1_value);
}

}  // namespace conespectra
