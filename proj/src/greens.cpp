#include "conespectra/greens.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "conespectra/errors.hpp"
#include "conespectra/parallel.hpp"

namespace conespectra {

namespace {

// Denominator z - v_k + sum_l M(k,l) Gamma_l of the recursion at label k.
cdouble denom(const SubstitutionModel& model, cdouble z, const std::vector<cdouble>& g, int k) {
    cdouble s = z - model.v_per[static_cast<std::size_t>(k)];
    for (int l = 0; l < model.alphabet_size; ++l)
        s += static_cast<double>(model.m(k, l)) * g[static_cast<std::size_t>(l)];
    return s;
}

std::vector<cdouble> apply_map(const SubstitutionModel& model, cdouble z,
                               const std::vector<cdouble>& g) {
    std::vector<cdouble> out(g.size());
    for (int k = 0; k < model.alphabet_size; ++k) out[static_cast<std::size_t>(k)] = -1.0 / denom(model, z, g, k);
    return out;
}

double map_residual(const SubstitutionModel& model, cdouble z, const std::vector<cdouble>& g) {
    double r = 0.0;
    for (int k = 0; k < model.alphabet_size; ++k)
        r = std::max(r, std::abs(g[static_cast<std::size_t>(k)] + 1.0 / denom(model, z, g, k)));
    return r;
}

bool in_upper_half(const std::vector<cdouble>& g) {
    for (const auto& v : g)
        if (!(v.imag() > 0.0)) return false;
    return true;
}

// Gaussian elimination with partial pivoting; n is tiny (the alphabet size).
bool solve_linear(std::vector<cdouble> a, std::vector<cdouble> b, std::vector<cdouble>& x) {
    const int n = static_cast<int>(b.size());
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(a[static_cast<std::size_t>(r) * n + col]) > std::abs(a[static_cast<std::size_t>(piv) * n + col])) piv = r;
        if (std::abs(a[static_cast<std::size_t>(piv) * n + col]) < 1e-300) return false;
        if (piv != col) {
            for (int c = 0; c < n; ++c)
                std::swap(a[static_cast<std::size_t>(piv) * n + c], a[static_cast<std::size_t>(col) * n + c]);
            std::swap(b[static_cast<std::size_t>(piv)], b[static_cast<std::size_t>(col)]);
        }
        for (int r = col + 1; r < n; ++r) {
            const cdouble f = a[static_cast<std::size_t>(r) * n + col] / a[static_cast<std::size_t>(col) * n + col];
            a[static_cast<std::size_t>(r) * n + col] = 0.0;
            for (int c = col + 1; c < n; ++c)
                a[static_cast<std::size_t>(r) * n + c] -= f * a[static_cast<std::size_t>(col) * n + c];
            b[static_cast<std::size_t>(r)] -= f * b[static_cast<std::size_t>(col)];
        }
    }
    x.assign(static_cast<std::size_t>(n), cdouble{});
    for (int r = n - 1; r >= 0; --r) {
        cdouble s = b[static_cast<std::size_t>(r)];
        for (int c = r + 1; c < n; ++c) s -= a[static_cast<std::size_t>(r) * n + c] * x[static_cast<std::size_t>(c)];
        x[static_cast<std::size_t>(r)] = s / a[static_cast<std::size_t>(r) * n + r];
    }
    return true;
}

// Newton iteration on F_k(g) = g_k + 1/denom_k(g), with a step-halving guard
// that keeps the iterate in the upper half plane and the residual decreasing.
bool newton_refine(const SubstitutionModel& model, cdouble z, std::vector<cdouble>& g, double tol,
                   int max_iter) {
    const int n = model.alphabet_size;
    double res = map_residual(model, z, g);
    for (int it = 0; it < max_iter; ++it) {
        if (res <= tol) return true;
        std::vector<cdouble> jac(static_cast<std::size_t>(n) * n);
        std::vector<cdouble> rhs(static_cast<std::size_t>(n));
        for (int k = 0; k < n; ++k) {
            const cdouble d = denom(model, z, g, k);
            const cdouble inv2 = 1.0 / (d * d);
            for (int l = 0; l < n; ++l)
                jac[static_cast<std::size_t>(k) * n + l] =
                    (k == l ? 1.0 : 0.0) - static_cast<double>(model.m(k, l)) * inv2;
            rhs[static_cast<std::size_t>(k)] = -(g[static_cast<std::size_t>(k)] + 1.0 / d);
        }
        std::vector<cdouble> step;
        if (!solve_linear(std::move(jac), std::move(rhs), step)) return false;
        double scale = 1.0;
        bool moved = false;
        for (int half = 0; half < 40; ++half) {
            std::vector<cdouble> trial = g;
            for (int k = 0; k < n; ++k) trial[static_cast<std::size_t>(k)] += scale * step[static_cast<std::size_t>(k)];
            if (in_upper_half(trial)) {
                const double tr = map_residual(model, z, trial);
                if (tr < res) {
                    g = std::move(trial);
                    res = tr;
                    moved = true;
                    break;
                }
            }
            scale *= 0.5;
        }
        if (!moved) return res <= tol;
    }
    return map_residual(model, z, g) <= tol;
}

// Damped fixed-point sweep: g <- (1-s) g + s Phi(g), s halved on residual
// increase and reset on success.
bool damped_iterate(const SubstitutionModel& model, cdouble z, std::vector<cdouble>& g, double tol,
                    int max_iter) {
    double res = map_residual(model, z, g);
    double s = 1.0;
    for (int it = 0; it < max_iter; ++it) {
        if (res <= tol) return true;
        const std::vector<cdouble> phi = apply_map(model, z, g);
        std::vector<cdouble> trial(g.size());
        for (std::size_t k = 0; k < g.size(); ++k) trial[k] = (1.0 - s) * g[k] + s * phi[k];
        const double tr = in_upper_half(trial) ? map_residual(model, z, trial)
                                               : std::numeric_limits<double>::infinity();
        if (tr < res) {
            g = std::move(trial);
            res = tr;
            s = std::min(1.0, s * 1.5);
        } else {
            s *= 0.5;
            if (s < 1e-8) return false;
        }
    }
    return res <= tol;
}

GreenVector finish(const SubstitutionModel& model, cdouble z, std::vector<cdouble> g) {
    GreenVector out;
    out.z = z;
    out.residual = map_residual(model, z, g);
    out.values = std::move(g);
    return out;
}

}  // namespace

double recursion_residual(const SubstitutionModel& model, const GreenVector& gamma) {
    return map_residual(model, gamma.z, gamma.values);
}

GreenVector solve_gamma(const SubstitutionModel& model, cdouble z, const SolveOptions& opts) {
    if (!(z.imag() > 0.0)) throw InvalidZ("solve_gamma: Im z must be positive");

    std::vector<cdouble> g;
    if (opts.initial && in_upper_half(*opts.initial) &&
        static_cast<int>(opts.initial->size()) == model.alphabet_size) {
        g = *opts.initial;
    } else {
        g.assign(static_cast<std::size_t>(model.alphabet_size), cdouble(0.0, 1.0));
    }

    if (damped_iterate(model, z, g, opts.tol, opts.max_damped)) return finish(model, z, g);
    if (newton_refine(model, z, g, opts.tol, opts.max_newton)) return finish(model, z, g);
    if (damped_iterate(model, z, g, opts.tol, opts.max_damped_fallback)) return finish(model, z, g);
    if (newton_refine(model, z, g, opts.tol, opts.max_newton)) return finish(model, z, g);
    throw NoConvergence("solve_gamma: no convergence at z = (" + std::to_string(z.real()) + ", " +
                        std::to_string(z.imag()) + "i)");
}

GreenVector solve_gamma_boundary(const SubstitutionModel& model, double energy, double eta_floor,
                                 const SolveOptions& opts) {
    if (!(eta_floor > 0.0)) throw OutOfRange("solve_gamma_boundary: eta_floor must be positive");
    SolveOptions step = opts;
    GreenVector cur;
    double eta = 1.0;
    for (;;) {
        eta = std::max(eta, eta_floor);
        cur = solve_gamma(model, cdouble(energy, eta), step);
        step.initial = cur.values;
        if (eta <= eta_floor) break;
        eta *= 0.5;
    }
    return cur;
}

BandScan scan_bands(const SubstitutionModel& model, double grid_step, double eta_floor,
                    double im_threshold) {
    if (!(grid_step > 0.0)) throw OutOfRange("scan_bands: grid_step must be positive");

    double vmax = 0.0;
    for (double v : model.v_per) vmax = std::max(vmax, std::abs(v));
    const double bound = static_cast<double>(model.max_row_sum()) + 1.0 + vmax;

    const int npts = static_cast<int>(std::floor(2.0 * bound / grid_step)) + 1;
    BandScan scan;
    scan.rows.assign(static_cast<std::size_t>(npts), BandScanRow{});

    auto im_at = [&](double energy) {
        const GreenVector g = solve_gamma_boundary(model, energy, eta_floor);
        std::vector<double> im(g.values.size());
        for (std::size_t k = 0; k < g.values.size(); ++k) im[k] = g.values[k].imag();
        return im;
    };
    auto in_band_ims = [&](const std::vector<double>& im) {
        double mn = im[0];
        for (double v : im) mn = std::min(mn, v);
        return mn > im_threshold;
    };

    parallel_for(static_cast<std::size_t>(npts), [&](std::size_t i) {
        const double e = -bound + static_cast<double>(i) * grid_step;
        scan.rows[i].energy = e;
        scan.rows[i].im_gamma = im_at(e);
    });

    auto in_band = [&](double energy) { return in_band_ims(im_at(energy)); };
    auto refine = [&](double lo, double hi, bool lo_in) {
        // Bisect the in-band indicator down to grid_step / 100.
        while (hi - lo > grid_step / 100.0) {
            const double mid = 0.5 * (lo + hi);
            if (in_band(mid) == lo_in)
                lo = mid;
            else
                hi = mid;
        }
        return 0.5 * (lo + hi);
    };

    SpectralBands bands;
    bands.eta_floor = eta_floor;
    bands.im_threshold = im_threshold;
    int i = 0;
    while (i < npts) {
        if (!in_band_ims(scan.rows[static_cast<std::size_t>(i)].im_gamma)) {
            ++i;
            continue;
        }
        int j = i;
        while (j + 1 < npts && in_band_ims(scan.rows[static_cast<std::size_t>(j + 1)].im_gamma)) ++j;
        const double e_first = scan.rows[static_cast<std::size_t>(i)].energy;
        const double e_last = scan.rows[static_cast<std::size_t>(j)].energy;
        const double a = (i == 0) ? e_first : refine(e_first - grid_step, e_first, false);
        const double b = (j == npts - 1) ? e_last : refine(e_last, e_last + grid_step, true);
        bands.intervals.emplace_back(a, b);
        i = j + 1;
    }
    scan.bands = std::move(bands);
    return scan;
}

SpectralBands detect_bands(const SubstitutionModel& model, double grid_step, double eta_floor,
                           double im_threshold) {
    return scan_bands(model, grid_step, eta_floor, im_threshold).bands;
}

std::vector<double> sphere_weights(const CherrySphere& sphere, const GreenVector& gamma) {
    for (const auto& v : gamma.values)
        if (!(v.imag() > 0.0)) throw Degenerate("sphere_weights: nonpositive Im Gamma");

    const auto im = [&](int label) { return gamma.values[static_cast<std::size_t>(label)].imag(); };

    double outer_sum = im(sphere.o_prime_label);  // o' belongs to the o-sphere
    for (int i = 0; i < sphere.outer_count; ++i) outer_sum += im(sphere.slots[static_cast<std::size_t>(i)].label);
    double inner_sum = 0.0;
    for (int i = sphere.outer_count; i < sphere.size(); ++i) inner_sum += im(sphere.slots[static_cast<std::size_t>(i)].label);

    std::vector<double> p(static_cast<std::size_t>(sphere.size()));
    const double q_o_prime = im(sphere.o_prime_label) / outer_sum;
    for (int i = 0; i < sphere.size(); ++i) {
        const double gi = im(sphere.slots[static_cast<std::size_t>(i)].label);
        p[static_cast<std::size_t>(i)] =
            (i < sphere.outer_count) ? gi / outer_sum : q_o_prime * gi / inner_sum;
    }
    return p;
}

PMatrix build_p_matrix(const SubstitutionModel& model, const GreenVector& gamma) {
    PMatrix pm;
    pm.n = model.alphabet_size;
    pm.entries.assign(static_cast<std::size_t>(pm.n) * pm.n, 0.0);
    for (int j = 0; j < pm.n; ++j) {
        const CherrySphere sphere = cherry_sphere(model, j);
        const std::vector<double> p = sphere_weights(sphere, gamma);
        for (int i = 0; i < sphere.size(); ++i)
            pm.entries[static_cast<std::size_t>(j) * pm.n + sphere.slots[static_cast<std::size_t>(i)].label] +=
                p[static_cast<std::size_t>(i)];
    }

    // Left fixed vector by power iteration on (P^T + I)/2; the shift keeps the
    // iteration convergent for any irreducible stochastic P.
    std::vector<double> u(static_cast<std::size_t>(pm.n), 1.0 / pm.n);
    for (int it = 0; it < 200000; ++it) {
        std::vector<double> next(static_cast<std::size_t>(pm.n), 0.0);
        for (int j = 0; j < pm.n; ++j)
            for (int k = 0; k < pm.n; ++k) next[static_cast<std::size_t>(k)] += pm.at(j, k) * u[static_cast<std::size_t>(j)];
        double sum = 0.0;
        for (int k = 0; k < pm.n; ++k) {
            next[static_cast<std::size_t>(k)] = 0.5 * (next[static_cast<std::size_t>(k)] + u[static_cast<std::size_t>(k)]);
            sum += next[static_cast<std::size_t>(k)];
        }
        double diff = 0.0;
        for (int k = 0; k < pm.n; ++k) {
            next[static_cast<std::size_t>(k)] /= sum;
            diff = std::max(diff, std::abs(next[static_cast<std::size_t>(k)] - u[static_cast<std::size_t>(k)]));
        }
        u.swap(next);
        if (diff < 1e-15) break;
    }
    pm.left_eigenvector = std::move(u);
    return pm;
}

cdouble full_green_at_root(const SubstitutionModel& model, const GreenVector& gamma) {
    return gamma.values[static_cast<std::size_t>(model.root_label)];
}

cdouble reroot_green(const SubstitutionModel& model, const LabeledTree& tree, int x0,
                     const GreenVector& gamma) {
    if (x0 < 0 || x0 >= tree.size()) throw OutOfRange("reroot_green: vertex out of range");

    // Path from x0 up to the old root; each path vertex needs its stored
    // children so the off-path siblings can be read off.
    std::vector<int> path;
    for (int v = x0; v != -1; v = tree.vertices[static_cast<std::size_t>(v)].parent) path.push_back(v);
    for (int v : path)
        if (tree.vertices[static_cast<std::size_t>(v)].children.empty())
            throw InsufficientDepth("reroot_green: path vertex " + std::to_string(v) +
                                    " has no stored children");

    const cdouble z = gamma.z;
    auto label_value = [&](int id) { return gamma.values[static_cast<std::size_t>(tree.label_of(id))]; };

    // Walk inward from the old root: the forward tree of each path vertex with
    // respect to x0 consists of its off-path children (unperturbed values) and
    // the previously resolved vertex above it.
    cdouble carried = 0.0;
    bool have_carried = false;
    for (std::size_t i = path.size(); i-- > 1;) {
        const int v = path[i];
        const int toward_x0 = path[i - 1];
        cdouble sum = z - model.v_per[static_cast<std::size_t>(tree.label_of(v))];
        for (int c : tree.vertices[static_cast<std::size_t>(v)].children)
            if (c != toward_x0) sum += label_value(c);
        if (have_carried) sum += carried;
        carried = -1.0 / sum;
        have_carried = true;
    }

    cdouble sum = z - model.v_per[static_cast<std::size_t>(tree.label_of(x0))];
    for (int c : tree.vertices[static_cast<std::size_t>(x0)].children) sum += label_value(c);
    if (have_carried) sum += carried;
    return -1.0 / sum;
}

}  // namespace conespectra
