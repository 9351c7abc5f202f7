#include "conespectra/contraction.hpp"

#include <algorithm>
#include <cmath>

#include "conespectra/errors.hpp"
#include "conespectra/hyperbolic.hpp"

namespace conespectra {

namespace {

struct Member {
    cdouble value;
    cdouble ref;
};

double member_gamma(const Member& m) { return gamma_metric(m.value, m.ref); }

bool degenerate(const Member& m) { return m.value == m.ref; }

double pair_Q(const Member& x, const Member& y) {
    if (degenerate(x) || degenerate(y)) return 0.0;
    const double gx = member_gamma(x);
    const double gy = member_gamma(y);
    const double num = std::abs(x.value - x.ref) * std::abs(y.value - y.ref);
    const double den = 0.5 * (x.value.imag() * y.ref.imag() * gy + y.value.imag() * x.ref.imag() * gx);
    if (den <= 0.0) return 0.0;
    return num / den;
}

double pair_cos_alpha(const Member& x, const Member& y) {
    if (degenerate(x) || degenerate(y)) return 0.0;
    const cdouble dx = x.value - x.ref;
    const cdouble dy = y.value - y.ref;
    const double n = std::abs(dx) * std::abs(dy);
    if (n == 0.0) return 0.0;
    return std::clamp((dx.real() * dy.real() + dx.imag() * dy.imag()) / n, -1.0, 1.0);
}

std::vector<double> member_q(const std::vector<Member>& members) {
    double sum = 0.0;
    for (const auto& m : members) sum += m.value.imag();
    std::vector<double> q(members.size());
    for (std::size_t i = 0; i < members.size(); ++i) q[i] = members[i].value.imag() / sum;
    return q;
}

double member_c(const std::vector<Member>& members, const std::vector<double>& q, std::size_t x) {
    double c = 0.0;
    for (std::size_t y = 0; y < members.size(); ++y)
        c += q[y] * pair_Q(members[x], members[y]) * pair_cos_alpha(members[x], members[y]);
    return std::clamp(c, -1.0, 1.0);
}

// Members of the o-level: the outer slots plus the aggregated o' value
// (1 + vartheta) g_o', which is exactly what enters the map to g_o.
std::vector<Member> o_level_members(const SphereState& s, cdouble g_o_prime) {
    std::vector<Member> members;
    members.reserve(static_cast<std::size_t>(s.sphere.outer_count) + 1);
    for (int i = 0; i < s.sphere.outer_count; ++i)
        members.push_back(Member{s.g[static_cast<std::size_t>(i)], s.ref_slot(i)});
    members.push_back(Member{(1.0 + s.vartheta) * g_o_prime, s.ref_o_prime()});
    return members;
}

std::vector<Member> inner_members(const SphereState& s) {
    std::vector<Member> members;
    members.reserve(static_cast<std::size_t>(s.sphere.inner_count()));
    for (int i = s.sphere.outer_count; i < s.sphere.size(); ++i)
        members.push_back(Member{s.g[static_cast<std::size_t>(i)], s.ref_slot(i)});
    return members;
}

cdouble aggregate_o_prime(const SphereState& s) {
    cdouble sum = s.z - s.v_o_prime - s.w_prime;
    for (int i = s.sphere.outer_count; i < s.sphere.size(); ++i) sum += s.g[static_cast<std::size_t>(i)];
    return -1.0 / sum;
}

}  // namespace

SphereState make_sphere_state(const SubstitutionModel& model, const CherrySphere& sphere,
                              const GreenVector& reference, std::vector<cdouble> g, double w,
                              double w_prime, double vartheta) {
    SphereState s;
    s.sphere = sphere;
    s.z = reference.z;
    s.g = std::move(g);
    s.w = w;
    s.w_prime = w_prime;
    s.vartheta = vartheta;
    s.reference = reference;
    s.v_o = model.v_per[static_cast<std::size_t>(sphere.o_label)];
    s.v_o_prime = model.v_per[static_cast<std::size_t>(sphere.o_prime_label)];
    return s;
}

std::pair<cdouble, cdouble> propagate(const SphereState& s) {
    const cdouble g_op = aggregate_o_prime(s);
    cdouble sum = s.z - s.v_o - s.w + (1.0 + s.vartheta) * g_op;
    for (int i = 0; i < s.sphere.outer_count; ++i) sum += s.g[static_cast<std::size_t>(i)];
    return {g_op, -1.0 / sum};
}

std::vector<double> weights_q(const SphereState& s, SphereHalf half) {
    if (half == SphereHalf::Inner) return member_q(inner_members(s));
    return member_q(o_level_members(s, aggregate_o_prime(s)));
}

double ratio_Q(const SphereState& s, int x, int y) {
    const auto& sx = s.sphere.slots[static_cast<std::size_t>(x)];
    const auto& sy = s.sphere.slots[static_cast<std::size_t>(y)];
    if (sx.half != sy.half) throw OutOfRange("ratio_Q: slots from different halves");
    return pair_Q(Member{s.g[static_cast<std::size_t>(x)], s.ref_slot(x)},
                  Member{s.g[static_cast<std::size_t>(y)], s.ref_slot(y)});
}

double cos_alpha(const SphereState& s, int x, int y) {
    const auto& sx = s.sphere.slots[static_cast<std::size_t>(x)];
    const auto& sy = s.sphere.slots[static_cast<std::size_t>(y)];
    if (sx.half != sy.half) throw OutOfRange("cos_alpha: slots from different halves");
    return pair_cos_alpha(Member{s.g[static_cast<std::size_t>(x)], s.ref_slot(x)},
                          Member{s.g[static_cast<std::size_t>(y)], s.ref_slot(y)});
}

std::vector<double> contraction_c(const SphereState& s) {
    const cdouble g_op = aggregate_o_prime(s);
    const std::vector<Member> outer = o_level_members(s, g_op);
    const std::vector<double> q_outer = member_q(outer);
    const std::vector<Member> inner = inner_members(s);
    const std::vector<double> q_inner = member_q(inner);

    // Level factor of the aggregated o' member against the o-sphere.
    const double c_agg = member_c(outer, q_outer, outer.size() - 1);
    const double c_agg_pos = std::max(c_agg, 0.0);

    std::vector<double> c(static_cast<std::size_t>(s.sphere.size()));
    for (int i = 0; i < s.sphere.outer_count; ++i)
        c[static_cast<std::size_t>(i)] = member_c(outer, q_outer, static_cast<std::size_t>(i));
    for (int i = s.sphere.outer_count; i < s.sphere.size(); ++i)
        c[static_cast<std::size_t>(i)] =
            c_agg_pos * member_c(inner, q_inner, static_cast<std::size_t>(i - s.sphere.outer_count));
    return c;
}

std::vector<double> weights_p(const GreenVector& reference, const CherrySphere& sphere) {
    return sphere_weights(sphere, reference);
}

double slot_gamma(const SphereState& s, int i) {
    return gamma_metric(s.g[static_cast<std::size_t>(i)], s.ref_slot(i));
}

std::vector<double> slot_gammas(const SphereState& s) {
    std::vector<double> g(static_cast<std::size_t>(s.sphere.size()));
    for (int i = 0; i < s.sphere.size(); ++i) g[static_cast<std::size_t>(i)] = slot_gamma(s, i);
    return g;
}

double weighted_contraction_sum(const SphereState& s) {
    const std::vector<double> p = weights_p(s.reference, s.sphere);
    const std::vector<double> c = contraction_c(s);
    double sum = 0.0;
    for (int i = 0; i < s.sphere.size(); ++i)
        sum += p[static_cast<std::size_t>(i)] * c[static_cast<std::size_t>(i)] * slot_gamma(s, i);
    return std::max(sum, 0.0);
}

KappaReport kappa_report(const SphereState& s, double p_exp,
                         const std::vector<LabelPermutation>& permutations) {
    const std::vector<double> p = weights_p(s.reference, s.sphere);

    KappaReport rep;
    SphereState permuted = s;
    for (const auto& perm : permutations) {
        for (int i = 0; i < s.sphere.size(); ++i)
            permuted.g[static_cast<std::size_t>(i)] =
                s.g[static_cast<std::size_t>(perm.mapping[static_cast<std::size_t>(i)])];
        const std::vector<double> c = contraction_c(permuted);
        double swc = 0.0, sden = 0.0, sden_c = 0.0;
        for (int i = 0; i < s.sphere.size(); ++i) {
            const double gi = slot_gamma(permuted, i);
            const double gp = std::pow(gi, p_exp);
            swc += p[static_cast<std::size_t>(i)] * c[static_cast<std::size_t>(i)] * gi;
            sden += p[static_cast<std::size_t>(i)] * gp;
            sden_c += p[static_cast<std::size_t>(i)] * c[static_cast<std::size_t>(i)] * gp;
        }
        rep.numerator += std::pow(std::max(swc, 0.0), p_exp);
        rep.denominator += sden;
        rep.denominator_c += sden_c;
    }
    rep.kappa = rep.denominator > 0.0 ? rep.numerator / rep.denominator : 0.0;
    rep.kappa_cden = rep.denominator_c != 0.0 ? rep.numerator / rep.denominator_c : 0.0;
    return rep;
}

double kappa(const SphereState& s, double p_exp, const std::vector<LabelPermutation>& permutations) {
    return kappa_report(s, p_exp, permutations).kappa;
}

TwoStepReport two_step_check(const SphereState& s, double lam) {
    TwoStepReport rep;

    const auto [g_op, g_o] = propagate(s);
    (void)g_op;
    rep.lhs = gamma_metric(g_o, s.ref_o());

    const std::vector<double> p = weights_p(s.reference, s.sphere);
    const std::vector<double> c = contraction_c(s);
    double gamma_abs = 0.0;
    for (int i = 0; i < s.sphere.size(); ++i) {
        const double term = p[static_cast<std::size_t>(i)] * c[static_cast<std::size_t>(i)] * slot_gamma(s, i);
        if (i < s.sphere.outer_count)
            rep.outer_sum += term;
        else
            rep.inner_sum += term;
        gamma_abs += p[static_cast<std::size_t>(i)] * slot_gamma(s, i);
    }

    // Perturbation constants. w shifts the o-level sum (reference imaginary
    // part Im H over the o-sphere); vartheta scales the aggregate against the
    // fixed o' reference; w' shifts the inner sum.
    double im_h = s.ref_o_prime().imag();
    for (int i = 0; i < s.sphere.outer_count; ++i) im_h += s.ref_slot(i).imag();
    double im_inner = 0.0;
    for (int i = s.sphere.outer_count; i < s.sphere.size(); ++i) im_inner += s.ref_slot(i).imag();

    const double c_w = std::pow(1.0 + 2.0 * lam / im_h, 2.0) - 1.0;
    const double abs_op = std::abs(s.ref_o_prime());
    const double c_th =
        (1.0 + lam) * std::pow(1.0 + 4.0 * lam * abs_op / s.ref_o_prime().imag(), 2.0) - 1.0;
    const double c_wp = std::pow(1.0 + 2.0 * lam / im_inner, 2.0) - 1.0;

    rep.c_outer = c_w;
    rep.c_inner = (1.0 + c_w) * (1.0 + c_th) * (1.0 + c_wp) - 1.0;
    rep.c_additive = (1.0 + c_w) * (c_th + (1.0 + c_th) * c_wp) + c_w;

    rep.rhs = (1.0 + rep.c_outer) * rep.outer_sum + (1.0 + rep.c_inner) * rep.inner_sum +
              rep.c_additive;
    const double guard = 1e-9 * (1.0 + gamma_abs) + 1e-12;
    rep.holds = rep.lhs <= rep.rhs + guard;
    return rep;
}

OneStepReport one_step_check(cdouble z, const std::vector<cdouble>& values,
                             const std::vector<cdouble>& refs) {
    OneStepReport rep;
    cdouble sum_v = z;
    cdouble sum_r = z;
    for (std::size_t i = 0; i < values.size(); ++i) {
        sum_v += values[i];
        sum_r += refs[i];
    }
    rep.lhs = gamma_metric(-1.0 / sum_v, -1.0 / sum_r);

    std::vector<Member> members(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) members[i] = Member{values[i], refs[i]};
    const std::vector<double> q = member_q(members);
    double ref_sum = 0.0;
    for (const auto& m : members) ref_sum += m.ref.imag();
    double rhs = 0.0;
    double scale = 0.0;
    for (std::size_t x = 0; x < members.size(); ++x) {
        const double cx = member_c(members, q, x);
        const double gx = member_gamma(members[x]);
        rhs += members[x].ref.imag() / ref_sum * cx * gx;
        scale += members[x].ref.imag() / ref_sum * gx;
    }
    rep.rhs = rhs;
    rep.holds = rep.lhs <= rep.rhs + 1e-9 * (1.0 + scale) + 1e-12;
    return rep;
}

VisibilityReport visibility(const SphereState& s, double eps) {
    VisibilityReport rep;

    const std::vector<double> gammas = slot_gammas(s);
    const double gmax = *std::max_element(gammas.begin(), gammas.end());
    for (int i = 0; i < s.sphere.size(); ++i)
        if (gammas[static_cast<std::size_t>(i)] > eps * gmax) rep.vis_gamma.push_back(i);

    const std::vector<Member> outer = o_level_members(s, aggregate_o_prime(s));
    double im_max = 0.0;
    for (const auto& m : outer) im_max = std::max(im_max, m.value.imag());
    for (std::size_t i = 0; i < outer.size(); ++i)
        if (outer[i].value.imag() > eps * im_max) rep.vis_im_outer.push_back(static_cast<int>(i));

    const std::vector<Member> inner = inner_members(s);
    im_max = 0.0;
    for (const auto& m : inner) im_max = std::max(im_max, m.value.imag());
    for (std::size_t i = 0; i < inner.size(); ++i)
        if (inner[i].value.imag() > eps * im_max) rep.vis_im_inner.push_back(static_cast<int>(i));

    return rep;
}

ConstantsResult interval_constants(const SubstitutionModel& model, double e_min, double e_max,
                                   double p_exp, const ConstantsOptions& opts) {
    if (!(e_min <= e_max)) throw OutOfRange("interval_constants: empty interval");

    const SpectralBands bands =
        detect_bands(model, opts.band_grid_step, opts.band_eta_floor, opts.band_im_threshold);
    const double margin = 2.0 * opts.band_grid_step;
    bool inside = false;
    for (const auto& [a, b] : bands.intervals)
        if (a + margin <= e_min && e_max <= b - margin) inside = true;
    if (!inside)
        throw DegenerateInterval("interval_constants: interval not strictly inside a band");

    std::vector<CherrySphere> spheres;
    for (int j = 0; j < model.alphabet_size; ++j) spheres.push_back(cherry_sphere(model, j));

    ConstantsResult result;
    IntervalConstants& c = result.constants;
    c.eps0 = 1e300;
    c.eps1 = 1e300;
    c.delta0 = 1e300;
    double c1_inv = 0.0;
    c.c2 = 1e300;

    const double pi = 3.14159265358979323846;
    for (int ie = 0; ie < opts.energy_points; ++ie) {
        const double e = (opts.energy_points == 1)
                             ? 0.5 * (e_min + e_max)
                             : e_min + (e_max - e_min) * static_cast<double>(ie) /
                                   static_cast<double>(opts.energy_points - 1);
        SolveOptions sopts;
        sopts.initial.reset();
        double eta = 1.0;
        for (int le = 0; le < opts.eta_levels; ++le) {
            const GreenVector gamma = solve_gamma(model, cdouble(e, eta), sopts);
            sopts.initial = gamma.values;
            result.grid.push_back(gamma);

            for (const auto& sphere : spheres) {
                double im_min = 1e300, im_max = 0.0;
                auto touch = [&](int label) {
                    const cdouble v = gamma.values[static_cast<std::size_t>(label)];
                    im_min = std::min(im_min, v.imag());
                    im_max = std::max(im_max, v.imag());
                    const double a = std::arg(v);  // in (0, pi) for the upper half plane
                    c.delta0 = std::min(c.delta0, 0.25 * std::min(a, pi - a));
                };
                for (const auto& slot : sphere.slots) touch(slot.label);
                c.eps0 = std::min(c.eps0, im_min / im_max);
                c.eps1 = std::min(c.eps1, im_min);

                const std::vector<double> p = sphere_weights(sphere, gamma);
                double pmin = 1e300, pmax_one_minus = 0.0;
                for (double px : p) {
                    pmin = std::min(pmin, px);
                    pmax_one_minus = std::max(pmax_one_minus, 1.0 - px);
                    const double branch =
                        std::min(0.5 * p_exp * (p_exp - 1.0) * px,
                                 1.0 - std::pow(1.0 - px, p_exp - 1.0));
                    c.c2 = std::min(c.c2, (1.0 - px) * branch);
                }
                c1_inv = std::max(c1_inv, pmax_one_minus / pmin);
            }
            eta *= 0.5;
        }
    }
    c.c1 = 1.0 / c1_inv;
    c.lambda0 = c.eps1 * c.delta0 / (1.0 + c.delta0);
    return result;
}

double contraction_ball_radius(const IntervalConstants& c, double lam) {
    const double s = (1.0 + c.delta0) / c.delta0 * lam;
    return eta1_inverse(s, c.eps1);
}

SphereState random_sphere_state(const SubstitutionModel& model, const CherrySphere& sphere,
                                const GreenVector& reference, Rng& rng, double lam, double r_min,
                                double r_max) {
    std::vector<cdouble> g(static_cast<std::size_t>(sphere.size()));
    for (int i = 0; i < sphere.size(); ++i) {
        const cdouble ref = reference.values[static_cast<std::size_t>(sphere.slots[static_cast<std::size_t>(i)].label)];
        for (;;) {
            const double r = r_min * std::pow(r_max / r_min, rng.u01());
            const double phi = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
            const cdouble cand = ref + r * cdouble(std::cos(phi), std::sin(phi));
            if (cand.imag() > 0.0) {
                g[static_cast<std::size_t>(i)] = cand;
                break;
            }
        }
    }
    const double w = lam > 0.0 ? rng.uniform(-lam, lam) : 0.0;
    const double wp = lam > 0.0 ? rng.uniform(-lam, lam) : 0.0;
    const double th = lam > 0.0 ? rng.uniform(-lam, lam) : 0.0;
    return make_sphere_state(model, sphere, reference, std::move(g), w, wp, th);
}

}  // namespace conespectra
