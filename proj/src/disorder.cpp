#include "conespectra/disorder.hpp"

#include <algorithm>
#include <cmath>

#include "conespectra/errors.hpp"
#include "conespectra/rng.hpp"

namespace conespectra {

namespace {

double draw_law(const Law& law, Rng& rng) {
    switch (law.kind) {
        case LawKind::Uniform:
            return law.width * (2.0 * rng.u01() - 1.0);
        case LawKind::TwoPoint:
            return rng.coin() ? law.width : -law.width;
        case LawKind::TruncatedNormal: {
            for (int attempt = 0; attempt < 1000; ++attempt) {
                const double x = law.sigma * rng.normal();
                if (std::abs(x) < 1.0) return x;
            }
            return 0.0;  // sigma so large that everything landed outside; degenerate but bounded
        }
    }
    return 0.0;
}

const Law& law_for(const DisorderSpec& spec, int vertex, int label) {
    const auto it = spec.vertex_law_overrides.find(vertex);
    if (it != spec.vertex_law_overrides.end()) return it->second;
    return spec.per_label[static_cast<std::size_t>(label)];
}

void validate_law_widths(const DisorderSpec& spec) {
    for (const auto& law : spec.per_label) {
        const double bound = (law.kind == LawKind::TruncatedNormal) ? 1.0 : law.width;
        if (law.kind != LawKind::TruncatedNormal && !(bound < 1.0))
            throw SupportViolation("disorder law must be supported inside (-1, 1)");
    }
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = a.size();
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) ma += a[i], mb += b[i];
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double saa = 0.0, sbb = 0.0, sab = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
        sab += (a[i] - ma) * (b[i] - mb);
    }
    if (saa <= 0.0 || sbb <= 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

}  // namespace

double ks_statistic(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        if (a[i] <= b[j])
            ++i;
        else
            ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

DisorderRealization sample(const DisorderSpec& spec, const LabeledTree& tree, std::uint64_t seed) {
    if (tree.size() == 0) throw OutOfRange("sample: empty tree");
    if (static_cast<int>(spec.per_label.size()) == 0)
        throw SpecModelMismatch("sample: spec has no per-label laws");
    validate_law_widths(spec);

    DisorderRealization real;
    real.tree = &tree;
    real.v.assign(static_cast<std::size_t>(tree.size()), 0.0);
    real.theta.assign(static_cast<std::size_t>(tree.size()), 0.0);

    const Rng base(seed);
    auto vertex_rng = [&](int id) { return base.fork(static_cast<std::uint64_t>(id)); };

    switch (spec.mode) {
        case DisorderMode::IidPotential:
        case DisorderMode::IidHopping:
        case DisorderMode::IidBoth: {
            for (int id = 0; id < tree.size(); ++id) {
                Rng r = vertex_rng(id);
                const Law& law = law_for(spec, id, tree.label_of(id));
                if (spec.mode != DisorderMode::IidHopping) real.v[static_cast<std::size_t>(id)] = draw_law(law, r);
                if (spec.mode != DisorderMode::IidPotential)
                    real.theta[static_cast<std::size_t>(id)] = draw_law(law, r);
            }
            break;
        }
        case DisorderMode::CorrelatedDecay: {
            // k = maximal number of forward neighbors in the tree.
            long long kmax = 1;
            for (const auto& vert : tree.vertices)
                kmax = std::max<long long>(kmax, static_cast<long long>(vert.children.size()));
            const double k = static_cast<double>(kmax);

            // Worst-case value of the recursion is width * (depth + 1) / k.
            for (const auto& law : spec.per_label) {
                const double b = (law.kind == LawKind::TruncatedNormal) ? 1.0 : law.width;
                if (!(b * (static_cast<double>(tree.depth) + 1.0) / k < 1.0))
                    throw SupportViolation(
                        "sample: decay law too wide for this depth, values may leave (-1, 1)");
            }

            std::vector<double> w(static_cast<std::size_t>(tree.size()));
            for (int id = 0; id < tree.size(); ++id) {
                Rng r = vertex_rng(id);
                w[static_cast<std::size_t>(id)] = draw_law(law_for(spec, id, tree.label_of(id)), r);
            }
            // Bottom-up: ids are breadth-first, so children come after parents.
            for (int id = tree.size() - 1; id >= 0; --id) {
                double acc = w[static_cast<std::size_t>(id)];
                for (int c : tree.vertices[static_cast<std::size_t>(id)].children)
                    acc += real.v[static_cast<std::size_t>(c)];
                real.v[static_cast<std::size_t>(id)] = acc / k;
            }
            break;
        }
        case DisorderMode::EdgeWeightLaplacian: {
            for (int id = 0; id < tree.size(); ++id) {
                Rng r = vertex_rng(id);
                real.theta[static_cast<std::size_t>(id)] = draw_law(law_for(spec, id, tree.label_of(id)), r);
            }
            for (int id = 0; id < tree.size(); ++id) {
                double v = real.theta[static_cast<std::size_t>(id)];
                for (int c : tree.vertices[static_cast<std::size_t>(id)].children)
                    v += real.theta[static_cast<std::size_t>(c)];
                real.v[static_cast<std::size_t>(id)] = v;
            }
            break;
        }
    }

    for (std::size_t id = 0; id < real.v.size(); ++id)
        if (std::abs(real.v[id]) >= 1.0 || std::abs(real.theta[id]) >= 1.0)
            throw SupportViolation("sample: disorder value left (-1, 1) at vertex " +
                                   std::to_string(id));
    return real;
}

StatReport check_p1_p2(const DisorderSpec& spec, const SubstitutionModel& model, int n_trials,
                       std::uint64_t seed) {
    if (n_trials < 1000) throw OutOfRange("check_p1_p2: need at least 1000 trials");
    validate_disorder(spec, model);

    const LabeledTree tree = grow_tree(model, model.root_label, 3);

    // Same-label pair with disjoint forward trees: neither is an ancestor of
    // the other.
    auto is_ancestor = [&](int a, int b) {
        for (int v = b; v != -1; v = tree.vertices[static_cast<std::size_t>(v)].parent)
            if (v == a) return true;
        return false;
    };
    int pa = -1, pb = -1;
    for (int a = 0; a < tree.size() && pa < 0; ++a)
        for (int b = a + 1; b < tree.size(); ++b)
            if (tree.label_of(a) == tree.label_of(b) && !is_ancestor(a, b) && !is_ancestor(b, a)) {
                pa = a;
                pb = b;
                break;
            }
    if (pa < 0) throw Degenerate("check_p1_p2: no disjoint same-label pair at depth 3");

    // Ancestor/descendant pair for the decay-mode correlation probe.
    int anc = tree.root;
    int desc = tree.vertices[static_cast<std::size_t>(tree.root)].children.empty()
                   ? tree.root
                   : tree.vertices[static_cast<std::size_t>(tree.root)].children.front();

    std::vector<double> va, vb, ta, tb, vanc, vdesc;
    va.reserve(static_cast<std::size_t>(n_trials));
    const Rng base(seed);
    for (int t = 0; t < n_trials; ++t) {
        Rng f = base.fork(static_cast<std::uint64_t>(t));
        const std::uint64_t trial_seed = f.next_u64();
        const DisorderRealization real = sample(spec, tree, trial_seed);
        va.push_back(real.v[static_cast<std::size_t>(pa)]);
        vb.push_back(real.v[static_cast<std::size_t>(pb)]);
        ta.push_back(real.theta[static_cast<std::size_t>(pa)]);
        tb.push_back(real.theta[static_cast<std::size_t>(pb)]);
        vanc.push_back(real.v[static_cast<std::size_t>(anc)]);
        vdesc.push_back(real.v[static_cast<std::size_t>(desc)]);
    }

    StatReport rep;
    rep.pair_a = pa;
    rep.pair_b = pb;
    const double n = static_cast<double>(n_trials);
    rep.ks_critical = 1.628 * std::sqrt(2.0 / n);  // two-sample, significance 0.01
    rep.ks_stat_v = ks_statistic(va, vb);
    rep.ks_stat_theta = ks_statistic(ta, tb);
    rep.correlation_threshold = 3.0 / std::sqrt(n);
    rep.cross_correlation = pearson(va, vb);
    rep.ancestor_correlation = pearson(vanc, vdesc);

    rep.p2_pass = rep.ks_stat_v <= rep.ks_critical && rep.ks_stat_theta <= rep.ks_critical;
    // Disjoint forward trees are independent in every supported mode, so the
    // same correlation bound applies.
    rep.p1_pass = std::abs(rep.cross_correlation) <= rep.correlation_threshold;
    return rep;
}

void validate_disorder(const DisorderSpec& spec, const SubstitutionModel& model) {
    if (static_cast<int>(spec.per_label.size()) != model.alphabet_size)
        throw SpecModelMismatch("disorder spec has " + std::to_string(spec.per_label.size()) +
                                " laws for " + std::to_string(model.alphabet_size) + " labels");
    if (spec.mode == DisorderMode::EdgeWeightLaplacian) {
        for (int k = 0; k < model.alphabet_size; ++k) {
            const double want = -(static_cast<double>(model.row_sum(k)) + 1.0);
            if (model.v_per[static_cast<std::size_t>(k)] != want)
                throw SpecModelMismatch(
                    "edge-weight Laplacian requires v_per = -(degree); label " + std::to_string(k) +
                    " wants " + std::to_string(want));
        }
        double wsum_bound = 0.0;
        for (const auto& law : spec.per_label)
            wsum_bound = std::max(wsum_bound, law.kind == LawKind::TruncatedNormal ? 1.0 : law.width);
        if (!((1.0 + static_cast<double>(model.max_row_sum())) * wsum_bound < 1.0))
            throw SupportViolation("edge-weight law too wide: v = theta sums may leave (-1, 1)");
    }
}

}  // namespace conespectra
