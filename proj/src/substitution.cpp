#include "conespectra/substitution.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "conespectra/errors.hpp"

namespace conespectra {

namespace {

bool row_support_contained(const SubstitutionModel& model, int k, int kp) {
    for (int l = 0; l < model.alphabet_size; ++l)
        if (model.m(k, l) >= 1 && model.m(kp, l) < 1) return false;
    return true;
}

}  // namespace

ValidationReport validate(const SubstitutionModel& model) {
    const int n = model.alphabet_size;
    ValidationReport rep;

    rep.m0 = (n != 1) || (model.m(0, 0) >= 2);

    rep.m1 = true;
    for (int k = 0; k < n; ++k)
        if (model.m(k, k) < 1) rep.m1 = false;

    rep.m1star = true;
    for (int k = 0; k < n; ++k) {
        bool witness = false;
        for (int kp = 0; kp < n && !witness; ++kp)
            if (model.m(k, kp) >= 1 && row_support_contained(model, k, kp)) witness = true;
        if (!witness) rep.m1star = false;
    }

    // Irreducibility by boolean closure; a walk of length <= n suffices.
    std::vector<char> reach(static_cast<std::size_t>(n) * n, 0);
    std::vector<char> step(static_cast<std::size_t>(n) * n, 0);
    for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) step[static_cast<std::size_t>(k) * n + l] = model.m(k, l) >= 1;
    std::vector<char> cur = step;
    for (int len = 1; len <= n; ++len) {
        for (std::size_t i = 0; i < reach.size(); ++i) reach[i] |= cur[i];
        if (len == n) break;
        std::vector<char> nxt(static_cast<std::size_t>(n) * n, 0);
        for (int k = 0; k < n; ++k)
            for (int j = 0; j < n; ++j)
                if (cur[static_cast<std::size_t>(k) * n + j])
                    for (int l = 0; l < n; ++l)
                        if (step[static_cast<std::size_t>(j) * n + l])
                            nxt[static_cast<std::size_t>(k) * n + l] = 1;
        cur.swap(nxt);
    }
    rep.m2 = std::all_of(reach.begin(), reach.end(), [](char c) { return c != 0; });

    return rep;
}

int choose_o_prime(const SubstitutionModel& model, int k) {
    for (int kp = 0; kp < model.alphabet_size; ++kp)
        if (model.m(k, kp) >= 1 && row_support_contained(model, k, kp)) return kp;
    throw NoM1StarWitness("no forward label of " + std::to_string(k) +
                          " covers the row support of " + std::to_string(k));
}

LabeledTree grow_tree(const SubstitutionModel& model, int root_label, int depth,
                      long long vertex_cap) {
    if (depth < 0) throw OutOfRange("grow_tree: depth must be nonnegative");

    // Analytic count first so an oversized request fails before allocation.
    {
        std::vector<long long> level(static_cast<std::size_t>(model.alphabet_size), 0);
        level[static_cast<std::size_t>(root_label)] = 1;
        long long total = 1;
        for (int d = 0; d < depth; ++d) {
            std::vector<long long> next(static_cast<std::size_t>(model.alphabet_size), 0);
            for (int k = 0; k < model.alphabet_size; ++k)
                for (int l = 0; l < model.alphabet_size; ++l) {
                    next[static_cast<std::size_t>(l)] += level[static_cast<std::size_t>(k)] * model.m(k, l);
                    if (next[static_cast<std::size_t>(l)] > vertex_cap)
                        throw SizeLimit("grow_tree: vertex count exceeds cap");
                }
            total += std::accumulate(next.begin(), next.end(), 0ll);
            if (total > vertex_cap) throw SizeLimit("grow_tree: vertex count exceeds cap");
            level.swap(next);
        }
    }

    LabeledTree tree;
    tree.depth = depth;
    tree.root = 0;
    tree.vertices.push_back(TreeVertex{root_label, -1, {}});
    int level_begin = 0;
    int level_end = 1;
    for (int d = 0; d < depth; ++d) {
        for (int id = level_begin; id < level_end; ++id) {
            const int k = tree.vertices[static_cast<std::size_t>(id)].label;
            for (int l = 0; l < model.alphabet_size; ++l)
                for (long long c = 0; c < model.m(k, l); ++c) {
                    const int child = tree.size();
                    tree.vertices.push_back(TreeVertex{l, id, {}});
                    tree.vertices[static_cast<std::size_t>(id)].children.push_back(child);
                }
        }
        level_begin = level_end;
        level_end = tree.size();
    }
    return tree;
}

CherrySphere cherry_sphere(const SubstitutionModel& model, int k) {
    CherrySphere sphere;
    sphere.o_label = k;
    sphere.o_prime_label = choose_o_prime(model, k);

    // Outer half: the canonical children of o with one o'-labeled child removed.
    bool removed = false;
    for (int l = 0; l < model.alphabet_size; ++l)
        for (long long c = 0; c < model.m(k, l); ++c) {
            if (!removed && l == sphere.o_prime_label) {
                removed = true;
                continue;
            }
            sphere.slots.push_back(SphereSlot{l, SphereHalf::Outer});
        }
    sphere.outer_count = sphere.size();

    for (int l = 0; l < model.alphabet_size; ++l)
        for (long long c = 0; c < model.m(sphere.o_prime_label, l); ++c)
            sphere.slots.push_back(SphereSlot{l, SphereHalf::Inner});

    return sphere;
}

long long count_permutations(const CherrySphere& sphere) {
    std::map<int, long long> mult;
    for (const auto& s : sphere.slots) ++mult[s.label];
    long long count = 1;
    for (const auto& [label, m] : mult) {
        (void)label;
        for (long long i = 2; i <= m; ++i) count *= i;
    }
    return count;
}

std::vector<LabelPermutation> enumerate_permutations(const CherrySphere& sphere, long long cap) {
    if (count_permutations(sphere) > cap)
        throw PermutationLimit("enumerate_permutations: group order exceeds cap");

    // Slot indices grouped by label, each class permuted independently.
    std::map<int, std::vector<int>> classes;
    for (int i = 0; i < sphere.size(); ++i) classes[sphere.slots[static_cast<std::size_t>(i)].label].push_back(i);

    std::vector<std::vector<std::vector<int>>> class_perms;  // per class: list of orderings
    for (const auto& [label, slots] : classes) {
        (void)label;
        std::vector<std::vector<int>> perms;
        std::vector<int> p = slots;
        do {
            perms.push_back(p);
        } while (std::next_permutation(p.begin(), p.end()));
        class_perms.push_back(std::move(perms));
    }

    std::vector<LabelPermutation> result;
    std::vector<std::size_t> odo(class_perms.size(), 0);
    for (;;) {
        LabelPermutation perm;
        perm.mapping.assign(static_cast<std::size_t>(sphere.size()), -1);
        std::size_t ci = 0;
        for (const auto& [label, slots] : classes) {
            (void)label;
            const auto& chosen = class_perms[ci][odo[ci]];
            for (std::size_t j = 0; j < slots.size(); ++j)
                perm.mapping[static_cast<std::size_t>(slots[j])] = chosen[j];
            ++ci;
        }
        result.push_back(std::move(perm));

        std::size_t pos = 0;
        while (pos < odo.size()) {
            if (++odo[pos] < class_perms[pos].size()) break;
            odo[pos] = 0;
            ++pos;
        }
        if (pos == odo.size()) break;
    }
    return result;
}

}  // namespace conespectra
