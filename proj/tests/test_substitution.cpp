#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <map>
#include <set>

#include "conespectra/errors.hpp"
#include "conespectra/rng.hpp"
#include "conespectra/substitution.hpp"
#include "doctest.h"

using namespace conespectra;

namespace {

SubstitutionModel make_model(int n, std::vector<long long> m, std::vector<double> v = {},
                             int root = 0) {
    SubstitutionModel model;
    model.alphabet_size = n;
    model.matrix = std::move(m);
    model.v_per = v.empty() ? std::vector<double>(static_cast<std::size_t>(n), 0.0) : std::move(v);
    model.root_label = root;
    return model;
}

}  // namespace

TEST_CASE("validate: single label") {
    const auto rep2 = validate(make_model(1, {2}));
    CHECK(rep2.m0);
    CHECK(rep2.m1);
    CHECK(rep2.m1star);
    CHECK(rep2.m2);

    const auto rep1 = validate(make_model(1, {1}));
    CHECK_FALSE(rep1.m0);
}

TEST_CASE("validate: full two-label matrix") {
    const auto rep = validate(make_model(2, {1, 1, 1, 1}));
    CHECK(rep.m0);
    CHECK(rep.m1);
    CHECK(rep.m1star);
    CHECK(rep.m2);
}

TEST_CASE("validate: reducible matrix fails m2") {
    // Label 0 is unreachable from label 1.
    const auto rep = validate(make_model(2, {1, 1, 0, 2}));
    CHECK(rep.m1star);
    CHECK_FALSE(rep.m2);
}

TEST_CASE("validate: m1 implies m1star on random matrices") {
    Rng rng(7);
    for (int trial = 0; trial < 500; ++trial) {
        const int n = 1 + static_cast<int>(rng.next_u64() % 4);
        std::vector<long long> m(static_cast<std::size_t>(n) * n);
        for (auto& e : m) e = static_cast<long long>(rng.next_u64() % 3);
        for (int k = 0; k < n; ++k) m[static_cast<std::size_t>(k) * n + k] += 1;  // force m1
        const auto rep = validate(make_model(n, m));
        CHECK(rep.m1);
        CHECK(rep.m1star);
    }
}

TEST_CASE("choose_o_prime") {
    CHECK(choose_o_prime(make_model(1, {2}), 0) == 0);
    CHECK(choose_o_prime(make_model(2, {1, 1, 1, 1}), 0) == 0);
    // Row 1 support {1} does not cover row 0 support {0,1}, so 0 is forced.
    CHECK(choose_o_prime(make_model(2, {1, 1, 0, 2}), 0) == 0);
    // No witness: row 0 = {1}, row 1 = {0} and neither covers the other.
    CHECK_THROWS_AS(choose_o_prime(make_model(2, {0, 1, 1, 0}), 0), NoM1StarWitness);
}

TEST_CASE("grow_tree: vertex counts") {
    CHECK(grow_tree(make_model(1, {2}), 0, 3).size() == 15);
    CHECK(grow_tree(make_model(2, {1, 1, 1, 1}), 0, 2).size() == 7);
    CHECK(grow_tree(make_model(1, {3}), 0, 0).size() == 1);
    CHECK_THROWS_AS(grow_tree(make_model(1, {2}), 0, 3, 10), SizeLimit);
}

TEST_CASE("grow_tree: child recount reproduces the matrix") {
    const std::vector<SubstitutionModel> models = {
        make_model(1, {2}), make_model(1, {3}), make_model(2, {1, 1, 1, 1}),
        make_model(2, {2, 1, 1, 1}), make_model(3, {1, 1, 0, 0, 1, 1, 1, 0, 1})};
    for (const auto& model : models) {
        const LabeledTree tree = grow_tree(model, model.root_label, 5);
        for (const auto& vert : tree.vertices) {
            if (vert.children.empty()) continue;
            std::map<int, long long> counts;
            for (int c : vert.children) ++counts[tree.label_of(c)];
            for (int l = 0; l < model.alphabet_size; ++l)
                CHECK(counts[l] == model.m(vert.label, l));
        }
    }
}

TEST_CASE("cherry_sphere: shapes") {
    const CherrySphere one = cherry_sphere(make_model(1, {2}), 0);
    CHECK(one.outer_count == 1);
    CHECK(one.inner_count() == 2);
    CHECK(one.size() == 3);

    const CherrySphere two = cherry_sphere(make_model(2, {1, 1, 1, 1}), 0);
    CHECK(two.o_prime_label == 0);
    CHECK(two.outer_count == 1);
    CHECK(two.slots[0].label == 1);
    CHECK(two.inner_count() == 2);
    CHECK(two.slots[1].label == 0);
    CHECK(two.slots[2].label == 1);

    const CherrySphere three = cherry_sphere(make_model(1, {3}), 0);
    CHECK(three.size() == 5);
}

TEST_CASE("cherry_sphere: inner labels cover outer labels") {
    const std::vector<SubstitutionModel> models = {
        make_model(1, {2}), make_model(2, {1, 1, 1, 1}), make_model(2, {2, 1, 1, 1}),
        make_model(3, {1, 1, 0, 0, 1, 1, 1, 0, 1})};
    for (const auto& model : models)
        for (int k = 0; k < model.alphabet_size; ++k) {
            const CherrySphere sphere = cherry_sphere(model, k);
            std::set<int> inner;
            for (int i = sphere.outer_count; i < sphere.size(); ++i)
                inner.insert(sphere.slots[static_cast<std::size_t>(i)].label);
            // Every label among the o-children (including o' itself) appears inside.
            for (int l = 0; l < model.alphabet_size; ++l)
                if (model.m(k, l) >= 1) CHECK(inner.count(l) == 1);
        }
}

TEST_CASE("enumerate_permutations: counts and group laws") {
    const CherrySphere one = cherry_sphere(make_model(1, {2}), 0);  // labels {0,0,0}
    const auto perms1 = enumerate_permutations(one);
    CHECK(perms1.size() == 6);

    const CherrySphere two = cherry_sphere(make_model(2, {1, 1, 1, 1}), 0);  // labels {1,0,1}
    const auto perms2 = enumerate_permutations(two);
    CHECK(perms2.size() == 2);

    // Labels preserved, all bijections, closed under composition and inverse.
    for (const auto& sphere : {one, two}) {
        const auto perms = enumerate_permutations(sphere);
        std::set<std::vector<int>> as_set;
        for (const auto& p : perms) as_set.insert(p.mapping);
        CHECK(as_set.size() == perms.size());
        for (const auto& p : perms) {
            std::set<int> hit;
            for (int i = 0; i < sphere.size(); ++i) {
                const int j = p.mapping[static_cast<std::size_t>(i)];
                hit.insert(j);
                CHECK(sphere.slots[static_cast<std::size_t>(i)].label ==
                      sphere.slots[static_cast<std::size_t>(j)].label);
            }
            CHECK(static_cast<int>(hit.size()) == sphere.size());
            // inverse
            std::vector<int> inv(p.mapping.size());
            for (std::size_t i = 0; i < p.mapping.size(); ++i)
                inv[static_cast<std::size_t>(p.mapping[i])] = static_cast<int>(i);
            CHECK(as_set.count(inv) == 1);
        }
        for (const auto& p : perms)
            for (const auto& q : perms) {
                std::vector<int> comp(p.mapping.size());
                for (std::size_t i = 0; i < p.mapping.size(); ++i)
                    comp[i] = p.mapping[static_cast<std::size_t>(q.mapping[i])];
                CHECK(as_set.count(comp) == 1);
            }
    }
}

TEST_CASE("enumerate_permutations: single slot and cap") {
    SubstitutionModel model = make_model(2, {0, 1, 1, 1});
    // Sphere of label 0: o' = 1 (only forward neighbor), outer empty, inner = {0,1}.
    const CherrySphere sphere = cherry_sphere(model, 0);
    CHECK(sphere.outer_count == 0);
    const auto perms = enumerate_permutations(sphere);
    CHECK(perms.size() == 1);

    const CherrySphere big = cherry_sphere(make_model(1, {9}), 0);  // 8 + 9 same-label slots
    CHECK_THROWS_AS(enumerate_permutations(big, 1000), PermutationLimit);
}
