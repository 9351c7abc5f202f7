#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace conespectra {

/// Substitution matrix over a finite label alphabet together with the
/// label-invariant potential. M(k, l) counts forward neighbors of label l
/// attached to a label-k vertex; the rooted tree it generates is determined
/// by the root label alone.
struct SubstitutionModel {
    int alphabet_size = 0;
    std::vector<long long> matrix;  // row-major, nonnegative
    std::vector<double> v_per;      // per-label potential
    int root_label = 0;
    std::vector<std::string> label_names;  // optional; filled by the file reader

    long long m(int k, int l) const { return matrix[static_cast<std::size_t>(k) * alphabet_size + l]; }
    long long row_sum(int k) const {
        long long s = 0;
        for (int l = 0; l < alphabet_size; ++l) s += m(k, l);
        return s;
    }
    long long max_row_sum() const {
        long long s = 0;
        for (int k = 0; k < alphabet_size; ++k) s = std::max(s, row_sum(k));
        return s;
    }
};

struct ValidationReport {
    bool m0 = false;
    bool m1 = false;
    bool m1star = false;
    bool m2 = false;
    bool ok() const { return m0 && m1star && m2; }
};

struct TreeVertex {
    int label = 0;
    int parent = -1;  // -1 at the root
    std::vector<int> children;
};

/// Finite-depth prefix of the tree generated by a substitution model.
/// Children of a label-k vertex are listed canonically: M(k,0) vertices of
/// label 0, then M(k,1) of label 1, and so on; ids are breadth-first.
struct LabeledTree {
    int depth = 0;
    int root = 0;
    std::vector<TreeVertex> vertices;

    int size() const { return static_cast<int>(vertices.size()); }
    int label_of(int id) const { return vertices[static_cast<std::size_t>(id)].label; }
};

enum class SphereHalf { Outer, Inner };

struct SphereSlot {
    int label = 0;
    SphereHalf half = SphereHalf::Outer;
};

/// The index set of the two step expansion: the children of o' together with
/// the children of o other than o'. Slots are listed outer first, each group
/// in canonical child order.
struct CherrySphere {
    int o_label = 0;
    int o_prime_label = 0;
    std::vector<SphereSlot> slots;
    int outer_count = 0;

    int size() const { return static_cast<int>(slots.size()); }
    int inner_count() const { return size() - outer_count; }
};

/// Label-preserving bijection of the slots of a cherry sphere.
struct LabelPermutation {
    std::vector<int> mapping;  // slot index -> slot index
};

ValidationReport validate(const SubstitutionModel& model);

/// Distinguished forward label for k: the smallest k' with M(k,k') >= 1 whose
/// row support contains the support of row k.
int choose_o_prime(const SubstitutionModel& model, int k);

LabeledTree grow_tree(const SubstitutionModel& model, int root_label, int depth,
                      long long vertex_cap = (1ll << 22));

CherrySphere cherry_sphere(const SubstitutionModel& model, int k);

std::vector<LabelPermutation> enumerate_permutations(const CherrySphere& sphere,
                                                     long long cap = 3628800);

/// Number of label-preserving bijections (product of factorials of the label
/// multiplicities) without enumerating them.
long long count_permutations(const CherrySphere& sphere);

}  // namespace conespectra
