#pragma once

#include "varigeo/oracle.hpp"
#include "varigeo/tangent.hpp"

#include <string>
#include <vector>

namespace varigeo {

constexpr int kMaxTensorOrder = 4;
constexpr int kMaxModeSize = 6;

// Entries in lexicographic order: the last index runs fastest.
struct Tensor {
    std::vector<int> dims;
    Vec data;

    static Tensor zeros(const std::vector<int>& dims);
    int order() const { return static_cast<int>(dims.size()); }
    long size() const;
    Tensor like(const Vec& d) const { return {dims, d}; }
};

void check_tensor(const Tensor& T);

// Rows indexed by the modes in `modes` (0-based, ascending), columns by the
// remaining modes; both multi-indices lexicographic.
Mat unfold(const Tensor& T, const std::vector<int>& modes);
Tensor fold(const Mat& M, const std::vector<int>& modes, const std::vector<int>& dims);

struct DimensionTree {
    enum class Preset { tucker, tt, custom };
    struct Node {
        std::vector<int> modes;  // 0-based, ascending
        int left = -1, right = -1, depth = 0;
        int rank = 1;
        bool constrained = false;
    };
    Preset preset = Preset::custom;
    int d = 0;
    std::vector<Node> nodes;  // nodes[0] is the root

    // Linear tree {1..d} -> {1}, {2..d} -> {2}, {3..d} -> ...
    // Tucker ranks constrain the singletons, TT ranks the suffixes {k..d}, k >= 2.
    static DimensionTree tucker(const std::vector<int>& dims, const std::vector<int>& ranks);
    static DimensionTree tt(const std::vector<int>& dims, const std::vector<int>& ranks);
    // Node mode sets (0-based) with node_modes[0] the root; children are inferred.
    // A negative rank leaves the node unconstrained.
    static DimensionTree custom(const std::vector<int>& dims,
                                const std::vector<std::vector<int>>& node_modes,
                                const std::vector<int>& ranks);

    void validate(const std::vector<int>& dims) const;
};

std::string to_string(DimensionTree::Preset p);
std::string mode_label(const std::vector<int>& modes);  // "{1,2}" in 1-based form

struct NodeCheck {
    std::vector<int> modes;
    int rank = 0;
    bool constrained = false;
    bool member = false;
    double violation = 0.0;
};

struct TensorCertificate {
    bool member = false;
    std::vector<NodeCheck> nodes;
};

TensorCertificate tensor_tangent_membership(const Tensor& X, const DimensionTree& tree,
                                            const Tensor& eta);
TensorCertificate tensor_tangent2_membership(const Tensor& X, const DimensionTree& tree,
                                             const Tensor& eta, const Tensor& zeta);

// Root-to-leaves truncation: projectors onto the leading left singular vectors of
// each node unfolding of Y, applied level by level from the top.
Tensor hierarchical_truncation(const Tensor& Y, const DimensionTree& tree);

struct TensorBoundReport {
    double dist = 0.0;   // ||Y - truncation||
    double bound = 0.0;  // sqrt of the discarded squared singular values over all nodes
    bool holds = false;
};
TensorBoundReport tensor_error_bound(const Tensor& Y, const DimensionTree& tree);

// Distance surrogate on flattened tensors (N x 1 matrices).
SetProjector tensor_truncation_projector(const DimensionTree& tree, const std::vector<int>& dims);
inline Mat as_column(const Tensor& T) { return T.data; }

// Point of the variety with a curve through it: X(t) = X + t eta + t^2/2 zeta + O(t^3).
struct TensorJet {
    Tensor X, eta, zeta;
};
// Tucker or TT preset; ranks of the point follow the tree.
TensorJet random_tensor_jet(const DimensionTree& tree, const std::vector<int>& dims, Rng& rng);
Tensor random_tensor(const std::vector<int>& dims, Rng& rng);

}  // namespace varigeo
