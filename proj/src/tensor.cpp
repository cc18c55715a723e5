#include "varigeo/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>

namespace varigeo {

Tensor Tensor::zeros(const std::vector<int>& dims) {
    Tensor T{dims, Vec()};
    T.data = Vec::Zero(T.size());
    return T;
}

long Tensor::size() const {
    long n = 1;
    for (int k : dims) n *= k;
    return n;
}

void check_tensor(const Tensor& T) {
    if (T.dims.empty() || T.order() > kMaxTensorOrder)
        throw std::invalid_argument("tensor order must be between 1 and " +
                                    std::to_string(kMaxTensorOrder));
    for (int k : T.dims)
        if (k < 1 || k > kMaxModeSize)
            throw std::invalid_argument("tensor mode sizes must be between 1 and " +
                                        std::to_string(kMaxModeSize));
    if (T.data.size() != T.size()) throw std::invalid_argument("tensor data length does not match dims");
    assert_finite(T.data, "tensor data");
}

namespace {

std::vector<int> complement(const std::vector<int>& modes, int d) {
    std::vector<int> out;
    for (int k = 0; k < d; ++k)
        if (std::find(modes.begin(), modes.end(), k) == modes.end()) out.push_back(k);
    return out;
}

long extent(const std::vector<int>& modes, const std::vector<int>& dims) {
    long n = 1;
    for (int k : modes) n *= dims[k];
    return n;
}

// Calls fn(linear, row, col) over all entries for the given row modes.
template <class Fn>
void for_each_entry(const std::vector<int>& dims, const std::vector<int>& modes, Fn fn) {
    const int d = static_cast<int>(dims.size());
    std::vector<int> rest = complement(modes, d);
    std::vector<int> idx(d, 0);
    long total = extent(rest, dims) * extent(modes, dims);
    for (long lin = 0; lin < total; ++lin) {
        long row = 0, col = 0;
        for (int k : modes) row = row * dims[k] + idx[k];
        for (int k : rest) col = col * dims[k] + idx[k];
        fn(lin, row, col);
        for (int k = d - 1; k >= 0; --k) {
            if (++idx[k] < dims[k]) break;
            idx[k] = 0;
        }
    }
}

void check_modes(const std::vector<int>& modes, int d) {
    for (size_t i = 0; i < modes.size(); ++i) {
        if (modes[i] < 0 || modes[i] >= d) throw std::invalid_argument("mode index out of range");
        if (i > 0 && modes[i] <= modes[i - 1]) throw std::invalid_argument("modes must be ascending");
    }
}

}  // namespace

Mat unfold(const Tensor& T, const std::vector<int>& modes) {
    check_modes(modes, T.order());
    Mat M(extent(modes, T.dims), extent(complement(modes, T.order()), T.dims));
    for_each_entry(T.dims, modes, [&](long lin, long r, long c) { M(r, c) = T.data(lin); });
    return M;
}

Tensor fold(const Mat& M, const std::vector<int>& modes, const std::vector<int>& dims) {
    const int d = static_cast<int>(dims.size());
    check_modes(modes, d);
    if (M.rows() != extent(modes, dims) || M.cols() != extent(complement(modes, d), dims))
        throw std::invalid_argument("fold: matrix shape does not match dims");
    Tensor T = Tensor::zeros(dims);
    for_each_entry(dims, modes, [&](long lin, long r, long c) { T.data(lin) = M(r, c); });
    return T;
}

std::string to_string(DimensionTree::Preset p) {
    switch (p) {
        case DimensionTree::Preset::tucker: return "tucker";
        case DimensionTree::Preset::tt: return "tt";
        case DimensionTree::Preset::custom: return "custom";
    }
    return "?";
}

std::string mode_label(const std::vector<int>& modes) {
    std::string s = "{";
    for (size_t i = 0; i < modes.size(); ++i) s += (i ? "," : "") + std::to_string(modes[i] + 1);
    return s + "}";
}

namespace {

DimensionTree linear_tree(const std::vector<int>& dims) {
    DimensionTree T;
    T.d = static_cast<int>(dims.size());
    std::vector<int> all(T.d);
    std::iota(all.begin(), all.end(), 0);
    T.nodes.push_back({all, -1, -1, 0, 1, false});
    int cur = 0;
    for (int k = 0; k + 1 < T.d; ++k) {
        std::vector<int> tail(all.begin() + k + 1, all.end());
        int depth = T.nodes[cur].depth + 1;
        T.nodes.push_back({{k}, -1, -1, depth, 1, false});
        T.nodes.push_back({tail, -1, -1, depth, 1, false});
        const int l = static_cast<int>(T.nodes.size()) - 2;
        T.nodes[cur].left = l;
        T.nodes[cur].right = l + 1;
        cur = l + 1;
    }
    for (auto& n : T.nodes) {
        long rows = extent(n.modes, dims), cols = extent(complement(n.modes, T.d), dims);
        n.rank = static_cast<int>(std::min(rows, cols));
    }
    return T;
}

}  // namespace

DimensionTree DimensionTree::tucker(const std::vector<int>& dims, const std::vector<int>& ranks) {
    if (ranks.size() != dims.size()) throw std::invalid_argument("Tucker ranks need one entry per mode");
    DimensionTree T = linear_tree(dims);
    T.preset = Preset::tucker;
    for (auto& n : T.nodes)
        if (n.modes.size() == 1) {
            n.rank = ranks[n.modes[0]];
            n.constrained = true;
        }
    T.validate(dims);
    return T;
}

DimensionTree DimensionTree::tt(const std::vector<int>& dims, const std::vector<int>& ranks) {
    if (dims.size() < 2 || ranks.size() != dims.size() - 1)
        throw std::invalid_argument("TT ranks need d - 1 entries");
    DimensionTree T = linear_tree(dims);
    T.preset = Preset::tt;
    for (auto& n : T.nodes) {
        int first = n.modes.front();
        if (first >= 1 && n.modes.back() == T.d - 1 && static_cast<int>(n.modes.size()) == T.d - first) {
            n.rank = ranks[first - 1];
            n.constrained = true;
        }
    }
    T.validate(dims);
    return T;
}

DimensionTree DimensionTree::custom(const std::vector<int>& dims,
                                    const std::vector<std::vector<int>>& node_modes,
                                    const std::vector<int>& ranks) {
    if (node_modes.size() != ranks.size()) throw std::invalid_argument("one rank per node is required");
    DimensionTree T;
    T.preset = Preset::custom;
    T.d = static_cast<int>(dims.size());
    for (size_t i = 0; i < node_modes.size(); ++i) {
        check_modes(node_modes[i], T.d);
        Node n;
        n.modes = node_modes[i];
        n.constrained = ranks[i] >= 0;
        n.rank = n.constrained ? ranks[i]
                               : static_cast<int>(std::min(extent(n.modes, dims),
                                                           extent(complement(n.modes, T.d), dims)));
        T.nodes.push_back(n);
    }
    // children: the unique pair of nodes splitting the parent with ordered modes
    for (auto& p : T.nodes) {
        if (p.modes.size() < 2) continue;
        for (size_t a = 0; a < T.nodes.size() && p.left < 0; ++a)
            for (size_t b = 0; b < T.nodes.size(); ++b) {
                const auto& L = T.nodes[a].modes;
                const auto& R = T.nodes[b].modes;
                if (L.empty() || R.empty() || L.size() + R.size() != p.modes.size()) continue;
                std::vector<int> joined = L;
                joined.insert(joined.end(), R.begin(), R.end());
                if (joined == p.modes) {
                    p.left = static_cast<int>(a);
                    p.right = static_cast<int>(b);
                    break;
                }
            }
    }
    // depths by walking from the root
    std::function<void(int, int)> walk = [&](int i, int depth) {
        T.nodes[i].depth = depth;
        if (T.nodes[i].left >= 0) {
            walk(T.nodes[i].left, depth + 1);
            walk(T.nodes[i].right, depth + 1);
        }
    };
    if (!T.nodes.empty()) walk(0, 0);
    T.validate(dims);
    return T;
}

void DimensionTree::validate(const std::vector<int>& dims) const {
    if (static_cast<int>(dims.size()) != d) throw std::invalid_argument("tree order does not match tensor order");
    if (d < 1 || d > kMaxTensorOrder) throw std::invalid_argument("tensor order out of range");
    if (nodes.empty() || static_cast<int>(nodes[0].modes.size()) != d)
        throw std::invalid_argument("the root must contain every mode");
    int leaves = 0;
    for (const auto& n : nodes) {
        if (n.modes.size() == 1) {
            ++leaves;
            if (n.left >= 0) throw std::invalid_argument("singleton nodes must be leaves");
        } else if (n.left < 0) {
            throw std::invalid_argument("internal node " + mode_label(n.modes) +
                                        " is not split by two ordered children");
        }
        long rows = extent(n.modes, dims), cols = extent(complement(n.modes, d), dims);
        if (n.rank < 0 || n.rank > std::min(rows, cols))
            throw std::invalid_argument("rank infeasible at node " + mode_label(n.modes));
    }
    if (leaves != d) throw std::invalid_argument("every mode needs a singleton leaf");
}

namespace {

void check_pair(const Tensor& X, const DimensionTree& tree, const Tensor& other) {
    check_tensor(X);
    check_tensor(other);
    if (other.dims != X.dims) throw std::invalid_argument("tensor dims differ");
    tree.validate(X.dims);
}

TensorCertificate per_node(const Tensor& X, const DimensionTree& tree,
                           const std::function<NodeCheck(const DimensionTree::Node&)>& fn) {
    TensorCertificate C;
    C.nodes.resize(tree.nodes.size());
    parallel_for(static_cast<int>(tree.nodes.size()), [&](int i) {
        const auto& n = tree.nodes[i];
        if (!n.constrained) {
            C.nodes[i] = {n.modes, n.rank, false, true, 0.0};
            return;
        }
        C.nodes[i] = fn(n);
    });
    C.member = std::all_of(C.nodes.begin(), C.nodes.end(), [](const NodeCheck& c) { return c.member; });
    (void)X;
    return C;
}

}  // namespace

TensorCertificate tensor_tangent_membership(const Tensor& X, const DimensionTree& tree,
                                            const Tensor& eta) {
    check_pair(X, tree, eta);
    return per_node(X, tree, [&](const DimensionTree::Node& n) {
        Mat Xt = unfold(X, n.modes);
        MatrixPoint P = resolve_point(Xt);
        RankSpec spec = make_spec(Xt, n.rank);
        if (P.s > n.rank)
            throw std::invalid_argument("base tensor exceeds the rank at node " + mode_label(n.modes));
        auto c = tangent_membership(P, unfold(eta, n.modes), spec);
        return NodeCheck{n.modes, n.rank, true, c.member, c.violation};
    });
}

TensorCertificate tensor_tangent2_membership(const Tensor& X, const DimensionTree& tree,
                                             const Tensor& eta, const Tensor& zeta) {
    check_pair(X, tree, eta);
    check_pair(X, tree, zeta);
    if (!tensor_tangent_membership(X, tree, eta).member)
        throw std::invalid_argument("eta is not in the tangent cone of the tensor variety");
    return per_node(X, tree, [&](const DimensionTree::Node& n) {
        Mat Xt = unfold(X, n.modes);
        MatrixPoint P = resolve_point(Xt);
        RankSpec spec = make_spec(Xt, n.rank);
        auto c = second_order_membership(P, unfold(eta, n.modes), unfold(zeta, n.modes), spec);
        return NodeCheck{n.modes, n.rank, true, c.member, c.violation};
    });
}

Tensor hierarchical_truncation(const Tensor& Y, const DimensionTree& tree) {
    check_tensor(Y);
    tree.validate(Y.dims);
    int max_depth = 0;
    for (const auto& n : tree.nodes) max_depth = std::max(max_depth, n.depth);
    Tensor Z = Y;
    for (int depth = 1; depth <= max_depth; ++depth) {
        for (const auto& n : tree.nodes) {
            if (n.depth != depth || !n.constrained) continue;
            Mat Yt = unfold(Y, n.modes);
            Eigen::JacobiSVD<Mat> svd(Yt, Eigen::ComputeThinU);
            Mat Ut = svd.matrixU().leftCols(n.rank);
            Z = fold(Ut * (Ut.transpose() * unfold(Z, n.modes)), n.modes, Y.dims);
        }
    }
    return Z;
}

TensorBoundReport tensor_error_bound(const Tensor& Y, const DimensionTree& tree) {
    Tensor Z = hierarchical_truncation(Y, tree);
    TensorBoundReport R;
    R.dist = (Y.data - Z.data).norm();
    double tail = 0.0;
    for (const auto& n : tree.nodes) {
        if (!n.constrained) continue;
        Vec sv = singular_values(unfold(Y, n.modes));
        for (int i = n.rank; i < sv.size(); ++i) tail += sv(i) * sv(i);
    }
    R.bound = std::sqrt(tail);
    R.holds = R.dist <= R.bound * (1.0 + 1e-10) + 1e-14;
    return R;
}

SetProjector tensor_truncation_projector(const DimensionTree& tree, const std::vector<int>& dims) {
    return {"hierarchical_truncation(" + to_string(tree.preset) + ")", [tree, dims](const Mat& y) {
                Tensor Y{dims, Eigen::Map<const Vec>(y.data(), y.size())};
                return (Y.data - hierarchical_truncation(Y, tree).data).norm();
            }};
}

Tensor random_tensor(const std::vector<int>& dims, Rng& rng) {
    Tensor T = Tensor::zeros(dims);
    T.data = rng.gaussian(static_cast<int>(T.size()));
    return T;
}

namespace {

using Eval = std::function<Tensor(const std::vector<Mat>&)>;

Tensor mode_product(const Tensor& T, const Mat& M, int k) {
    std::vector<int> dims = T.dims;
    dims[k] = static_cast<int>(M.rows());
    return fold(M * unfold(T, {k}), {k}, dims);
}

TensorJet jet_from(const Eval& eval, const std::vector<Mat>& args, Rng& rng) {
    const size_t p = args.size();
    std::vector<Mat> dots, ddots;
    for (const auto& a : args) {
        dots.push_back(rng.gaussian(static_cast<int>(a.rows()), static_cast<int>(a.cols())));
        ddots.push_back(rng.gaussian(static_cast<int>(a.rows()), static_cast<int>(a.cols())));
    }
    TensorJet J;
    J.X = eval(args);
    J.eta = J.X.like(Vec::Zero(J.X.size()));
    J.zeta = J.eta;
    for (size_t k = 0; k < p; ++k) {
        auto a = args;
        a[k] = dots[k];
        J.eta.data += eval(a).data;
        a[k] = ddots[k];
        J.zeta.data += eval(a).data;
        for (size_t l = k + 1; l < p; ++l) {
            auto b = args;
            b[k] = dots[k];
            b[l] = dots[l];
            J.zeta.data += 2.0 * eval(b).data;
        }
    }
    return J;
}

}  // namespace

TensorJet random_tensor_jet(const DimensionTree& tree, const std::vector<int>& dims, Rng& rng) {
    tree.validate(dims);
    const int d = tree.d;
    if (tree.preset == DimensionTree::Preset::tucker) {
        std::vector<int> r(d);
        for (const auto& n : tree.nodes)
            if (n.modes.size() == 1) r[n.modes[0]] = n.rank;
        std::vector<Mat> args;
        args.push_back(rng.gaussian(static_cast<int>(Tensor::zeros(r).size()), 1));  // core
        for (int k = 0; k < d; ++k) args.push_back(rng.gaussian(dims[k], r[k]));
        Eval eval = [r, d](const std::vector<Mat>& a) {
            Tensor T{r, a[0]};
            for (int k = 0; k < d; ++k) T = mode_product(T, a[k + 1], k);
            return T;
        };
        return jet_from(eval, args, rng);
    }
    if (tree.preset == DimensionTree::Preset::tt) {
        std::vector<int> r(d + 1, 1);
        for (const auto& n : tree.nodes)
            if (n.constrained) r[n.modes.front()] = n.rank;
        std::vector<Mat> args;
        for (int k = 0; k < d; ++k) args.push_back(rng.gaussian(r[k], dims[k] * r[k + 1]));
        Eval eval = [r, d, dims](const std::vector<Mat>& a) {
            Tensor T = Tensor::zeros(dims);
            std::vector<int> idx(d, 0);
            for (long lin = 0; lin < T.size(); ++lin) {
                Mat acc = Mat::Identity(1, 1);
                for (int k = 0; k < d; ++k)
                    acc = acc * a[k].middleCols(static_cast<long>(idx[k]) * r[k + 1], r[k + 1]);
                T.data(lin) = acc(0, 0);
                for (int k = d - 1; k >= 0; --k) {
                    if (++idx[k] < dims[k]) break;
                    idx[k] = 0;
                }
            }
            return T;
        };
        return jet_from(eval, args, rng);
    }
    throw std::invalid_argument("random jets are only available for the Tucker and TT presets");
}

}  // namespace varigeo
