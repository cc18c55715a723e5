#include "varigeo/stationarity.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace varigeo {

std::string to_string(Objective::Kind k) {
    switch (k) {
        case Objective::Kind::quadratic: return "quadratic";
        case Objective::Kind::least_squares: return "least_squares";
        case Objective::Kind::custom: return "custom";
    }
    return "?";
}

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::pass: return "pass";
        case Verdict::fail: return "fail";
        case Verdict::unknown: return "unknown";
    }
    return "?";
}

std::string to_string(Certification c) { return c == Certification::exact ? "exact" : "heuristic"; }

namespace {

double inner(const Mat& A, const Mat& B) { return (A.array() * B.array()).sum(); }

Vec vec(const Mat& M) { return Eigen::Map<const Vec>(M.data(), M.size()); }

Mat unvec(const Vec& v, int m, int n) { return Eigen::Map<const Mat>(v.data(), m, n); }

}  // namespace

Objective make_quadratic(const Mat& Q, const Mat& C) {
    const int m = static_cast<int>(C.rows()), n = static_cast<int>(C.cols());
    if (Q.rows() != m * n || Q.cols() != m * n)
        throw std::invalid_argument("quadratic objective: Q must be (mn x mn)");
    if (!is_symmetric(Q, 1e-12)) throw std::invalid_argument("quadratic objective: Q must be symmetric");
    Mat Qs = sym(Q);
    Objective f;
    f.kind = Objective::Kind::quadratic;
    f.m = m;
    f.n = n;
    f.value = [Qs, C](const Mat& X) {
        Vec x = vec(X);
        return 0.5 * x.dot(Qs * x) + inner(C, X);
    };
    f.gradient = [Qs, C, m, n](const Mat& X) { return Mat(unvec(Qs * vec(X), m, n) + C); };
    f.hessian_apply = [Qs, m, n](const Mat&, const Mat& E) { return unvec(Qs * vec(E), m, n); };
    f.description = "quadratic";
    return f;
}

Objective make_least_squares(const Mat& target, const Mat& mask) {
    Mat W = mask.size() ? mask : Mat::Ones(target.rows(), target.cols());
    if (W.rows() != target.rows() || W.cols() != target.cols())
        throw std::invalid_argument("least squares: mask shape differs from target");
    Objective f;
    f.kind = Objective::Kind::least_squares;
    f.m = static_cast<int>(target.rows());
    f.n = static_cast<int>(target.cols());
    f.value = [target, W](const Mat& X) {
        return 0.5 * (W.array() * (X - target).array()).matrix().squaredNorm();
    };
    f.gradient = [target, W](const Mat& X) {
        return Mat((W.array().square() * (X - target).array()).matrix());
    };
    f.hessian_apply = [W](const Mat&, const Mat& E) { return Mat((W.array().square() * E.array()).matrix()); };
    f.description = "least_squares";
    return f;
}

Objective make_linear(const Mat& C) {
    Objective f;
    f.kind = Objective::Kind::custom;
    f.m = static_cast<int>(C.rows());
    f.n = static_cast<int>(C.cols());
    f.value = [C](const Mat& X) { return inner(C, X); };
    f.gradient = [C](const Mat&) { return C; };
    f.hessian_apply = [C](const Mat&, const Mat&) { return Mat(Mat::Zero(C.rows(), C.cols())); };
    f.description = "linear";
    return f;
}

void validate_objective(const Objective& f, std::uint64_t seed, int probes) {
    if (!f.value || !f.gradient || !f.hessian_apply) throw std::invalid_argument("objective is incomplete");
    Rng rng(seed);
    for (int p = 0; p < probes; ++p) {
        Mat X = rng.gaussian(f.m, f.n), E = rng.gaussian(f.m, f.n);
        E /= E.norm();
        const double h = 1e-5;
        double fd = (f.value(X + h * E) - f.value(X - h * E)) / (2 * h);
        double an = inner(f.gradient(X), E);
        if (std::abs(fd - an) > 1e-6 * std::max(1.0, std::abs(an)))
            throw std::invalid_argument("objective gradient disagrees with finite differences");
        Mat E2 = rng.gaussian(f.m, f.n);
        double a = inner(E, f.hessian_apply(X, E2)), b = inner(E2, f.hessian_apply(X, E));
        if (std::abs(a - b) > 1e-10 * std::max(1.0, std::abs(a)))
            throw std::invalid_argument("objective Hessian is not symmetric");
    }
}

// ---------------------------------------------------------------------------

namespace {

Mat tangent_space_project(const MatrixPoint& P, const Mat& M) {
    Mat PU = P.U * P.U.transpose(), PV = P.V * P.V.transpose();
    return PU * M + M * PV - PU * M * PV;
}

std::vector<Mat> constraint_gradients(const Mat& X, const ConstraintH& H) {
    const int q = H.count(X), m = static_cast<int>(X.rows()), n = static_cast<int>(X.cols());
    std::vector<Mat> G(q, Mat::Zero(m, n));
    Mat E = Mat::Zero(m, n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < m; ++i) {
            E(i, j) = 1.0;
            Vec d = H.first(X, E);
            for (int k = 0; k < q; ++k) G[k](i, j) = d(k);
            E(i, j) = 0.0;
        }
    return G;
}

// Residual of min_c || T(g - sum c_k G_k) || with T linear.
double multiplier_residual(const Mat& g, const std::vector<Mat>& G, const std::function<Mat(const Mat&)>& T) {
    Vec rhs = vec(T(g));
    if (G.empty()) return rhs.norm();
    Mat A(rhs.size(), G.size());
    for (size_t k = 0; k < G.size(); ++k) A.col(k) = vec(T(G[k]));
    Vec c = A.completeOrthogonalDecomposition().solve(rhs);
    return (rhs - A * c).norm();
}

}  // namespace

StationarityReport check_first_order(const MatrixPoint& P, const Objective& f, const RankSpec& spec,
                                     const std::optional<ConstraintH>& H, double tol) {
    check_spec(P.X, spec);
    if (P.s > spec.r) throw std::invalid_argument("point has rank above the bound");
    if (f.m != P.rows() || f.n != P.cols()) throw std::invalid_argument("objective shape differs from the point");
    StationarityReport R;
    R.rank_deficient = P.s < spec.r;
    Mat g = f.gradient(P.X);
    R.first_threshold = tol * (1.0 + g.norm());
    if (!H || H->kind == ConstraintH::Kind::ambient) {
        R.first_residual = project_tangent_cone(P, -g, spec).norm();
    } else {
        check_feasible(P.X, *H);
        CqReport cq = cq_report(P, *H, spec);
        auto G = constraint_gradients(P.X, *H);
        if (R.rank_deficient)
            R.first_residual = multiplier_residual(g, G, [](const Mat& M) { return M; });
        else
            R.first_residual =
                multiplier_residual(g, G, [&P](const Mat& M) { return tangent_space_project(P, M); });
        if (!cq.holds) {
            R.first_order = Verdict::unknown;
            R.note = "constraint qualification fails (" + cq.name + "): " + cq.detail;
            return R;
        }
    }
    R.first_order = R.first_residual <= R.first_threshold ? Verdict::pass : Verdict::fail;
    return R;
}

std::vector<Mat> tangent_space_basis(const MatrixPoint& P) {
    std::vector<Mat> out;
    for (int a = 0; a < P.s; ++a) {
        for (int b = 0; b < P.s; ++b) out.push_back(P.U.col(a) * P.V.col(b).transpose());
        for (int b = 0; b < P.V_perp.cols(); ++b) out.push_back(P.U.col(a) * P.V_perp.col(b).transpose());
    }
    for (int a = 0; a < P.U_perp.cols(); ++a)
        for (int b = 0; b < P.s; ++b) out.push_back(P.U_perp.col(a) * P.V.col(b).transpose());
    return out;
}

Mat reduced_hessian(const MatrixPoint& P, const Objective& f, const std::vector<Mat>& basis) {
    const int d = static_cast<int>(basis.size());
    Mat g = f.gradient(P.X), Xp = pseudoinverse(P);
    std::vector<Mat> Hb(d);
    parallel_for(d, [&](int k) { Hb[k] = f.hessian_apply(P.X, basis[k]); });
    Mat Q(d, d);
    for (int k = 0; k < d; ++k)
        for (int l = k; l < d; ++l) {
            double curv = inner(g, basis[k] * Xp * basis[l] + basis[l] * Xp * basis[k]);
            double hess = 0.5 * (inner(basis[k], Hb[l]) + inner(basis[l], Hb[k]));
            Q(k, l) = Q(l, k) = curv + hess;
        }
    return Q;
}

namespace {

struct MinPair {
    double value = 0.0;
    Mat eta;
};

// Minimum of <eta, H eta> over unit eta in the span of an orthonormal basis.
MinPair min_on_span(const MatrixPoint& P, const Objective& f, const std::vector<Mat>& basis) {
    const int d = static_cast<int>(basis.size());
    std::vector<Mat> Hb(d);
    for (int k = 0; k < d; ++k) Hb[k] = f.hessian_apply(P.X, basis[k]);
    Mat Q(d, d);
    for (int k = 0; k < d; ++k)
        for (int l = k; l < d; ++l) Q(k, l) = Q(l, k) = 0.5 * (inner(basis[k], Hb[l]) + inner(basis[l], Hb[k]));
    Eigen::SelfAdjointEigenSolver<Mat> es(Q);
    MinPair out;
    out.value = es.eigenvalues()(0);
    out.eta = Mat::Zero(P.rows(), P.cols());
    for (int k = 0; k < d; ++k) out.eta += es.eigenvectors()(k, 0) * basis[k];
    return out;
}

std::vector<Mat> fixed_blocks(const MatrixPoint& P) { return tangent_space_basis(P); }

std::vector<Mat> with_left(const MatrixPoint& P, const std::vector<Mat>& fixed, const Mat& Bn) {
    auto out = fixed;
    Mat R = P.V_perp * Bn;  // fixed right factor
    for (int i = 0; i < P.U_perp.cols(); ++i)
        for (int j = 0; j < R.cols(); ++j) out.push_back(P.U_perp.col(i) * R.col(j).transpose());
    return out;
}

std::vector<Mat> with_right(const MatrixPoint& P, const std::vector<Mat>& fixed, const Mat& An) {
    auto out = fixed;
    Mat L = P.U_perp * An;
    for (int i = 0; i < L.cols(); ++i)
        for (int j = 0; j < P.V_perp.cols(); ++j) out.push_back(L.col(i) * P.V_perp.col(j).transpose());
    return out;
}

struct SearchState {
    double value = 0.0;
    Mat eta, B;
};

SearchState alternate(const MatrixPoint& P, const Objective& f, const std::vector<Mat>& fixed, int a,
                      Mat B, int iterations) {
    SearchState st;
    double prev = std::numeric_limits<double>::infinity();
    for (int it = 0; it < iterations; ++it) {
        MinPair left = min_on_span(P, f, with_left(P, fixed, B));
        Mat K = P.U_perp.transpose() * left.eta * P.V_perp;
        Eigen::JacobiSVD<Mat> sl(K, Eigen::ComputeFullU);
        Mat A = sl.matrixU().leftCols(a);
        MinPair right = min_on_span(P, f, with_right(P, fixed, A));
        K = P.U_perp.transpose() * right.eta * P.V_perp;
        Eigen::JacobiSVD<Mat> sr(K, Eigen::ComputeFullV);
        B = sr.matrixV().leftCols(a);
        st.value = right.value;
        st.eta = right.eta;
        st.B = B;
        if (std::abs(prev - right.value) <= 1e-15 * std::max(1.0, std::abs(right.value))) break;
        prev = right.value;
    }
    return st;
}

double hessian_norm(const MatrixPoint& P, const Objective& f) {
    const int m = P.rows(), n = P.cols();
    Mat Q(m * n, m * n);
    Mat E = Mat::Zero(m, n);
    for (int c = 0; c < m * n; ++c) {
        E(c % m, c / m) = 1.0;
        Q.col(c) = vec(f.hessian_apply(P.X, E));
        E(c % m, c / m) = 0.0;
    }
    return singular_values(sym(Q))(0);
}

}  // namespace

StationarityReport check_second_order(const MatrixPoint& P, const Objective& f, const RankSpec& spec,
                                      const SecondOrderOptions& opt) {
    StationarityReport R = check_first_order(P, f, spec);
    if (R.first_order != Verdict::pass)
        throw std::invalid_argument("first-order stationarity fails; second-order test does not apply");
    R.second_checked = true;
    if (!R.rank_deficient) {
        auto basis = tangent_space_basis(P);
        Mat Q = reduced_hessian(P, f, basis);
        Eigen::SelfAdjointEigenSolver<Mat> es(Q);
        R.curvature = es.eigenvalues()(0);
        R.witness = Mat::Zero(P.rows(), P.cols());
        for (size_t k = 0; k < basis.size(); ++k) R.witness += es.eigenvectors()(k, 0) * basis[k];
        double scale = std::max(1.0, Q.cwiseAbs().maxCoeff());
        R.second_order = R.curvature >= -opt.tol * scale ? Verdict::pass : Verdict::fail;
        R.level = Certification::exact;
        return R;
    }

    const int a = spec.r - P.s;
    const int nr = static_cast<int>(P.V_perp.cols());
    auto fixed = fixed_blocks(P);
    std::vector<SearchState> results(opt.starts);
    parallel_for(opt.starts, [&](int k) {
        Rng rng(derive_seed(opt.seed, static_cast<std::uint64_t>(k)));
        results[k] = alternate(P, f, fixed, a, rng.orthonormal(nr, a), opt.iterations);
    });
    int best = 0;
    for (int k = 1; k < opt.starts; ++k)
        if (results[k].value < results[best].value) best = k;
    SearchState st = alternate(P, f, fixed, a, results[best].B, opt.polish);
    if (st.value > results[best].value) st = results[best];
    R.witness = st.eta / st.eta.norm();
    R.curvature = inner(R.witness, f.hessian_apply(P.X, R.witness));  // re-evaluated on the witness
    double hn = std::max(1.0, hessian_norm(P, f));
    if (R.curvature < -opt.tol * hn) {
        R.second_order = Verdict::fail;
        R.level = Certification::exact;
        return R;
    }
    R.second_order = Verdict::pass;
    R.level = Certification::heuristic;
    R.note = "rank-deficient pass from multistart search";

    const int mr = static_cast<int>(P.U_perp.cols());
    if (opt.grid_upgrade && a == 1 && mr <= 2 && nr <= 2) {
        auto circle = [](int dim) {
            std::vector<Vec> pts;
            if (dim == 1) {
                pts.push_back(Vec::Ones(1));
            } else {
                for (int deg = 0; deg < 180; deg += 2) {
                    double th = deg * M_PI / 180.0;
                    Vec u(2);
                    u << std::cos(th), std::sin(th);
                    pts.push_back(u);
                }
            }
            return pts;
        };
        auto us = circle(mr), vs = circle(nr);
        double grid_min = std::numeric_limits<double>::infinity();
        for (const auto& u : us)
            for (const auto& v : vs) {
                auto basis = fixed;
                basis.push_back(P.U_perp * u * (P.V_perp * v).transpose());
                grid_min = std::min(grid_min, min_on_span(P, f, basis).value);
            }
        const double half = M_PI / 180.0;
        R.grid_gap = 2.0 * hn * ((mr == 2 ? half : 0.0) + (nr == 2 ? half : 0.0));
        if (grid_min - R.grid_gap >= -opt.tol * hn) {
            R.level = Certification::exact;
            R.note = "rank-deficient pass upgraded by the 2-degree grid";
        }
    }
    return R;
}

// ---------------------------------------------------------------------------

Graph Graph::make(int n, std::vector<std::pair<int, int>> edges) {
    if (n < 0) throw std::invalid_argument("graph: negative vertex count");
    Graph G;
    G.n = n;
    for (auto [i, j] : edges) {
        if (i < 0 || j < 0 || i >= n || j >= n) throw std::invalid_argument("graph: endpoint out of range");
        if (i == j) throw std::invalid_argument("graph: self-loop");
        G.edges.emplace_back(std::min(i, j), std::max(i, j));
    }
    std::sort(G.edges.begin(), G.edges.end());
    if (std::adjacent_find(G.edges.begin(), G.edges.end()) != G.edges.end())
        throw std::invalid_argument("graph: duplicate edge");
    return G;
}

bool Graph::adjacent(int i, int j) const {
    auto e = std::make_pair(std::min(i, j), std::max(i, j));
    return std::binary_search(edges.begin(), edges.end(), e);
}

Mat Graph::adjacency() const {
    Mat A = Mat::Zero(n, n);
    for (auto [i, j] : edges) A(i, j) = A(j, i) = 1.0;
    return A;
}

Graph complete_graph(int n) {
    std::vector<std::pair<int, int>> e;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) e.emplace_back(i, j);
    return Graph::make(n, e);
}

Graph cycle_graph(int n) {
    std::vector<std::pair<int, int>> e;
    for (int i = 0; i < n; ++i) e.emplace_back(i, (i + 1) % n);
    return Graph::make(n, e);
}

Graph path_graph(int n) {
    std::vector<std::pair<int, int>> e;
    for (int i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
    return Graph::make(n, e);
}

Graph edgeless_graph(int n) { return Graph::make(n, {}); }

Graph petersen_graph() {
    std::vector<std::pair<int, int>> e;
    for (int i = 0; i < 5; ++i) {
        e.emplace_back(i, (i + 1) % 5);          // outer cycle
        e.emplace_back(5 + i, 5 + (i + 2) % 5);  // inner pentagram
        e.emplace_back(i, 5 + i);                // spokes
    }
    return Graph::make(10, e);
}

Graph random_graph(int n, double p, Rng& rng) {
    std::vector<std::pair<int, int>> e;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (rng.uniform() < p) e.emplace_back(i, j);
    return Graph::make(n, e);
}

std::vector<std::pair<std::string, Graph>> graph_corpus(std::uint64_t seed) {
    std::vector<std::pair<std::string, Graph>> out;
    for (int n : {2, 3, 4, 5, 6}) out.emplace_back("complete_" + std::to_string(n), complete_graph(n));
    for (int n : {4, 5, 6, 7}) out.emplace_back("cycle_" + std::to_string(n), cycle_graph(n));
    for (int n : {3, 5, 8}) out.emplace_back("path_" + std::to_string(n), path_graph(n));
    out.emplace_back("edgeless_5", edgeless_graph(5));
    out.emplace_back("petersen", petersen_graph());
    Rng rng(seed);
    for (int k = 0; k < 8; ++k) {
        int n = 6 + k % 5;
        out.emplace_back("gnp_" + std::to_string(n) + "_" + std::to_string(k), random_graph(n, 0.5, rng));
    }
    return out;
}

namespace {

void clique_search(const std::vector<std::uint32_t>& nbr, std::uint32_t cand, int size, int& best) {
    if (cand == 0) {
        best = std::max(best, size);
        return;
    }
    while (cand) {
        if (size + std::popcount(cand) <= best) return;
        int v = std::countr_zero(cand);
        cand &= cand - 1;
        clique_search(nbr, cand & nbr[v], size + 1, best);
    }
}

}  // namespace

int omega_bruteforce(const Graph& G) {
    if (G.n > 20) throw std::invalid_argument("omega_bruteforce supports at most 20 vertices");
    if (G.n == 0) return 0;
    std::vector<std::uint32_t> nbr(G.n, 0);
    for (auto [i, j] : G.edges) {
        nbr[i] |= 1u << j;
        nbr[j] |= 1u << i;
    }
    int best = 0;
    clique_search(nbr, (G.n == 32 ? ~0u : (1u << G.n) - 1), 0, best);
    return best;
}

double versoc_lambda_formula(int omega, int K) { return 1.0 / omega - 1.0 / (K - 1); }

VersocInstance versoc_build(const Graph& G, int K) {
    if (K < 2 || K > G.n) throw std::invalid_argument("K must satisfy 2 <= K <= n");
    VersocInstance V;
    V.K = K;
    V.shift = 1.0 - 1.0 / (K - 1);
    const double shift = V.shift;
    auto edges = G.edges;
    const int n = G.n;
    // A(eta) = shift * eta - 2 sum_E A_ij eta A_ij with A_ij = (e_i e_j^T + e_j e_i^T) / 2
    auto op = [edges, shift](const Mat& E) {
        Mat out = shift * E;
        for (auto [i, j] : edges) {
            out(i, j) -= 0.5 * E(j, i);
            out(j, i) -= 0.5 * E(i, j);
            out(i, i) -= 0.5 * E(j, j);
            out(j, j) -= 0.5 * E(i, i);
        }
        return out;
    };
    V.f.kind = Objective::Kind::quadratic;
    V.f.m = V.f.n = n;
    V.f.value = [op](const Mat& X) { return inner(X, op(X)); };
    V.f.gradient = [op](const Mat& X) { return Mat(2.0 * op(X)); };
    V.f.hessian_apply = [op](const Mat&, const Mat& E) { return Mat(2.0 * op(E)); };
    V.f.description = "versoc(K=" + std::to_string(K) + ")";
    V.X0 = Mat::Zero(n, n);
    V.spec = RankSpec{1, n};
    return V;
}

namespace {

Vec project_simplex(const Vec& y) {
    Vec s = y;
    std::sort(s.data(), s.data() + s.size(), std::greater<double>());
    double cum = 0.0, theta = 0.0;
    for (int k = 0; k < s.size(); ++k) {
        cum += s(k);
        double t = (cum - 1.0) / (k + 1);
        if (k + 1 == s.size() || s(k + 1) <= t) {
            theta = t;
            break;
        }
    }
    return (y.array() - theta).max(0.0).matrix();
}

}  // namespace

VersocLambda versoc_lambda_numeric(const Graph& G, int K, std::uint64_t seed) {
    if (G.n > 12) throw std::invalid_argument("versoc_lambda_numeric supports at most 12 vertices");
    if (K < 2 || K > G.n) throw std::invalid_argument("K must satisfy 2 <= K <= n");
    const int n = G.n;
    Mat A = G.adjacency();
    VersocLambda out;
    double best = 0.0;
    for (std::uint32_t S = 1; S < (1u << n); ++S) {
        std::vector<int> idx;
        for (int i = 0; i < n; ++i)
            if (S >> i & 1u) idx.push_back(i);
        const int k = static_cast<int>(idx.size());
        // stationary point of 1/2 x^T A_S x on the face: A_S x = mu 1, 1^T x = 1
        Mat Kkt = Mat::Zero(k + 1, k + 1);
        for (int a = 0; a < k; ++a) {
            for (int b = 0; b < k; ++b) Kkt(a, b) = A(idx[a], idx[b]);
            Kkt(a, k) = -1.0;
            Kkt(k, a) = 1.0;
        }
        Vec rhs = Vec::Zero(k + 1);
        rhs(k) = 1.0;
        Eigen::FullPivLU<Mat> lu(Kkt);
        if (!lu.isInvertible()) continue;
        Vec sol = lu.solve(rhs);
        Vec x = sol.head(k);
        if ((x.array() <= 1e-12).any()) continue;
        ++out.supports;
        double val = 0.0;
        for (int a = 0; a < k; ++a)
            for (int b = a + 1; b < k; ++b) val += A(idx[a], idx[b]) * x(a) * x(b);
        best = std::max(best, val);
    }
    out.motzkin_straus = best;
    const double shift = 1.0 - 1.0 / (K - 1);
    out.lambda_enum = shift - 2.0 * best;

    // cross-check: multistart projected ascent on the simplex
    Rng rng(seed);
    double asc = 0.0;
    for (int start = 0; start < 32; ++start) {
        Vec x(n);
        for (int i = 0; i < n; ++i) x(i) = rng.uniform(0.0, 1.0);
        x = project_simplex(x);
        for (int it = 0; it < 2000; ++it) {
            Vec y = project_simplex(x + 0.2 * (A * x));
            if ((y - x).norm() < 1e-15) break;
            x = y;
        }
        asc = std::max(asc, 0.5 * x.dot(A * x));
    }
    out.lambda_ascent = shift - 2.0 * asc;
    return out;
}

FptasGap fptas_gap_check(const Graph& G, int K) {
    FptasGap g;
    g.lambda = versoc_lambda_numeric(G, K).lambda_enum;
    g.epsilon = 1.0 / (2.0 * K * (K - 1));
    g.clique = omega_bruteforce(G) >= K;
    g.separated = g.clique ? g.lambda + g.epsilon < 0 : g.lambda >= -1e-12;
    return g;
}

// ---------------------------------------------------------------------------

PgdTrace pgd_solve(const Objective& f, const RankSpec& spec, const Mat& X0, const PgdOptions& opt) {
    assert_finite(X0, "pgd_solve start");
    if (X0.rows() != f.m || X0.cols() != f.n) throw std::invalid_argument("start point shape differs from the objective");
    check_spec(X0, spec);
    PgdTrace T;
    Mat X = truncate_rank(X0, spec.r);
    double fx = f.value(X);
    T.values.push_back(fx);
    double alpha = opt.alpha0;
    for (int k = 0; k < opt.steps; ++k) {
        Mat g = f.gradient(X);
        bool accepted = false;
        Mat Xn;
        double fn = 0.0;
        for (int bt = 0; bt <= opt.max_backtracks; ++bt) {
            Xn = truncate_rank(X - alpha * g, spec.r);
            if ((Xn - X).norm() <= opt.tol * std::max(1.0, X.norm())) {
                T.X = X;
                T.converged = true;
                T.message = "converged";
                return T;
            }
            fn = f.value(Xn);
            if (std::isfinite(fn) && fn <= fx - opt.armijo_c / alpha * (Xn - X).squaredNorm()) {
                accepted = true;
                break;
            }
            alpha *= opt.shrink;
        }
        if (!accepted) {
            T.X = X;
            T.message = "no decrease after " + std::to_string(opt.max_backtracks) + " backtracks";
            return T;
        }
        double step = (Xn - X).norm();
        X = Xn;
        fx = fn;
        T.values.push_back(fx);
        T.step_norms.push_back(step);
        if (!std::isfinite(fx) || X.norm() > opt.blowup ||
            fx < T.values.front() - opt.blowup * (1.0 + std::abs(T.values.front()))) {
            T.X = X;
            T.diverged = true;
            T.message = "diverged: objective unbounded along the iterates";
            return T;
        }
        if (step <= opt.tol * std::max(1.0, X.norm())) {
            T.X = X;
            T.converged = true;
            T.message = "converged";
            return T;
        }
        alpha *= 2.0;  // uncapped growth lets unbounded problems run off quickly
    }
    T.X = X;
    T.message = "step budget exhausted";
    return T;
}

}  // namespace varigeo
