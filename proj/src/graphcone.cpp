#include "varigeo/graphcone.hpp"

#include "varigeo/tangent.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace varigeo {

namespace {

Mat hcat(std::initializer_list<const Mat*> parts, int rows) {
    int cols = 0;
    for (const Mat* p : parts) cols += static_cast<int>(p->cols());
    Mat out(rows, cols);
    int c = 0;
    for (const Mat* p : parts) {
        if (p->rows() != rows) throw std::invalid_argument("hcat: row mismatch");
        out.middleCols(c, p->cols()) = *p;
        c += static_cast<int>(p->cols());
    }
    return out;
}

// 2 x 2 block assembly with explicit sizes so empty blocks are allowed.
Mat blocks2(const Mat& a, const Mat& b, const Mat& c, const Mat& d, int r0, int r1, int c0, int c1) {
    Mat out(r0 + r1, c0 + c1);
    auto put = [&](const Mat& M, int i, int j, int nr, int nc) {
        if (M.rows() != nr || M.cols() != nc) throw std::invalid_argument("block shape mismatch");
        out.block(i, j, nr, nc) = M;
    };
    put(a, 0, 0, r0, c0);
    put(b, 0, c0, r0, c1);
    put(c, r0, 0, r1, c0);
    put(d, r0, c0, r1, c1);
    return out;
}

void expect_shape(const Mat& M, int r, int c, const char* name) {
    if (M.rows() != r || M.cols() != c) {
        std::ostringstream os;
        os << name << ": expected " << r << "x" << c << ", got " << M.rows() << "x" << M.cols();
        throw std::invalid_argument(os.str());
    }
}

Mat inv_diag(const Vec& v) { return v.cwiseInverse().asDiagonal(); }

// Left singular vectors spanning the complement of range(P) (P of numerical rank c).
Mat range_complement(const Mat& P, int c) {
    int a = static_cast<int>(P.rows());
    if (a == 0) return Mat(0, 0);
    if (P.cols() == 0 || c == 0) return Mat::Identity(a, a);
    Eigen::JacobiSVD<Mat> svd(P, Eigen::ComputeFullU);
    return svd.matrixU().rightCols(a - c);
}

double graph_scale(const GraphPoint& G) { return std::max({1.0, G.P.X.norm(), G.Y.norm()}); }

void add(std::vector<ConeViolation>& out, const std::string& name, double mag, double thr) {
    if (mag > thr) out.push_back({name, mag});
}

struct Dims {
    int m, n, k, r, s, ell, rl, rh, d, e;
    int J() const { return ell - rh; }
    int T() const { return rl - s; }
    int ky() const { return k - ell; }
};

Dims dims_of(const GraphPoint& G, const Stratification& S) {
    Dims D{G.m(), G.n(), G.k, G.r, G.s, G.ell, S.rl, S.rh, 0, 0};
    D.d = D.m - D.k + D.rh - D.rl;
    D.e = D.n - D.k + D.rh - D.rl;
    return D;
}

}  // namespace

// ---------------------------------------------------------------------------

GraphPoint make_graph_point(const Mat& X, const Mat& Y, int r, double tol) {
    if (X.rows() != Y.rows() || X.cols() != Y.cols()) throw std::invalid_argument("X and Y shapes differ");
    if (X.size() == 0) throw std::invalid_argument("empty matrices");
    assert_finite(X, "X");
    assert_finite(Y, "Y");
    GraphPoint G;
    G.k = static_cast<int>(std::min(X.rows(), X.cols()));
    if (r < 0 || r > G.k) throw std::invalid_argument("rank bound out of range");
    G.r = r;
    G.P = resolve_point(X);
    G.s = G.P.s;
    if (G.s > r) throw std::invalid_argument("rank(X) exceeds the bound");
    G.Y = Y;
    double sc = std::max({1.0, X.norm(), Y.norm()});
    double thr = tol * sc * sc;
    if ((Y.transpose() * X).norm() > thr || (X * Y.transpose()).norm() > thr)
        throw std::invalid_argument("Y is not normal to X (X^T Y or X Y^T nonzero)");
    int ms = G.m() - G.s, ns = G.n() - G.s;
    G.R = G.P.U_perp.transpose() * Y * G.P.V_perp;
    int rankR = 0;
    if (ms == 0 || ns == 0) {
        G.U_R = Mat(ms, 0);
        G.V_R = Mat(ns, 0);
        G.sigma_R = Vec(0);
        G.U_R_perp = Mat::Identity(ms, ms);
        G.V_R_perp = Mat::Identity(ns, ns);
    } else {
        MatrixPoint RP = resolve_point(G.R);
        rankR = RP.s;
        G.U_R = RP.U;
        G.V_R = RP.V;
        G.sigma_R = RP.sigma;
        G.U_R_perp = RP.U_perp;
        G.V_R_perp = RP.V_perp;
    }
    if (rankR > G.k - r) throw std::invalid_argument("rank(Y) exceeds k - r");
    G.ell = G.k - rankR;
    G.U_Y = G.P.U_perp * G.U_R;
    G.V_Y = G.P.V_perp * G.V_R;
    return G;
}

GraphPoint random_graph_point(int m, int n, int r, int s, int ell, Rng& rng) {
    int k = std::min(m, n);
    if (!(0 <= s && s <= r && r <= ell && ell <= k)) throw std::invalid_argument("need s <= r <= ell <= k");
    Mat Ub = rng.orthonormal(m, m), Vb = rng.orthonormal(n, n);
    auto spectrum = [&](int c) {
        Vec v(c);
        for (int i = 0; i < c; ++i) v(i) = rng.uniform(1.0, 3.0);
        std::sort(v.data(), v.data() + c, std::greater<double>());
        return v;
    };
    int ky = k - ell;
    Mat X = Ub.leftCols(s) * spectrum(s).asDiagonal() * Vb.leftCols(s).transpose();
    Mat Y = Ub.middleCols(s, ky) * spectrum(ky).asDiagonal() * Vb.middleCols(s, ky).transpose();
    return make_graph_point(X, Y, r);
}

// ---------------------------------------------------------------------------
// Tangent cone

GraphTangentCertificate graph_tangent_membership(const GraphPoint& G, const Mat& eta, const Mat& xi, double tol) {
    expect_shape(eta, G.m(), G.n(), "eta");
    expect_shape(xi, G.m(), G.n(), "xi");
    const auto& P = G.P;
    GraphTangentCertificate cert;
    cert.threshold = tol * std::max(1.0, eta.norm() + xi.norm()) * graph_scale(G) *
                     (G.s > 0 ? std::max(1.0, 1.0 / P.sigma(G.s - 1)) : 1.0);
    Mat B = P.U_perp.transpose() * eta * P.V * inv_diag(P.sigma);
    Mat C = (inv_diag(P.sigma) * P.U.transpose() * eta * P.V_perp).transpose();
    Mat K = P.U_perp.transpose() * eta * P.V_perp;
    Mat D = P.U_perp.transpose() * xi * P.V_perp;
    auto& v = cert.violations;
    double thr = cert.threshold;
    add(v, "xi_UV", (P.U.transpose() * xi * P.V).norm(), thr);
    add(v, "xi_UVperp", (P.U.transpose() * xi * P.V_perp + B.transpose() * G.R).norm(), thr);
    add(v, "xi_UperpV", (P.U_perp.transpose() * xi * P.V + G.R * C).norm(), thr);
    if (K.size() > 0) {
        Vec sk = singular_values(K);
        int budget = G.r - G.s;
        if (budget < sk.size()) add(v, "rank_K", sk(budget), thr);
        add(v, "KtR", (K.transpose() * G.R).norm(), thr);
        add(v, "RKt", (G.R * K.transpose()).norm(), thr);
        add(v, "KtDVRperp", (K.transpose() * D * G.V_R_perp).norm(), thr);
        add(v, "URperpDKt", (G.U_R_perp.transpose() * D * K.transpose()).norm(), thr);
        // D in the tangent cone of the rank-(k-r) set at R
        Mat DR = G.U_R_perp.transpose() * D * G.V_R_perp;
        int budgetD = (G.k - G.r) - static_cast<int>(G.sigma_R.size());
        if (DR.size() > 0) {
            Vec sd = singular_values(DR);
            if (budgetD < sd.size()) add(v, "D_tangent", sd(budgetD), thr);
        }
    }
    cert.member = v.empty();
    return cert;
}

std::pair<Mat, Mat> random_graph_tangent(const GraphPoint& G, Rng& rng) {
    const auto& P = G.P;
    int s = G.s, ms = G.m() - s, ns = G.n() - s;
    int a = static_cast<int>(G.U_R_perp.cols()), b = static_cast<int>(G.V_R_perp.cols());
    int ry = static_cast<int>(G.sigma_R.size());
    Mat A = rng.gaussian(s, s), B = rng.gaussian(ms, s), C = rng.gaussian(ns, s);
    int cK = std::min({G.r - s, a, b});
    Mat PK = rng.low_rank(a, b, cK);
    Mat K = G.U_R_perp * PK * G.V_R_perp.transpose();
    // D = fixed-rank tangent at R plus a rank <= ell - r piece off the range of K
    Mat D = G.U_R * rng.gaussian(ry, ry) * G.V_R.transpose() + G.U_R * rng.gaussian(ry, b) * G.V_R_perp.transpose() +
            G.U_R_perp * rng.gaussian(a, ry) * G.V_R.transpose();
    Mat UK = range_complement(PK, cK), VK = range_complement(PK.transpose(), cK);
    int cZ = std::min({G.ell - G.r, static_cast<int>(UK.cols()), static_cast<int>(VK.cols())});
    if (cZ > 0 && a > 0 && b > 0) {
        Mat Zp = rng.low_rank(static_cast<int>(UK.cols()), static_cast<int>(VK.cols()), cZ);
        D += G.U_R_perp * UK * Zp * VK.transpose() * G.V_R_perp.transpose();
    }
    Mat S = P.sigma.asDiagonal();
    Mat eta = P.U * A * P.V.transpose() + P.U_perp * B * S * P.V.transpose() +
              P.U * S * C.transpose() * P.V_perp.transpose() + P.U_perp * K * P.V_perp.transpose();
    Mat xi = P.U_perp * D * P.V_perp.transpose() - P.U * B.transpose() * G.R * P.V_perp.transpose() -
             P.U_perp * G.R * C * P.V.transpose();
    return {eta, xi};
}

// ---------------------------------------------------------------------------
// Frechet normal cone

namespace {

double z_admissibility(const GraphPoint& G, const Mat& Z) {
    if (G.s >= G.r || Z.size() == 0) return 0.0;
    return (G.U_R_perp.transpose() * Z * G.V_R_perp).norm();
}

// Distance of Zhat from the regular normal cone of the rank-(k-r) set at R.
double zhat_admissibility(const GraphPoint& G, const Mat& Zhat) {
    if (Zhat.size() == 0) return 0.0;
    if (G.ell == G.r) {
        Mat Pu = G.U_R_perp * G.U_R_perp.transpose(), Pv = G.V_R_perp * G.V_R_perp.transpose();
        return (Zhat - Pu * Zhat * Pv).norm();
    }
    return Zhat.norm();
}

}  // namespace

NormalPair frechet_normal_construct(const GraphPoint& G, const FrechetParams& p) {
    const auto& P = G.P;
    int s = G.s, m = G.m(), n = G.n(), ky = G.k - G.ell;
    expect_shape(p.A, s, s, "A");
    expect_shape(p.B1, ky, s, "B1");
    expect_shape(p.B2, m - s - ky, s, "B2");
    expect_shape(p.C1, s, ky, "C1");
    expect_shape(p.C2, s, n - s - ky, "C2");
    expect_shape(p.Z, m - s, n - s, "Z");
    expect_shape(p.Zhat, m - s, n - s, "Zhat");
    double thr = 1e-10 * std::max(1.0, p.Z.norm() + p.Zhat.norm());
    if (z_admissibility(G, p.Z) > thr) throw std::invalid_argument("Z is not tangent to the rank-(k-ell) manifold at R");
    if (zhat_admissibility(G, p.Zhat) > thr) throw std::invalid_argument("Zhat is not a regular normal at R");
    Mat S = P.sigma.asDiagonal(), SR = G.sigma_R.asDiagonal();
    NormalPair out;
    out.upsilon = P.U_perp * G.U_R * SR * p.C1.transpose() * P.V.transpose() +
                  P.U * p.B1.transpose() * SR * G.V_R.transpose() * P.V_perp.transpose() +
                  P.U_perp * p.Z * P.V_perp.transpose();
    out.omega = P.U * p.A * P.V.transpose() + P.U_perp * G.U_R * p.B1 * S * P.V.transpose() +
                P.U_perp * G.U_R_perp * p.B2 * P.V.transpose() +
                P.U * S * p.C1 * G.V_R.transpose() * P.V_perp.transpose() +
                P.U * p.C2 * G.V_R_perp.transpose() * P.V_perp.transpose() + P.U_perp * p.Zhat * P.V_perp.transpose();
    return out;
}

FrechetParams frechet_normal_extract(const GraphPoint& G, const NormalPair& v) {
    const auto& P = G.P;
    expect_shape(v.upsilon, G.m(), G.n(), "upsilon");
    expect_shape(v.omega, G.m(), G.n(), "omega");
    Mat Si = inv_diag(P.sigma);
    FrechetParams p;
    p.A = P.U.transpose() * v.omega * P.V;
    p.B1 = G.U_R.transpose() * P.U_perp.transpose() * v.omega * P.V * Si;
    p.B2 = G.U_R_perp.transpose() * P.U_perp.transpose() * v.omega * P.V;
    p.C1 = Si * P.U.transpose() * v.omega * P.V_perp * G.V_R;
    p.C2 = P.U.transpose() * v.omega * P.V_perp * G.V_R_perp;
    p.Z = P.U_perp.transpose() * v.upsilon * P.V_perp;
    p.Zhat = P.U_perp.transpose() * v.omega * P.V_perp;
    return p;
}

FrechetParams random_frechet_params(const GraphPoint& G, Rng& rng) {
    int s = G.s, m = G.m(), n = G.n(), ky = G.k - G.ell;
    FrechetParams p;
    p.A = rng.gaussian(s, s);
    p.B1 = rng.gaussian(ky, s);
    p.B2 = rng.gaussian(m - s - ky, s);
    p.C1 = rng.gaussian(s, ky);
    p.C2 = rng.gaussian(s, n - s - ky);
    p.Z = rng.gaussian(m - s, n - s);
    if (s < G.r && p.Z.size() > 0)
        p.Z -= G.U_R_perp * (G.U_R_perp.transpose() * p.Z * G.V_R_perp) * G.V_R_perp.transpose();
    p.Zhat = Mat::Zero(m - s, n - s);
    if (G.ell == G.r && p.Zhat.size() > 0)
        p.Zhat = G.U_R_perp * rng.gaussian(static_cast<int>(G.U_R_perp.cols()), static_cast<int>(G.V_R_perp.cols())) *
                 G.V_R_perp.transpose();
    return p;
}

FrechetCertificate frechet_normal_membership(const GraphPoint& G, const NormalPair& v, double tol) {
    const auto& P = G.P;
    expect_shape(v.upsilon, G.m(), G.n(), "upsilon");
    expect_shape(v.omega, G.m(), G.n(), "omega");
    FrechetCertificate cert;
    cert.threshold = tol * std::max(1.0, v.upsilon.norm() + v.omega.norm()) * graph_scale(G);
    double thr = cert.threshold;
    Mat S = P.sigma.asDiagonal();
    Mat Bu = P.U_perp.transpose() * v.upsilon * P.V, Cu = P.U.transpose() * v.upsilon * P.V_perp;
    Mat Bw = P.U_perp.transpose() * v.omega * P.V, Cw = P.U.transpose() * v.omega * P.V_perp;
    auto& out = cert.violations;
    add(out, "upsilon_UV", (P.U.transpose() * v.upsilon * P.V).norm(), thr);
    add(out, "B_coupling", (Bu * S - G.R * Cw.transpose()).norm(), thr);
    add(out, "C_coupling", (Cu.transpose() * S - G.R.transpose() * Bw).norm(), thr);
    add(out, "Z_tangent", z_admissibility(G, P.U_perp.transpose() * v.upsilon * P.V_perp), thr);
    add(out, "Zhat_normal", zhat_admissibility(G, P.U_perp.transpose() * v.omega * P.V_perp), thr);
    cert.member = out.empty();
    return cert;
}

// ---------------------------------------------------------------------------
// Stratifications and Theta

Stratification degenerate_stratification(const GraphPoint& G) { return make_stratification(G, G.s, G.ell); }

Stratification make_stratification(const GraphPoint& G, int rl, int rh, Rng* rng) {
    if (!(G.s <= rl && rl <= G.r && G.r <= rh && rh <= G.ell))
        throw std::invalid_argument("stratification needs s <= rl <= r <= rh <= ell");
    Mat WU = G.P.U_perp * G.U_R_perp, WV = G.P.V_perp * G.V_R_perp;
    if (rng) {
        WU = WU * rng->orthonormal(static_cast<int>(WU.cols()), static_cast<int>(WU.cols()));
        WV = WV * rng->orthonormal(static_cast<int>(WV.cols()), static_cast<int>(WV.cols()));
    }
    int t = rl - G.s, j = G.ell - rh;
    Stratification S;
    S.rl = rl;
    S.rh = rh;
    S.Ut = WU.leftCols(t);
    S.Ub = WU.middleCols(t, WU.cols() - t - j);
    S.UYt = WU.rightCols(j);
    S.Vt = WV.leftCols(t);
    S.Vb = WV.middleCols(t, WV.cols() - t - j);
    S.VYt = WV.rightCols(j);
    return S;
}

void check_stratification(const GraphPoint& G, const Stratification& S, double tol) {
    if (!(G.s <= S.rl && S.rl <= G.r && G.r <= S.rh && S.rh <= G.ell))
        throw std::invalid_argument("stratification needs s <= rl <= r <= rh <= ell");
    Dims D = dims_of(G, S);
    expect_shape(S.Ut, D.m, D.T(), "Ut");
    expect_shape(S.Ub, D.m, D.d, "Ub");
    expect_shape(S.UYt, D.m, D.J(), "UYt");
    expect_shape(S.Vt, D.n, D.T(), "Vt");
    expect_shape(S.Vb, D.n, D.e, "Vb");
    expect_shape(S.VYt, D.n, D.J(), "VYt");
    Mat U = hcat({&G.P.U, &S.Ut, &S.Ub, &G.U_Y, &S.UYt}, D.m);
    Mat V = hcat({&G.P.V, &S.Vt, &S.Vb, &G.V_Y, &S.VYt}, D.n);
    if ((U.transpose() * U - Mat::Identity(D.m, D.m)).norm() > tol * D.m ||
        (V.transpose() * V - Mat::Identity(D.n, D.n)).norm() > tol * D.n)
        throw std::invalid_argument("stratification bases are not an orthonormal completion");
}

Mat frak_D(const Vec& x, const Vec& y) {
    Mat D(x.size(), y.size());
    for (Eigen::Index j = 0; j < x.size(); ++j)
        for (Eigen::Index t = 0; t < y.size(); ++t) D(j, t) = x(j) / (x(j) + y(t));
    return D;
}

void check_generator(const ThetaGenerator& g) {
    auto check = [](const Vec& a, const Vec& p, const char* name) {
        if (a.size() != p.size()) throw std::invalid_argument(std::string(name) + ": base and exponent sizes differ");
        for (Eigen::Index j = 0; j < a.size(); ++j) {
            if (!(a(j) > 0) || !(p(j) > 0)) throw std::invalid_argument(std::string(name) + ": need positive entries");
            if (j > 0 && p(j) < p(j - 1)) throw std::invalid_argument(std::string(name) + ": exponents must not decrease");
            if (j > 0 && p(j) == p(j - 1) && a(j) > a(j - 1))
                throw std::invalid_argument(std::string(name) + ": sequence is not nonincreasing");
        }
    };
    check(g.a, g.p, "z1");
    check(g.b, g.q, "z2");
}

Mat theta_at(const ThetaGenerator& g, double i) {
    Vec z1(g.a.size()), z2(g.b.size());
    for (Eigen::Index j = 0; j < z1.size(); ++j) z1(j) = g.a(j) * std::pow(i, -g.p(j));
    for (Eigen::Index t = 0; t < z2.size(); ++t) z2(t) = g.b(t) * std::pow(i, -g.q(t));
    return frak_D(z1, z2);
}

Mat theta_limit(const ThetaGenerator& g) {
    check_generator(g);
    Mat D(g.a.size(), g.b.size());
    for (Eigen::Index j = 0; j < g.a.size(); ++j)
        for (Eigen::Index t = 0; t < g.b.size(); ++t) {
            if (g.p(j) == g.q(t))
                D(j, t) = g.a(j) / (g.a(j) + g.b(t));
            else
                D(j, t) = g.p(j) > g.q(t) ? 0.0 : 1.0;  // faster-decaying z1 sends the ratio to 0
        }
    return D;
}

std::string theta_necessary_violation(const Mat& D, double tol) {
    std::ostringstream os;
    for (Eigen::Index j = 0; j < D.rows(); ++j)
        for (Eigen::Index t = 0; t < D.cols(); ++t) {
            double x = D(j, t);
            if (!std::isfinite(x) || x < -tol || x > 1 + tol) {
                os << "entry (" << j << "," << t << ") = " << x << " outside [0,1]";
                return os.str();
            }
            if (j + 1 < D.rows() && D(j + 1, t) > x + tol) {
                os << "row monotonicity: D(" << j << "," << t << ") = " << x << " < D(" << j + 1 << "," << t
                   << ") = " << D(j + 1, t);
                return os.str();
            }
            if (t + 1 < D.cols() && D(j, t + 1) < x - tol) {
                os << "column monotonicity: D(" << j << "," << t << ") = " << x << " > D(" << j << "," << t + 1
                   << ") = " << D(j, t + 1);
                return os.str();
            }
        }
    return {};
}

std::optional<ThetaGenerator> theta_witness(const Mat& D, double tol) {
    if (!theta_necessary_violation(D, tol).empty()) return std::nullopt;
    const int J = static_cast<int>(D.rows()), T = static_cast<int>(D.cols()), N = J + T;
    auto cls = [&](int j, int t) { return D(j, t) <= tol ? 0 : (D(j, t) >= 1 - tol ? 1 : 2); };
    // integer levels: x_v >= x_u + w for each edge (u, v, w); longest path by Bellman-Ford
    struct Edge {
        int u, v, w;
    };
    std::vector<Edge> E;
    for (int j = 0; j < J; ++j)
        for (int t = 0; t < T; ++t) {
            int c = cls(j, t), pj = j, qt = J + t;
            if (c == 2) {
                E.push_back({qt, pj, 0});
                E.push_back({pj, qt, 0});
            } else if (c == 0) {
                E.push_back({qt, pj, 1});  // z1 decays faster
            } else {
                E.push_back({pj, qt, 1});
            }
        }
    for (int j = 0; j + 1 < J; ++j) E.push_back({j, j + 1, 0});
    for (int t = 0; t + 1 < T; ++t) E.push_back({J + t, J + t + 1, 0});
    std::vector<int> lvl(N, 0);
    bool changed = true;
    for (int it = 0; it <= N && changed; ++it) {
        changed = false;
        for (const auto& e : E)
            if (lvl[e.v] < lvl[e.u] + e.w) {
                lvl[e.v] = lvl[e.u] + e.w;
                changed = true;
            }
    }
    if (changed) return std::nullopt;  // positive cycle: no consistent levels

    // log-odds alpha_j - beta_t on interior entries, solved per connected component
    std::vector<double> val(N, 0.0);
    std::vector<char> seen(N, 0);
    for (int root = 0; root < N; ++root) {
        if (seen[root]) continue;
        seen[root] = 1;
        std::deque<int> q{root};
        while (!q.empty()) {
            int u = q.front();
            q.pop_front();
            for (int w = 0; w < N; ++w) {
                bool uj = u < J, wj = w < J;
                if (uj == wj) continue;
                int j = uj ? u : w, t = uj ? w - J : u - J;
                if (cls(j, t) != 2) continue;
                double lo = std::log(D(j, t) / (1 - D(j, t)));
                double expect = uj ? val[u] - lo : val[u] + lo;  // beta_t = alpha_j - lo
                if (!seen[w]) {
                    seen[w] = 1;
                    val[w] = expect;
                    q.push_back(w);
                } else if (std::abs(val[w] - expect) > 1e-7) {
                    return std::nullopt;
                }
            }
        }
    }
    ThetaGenerator g{Vec(J), Vec(J), Vec(T), Vec(T)};
    for (int j = 0; j < J; ++j) {
        g.a(j) = std::exp(val[j]);
        g.p(j) = 1.0 + lvl[j];
    }
    for (int t = 0; t < T; ++t) {
        g.b(t) = std::exp(val[J + t]);
        g.q(t) = 1.0 + lvl[J + t];
    }
    try {
        check_generator(g);
        if (D.size() > 0 && (theta_limit(g) - D).cwiseAbs().maxCoeff() > std::max(tol, 1e-7) * 10)
            return std::nullopt;
    } catch (const std::invalid_argument&) {
        return std::nullopt;
    }
    return g;
}

// ---------------------------------------------------------------------------
// Mordukhovich normal cone

namespace {

struct Frames {
    Mat Up, Ub, UYp, Vp, Vb, VYp;
};

Frames frames(const GraphPoint& G, const Stratification& S) {
    Frames F;
    F.Up = hcat({&G.P.U, &S.Ut}, G.m());
    F.Ub = S.Ub;
    F.UYp = hcat({&G.U_Y, &S.UYt}, G.m());
    F.Vp = hcat({&G.P.V, &S.Vt}, G.n());
    F.Vb = S.Vb;
    F.VYp = hcat({&G.V_Y, &S.VYt}, G.n());
    return F;
}

// The four coupled corner blocks for given singular values (Sigma, Sigma_Y) and
// optional finite-index corrections.
struct Corners {
    Mat Bu, Cu, Bw, Cw;
};

NormalPair assemble(const Frames& F, const MordukhovichParams& p, const Corners& c) {
    NormalPair out;
    out.upsilon = F.Up * c.Bu * F.VYp.transpose() + F.Ub * p.Z1 * F.Vb.transpose() +
                  F.Ub * p.Z2 * F.VYp.transpose() + F.UYp * c.Cu * F.Vp.transpose() +
                  F.UYp * p.Z3 * F.Vb.transpose() + F.UYp * p.Z4 * F.VYp.transpose();
    out.omega = F.Up * p.A * F.Vp.transpose() + F.Up * p.C * F.Vb.transpose() + F.Up * c.Cw * F.VYp.transpose() +
                F.Ub * p.B * F.Vp.transpose() + F.UYp * c.Bw * F.Vp.transpose() + F.Ub * p.Zhat * F.Vb.transpose();
    return out;
}

void check_param_shapes(const Dims& D, const MordukhovichParams& p) {
    expect_shape(p.A, D.rl, D.rl, "A");
    expect_shape(p.B, D.d, D.rl, "B");
    expect_shape(p.C, D.rl, D.e, "C");
    expect_shape(p.G1, D.ky(), D.s, "G1");
    expect_shape(p.G2, D.s, D.ky(), "G2");
    expect_shape(p.E1w, D.J(), D.s, "E1w");
    expect_shape(p.E2w, D.s, D.J(), "E2w");
    expect_shape(p.E1v, D.T(), D.ky(), "E1v");
    expect_shape(p.E2v, D.ky(), D.T(), "E2v");
    expect_shape(p.F1v, D.T(), D.J(), "F1v");
    expect_shape(p.F1w, D.J(), D.T(), "F1w");
    expect_shape(p.F2v, D.J(), D.T(), "F2v");
    expect_shape(p.F2w, D.T(), D.J(), "F2w");
    expect_shape(p.Z1, D.d, D.e, "Z1");
    expect_shape(p.Z2, D.d, D.k - D.rh, "Z2");
    expect_shape(p.Z3, D.k - D.rh, D.e, "Z3");
    expect_shape(p.Z4, D.k - D.rh, D.k - D.rh, "Z4");
    expect_shape(p.Zhat, D.d, D.e, "Zhat");
}

double params_norm(const MordukhovichParams& p) {
    double t = 0;
    for (const Mat* M : {&p.A, &p.B, &p.C, &p.G1, &p.G2, &p.E1v, &p.E1w, &p.E2v, &p.E2w, &p.F1v, &p.F1w, &p.F2v,
                         &p.F2w, &p.Z1, &p.Z2, &p.Z3, &p.Z4, &p.Zhat})
        t += M->squaredNorm();
    return std::sqrt(t);
}

}  // namespace

MordukhovichParams zero_mordukhovich_params(const GraphPoint& G, const Stratification& S) {
    check_stratification(G, S);
    Dims D = dims_of(G, S);
    int ry = D.k - D.rh;
    MordukhovichParams p;
    p.A = Mat::Zero(D.rl, D.rl);
    p.B = Mat::Zero(D.d, D.rl);
    p.C = Mat::Zero(D.rl, D.e);
    p.G1 = Mat::Zero(D.ky(), D.s);
    p.G2 = Mat::Zero(D.s, D.ky());
    p.E1w = Mat::Zero(D.J(), D.s);
    p.E2w = Mat::Zero(D.s, D.J());
    p.E1v = Mat::Zero(D.T(), D.ky());
    p.E2v = Mat::Zero(D.ky(), D.T());
    p.F1v = Mat::Zero(D.T(), D.J());
    p.F1w = Mat::Zero(D.J(), D.T());
    p.F2v = Mat::Zero(D.J(), D.T());
    p.F2w = Mat::Zero(D.T(), D.J());
    p.Z1 = Mat::Zero(D.d, D.e);
    p.Z2 = Mat::Zero(D.d, ry);
    p.Z3 = Mat::Zero(ry, D.e);
    p.Z4 = Mat::Zero(ry, ry);
    p.Zhat = Mat::Zero(D.d, D.e);
    return p;
}

MordukhovichParams random_mordukhovich_params(const GraphPoint& G, const Stratification& S, const Mat& Dth,
                                              Rng& rng) {
    MordukhovichParams p = zero_mordukhovich_params(G, S);
    Dims D = dims_of(G, S);
    expect_shape(Dth, D.J(), D.T(), "D");
    for (Mat* M : {&p.A, &p.B, &p.C, &p.G1, &p.G2, &p.E1v, &p.E1w, &p.E2v, &p.E2w, &p.Z2, &p.Z3, &p.Z4})
        *M = rng.gaussian(static_cast<int>(M->rows()), static_cast<int>(M->cols()));
    if (D.rl == D.r) p.Z1 = rng.gaussian(D.d, D.e);
    if (D.rh == D.r) p.Zhat = rng.gaussian(D.d, D.e);
    for (int j = 0; j < D.J(); ++j)
        for (int t = 0; t < D.T(); ++t) {
            double d = Dth(j, t);
            if (d < 1.0 - 1e-12) {
                p.F1w(j, t) = rng.normal();
                p.F1v(t, j) = d / (1 - d) * p.F1w(j, t);
                p.F2w(t, j) = rng.normal();
                p.F2v(j, t) = d / (1 - d) * p.F2w(t, j);
            } else {
                p.F1v(t, j) = rng.normal();
                p.F2v(j, t) = rng.normal();
            }
        }
    return p;
}

namespace {

Corners limit_corners(const GraphPoint& G, const Dims& D, const MordukhovichParams& p) {
    Mat Si = inv_diag(G.P.sigma), SY = G.sigma_R.asDiagonal();
    Corners c;
    c.Bu = blocks2(Si * p.G1.transpose() * SY, Mat::Zero(D.s, D.J()), p.E1v, p.F1v, D.s, D.T(), D.ky(), D.J());
    c.Cu = blocks2(SY * p.G2.transpose() * Si, p.E2v, Mat::Zero(D.J(), D.s), p.F2v, D.ky(), D.J(), D.s, D.T());
    c.Bw = blocks2(p.G1, Mat::Zero(D.ky(), D.T()), p.E1w, p.F1w, D.ky(), D.J(), D.s, D.T());
    c.Cw = blocks2(p.G2, p.E2w, Mat::Zero(D.T(), D.ky()), p.F2w, D.s, D.T(), D.ky(), D.J());
    return c;
}

double coupling_residual(const Mat& Dth, const MordukhovichParams& p) {
    Mat ones = Mat::Ones(Dth.rows(), Dth.cols());
    Mat r1 = Dth.cwiseProduct(p.F1w) + (Dth - ones).cwiseProduct(p.F1v.transpose());
    Mat r2 = Dth.transpose().cwiseProduct(p.F2w) + (Dth - ones).transpose().cwiseProduct(p.F2v.transpose());
    return std::sqrt(r1.squaredNorm() + r2.squaredNorm());
}

}  // namespace

NormalPair mordukhovich_construct(const GraphPoint& G, const Stratification& S, const MordukhovichParams& p,
                                  const ThetaCandidate& theta) {
    check_stratification(G, S);
    Dims D = dims_of(G, S);
    check_param_shapes(D, p);
    expect_shape(theta.D, D.J(), D.T(), "theta.D");
    std::string bad = theta_necessary_violation(theta.D);
    if (!bad.empty()) throw std::invalid_argument("theta: " + bad);
    if (theta.generator && (theta_limit(*theta.generator) - theta.D).norm() > 1e-9)
        throw std::invalid_argument("theta generator does not converge to D");
    double thr = 1e-10 * std::max(1.0, params_norm(p));
    if (coupling_residual(theta.D, p) > thr) throw std::invalid_argument("F blocks violate the theta coupling");
    if (D.rl < D.r && p.Z1.norm() > thr) throw std::invalid_argument("Z1 must vanish when rl < r");
    if (D.rh > D.r && p.Zhat.norm() > thr) throw std::invalid_argument("Zhat must vanish when rh > r");
    return assemble(frames(G, S), p, limit_corners(G, D, p));
}

WitnessTerm mordukhovich_witness(const GraphPoint& G, const Stratification& S, const MordukhovichParams& p,
                                 const ThetaCandidate& theta, double i) {
    if (!theta.generator) throw std::invalid_argument("witness sequence needs a theta generator");
    if (!(i >= 1)) throw std::invalid_argument("sequence index must be >= 1");
    NormalPair limit = mordukhovich_construct(G, S, p, theta);
    Dims D = dims_of(G, S);
    const auto& g = *theta.generator;
    Vec z1(D.J()), z2(D.T());
    for (int j = 0; j < D.J(); ++j) z1(j) = g.a(j) * std::pow(i, -g.p(j));
    for (int t = 0; t < D.T(); ++t) z2(t) = g.b(t) * std::pow(i, -g.q(t));
    Mat Di = frak_D(z1, z2);

    Mat Si = inv_diag(G.P.sigma), SY = G.sigma_R.asDiagonal(), SYi = inv_diag(G.sigma_R);
    Mat Z1d = z1.asDiagonal(), Z2d = z2.asDiagonal();
    Mat F1w = p.F1w, F1v = p.F1v, F2w = p.F2w, F2v = p.F2v;
    for (int j = 0; j < D.J(); ++j)
        for (int t = 0; t < D.T(); ++t) {
            double di = Di(j, t);
            if (theta.D(j, t) < 1.0 - 1e-12) {
                F1v(t, j) = di / (1 - di) * p.F1w(j, t);
                F2v(j, t) = di / (1 - di) * p.F2w(t, j);
            } else {
                F1w(j, t) = (1 - di) / di * p.F1v(t, j);
                F2w(t, j) = (1 - di) / di * p.F2v(j, t);
            }
        }
    Corners c;
    c.Bw = blocks2(p.G1, SYi * p.E1v.transpose() * Z2d, p.E1w, F1w, D.ky(), D.J(), D.s, D.T());
    c.Bu = blocks2(Si * p.G1.transpose() * SY, Si * p.E1w.transpose() * Z1d, p.E1v, F1v, D.s, D.T(), D.ky(), D.J());
    c.Cw = blocks2(p.G2, p.E2w, Z2d * p.E2v.transpose() * SYi, F2w, D.s, D.T(), D.ky(), D.J());
    c.Cu = blocks2(SY * p.G2.transpose() * Si, p.E2v, Z1d * p.E2w.transpose() * Si, F2v, D.ky(), D.J(), D.s, D.T());

    WitnessTerm w;
    w.i = i;
    w.X = G.P.X + S.Ut * Z2d * S.Vt.transpose();
    w.Y = G.Y + S.UYt * Z1d * S.VYt.transpose();
    w.normal = assemble(frames(G, S), p, c);
    w.gap = (w.X - G.P.X).norm() + (w.Y - G.Y).norm() + (w.normal.upsilon - limit.upsilon).norm() +
            (w.normal.omega - limit.omega).norm();
    try {
        GraphPoint Gi = make_graph_point(w.X, w.Y, G.r);
        w.frechet_member = frechet_normal_membership(Gi, w.normal).member;
    } catch (const std::invalid_argument&) {
        w.frechet_member = false;
    }
    return w;
}

std::string to_string(ThetaVerdict v) {
    switch (v) {
        case ThetaVerdict::member_witnessed: return "member_witnessed";
        case ThetaVerdict::undetermined: return "undetermined";
        case ThetaVerdict::rejected: return "rejected";
    }
    return "rejected";
}

MordukhovichCertificate mordukhovich_verify(const GraphPoint& G, const Stratification& S, const NormalPair& v,
                                            double tol) {
    check_stratification(G, S);
    expect_shape(v.upsilon, G.m(), G.n(), "upsilon");
    expect_shape(v.omega, G.m(), G.n(), "omega");
    Dims D = dims_of(G, S);
    Frames F = frames(G, S);
    MordukhovichCertificate cert;
    const double thr = tol * std::max(1.0, v.upsilon.norm() + v.omega.norm()) * graph_scale(G);
    auto& out = cert.violations;
    auto blk = [](const Mat& M, const Mat& Ua, const Mat& Vb) -> Mat { return Ua.transpose() * M * Vb; };

    add(out, "upsilon(1,1)", blk(v.upsilon, F.Up, F.Vp).norm(), thr);
    add(out, "upsilon(1,2)", blk(v.upsilon, F.Up, F.Vb).norm(), thr);
    add(out, "upsilon(2,1)", blk(v.upsilon, F.Ub, F.Vp).norm(), thr);
    add(out, "omega(2,3)", blk(v.omega, F.Ub, F.VYp).norm(), thr);
    add(out, "omega(3,2)", blk(v.omega, F.UYp, F.Vb).norm(), thr);
    add(out, "omega(3,3)", blk(v.omega, F.UYp, F.VYp).norm(), thr);

    auto& p = cert.blocks;
    Mat Bu = blk(v.upsilon, F.Up, F.VYp), Cu = blk(v.upsilon, F.UYp, F.Vp);
    Mat Bw = blk(v.omega, F.UYp, F.Vp), Cw = blk(v.omega, F.Up, F.VYp);
    p.A = blk(v.omega, F.Up, F.Vp);
    p.B = blk(v.omega, F.Ub, F.Vp);
    p.C = blk(v.omega, F.Up, F.Vb);
    p.Zhat = blk(v.omega, F.Ub, F.Vb);
    p.Z1 = blk(v.upsilon, F.Ub, F.Vb);
    p.Z2 = blk(v.upsilon, F.Ub, F.VYp);
    p.Z3 = blk(v.upsilon, F.UYp, F.Vb);
    p.Z4 = blk(v.upsilon, F.UYp, F.VYp);
    // corner splits: s | rl-s rows of U+, k-ell | ell-rh rows of U_Y+
    const int s = D.s, T = D.T(), J = D.J(), ky = D.ky();
    p.G1 = Bw.topLeftCorner(ky, s);
    p.E1w = Bw.bottomLeftCorner(J, s);
    p.F1w = Bw.bottomRightCorner(J, T);
    p.G2 = Cw.topLeftCorner(s, ky);
    p.E2w = Cw.topRightCorner(s, J);
    p.F2w = Cw.bottomRightCorner(T, J);
    p.E1v = Bu.bottomLeftCorner(T, ky);
    p.F1v = Bu.bottomRightCorner(T, J);
    p.E2v = Cu.topRightCorner(ky, T);
    p.F2v = Cu.bottomRightCorner(J, T);

    add(out, "J_omega_B", Bw.topRightCorner(ky, T).norm(), thr);
    add(out, "J_omega_C", Cw.bottomLeftCorner(T, ky).norm(), thr);
    add(out, "J_upsilon_B", Bu.topRightCorner(s, J).norm(), thr);
    add(out, "J_upsilon_C", Cu.bottomLeftCorner(J, s).norm(), thr);
    Mat Sg = G.P.sigma.asDiagonal(), SY = G.sigma_R.asDiagonal();
    add(out, "G1_coupling", (Sg * Bu.topLeftCorner(s, ky) - p.G1.transpose() * SY).norm(), thr);
    add(out, "G2_coupling", (Cu.topLeftCorner(ky, s) * Sg - SY * p.G2.transpose()).norm(), thr);
    if (D.rl < D.r) add(out, "Z1", p.Z1.norm(), thr);
    if (D.rh > D.r) add(out, "Zhat", p.Zhat.norm(), thr);

    // Solve D entrywise from both couplings: D (Fw + Fv^T) = Fv^T.
    const double nan = std::numeric_limits<double>::quiet_NaN();
    cert.D_solved = Mat::Constant(J, T, nan);
    Mat slack = Mat::Zero(J, T);
    for (int j = 0; j < J; ++j)
        for (int t = 0; t < T; ++t) {
            double cand[2], sl[2];
            int nc = 0;
            const double a[2] = {p.F1w(j, t), p.F2w(t, j)}, b[2] = {p.F1v(t, j), p.F2v(j, t)};
            for (int e = 0; e < 2; ++e) {
                double den = a[e] + b[e];
                if (std::abs(den) > thr) {
                    cand[nc] = b[e] / den;
                    sl[nc] = 1e-9 + 4 * thr / std::abs(den);
                    ++nc;
                } else if (std::abs(b[e]) > thr) {
                    std::ostringstream os;
                    os << "theta_coupling(" << j << "," << t << ")";
                    out.push_back({os.str(), std::abs(b[e])});
                    cert.diagnostics.push_back(os.str() + ": Fw = -Fv^T != 0 admits no D");
                }
            }
            if (nc == 2 && std::abs(cand[0] - cand[1]) > sl[0] + sl[1]) {
                std::ostringstream os;
                os << "theta_conflict(" << j << "," << t << ")";
                out.push_back({os.str(), std::abs(cand[0] - cand[1])});
                cert.diagnostics.push_back(os.str() + ": the two couplings ask for different D entries");
            }
            if (nc > 0) {
                cert.D_solved(j, t) = cand[0];
                slack(j, t) = sl[0];
            }
        }
    // interval propagation over the determined entries
    cert.D_completed = Mat::Zero(J, T);
    for (int j = 0; j < J; ++j)
        for (int t = 0; t < T; ++t) {
            double x = cert.D_solved(j, t);
            if (!std::isnan(x) && (x < -slack(j, t) || x > 1 + slack(j, t))) {
                std::ostringstream os;
                os << "theta_range(" << j << "," << t << ")";
                out.push_back({os.str(), x});
                cert.diagnostics.push_back(os.str() + ": solved entry " + std::to_string(x) + " outside [0,1]");
            }
        }
    for (int j = 0; j < J; ++j)
        for (int t = 0; t < T; ++t) {
            double lo = 0.0, hi = 1.0;
            for (int j2 = 0; j2 < J; ++j2)
                for (int t2 = 0; t2 < T; ++t2) {
                    double y = cert.D_solved(j2, t2);
                    if (std::isnan(y)) continue;
                    if (j2 >= j && t2 <= t) lo = std::max(lo, y - slack(j2, t2));
                    if (j2 <= j && t2 >= t) hi = std::min(hi, y + slack(j2, t2));
                }
            double x = cert.D_solved(j, t);
            cert.D_completed(j, t) = std::isnan(x) ? std::clamp(lo, 0.0, 1.0) : std::clamp(x, 0.0, 1.0);
            if (lo > hi) {
                std::ostringstream os;
                os << "theta_monotonicity(" << j << "," << t << ")";
                out.push_back({os.str(), lo - hi});
                std::ostringstream why;
                why << os.str() << ": needs D >= " << lo << " from entries below/left and D <= " << hi
                    << " from entries above/right";
                cert.diagnostics.push_back(why.str());
            }
        }
    // free entries were set to their lower bounds; repair the determined ones so
    // the completion is exactly monotone before searching for a generator
    for (int j = J - 1; j >= 0; --j)
        for (int t = 0; t < T; ++t) {
            double& x = cert.D_completed(j, t);
            if (j + 1 < J) x = std::max(x, cert.D_completed(j + 1, t));
            if (t > 0) x = std::max(x, cert.D_completed(j, t - 1));
        }

    cert.member = out.empty();
    if (!cert.member) {
        cert.verdict = ThetaVerdict::rejected;
        for (const auto& e : out)
            if (e.name.rfind("theta", 0) != 0) cert.diagnostics.push_back("block " + e.name + " violates its rule");
        return cert;
    }
    cert.generator = theta_witness(cert.D_completed, 1e-9);
    cert.verdict = cert.generator ? ThetaVerdict::member_witnessed : ThetaVerdict::undetermined;
    if (!cert.generator)
        cert.diagnostics.push_back("necessary conditions hold but no generating sequence was found for D");
    return cert;
}

MordukhovichCertificate coderivative_apply(const GraphPoint& G, const Stratification& S, const Mat& omega_star,
                                           const Mat& upsilon_star, double tol) {
    return mordukhovich_verify(G, S, NormalPair{upsilon_star, -omega_star}, tol);
}

HadamardCheck hadamard_identity_check(const Vec& b, const Vec& q, const Mat& B) {
    if (B.rows() != b.size() || B.cols() != q.size()) throw std::invalid_argument("hadamard: shape mismatch");
    auto ordered = [](const Vec& x) {
        for (Eigen::Index i = 0; i < x.size(); ++i)
            if (!(x(i) > 0) || (i > 0 && x(i) > x(i - 1))) return false;
        return true;
    };
    if (!ordered(b) || !ordered(q)) throw std::invalid_argument("hadamard: b and q must be positive and nonincreasing");
    HadamardCheck h;
    h.Q = b.asDiagonal() * B * q.cwiseInverse().asDiagonal();
    Mat Dm = frak_D(b, q);
    Mat ones = Mat::Ones(Dm.rows(), Dm.cols());
    h.residual = (Dm.cwiseProduct(B) + (Dm - ones).cwiseProduct(h.Q)).norm();
    return h;
}

// ---------------------------------------------------------------------------

BilevelReport bilevel_residual(const BilevelInstance& inst, const Mat& X, const Mat& Y, int r,
                               const BilevelMultipliers& mult, const NormalPair& cone, const Stratification& S,
                               double tol) {
    const int q = inst.q, p = inst.p, m = inst.m, n = inst.n, mn = m * n;
    if (inst.grad_x_L.size() != q || inst.G.size() != p || mult.lambda.size() != p)
        throw std::invalid_argument("bilevel: vector sizes mismatch");
    expect_shape(inst.grad_X_L, m, n, "grad_X_L");
    expect_shape(inst.grad_G, q, p, "grad_G");
    expect_shape(inst.Jx_gradxF, q, mn, "Jx_gradxF");
    expect_shape(inst.JX_gradXF, mn, mn, "JX_gradXF");
    expect_shape(inst.grad_X_F, m, n, "grad_X_F");
    expect_shape(X, m, n, "X");
    expect_shape(mult.delta, m, n, "delta");
    GraphPoint G = make_graph_point(X, Y, r);
    Vec dv = Eigen::Map<const Vec>(mult.delta.data(), mn);

    BilevelReport rep;
    rep.r_x = (mult.mu * inst.grad_x_L + inst.grad_G * mult.lambda + inst.Jx_gradxF * dv).norm();
    Vec hd = inst.JX_gradXF * dv;
    rep.r_X = (mult.mu * inst.grad_X_L + Eigen::Map<const Mat>(hd.data(), m, n) + cone.omega).norm();
    rep.r_delta = (mult.delta + cone.upsilon).norm();
    rep.r_comp = std::abs(inst.G.dot(mult.lambda));
    rep.r_pair = (Y + inst.grad_X_F).norm();
    rep.min_lambda = p > 0 ? mult.lambda.minCoeff() : 0.0;
    rep.nontrivial = std::abs(mult.mu) + mult.lambda.norm() + mult.delta.norm() > tol;
    auto cert = mordukhovich_verify(G, S, cone, tol);
    rep.cone_member = cert.member;
    rep.cone_verdict = cert.verdict;
    double sc = std::max({1.0, std::abs(mult.mu), mult.delta.norm(), cone.omega.norm()});
    double thr = tol * sc;
    rep.pass = rep.r_x <= thr && rep.r_X <= thr && rep.r_delta <= thr && rep.r_comp <= thr && rep.r_pair <= thr &&
               rep.min_lambda >= -tol && mult.mu >= 0 && rep.nontrivial && rep.cone_member;
    return rep;
}

}  // namespace varigeo
