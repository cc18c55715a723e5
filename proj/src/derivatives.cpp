#include "varigeo/derivatives.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace varigeo {

namespace {

using Idx = std::vector<int>;

Idx range(int a, int b) {  // [a, b)
    Idx v;
    for (int i = a; i < b; ++i) v.push_back(i);
    return v;
}

Idx zero_based(const Idx& one_based) {
    Idx v(one_based.size());
    for (size_t i = 0; i < v.size(); ++i) v[i] = one_based[i] - 1;
    return v;
}

Mat sub(const Mat& M, const Idx& rows, const Idx& cols) {
    Mat out(rows.size(), cols.size());
    for (size_t i = 0; i < rows.size(); ++i)
        for (size_t j = 0; j < cols.size(); ++j) out(i, j) = M(rows[i], cols[j]);
    return out;
}

// Groups consecutive entries of a non-increasing sequence whose gap is <= tol.
// Gaps in (tol, 2 tol) are reported as ambiguous.
std::vector<Idx> cluster_desc(const Vec& v, double tol, bool& ambiguous) {
    std::vector<Idx> groups;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i == 0 || v(i - 1) - v(i) > tol) {
            if (i > 0 && v(i - 1) - v(i) < 2 * tol) ambiguous = true;
            groups.emplace_back();
        }
        groups.back().push_back(static_cast<int>(i));
    }
    return groups;
}

double level_mean(const Vec& v, const Idx& g) {
    double acc = 0;
    for (int i : g) acc += v(i);
    return acc / static_cast<double>(g.size());
}

// Rotated singular-value frame with m <= n.
struct SvdFrame {
    int m = 0, n = 0, s = 0;
    bool transposed = false;
    Mat Ub, Vb;
    Vec sig;  // s positive values
    double eta_scale = 0;

    Mat rotate(const Mat& A) const {
        return transposed ? Mat(Ub.transpose() * A.transpose() * Vb)
                          : Mat(Ub.transpose() * A * Vb);
    }
};

SvdFrame make_frame(const MatrixPoint& P, const Mat& eta) {
    if (eta.rows() != P.rows() || eta.cols() != P.cols())
        throw std::invalid_argument("direction shape does not match base point");
    assert_finite(eta, "direction");
    SvdFrame F;
    F.transposed = P.rows() > P.cols();
    F.s = P.s;
    F.sig = P.sigma;
    if (!F.transposed) {
        F.m = P.rows();
        F.n = P.cols();
        F.Ub = P.Ubar();
        F.Vb = P.Vbar();
    } else {
        F.m = P.cols();
        F.n = P.rows();
        F.Ub = P.Vbar();
        F.Vb = P.Ubar();
    }
    F.eta_scale = eta.norm();
    return F;
}

struct SvdData {
    SvdFrame F;
    IndexPartition part;
    Mat eb;
    std::vector<Vec> theta;       // eigenvalues of sym(eb_kk), k < t
    std::vector<Mat> Qk;          // eigenvectors, k < t
    Vec beta_sv;                  // singular values of eb(beta, beta_hat)
    Mat Qb, Qh;                   // full singular vector bases
    std::vector<Idx> beta_groups; // positive groups then the zero group
};

void fill_maps(IndexPartition& part) {
    const int m = part.m;
    part.q_a.assign(m, 0);
    part.l.assign(m, 0);
    part.q_b.assign(m, 0);
    part.l_prime.assign(m, 0);
    for (size_t k = 0; k < part.alpha.size(); ++k) {
        for (size_t p = 0; p < part.alpha[k].size(); ++p) {
            int i = part.alpha[k][p];
            part.q_a[i - 1] = static_cast<int>(k) + 1;
            part.l[i - 1] = i - part.kappa[k];
        }
    }
    for (int i = 1; i <= m; ++i) {
        int k = part.q_a[i - 1] - 1;
        int li = part.l[i - 1];
        const auto& groups = part.sub[k];
        for (size_t j = 0; j < groups.size(); ++j) {
            auto it = std::find(groups[j].begin(), groups[j].end(), li);
            if (it != groups[j].end()) {
                part.q_b[i - 1] = static_cast<int>(j) + 1;
                part.l_prime[i - 1] = li - part.kappa_sub[k][j];
                break;
            }
        }
    }
}

SvdData build_svd(const MatrixPoint& P, const Mat& eta, double cluster_tol) {
    if (!(cluster_tol > 0)) throw std::invalid_argument("cluster_tol must be positive");
    SvdData D;
    D.F = make_frame(P, eta);
    const SvdFrame& F = D.F;
    IndexPartition& part = D.part;
    part.m = F.m;
    part.n = F.n;
    part.s = F.s;
    part.transposed = F.transposed;
    D.eb = F.rotate(eta);

    double s1 = F.s ? F.sig(0) : 0.0;
    bool amb1 = false;
    std::vector<Idx> lv = cluster_desc(F.sig, cluster_tol * s1, amb1);
    if (amb1) {
        part.ambiguous = true;
        part.diagnostics.push_back("singular-value gap inside (cluster_tol, 2 cluster_tol)");
    }
    part.t = static_cast<int>(lv.size());
    part.kappa.assign(1, 0);
    for (const Idx& g : lv) {
        part.mu.push_back(level_mean(F.sig, g));
        Idx one;
        for (int i : g) one.push_back(i + 1);
        part.alpha.push_back(one);
        part.kappa.push_back(part.kappa.back() + static_cast<int>(g.size()));
    }
    Idx beta;
    for (int i = F.s + 1; i <= F.m; ++i) beta.push_back(i);
    part.alpha.push_back(beta);
    part.kappa.push_back(F.m);
    for (int i = F.m + 1; i <= F.n; ++i) part.beta0.push_back(i);
    for (int i = F.s + 1; i <= F.n; ++i) part.beta_hat.push_back(i);

    const double sub_tol = cluster_tol * std::max(F.eta_scale, 1e-300);
    for (int k = 0; k < part.t; ++k) {
        Idx a = zero_based(part.alpha[k]);
        Vec th;
        Mat Q;
        eig_desc(sym(sub(D.eb, a, a)), th, Q);
        bool amb = false;
        std::vector<Idx> g = cluster_desc(th, sub_tol, amb);
        if (amb) {
            part.ambiguous = true;
            part.diagnostics.push_back("second-level eigenvalue gap ambiguous in group " +
                                       std::to_string(k + 1));
        }
        std::vector<Idx> g1;
        std::vector<double> levels;
        std::vector<int> ks{0};
        for (const Idx& gi : g) {
            Idx one;
            for (int p : gi) one.push_back(p + 1);
            g1.push_back(one);
            levels.push_back(level_mean(th, gi));
            ks.push_back(ks.back() + static_cast<int>(gi.size()));
        }
        part.sub.push_back(g1);
        part.theta.push_back(levels);
        part.kappa_sub.push_back(ks);
        D.theta.push_back(th);
        D.Qk.push_back(Q);
    }

    // beta branch
    const int nb = F.m - F.s;
    std::vector<Idx> bg;
    std::vector<double> blevels;
    std::vector<int> bks{0};
    if (nb > 0) {
        Mat E = sub(D.eb, range(F.s, F.m), range(F.s, F.n));
        Eigen::JacobiSVD<Mat> svd(E, Eigen::ComputeFullU | Eigen::ComputeFullV);
        D.beta_sv = svd.singularValues();
        D.Qb = svd.matrixU();
        D.Qh = svd.matrixV();
        int npos = 0;
        while (npos < nb && D.beta_sv(npos) > sub_tol) ++npos;
        bool amb = false;
        std::vector<Idx> pos = cluster_desc(D.beta_sv.head(npos), sub_tol, amb);
        if (npos < nb && npos > 0 && D.beta_sv(npos - 1) < 2 * sub_tol) amb = true;
        if (amb) {
            part.ambiguous = true;
            part.diagnostics.push_back("singular-value gap of the beta block ambiguous");
        }
        part.N_beta = static_cast<int>(pos.size());
        for (const Idx& gi : pos) bg.push_back(gi);
        if (npos < nb) bg.push_back(range(npos, nb));
        std::vector<Idx> g1;
        for (const Idx& gi : bg) {
            Idx one;
            for (int p : gi) one.push_back(p + 1);
            g1.push_back(one);
            blevels.push_back(level_mean(D.beta_sv, gi));
            bks.push_back(bks.back() + static_cast<int>(gi.size()));
        }
        part.sub.push_back(g1);
    } else {
        part.sub.emplace_back();
    }
    part.theta.push_back(blevels);
    part.kappa_sub.push_back(bks);
    D.beta_groups = bg;
    fill_maps(part);
    return D;
}

// Divisor of the cross-cluster terms of V_hat_k; see the ledger entry on the
// factor of two.
constexpr double kCrossDenominatorFactor = 1.0;

Mat v_hat_alpha(const SvdData& D, int k, const Mat& zb) {
    const IndexPartition& part = D.part;
    const Mat& eb = D.eb;
    Idx a = zero_based(part.alpha[k]);
    Idx beta = range(D.F.s, D.F.m);
    Idx bhat = range(D.F.s, D.F.n);
    const double mk = part.mu[k];
    Mat ekk = sub(eb, a, a);
    Mat S = 0.5 * (ekk - ekk.transpose());
    Mat V = sym(sub(zb, a, a)) + (S.transpose() * S) / mk;
    if (!beta.empty()) {
        Mat ebk = sub(eb, beta, a);
        V += (ebk.transpose() * ebk) / mk;
    }
    if (!bhat.empty()) {
        Mat ekb = sub(eb, a, bhat);
        V += (ekb * ekb.transpose()) / mk;
    }
    for (int j = 0; j < part.t; ++j) {
        if (j == k) continue;
        Idx aj = zero_based(part.alpha[j]);
        const double mj = part.mu[j];
        Mat ekj = sub(eb, a, aj), ejk = sub(eb, aj, a);
        Mat num = mj * ekj * ejk + mk * ejk.transpose() * ejk + mk * ekj * ekj.transpose() +
                  mj * ejk.transpose() * ekj.transpose();
        V += num / (kCrossDenominatorFactor * (mk * mk - mj * mj));
    }
    return V;
}

Mat v_hat_beta(const SvdData& D, const Mat& zb) {
    Idx alpha = range(0, D.F.s);
    Idx beta = range(D.F.s, D.F.m);
    Idx bhat = range(D.F.s, D.F.n);
    Mat V = sub(zb, beta, bhat);
    if (!alpha.empty())
        V -= 2.0 * sub(D.eb, beta, alpha) * D.F.sig.cwiseInverse().asDiagonal() *
             sub(D.eb, alpha, bhat);
    return V;
}

double second_from(const SvdData& D, int i, const Mat& zb, std::vector<Mat>* cache) {
    const IndexPartition& part = D.part;
    int k = part.q_a[i - 1] - 1;
    int j = part.q_b[i - 1] - 1;
    int lp = part.l_prime[i - 1];
    if (k < part.t) {
        Mat Vk;
        if (cache && (*cache)[k].size() > 0) {
            Vk = (*cache)[k];
        } else {
            Vk = v_hat_alpha(D, k, zb);
            if (cache) (*cache)[k] = Vk;
        }
        Idx cols = zero_based(part.sub[k][j]);
        Mat Qj = D.Qk[k](Eigen::all, cols);
        Vec ev = eigvals_desc(Qj.transpose() * Vk * Qj);
        return ev(lp - 1);
    }
    Mat Vb;
    if (cache && (*cache)[part.t].size() > 0) {
        Vb = (*cache)[part.t];
    } else {
        Vb = v_hat_beta(D, zb);
        if (cache) (*cache)[part.t] = Vb;
    }
    const Idx& g = D.beta_groups[j];
    Mat Qj = D.Qb(Eigen::all, g);
    if (j < part.N_beta) {
        Mat Qhj = D.Qh(Eigen::all, g);
        Vec ev = eigvals_desc(sym(Qj.transpose() * Vb * Qhj));
        return ev(lp - 1);
    }
    const int nb = D.F.m - D.F.s, nbh = D.F.n - D.F.s;
    Idx cols = g;
    for (int c = nb; c < nbh; ++c) cols.push_back(c);
    Mat Qh0 = D.Qh(Eigen::all, cols);
    Vec sv = singular_values(Qj.transpose() * Vb * Qh0);
    return sv(lp - 1);
}

double first_from(const SvdData& D, int i) {
    const IndexPartition& part = D.part;
    int k = part.q_a[i - 1] - 1;
    int li = part.l[i - 1];
    if (k < part.t) return D.theta[k](li - 1);
    return D.beta_sv(li - 1);
}

void check_index(int i, int m) {
    if (i < 1 || i > m) throw std::out_of_range("singular/eigen value index out of range");
}

}  // namespace

IndexPartition partition_indices(const MatrixPoint& P, const Mat& eta, double cluster_tol) {
    return build_svd(P, eta, cluster_tol).part;
}

double sigma_derivative_1(const MatrixPoint& P, int i, const Mat& eta, double cluster_tol) {
    SvdData D = build_svd(P, eta, cluster_tol);
    check_index(i, D.F.m);
    return first_from(D, i);
}

Vec sigma_derivatives_1(const MatrixPoint& P, const Mat& eta, double cluster_tol) {
    SvdData D = build_svd(P, eta, cluster_tol);
    Vec out(D.F.m);
    for (int i = 1; i <= D.F.m; ++i) out(i - 1) = first_from(D, i);
    return out;
}

double sigma_derivative_2(const MatrixPoint& P, int i, const Mat& eta, const Mat& zeta,
                          double cluster_tol) {
    SvdData D = build_svd(P, eta, cluster_tol);
    check_index(i, D.F.m);
    if (zeta.rows() != P.rows() || zeta.cols() != P.cols())
        throw std::invalid_argument("zeta shape does not match base point");
    Mat zb = D.F.rotate(zeta);
    return second_from(D, i, zb, nullptr);
}

Vec sigma_derivatives_2(const MatrixPoint& P, const Mat& eta, const Mat& zeta,
                        double cluster_tol) {
    SvdData D = build_svd(P, eta, cluster_tol);
    if (zeta.rows() != P.rows() || zeta.cols() != P.cols())
        throw std::invalid_argument("zeta shape does not match base point");
    Mat zb = D.F.rotate(zeta);
    std::vector<Mat> cache(D.part.t + 1);
    Vec out(D.F.m);
    for (int i = 1; i <= D.F.m; ++i) out(i - 1) = second_from(D, i, zb, &cache);
    return out;
}

Mat v_hat(const MatrixPoint& P, int k, const Mat& eta, const Mat& zeta, double cluster_tol) {
    SvdData D = build_svd(P, eta, cluster_tol);
    if (k < 1 || k > D.part.t + 1) throw std::out_of_range("group index out of range");
    Mat zb = D.F.rotate(zeta);
    return k <= D.part.t ? v_hat_alpha(D, k - 1, zb) : v_hat_beta(D, zb);
}

// ---------------------------------------------------------------------------
// Eigenvalues of symmetric matrices

namespace {

struct EigData {
    IndexPartition part;
    std::vector<Idx> levels;     // 0-based eigen positions per level
    std::vector<double> mu;      // level values (exact zero for the kernel level)
    std::vector<Mat> Ubk;        // eigenvector blocks
    std::vector<Vec> theta;
    std::vector<Mat> Qk;
    Vec lam;
};

EigData build_eig(const SymPoint& P, const Mat& eta, double cluster_tol) {
    if (!(cluster_tol > 0)) throw std::invalid_argument("cluster_tol must be positive");
    const int n = P.n();
    if (eta.rows() != n || eta.cols() != n)
        throw std::invalid_argument("direction shape does not match base point");
    if (!is_symmetric(eta)) throw std::invalid_argument("direction is not symmetric");
    EigData D;
    IndexPartition& part = D.part;
    part.m = part.n = n;
    part.s = P.s;
    D.lam = P.all_lambda;
    double scale = n ? D.lam.cwiseAbs().maxCoeff() : 0.0;
    for (int j = 0; j < n; ++j)
        if (std::abs(D.lam(j)) <= P.rank_tol * scale) D.lam(j) = 0.0;
    bool amb = false;
    D.levels = cluster_desc(D.lam, cluster_tol * scale, amb);
    if (amb) {
        part.ambiguous = true;
        part.diagnostics.push_back("eigenvalue gap inside (cluster_tol, 2 cluster_tol)");
    }
    part.t = static_cast<int>(D.levels.size());
    part.kappa.assign(1, 0);
    const double sub_tol = cluster_tol * std::max(eta.norm(), 1e-300);
    const Mat es = sym(eta);
    for (const Idx& g : D.levels) {
        bool has_zero = false;
        for (int j : g) has_zero = has_zero || D.lam(j) == 0.0;
        double mu = has_zero ? 0.0 : level_mean(D.lam, g);
        D.mu.push_back(mu);
        part.mu.push_back(mu);
        Idx one;
        for (int j : g) one.push_back(j + 1);
        part.alpha.push_back(one);
        part.kappa.push_back(part.kappa.back() + static_cast<int>(g.size()));
        Mat Ub = P.Q(Eigen::all, g);
        D.Ubk.push_back(Ub);
        Vec th;
        Mat Q;
        eig_desc(Ub.transpose() * es * Ub, th, Q);
        bool a2 = false;
        std::vector<Idx> sg = cluster_desc(th, sub_tol, a2);
        if (a2) {
            part.ambiguous = true;
            part.diagnostics.push_back("second-level eigenvalue gap ambiguous");
        }
        std::vector<Idx> g1;
        std::vector<double> lv;
        std::vector<int> ks{0};
        for (const Idx& gi : sg) {
            Idx o;
            for (int p : gi) o.push_back(p + 1);
            g1.push_back(o);
            lv.push_back(level_mean(th, gi));
            ks.push_back(ks.back() + static_cast<int>(gi.size()));
        }
        part.sub.push_back(g1);
        part.theta.push_back(lv);
        part.kappa_sub.push_back(ks);
        D.theta.push_back(th);
        D.Qk.push_back(Q);
    }
    part.alpha.emplace_back();  // empty beta: every level is an eigen level
    fill_maps(part);
    return D;
}

double eig_first(const EigData& D, int i) {
    int k = D.part.q_a[i - 1] - 1;
    return D.theta[k](D.part.l[i - 1] - 1);
}

double eig_second(const EigData& D, int i, const Mat& eta, const Mat& zeta) {
    const IndexPartition& part = D.part;
    int k = part.q_a[i - 1] - 1;
    int j = part.q_b[i - 1] - 1;
    const int n = static_cast<int>(eta.rows());
    Mat shifted_pinv = Mat::Zero(n, n);
    for (int q = 0; q < part.t; ++q) {
        if (q == k) continue;
        shifted_pinv += D.Ubk[q] * D.Ubk[q].transpose() / (D.mu[q] - D.mu[k]);
    }
    Mat es = sym(eta);
    Mat M = sym(zeta) - 2.0 * es * shifted_pinv * es;
    Idx cols = zero_based(part.sub[k][j]);
    Mat Qj = D.Qk[k](Eigen::all, cols);
    Mat W = D.Ubk[k] * Qj;
    Vec ev = eigvals_desc(W.transpose() * M * W);
    return ev(part.l_prime[i - 1] - 1);
}

}  // namespace

IndexPartition partition_eigen(const SymPoint& P, const Mat& eta, double cluster_tol) {
    return build_eig(P, eta, cluster_tol).part;
}

double lambda_derivative_1(const SymPoint& P, int i, const Mat& eta, double cluster_tol) {
    EigData D = build_eig(P, eta, cluster_tol);
    check_index(i, P.n());
    return eig_first(D, i);
}

double lambda_derivative_2(const SymPoint& P, int i, const Mat& eta, const Mat& zeta,
                           double shift, double cluster_tol) {
    EigData D = build_eig(P, eta, cluster_tol);
    check_index(i, P.n());
    if (zeta.rows() != P.n() || zeta.cols() != P.n() || !is_symmetric(zeta))
        throw std::invalid_argument("zeta must be symmetric with the base shape");
    if (!std::isnan(shift)) {
        double scale = std::max(1.0, P.all_lambda.cwiseAbs().maxCoeff());
        if (std::abs(shift - P.all_lambda(i - 1)) > 1e-8 * scale)
            throw std::invalid_argument("shift does not match lambda_i(X)");
    }
    return eig_second(D, i, eta, zeta);
}

Vec lambda_derivatives_1(const SymPoint& P, const Mat& eta, double cluster_tol) {
    EigData D = build_eig(P, eta, cluster_tol);
    Vec out(P.n());
    for (int i = 1; i <= P.n(); ++i) out(i - 1) = eig_first(D, i);
    return out;
}

Vec lambda_derivatives_2(const SymPoint& P, const Mat& eta, const Mat& zeta,
                         double cluster_tol) {
    EigData D = build_eig(P, eta, cluster_tol);
    if (zeta.rows() != P.n() || zeta.cols() != P.n() || !is_symmetric(zeta))
        throw std::invalid_argument("zeta must be symmetric with the base shape");
    Vec out(P.n());
    for (int i = 1; i <= P.n(); ++i) out(i - 1) = eig_second(D, i, eta, zeta);
    return out;
}

}  // namespace varigeo
