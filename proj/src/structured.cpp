#include "varigeo/structured.hpp"

#include "varigeo/derivatives.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace varigeo {

namespace {

void require_square_sym(const SymPoint& P, const Mat& A, const char* what) {
    if (A.rows() != P.n() || A.cols() != P.n())
        throw std::invalid_argument(std::string(what) + ": shape mismatch with base point");
    assert_finite(A, what);
    if (!is_symmetric(A, 1e-8)) throw std::invalid_argument(std::string(what) + " is not symmetric");
}

void check_sym_base(const SymPoint& P, const RankSpec& spec, bool psd) {
    check_spec(P.X, spec);
    if (P.s > spec.r) throw std::invalid_argument("base point has rank above the bound");
    if (psd && P.s_minus > 0) throw std::invalid_argument("base point is not positive semidefinite");
}

Mat random_sym_block(int n, int pos, int neg, Rng& rng) {
    if (n == 0 || pos + neg == 0) return Mat::Zero(n, n);
    Mat Q = rng.orthonormal(n, pos + neg);
    Vec d(pos + neg);
    for (int i = 0; i < pos; ++i) d(i) = rng.uniform(0.5, 1.5);
    for (int i = 0; i < neg; ++i) d(pos + i) = -rng.uniform(0.5, 1.5);
    return Q * d.asDiagonal() * Q.transpose();
}

struct SymBlocks {
    Mat W1, W2, J;
};

SymBlocks sym_blocks(const SymPoint& P, const Mat& eta) {
    SymBlocks B;
    B.W1 = P.U.transpose() * eta * P.U;
    B.W2 = P.U.transpose() * eta * P.U_perp;
    B.J = sym(P.U_perp.transpose() * eta * P.U_perp);
    return B;
}

// Rank and inertia decision on a symmetric block. Returns the certificate
// fields; `budget` is the allowed rank.
void judge_block(const Mat& S, int budget, bool psd, double thr, Vec& spectrum, int& pos,
                 int& neg, bool& member, double& violation, std::string& reason) {
    spectrum = S.rows() ? eigvals_desc(S) : Vec();
    pos = neg = 0;
    for (int i = 0; i < spectrum.size(); ++i) {
        if (spectrum(i) > thr) ++pos;
        if (spectrum(i) < -thr) ++neg;
    }
    member = true;
    violation = 0.0;
    reason.clear();
    if (pos + neg > budget) {
        std::vector<double> mags(spectrum.size());
        for (int i = 0; i < spectrum.size(); ++i) mags[i] = std::abs(spectrum(i));
        std::sort(mags.rbegin(), mags.rend());
        member = false;
        violation = mags[budget];
        reason = "rank budget exceeded";
    }
    if (psd && neg > 0) {
        member = false;
        violation = std::max(violation, -spectrum(spectrum.size() - 1));
        reason = reason.empty() ? "negative eigenvalue" : reason + "; negative eigenvalue";
    }
}

SymTangentCertificate tangent_sym_impl(const SymPoint& P, const RankSpec& spec, const Mat& eta,
                                       bool psd) {
    check_sym_base(P, spec, psd);
    require_square_sym(P, eta, "eta");
    Mat e = sym(eta);
    SymTangentCertificate C;
    SymBlocks B = sym_blocks(P, e);
    C.W1 = B.W1;
    C.W2 = B.W2;
    C.J = B.J;
    C.threshold = P.rank_tol * e.norm();
    judge_block(B.J, spec.r - P.s, psd, C.threshold, C.j_spectrum, C.j_pos, C.j_neg, C.member,
                C.violation, C.reason);
    return C;
}

struct SymFrame {
    int ell = 0;
    Mat U_eta, U_eta_perp, curvature;
};

SymFrame sym_frame(const SymPoint& P, const Mat& eta) {
    SymFrame F;
    Mat J = sym(P.U_perp.transpose() * eta * P.U_perp);
    const int nj = static_cast<int>(J.rows());
    double thr = P.rank_tol * eta.norm();
    std::vector<int> nz, zero;
    Vec vals;
    Mat vecs;
    if (nj > 0) eig_desc(J, vals, vecs);
    for (int i = 0; i < nj; ++i) (std::abs(vals(i)) > thr ? nz : zero).push_back(i);
    F.ell = P.s + static_cast<int>(nz.size());
    F.U_eta.resize(P.n(), nz.size());
    F.U_eta_perp.resize(P.n(), zero.size());
    for (size_t c = 0; c < nz.size(); ++c) F.U_eta.col(c) = P.U_perp * vecs.col(nz[c]);
    for (size_t c = 0; c < zero.size(); ++c) F.U_eta_perp.col(c) = P.U_perp * vecs.col(zero[c]);
    F.curvature = 2.0 * eta * pseudoinverse(P) * eta;
    return F;
}

SymSecondOrderCertificate tangent2_sym_impl(const SymPoint& P, const Mat& eta, const Mat& zeta,
                                            const RankSpec& spec, bool psd) {
    auto first = tangent_sym_impl(P, spec, eta, psd);
    if (!first.member) throw std::invalid_argument("eta is not in the tangent cone");
    require_square_sym(P, zeta, "zeta");
    Mat e = sym(eta), z = sym(zeta);
    SymFrame F = sym_frame(P, e);
    SymSecondOrderCertificate C;
    C.ell = F.ell;
    C.U_eta = F.U_eta;
    C.U_eta_perp = F.U_eta_perp;
    C.curvature = F.curvature;
    C.L = sym(F.U_eta_perp.transpose() * (z - F.curvature) * F.U_eta_perp);
    C.threshold = P.rank_tol * std::max({z.norm(), F.curvature.norm(), 1e-300});
    int pos = 0, neg = 0;
    judge_block(C.L, spec.r - F.ell, psd, C.threshold, C.l_spectrum, pos, neg, C.member,
                C.violation, C.reason);
    return C;
}

}  // namespace

SymTangentCertificate tangent_sym(const SymPoint& P, const RankSpec& spec, const Mat& eta) {
    return tangent_sym_impl(P, spec, eta, false);
}

SymTangentCertificate tangent_psd(const SymPoint& P, const RankSpec& spec, const Mat& eta) {
    return tangent_sym_impl(P, spec, eta, true);
}

SymSecondOrderCertificate tangent2_sym(const SymPoint& P, const Mat& eta, const Mat& zeta,
                                       const RankSpec& spec) {
    return tangent2_sym_impl(P, eta, zeta, spec, false);
}

SymSecondOrderCertificate tangent2_psd(const SymPoint& P, const Mat& eta, const Mat& zeta,
                                       const RankSpec& spec) {
    return tangent2_sym_impl(P, eta, zeta, spec, true);
}

bool in_stratum(const SymPoint& P, int j, const RankSpec& spec) {
    if (j < 1 || j > spec.r + 1) throw std::invalid_argument("stratum index out of range");
    return j >= P.s_plus + 1 && j <= spec.r + 1 - P.s_minus;
}

bool stratum_tangent(const SymPoint& P, int j, const RankSpec& spec, const Mat& eta, double tol) {
    check_sym_base(P, spec, false);
    require_square_sym(P, eta, "eta");
    if (!in_stratum(P, j, spec)) throw std::invalid_argument("base point is not in the stratum");
    Mat e = sym(eta);
    double thr = tol * e.norm();
    int lo = j, hi = j + P.n() - spec.r - 1;
    return std::abs(lambda_derivative_1(P, lo, e)) <= thr &&
           std::abs(lambda_derivative_1(P, hi, e)) <= thr;
}

bool tangent_sym_by_strata(const SymPoint& P, const RankSpec& spec, const Mat& eta, double tol) {
    for (int j = P.s_plus + 1; j <= spec.r + 1 - P.s_minus; ++j)
        if (stratum_tangent(P, j, spec, eta, tol)) return true;
    return false;
}

Mat project_sym_bounded_rank(const Mat& Y, int r) {
    if (Y.rows() != Y.cols()) throw std::invalid_argument("symmetric projection needs a square matrix");
    Vec vals;
    Mat vecs;
    eig_desc(sym(Y), vals, vecs);
    std::vector<int> idx(vals.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](int a, int b) { return std::abs(vals(a)) > std::abs(vals(b)); });
    Mat Z = Mat::Zero(Y.rows(), Y.cols());
    for (int k = 0; k < std::min<int>(r, idx.size()); ++k)
        Z += vals(idx[k]) * vecs.col(idx[k]) * vecs.col(idx[k]).transpose();
    return Z;
}

Mat project_psd_bounded_rank(const Mat& Y, int r) {
    if (Y.rows() != Y.cols()) throw std::invalid_argument("PSD projection needs a square matrix");
    Vec vals;
    Mat vecs;
    eig_desc(sym(Y), vals, vecs);
    Mat Z = Mat::Zero(Y.rows(), Y.cols());
    for (int k = 0; k < std::min<int>(r, vals.size()) && vals(k) > 0; ++k)
        Z += vals(k) * vecs.col(k) * vecs.col(k).transpose();
    return Z;
}

SetProjector sym_bounded_rank_projector(int r) {
    return {"sym_bounded_rank(" + std::to_string(r) + ")",
            [r](const Mat& Y) { return (Y - project_sym_bounded_rank(Y, r)).norm(); }};
}

SetProjector psd_bounded_rank_projector(int r) {
    return {"psd_bounded_rank(" + std::to_string(r) + ")",
            [r](const Mat& Y) { return (Y - project_psd_bounded_rank(Y, r)).norm(); }};
}

Mat random_sym_low_rank(int n, int s_plus, int s_minus, Rng& rng) {
    return random_sym_block(n, s_plus, s_minus, rng);
}

Mat random_sym_tangent_member(const SymPoint& P, const RankSpec& spec, bool psd, Rng& rng) {
    check_sym_base(P, spec, psd);
    const int n = P.n(), s = P.s, nj = n - s;
    int budget = std::min(spec.r - s, nj);
    int rank = rng.uniform_int(0, budget);
    int pos = psd ? rank : rng.uniform_int(0, rank);
    Mat W1 = sym(rng.gaussian(s, s)), W2 = rng.gaussian(s, nj);
    Mat J = random_sym_block(nj, pos, rank - pos, rng);
    Mat top(n, n);
    top << W1, W2, W2.transpose(), J;
    Mat B(n, n);
    B << P.U, P.U_perp;
    return sym(B * top * B.transpose());
}

Mat random_sym_tangent_nonmember(const SymPoint& P, const RankSpec& spec, bool psd, Rng& rng) {
    check_sym_base(P, spec, psd);
    const int n = P.n(), s = P.s, nj = n - s;
    int budget = spec.r - s;
    bool can_overflow = budget + 1 <= nj;
    bool use_sign = psd && budget >= 1 && (!can_overflow || rng.uniform() < 0.5);
    if (!can_overflow && !use_sign)
        throw std::invalid_argument("no nonmember exists: the cone is the whole space");
    Mat J;
    if (use_sign) {
        int rank = rng.uniform_int(1, budget);
        J = random_sym_block(nj, rank - 1, 1, rng);
    } else {
        int rank = rng.uniform_int(budget + 1, nj);
        int pos = psd ? rank : rng.uniform_int(0, rank);
        J = random_sym_block(nj, pos, rank - pos, rng);
    }
    Mat W1 = sym(rng.gaussian(s, s)), W2 = rng.gaussian(s, nj);
    Mat top(n, n);
    top << W1, W2, W2.transpose(), J;
    Mat B(n, n);
    B << P.U, P.U_perp;
    return sym(B * top * B.transpose());
}

Mat random_sym_second_order_member(const SymPoint& P, const Mat& eta, const RankSpec& spec,
                                   bool psd, Rng& rng) {
    if (!tangent_sym_impl(P, spec, eta, psd).member)
        throw std::invalid_argument("eta is not in the tangent cone");
    SymFrame F = sym_frame(P, sym(eta));
    const int n = P.n(), l = F.ell, nl = n - l;
    int budget = std::min(spec.r - l, nl);
    int rank = rng.uniform_int(0, std::max(budget, 0));
    int pos = psd ? rank : rng.uniform_int(0, rank);
    Mat W1 = sym(rng.gaussian(l, l)), W2 = rng.gaussian(l, nl);
    Mat L = random_sym_block(nl, pos, rank - pos, rng);
    Mat top(n, n);
    top << W1, W2, W2.transpose(), L;
    Mat B(n, n);
    B << P.U, F.U_eta, F.U_eta_perp;
    return sym(F.curvature + B * top * B.transpose());
}

// ---------------------------------------------------------------------------

ConstraintH ConstraintH::ambient() { return {}; }

ConstraintH ConstraintH::affine(std::vector<Mat> A, Vec b) {
    if (A.size() != static_cast<size_t>(b.size()))
        throw std::invalid_argument("affine constraint: A and b sizes differ");
    for (size_t i = 1; i < A.size(); ++i)
        if (A[i].rows() != A[0].rows() || A[i].cols() != A[0].cols())
            throw std::invalid_argument("affine constraint: A_i shapes differ");
    ConstraintH H;
    H.kind = Kind::affine;
    H.A = std::move(A);
    H.b = std::move(b);
    return H;
}

ConstraintH ConstraintH::sphere() {
    ConstraintH H;
    H.kind = Kind::sphere;
    return H;
}

ConstraintH ConstraintH::oblique() {
    ConstraintH H;
    H.kind = Kind::oblique;
    return H;
}

ConstraintH ConstraintH::hyperbolic() {
    ConstraintH H;
    H.kind = Kind::hyperbolic;
    return H;
}

std::string to_string(ConstraintH::Kind k) {
    switch (k) {
        case ConstraintH::Kind::ambient: return "ambient";
        case ConstraintH::Kind::affine: return "affine";
        case ConstraintH::Kind::sphere: return "sphere";
        case ConstraintH::Kind::oblique: return "oblique";
        case ConstraintH::Kind::hyperbolic: return "hyperbolic";
    }
    return "?";
}

ConstraintH::Kind constraint_kind_from_string(const std::string& s) {
    for (auto k : {ConstraintH::Kind::ambient, ConstraintH::Kind::affine, ConstraintH::Kind::sphere,
                   ConstraintH::Kind::oblique, ConstraintH::Kind::hyperbolic})
        if (to_string(k) == s) return k;
    throw std::invalid_argument("unknown constraint kind: " + s);
}

namespace {

// Lorentz form applied to each column: L x with L = diag(-1, 1, ..., 1).
Mat lorentz(const Mat& X) {
    Mat Y = X;
    if (Y.rows() > 0) Y.row(0) *= -1.0;
    return Y;
}

void check_affine_shape(const ConstraintH& H, const Mat& X) {
    for (const auto& A : H.A)
        if (A.rows() != X.rows() || A.cols() != X.cols())
            throw std::invalid_argument("affine constraint: A_i shape differs from X");
}

}  // namespace

int ConstraintH::count(const Mat& X) const {
    switch (kind) {
        case Kind::ambient: return 0;
        case Kind::affine: return static_cast<int>(A.size());
        case Kind::sphere: return 1;
        case Kind::oblique: return static_cast<int>(X.rows());
        case Kind::hyperbolic: return static_cast<int>(X.cols());
    }
    return 0;
}

Vec ConstraintH::value(const Mat& X) const {
    switch (kind) {
        case Kind::ambient: return Vec();
        case Kind::affine: {
            check_affine_shape(*this, X);
            Vec v(A.size());
            for (size_t i = 0; i < A.size(); ++i) v(i) = (A[i].array() * X.array()).sum() - b(i);
            return v;
        }
        case Kind::sphere: return Vec::Constant(1, X.squaredNorm() - 1.0);
        case Kind::oblique: return (X.rowwise().squaredNorm().array() - 1.0).matrix();
        case Kind::hyperbolic:
            return ((X.array() * lorentz(X).array()).colwise().sum().transpose() + 1.0).matrix();
    }
    return Vec();
}

Vec ConstraintH::first(const Mat& X, const Mat& eta) const {
    switch (kind) {
        case Kind::ambient: return Vec();
        case Kind::affine: {
            check_affine_shape(*this, eta);
            Vec v(A.size());
            for (size_t i = 0; i < A.size(); ++i) v(i) = (A[i].array() * eta.array()).sum();
            return v;
        }
        case Kind::sphere: return Vec::Constant(1, 2.0 * (X.array() * eta.array()).sum());
        case Kind::oblique: return 2.0 * (X.array() * eta.array()).rowwise().sum().matrix();
        case Kind::hyperbolic:
            return 2.0 * (lorentz(X).array() * eta.array()).colwise().sum().transpose().matrix();
    }
    return Vec();
}

Vec ConstraintH::second(const Mat& X, const Mat& eta, const Mat& zeta) const {
    switch (kind) {
        case Kind::ambient: return Vec();
        case Kind::affine: return first(X, zeta);
        case Kind::sphere: return first(X, zeta) + Vec::Constant(1, 2.0 * eta.squaredNorm());
        case Kind::oblique: return first(X, zeta) + 2.0 * eta.rowwise().squaredNorm();
        case Kind::hyperbolic:
            return first(X, zeta) +
                   2.0 * (lorentz(eta).array() * eta.array()).colwise().sum().transpose().matrix();
    }
    return Vec();
}

Mat ConstraintH::restore(const Mat& Z) const {
    switch (kind) {
        case Kind::ambient: return Z;
        case Kind::affine: {
            const int q = static_cast<int>(A.size());
            if (q == 0) return Z;
            Mat G(q, q);
            for (int i = 0; i < q; ++i)
                for (int j = 0; j < q; ++j) G(i, j) = (A[i].array() * A[j].array()).sum();
            Vec c = G.completeOrthogonalDecomposition().solve(value(Z));
            Mat Y = Z;
            for (int i = 0; i < q; ++i) Y -= c(i) * A[i];
            return Y;
        }
        case Kind::sphere: {
            double nz = Z.norm();
            return nz > 0 ? Mat(Z / nz) : Z;
        }
        case Kind::oblique: {
            Mat Y = Z;
            for (int i = 0; i < Y.rows(); ++i) {
                double nr = Y.row(i).norm();
                if (nr > 0) Y.row(i) /= nr;
            }
            return Y;
        }
        case Kind::hyperbolic: {
            Mat Y = Z;
            for (int j = 0; j < Y.cols(); ++j) {
                double q = Y(0, j) * Y(0, j) - Y.col(j).tail(Y.rows() - 1).squaredNorm();
                if (q > 0 && Y(0, j) > 0) {
                    Y.col(j) /= std::sqrt(q);  // column scaling keeps the rank
                } else {
                    Y(0, j) = std::sqrt(1.0 + Y.col(j).tail(Y.rows() - 1).squaredNorm());
                }
            }
            return Y;
        }
    }
    return Z;
}

double ConstraintH::scale() const {
    if (kind != Kind::affine) return 1.0;
    double s = 1.0;
    for (const auto& Ai : A) s = std::max(s, Ai.norm());
    return std::max(s, b.size() ? b.cwiseAbs().maxCoeff() : 0.0);
}

void check_feasible(const Mat& X, const ConstraintH& H, double tol) {
    assert_finite(X, "base point");
    if (H.kind == ConstraintH::Kind::oblique)
        for (int i = 0; i < X.rows(); ++i)
            if (X.row(i).norm() == 0.0) throw std::invalid_argument("oblique point has a zero row");
    if (H.kind == ConstraintH::Kind::hyperbolic) {
        if (X.rows() < 1) throw std::invalid_argument("hyperbolic point needs at least one row");
        for (int j = 0; j < X.cols(); ++j)
            if (!(X(0, j) > 0))
                throw std::invalid_argument("hyperbolic point has a nonpositive first entry in column " +
                                            std::to_string(j + 1));
    }
    Vec v = H.value(X);
    double worst = v.size() ? v.cwiseAbs().maxCoeff() : 0.0;
    if (worst > tol * H.scale())
        throw std::invalid_argument("base point is infeasible for the " + to_string(H.kind) +
                                    " constraint (residual " + std::to_string(worst) + ")");
}

namespace {

// Smallest over largest singular value of the rows of G, each a vectorized
// constraint gradient or projected gradient.
double independence_margin(const Mat& G) {
    if (G.rows() == 0) return 1.0;
    if (G.cols() < G.rows()) return 0.0;
    Vec sv = singular_values(G);
    double top = sv(0);
    return top > 0 ? sv(sv.size() - 1) / top : 0.0;
}

constexpr double kCqFloor = 1e-10;

Mat gradient_rows(const Mat& X, const ConstraintH& H) {
    const int q = H.count(X), m = static_cast<int>(X.rows()), n = static_cast<int>(X.cols());
    Mat G(q, m * n);
    Mat E = Mat::Zero(m, n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < m; ++i) {
            E(i, j) = 1.0;
            G.col(j * m + i) = H.first(X, E);
            E(i, j) = 0.0;
        }
    return G;
}

Mat flatten_rows(const std::vector<Mat>& blocks) {
    if (blocks.empty()) return Mat(0, 0);
    Mat G(blocks.size(), blocks[0].size());
    for (size_t i = 0; i < blocks.size(); ++i)
        G.row(i) = Eigen::Map<const Vec>(blocks[i].data(), blocks[i].size()).transpose();
    return G;
}

}  // namespace

CqReport cq_report(const MatrixPoint& P, const ConstraintH& H, const RankSpec& spec) {
    CqReport R;
    switch (H.kind) {
        case ConstraintH::Kind::ambient:
            R.name = "none";
            R.margin = 1.0;
            return R;
        case ConstraintH::Kind::affine: {
            std::vector<Mat> blocks;
            if (P.s == spec.r) {
                R.name = "affine-tangent-independence";
                for (const auto& A : H.A) {
                    Mat T(P.rows(), P.cols());
                    T.setZero();
                    T.topLeftCorner(P.s, P.s) = P.U.transpose() * A * P.V;
                    T.topRightCorner(P.s, P.cols() - P.s) = P.U.transpose() * A * P.V_perp;
                    T.bottomLeftCorner(P.rows() - P.s, P.s) = P.U_perp.transpose() * A * P.V;
                    blocks.push_back(T);
                }
            } else {
                R.name = "affine-core-independence";
                for (const auto& A : H.A) blocks.push_back(P.U.transpose() * A * P.V);
            }
            if (blocks.empty()) {
                R.margin = 1.0;
                return R;
            }
            R.margin = P.s == 0 ? 0.0 : independence_margin(flatten_rows(blocks));
            R.holds = R.margin > kCqFloor;
            if (!R.holds)
                R.detail = P.s == spec.r ? "projected constraint matrices are linearly dependent"
                                         : "compressed constraint matrices U^T A_i V are linearly dependent";
            return R;
        }
        default: {
            R.name = "orthogonally-invariant-full-rank";
            if (H.kind == ConstraintH::Kind::hyperbolic) R.name = "hyperbolic-full-rank";
            R.margin = independence_margin(gradient_rows(P.X, H));
            R.holds = R.margin > kCqFloor;
            if (!R.holds) R.detail = "constraint differential is rank deficient";
            return R;
        }
    }
}

CqReport cq_report_psd(const SymPoint& P, const ConstraintH& H, const RankSpec& spec) {
    CqReport R;
    (void)spec;
    switch (H.kind) {
        case ConstraintH::Kind::ambient:
            R.name = "none";
            R.margin = 1.0;
            return R;
        case ConstraintH::Kind::affine: {
            R.name = "factor-independence";
            if (P.s_minus > 0) {
                R.holds = false;
                R.detail = "base point is not positive semidefinite";
                return R;
            }
            Mat Rf = P.U * P.lambda.cwiseSqrt().asDiagonal();
            std::vector<Mat> blocks;
            for (const auto& A : H.A) blocks.push_back(A * Rf);
            if (blocks.empty()) {
                R.margin = 1.0;
                return R;
            }
            R.margin = P.s == 0 ? 0.0 : independence_margin(flatten_rows(blocks));
            R.holds = R.margin > kCqFloor;
            if (!R.holds) R.detail = "A_i R are linearly dependent";
            return R;
        }
        case ConstraintH::Kind::sphere:
            R.name = "sphere-full-rank";
            R.margin = P.X.norm() > 0 ? 1.0 : 0.0;
            R.holds = R.margin > 0;
            return R;
        default:
            R.name = "unverified";
            R.holds = false;
            R.detail = "no qualification is available for this constraint on symmetric sets";
            return R;
    }
}

namespace {

double first_threshold(const Mat& X, const ConstraintH& H, const Mat& eta, double tol) {
    double grad = H.kind == ConstraintH::Kind::affine ? H.scale() : 2.0 * std::max(1.0, X.norm());
    return tol * std::max(grad * eta.norm(), 1e-300);
}

double second_threshold(const Mat& X, const ConstraintH& H, const Mat& eta, const Mat& zeta,
                        double tol) {
    double grad = H.kind == ConstraintH::Kind::affine ? H.scale() : 2.0 * std::max(1.0, X.norm());
    return tol * std::max(grad * zeta.norm() + 2.0 * eta.squaredNorm(), 1e-300);
}

void fill_h(IntersectionCertificate& C, const Vec& v, double thr) {
    C.h_residual = v.size() ? v.norm() : 0.0;
    C.h_threshold = thr;
    C.h_member = C.h_residual <= thr;
}

}  // namespace

IntersectionCertificate tangent_intersection(const MatrixPoint& P, const ConstraintH& H,
                                             const RankSpec& spec, const Mat& eta, double tol) {
    check_feasible(P.X, H, tol);
    IntersectionCertificate C;
    C.cone_member = tangent_membership(P, eta, spec).member;
    fill_h(C, H.first(P.X, eta), first_threshold(P.X, H, eta, tol));
    C.member = C.cone_member && C.h_member;
    C.cq = cq_report(P, H, spec);
    return C;
}

IntersectionCertificate tangent2_intersection(const MatrixPoint& P, const ConstraintH& H,
                                              const RankSpec& spec, const Mat& eta,
                                              const Mat& zeta, double tol) {
    if (!tangent_intersection(P, H, spec, eta, tol).member)
        throw std::invalid_argument("eta is not in the tangent cone of the intersection");
    IntersectionCertificate C;
    C.cone_member = second_order_membership(P, eta, zeta, spec).member;
    fill_h(C, H.second(P.X, eta, zeta), second_threshold(P.X, H, eta, zeta, tol));
    C.member = C.cone_member && C.h_member;
    C.cq = cq_report(P, H, spec);
    return C;
}

IntersectionCertificate tangent_intersection(const SymPoint& P, const ConstraintH& H,
                                             const RankSpec& spec, const Mat& eta, SymCone cone,
                                             double tol) {
    check_feasible(P.X, H, tol);
    IntersectionCertificate C;
    bool psd = cone == SymCone::psd;
    C.cone_member = tangent_sym_impl(P, spec, eta, psd).member;
    fill_h(C, H.first(P.X, eta), first_threshold(P.X, H, eta, tol));
    C.member = C.cone_member && C.h_member;
    C.cq = psd || H.kind != ConstraintH::Kind::sphere ? cq_report_psd(P, H, spec)
                                                        : CqReport{"sphere-full-rank", true, 1.0, ""};
    if (!psd && H.kind == ConstraintH::Kind::affine) {
        C.cq.name = "unverified";
        C.cq.holds = false;
        C.cq.detail = "affine constraints on indefinite symmetric sets are not covered";
    }
    return C;
}

IntersectionCertificate tangent2_intersection(const SymPoint& P, const ConstraintH& H,
                                              const RankSpec& spec, const Mat& eta,
                                              const Mat& zeta, SymCone cone, double tol) {
    auto first = tangent_intersection(P, H, spec, eta, cone, tol);
    if (!first.member) throw std::invalid_argument("eta is not in the tangent cone of the intersection");
    IntersectionCertificate C;
    C.cone_member = tangent2_sym_impl(P, eta, zeta, spec, cone == SymCone::psd).member;
    fill_h(C, H.second(P.X, eta, zeta), second_threshold(P.X, H, eta, zeta, tol));
    C.member = C.cone_member && C.h_member;
    C.cq = first.cq;
    return C;
}

SetProjector intersection_projector(const ConstraintH& H, int r, int rounds) {
    return {"alternating(" + to_string(H.kind) + ", " + std::to_string(r) + ")",
            [H, r, rounds](const Mat& Y) {
                Mat Z = Y;
                for (int k = 0; k < rounds; ++k) {
                    Mat next = H.restore(truncate_rank(Z, r));
                    double step = (next - Z).norm();
                    Z = std::move(next);
                    if (k > 0 && step <= 1e-15 * std::max(1.0, Z.norm())) break;
                }
                return (Y - Z).norm();
            }};
}

SetProjector sym_intersection_projector(const ConstraintH& H, int r, SymCone cone, int rounds) {
    return {"alternating_sym(" + to_string(H.kind) + ", " + std::to_string(r) + ")",
            [H, r, cone, rounds](const Mat& Y) {
                Mat Z = Y;
                for (int k = 0; k < rounds; ++k) {
                    Mat T = cone == SymCone::psd ? project_psd_bounded_rank(Z, r)
                                                 : project_sym_bounded_rank(Z, r);
                    Mat next = H.restore(T);
                    double step = (next - Z).norm();
                    Z = std::move(next);
                    if (k > 0 && step <= 1e-15 * std::max(1.0, Z.norm())) break;
                }
                return (Y - Z).norm();
            }};
}

Mat random_feasible_point(const ConstraintH& H, int m, int n, int s, Rng& rng) {
    switch (H.kind) {
        case ConstraintH::Kind::ambient: return rng.low_rank(m, n, s);
        case ConstraintH::Kind::affine:
            throw std::invalid_argument("affine points come from random_affine_through");
        case ConstraintH::Kind::sphere: {
            if (s == 0) throw std::invalid_argument("the sphere has no rank-zero point");
            Mat X = rng.low_rank(m, n, s);
            return X / X.norm();
        }
        case ConstraintH::Kind::oblique: {
            if (s == 0) throw std::invalid_argument("the oblique manifold has no rank-zero point");
            for (int attempt = 0; attempt < 100; ++attempt) {
                Mat X = rng.low_rank(m, n, s);
                if ((X.rowwise().norm().array() > 1e-3).all()) return H.restore(X);
            }
            throw std::runtime_error("could not sample an oblique point");
        }
        case ConstraintH::Kind::hyperbolic: {
            if (s == 0) throw std::invalid_argument("the hyperbolic set has no rank-zero point");
            for (int attempt = 0; attempt < 100; ++attempt) {
                // first factor row dominates, first coefficient column is one
                Mat L = 0.4 * rng.gaussian(m, s);
                L.row(0).setZero();
                L(0, 0) = 3.0;
                Mat R = 0.5 * rng.gaussian(n, s);
                R.col(0).setOnes();
                Mat X = L * R.transpose();
                bool ok = true;
                for (int j = 0; j < n && ok; ++j)
                    ok = X(0, j) * X(0, j) - X.col(j).tail(m - 1).squaredNorm() > 0.1 && X(0, j) > 0;
                if (ok) return H.restore(X);
            }
            throw std::runtime_error("could not sample a hyperbolic point");
        }
    }
    return Mat();
}

ConstraintH random_affine_through(const Mat& X, int q, bool symmetric, Rng& rng) {
    std::vector<Mat> A;
    Vec b(q);
    for (int i = 0; i < q; ++i) {
        Mat Ai = rng.gaussian(static_cast<int>(X.rows()), static_cast<int>(X.cols()));
        if (symmetric) Ai = sym(Ai);
        b(i) = (Ai.array() * X.array()).sum();
        A.push_back(Ai);
    }
    return ConstraintH::affine(std::move(A), std::move(b));
}

namespace {

// Minimum-norm delta in span(basis) with Dh(X)[delta] = rhs.
Mat solve_in_span(const Mat& X, const ConstraintH& H, const std::vector<Mat>& basis,
                  const Vec& rhs) {
    if (rhs.size() == 0 || basis.empty()) return Mat::Zero(X.rows(), X.cols());
    Mat G(rhs.size(), basis.size());
    for (size_t k = 0; k < basis.size(); ++k) G.col(k) = H.first(X, basis[k]);
    Vec c = G.completeOrthogonalDecomposition().solve(rhs);
    Mat d = Mat::Zero(X.rows(), X.cols());
    for (size_t k = 0; k < basis.size(); ++k) d += c(k) * basis[k];
    return d;
}

// Orthonormal basis of { A V^T + B V_perp^T ... } spanned by left frame Ul with
// right frame Vl and their complements: Ul A Vl^T, Ul B Vc^T, Uc C Vl^T.
std::vector<Mat> frame_basis(const Mat& Ul, const Mat& Vl, const Mat& Uc, const Mat& Vc) {
    std::vector<Mat> out;
    for (int a = 0; a < Ul.cols(); ++a) {
        for (int b = 0; b < Vl.cols(); ++b) out.push_back(Ul.col(a) * Vl.col(b).transpose());
        for (int b = 0; b < Vc.cols(); ++b) out.push_back(Ul.col(a) * Vc.col(b).transpose());
    }
    for (int a = 0; a < Uc.cols(); ++a)
        for (int b = 0; b < Vl.cols(); ++b) out.push_back(Uc.col(a) * Vl.col(b).transpose());
    return out;
}

}  // namespace

Mat correct_into_h(const MatrixPoint& P, const ConstraintH& H, const Mat& eta) {
    auto basis = frame_basis(P.U, P.V, P.U_perp, P.V_perp);
    return eta + solve_in_span(P.X, H, basis, -H.first(P.X, eta));
}

Mat correct_into_h(const SymPoint& P, const ConstraintH& H, const Mat& eta) {
    std::vector<Mat> basis;
    const double h = std::sqrt(0.5);
    for (int a = 0; a < P.s; ++a) {
        for (int b = a; b < P.s; ++b) {
            Mat E = P.U.col(a) * P.U.col(b).transpose();
            basis.push_back(a == b ? E : Mat(h * (E + E.transpose())));
        }
        for (int b = 0; b < P.U_perp.cols(); ++b) {
            Mat E = P.U.col(a) * P.U_perp.col(b).transpose();
            basis.push_back(h * (E + E.transpose()));
        }
    }
    return eta + solve_in_span(P.X, H, basis, -H.first(P.X, eta));
}

Mat correct_into_h2(const MatrixPoint& P, const ConstraintH& H, const Mat& eta, const Mat& zeta) {
    SecondOrderElement F = second_order_frame(P, eta);
    Mat Up(P.rows(), P.s + F.U_eta.cols()), Vp(P.cols(), P.s + F.V_eta.cols());
    Up << P.U, F.U_eta;
    Vp << P.V, F.V_eta;
    auto basis = frame_basis(Up, Vp, F.U_eta_perp, F.V_eta_perp);
    return zeta + solve_in_span(P.X, H, basis, -H.second(P.X, eta, zeta));
}

}  // namespace varigeo
