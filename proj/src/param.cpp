#include "varigeo/param.hpp"

#include <cmath>
#include <stdexcept>

namespace varigeo {

namespace {

double inner(const Mat& A, const Mat& B) { return (A.array() * B.array()).sum(); }

Vec vec(const Mat& M) { return Eigen::Map<const Vec>(M.data(), M.size()); }

Mat unvec(const Vec& v, int m, int n) { return Eigen::Map<const Mat>(v.data(), m, n); }

int rank_of_columns(const Mat& M) {
    if (M.cols() == 0) return 0;
    Vec s = singular_values(M);
    if (s.size() == 0 || s(0) == 0.0) return 0;
    return numeric_rank(M, 1e-9 * s(0));
}

// polar factor M (M^T M)^{-1/2}
Mat polar(const Mat& M) {
    Eigen::SelfAdjointEigenSolver<Mat> es(M.transpose() * M);
    Vec d = es.eigenvalues().array().rsqrt();
    return M * es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

LiftedPoint LiftedPoint::lr(Mat L, Mat R) {
    assert_finite(L, "lr factor L");
    assert_finite(R, "lr factor R");
    if (L.cols() != R.cols()) throw std::invalid_argument("lr factors need the same number of columns");
    LiftedPoint Y;
    Y.kind = Kind::lr;
    Y.L = std::move(L);
    Y.R = std::move(R);
    return Y;
}

LiftedPoint LiftedPoint::desing(Mat X, Mat Q) {
    assert_finite(X, "desing point X");
    assert_finite(Q, "desing frame Q");
    if (Q.rows() != X.cols()) throw std::invalid_argument("desing frame must have n rows");
    if (Q.cols() > Q.rows()) throw std::invalid_argument("desing frame has too many columns");
    if ((Q.transpose() * Q - Mat::Identity(Q.cols(), Q.cols())).norm() > 1e-10)
        throw std::invalid_argument("desing frame is not orthonormal");
    Mat G = Mat::Identity(Q.rows(), Q.rows()) - Q * Q.transpose();
    if ((X * G).norm() > 1e-10 * std::max(1.0, X.norm()))
        throw std::invalid_argument("desing point violates X G = 0");
    LiftedPoint Y;
    Y.kind = Kind::desing;
    Y.X = std::move(X);
    Y.Q = std::move(Q);
    return Y;
}

int LiftedPoint::m() const { return static_cast<int>(kind == Kind::lr ? L.rows() : X.rows()); }
int LiftedPoint::n() const { return static_cast<int>(kind == Kind::lr ? R.rows() : X.cols()); }
int LiftedPoint::r() const { return static_cast<int>(kind == Kind::lr ? L.cols() : Q.cols()); }
Mat LiftedPoint::image() const { return kind == Kind::lr ? Mat(L * R.transpose()) : X; }
Mat LiftedPoint::G() const { return Mat::Identity(n(), n()) - Q * Q.transpose(); }
Mat LiftedPoint::W() const { return X * Q; }
Mat LiftedPoint::Q_perp() const { return orth_complement(Q, n()); }

std::string to_string(LiftedPoint::Kind k) { return k == LiftedPoint::Kind::lr ? "lr" : "desing"; }

LiftedPoint::Kind lifted_kind_from_string(const std::string& s) {
    if (s == "lr") return LiftedPoint::Kind::lr;
    if (s == "desing") return LiftedPoint::Kind::desing;
    throw std::invalid_argument("unknown parameterization kind: " + s);
}

LiftedDirection lifted_zero(const LiftedPoint& Y) {
    const int m = Y.m(), n = Y.n(), r = Y.r();
    if (Y.kind == LiftedPoint::Kind::lr) return {Mat::Zero(m, r), Mat::Zero(n, r)};
    return {Mat::Zero(m, r), Mat::Zero(n - r, r)};
}

std::vector<LiftedDirection> lifted_basis(const LiftedPoint& Y) {
    LiftedDirection z = lifted_zero(Y);
    std::vector<LiftedDirection> out;
    for (Eigen::Index i = 0; i < z.A.size(); ++i) {
        LiftedDirection v = z;
        v.A.data()[i] = 1.0;
        out.push_back(std::move(v));
    }
    for (Eigen::Index i = 0; i < z.B.size(); ++i) {
        LiftedDirection v = z;
        v.B.data()[i] = 1.0;
        out.push_back(std::move(v));
    }
    return out;
}

namespace {

void check_direction(const LiftedPoint& Y, const LiftedDirection& v) {
    LiftedDirection z = lifted_zero(Y);
    if (v.A.rows() != z.A.rows() || v.A.cols() != z.A.cols() || v.B.rows() != z.B.rows() ||
        v.B.cols() != z.B.cols())
        throw std::invalid_argument("lifted direction has the wrong shape");
}

// symmetric bilinear D^2 phi[v, w]
Mat d2phi(const LiftedPoint& Y, const LiftedDirection& v, const LiftedDirection& w, const Mat& Qp) {
    if (Y.kind == LiftedPoint::Kind::lr) return v.A * w.B.transpose() + w.A * v.B.transpose();
    Mat W = Y.W();
    return v.A * (Qp * w.B).transpose() + w.A * (Qp * v.B).transpose() -
           0.5 * W * (v.B.transpose() * w.B + w.B.transpose() * v.B) * Y.Q.transpose();
}

Mat l_apply(const LiftedPoint& Y, const LiftedDirection& v, const Mat& Qp) {
    if (Y.kind == LiftedPoint::Kind::lr) return v.A * Y.R.transpose() + Y.L * v.B.transpose();
    return v.A * Y.Q.transpose() + Y.W() * (Qp * v.B).transpose();
}

}  // namespace

Mat lift_L_apply(const LiftedPoint& Y, const LiftedDirection& v) {
    check_direction(Y, v);
    return l_apply(Y, v, Y.kind == LiftedPoint::Kind::desing ? Y.Q_perp() : Mat());
}

Mat lift_Q_apply(const LiftedPoint& Y, const LiftedDirection& v, const LiftedDirection& u) {
    check_direction(Y, v);
    check_direction(Y, u);
    Mat Qp = Y.kind == LiftedPoint::Kind::desing ? Y.Q_perp() : Mat();
    return l_apply(Y, u, Qp) + d2phi(Y, v, v, Qp);
}

LiftedPoint lifted_curve(const LiftedPoint& Y, const LiftedDirection& v, const LiftedDirection& u, double t) {
    check_direction(Y, v);
    check_direction(Y, u);
    const double h = 0.5 * t * t;
    if (Y.kind == LiftedPoint::Kind::lr) return LiftedPoint::lr(Y.L + t * v.A + h * u.A, Y.R + t * v.B + h * u.B);
    Mat Qp = Y.Q_perp();
    Mat Wt = Y.W() + t * v.A + h * u.A;
    Mat Qt = polar(Y.Q + Qp * (t * v.B + h * u.B));
    return LiftedPoint::desing(Wt * Qt.transpose(), Qt);
}

namespace {

void check_lifted(const LiftedPoint& Y, const RankSpec& spec) {
    check_spec(Y.image(), spec);
    if (Y.r() != spec.r) throw std::invalid_argument("parameterization rank differs from the rank bound");
    if (spec.r >= spec.k) throw std::invalid_argument("rank bound must be below min(m, n) for the 2=>2 test");
}

}  // namespace

LQReport two_two_check(const LiftedPoint& Y, const RankSpec& spec) {
    check_lifted(Y, spec);
    const int m = Y.m(), n = Y.n(), r = Y.r();
    LQReport rep;
    MatrixPoint P = resolve_point(Y.image());
    rep.s = P.s;
    auto basis = lifted_basis(Y);
    Mat Qp = Y.kind == LiftedPoint::Kind::desing ? Y.Q_perp() : Mat();
    Mat S(m * n, basis.size());
    for (size_t k = 0; k < basis.size(); ++k) S.col(k) = vec(l_apply(Y, basis[k], Qp));
    rep.im_L_dim = rank_of_columns(S);
    rep.tangent_dim = rep.s == r ? r * (m + n - r) : m * n;
    rep.two_two = rep.s == r;
    rep.full_image = rep.s == r && rep.im_L_dim == rep.tangent_dim;
    if (!rep.two_two) {
        // w = a b^T with a, b orthogonal to the factor ranges: it lies in the cone
        // (rank one in the normal block) and is orthogonal to every L-image.
        Mat left = Y.kind == LiftedPoint::Kind::lr ? Y.L : Y.W();
        Mat right = Y.kind == LiftedPoint::Kind::lr ? Y.R : Y.Q;
        Mat a = orth_complement(orth_basis(left), m), b = orth_complement(orth_basis(right), n);
        if (a.cols() > 0 && b.cols() > 0) rep.witness = Mat(a.col(0) * b.col(0).transpose());
    }
    return rep;
}

Objective counterexample_objective(const LiftedPoint& Y, const RankSpec& spec) {
    LQReport rep = two_two_check(Y, spec);
    if (!rep.witness) throw std::invalid_argument("point satisfies 2=>2; no counterexample exists");
    Vec w = vec(*rep.witness);
    Mat H = -(w * w.transpose()) / w.squaredNorm();
    Mat X = Y.image();
    Mat C = -unvec(H * vec(X), Y.m(), Y.n());
    Objective f = make_quadratic(H, C);
    f.description = "counterexample";
    return f;
}

LiftedDirection lifted_gradient(const LiftedPoint& Y, const Objective& f) {
    Mat g = f.gradient(Y.image());
    if (Y.kind == LiftedPoint::Kind::lr) return {g * Y.R, g.transpose() * Y.L};
    return {g * Y.Q, Y.Q_perp().transpose() * g.transpose() * Y.W()};
}

double lifted_hessian_quadform(const LiftedPoint& Y, const Objective& f, const LiftedDirection& v) {
    check_direction(Y, v);
    Mat X = Y.image();
    Mat Qp = Y.kind == LiftedPoint::Kind::desing ? Y.Q_perp() : Mat();
    Mat Lv = l_apply(Y, v, Qp);
    return inner(Lv, f.hessian_apply(X, Lv)) + inner(f.gradient(X), d2phi(Y, v, v, Qp));
}

Mat lifted_hessian(const LiftedPoint& Y, const Objective& f) {
    auto basis = lifted_basis(Y);
    const int d = static_cast<int>(basis.size());
    Mat X = Y.image(), g = f.gradient(X);
    Mat Qp = Y.kind == LiftedPoint::Kind::desing ? Y.Q_perp() : Mat();
    std::vector<Mat> Lb(d), HLb(d);
    parallel_for(d, [&](int k) {
        Lb[k] = l_apply(Y, basis[k], Qp);
        HLb[k] = f.hessian_apply(X, Lb[k]);
    });
    Mat Hm(d, d);
    for (int k = 0; k < d; ++k)
        for (int l = k; l < d; ++l)
            Hm(k, l) = Hm(l, k) =
                0.5 * (inner(Lb[k], HLb[l]) + inner(Lb[l], HLb[k])) + inner(g, d2phi(Y, basis[k], basis[l], Qp));
    return Hm;
}

LiftedSecondOrder lifted_second_order(const LiftedPoint& Y, const Objective& f, double tol) {
    LiftedSecondOrder out;
    LiftedDirection g = lifted_gradient(Y, f);
    out.gradient_norm = std::sqrt(g.A.squaredNorm() + g.B.squaredNorm());
    Eigen::SelfAdjointEigenSolver<Mat> es(lifted_hessian(Y, f), Eigen::EigenvaluesOnly);
    out.min_eig = es.eigenvalues()(0);
    double gn = f.gradient(Y.image()).norm();
    out.pass = out.gradient_norm <= tol * (1.0 + gn) && out.min_eig >= -tol;
    return out;
}

CompositionReport desing_composition_check(const LiftedPoint& Y, const RankSpec& spec) {
    if (Y.kind != LiftedPoint::Kind::desing) throw std::invalid_argument("composition check needs a desing point");
    check_lifted(Y, spec);
    const int m = Y.m(), n = Y.n(), r = Y.r();
    Mat Qp = Y.Q_perp(), G = Y.G(), W = Y.W();
    const int s = resolve_point(Y.X).s;
    const int tdim = s == r ? r * (m + n - r) : m * n;
    CompositionReport rep;

    // direct: kernel of (X_dot, kappa) -> X_dot G + X G_dot(kappa)
    const int nx = m * n, nk = (n - r) * r;
    Mat M(nx, nx + nk);
    for (int c = 0; c < nx; ++c) {
        Mat E = Mat::Zero(m, n);
        E.data()[c] = 1.0;
        M.col(c) = vec(E * G);
    }
    for (int c = 0; c < nk; ++c) {
        Mat K = Mat::Zero(n - r, r);
        K.data()[c] = 1.0;
        Mat Gdot = -(Qp * K * Y.Q.transpose() + Y.Q * K.transpose() * Qp.transpose());
        M.col(nx + c) = vec(Y.X * Gdot);
    }
    Mat N = null_basis(M);
    rep.direct_dim = rank_of_columns(N.topRows(nx));

    // composition through R^{m x r} x St(n, r)
    std::vector<Mat> imgs;
    for (int c = 0; c < m * r; ++c) {
        Mat Ld = Mat::Zero(m, r);
        Ld.data()[c] = 1.0;
        imgs.push_back(Ld * Y.Q.transpose());
    }
    for (int i = 0; i < r; ++i)
        for (int j = i + 1; j < r; ++j) {
            Mat Om = Mat::Zero(r, r);
            Om(i, j) = 1.0;
            Om(j, i) = -1.0;
            imgs.push_back(W * (Y.Q * Om).transpose());
        }
    for (int c = 0; c < nk; ++c) {
        Mat K = Mat::Zero(n - r, r);
        K.data()[c] = 1.0;
        imgs.push_back(W * (Qp * K).transpose());
    }
    Mat S(nx, imgs.size());
    for (size_t k = 0; k < imgs.size(); ++k) S.col(k) = vec(imgs[k]);
    rep.composed_dim = rank_of_columns(S);

    rep.direct_full = s == r && rep.direct_dim == tdim;
    rep.composed_full = s == r && rep.composed_dim == tdim;
    rep.agree = rep.direct_dim == rep.composed_dim && rep.direct_full == rep.composed_full;
    return rep;
}

LiftedPoint random_lr_point(int m, int n, int r, int s, Rng& rng) {
    if (s < 0 || s > r) throw std::invalid_argument("image rank must lie in [0, r]");
    auto factor = [&](int rows) {
        return s == 0 ? Mat(Mat::Zero(rows, r)) : Mat(rng.gaussian(rows, s) * rng.gaussian(s, r));
    };
    // alternate which factor carries the deficiency
    if (rng.uniform() < 0.5) return LiftedPoint::lr(factor(m), rng.gaussian(n, r));
    return LiftedPoint::lr(rng.gaussian(m, r), factor(n));
}

LiftedPoint random_desing_point(int m, int n, int r, int s, Rng& rng) {
    if (s < 0 || s > r || r >= n) throw std::invalid_argument("need 0 <= s <= r < n");
    Mat Q = rng.orthonormal(n, r);
    Mat W = s == 0 ? Mat(Mat::Zero(m, r)) : Mat(rng.gaussian(m, s) * rng.gaussian(s, r));
    return LiftedPoint::desing(W * Q.transpose(), Q);
}

LiftedDirection random_lifted_direction(const LiftedPoint& Y, Rng& rng) {
    LiftedDirection z = lifted_zero(Y);
    return {rng.gaussian(static_cast<int>(z.A.rows()), static_cast<int>(z.A.cols())),
            rng.gaussian(static_cast<int>(z.B.rows()), static_cast<int>(z.B.cols()))};
}

}  // namespace varigeo
