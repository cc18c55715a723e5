#include "varigeo/linalg.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

namespace varigeo {

RankSpec make_spec(const Mat& X, int r) {
    RankSpec s{r, static_cast<int>(std::min(X.rows(), X.cols()))};
    check_spec(X, s);
    return s;
}

void check_spec(const Mat& X, const RankSpec& spec) {
    int k = static_cast<int>(std::min(X.rows(), X.cols()));
    if (spec.k != k) throw std::invalid_argument("rank spec k does not match matrix shape");
    if (spec.r < 0 || spec.r > k) throw std::invalid_argument("rank bound outside [0, min(m,n)]");
}

void assert_finite(const Mat& M, const char* what) {
    if (!M.allFinite()) throw std::invalid_argument(std::string(what) + ": non-finite entries");
}

Mat MatrixPoint::Ubar() const {
    Mat B(rows(), rows());
    B << U, U_perp;
    return B;
}

Mat MatrixPoint::Vbar() const {
    Mat B(cols(), cols());
    B << V, V_perp;
    return B;
}

Mat MatrixPoint::reconstruct() const {
    return U * sigma.asDiagonal() * V.transpose();
}

// Basis of range(I - Q Q^T) from a column-pivoted QR of the projector,
// re-orthogonalized against Q.
Mat orth_complement(const Mat& Q, int m) {
    int s = static_cast<int>(Q.cols());
    int c = m - s;
    if (c <= 0) return Mat(m, 0);
    if (s == 0) return Mat::Identity(m, m);
    Mat P = Mat::Identity(m, m) - Q * Q.transpose();
    Eigen::ColPivHouseholderQR<Mat> qr(P);
    Mat C = qr.householderQ() * Mat::Identity(m, c);
    C -= Q * (Q.transpose() * C);
    Eigen::HouseholderQR<Mat> qr2(C);
    Mat C2 = qr2.householderQ() * Mat::Identity(m, c);
    Mat R = qr2.matrixQR().topRows(c).triangularView<Eigen::Upper>();
    for (int j = 0; j < c; ++j)
        if (R(j, j) < 0) C2.col(j) *= -1.0;
    return C2;
}

namespace {

// Flip the sign so the largest-magnitude entry is positive (first max wins).
double canonical_sign(const Eigen::Ref<const Vec>& u) {
    Eigen::Index best = 0;
    double mag = -1.0;
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        if (std::abs(u(i)) > mag) {
            mag = std::abs(u(i));
            best = i;
        }
    }
    return u.size() > 0 && u(best) < 0 ? -1.0 : 1.0;
}

}  // namespace

MatrixPoint resolve_point(const Mat& X, double rank_tol) {
    assert_finite(X, "resolve_point");
    if (!(rank_tol > 0)) throw std::invalid_argument("rank_tol must be positive");
    MatrixPoint P;
    P.X = X;
    P.rank_tol = rank_tol;
    const int m = static_cast<int>(X.rows()), n = static_cast<int>(X.cols());
    Eigen::JacobiSVD<Mat> svd(X, Eigen::ComputeFullU | Eigen::ComputeFullV);
    P.all_sigma = svd.singularValues();
    const double s1 = P.all_sigma.size() ? P.all_sigma(0) : 0.0;
    int s = 0;
    if (s1 > 0)
        for (Eigen::Index i = 0; i < P.all_sigma.size(); ++i)
            if (P.all_sigma(i) > rank_tol * s1) ++s;
    P.s = s;
    P.sigma = P.all_sigma.head(s);
    P.U = svd.matrixU().leftCols(s);
    P.V = svd.matrixV().leftCols(s);
    for (int i = 0; i < s; ++i) {
        double f = canonical_sign(P.U.col(i));
        P.U.col(i) *= f;
        P.V.col(i) *= f;
    }
    P.U_perp = orth_complement(P.U, m);
    P.V_perp = orth_complement(P.V, n);
    return P;
}

SymPoint resolve_sym(const Mat& X, double rank_tol) {
    assert_finite(X, "resolve_sym");
    if (X.rows() != X.cols()) throw std::invalid_argument("symmetric point must be square");
    if (!is_symmetric(X)) throw std::invalid_argument("base matrix is not symmetric");
    if (!(rank_tol > 0)) throw std::invalid_argument("rank_tol must be positive");
    SymPoint P;
    P.X = sym(X);
    P.rank_tol = rank_tol;
    const int n = static_cast<int>(X.rows());
    eig_desc(P.X, P.all_lambda, P.Q);
    for (int j = 0; j < n; ++j) {
        double f = canonical_sign(P.Q.col(j));
        P.Q.col(j) *= f;
    }
    double scale = n ? P.all_lambda.cwiseAbs().maxCoeff() : 0.0;
    std::vector<int> keep;
    if (scale > 0) {
        for (int j = 0; j < n; ++j) {
            if (P.all_lambda(j) > rank_tol * scale) {
                keep.push_back(j);
                ++P.s_plus;
            }
        }
        for (int j = 0; j < n; ++j) {
            if (P.all_lambda(j) < -rank_tol * scale) {
                keep.push_back(j);
                ++P.s_minus;
            }
        }
    }
    P.s = static_cast<int>(keep.size());
    P.lambda.resize(P.s);
    P.U.resize(n, P.s);
    for (int c = 0; c < P.s; ++c) {
        P.lambda(c) = P.all_lambda(keep[c]);
        P.U.col(c) = P.Q.col(keep[c]);
    }
    P.U_perp = orth_complement(P.U, n);
    return P;
}

Mat project_bounded_rank(const Mat& X, const RankSpec& spec) {
    check_spec(X, spec);
    assert_finite(X, "project_bounded_rank");
    return truncate_rank(X, spec.r);
}

Mat truncate_rank(const Mat& M, int r) {
    if (r <= 0 || M.size() == 0) return Mat::Zero(M.rows(), M.cols());
    int k = static_cast<int>(std::min(M.rows(), M.cols()));
    if (r >= k) return M;
    Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return svd.matrixU().leftCols(r) * svd.singularValues().head(r).asDiagonal() *
           svd.matrixV().leftCols(r).transpose();
}

Mat pseudoinverse(const MatrixPoint& P) {
    if (P.s == 0) return Mat::Zero(P.cols(), P.rows());
    return P.V * P.sigma.cwiseInverse().asDiagonal() * P.U.transpose();
}

Mat pseudoinverse(const SymPoint& P) {
    if (P.s == 0) return Mat::Zero(P.n(), P.n());
    return P.U * P.lambda.cwiseInverse().asDiagonal() * P.U.transpose();
}

Vec singular_values(const Mat& M) {
    if (M.size() == 0) return Vec(0);
    Eigen::JacobiSVD<Mat> svd(M);
    return svd.singularValues();
}

int numeric_rank(const Mat& M, double abs_tol) {
    Vec s = singular_values(M);
    int r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > abs_tol) ++r;
    return r;
}

Mat sym(const Mat& M) { return 0.5 * (M + M.transpose()); }

bool is_symmetric(const Mat& M, double rel_tol) {
    if (M.rows() != M.cols()) return false;
    double nrm = M.norm();
    return (M - M.transpose()).norm() <= rel_tol * std::max(nrm, 1e-300) || nrm == 0.0;
}

void eig_desc(const Mat& S, Vec& vals, Mat& vecs) {
    const int n = static_cast<int>(S.rows());
    if (n == 0) {
        vals.resize(0);
        vecs.resize(0, 0);
        return;
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(sym(S));
    vals = es.eigenvalues().reverse();
    vecs = es.eigenvectors().rowwise().reverse();
}

Vec eigvals_desc(const Mat& S) {
    if (S.rows() == 0) return Vec(0);
    Eigen::SelfAdjointEigenSolver<Mat> es(sym(S), Eigen::EigenvaluesOnly);
    return es.eigenvalues().reverse();
}

Mat orth_basis(const Mat& M, double rel_tol) {
    if (M.cols() == 0 || M.rows() == 0) return Mat(M.rows(), 0);
    Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeFullU);
    Vec s = svd.singularValues();
    double s1 = s.size() ? s(0) : 0.0;
    int r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > rel_tol * std::max(s1, 1e-300) && s(i) > 0) ++r;
    return svd.matrixU().leftCols(r);
}

Mat null_basis(const Mat& M, double rel_tol) {
    const int n = static_cast<int>(M.cols());
    if (M.rows() == 0) return Mat::Identity(n, n);
    Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeFullV);
    Vec s = svd.singularValues();
    double s1 = s.size() ? s(0) : 0.0;
    int r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > rel_tol * std::max(s1, 1e-300) && s(i) > 0) ++r;
    return svd.matrixV().rightCols(n - r);
}

}  // namespace varigeo
