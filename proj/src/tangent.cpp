#include "varigeo/tangent.hpp"

#include <algorithm>
#include <stdexcept>

namespace varigeo {

namespace {

void check_shape(const MatrixPoint& P, const Mat& A, const char* what) {
    if (A.rows() != P.rows() || A.cols() != P.cols())
        throw std::invalid_argument(std::string(what) + ": shape mismatch with base point");
    assert_finite(A, what);
}

void check_base(const MatrixPoint& P, const RankSpec& spec) {
    check_spec(P.X, spec);
    if (P.s > spec.r) throw std::invalid_argument("base point has rank above the bound");
}

// Random (rows x cols) matrix of the given rank with singular values in [0.5, 1.5].
Mat random_rank_block(int rows, int cols, int rank, Rng& rng) {
    rank = std::min({rank, rows, cols});
    if (rank <= 0) return Mat::Zero(rows, cols);
    Mat A = rng.orthonormal(rows, rank), B = rng.orthonormal(cols, rank);
    Vec d(rank);
    for (int i = 0; i < rank; ++i) d(i) = rng.uniform(0.5, 1.5);
    return A * d.asDiagonal() * B.transpose();
}

}  // namespace

Mat TangentElement::assemble(const MatrixPoint& P) const {
    return P.U * W1 * P.V.transpose() + P.U * W2 * P.V_perp.transpose() +
           P.U_perp * W3 * P.V.transpose() + P.U_perp * K * P.V_perp.transpose();
}

TangentElement extract_blocks(const MatrixPoint& P, const Mat& eta) {
    check_shape(P, eta, "extract_blocks");
    TangentElement T;
    T.W1 = P.U.transpose() * eta * P.V;
    T.W2 = P.U.transpose() * eta * P.V_perp;
    T.W3 = P.U_perp.transpose() * eta * P.V;
    T.K = P.U_perp.transpose() * eta * P.V_perp;
    return T;
}

TangentCertificate tangent_membership(const MatrixPoint& P, const Mat& eta, const RankSpec& spec) {
    check_base(P, spec);
    TangentCertificate C;
    C.blocks = extract_blocks(P, eta);
    C.normal_spectrum = singular_values(C.blocks.K);
    C.threshold = P.rank_tol * eta.norm();
    int budget = spec.r - P.s;
    double next = budget < C.normal_spectrum.size() ? C.normal_spectrum(budget) : 0.0;
    C.member = next <= C.threshold;
    C.violation = C.member ? 0.0 : next;
    return C;
}

SecondOrderElement second_order_frame(const MatrixPoint& P, const Mat& eta) {
    check_shape(P, eta, "second_order_frame");
    SecondOrderElement E;
    Mat K = P.U_perp.transpose() * eta * P.V_perp;
    const int mr = static_cast<int>(K.rows()), nc = static_cast<int>(K.cols());
    double thr = P.rank_tol * eta.norm();
    int rho = 0;
    Mat UK, VK;
    if (mr > 0 && nc > 0) {
        Eigen::JacobiSVD<Mat> svd(K, Eigen::ComputeFullU | Eigen::ComputeFullV);
        Vec sk = svd.singularValues();
        while (rho < sk.size() && sk(rho) > thr) ++rho;
        double above = rho > 0 ? sk(rho - 1) : std::numeric_limits<double>::infinity();
        double below = rho < sk.size() ? sk(rho) : 0.0;
        E.ell_gap = std::min(above - thr, thr - below);
        UK = svd.matrixU();
        VK = svd.matrixV();
    } else {
        UK = Mat::Identity(mr, mr);
        VK = Mat::Identity(nc, nc);
        E.ell_gap = std::numeric_limits<double>::infinity();
    }
    E.ell = P.s + rho;
    E.U_eta = P.U_perp * UK.leftCols(rho);
    E.V_eta = P.V_perp * VK.leftCols(rho);
    E.U_eta_perp = P.U_perp * UK.rightCols(mr - rho);
    E.V_eta_perp = P.V_perp * VK.rightCols(nc - rho);
    E.curvature = 2.0 * eta * pseudoinverse(P) * eta;
    return E;
}

SecondOrderCertificate second_order_membership(const MatrixPoint& P, const Mat& eta,
                                               const Mat& zeta, const RankSpec& spec) {
    check_base(P, spec);
    check_shape(P, zeta, "second_order_membership");
    if (!tangent_membership(P, eta, spec).member)
        throw std::invalid_argument("eta is not in the tangent cone");
    SecondOrderCertificate C;
    SecondOrderElement& E = C.element;
    E = second_order_frame(P, eta);
    Mat Up(P.rows(), E.ell), Vp(P.cols(), E.ell);
    Up << P.U, E.U_eta;
    Vp << P.V, E.V_eta;
    Mat D = zeta - E.curvature;
    E.W1p = Up.transpose() * D * Vp;
    E.W2p = Up.transpose() * D * E.V_eta_perp;
    E.W3p = E.U_eta_perp.transpose() * D * Vp;
    E.J = E.U_eta_perp.transpose() * D * E.V_eta_perp;
    C.j_spectrum = singular_values(E.J);
    C.threshold = P.rank_tol * std::max({zeta.norm(), E.curvature.norm(), 1e-300});
    int budget = spec.r - E.ell;
    double next = budget < C.j_spectrum.size() ? C.j_spectrum(budget) : 0.0;
    C.member = next <= C.threshold;
    C.violation = C.member ? 0.0 : next;
    return C;
}

Mat project_tangent_cone(const MatrixPoint& P, const Mat& E, const RankSpec& spec) {
    check_base(P, spec);
    check_shape(P, E, "project_tangent_cone");
    Mat PU = P.U * P.U.transpose(), PV = P.V * P.V.transpose();
    Mat normal = P.U_perp.transpose() * E * P.V_perp;
    return PU * E + E * PV - PU * E * PV +
           P.U_perp * truncate_rank(normal, spec.r - P.s) * P.V_perp.transpose();
}

bool frechet_normal_membership(const MatrixPoint& P, const Mat& Yc, const RankSpec& spec,
                               double tol) {
    check_base(P, spec);
    check_shape(P, Yc, "frechet_normal_membership");
    if (P.s < spec.r) return Yc.norm() <= tol;
    Mat inner = P.U_perp * (P.U_perp.transpose() * Yc * P.V_perp) * P.V_perp.transpose();
    return (Yc - inner).norm() <= tol * Yc.norm();
}

bool mordukhovich_normal_membership(const MatrixPoint& P, const Mat& Yc, const RankSpec& spec,
                                    double tol) {
    check_base(P, spec);
    check_shape(P, Yc, "mordukhovich_normal_membership");
    double nrm = Yc.norm();
    if (nrm == 0.0) return true;
    Mat inner = P.U_perp * (P.U_perp.transpose() * Yc * P.V_perp) * P.V_perp.transpose();
    if ((Yc - inner).norm() > tol * nrm) return false;
    return numeric_rank(Yc, tol * nrm) <= spec.k - spec.r;
}

std::optional<Mat> outer_limit_witness_direction(const MatrixPoint& P, const Mat& Yc,
                                                 const RankSpec& spec) {
    check_base(P, spec);
    int d = spec.r - P.s;
    if (d == 0) return Mat::Zero(P.rows(), P.cols());
    Mat R = P.U_perp.transpose() * Yc * P.V_perp;
    double tol = P.rank_tol * std::max(Yc.norm(), 1e-300);
    Mat UL = null_basis(R.transpose(), 0.0), VR = null_basis(R, 0.0);
    // null_basis with a relative cutoff of zero keeps only exact zeros; use an
    // absolute cutoff instead
    Eigen::JacobiSVD<Mat> svd(R, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Vec sv = svd.singularValues();
    int rk = 0;
    while (rk < sv.size() && sv(rk) > tol) ++rk;
    UL = svd.matrixU().rightCols(R.rows() - rk);
    VR = svd.matrixV().rightCols(R.cols() - rk);
    if (UL.cols() < d || VR.cols() < d) return std::nullopt;
    Mat W = UL.leftCols(d) * VR.leftCols(d).transpose();
    return P.U_perp * W * P.V_perp.transpose();
}

Mat random_tangent_member(const MatrixPoint& P, const RankSpec& spec, Rng& rng) {
    check_base(P, spec);
    const int m = P.rows(), n = P.cols(), s = P.s;
    TangentElement T;
    T.W1 = rng.gaussian(s, s);
    T.W2 = rng.gaussian(s, n - s);
    T.W3 = rng.gaussian(m - s, s);
    T.K = random_rank_block(m - s, n - s, spec.r - s, rng);
    return T.assemble(P);
}

Mat random_tangent_nonmember(const MatrixPoint& P, const RankSpec& spec, Rng& rng) {
    check_base(P, spec);
    const int m = P.rows(), n = P.cols(), s = P.s;
    if (spec.r >= spec.k) throw std::invalid_argument("no tangent non-members when r = min(m, n)");
    TangentElement T;
    T.W1 = rng.gaussian(s, s);
    T.W2 = rng.gaussian(s, n - s);
    T.W3 = rng.gaussian(m - s, s);
    T.K = random_rank_block(m - s, n - s, spec.r - s + 1, rng);
    return T.assemble(P);
}

namespace {

Mat second_order_with_j(const MatrixPoint& P, const Mat& eta, int j_rank, Rng& rng) {
    SecondOrderElement E = second_order_frame(P, eta);
    const int m = P.rows(), n = P.cols(), l = E.ell;
    Mat Up(m, l), Vp(n, l);
    Up << P.U, E.U_eta;
    Vp << P.V, E.V_eta;
    Mat J = random_rank_block(m - l, n - l, j_rank, rng);
    return E.curvature + Up * rng.gaussian(l, l) * Vp.transpose() +
           Up * rng.gaussian(l, n - l) * E.V_eta_perp.transpose() +
           E.U_eta_perp * rng.gaussian(m - l, l) * Vp.transpose() +
           E.U_eta_perp * J * E.V_eta_perp.transpose();
}

}  // namespace

Mat random_second_order_member(const MatrixPoint& P, const Mat& eta, const RankSpec& spec,
                               Rng& rng) {
    check_base(P, spec);
    SecondOrderElement E = second_order_frame(P, eta);
    if (E.ell > spec.r) throw std::invalid_argument("eta is not in the tangent cone");
    return second_order_with_j(P, eta, spec.r - E.ell, rng);
}

Mat random_second_order_nonmember(const MatrixPoint& P, const Mat& eta, const RankSpec& spec,
                                  Rng& rng) {
    check_base(P, spec);
    SecondOrderElement E = second_order_frame(P, eta);
    if (E.ell > spec.r) throw std::invalid_argument("eta is not in the tangent cone");
    if (spec.r - E.ell + 1 > std::min(P.rows(), P.cols()) - E.ell)
        throw std::invalid_argument("J block too small to violate the rank budget");
    return second_order_with_j(P, eta, spec.r - E.ell + 1, rng);
}

}  // namespace varigeo
