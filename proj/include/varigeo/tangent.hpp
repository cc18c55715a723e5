#pragma once

#include "varigeo/linalg.hpp"

#include <optional>
#include <string>

namespace varigeo {

struct TangentElement {
    Mat W1, W2, W3, K;  // s x s, s x (n-s), (m-s) x s, (m-s) x (n-s)
    Mat assemble(const MatrixPoint& P) const;
};

TangentElement extract_blocks(const MatrixPoint& P, const Mat& eta);

struct TangentCertificate {
    bool member = false;
    TangentElement blocks;   // always filled
    Vec normal_spectrum;     // singular values of K
    double violation = 0.0;  // sigma_{r-s+1}(K), 0 when the budget is not exceeded
    double threshold = 0.0;
};

// rank(U_perp^T eta V_perp) <= r - s, with singular values counted when they
// exceed rank_tol * ||eta||_F.
TangentCertificate tangent_membership(const MatrixPoint& P, const Mat& eta, const RankSpec& spec);

struct SecondOrderElement {
    int ell = 0;
    double ell_gap = 0.0;  // margin of the rank decision for the normal component
    Mat U_eta, V_eta, U_eta_perp, V_eta_perp;
    Mat curvature;         // 2 eta X^+ eta
    Mat W1p, W2p, W3p, J;  // blocks of zeta - curvature in [U+ U_eta_perp] x [V+ V_eta_perp]
};

struct SecondOrderCertificate {
    bool member = false;
    SecondOrderElement element;
    Vec j_spectrum;
    double violation = 0.0;
    double threshold = 0.0;
};

SecondOrderElement second_order_frame(const MatrixPoint& P, const Mat& eta);

SecondOrderCertificate second_order_membership(const MatrixPoint& P, const Mat& eta,
                                               const Mat& zeta, const RankSpec& spec);

// P_U E P_V + P_U E P_Vperp + P_Uperp E P_V + trunc_{r-s}(P_Uperp E P_Vperp)
Mat project_tangent_cone(const MatrixPoint& P, const Mat& E, const RankSpec& spec);

bool frechet_normal_membership(const MatrixPoint& P, const Mat& Yc, const RankSpec& spec,
                               double tol = 1e-8);
bool mordukhovich_normal_membership(const MatrixPoint& P, const Mat& Yc, const RankSpec& spec,
                                    double tol = 1e-8);

// Rank-r points X_i = X + (1/i) U_perp W V_perp^T approaching X (s < r) at
// which Yc is a Frechet normal; W is chosen orthogonal to Yc's singular spaces.
// Returns an empty optional when no such W exists for the given Yc.
std::optional<Mat> outer_limit_witness_direction(const MatrixPoint& P, const Mat& Yc,
                                                 const RankSpec& spec);

// Generators used by tests, the acceptance suite and the corpus command.
Mat random_tangent_member(const MatrixPoint& P, const RankSpec& spec, Rng& rng);
Mat random_tangent_nonmember(const MatrixPoint& P, const RankSpec& spec, Rng& rng);
Mat random_second_order_member(const MatrixPoint& P, const Mat& eta, const RankSpec& spec,
                               Rng& rng);
Mat random_second_order_nonmember(const MatrixPoint& P, const Mat& eta, const RankSpec& spec,
                                  Rng& rng);

}  // namespace varigeo
