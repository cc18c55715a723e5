#pragma once

#include "varigeo/oracle.hpp"
#include "varigeo/tangent.hpp"

#include <string>
#include <vector>

namespace varigeo {

// ---------------------------------------------------------------------------
// Symmetric and PSD low-rank sets

struct SymTangentCertificate {
    bool member = false;
    Mat W1, W2, J;     // blocks of eta in [U U_perp]
    Vec j_spectrum;    // eigenvalues of J, descending
    int j_pos = 0, j_neg = 0;
    double threshold = 0.0;
    double violation = 0.0;  // rank excess magnitude, or -lambda_min(J) for the PSD test
    std::string reason;
};

struct SymSecondOrderCertificate {
    bool member = false;
    int ell = 0;  // s + rank(J)
    Mat U_eta, U_eta_perp;
    Mat curvature;  // 2 eta X^+ eta
    Mat L;          // U_eta_perp^T (zeta - curvature) U_eta_perp
    Vec l_spectrum;
    double threshold = 0.0;
    double violation = 0.0;
    std::string reason;
};

SymTangentCertificate tangent_sym(const SymPoint& P, const RankSpec& spec, const Mat& eta);
SymSecondOrderCertificate tangent2_sym(const SymPoint& P, const Mat& eta, const Mat& zeta,
                                       const RankSpec& spec);
// Base point must be PSD.
SymTangentCertificate tangent_psd(const SymPoint& P, const RankSpec& spec, const Mat& eta);
SymSecondOrderCertificate tangent2_psd(const SymPoint& P, const Mat& eta, const Mat& zeta,
                                       const RankSpec& spec);

// S_j = { lambda_j = lambda_{j+n-r-1} = 0 }, j = 1..r+1.
bool in_stratum(const SymPoint& P, int j, const RankSpec& spec);
// Zeros of the eigenvalue directional derivatives at the two stratum indices.
bool stratum_tangent(const SymPoint& P, int j, const RankSpec& spec, const Mat& eta,
                     double tol = 1e-8);
// Union over the strata that contain X.
bool tangent_sym_by_strata(const SymPoint& P, const RankSpec& spec, const Mat& eta,
                           double tol = 1e-8);

// Nearest points; the distance of a nonsymmetric argument includes its skew part.
Mat project_sym_bounded_rank(const Mat& Y, int r);
Mat project_psd_bounded_rank(const Mat& Y, int r);
SetProjector sym_bounded_rank_projector(int r);
SetProjector psd_bounded_rank_projector(int r);

Mat random_sym_low_rank(int n, int s_plus, int s_minus, Rng& rng);
Mat random_sym_tangent_member(const SymPoint& P, const RankSpec& spec, bool psd, Rng& rng);
Mat random_sym_tangent_nonmember(const SymPoint& P, const RankSpec& spec, bool psd, Rng& rng);
Mat random_sym_second_order_member(const SymPoint& P, const Mat& eta, const RankSpec& spec,
                                   bool psd, Rng& rng);

// ---------------------------------------------------------------------------
// Intersections with smooth constraint sets H = { h(X) = 0 }

struct CqReport {
    std::string name;    // which qualification applies
    bool holds = true;
    double margin = 0.0; // smallest singular value of the relevant Gram system
    std::string detail;
};

struct ConstraintH {
    enum class Kind { ambient, affine, sphere, oblique, hyperbolic };
    Kind kind = Kind::ambient;
    std::vector<Mat> A;  // affine only
    Vec b;

    static ConstraintH ambient();
    static ConstraintH affine(std::vector<Mat> A, Vec b);
    static ConstraintH sphere();
    static ConstraintH oblique();
    static ConstraintH hyperbolic();

    int count(const Mat& X) const;  // number of scalar constraints at this shape
    Vec value(const Mat& X) const;  // h(X)
    Vec first(const Mat& X, const Mat& eta) const;  // Dh(X)[eta]
    // Dh(X)[zeta] + D^2h(X)[eta, eta]
    Vec second(const Mat& X, const Mat& eta, const Mat& zeta) const;
    // Rank-preserving map back onto H (affine: least-squares correction).
    Mat restore(const Mat& Z) const;
    double scale() const;  // instance scale used by the tolerances
};

std::string to_string(ConstraintH::Kind k);
ConstraintH::Kind constraint_kind_from_string(const std::string& s);

// Throws std::invalid_argument with a diagnostic when X is not in H.
void check_feasible(const Mat& X, const ConstraintH& H, double tol = 1e-8);

CqReport cq_report(const MatrixPoint& P, const ConstraintH& H, const RankSpec& spec);
CqReport cq_report_psd(const SymPoint& P, const ConstraintH& H, const RankSpec& spec);

struct IntersectionCertificate {
    bool member = false;        // conjunction of both parts
    bool cone_member = false;
    bool h_member = false;
    double h_residual = 0.0;
    double h_threshold = 0.0;
    CqReport cq;                // the rule is only certified when cq.holds
};

IntersectionCertificate tangent_intersection(const MatrixPoint& P, const ConstraintH& H,
                                             const RankSpec& spec, const Mat& eta,
                                             double tol = 1e-8);
IntersectionCertificate tangent2_intersection(const MatrixPoint& P, const ConstraintH& H,
                                              const RankSpec& spec, const Mat& eta,
                                              const Mat& zeta, double tol = 1e-8);

enum class SymCone { symmetric, psd };
IntersectionCertificate tangent_intersection(const SymPoint& P, const ConstraintH& H,
                                             const RankSpec& spec, const Mat& eta, SymCone cone,
                                             double tol = 1e-8);
IntersectionCertificate tangent2_intersection(const SymPoint& P, const ConstraintH& H,
                                              const RankSpec& spec, const Mat& eta,
                                              const Mat& zeta, SymCone cone, double tol = 1e-8);

// Alternating projections (cone truncation, then restore onto H), 50 rounds by
// default. An upper bound on the distance, used as the decay oracle.
SetProjector intersection_projector(const ConstraintH& H, int r, int rounds = 50);
SetProjector sym_intersection_projector(const ConstraintH& H, int r, SymCone cone,
                                        int rounds = 50);

// Feasible points and directions for tests and the acceptance suite.
Mat random_feasible_point(const ConstraintH& H, int m, int n, int s, Rng& rng);
// Affine constraints with b = A(X) so that X is feasible.
ConstraintH random_affine_through(const Mat& X, int q, bool symmetric, Rng& rng);
// Minimum-norm correction inside the tangent space of the fixed-rank stratum so
// that the H linear condition holds; the normal block is left untouched.
Mat correct_into_h(const MatrixPoint& P, const ConstraintH& H, const Mat& eta);
Mat correct_into_h(const SymPoint& P, const ConstraintH& H, const Mat& eta);
// Same for the second-order condition, correcting inside the span of [U+].
Mat correct_into_h2(const MatrixPoint& P, const ConstraintH& H, const Mat& eta,
                    const Mat& zeta);

}  // namespace varigeo
