#pragma once

#include "varigeo/linalg.hpp"
#include "varigeo/common.hpp"

#include <optional>
#include <string>
#include <vector>

namespace varigeo {

// A point (X, Y) of the graph of the normal cone map of the rank-r set:
// Y = U_perp R V_perp^T with rank(Y) = k - ell <= k - r.
struct GraphPoint {
    MatrixPoint P;  // X
    Mat Y;
    int r = 0, k = 0, s = 0, ell = 0;
    Mat R;                  // U_perp^T Y V_perp
    Mat U_R, V_R;           // compact SVD of R (local coordinates)
    Vec sigma_R;
    Mat U_R_perp, V_R_perp; // complements inside the (m-s), (n-s) blocks
    Mat U_Y, V_Y;           // ambient: U_perp U_R, V_perp V_R

    int m() const { return P.rows(); }
    int n() const { return P.cols(); }
    Mat Sigma() const { return P.sigma.asDiagonal(); }
    Mat Sigma_Y() const { return sigma_R.asDiagonal(); }
};

// Throws std::invalid_argument when (X, Y) is not in the graph (tol relative to the scale).
GraphPoint make_graph_point(const Mat& X, const Mat& Y, int r, double tol = 1e-10);
// X of rank s, Y of rank k - ell in the normal block.
GraphPoint random_graph_point(int m, int n, int r, int s, int ell, Rng& rng);

struct ConeViolation {
    std::string name;
    double magnitude = 0.0;
};

struct GraphTangentCertificate {
    bool member = false;
    double threshold = 0.0;
    std::vector<ConeViolation> violations;
};

GraphTangentCertificate graph_tangent_membership(const GraphPoint& G, const Mat& eta, const Mat& xi,
                                                 double tol = 1e-9);

// Tangent pair built from the curve construction with random admissible parameters.
std::pair<Mat, Mat> random_graph_tangent(const GraphPoint& G, Rng& rng);

// Parameters of the Frechet normal cone (shapes follow the block display):
// A s x s, B1 (k-ell) x s, B2 (m-k+ell-s) x s, C1 s x (k-ell), C2 s x (n-k+ell-s),
// Z and Zhat (m-s) x (n-s).
struct FrechetParams {
    Mat A, B1, B2, C1, C2, Z, Zhat;
};

struct NormalPair {
    Mat upsilon, omega;
};

// Throws when Z or Zhat is not admissible or shapes mismatch.
NormalPair frechet_normal_construct(const GraphPoint& G, const FrechetParams& p);
FrechetParams frechet_normal_extract(const GraphPoint& G, const NormalPair& v);
FrechetParams random_frechet_params(const GraphPoint& G, Rng& rng);

struct FrechetCertificate {
    bool member = false;
    double threshold = 0.0;
    std::vector<ConeViolation> violations;
};
FrechetCertificate frechet_normal_membership(const GraphPoint& G, const NormalPair& v, double tol = 1e-9);

// ---------------------------------------------------------------------------
// Mordukhovich normal cone

// Orthonormal completion [U Ut Ub U_Y UYt] (and likewise for V) with
// s <= rl <= r <= rh <= ell.
struct Stratification {
    int rl = 0, rh = 0;
    Mat Ut, Ub, UYt;  // m x (rl-s), m x (m-k+rh-rl), m x (ell-rh)
    Mat Vt, Vb, VYt;
};

Stratification degenerate_stratification(const GraphPoint& G);
// Splits the complement of [U U_Y] deterministically; a non-null rng rotates it first.
Stratification make_stratification(const GraphPoint& G, int rl, int rh, Rng* rng = nullptr);
void check_stratification(const GraphPoint& G, const Stratification& S, double tol = 1e-10);

// z1^i_j = a_j i^{-p_j}, z2^i_t = b_t i^{-q_t}; a, b positive, nonincreasing
// within equal exponents, exponents nondecreasing.
struct ThetaGenerator {
    Vec a, p, b, q;
};

struct ThetaCandidate {
    Mat D;  // (ell-rh) x (rl-s)
    std::optional<ThetaGenerator> generator;
};

Mat frak_D(const Vec& x, const Vec& y);
Mat theta_limit(const ThetaGenerator& g);
Mat theta_at(const ThetaGenerator& g, double i);
void check_generator(const ThetaGenerator& g);
// Range and monotonicity conditions; returns the first failure or empty.
std::string theta_necessary_violation(const Mat& D, double tol = 1e-9);
// Tries to build a generator whose limit is D; verified numerically before returning.
std::optional<ThetaGenerator> theta_witness(const Mat& D, double tol = 1e-9);

// Block parameters; shapes with d = m-k+rh-rl, e = n-k+rh-rl:
//   A rl x rl, B d x rl, C rl x e, G1 (k-ell) x s, G2 s x (k-ell),
//   E1w (ell-rh) x s, E2w s x (ell-rh), E1v (rl-s) x (k-ell), E2v (k-ell) x (rl-s),
//   F1v (rl-s) x (ell-rh), F1w (ell-rh) x (rl-s), F2v (ell-rh) x (rl-s), F2w (rl-s) x (ell-rh),
//   Z1 d x e, Z2 d x (k-rh), Z3 (k-rh) x e, Z4 (k-rh) x (k-rh), Zhat d x e.
struct MordukhovichParams {
    Mat A, B, C, G1, G2, E1v, E1w, E2v, E2w, F1v, F1w, F2v, F2w, Z1, Z2, Z3, Z4, Zhat;
};

MordukhovichParams zero_mordukhovich_params(const GraphPoint& G, const Stratification& S);
// Random parameters satisfying the coupling for theta.D and the Z1 / Zhat rules.
MordukhovichParams random_mordukhovich_params(const GraphPoint& G, const Stratification& S,
                                              const Mat& D, Rng& rng);
// Throws std::invalid_argument when the coupling or the Z1 / Zhat rules fail.
NormalPair mordukhovich_construct(const GraphPoint& G, const Stratification& S, const MordukhovichParams& p,
                                  const ThetaCandidate& theta);

struct WitnessTerm {
    double i = 0.0;
    Mat X, Y;
    NormalPair normal;
    double gap = 0.0;          // distance of (X_i, Y_i, normal_i) to (X, Y, limit)
    bool frechet_member = false;
};
// The approximating Frechet sequence at index i (requires theta.generator).
WitnessTerm mordukhovich_witness(const GraphPoint& G, const Stratification& S, const MordukhovichParams& p,
                                 const ThetaCandidate& theta, double i);

enum class ThetaVerdict { member_witnessed, undetermined, rejected };
std::string to_string(ThetaVerdict v);

struct MordukhovichCertificate {
    bool member = false;  // necessary conditions hold
    ThetaVerdict verdict = ThetaVerdict::rejected;
    Mat D_solved;         // NaN where free
    Mat D_completed;
    std::optional<ThetaGenerator> generator;
    MordukhovichParams blocks;
    std::vector<ConeViolation> violations;
    std::vector<std::string> diagnostics;
};

MordukhovichCertificate mordukhovich_verify(const GraphPoint& G, const Stratification& S, const NormalPair& v,
                                            double tol = 1e-9);

// upsilon_star in D*N(X, Y)[omega_star]  <=>  (upsilon_star, -omega_star) in the normal cone.
MordukhovichCertificate coderivative_apply(const GraphPoint& G, const Stratification& S, const Mat& omega_star,
                                           const Mat& upsilon_star, double tol = 1e-9);

struct HadamardCheck {
    Mat Q;
    double residual = 0.0;
};
// Q = Diag(b) B Diag(q)^{-1} and the residual of D(b,q) .* B + (D(b,q) - 1) .* Q.
HadamardCheck hadamard_identity_check(const Vec& b, const Vec& q, const Mat& B);

// ---------------------------------------------------------------------------
// Bilevel M-stationarity residuals

struct BilevelInstance {
    int q = 0, p = 0, m = 0, n = 0;
    Vec grad_x_L;      // q
    Mat grad_X_L;      // m x n
    Vec G;             // p values
    Mat grad_G;        // q x p
    Mat Jx_gradxF;     // q x mn: delta -> J_X(grad_x F)[delta] (column-major vec)
    Mat JX_gradXF;     // mn x mn: delta -> J_X(grad_X F)[delta]
    Mat grad_X_F;      // m x n
};

struct BilevelMultipliers {
    double mu = 0.0;
    Vec lambda;
    Mat delta;
};

struct BilevelReport {
    double r_x = 0.0, r_X = 0.0, r_delta = 0.0, r_comp = 0.0, r_pair = 0.0;
    double min_lambda = 0.0;
    bool nontrivial = false;
    bool cone_member = false;
    ThetaVerdict cone_verdict = ThetaVerdict::rejected;
    bool pass = false;
};

// Throws when (X, Y) is not a graph point or shapes mismatch; the lower-level
// pairing Y = -grad_X F is reported as r_pair.
BilevelReport bilevel_residual(const BilevelInstance& inst, const Mat& X, const Mat& Y, int r,
                               const BilevelMultipliers& mult, const NormalPair& cone, const Stratification& S,
                               double tol = 1e-9);

}  // namespace varigeo
