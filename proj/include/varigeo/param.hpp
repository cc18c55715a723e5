#pragma once

#include "varigeo/stationarity.hpp"

#include <optional>
#include <string>

namespace varigeo {

// Points of the two smooth parameterizations of the bounded-rank set.
//   lr:     (L, R) in R^{m x r} x R^{n x r},            image L R^T
//   desing: (X, G) with X G = 0, G = I - Q Q^T, Q in St(n, r); image X
// Desing tangent vectors use the chart (W_dot, K) with Q_dot = Q_perp K:
//   X_dot = W_dot Q^T + W K^T Q_perp^T,  W = X Q.
struct LiftedPoint {
    enum class Kind { lr, desing };
    Kind kind = Kind::lr;
    Mat L, R;  // lr
    Mat X, Q;  // desing

    static LiftedPoint lr(Mat L, Mat R);
    static LiftedPoint desing(Mat X, Mat Q);
    int m() const;
    int n() const;
    int r() const;
    Mat image() const;
    Mat G() const;       // desing only: I - Q Q^T
    Mat W() const;       // desing only: X Q
    Mat Q_perp() const;  // desing only
};

std::string to_string(LiftedPoint::Kind k);
LiftedPoint::Kind lifted_kind_from_string(const std::string& s);

// lr: (A, B) = (L_dot, R_dot); desing: (A, B) = (W_dot, K) with K of size (n-r) x r.
struct LiftedDirection {
    Mat A, B;
};

LiftedDirection lifted_zero(const LiftedPoint& Y);
// Orthonormal basis of the lifted tangent space in chart coordinates.
std::vector<LiftedDirection> lifted_basis(const LiftedPoint& Y);

Mat lift_L_apply(const LiftedPoint& Y, const LiftedDirection& v);
// D phi[u] + D^2 phi[v, v]
Mat lift_Q_apply(const LiftedPoint& Y, const LiftedDirection& v, const LiftedDirection& u);
// Point at time t on the chart curve with velocity v and acceleration u
// (polar retraction on the Stiefel factor for desing).
LiftedPoint lifted_curve(const LiftedPoint& Y, const LiftedDirection& v, const LiftedDirection& u, double t);

struct LQReport {
    int s = 0;             // rank of the image
    int im_L_dim = 0;
    int tangent_dim = 0;   // dimension of the span of the tangent cone
    bool full_image = false;
    bool two_two = false;
    std::optional<Mat> witness;  // in T(X) but orthogonal to im(L_Y)
};

LQReport two_two_check(const LiftedPoint& Y, const RankSpec& spec);

// f(Z) = 1/2 <Z - X, H (Z - X)> with H = -P_span{w}.
Objective counterexample_objective(const LiftedPoint& Y, const RankSpec& spec);

LiftedDirection lifted_gradient(const LiftedPoint& Y, const Objective& f);
double lifted_hessian_quadform(const LiftedPoint& Y, const Objective& f, const LiftedDirection& v);
// Dense quadratic form on lifted_basis(Y).
Mat lifted_hessian(const LiftedPoint& Y, const Objective& f);

struct LiftedSecondOrder {
    double gradient_norm = 0.0;
    double min_eig = 0.0;
    bool pass = false;
};
LiftedSecondOrder lifted_second_order(const LiftedPoint& Y, const Objective& f, double tol = 1e-9);

// Desing tangent image computed two ways: directly as the kernel of
// (X_dot, G_dot) -> X_dot G + X G_dot over T Gr, and through the composition
// (L, R) in R^{m x r} x St(n, r) -> (L R^T, I - R R^T).
struct CompositionReport {
    int direct_dim = 0;
    int composed_dim = 0;
    bool direct_full = false;
    bool composed_full = false;
    bool agree = false;
};
CompositionReport desing_composition_check(const LiftedPoint& Y, const RankSpec& spec);

// Random points with image rank s <= r.
LiftedPoint random_lr_point(int m, int n, int r, int s, Rng& rng);
LiftedPoint random_desing_point(int m, int n, int r, int s, Rng& rng);
LiftedDirection random_lifted_direction(const LiftedPoint& Y, Rng& rng);

}  // namespace varigeo
