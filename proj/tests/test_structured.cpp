#include <doctest.h>

#include "varigeo/oracle.hpp"
#include "varigeo/structured.hpp"

using namespace varigeo;

namespace {

Mat frame(const SymPoint& P) {
    Mat B(P.n(), P.n());
    B << P.U, P.U_perp;
    return B;
}

bool agrees(bool member, const DecayFit& f, DecayClass yes, DecayClass no) {
    if (f.classification == DecayClass::ambiguous) return true;
    return member ? f.classification == yes : f.classification == no;
}

}  // namespace

TEST_CASE("symmetric tangent cone examples") {
    Rng rng(31);
    Mat X = random_sym_low_rank(5, 1, 1, rng);
    SymPoint P = resolve_sym(X);
    RankSpec spec = make_spec(X, 3);
    Mat W = sym(rng.gaussian(2, 2)), B = rng.gaussian(2, 3);
    Mat eta = P.U * W * P.U.transpose() + P.U * B * P.U_perp.transpose() +
              P.U_perp * B.transpose() * P.U.transpose();
    auto c = tangent_sym(P, spec, eta);
    CHECK(c.member);
    CHECK(c.J.norm() < 1e-12);

    SymPoint Z = resolve_sym(Mat::Zero(5, 5));
    RankSpec s2 = make_spec(Mat::Zero(5, 5), 2);
    CHECK_FALSE(tangent_sym(Z, s2, random_sym_low_rank(5, 2, 1, rng)).member);
    CHECK(tangent_sym(Z, s2, random_sym_low_rank(5, 1, 1, rng)).member);

    CHECK_THROWS(tangent_sym(P, spec, rng.gaussian(5, 5)));
}

TEST_CASE("symmetric tangent cone equals the union of strata cones") {
    Rng rng(32);
    int checked = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const int n = rng.uniform_int(3, 6);
        const int r = rng.uniform_int(1, n - 1);
        const int s = rng.uniform_int(0, r);
        const int sp = rng.uniform_int(0, s);
        Mat X = random_sym_low_rank(n, sp, s - sp, rng);
        SymPoint P = resolve_sym(X);
        RankSpec spec = make_spec(X, r);
        bool want_member = trial % 2 == 0;
        Mat eta = want_member ? random_sym_tangent_member(P, spec, false, rng)
                              : random_sym_tangent_nonmember(P, spec, false, rng);
        bool closed = tangent_sym(P, spec, eta).member;
        CHECK(closed == want_member);
        CHECK(tangent_sym_by_strata(P, spec, eta) == closed);
        ++checked;
    }
    CHECK(checked == 100);

    // the random example with s = 1, r = 2, n = 5
    Mat X = random_sym_low_rank(5, 1, 0, rng);
    SymPoint P = resolve_sym(X);
    RankSpec spec = make_spec(X, 2);
    Mat eta = sym(rng.gaussian(5, 5));
    CHECK(tangent_sym(P, spec, eta).member == tangent_sym_by_strata(P, spec, eta));
}

TEST_CASE("symmetric second-order set") {
    Rng rng(33);
    Mat X = random_sym_low_rank(5, 1, 1, rng);
    SymPoint P = resolve_sym(X);
    RankSpec spec = make_spec(X, 3);

    // ell = r: any nonzero L is excluded
    Mat B = frame(P);
    Mat top = Mat::Zero(5, 5);
    top.topLeftCorner(2, 2) = sym(rng.gaussian(2, 2));
    top(2, 2) = 1.3;
    Mat eta = B * top * B.transpose();
    auto c2 = tangent2_sym(P, eta, 2.0 * eta * pseudoinverse(P) * eta, spec);
    CHECK(c2.member);
    CHECK(c2.ell == 3);
    Mat L = sym(rng.gaussian(2, 2));
    Mat zeta = c2.curvature + c2.U_eta_perp * L * c2.U_eta_perp.transpose();
    CHECK_FALSE(tangent2_sym(P, eta, zeta, spec).member);

    // members decay faster than t^2 along the parabola
    int good = 0;
    for (int trial = 0; trial < 10; ++trial) {
        Mat Xt = random_sym_low_rank(5, 1, 1, rng);
        SymPoint Pt = resolve_sym(Xt);
        RankSpec st = make_spec(Xt, 3);
        Mat e = random_sym_tangent_member(Pt, st, false, rng);
        Mat z = random_sym_second_order_member(Pt, e, st, false, rng);
        REQUIRE(tangent2_sym(Pt, e, z, st).member);
        DecayFit f = decay_fit_parabolic(Xt, e, z, sym_bounded_rank_projector(3));
        good += f.classification == DecayClass::order_gt_2;
    }
    CHECK(good == 10);
}

TEST_CASE("PSD tangent cone") {
    Rng rng(34);
    SymPoint Z = resolve_sym(Mat::Zero(4, 4));
    RankSpec s2 = make_spec(Mat::Zero(4, 4), 2);
    CHECK(tangent_psd(Z, s2, random_sym_low_rank(4, 2, 0, rng)).member);

    Mat X = random_sym_low_rank(5, 2, 0, rng);
    SymPoint P = resolve_sym(X);
    RankSpec spec = make_spec(X, 4);
    Mat J = Mat::Zero(3, 3);
    J(0, 0) = 0.8;
    J(1, 1) = -0.5;
    Mat top = Mat::Zero(5, 5);
    top.bottomRightCorner(3, 3) = J;
    Mat eta = frame(P) * top * frame(P).transpose();
    auto c = tangent_psd(P, spec, eta);
    CHECK_FALSE(c.member);
    CHECK(c.violation == doctest::Approx(0.5));
    CHECK(tangent_sym(P, spec, eta).member);
    CHECK_THROWS(tangent_psd(resolve_sym(random_sym_low_rank(4, 1, 1, rng)), s2, Mat::Zero(4, 4)));

    // specialization and the last stratum
    for (int trial = 0; trial < 100; ++trial) {
        const int n = rng.uniform_int(3, 6);
        const int r = rng.uniform_int(1, n - 1);
        const int s = rng.uniform_int(0, r);
        Mat Xt = random_sym_low_rank(n, s, 0, rng);
        SymPoint Pt = resolve_sym(Xt);
        RankSpec st = make_spec(Xt, r);
        Mat e = trial % 3 == 0   ? random_sym_tangent_member(Pt, st, true, rng)
                : trial % 3 == 1 ? random_sym_tangent_nonmember(Pt, st, true, rng)
                                 : Mat(sym(rng.gaussian(n, n)));
        auto cp = tangent_psd(Pt, st, e);
        auto cs = tangent_sym(Pt, st, e);
        bool j_psd = cs.j_spectrum.size() == 0 ||
                     cs.j_spectrum(cs.j_spectrum.size() - 1) >= -cs.threshold;
        CHECK(cp.member == (cs.member && j_psd));
        CHECK(cp.member == stratum_tangent(Pt, r + 1, st, e));
    }
}

TEST_CASE("PSD second-order members decay like t^3") {
    Rng rng(35);
    for (int trial = 0; trial < 8; ++trial) {
        Mat X = random_sym_low_rank(5, 1, 0, rng);
        SymPoint P = resolve_sym(X);
        RankSpec spec = make_spec(X, 3);
        Mat e = random_sym_tangent_member(P, spec, true, rng);
        Mat z = random_sym_second_order_member(P, e, spec, true, rng);
        CHECK(tangent2_psd(P, e, z, spec).member);
        DecayFit f = decay_fit_parabolic(X, e, z, psd_bounded_rank_projector(3));
        CHECK(f.classification == DecayClass::order_gt_2);
    }
}

TEST_CASE("intersection examples") {
    Rng rng(36);
    Mat X = rng.low_rank(4, 5, 2);
    MatrixPoint P = resolve_point(X);
    RankSpec spec = make_spec(X, 3);
    Mat eta = random_tangent_nonmember(P, spec, rng);
    auto amb = tangent_intersection(P, ConstraintH::ambient(), spec, eta);
    CHECK(amb.member == tangent_membership(P, eta, spec).member);

    Mat Xs = X / X.norm();
    MatrixPoint Ps = resolve_point(Xs);
    auto sp = tangent_intersection(Ps, ConstraintH::sphere(), spec, Xs);
    CHECK(sp.cone_member);
    CHECK_FALSE(sp.member);
    CHECK(sp.cq.holds);
    CHECK_THROWS(tangent_intersection(P, ConstraintH::sphere(), spec, eta));

    // sphere second order: the bare curvature term violates the quadratic condition
    Mat e = correct_into_h(Ps, ConstraintH::sphere(), random_tangent_member(Ps, spec, rng));
    REQUIRE(tangent_intersection(Ps, ConstraintH::sphere(), spec, e).member);
    Mat curv = 2.0 * e * pseudoinverse(Ps) * e;
    auto c2 = tangent2_intersection(Ps, ConstraintH::sphere(), spec, e, curv);
    CHECK(c2.cone_member);
    CHECK_FALSE(c2.h_member);
}

TEST_CASE("affine example in 3x3 with a single entry constraint") {
    Rng rng(37);
    Mat X = rng.low_rank(3, 3, 1);
    Mat A = Mat::Zero(3, 3);
    A(0, 0) = 1.0;
    ConstraintH H = ConstraintH::affine({A}, Vec::Constant(1, X(0, 0)));
    MatrixPoint P = resolve_point(X);
    RankSpec spec = make_spec(X, 2);
    SetProjector oracle = intersection_projector(H, 2);
    for (int trial = 0; trial < 20; ++trial) {
        Mat eta = rng.gaussian(3, 3);
        if (trial % 2 == 0) eta = correct_into_h(P, H, random_tangent_member(P, spec, rng));
        auto c = tangent_intersection(P, H, spec, eta);
        CHECK(c.cq.holds);
        DecayFit f = decay_fit_linear(X, eta, oracle);
        CHECK(agrees(c.member, f, DecayClass::order_gt_1, DecayClass::order_le_1));
        if (trial % 2 == 0) CHECK(c.member);
    }
    // the affine second-order set is the tangent space of H
    Mat eta = correct_into_h(P, H, random_tangent_member(P, spec, rng));
    Mat zeta = correct_into_h2(P, H, eta, random_second_order_member(P, eta, spec, rng));
    CHECK(tangent2_intersection(P, H, spec, eta, zeta).member);
    CHECK(decay_fit_parabolic(X, eta, zeta, oracle).classification == DecayClass::order_gt_2);
}

TEST_CASE("affine constraint qualification diagnostics") {
    Rng rng(38);
    Mat X = rng.low_rank(3, 3, 1);
    MatrixPoint P = resolve_point(X);
    // two constraints cannot be independent on a 1x1 core when s < r
    ConstraintH H = random_affine_through(X, 2, false, rng);
    auto cq = cq_report(P, H, make_spec(X, 2));
    CHECK_FALSE(cq.holds);
    CHECK(cq.name == "affine-core-independence");
    CHECK_FALSE(cq.detail.empty());
    // at s = r the projected matrices have room
    auto cq2 = cq_report(P, H, make_spec(X, 1));
    CHECK(cq2.holds);
}

TEST_CASE("intersection rule against alternating-projection decay") {
    Rng rng(39);
    using K = ConstraintH::Kind;
    for (K kind : {K::affine, K::sphere, K::oblique, K::hyperbolic}) {
        int agree = 0, total = 0;
        for (int trial = 0; trial < 40; ++trial) {
            const int m = rng.uniform_int(3, 5), n = rng.uniform_int(3, 5);
            const int r = rng.uniform_int(1, 2);
            const int s = rng.uniform_int(1, r);
            Mat X;
            ConstraintH H;
            if (kind == K::affine) {
                X = rng.low_rank(m, n, s);
                H = random_affine_through(X, s == r ? 2 : 1, false, rng);
            } else {
                H = kind == K::sphere ? ConstraintH::sphere()
                    : kind == K::oblique ? ConstraintH::oblique() : ConstraintH::hyperbolic();
                X = random_feasible_point(H, m, n, s, rng);
            }
            MatrixPoint P = resolve_point(X);
            RankSpec spec = make_spec(X, r);
            Mat eta;
            switch (trial % 3) {
                case 0: eta = correct_into_h(P, H, random_tangent_member(P, spec, rng)); break;
                case 1: eta = random_tangent_member(P, spec, rng); break;
                default: eta = correct_into_h(P, H, random_tangent_nonmember(P, spec, rng)); break;
            }
            auto c = tangent_intersection(P, H, spec, eta);
            if (trial % 3 == 0) CHECK(c.member);
            DecayFit f = decay_fit_linear(X, eta, intersection_projector(H, r));
            ++total;
            agree += agrees(c.member, f, DecayClass::order_gt_1, DecayClass::order_le_1);
        }
        INFO("kind " << to_string(kind));
        CHECK(agree == total);
    }
}

TEST_CASE("PSD with affine constraints") {
    Rng rng(40);
    int agree = 0;
    for (int trial = 0; trial < 30; ++trial) {
        const int n = rng.uniform_int(3, 5);
        Mat X = random_sym_low_rank(n, 1, 0, rng);
        ConstraintH H = random_affine_through(X, 1, true, rng);
        SymPoint P = resolve_sym(X);
        RankSpec spec = make_spec(X, 2);
        Mat eta = trial % 2 == 0 ? correct_into_h(P, H, random_sym_tangent_member(P, spec, true, rng))
                                 : random_sym_tangent_nonmember(P, spec, true, rng);
        auto c = tangent_intersection(P, H, spec, eta, SymCone::psd);
        CHECK(c.cq.holds);
        if (trial % 2 == 0) CHECK(c.member);
        DecayFit f = decay_fit_linear(X, eta, sym_intersection_projector(H, 2, SymCone::psd));
        agree += agrees(c.member, f, DecayClass::order_gt_1, DecayClass::order_le_1);
    }
    CHECK(agree == 30);
}

TEST_CASE("constraint kinds and feasibility") {
    Rng rng(41);
    CHECK(constraint_kind_from_string("oblique") == ConstraintH::Kind::oblique);
    CHECK_THROWS(constraint_kind_from_string("box"));
    Mat X = random_feasible_point(ConstraintH::hyperbolic(), 4, 3, 2, rng);
    CHECK_NOTHROW(check_feasible(X, ConstraintH::hyperbolic()));
    CHECK(numeric_rank(X, 1e-9) == 2);
    Mat Y = X;
    Y(0, 1) = -Y(0, 1);
    CHECK_THROWS(check_feasible(Y, ConstraintH::hyperbolic()));
    CHECK_THROWS(check_feasible(2.0 * X, ConstraintH::sphere()));
    Mat O = random_feasible_point(ConstraintH::oblique(), 4, 3, 2, rng);
    CHECK(O.rowwise().norm().isApprox(Vec::Ones(4)));
    CHECK(numeric_rank(O, 1e-9) == 2);
}
