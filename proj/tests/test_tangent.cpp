#include <doctest.h>

#include "varigeo/derivatives.hpp"
#include "varigeo/oracle.hpp"
#include "varigeo/tangent.hpp"

using namespace varigeo;

TEST_CASE("tangent membership examples") {
    Rng rng(21);
    Mat X = rng.low_rank(4, 5, 2);
    MatrixPoint P = resolve_point(X);
    RankSpec spec = make_spec(X, 2);
    Mat J = rng.gaussian(2, 1) * rng.gaussian(1, 3);
    Mat eta = P.U_perp * J * P.V_perp.transpose();
    TangentCertificate c = tangent_membership(P, eta, spec);
    CHECK_FALSE(c.member);
    CHECK(c.violation == doctest::Approx(singular_values(J)(0)));

    MatrixPoint Z = resolve_point(Mat::Zero(4, 5));
    CHECK(tangent_membership(Z, rng.low_rank(4, 5, 2), spec).member);
    CHECK_FALSE(tangent_membership(Z, rng.low_rank(4, 5, 3), spec).member);

    Mat X1 = rng.low_rank(4, 4, 1);
    MatrixPoint P1 = resolve_point(X1);
    RankSpec s2 = make_spec(X1, 2);
    Mat e1 = random_tangent_member(P1, s2, rng);
    CHECK(tangent_membership(P1, e1, s2).member);
    DecayFit fit = decay_fit_linear(X1, e1, bounded_rank_projector(2));
    CHECK(fit.slope > 1.0);
    CHECK(fit.classification == DecayClass::order_gt_1);

    // blocks round-trip
    TangentElement T = extract_blocks(P1, e1);
    CHECK((T.assemble(P1) - e1).norm() < 1e-12);
    CHECK_THROWS(tangent_membership(P1, Mat::Zero(3, 4), s2));
}

TEST_CASE("second-order membership examples") {
    Rng rng(22);
    // rank-saturating eta (ell = r): J budget is zero
    Mat X = rng.low_rank(5, 5, 1);
    MatrixPoint P = resolve_point(X);
    RankSpec spec = make_spec(X, 2);
    TangentElement T;
    T.W1 = rng.gaussian(1, 1);
    T.W2 = rng.gaussian(1, 4);
    T.W3 = rng.gaussian(4, 1);
    T.K = rng.gaussian(4, 1) * rng.gaussian(1, 4);
    Mat eta = T.assemble(P);
    SecondOrderElement E = second_order_frame(P, eta);
    CHECK(E.ell == 2);
    Mat curv = 2.0 * eta * pseudoinverse(P) * eta;
    CHECK(second_order_membership(P, eta, curv, spec).member);
    Mat Up(5, 2), Vp(5, 2);
    Up << P.U, E.U_eta;
    Vp << P.V, E.V_eta;
    Mat zeta = curv + Up * rng.gaussian(2, 2) * Vp.transpose() +
               Up * rng.gaussian(2, 3) * E.V_eta_perp.transpose();
    CHECK(second_order_membership(P, eta, zeta, spec).member);

    Mat bad = curv + E.U_eta_perp * rng.gaussian(3, 1) * rng.gaussian(1, 3) * E.V_eta_perp.transpose();
    SecondOrderCertificate c = second_order_membership(P, eta, bad, spec);
    CHECK_FALSE(c.member);
    DecayFit fit = decay_fit_parabolic(X, eta, bad, bounded_rank_projector(2));
    CHECK(fit.slope == doctest::Approx(2.0).epsilon(0.1));
    CHECK(fit.classification == DecayClass::order_le_2);

    Mat nonmember = P.U_perp * rng.gaussian(4, 2) * rng.gaussian(2, 4) * P.V_perp.transpose();
    CHECK_THROWS(second_order_membership(P, nonmember, curv, spec));
}

TEST_CASE("2x2 curvature example: 2 eta X^+ eta = 2 e2 e2^T") {
    Mat X = Mat::Zero(2, 2);
    X(0, 0) = 1;
    Mat eta = Mat::Zero(2, 2);
    eta(0, 1) = eta(1, 0) = 1;
    MatrixPoint P = resolve_point(X);
    Mat curv = 2.0 * eta * pseudoinverse(P) * eta;
    Mat expect = Mat::Zero(2, 2);
    expect(1, 1) = 2;
    CHECK((curv - expect).norm() < 1e-15);
    SetProjector proj = bounded_rank_projector(1);
    CHECK(decay_fit_parabolic(X, eta, curv, proj).classification == DecayClass::order_gt_2);
    CHECK(decay_fit_parabolic(X, eta, Mat::Zero(2, 2), proj).classification == DecayClass::order_le_2);
}

TEST_CASE("tangent cone projection") {
    Rng rng(23);
    for (int inst = 0; inst < 5; ++inst) {
        Mat X = rng.low_rank(4, 4, 1);
        MatrixPoint P = resolve_point(X);
        RankSpec spec = make_spec(X, 2);
        Mat member = random_tangent_member(P, spec, rng);
        CHECK((project_tangent_cone(P, member, spec) - member).norm() < 1e-12 * member.norm());
        Mat E = rng.gaussian(4, 4);
        Mat PE = project_tangent_cone(P, E, spec);
        CHECK(tangent_membership(P, PE, spec).member);
        CHECK(std::abs((E - PE).cwiseProduct(PE).sum()) < 1e-8 * E.squaredNorm());
        double best = (E - PE).norm();
        for (int k = 0; k < 1000; ++k) {
            Mat eta = random_tangent_member(P, spec, rng);
            // scale the sample toward E to make the comparison meaningful
            double a = eta.cwiseProduct(E).sum() / std::max(eta.squaredNorm(), 1e-300);
            CHECK(best <= (E - a * eta).norm() + 1e-10);
        }
    }
    Mat X = rng.low_rank(4, 5, 2);
    MatrixPoint P = resolve_point(X);
    RankSpec spec = make_spec(X, 2);
    Mat E = rng.gaussian(4, 5);
    Mat PE = project_tangent_cone(P, E, spec);
    CHECK((P.U_perp.transpose() * PE * P.V_perp).norm() < 1e-12);
}

TEST_CASE("normal cones") {
    Rng rng(24);
    Mat X = rng.low_rank(4, 5, 2);
    MatrixPoint P = resolve_point(X);
    RankSpec r2 = make_spec(X, 2), r3 = make_spec(X, 3);
    CHECK(frechet_normal_membership(P, Mat::Zero(4, 5), r3));
    CHECK_FALSE(frechet_normal_membership(P, P.U_perp * rng.gaussian(2, 3) * P.V_perp.transpose(), r3));
    CHECK(frechet_normal_membership(P, P.U_perp * rng.gaussian(2, 3) * P.V_perp.transpose(), r2));
    CHECK_FALSE(frechet_normal_membership(P, P.U.col(0) * P.V.col(0).transpose(), r2));

    CHECK(mordukhovich_normal_membership(P, Mat::Zero(4, 5), r3));
    MatrixPoint Z = resolve_point(Mat::Zero(4, 5));
    CHECK(mordukhovich_normal_membership(Z, rng.low_rank(4, 5, 2), r2));
    CHECK_FALSE(mordukhovich_normal_membership(Z, rng.low_rank(4, 5, 3), r2));
    Mat Y = P.U_perp * rng.gaussian(2, 3) * P.V_perp.transpose();  // rank 2 > k - r = 1
    CHECK_FALSE(mordukhovich_normal_membership(P, Y, r3));
    Mat Y1 = P.U_perp * rng.gaussian(2, 1) * rng.gaussian(1, 3) * P.V_perp.transpose();
    CHECK(mordukhovich_normal_membership(P, Y1, r3));
}

TEST_CASE("Mordukhovich normals are outer limits of Frechet normals") {
    Rng rng(25);
    for (int inst = 0; inst < 20; ++inst) {
        int m = rng.uniform_int(3, 6), n = rng.uniform_int(3, 6);
        int k = std::min(m, n);
        int r = rng.uniform_int(1, k - 1), s = rng.uniform_int(0, r - 1);
        Mat X = rng.low_rank(m, n, s);
        MatrixPoint P = resolve_point(X);
        RankSpec spec = make_spec(X, r);
        int ry = rng.uniform_int(0, k - r);
        Mat Y = P.U_perp * rng.low_rank(m - s, n - s, ry) * P.V_perp.transpose();
        REQUIRE(mordukhovich_normal_membership(P, Y, spec));
        auto D = outer_limit_witness_direction(P, Y, spec);
        REQUIRE(D.has_value());
        for (int i : {1, 10, 100, 1000}) {
            Mat Xi = X + *D / static_cast<double>(i);
            MatrixPoint Pi = resolve_point(Xi);
            CHECK(Pi.s == r);
            CHECK(frechet_normal_membership(Pi, Y, spec));
        }
    }
}

TEST_CASE("closed forms agree with derivative routes") {
    Rng rng(26);
    int agree1 = 0, agree2 = 0, total = 0, total2 = 0;
    for (int inst = 0; inst < 200; ++inst) {
        int m = rng.uniform_int(2, 6), n = rng.uniform_int(2, 6);
        int k = std::min(m, n);
        int r = rng.uniform_int(0, k - 1), s = rng.uniform_int(0, r);
        Mat X = rng.low_rank(m, n, s);
        MatrixPoint P = resolve_point(X);
        RankSpec spec = make_spec(X, r);
        bool want = inst % 2 == 0;
        Mat eta = want ? random_tangent_member(P, spec, rng) : random_tangent_nonmember(P, spec, rng);
        bool tm = tangent_membership(P, eta, spec).member;
        double d1 = sigma_derivative_1(P, r + 1, eta);
        ++total;
        agree1 += tm == (std::abs(d1) <= 1e-8 * eta.norm());
        if (tm) {
            bool want2 = inst % 4 == 0;
            SecondOrderElement E = second_order_frame(P, eta);
            bool can_violate = spec.r - E.ell + 1 <= k - E.ell;
            Mat zeta = (want2 || !can_violate) ? random_second_order_member(P, eta, spec, rng)
                                               : random_second_order_nonmember(P, eta, spec, rng);
            bool sm = second_order_membership(P, eta, zeta, spec).member;
            double d2 = sigma_derivative_2(P, r + 1, eta, zeta);
            double scale = zeta.norm() + E.curvature.norm();
            ++total2;
            agree2 += sm == (std::abs(d2) <= 1e-6 * scale);
        }
    }
    CHECK(agree1 == total);
    CHECK(agree2 == total2);
}
