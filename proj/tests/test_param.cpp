#include <doctest.h>

#include "varigeo/param.hpp"

using namespace varigeo;

namespace {

double ip(const Mat& A, const Mat& B) { return (A.array() * B.array()).sum(); }

// quadratic with gradient G and Hessian Hm at X
Objective quadratic_at(const Mat& X, const Mat& G, const Mat& Hm) {
    Vec x = Eigen::Map<const Vec>(X.data(), X.size());
    Vec hx = Hm * x;
    Mat C = G - Eigen::Map<const Mat>(hx.data(), X.rows(), X.cols());
    return make_quadratic(Hm, C);
}

}  // namespace

TEST_CASE("lr maps on simple directions") {
    Rng rng(71);
    auto Y = LiftedPoint::lr(rng.gaussian(4, 2), rng.gaussian(3, 2));
    LiftedDirection v{rng.gaussian(4, 2), Mat::Zero(3, 2)};
    CHECK((lift_L_apply(Y, v) - v.A * Y.R.transpose()).norm() < 1e-14);
    LiftedDirection w = random_lifted_direction(Y, rng);
    CHECK((lift_Q_apply(Y, w, lifted_zero(Y)) - 2.0 * w.A * w.B.transpose()).norm() < 1e-14);
    CHECK_THROWS(lift_L_apply(Y, LiftedDirection{Mat::Zero(3, 2), Mat::Zero(3, 2)}));
}

TEST_CASE("L and Q maps against finite differences") {
    Rng rng(72);
    for (int trial = 0; trial < 20; ++trial) {
        bool lr = trial % 2 == 0;
        int s = trial % 3;
        auto Y = lr ? random_lr_point(4, 5, 2, s, rng) : random_desing_point(4, 5, 2, s, rng);
        auto v = random_lifted_direction(Y, rng), u = random_lifted_direction(Y, rng);
        const double t = 1e-4;
        Mat Xp = lifted_curve(Y, v, u, t).image(), Xm = lifted_curve(Y, v, u, -t).image(), X0 = Y.image();
        Mat d1 = (Xp - Xm) / (2 * t), d2 = (Xp - 2 * X0 + Xm) / (t * t);
        Mat L = lift_L_apply(Y, v), Q = lift_Q_apply(Y, v, u);
        INFO("kind " << to_string(Y.kind) << " s " << s);
        CHECK((d1 - L).norm() <= 1e-6 * std::max(1.0, L.norm()));
        CHECK((d2 - Q).norm() <= 1e-5 * std::max(1.0, Q.norm()));
        // the curve stays on the lifted manifold
        auto Yt = lifted_curve(Y, v, u, 0.3);
        CHECK(numeric_rank(Yt.image(), 1e-9) <= 2);
    }
}

TEST_CASE("two-two examples") {
    Rng rng(73);
    RankSpec spec{2, 4};
    auto full = LiftedPoint::lr(rng.gaussian(4, 2), rng.gaussian(5, 2));
    auto rep = two_two_check(full, spec);
    CHECK(rep.two_two);
    CHECK(rep.full_image);
    CHECK(rep.im_L_dim == 2 * (4 + 5 - 2));
    CHECK_FALSE(rep.witness);
    CHECK_THROWS(counterexample_objective(full, spec));

    auto zero = LiftedPoint::lr(Mat::Zero(4, 2), rng.gaussian(5, 2));
    auto rz = two_two_check(zero, spec);
    CHECK_FALSE(rz.two_two);
    CHECK_FALSE(rz.full_image);
    REQUIRE(rz.witness);

    auto des = random_desing_point(4, 5, 2, 1, rng);
    auto rd = two_two_check(des, spec);
    CHECK_FALSE(rd.two_two);
    REQUIRE(rd.witness);
    CHECK(random_desing_point(4, 5, 2, 2, rng).kind == LiftedPoint::Kind::desing);
    CHECK(two_two_check(random_desing_point(4, 5, 2, 2, rng), spec).full_image);

    CHECK_THROWS(two_two_check(full, RankSpec{3, 4}));
    CHECK_THROWS(LiftedPoint::desing(rng.gaussian(3, 3), rng.orthonormal(3, 1)));
}

TEST_CASE("witness lies in the cone and off the L-image") {
    Rng rng(74);
    RankSpec spec{3, 5};
    for (int trial = 0; trial < 20; ++trial) {
        int s = trial % 3;
        auto Y = trial % 2 ? random_lr_point(5, 6, 3, s, rng) : random_desing_point(5, 6, 3, s, rng);
        auto rep = two_two_check(Y, spec);
        REQUIRE(rep.witness);
        const Mat& w = *rep.witness;
        auto P = resolve_point(Y.image());
        CHECK(tangent_membership(P, w, spec).member);
        for (const auto& b : lifted_basis(Y)) CHECK(std::abs(ip(w, lift_L_apply(Y, b))) < 1e-12);
        CHECK(rep.im_L_dim < rep.tangent_dim);
    }
}

TEST_CASE("counterexample from the zero lr point") {
    auto Y = LiftedPoint::lr(Mat::Zero(2, 1), Mat::Zero(2, 1));
    RankSpec spec{1, 2};
    Objective f = counterexample_objective(Y, spec);
    Mat Z(2, 2);
    Z << 3.0, 1.0, -2.0, 5.0;
    CHECK(f.value(Z) == doctest::Approx(-0.5 * 9.0));
    auto lifted = lifted_second_order(Y, f);
    CHECK(lifted.pass);
    CHECK(lifted.gradient_norm == 0.0);
    CHECK(std::abs(lifted.min_eig) < 1e-15);
    Mat w = Mat::Zero(2, 2);
    w(0, 0) = 1.0;
    CHECK(ip(w, f.hessian_apply(Mat::Zero(2, 2), w)) == doctest::Approx(-1.0));
    auto amb = check_second_order(resolve_point(Mat::Zero(2, 2)), f, spec);
    CHECK(amb.second_order == Verdict::fail);
}

TEST_CASE("counterexample soundness") {
    Rng rng(75);
    RankSpec spec{1, 3};
    auto Y0 = random_desing_point(3, 3, 1, 0, rng);
    Objective f0 = counterexample_objective(Y0, spec);
    CHECK(lifted_second_order(Y0, f0).min_eig >= -1e-10);
    RankSpec spec2{2, 4};
    for (int trial = 0; trial < 10; ++trial) {
        auto Y = trial % 2 ? random_lr_point(4, 5, 2, trial % 2, rng) : random_desing_point(4, 5, 2, 1, rng);
        Objective f = counterexample_objective(Y, spec2);
        auto lifted = lifted_second_order(Y, f);
        CHECK(lifted.pass);
        Mat w = *two_two_check(Y, spec2).witness;
        CHECK(ip(w, f.hessian_apply(Y.image(), w)) <= -0.99 * w.squaredNorm());
        CHECK(f.gradient(Y.image()).norm() < 1e-12);
    }
}

TEST_CASE("lifted calculus") {
    Rng rng(76);
    auto Y = LiftedPoint::lr(rng.gaussian(3, 2), rng.gaussian(4, 2));
    Mat C = rng.gaussian(3, 4);
    auto g = lifted_gradient(Y, make_linear(C));
    CHECK((g.A - C * Y.R).norm() < 1e-14);
    CHECK((g.B - C.transpose() * Y.L).norm() < 1e-14);

    for (int trial = 0; trial < 10; ++trial) {
        auto Z = trial % 2 ? random_lr_point(3, 4, 2, 2, rng) : random_desing_point(3, 4, 2, trial % 3, rng);
        Mat Sq = rng.gaussian(12, 12);
        Objective f = make_quadratic(Sq + Sq.transpose(), rng.gaussian(3, 4));
        auto v = random_lifted_direction(Z, rng);
        auto zero = lifted_zero(Z);
        // lifted gradient is the adjoint of L
        auto gl = lifted_gradient(Z, f);
        CHECK(ip(gl.A, v.A) + ip(gl.B, v.B) ==
              doctest::Approx(ip(f.gradient(Z.image()), lift_L_apply(Z, v))).epsilon(1e-10));
        const double t = 1e-4;
        auto fb = [&](double s) { return f.value(lifted_curve(Z, v, zero, s).image()); };
        double fd = (fb(t) - 2 * fb(0) + fb(-t)) / (t * t);
        double q = lifted_hessian_quadform(Z, f, v);
        CHECK(std::abs(fd - q) <= 1e-5 * std::max(1.0, std::abs(q)) + 1e-4);
    }
    // zero gradient: only the Hessian term remains
    Mat Xs = Y.image();
    Objective ls = make_least_squares(Xs);
    auto v = random_lifted_direction(Y, rng);
    Mat Lv = lift_L_apply(Y, v);
    CHECK(lifted_hessian_quadform(Y, ls, v) == doctest::Approx(Lv.squaredNorm()));
}

TEST_CASE("second-order transfer at rank r") {
    Rng rng(77);
    RankSpec spec{2, 3};
    int agree = 0, total = 0, pos = 0;
    for (int trial = 0; trial < 30; ++trial) {
        auto Y = trial % 2 ? random_lr_point(3, 4, 2, 2, rng) : random_desing_point(3, 4, 2, 2, rng);
        REQUIRE(two_two_check(Y, spec).two_two);
        Mat X = Y.image();
        auto P = resolve_point(X);
        Mat G = 0.2 * P.U_perp * rng.gaussian(1, 2) * P.V_perp.transpose();
        Mat S = rng.gaussian(12, 12);
        Mat Hm = S * S.transpose() / 12.0 + rng.uniform(-1.0, 2.0) * Mat::Identity(12, 12);
        Objective f = quadratic_at(X, G, Hm);
        Eigen::SelfAdjointEigenSolver<Mat> es(reduced_hessian(P, f, tangent_space_basis(P)));
        double amb = es.eigenvalues()(0);
        if (std::abs(amb) < 1e-4) continue;
        ++total;
        auto lifted = lifted_second_order(Y, f);
        pos += amb > 0;
        agree += lifted.pass == (amb >= -1e-9);
    }
    CHECK(total >= 20);
    CHECK(pos > 0);
    CHECK(pos < total);
    CHECK(agree == total);
}

TEST_CASE("desing composition agrees with the direct check") {
    Rng rng(78);
    RankSpec spec{2, 4};
    for (int trial = 0; trial < 20; ++trial) {
        auto Y = random_desing_point(4, 5, 2, trial % 3, rng);
        auto c = desing_composition_check(Y, spec);
        CHECK(c.agree);
        CHECK(c.direct_full == (trial % 3 == 2));
        CHECK(c.direct_dim == two_two_check(Y, spec).im_L_dim);
    }
}
