#include <doctest.h>

#include "varigeo/derivatives.hpp"
#include "varigeo/oracle.hpp"

using namespace varigeo;

namespace {

Mat with_spectrum(Rng& rng, int m, int n, const std::vector<double>& sv) {
    Mat U = rng.orthonormal(m, m), V = rng.orthonormal(n, n);
    Mat S = Mat::Zero(m, n);
    for (size_t i = 0; i < sv.size(); ++i) S(i, i) = sv[i];
    return U * S * V.transpose();
}

Mat sym_with_spectrum(Rng& rng, const std::vector<double>& ev) {
    int n = static_cast<int>(ev.size());
    Mat Q = rng.orthonormal(n, n);
    return Q * Vec::Map(ev.data(), n).asDiagonal() * Q.transpose();
}

SpectralValuer sigma_valuer(int i) { return {SpectralValuer::Kind::sigma, i}; }

SpectralValuer lambda_valuer(int i) { return {SpectralValuer::Kind::lambda, i}; }

}  // namespace

TEST_CASE("partition examples") {
    Mat X = Vec((Vec(3) << 2, 2, 0).finished()).asDiagonal();
    Rng rng(1);
    IndexPartition p = partition_indices(resolve_point(X), rng.gaussian(3, 3));
    CHECK(p.t == 1);
    CHECK(p.alpha[0] == std::vector<int>{1, 2});
    CHECK(p.alpha[1] == std::vector<int>{3});
    CHECK(p.beta0.empty());

    IndexPartition z = partition_indices(resolve_point(Mat::Zero(3, 4)), rng.gaussian(3, 4));
    CHECK(z.t == 0);
    CHECK(z.alpha[0] == std::vector<int>{1, 2, 3});
    CHECK(z.beta0 == std::vector<int>{4});
    for (int i = 1; i <= 3; ++i) CHECK(z.q_a[i - 1] == 1);

    Mat Y = Mat::Zero(5, 6);
    Y(0, 0) = 3;
    Y(1, 1) = 1;
    Y(2, 2) = 1;
    IndexPartition q = partition_indices(resolve_point(Y), rng.gaussian(5, 6));
    // hand evaluation: alpha_1 = {1}, alpha_2 = {2, 3}, kappa_1 = 1
    CHECK(q.t == 2);
    CHECK(q.q_a[1] == 2);
    CHECK(q.l[1] == 1);
    CHECK(q.q_a[2] == 2);
    CHECK(q.l[2] == 2);
    CHECK(q.q_a[3] == 3);
    CHECK(q.l[3] == 1);
    // enumeration: l(i) = i - (number of indices in earlier groups)
    for (int i = 1; i <= 5; ++i) {
        int before = 0;
        for (int k = 0; k + 1 < q.q_a[i - 1]; ++k) before += static_cast<int>(q.alpha[k].size());
        CHECK(q.l[i - 1] == i - before);
    }
}

TEST_CASE("ambiguous cluster gap is reported") {
    Mat X = Vec((Vec(3) << 1.0, 1.0 - 1.5e-8, 0.5).finished()).asDiagonal();
    IndexPartition p = partition_indices(resolve_point(X), Mat::Identity(3, 3));
    CHECK(p.ambiguous);
    CHECK_FALSE(p.diagnostics.empty());
}

TEST_CASE("first derivative: trivial cases") {
    Rng rng(2);
    Mat eta = rng.gaussian(4, 5);
    Vec se = singular_values(eta);
    MatrixPoint Z = resolve_point(Mat::Zero(4, 5));
    for (int i = 1; i <= 4; ++i) CHECK(sigma_derivative_1(Z, i, eta) == doctest::Approx(se(i - 1)));

    Mat X = rng.low_rank(4, 5, 2);
    MatrixPoint P = resolve_point(X);
    Mat tang = P.U * rng.gaussian(2, 2) * P.V.transpose() + P.U_perp * rng.gaussian(2, 2) * P.V.transpose() +
               P.U * rng.gaussian(2, 3) * P.V_perp.transpose();
    CHECK(std::abs(sigma_derivative_1(P, 3, tang)) < 1e-12);
    CHECK_THROWS_AS(sigma_derivative_1(P, 5, tang), std::out_of_range);
}

TEST_CASE("first derivative vs finite differences, distinct values") {
    Rng rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        Mat X = with_spectrum(rng, 4, 5, {4.0, 2.5, 1.5, 0.7});
        Mat eta = rng.gaussian(4, 5);
        MatrixPoint P = resolve_point(X);
        Vec d = sigma_derivatives_1(P, eta);
        for (int i = 1; i <= 4; ++i) {
            FdReport r = fd_check(sigma_valuer(i), X, eta, eta, 1, d(i - 1));
            CHECK(r.rel_gap < 1e-6);
        }
    }
}

TEST_CASE("second derivative vs finite differences, all branches") {
    Rng rng(4);
    int count_zero_group = 0, count_pos_beta = 0, count_alpha = 0;
    for (int trial = 0; trial < 20; ++trial) {
        bool tall = trial % 2 == 1;
        int m = 5, n = 6;
        Mat X = with_spectrum(rng, m, n, {3.0, 3.0, 1.5, 0.0, 0.0});
        MatrixPoint P0 = resolve_point(X);
        Mat eta = rng.gaussian(m, n);
        if (trial % 3 == 0) {
            // make the beta block rank one so the zero group is populated
            eta = P0.U * rng.gaussian(3, 3) * P0.V.transpose() +
                  P0.U_perp * rng.gaussian(2, 1) * rng.gaussian(1, 3) * P0.V_perp.transpose() +
                  P0.U_perp * rng.gaussian(2, 3) * P0.V.transpose();
        }
        Mat zeta = rng.gaussian(m, n);
        if (tall) {
            X.transposeInPlace();
            eta.transposeInPlace();
            zeta.transposeInPlace();
        }
        MatrixPoint P = resolve_point(X);
        IndexPartition part = partition_indices(P, eta);
        Vec d1 = sigma_derivatives_1(P, eta);
        Vec d2 = sigma_derivatives_2(P, eta, zeta);
        for (int i = 1; i <= 5; ++i) {
            if (part.q_a[i - 1] <= part.t) ++count_alpha;
            else if (part.q_b[i - 1] <= part.N_beta) ++count_pos_beta;
            else ++count_zero_group;
            FdReport r1 = fd_check(sigma_valuer(i), X, eta, zeta, 1, d1(i - 1));
            CHECK(r1.rel_gap < 1e-6);
            FdReport r2 = fd_check(sigma_valuer(i), X, eta, zeta, 2, d2(i - 1), d1(i - 1));
            CHECK_MESSAGE(r2.rel_gap < 1e-4, "trial ", trial, " i ", i, " fd ", r2.fd_value,
                          " closed ", r2.closed_value);
        }
    }
    CHECK(count_alpha > 0);
    CHECK(count_pos_beta > 0);
    CHECK(count_zero_group > 0);
}

TEST_CASE("second derivative: trivial and tangent-curvature cases") {
    Rng rng(5);
    Mat zeta = rng.gaussian(3, 4);
    MatrixPoint Z = resolve_point(Mat::Zero(3, 4));
    CHECK(sigma_derivative_2(Z, 1, Mat::Zero(3, 4), zeta) ==
          doctest::Approx(singular_values(zeta)(0)));

    Mat X = rng.low_rank(4, 5, 2);
    MatrixPoint P = resolve_point(X);
    Mat eta = P.U * rng.gaussian(2, 2) * P.V.transpose() + P.U_perp * rng.gaussian(2, 2) * P.V.transpose() +
              P.U * rng.gaussian(2, 3) * P.V_perp.transpose();
    Mat curv = 2.0 * eta * pseudoinverse(P) * eta;
    CHECK(std::abs(sigma_derivative_2(P, 3, eta, curv)) < 1e-10);
}

TEST_CASE("derivatives do not depend on the complement basis") {
    Rng rng(6);
    Mat X = with_spectrum(rng, 4, 6, {2.0, 2.0, 0.0, 0.0});
    Mat eta = rng.gaussian(4, 6), zeta = rng.gaussian(4, 6);
    MatrixPoint P = resolve_point(X);
    MatrixPoint Q = P;
    Q.U_perp = P.U_perp * rng.orthonormal(P.U_perp.cols(), P.U_perp.cols());
    Q.V_perp = P.V_perp * rng.orthonormal(P.V_perp.cols(), P.V_perp.cols());
    CHECK((sigma_derivatives_1(P, eta) - sigma_derivatives_1(Q, eta)).norm() < 1e-8);
    CHECK((sigma_derivatives_2(P, eta, zeta) - sigma_derivatives_2(Q, eta, zeta)).norm() < 1e-8);
}

TEST_CASE("Weyl bound on sigma_{r+1}") {
    Rng rng(8);
    for (int trial = 0; trial < 50; ++trial) {
        Mat X = rng.gaussian(4, 5), D = rng.gaussian(4, 5) * 0.1;
        double lhs = std::abs(singular_values(X + D)(2) - singular_values(X)(2));
        CHECK(lhs <= singular_values(D)(0) + 1e-12);
    }
}

TEST_CASE("eigenvalue derivatives: trivial cases") {
    Rng rng(9);
    Mat eta = sym(rng.gaussian(4, 4));
    SymPoint I = resolve_sym(Mat::Identity(4, 4));
    Vec ev = eigvals_desc(eta);
    for (int j = 1; j <= 4; ++j) CHECK(lambda_derivative_1(I, j, eta) == doctest::Approx(ev(j - 1)));

    Mat X = Vec((Vec(3) << 5, 1, 0).finished()).asDiagonal();
    Mat e = Vec((Vec(3) << 0.3, -0.7, 0.2).finished()).asDiagonal();
    CHECK(lambda_derivative_1(resolve_sym(X), 2, e) == doctest::Approx(-0.7));

    Mat zeta = sym(rng.gaussian(3, 3));
    SymPoint Px = resolve_sym(X);
    // eta = 0: eigenvalue of the zeta block on the level's eigenspace
    CHECK(lambda_derivative_2(Px, 3, Mat::Zero(3, 3), zeta) == doctest::Approx(zeta(2, 2)));
    CHECK_THROWS(lambda_derivative_2(Px, 3, Mat::Zero(3, 3), zeta, 0.5));
}

TEST_CASE("eigenvalue second derivative with vanishing kernel block") {
    Rng rng(10);
    Mat X = Mat::Zero(3, 3);
    X(0, 0) = 1;
    SymPoint P = resolve_sym(X);
    Mat eta = Mat::Zero(3, 3);
    eta(0, 1) = eta(1, 0) = 0.8;
    eta(0, 2) = eta(2, 0) = -0.3;
    eta(0, 0) = 0.4;
    Mat zeta = sym(rng.gaussian(3, 3));
    Mat inner = P.U_perp.transpose() * (zeta - 2.0 * eta * pseudoinverse(P) * eta) * P.U_perp;
    Vec ev = eigvals_desc(inner);
    CHECK(lambda_derivative_2(P, 2, eta, zeta) == doctest::Approx(ev(0)).epsilon(1e-10));
    CHECK(lambda_derivative_2(P, 3, eta, zeta) == doctest::Approx(ev(1)).epsilon(1e-10));
}

TEST_CASE("eigenvalue derivatives vs finite differences with repeated levels") {
    Rng rng(12);
    for (int trial = 0; trial < 10; ++trial) {
        Mat X = sym_with_spectrum(rng, {2.0, 2.0, 0.0, 0.0, -1.0});
        Mat eta = sym(rng.gaussian(5, 5)), zeta = sym(rng.gaussian(5, 5));
        SymPoint P = resolve_sym(X);
        Vec d1 = lambda_derivatives_1(P, eta), d2 = lambda_derivatives_2(P, eta, zeta);
        for (int i = 1; i <= 5; ++i) {
            CHECK(fd_check(lambda_valuer(i), X, eta, zeta, 1, d1(i - 1)).rel_gap < 1e-6);
            CHECK(fd_check(lambda_valuer(i), X, eta, zeta, 2, d2(i - 1), d1(i - 1)).rel_gap < 1e-4);
        }
    }
}
