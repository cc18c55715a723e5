#include <doctest.h>

#include "varigeo/linalg.hpp"
#include "varigeo/oracle.hpp"

using namespace varigeo;

namespace {

double gram_defect(const Mat& Q) {
    return (Q.transpose() * Q - Mat::Identity(Q.cols(), Q.cols())).norm();
}

// Alternating least squares for min ||X - L R^T||, used as an independent
// rank-constrained optimizer.
double als_best(const Mat& X, int r, Rng& rng, int starts, int sweeps) {
    double best = 1e300;
    for (int s = 0; s < starts; ++s) {
        Mat L = rng.gaussian(X.rows(), r), R = rng.gaussian(X.cols(), r);
        for (int it = 0; it < sweeps; ++it) {
            R = (L.colPivHouseholderQr().solve(X)).transpose();
            L = (R.colPivHouseholderQr().solve(X.transpose())).transpose();
        }
        best = std::min(best, (X - L * R.transpose()).norm());
    }
    return best;
}

}  // namespace

TEST_CASE("resolve_point on identity and zero") {
    MatrixPoint P = resolve_point(Mat::Identity(3, 3), 1e-8);
    CHECK(P.s == 3);
    CHECK((P.sigma - Vec::Ones(3)).norm() < 1e-14);
    CHECK((P.U * P.V.transpose() - Mat::Identity(3, 3)).norm() < 1e-12);

    MatrixPoint Z = resolve_point(Mat::Zero(2, 3), 1e-8);
    CHECK(Z.s == 0);
    CHECK(Z.sigma.size() == 0);
    CHECK((Z.U_perp - Mat::Identity(2, 2)).norm() == 0.0);
    CHECK((Z.V_perp - Mat::Identity(3, 3)).norm() == 0.0);
}

TEST_CASE("resolve_point drops a 1e-12 tail; values match an eigensolve of X^T X") {
    Mat X = Vec((Vec(3) << 3, 2, 1e-12).finished()).asDiagonal();
    MatrixPoint P = resolve_point(X, 1e-8);
    CHECK(P.s == 2);
    Eigen::SelfAdjointEigenSolver<Mat> es(X.transpose() * X);
    Vec ref = es.eigenvalues().reverse().head(2).cwiseSqrt();
    CHECK((P.sigma - ref).norm() < 1e-12);
}

TEST_CASE("resolve_point invariants on random points") {
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        int m = rng.uniform_int(1, 7), n = rng.uniform_int(1, 7);
        int r = rng.uniform_int(0, std::min(m, n));
        Mat X = rng.low_rank(m, n, r);
        MatrixPoint P = resolve_point(X, 1e-9);
        CHECK(P.s == r);
        CHECK(gram_defect(P.Ubar()) < 1e-10);
        CHECK(gram_defect(P.Vbar()) < 1e-10);
        CHECK((P.U_perp.transpose() * P.U).norm() < 1e-12);
        CHECK((P.V_perp.transpose() * P.V).norm() < 1e-12);
        double s1 = P.s ? P.sigma(0) : 0.0;
        CHECK((X - P.reconstruct()).norm() <= 1e-9 * s1 * std::sqrt(std::min(m, n)) + 1e-14);
        for (int i = 0; i < P.s; ++i) {
            Eigen::Index arg;
            P.U.col(i).cwiseAbs().maxCoeff(&arg);
            CHECK(P.U(arg, i) > 0);
        }
        MatrixPoint Q = resolve_point(P.reconstruct(), 1e-9);
        CHECK(Q.s == P.s);
        CHECK((Q.sigma - P.sigma).norm() <= 1e-10 * std::max(1.0, s1));
    }
}

TEST_CASE("resolve_point rejects bad input") {
    Mat X = Mat::Identity(2, 2);
    CHECK_THROWS_AS(resolve_point(X, 0.0), std::invalid_argument);
    X(0, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(resolve_point(X, 1e-8), std::invalid_argument);
}

TEST_CASE("project_bounded_rank") {
    Mat X = Vec((Vec(3) << 3, 2, 1).finished()).asDiagonal();
    Mat Y = project_bounded_rank(X, make_spec(X, 2));
    Mat expect = Vec((Vec(3) << 3, 2, 0).finished()).asDiagonal();
    CHECK((Y - expect).norm() < 1e-13);

    Rng rng(11);
    Mat F = rng.low_rank(4, 5, 2);
    CHECK((project_bounded_rank(F, make_spec(F, 2)) - F).norm() < 1e-12 * F.norm());
    CHECK_THROWS(project_bounded_rank(F, RankSpec{2, 5}));

    Mat A = rng.gaussian(5, 4);
    Mat PA = project_bounded_rank(A, make_spec(A, 2));
    double ours = (A - PA).norm();
    double als = als_best(A, 2, rng, 1000, 50);
    CHECK(ours <= als + 1e-12);
    CHECK(numeric_rank(PA, 1e-10) <= 2);
}

TEST_CASE("pseudoinverse") {
    Mat D = Vec((Vec(2) << 2, 4).finished()).asDiagonal();
    Mat Dp = pseudoinverse(resolve_point(D));
    Mat expect = Vec((Vec(2) << 0.5, 0.25).finished()).asDiagonal();
    CHECK((Dp - expect).norm() < 1e-15);

    Mat Zp = pseudoinverse(resolve_point(Mat::Zero(2, 3)));
    CHECK(Zp.rows() == 3);
    CHECK(Zp.cols() == 2);
    CHECK(Zp.norm() == 0.0);

    Rng rng(5);
    Mat A = rng.low_rank(4, 3, 2);
    Mat Ap = pseudoinverse(resolve_point(A));
    CHECK((A * Ap * A - A).norm() < 1e-10);
    CHECK((Ap * A * Ap - Ap).norm() < 1e-10);
    CHECK(((A * Ap).transpose() - A * Ap).norm() < 1e-10);
    CHECK(((Ap * A).transpose() - Ap * A).norm() < 1e-10);
}

TEST_CASE("error bound and tail identity of the truncated SVD") {
    Rng rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        int m = rng.uniform_int(1, 8), n = rng.uniform_int(1, 8);
        Mat X = rng.gaussian(m, n);
        int r = rng.uniform_int(0, std::min(m, n));
        ErrorBoundReport rep = error_bound_audit(X, make_spec(X, r));
        CHECK(rep.holds);
    }
    Mat X = Vec((Vec(3) << 3, 2, 1).finished()).asDiagonal();
    ErrorBoundReport rep = error_bound_audit(X, make_spec(X, 1));
    CHECK(rep.dist == doctest::Approx(std::sqrt(5.0)));
    CHECK(rep.bound == doctest::Approx(2.0 * std::sqrt(2.0)));
}

TEST_CASE("symmetric resolution") {
    Mat X = Vec((Vec(4) << 5, -2, 0, 1).finished()).asDiagonal();
    SymPoint P = resolve_sym(X);
    CHECK(P.s == 3);
    CHECK(P.s_plus == 2);
    CHECK(P.s_minus == 1);
    CHECK(P.lambda(0) == doctest::Approx(5));
    CHECK(P.lambda(2) == doctest::Approx(-2));
    CHECK((P.U * P.lambda.asDiagonal() * P.U.transpose() - X).norm() < 1e-12);
    CHECK((P.U_perp.transpose() * P.U).norm() < 1e-12);
    Mat A = Mat::Zero(2, 2);
    A(0, 1) = 1;
    CHECK_THROWS(resolve_sym(A));
}
