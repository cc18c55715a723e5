#include <doctest.h>

#include "varigeo/stationarity.hpp"

#include <algorithm>

using namespace varigeo;

namespace {

double ip(const Mat& A, const Mat& B) { return (A.array() * B.array()).sum(); }

}  // namespace

TEST_CASE("objective validation") {
    Rng rng(61);
    Mat T = rng.gaussian(3, 4);
    CHECK_NOTHROW(validate_objective(make_least_squares(T)));
    Mat Q = rng.gaussian(12, 12);
    CHECK_NOTHROW(validate_objective(make_quadratic(Q + Q.transpose(), rng.gaussian(3, 4))));
    CHECK_THROWS(make_quadratic(Q, rng.gaussian(3, 4)));  // asymmetric
    Objective bad = make_least_squares(T);
    bad.gradient = [](const Mat& X) { return Mat(2.0 * X); };
    CHECK_THROWS(validate_objective(bad));
}

TEST_CASE("first order examples") {
    Rng rng(62);
    Mat Xs = rng.low_rank(5, 4, 2);
    auto P = resolve_point(Xs);
    RankSpec spec{2, 4};
    auto r = check_first_order(P, make_least_squares(Xs), spec);
    CHECK(r.first_order == Verdict::pass);
    CHECK(r.first_residual < 1e-12);

    // purely normal gradient at a rank-r point
    Mat C = P.U_perp * rng.gaussian(3, 2) * P.V_perp.transpose();
    CHECK(check_first_order(P, make_linear(C), spec).first_order == Verdict::pass);

    // rank-deficient point with nonzero gradient in the normal block
    Mat X1 = rng.low_rank(5, 4, 1);
    auto P1 = resolve_point(X1);
    Mat N = P1.U_perp * rng.gaussian(4, 3) * P1.V_perp.transpose();
    auto rf = check_first_order(P1, make_linear(N), spec);
    CHECK(rf.first_order == Verdict::fail);
    // oracle: the best rank-(r-s) descent direction in the normal block
    double sigma1 = singular_values(N)(0);
    CHECK(rf.first_residual >= sigma1 - 1e-10);
    double sampled = 0.0;
    for (int k = 0; k < 500; ++k) {
        Vec u = P1.U_perp * rng.gaussian(4), v = P1.V_perp * rng.gaussian(3);
        Mat eta = u * v.transpose();
        sampled = std::max(sampled, -ip(N, eta) / eta.norm());
    }
    CHECK(rf.first_residual >= sampled - 1e-10);
}

TEST_CASE("first order with constraints") {
    Rng rng(63);
    RankSpec spec{2, 4};
    auto H = ConstraintH::sphere();
    Mat X = rng.low_rank(4, 4, 2);
    X /= X.norm();
    auto P = resolve_point(X);
    // f = ||X||^2 / 2 is constant on the sphere: its gradient is parallel to the constraint gradient
    Objective f = make_least_squares(Mat::Zero(4, 4));
    auto r = check_first_order(P, f, spec, H);
    CHECK(r.first_order == Verdict::pass);
    auto r2 = check_first_order(P, make_linear(rng.gaussian(4, 4)), spec, H);
    CHECK(r2.first_order == Verdict::fail);

    // affine constraint whose CQ fails at a rank-deficient point
    Mat Y = Mat::Zero(3, 3);
    Y(0, 0) = 1.0;
    auto PY = resolve_point(Y);
    std::vector<Mat> A(2, Mat::Zero(3, 3));
    A[0](0, 0) = 1.0;
    A[1](0, 0) = 2.0;
    Vec b(2);
    b << 1.0, 2.0;
    auto HA = ConstraintH::affine(A, b);
    auto ru = check_first_order(PY, make_linear(rng.gaussian(3, 3)), RankSpec{2, 3}, HA);
    CHECK(ru.first_order == Verdict::unknown);
    CHECK_FALSE(ru.note.empty());
}

TEST_CASE("second order at rank r") {
    Rng rng(64);
    Mat Xs = rng.low_rank(4, 5, 2);
    auto P = resolve_point(Xs);
    RankSpec spec{2, 4};
    auto r = check_second_order(P, make_least_squares(Xs), spec);
    CHECK(r.second_order == Verdict::pass);
    CHECK(r.level == Certification::exact);
    CHECK(r.curvature == doctest::Approx(1.0).epsilon(1e-9));

    // two assemblies with permuted basis order agree
    Mat T = rng.gaussian(4, 5);
    Objective f = make_least_squares(T, (rng.gaussian(4, 5).array() > 0).cast<double>().matrix());
    auto basis = tangent_space_basis(P);
    CHECK(basis.size() == size_t(4 * 2 + 5 * 2 - 4));
    auto perm = basis;
    std::reverse(perm.begin(), perm.end());
    std::swap(perm[0], perm[3]);
    Eigen::SelfAdjointEigenSolver<Mat> e1(reduced_hessian(P, f, basis)), e2(reduced_hessian(P, f, perm));
    CHECK((e1.eigenvalues() - e2.eigenvalues()).cwiseAbs().maxCoeff() < 1e-9);

    // the quadratic form matches the second derivative of f along a retraction curve
    Vec c = rng.gaussian(static_cast<int>(basis.size()));
    c.normalize();
    Mat eta = Mat::Zero(4, 5);
    for (size_t k = 0; k < basis.size(); ++k) eta += c(k) * basis[k];
    double q = c.dot(reduced_hessian(P, f, basis) * c);
    // second-order curve X + t eta + t^2 eta X^+ eta stays on the manifold up to O(t^3)
    Mat zeta = eta * pseudoinverse(P) * eta;
    const double t = 1e-4;
    auto val = [&](double s) { return f.value(truncate_rank(Xs + s * eta + s * s * zeta, 2)); };
    double fd = (val(t) - 2 * val(0) + val(-t)) / (t * t);
    CHECK(fd == doctest::Approx(q).epsilon(1e-3).scale(1.0));
}

TEST_CASE("second order needs first order") {
    Rng rng(65);
    auto P = resolve_point(rng.low_rank(3, 3, 1));
    CHECK_THROWS_AS(check_second_order(P, make_linear(rng.gaussian(3, 3)), RankSpec{1, 3}),
                    std::invalid_argument);
}

TEST_CASE("graphs and clique numbers") {
    CHECK(omega_bruteforce(edgeless_graph(5)) == 1);
    CHECK(omega_bruteforce(complete_graph(5)) == 5);
    CHECK(omega_bruteforce(cycle_graph(5)) == 2);
    CHECK(omega_bruteforce(cycle_graph(3)) == 3);
    CHECK(omega_bruteforce(petersen_graph()) == 2);
    CHECK(petersen_graph().edges.size() == 15);
    CHECK_THROWS(Graph::make(3, {{0, 0}}));
    CHECK_THROWS(Graph::make(3, {{0, 1}, {1, 0}}));
    CHECK_THROWS(Graph::make(3, {{0, 3}}));
    CHECK(graph_corpus(1).size() >= 20);
}

TEST_CASE("clique number by exhaustive subsets") {
    // independent oracle: check every vertex subset
    for (const auto& [name, G] : graph_corpus(7)) {
        int best = G.n ? 1 : 0;
        for (std::uint32_t S = 1; S < (1u << G.n); ++S) {
            int k = std::popcount(S);
            if (k <= best) continue;
            bool clique = true;
            for (int i = 0; i < G.n && clique; ++i)
                for (int j = i + 1; j < G.n && clique; ++j)
                    if ((S >> i & 1u) && (S >> j & 1u) && !G.adjacent(i, j)) clique = false;
            if (clique) best = k;
        }
        INFO(name);
        CHECK(omega_bruteforce(G) == best);
    }
}

TEST_CASE("versoc values") {
    CHECK(versoc_lambda_numeric(complete_graph(4), 4).lambda_enum == doctest::Approx(-1.0 / 12).epsilon(1e-12));
    CHECK(std::abs(versoc_lambda_numeric(petersen_graph(), 3).lambda_enum) < 1e-12);
    CHECK(versoc_lambda_numeric(path_graph(3), 2).lambda_enum == doctest::Approx(-0.5).epsilon(1e-12));
    auto e = versoc_lambda_numeric(complete_graph(2), 2);
    CHECK(std::abs(e.lambda_enum + 0.5) < 1e-6);
    CHECK(std::abs(e.lambda_ascent + 0.5) < 1e-6);
    CHECK(versoc_lambda_numeric(cycle_graph(3), 3).lambda_enum == doctest::Approx(-1.0 / 6).epsilon(1e-12));
    CHECK(versoc_lambda_numeric(edgeless_graph(4), 3).lambda_enum > 0);
    CHECK_THROWS(versoc_build(complete_graph(3), 4));
    CHECK_THROWS(versoc_lambda_numeric(complete_graph(13), 3));
}

TEST_CASE("versoc identity across the corpus") {
    for (const auto& [name, G] : graph_corpus(11)) {
        int w = omega_bruteforce(G);
        for (int K : {2, 3, 4}) {
            if (K > G.n) continue;
            auto L = versoc_lambda_numeric(G, K);
            INFO(name << " K=" << K);
            CHECK(std::abs(L.lambda_enum - versoc_lambda_formula(w, K)) <= 1e-9);
            CHECK((L.lambda_enum < -1e-12) == (w >= K));
            CHECK(L.lambda_ascent >= L.lambda_enum - 1e-9);
            auto gap = fptas_gap_check(G, K);
            CHECK(gap.separated);
        }
    }
}

TEST_CASE("versoc operator and the rank-one minimum") {
    // min over unit rank-one eta of <eta, A eta> equals lambda*; check with u u^T directions
    Rng rng(66);
    for (auto G : {cycle_graph(3), cycle_graph(5), path_graph(4)}) {
        for (int K : {2, 3}) {
            auto V = versoc_build(G, K);
            validate_objective(V.f);
            CHECK(V.f.gradient(V.X0).norm() == 0.0);
            double lam = versoc_lambda_numeric(G, K).lambda_enum;
            double sampled = 1e9;
            for (int t = 0; t < 2000; ++t) {
                Vec u = rng.gaussian(G.n);
                u.normalize();
                Mat eta = u * u.transpose();
                sampled = std::min(sampled, 0.5 * ip(eta, V.f.hessian_apply(V.X0, eta)));
            }
            CHECK(sampled >= lam - 1e-9);
        }
    }
}

TEST_CASE("versoc second order verdicts") {
    auto tri = versoc_build(cycle_graph(3), 3);
    auto P = resolve_point(tri.X0);
    auto r = check_second_order(P, tri.f, tri.spec);
    CHECK(r.second_order == Verdict::fail);
    CHECK(r.level == Certification::exact);
    REQUIRE(r.witness.size() == 9);
    CHECK(numeric_rank(r.witness, 1e-8) <= 1);
    CHECK(r.curvature == doctest::Approx(2.0 * (1.0 / 3 - 0.5)).epsilon(1e-8));
    CHECK(ip(r.witness, tri.f.hessian_apply(tri.X0, r.witness)) < 0);

    auto c5 = versoc_build(cycle_graph(5), 3);
    auto r5 = check_second_order(resolve_point(c5.X0), c5.f, c5.spec);
    CHECK(r5.second_order == Verdict::pass);
    CHECK(r5.level == Certification::heuristic);
    CHECK(r5.curvature > -1e-8);
}

TEST_CASE("grid upgrade on a tiny rank-deficient instance") {
    Rng rng(67);
    // f = 1/2 ||X - T||^2 with T rank 1, point X = T, spec r = 2: curvature is the identity
    Mat T = Mat::Zero(3, 3);
    T(0, 0) = 2.0;
    auto r = check_second_order(resolve_point(T), make_least_squares(T), RankSpec{2, 3});
    CHECK(r.second_order == Verdict::pass);
    CHECK(r.level == Certification::exact);
    CHECK(r.grid_gap > 0);
}

TEST_CASE("projected gradient") {
    Rng rng(68);
    Mat Xs = rng.low_rank(5, 5, 2);
    auto tr = pgd_solve(make_least_squares(Xs), RankSpec{2, 5}, rng.gaussian(5, 5));
    CHECK(tr.converged);
    CHECK(tr.values.size() <= 101);
    CHECK((tr.X - Xs).norm() < 1e-8);

    // matrix completion with a planted rank-2 truth
    Mat truth = rng.low_rank(6, 6, 2);
    Mat mask(6, 6);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) mask(i, j) = rng.uniform() < 0.6 ? 1.0 : 0.0;
    Objective f = make_least_squares(truth, mask);
    PgdOptions opt;
    opt.steps = 5000;
    auto mc = pgd_solve(f, RankSpec{2, 6}, truth + 0.3 * rng.gaussian(6, 6), opt);
    auto rep = check_first_order(resolve_point(mc.X), f, RankSpec{2, 6});
    CHECK(rep.first_residual <= 1e-5);
    for (size_t k = 1; k < mc.values.size(); ++k) CHECK(mc.values[k] <= mc.values[k - 1] + 1e-14);

    auto lin = pgd_solve(make_linear(rng.gaussian(4, 4)), RankSpec{1, 4}, rng.gaussian(4, 4));
    CHECK(lin.diverged);
    CHECK_FALSE(lin.message.empty());
}

TEST_CASE("local minimality smoke test") {
    Rng rng(69);
    Mat T = rng.gaussian(4, 4);
    Objective f = make_least_squares(T);
    RankSpec spec{2, 4};
    Mat X = truncate_rank(T, 2);
    auto P = resolve_point(X);
    auto rep = check_second_order(P, f, spec);
    REQUIRE(rep.second_order == Verdict::pass);
    REQUIRE(rep.level == Certification::exact);
    double f0 = f.value(X);
    PgdOptions opt;
    opt.steps = 50;
    for (int k = 0; k < 20; ++k) {
        Mat D = rng.gaussian(4, 4);
        Mat start = truncate_rank(X + 1e-3 * D / D.norm(), 2);
        auto tr = pgd_solve(f, spec, start, opt);
        for (double v : tr.values) CHECK(v >= f0 - 1e-10);
    }
}
