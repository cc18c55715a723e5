#pragma once

#include "varigeo/structured.hpp"
#include "varigeo/tangent.hpp"

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace varigeo {

struct Objective {
    enum class Kind { quadratic, least_squares, custom };
    Kind kind = Kind::custom;
    int m = 0, n = 0;
    std::function<double(const Mat&)> value;
    std::function<Mat(const Mat&)> gradient;
    std::function<Mat(const Mat&, const Mat&)> hessian_apply;  // (X, eta) -> Hess f(X)[eta]
    std::string description;
};

std::string to_string(Objective::Kind k);

// f(X) = 1/2 vec(X)^T Q vec(X) + <C, X>, Q symmetric of size mn (column-major vec).
Objective make_quadratic(const Mat& Q, const Mat& C);
// f(X) = 1/2 ||mask .* (X - target)||^2; an empty mask means all ones.
Objective make_least_squares(const Mat& target, const Mat& mask = Mat());
// f(X) = <C, X>
Objective make_linear(const Mat& C);

// Gradient against central differences (1e-6 relative) and Hessian symmetry
// (1e-10) on seeded random probes. Throws std::invalid_argument on failure.
void validate_objective(const Objective& f, std::uint64_t seed = 7, int probes = 4);

enum class Verdict { pass, fail, unknown };
enum class Certification { exact, heuristic };
std::string to_string(Verdict v);
std::string to_string(Certification c);

struct StationarityReport {
    Verdict first_order = Verdict::unknown;
    double first_residual = 0.0;
    double first_threshold = 0.0;
    bool second_checked = false;
    Verdict second_order = Verdict::unknown;
    double curvature = 0.0;  // smallest curvature found, per unit direction
    Mat witness;             // unit direction attaining it
    bool rank_deficient = false;
    Certification level = Certification::exact;
    double grid_gap = -1.0;  // set when the grid upgrade ran
    std::string note;
};

StationarityReport check_first_order(const MatrixPoint& P, const Objective& f, const RankSpec& spec,
                                     const std::optional<ConstraintH>& H = std::nullopt,
                                     double tol = 1e-8);

struct SecondOrderOptions {
    double tol = 1e-9;
    int starts = 64;
    int iterations = 100;
    int polish = 100;
    std::uint64_t seed = 1;
    bool grid_upgrade = true;
};

// Throws std::invalid_argument if the first-order test fails.
StationarityReport check_second_order(const MatrixPoint& P, const Objective& f, const RankSpec& spec,
                                      const SecondOrderOptions& opt = {});

// Orthonormal basis of the tangent space of the fixed-rank manifold at X.
std::vector<Mat> tangent_space_basis(const MatrixPoint& P);
// Gram matrix of q(eta) = <grad f, 2 eta X^+ eta> + <eta, Hess f[eta]> on a basis.
Mat reduced_hessian(const MatrixPoint& P, const Objective& f, const std::vector<Mat>& basis);

// ---------------------------------------------------------------------------
// Graphs and the clique reduction

struct Graph {
    int n = 0;
    std::vector<std::pair<int, int>> edges;  // i < j, sorted, unique

    static Graph make(int n, std::vector<std::pair<int, int>> edges);
    bool adjacent(int i, int j) const;
    Mat adjacency() const;
};

Graph complete_graph(int n);
Graph cycle_graph(int n);
Graph path_graph(int n);
Graph edgeless_graph(int n);
Graph petersen_graph();
Graph random_graph(int n, double p, Rng& rng);
// Named graphs used by the acceptance suite and the CLI corpus.
std::vector<std::pair<std::string, Graph>> graph_corpus(std::uint64_t seed);

int omega_bruteforce(const Graph& G);

struct VersocInstance {
    Objective f;
    Mat X0;  // zero matrix
    RankSpec spec;
    int K = 0;
    double shift = 0.0;  // 1 - 1/(K-1)
};
VersocInstance versoc_build(const Graph& G, int K);

struct VersocLambda {
    double lambda_enum = 0.0;    // from stationary points of every simplex face
    double lambda_ascent = 0.0;  // multistart projected gradient on the simplex
    double motzkin_straus = 0.0; // max over the simplex of sum_E x_i x_j
    int supports = 0;            // faces with an interior stationary point
};
VersocLambda versoc_lambda_numeric(const Graph& G, int K, std::uint64_t seed = 3);
double versoc_lambda_formula(int omega, int K);

struct FptasGap {
    double lambda = 0.0;
    double epsilon = 0.0;  // 1 / (2 K (K-1))
    bool separated = false;
    bool clique = false;
};
FptasGap fptas_gap_check(const Graph& G, int K);

// ---------------------------------------------------------------------------

struct PgdOptions {
    int steps = 500;
    double alpha0 = 1.0;
    double armijo_c = 1e-4;
    double shrink = 0.5;
    int max_backtracks = 40;
    double tol = 1e-12;  // stop when the step is this small relative to ||X||
    double blowup = 1e12;
};

struct PgdTrace {
    std::vector<double> values;
    std::vector<double> step_norms;
    Mat X;
    bool converged = false;
    bool diverged = false;
    std::string message;
};

PgdTrace pgd_solve(const Objective& f, const RankSpec& spec, const Mat& X0, const PgdOptions& opt = {});

}  // namespace varigeo
