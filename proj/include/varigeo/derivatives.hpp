#pragma once

#include "varigeo/linalg.hpp"

#include <limits>
#include <string>
#include <vector>

namespace varigeo {

// Index bookkeeping for singular (or eigen) value derivatives. Indices and the
// maps q_a, l, q_b, l' are 1-based, as in the usual matrix-analysis notation.
struct IndexPartition {
    int m = 0, n = 0;           // oriented so that m <= n
    bool transposed = false;
    int s = 0;
    int t = 0;                  // number of distinct positive levels
    std::vector<double> mu;     // mu_1 > ... > mu_t
    std::vector<std::vector<int>> alpha;  // t+1 groups; alpha[t] is beta
    std::vector<int> beta0;     // m+1..n
    std::vector<int> beta_hat;  // beta followed by beta0
    std::vector<int> kappa;     // kappa[0] = 0, kappa[k] = |alpha_1| + ... + |alpha_k|
    // Second level: sub[k][j] lists positions (1-based, local to alpha_k).
    std::vector<std::vector<std::vector<int>>> sub;
    std::vector<std::vector<double>> theta;
    std::vector<std::vector<int>> kappa_sub;
    int N_beta = 0;             // positive singular-value groups of eta_bar(beta, beta_hat)
    std::vector<int> q_a, l, q_b, l_prime;  // indexed by i - 1
    bool ambiguous = false;
    std::vector<std::string> diagnostics;
};

constexpr double kDefaultClusterTol = 1e-8;

IndexPartition partition_indices(const MatrixPoint& P, const Mat& eta,
                                 double cluster_tol = kDefaultClusterTol);

double sigma_derivative_1(const MatrixPoint& P, int i, const Mat& eta,
                          double cluster_tol = kDefaultClusterTol);
double sigma_derivative_2(const MatrixPoint& P, int i, const Mat& eta, const Mat& zeta,
                          double cluster_tol = kDefaultClusterTol);

// All m derivatives at once (shares the decompositions).
Vec sigma_derivatives_1(const MatrixPoint& P, const Mat& eta,
                        double cluster_tol = kDefaultClusterTol);
Vec sigma_derivatives_2(const MatrixPoint& P, const Mat& eta, const Mat& zeta,
                        double cluster_tol = kDefaultClusterTol);

// The matrix V_hat_k(eta, zeta) for k = 1..t+1 in the rotated frame.
Mat v_hat(const MatrixPoint& P, int k, const Mat& eta, const Mat& zeta,
          double cluster_tol = kDefaultClusterTol);

// Eigenvalue partition for a symmetric point: every eigenvalue level (zero
// included) is one group.
IndexPartition partition_eigen(const SymPoint& P, const Mat& eta,
                               double cluster_tol = kDefaultClusterTol);

double lambda_derivative_1(const SymPoint& P, int i, const Mat& eta,
                           double cluster_tol = kDefaultClusterTol);
// shift defaults to lambda_i(X); a supplied value must match it.
double lambda_derivative_2(const SymPoint& P, int i, const Mat& eta, const Mat& zeta,
                           double shift = std::numeric_limits<double>::quiet_NaN(),
                           double cluster_tol = kDefaultClusterTol);
Vec lambda_derivatives_1(const SymPoint& P, const Mat& eta,
                         double cluster_tol = kDefaultClusterTol);
Vec lambda_derivatives_2(const SymPoint& P, const Mat& eta, const Mat& zeta,
                         double cluster_tol = kDefaultClusterTol);

}  // namespace varigeo
