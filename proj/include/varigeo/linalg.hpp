#pragma once

#include "varigeo/common.hpp"

namespace varigeo {

struct RankSpec {
    int r = 0;
    int k = 0;  // min(m, n)
};

RankSpec make_spec(const Mat& X, int r);
void check_spec(const Mat& X, const RankSpec& spec);

// Compact SVD anchored with canonical signs and deterministic complements.
struct MatrixPoint {
    Mat X;
    double rank_tol = 1e-8;
    int s = 0;
    Mat U, V;        // m x s, n x s
    Vec sigma;       // s, non-increasing, all > rank_tol * sigma_1
    Mat U_perp, V_perp;
    Vec all_sigma;   // full spectrum, min(m, n) entries

    int rows() const { return static_cast<int>(X.rows()); }
    int cols() const { return static_cast<int>(X.cols()); }
    Mat Ubar() const;  // [U U_perp]
    Mat Vbar() const;  // [V V_perp]
    Mat reconstruct() const;
};

MatrixPoint resolve_point(const Mat& X, double rank_tol = 1e-8);

// Symmetric point: eigenvalues sorted descending. U holds the eigenvectors of the
// nonzero eigenvalues (positives first), U_perp spans the kernel.
struct SymPoint {
    Mat X;
    double rank_tol = 1e-8;
    int s = 0, s_plus = 0, s_minus = 0;
    Vec lambda;      // nonzero eigenvalues, descending
    Mat U, U_perp;
    Vec all_lambda;  // n eigenvalues, descending
    Mat Q;           // eigenvectors matching all_lambda

    int n() const { return static_cast<int>(X.rows()); }
};

SymPoint resolve_sym(const Mat& X, double rank_tol = 1e-8);

Mat project_bounded_rank(const Mat& X, const RankSpec& spec);
Mat pseudoinverse(const MatrixPoint& P);
Mat pseudoinverse(const SymPoint& P);

// Small helpers shared across modules.
Vec singular_values(const Mat& M);
int numeric_rank(const Mat& M, double abs_tol);
Mat sym(const Mat& M);
bool is_symmetric(const Mat& M, double rel_tol = 1e-10);
void eig_desc(const Mat& S, Vec& vals, Mat& vecs);
Vec eigvals_desc(const Mat& S);
Mat truncate_rank(const Mat& M, int r);
Mat orth_complement(const Mat& Q, int m);
Mat orth_basis(const Mat& M, double rel_tol = 1e-10);
Mat null_basis(const Mat& M, double rel_tol = 1e-10);
void assert_finite(const Mat& M, const char* what);

}  // namespace varigeo
