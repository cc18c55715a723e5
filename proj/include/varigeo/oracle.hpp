#pragma once

#include "varigeo/linalg.hpp"

#include <functional>
#include <string>
#include <vector>

namespace varigeo {

enum class DecayClass { order_gt_1, order_le_1, order_gt_2, order_le_2, ambiguous };
std::string to_string(DecayClass c);

// Distance from a point to a set; exact where a projection exists, otherwise a
// documented surrogate.
struct SetProjector {
    std::string name;
    std::function<double(const Mat&)> distance;
};

SetProjector bounded_rank_projector(int r);

struct DecayFit {
    std::vector<double> t_grid;
    std::vector<double> residuals;
    double slope = 0.0;
    double r2 = 0.0;
    int used_points = 0;
    bool saturated = false;
    DecayClass classification = DecayClass::ambiguous;
};

constexpr double kNoiseFloor = 1e-13;

// 9 log-spaced points from 1e-1 down to 1e-5.
std::vector<double> default_t_grid(int points = 9);

DecayFit decay_fit_linear(const Mat& X, const Mat& eta, const SetProjector& set,
                          const std::vector<double>& t_grid = default_t_grid());
DecayFit decay_fit_parabolic(const Mat& X, const Mat& eta, const Mat& zeta,
                             const SetProjector& set,
                             const std::vector<double>& t_grid = default_t_grid());

// Least-squares slope of log(residual) against log(t) and the classification,
// exposed for reuse with residuals computed elsewhere.
DecayFit fit_residuals(const std::vector<double>& t_grid, const std::vector<double>& residuals,
                       int order);

struct FdReport {
    double fd_value = 0.0;
    double closed_value = 0.0;
    double abs_gap = 0.0;
    double rel_gap = 0.0;
    double spread = 0.0;  // disagreement between the two coarsest extrapolants
};

using Valuer = std::function<double(const Mat&)>;

// One-sided differences at t in {1e-3, 1e-4, 1e-5}, extrapolated to remove the
// O(t) and O(t^2) terms. One-sided because singular values of clustered or zero
// levels are only directionally differentiable. Order 2 uses the quotient
// (v(X + t eta + t^2 zeta / 2) - v(X) - t v') / (t^2 / 2) with v' = first_value.
FdReport fd_check(const Valuer& valuer, const Mat& X, const Mat& eta, const Mat& zeta,
                  int order, double closed_value, double first_value = 0.0);

// sigma_i or lambda_i (1-based) evaluated in extended precision; the order-2
// quotient divides by t^2 / 2 = 5e-11, which double-precision SVD noise swamps.
struct SpectralValuer {
    enum class Kind { sigma, lambda } kind = Kind::sigma;
    int index = 1;
};

FdReport fd_check(const SpectralValuer& valuer, const Mat& X, const Mat& eta, const Mat& zeta,
                  int order, double closed_value, double first_value = 0.0);

struct ErrorBoundReport {
    double dist = 0.0;
    double bound = 0.0;        // sqrt(k - r) * sigma_{r+1}
    double tail_sum = 0.0;     // sum_{i > r} sigma_i^2
    double identity_gap = 0.0; // |dist^2 - tail_sum|
    bool holds = true;
};

ErrorBoundReport error_bound_audit(const Mat& X, const RankSpec& spec);

}  // namespace varigeo
