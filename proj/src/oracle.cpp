#include "varigeo/oracle.hpp"

#include <cmath>
#include <stdexcept>

namespace varigeo {

std::string to_string(DecayClass c) {
    switch (c) {
        case DecayClass::order_gt_1: return "order_gt_1";
        case DecayClass::order_le_1: return "order_le_1";
        case DecayClass::order_gt_2: return "order_gt_2";
        case DecayClass::order_le_2: return "order_le_2";
        case DecayClass::ambiguous: return "ambiguous";
    }
    return "ambiguous";
}

SetProjector bounded_rank_projector(int r) {
    return {"bounded_rank(" + std::to_string(r) + ")", [r](const Mat& Y) {
                Vec s = singular_values(Y);
                double acc = 0;
                for (Eigen::Index i = r; i < s.size(); ++i) acc += s(i) * s(i);
                return std::sqrt(acc);
            }};
}

std::vector<double> default_t_grid(int points) {
    std::vector<double> g(points);
    for (int i = 0; i < points; ++i)
        g[i] = std::pow(10.0, -1.0 - 4.0 * i / static_cast<double>(points - 1));
    return g;
}

DecayFit fit_residuals(const std::vector<double>& t_grid, const std::vector<double>& residuals,
                       int order) {
    DecayFit F;
    F.t_grid = t_grid;
    F.residuals = residuals;
    std::vector<double> x, y;
    for (size_t i = 0; i < t_grid.size(); ++i) {
        if (residuals[i] >= kNoiseFloor) {
            x.push_back(std::log(t_grid[i]));
            y.push_back(std::log(residuals[i]));
        }
    }
    F.used_points = static_cast<int>(x.size());
    const double hi = order == 1 ? 1.5 : 2.5;
    const double lo = order == 1 ? 1.2 : 2.2;
    if (x.size() < 3) {
        F.saturated = true;
        F.slope = std::numeric_limits<double>::infinity();
        F.r2 = 1.0;
        F.classification = order == 1 ? DecayClass::order_gt_1 : DecayClass::order_gt_2;
        return F;
    }
    double mx = 0, my = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= x.size();
    my /= x.size();
    double sxx = 0, sxy = 0, syy = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    F.slope = sxy / sxx;
    F.r2 = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    if (F.slope >= hi && F.r2 >= 0.98)
        F.classification = order == 1 ? DecayClass::order_gt_1 : DecayClass::order_gt_2;
    else if (F.slope <= lo)
        F.classification = order == 1 ? DecayClass::order_le_1 : DecayClass::order_le_2;
    else
        F.classification = DecayClass::ambiguous;
    return F;
}

DecayFit decay_fit_linear(const Mat& X, const Mat& eta, const SetProjector& set,
                          const std::vector<double>& t_grid) {
    if (X.rows() != eta.rows() || X.cols() != eta.cols())
        throw std::invalid_argument("decay_fit_linear: shape mismatch");
    std::vector<double> res(t_grid.size());
    for (size_t i = 0; i < t_grid.size(); ++i) res[i] = set.distance(X + t_grid[i] * eta);
    return fit_residuals(t_grid, res, 1);
}

DecayFit decay_fit_parabolic(const Mat& X, const Mat& eta, const Mat& zeta,
                             const SetProjector& set, const std::vector<double>& t_grid) {
    if (X.rows() != eta.rows() || X.cols() != eta.cols() || zeta.rows() != X.rows() ||
        zeta.cols() != X.cols())
        throw std::invalid_argument("decay_fit_parabolic: shape mismatch");
    std::vector<double> res(t_grid.size());
    for (size_t i = 0; i < t_grid.size(); ++i) {
        double t = t_grid[i];
        res[i] = set.distance(X + t * eta + 0.5 * t * t * zeta);
    }
    return fit_residuals(t_grid, res, 2);
}

namespace {

template <class Eval>
FdReport richardson(Eval&& eval, int order, double closed_value, double first_value) {
    if (order != 1 && order != 2) throw std::invalid_argument("fd_check: order must be 1 or 2");
    const long double steps[3] = {1e-3L, 1e-4L, 1e-5L};
    const long double v0 = eval(0.0L);
    long double q[3];
    for (int j = 0; j < 3; ++j) {
        long double t = steps[j];
        if (order == 1)
            q[j] = (eval(t) - v0) / t;
        else
            q[j] = (eval(t) - v0 - t * static_cast<long double>(first_value)) / (0.5L * t * t);
    }
    // step ratio 10: remove O(t), then O(t^2)
    long double r1a = (10.0L * q[1] - q[0]) / 9.0L;
    long double r1b = (10.0L * q[2] - q[1]) / 9.0L;
    long double r2 = (100.0L * r1b - r1a) / 99.0L;
    FdReport rep;
    rep.fd_value = static_cast<double>(r2);
    rep.closed_value = closed_value;
    rep.abs_gap = std::abs(rep.fd_value - closed_value);
    rep.rel_gap = rep.abs_gap / std::max(1.0, std::abs(closed_value));
    rep.spread = static_cast<double>(std::abs(r1a - r1b));
    return rep;
}

using MatL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;

long double spectral_value(const SpectralValuer& v, const MatL& Y) {
    if (v.kind == SpectralValuer::Kind::sigma) {
        Eigen::JacobiSVD<MatL> svd(Y);
        return svd.singularValues()(v.index - 1);
    }
    MatL S = (Y + Y.transpose()) / 2.0L;
    Eigen::SelfAdjointEigenSolver<MatL> es(S, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(es.eigenvalues().size() - v.index);
}

}  // namespace

FdReport fd_check(const Valuer& valuer, const Mat& X, const Mat& eta, const Mat& zeta,
                  int order, double closed_value, double first_value) {
    auto eval = [&](long double t) -> long double {
        double td = static_cast<double>(t);
        return valuer(X + td * eta + (order == 2 ? 0.5 * td * td : 0.0) * zeta);
    };
    return richardson(eval, order, closed_value, first_value);
}

FdReport fd_check(const SpectralValuer& valuer, const Mat& X, const Mat& eta, const Mat& zeta,
                  int order, double closed_value, double first_value) {
    const int k = static_cast<int>(valuer.kind == SpectralValuer::Kind::sigma
                                       ? std::min(X.rows(), X.cols())
                                       : X.rows());
    if (valuer.index < 1 || valuer.index > k) throw std::out_of_range("fd_check: index");
    MatL XL = X.cast<long double>(), EL = eta.cast<long double>(), ZL = zeta.cast<long double>();
    auto eval = [&](long double t) -> long double {
        MatL Y = XL + t * EL;
        if (order == 2) Y += 0.5L * t * t * ZL;
        return spectral_value(valuer, Y);
    };
    return richardson(eval, order, closed_value, first_value);
}

ErrorBoundReport error_bound_audit(const Mat& X, const RankSpec& spec) {
    check_spec(X, spec);
    ErrorBoundReport rep;
    Vec s = singular_values(X);
    Mat P = project_bounded_rank(X, spec);
    rep.dist = (X - P).norm();
    double sr1 = spec.r < s.size() ? s(spec.r) : 0.0;
    rep.bound = std::sqrt(static_cast<double>(spec.k - spec.r)) * sr1;
    for (Eigen::Index i = spec.r; i < s.size(); ++i) rep.tail_sum += s(i) * s(i);
    rep.identity_gap = std::abs(rep.dist * rep.dist - rep.tail_sum);
    double scale = s.size() ? s(0) * s(0) : 0.0;
    rep.holds = rep.dist <= rep.bound * (1 + 1e-12) + 1e-14 * std::sqrt(scale) &&
                rep.identity_gap <= 1e-10 * std::max(scale, 1e-300);
    return rep;
}

}  // namespace varigeo
