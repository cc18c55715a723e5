// Thin numpy-facing wrappers. Results come back as dicts so the Python side
// does not need mirror classes for every certificate.

#include "varigeo/derivatives.hpp"
#include "varigeo/graphcone.hpp"
#include "varigeo/oracle.hpp"
#include "varigeo/param.hpp"
#include "varigeo/stationarity.hpp"
#include "varigeo/structured.hpp"
#include "varigeo/tangent.hpp"
#include "varigeo/tensor.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <optional>

namespace py = pybind11;
using namespace varigeo;
using namespace pybind11::literals;

namespace {

py::list violations(const std::vector<ConeViolation>& v) {
    py::list out;
    for (const auto& x : v) out.append(py::make_tuple(x.name, x.magnitude));
    return out;
}

py::dict tangent(const Mat& X, const Mat& eta, int r, double rank_tol) {
    MatrixPoint P = resolve_point(X, rank_tol);
    TangentCertificate c = tangent_membership(P, eta, make_spec(X, r));
    return py::dict("member"_a = c.member, "violation"_a = c.violation, "threshold"_a = c.threshold,
                    "normal_spectrum"_a = c.normal_spectrum);
}

py::dict second_order(const Mat& X, const Mat& eta, const Mat& zeta, int r, double rank_tol) {
    MatrixPoint P = resolve_point(X, rank_tol);
    SecondOrderCertificate c = second_order_membership(P, eta, zeta, make_spec(X, r));
    return py::dict("member"_a = c.member, "ell"_a = c.element.ell, "violation"_a = c.violation,
                    "threshold"_a = c.threshold, "j_spectrum"_a = c.j_spectrum);
}

py::tuple sigma_derivative(const Mat& X, int i, const Mat& eta, std::optional<Mat> zeta) {
    MatrixPoint P = resolve_point(X);
    double d1 = sigma_derivative_1(P, i, eta);
    double d2 = zeta ? sigma_derivative_2(P, i, eta, *zeta) : std::nan("");
    return py::make_tuple(d1, d2);
}

py::tuple lambda_derivative(const Mat& X, int i, const Mat& eta, std::optional<Mat> zeta) {
    SymPoint P = resolve_sym(X);
    double d1 = lambda_derivative_1(P, i, eta);
    double d2 = zeta ? lambda_derivative_2(P, i, eta, *zeta) : std::nan("");
    return py::make_tuple(d1, d2);
}

py::dict decay(const Mat& X, const Mat& eta, std::optional<Mat> zeta, int r) {
    SetProjector set = bounded_rank_projector(r);
    DecayFit f = zeta ? decay_fit_parabolic(X, eta, *zeta, set) : decay_fit_linear(X, eta, set);
    return py::dict("slope"_a = f.slope, "r2"_a = f.r2, "classification"_a = to_string(f.classification),
                    "t"_a = f.t_grid, "residuals"_a = f.residuals);
}

py::dict versoc(int n, const std::vector<std::pair<int, int>>& edges, int K, std::uint64_t seed) {
    Graph G = Graph::make(n, edges);
    const int w = omega_bruteforce(G);
    VersocLambda L = versoc_lambda_numeric(G, K, seed);
    return py::dict("omega"_a = w, "lambda_formula"_a = versoc_lambda_formula(w, K),
                    "lambda_numeric"_a = L.lambda_enum, "clique"_a = w >= K);
}

py::dict two_two(const std::string& kind, const Mat& A, const Mat& B) {
    LiftedPoint Y = lifted_kind_from_string(kind) == LiftedPoint::Kind::lr ? LiftedPoint::lr(A, B)
                                                                          : LiftedPoint::desing(A, B);
    LQReport rep = two_two_check(Y, {Y.r(), std::min(Y.m(), Y.n())});
    py::dict d("s"_a = rep.s, "im_L_dim"_a = rep.im_L_dim, "tangent_dim"_a = rep.tangent_dim,
               "two_two"_a = rep.two_two);
    d["witness"] = rep.witness ? py::cast(*rep.witness) : py::none();
    return d;
}

py::dict graph_tangent(const Mat& X, const Mat& Y, int r, const Mat& eta, const Mat& xi, double tol) {
    GraphTangentCertificate c = graph_tangent_membership(make_graph_point(X, Y, r), eta, xi, tol);
    return py::dict("member"_a = c.member, "violations"_a = violations(c.violations));
}

py::dict graph_frechet(const Mat& X, const Mat& Y, int r, const Mat& upsilon, const Mat& omega, double tol) {
    FrechetCertificate c = frechet_normal_membership(make_graph_point(X, Y, r), {upsilon, omega}, tol);
    return py::dict("member"_a = c.member, "violations"_a = violations(c.violations));
}

py::dict graph_mordukhovich(const Mat& X, const Mat& Y, int r, const Mat& upsilon, const Mat& omega, double tol) {
    GraphPoint G = make_graph_point(X, Y, r);
    MordukhovichCertificate c = mordukhovich_verify(G, degenerate_stratification(G), {upsilon, omega}, tol);
    return py::dict("member"_a = c.member, "verdict"_a = to_string(c.verdict),
                    "violations"_a = violations(c.violations));
}

py::dict tensor_tangent(const std::vector<int>& dims, const Vec& X, const Vec& eta, const std::string& preset,
                        const std::vector<int>& ranks) {
    DimensionTree tree = preset == "tt" ? DimensionTree::tt(dims, ranks) : DimensionTree::tucker(dims, ranks);
    TensorCertificate c = tensor_tangent_membership({dims, X}, tree, {dims, eta});
    py::list nodes;
    for (const auto& n : c.nodes)
        nodes.append(py::dict("modes"_a = mode_label(n.modes), "member"_a = n.member, "violation"_a = n.violation));
    return py::dict("member"_a = c.member, "nodes"_a = nodes);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Tangent and normal cones of low-rank matrix sets";
    py::register_exception<std::invalid_argument>(m, "InputError", PyExc_ValueError);

    m.def("tangent_membership", &tangent, "X"_a, "eta"_a, "r"_a, "rank_tol"_a = 1e-8);
    m.def("second_order_membership", &second_order, "X"_a, "eta"_a, "zeta"_a, "r"_a, "rank_tol"_a = 1e-8);
    m.def(
        "project_tangent_cone",
        [](const Mat& X, const Mat& E, int r) { return project_tangent_cone(resolve_point(X), E, make_spec(X, r)); },
        "X"_a, "E"_a, "r"_a);
    m.def(
        "project_bounded_rank", [](const Mat& X, int r) { return project_bounded_rank(X, make_spec(X, r)); }, "X"_a,
        "r"_a);
    m.def("sigma_derivative", &sigma_derivative, "X"_a, "i"_a, "eta"_a, "zeta"_a = py::none(),
          "First and second directional derivatives of sigma_i (1-based); the second is NaN without zeta.");
    m.def("lambda_derivative", &lambda_derivative, "X"_a, "i"_a, "eta"_a, "zeta"_a = py::none());
    m.def("decay_fit", &decay, "X"_a, "eta"_a, "zeta"_a = py::none(), "r"_a = 1);
    m.def(
        "error_bound_audit",
        [](const Mat& X, int r) {
            ErrorBoundReport e = error_bound_audit(X, make_spec(X, r));
            return py::dict("dist"_a = e.dist, "bound"_a = e.bound, "holds"_a = e.holds);
        },
        "X"_a, "r"_a);
    m.def("versoc", &versoc, "n"_a, "edges"_a, "K"_a, "seed"_a = 3);
    m.def("two_two_check", &two_two, "kind"_a, "A"_a, "B"_a);
    m.def("graph_tangent_membership", &graph_tangent, "X"_a, "Y"_a, "r"_a, "eta"_a, "xi"_a, "tol"_a = 1e-9);
    m.def("frechet_normal_membership", &graph_frechet, "X"_a, "Y"_a, "r"_a, "upsilon"_a, "omega"_a, "tol"_a = 1e-9);
    m.def("mordukhovich_membership", &graph_mordukhovich, "X"_a, "Y"_a, "r"_a, "upsilon"_a, "omega"_a,
          "tol"_a = 1e-9);
    m.def(
        "hadamard_identity_check",
        [](const Vec& b, const Vec& q, const Mat& B) {
            HadamardCheck h = hadamard_identity_check(b, q, B);
            return py::make_tuple(h.Q, h.residual);
        },
        "b"_a, "q"_a, "B"_a);
    m.def("tensor_tangent_membership", &tensor_tangent, "dims"_a, "X"_a, "eta"_a, "preset"_a, "ranks"_a);
}
