import numpy as np
import pytest

import varigeo as vg


def low_rank(m, n, s, seed):
    rng = np.random.default_rng(seed)
    return rng.standard_normal((m, s)) @ rng.standard_normal((s, n))


def test_tangent_membership_follows_normal_block_rank():
    X = low_rank(5, 4, 1, 0)
    U, _, Vt = np.linalg.svd(X)
    Up, Vp = U[:, 1:], Vt[1:].T
    rng = np.random.default_rng(1)
    inside = Up @ np.outer(rng.standard_normal(4), rng.standard_normal(3)) @ Vp.T
    outside = Up @ rng.standard_normal((4, 3)) @ Vp.T
    assert vg.tangent_membership(X, inside, 2)["member"]
    res = vg.tangent_membership(X, outside, 2)
    assert not res["member"] and res["violation"] > res["threshold"]


def test_projection_lands_in_cone():
    X = low_rank(5, 4, 1, 2)
    E = np.random.default_rng(3).standard_normal((5, 4))
    P = vg.project_tangent_cone(X, E, 2)
    assert vg.tangent_membership(X, P, 2)["member"]
    assert np.linalg.matrix_rank(vg.project_bounded_rank(E, 2)) == 2


def test_sigma_derivative_matches_differences():
    X = np.diag([3.0, 1.0, 1.0, 0.0])
    eta = np.random.default_rng(4).standard_normal((4, 4))
    d1, d2 = vg.sigma_derivative(X, 2, eta)
    assert np.isnan(d2)
    h = 1e-6
    sv = lambda M: np.linalg.svd(M, compute_uv=False)[1]
    assert d1 == pytest.approx((sv(X + h * eta) - sv(X)) / h, abs=1e-4)


def test_lambda_derivative_first_order():
    X = np.diag([2.0, 0.5, 0.5])
    E = np.random.default_rng(5).standard_normal((3, 3))
    E = E + E.T
    d1, _ = vg.lambda_derivative(X, 1, E)
    assert d1 == pytest.approx(E[0, 0])


def test_decay_fit_separates_member_from_nonmember():
    X = low_rank(4, 4, 1, 6)
    U, _, Vt = np.linalg.svd(X)
    member = U[:, :1] @ np.random.default_rng(7).standard_normal((1, 4))
    fit = vg.decay_fit(X, member, r=1)
    assert fit["slope"] > 1.5
    away = U[:, 1:2] @ Vt[1:2]
    assert vg.decay_fit(X, away, r=1)["slope"] < 1.5


def test_error_bound():
    rep = vg.error_bound_audit(np.random.default_rng(8).standard_normal((5, 5)), 2)
    assert rep["holds"] and rep["dist"] <= rep["bound"] + 1e-12


def test_versoc_triangle_and_pentagon():
    tri = vg.versoc(3, [(0, 1), (1, 2), (0, 2)], 3)
    assert tri["omega"] == 3 and tri["clique"]
    assert tri["lambda_formula"] == pytest.approx(-1 / 6)
    assert tri["lambda_numeric"] == pytest.approx(-1 / 6, abs=1e-9)
    c5 = vg.versoc(5, [(i, (i + 1) % 5) for i in range(5)], 3)
    assert c5["omega"] == 2 and not c5["clique"]


def test_two_two_lr_rank_deficient_has_witness():
    L = np.array([[1.0, 0.0], [0.0, 0.0], [0.0, 0.0]])
    R = np.array([[1.0, 0.0], [0.0, 0.0], [0.0, 0.0]])
    rep = vg.two_two_check("lr", L, R)
    assert not rep["two_two"] and rep["witness"] is not None
    full = vg.two_two_check("lr", np.eye(3, 2), np.eye(3, 2))
    assert full["two_two"]


def test_graph_cones_at_origin_pair():
    X = np.diag([1.0, 0.0, 0.0])
    Y = np.diag([0.0, 0.0, 2.0])
    eta = np.zeros((3, 3))
    eta[0, 0] = 1.0
    assert vg.graph_tangent_membership(X, Y, 1, eta, np.zeros((3, 3)))["member"]
    up = np.zeros((3, 3))
    om = np.zeros((3, 3))
    om[0, 0] = 1.0
    assert vg.frechet_normal_membership(X, Y, 1, up, om)["member"]
    mo = vg.mordukhovich_membership(X, Y, 1, up, om)
    assert mo["verdict"] in ("member_witnessed", "undetermined", "rejected")


def test_hadamard_identity():
    rng = np.random.default_rng(9)
    b, q = np.sort(rng.uniform(1, 2, 3))[::-1], np.sort(rng.uniform(1, 2, 4))[::-1]
    _, residual = vg.hadamard_identity_check(b, q, rng.standard_normal((3, 4)))
    assert residual < 1e-12


def test_tensor_tangent_zero_direction():
    dims = [2, 3, 2]
    X = np.zeros(12)
    X[0] = 1.0
    res = vg.tensor_tangent_membership(dims, X, np.zeros(12), "tucker", [1, 1, 1])
    assert res["member"] and len(res["nodes"]) >= 3


def test_bad_input_raises():
    with pytest.raises(ValueError):
        vg.tangent_membership(np.eye(3), np.eye(2), 1)
