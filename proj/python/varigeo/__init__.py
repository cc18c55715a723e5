"""Tangent cones, normal cones and stationarity checks for low-rank matrix sets."""

from ._core import (
    InputError,
    decay_fit,
    error_bound_audit,
    frechet_normal_membership,
    graph_tangent_membership,
    hadamard_identity_check,
    lambda_derivative,
    mordukhovich_membership,
    project_bounded_rank,
    project_tangent_cone,
    second_order_membership,
    sigma_derivative,
    tangent_membership,
    tensor_tangent_membership,
    two_two_check,
    versoc,
)

__all__ = [
    "InputError",
    "decay_fit",
    "error_bound_audit",
    "frechet_normal_membership",
    "graph_tangent_membership",
    "hadamard_identity_check",
    "lambda_derivative",
    "mordukhovich_membership",
    "project_bounded_rank",
    "project_tangent_cone",
    "second_order_membership",
    "sigma_derivative",
    "tangent_membership",
    "tensor_tangent_membership",
    "two_two_check",
    "versoc",
]
