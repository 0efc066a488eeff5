"""Unit-sphere geometry and normalized spherical quadrature.

The sphere S^{d-1} carries the normalized measure (total mass 1).  Writing
omega = r*u + sqrt(1-r^2)*z with r = omega.u and z on the equatorial sphere,
the measure factorizes as

    d(omega) = (1-r^2)^{(d-3)/2} dr / W_{d-2}  x  dz,

where dz is the normalized measure on S^{d-2} and W_m = int_0^pi sin^m t dt,
so W_0 = pi and W_1 = 2.  For d = 2 the equatorial sphere S^0 is two points,
each carrying half the counting measure.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import gamma, pi, sqrt
from typing import Callable

import numpy as np
from scipy.special import roots_jacobi

from .constants import QUAD_TOL, UNIT_TOL


def angle_weight_norm(m: int) -> float:
    """W_m = int_0^pi sin^m(theta) dtheta."""
    return sqrt(pi) * gamma((m + 1) / 2) / gamma(m / 2 + 1)


def assert_unit(v: np.ndarray, tol: float = UNIT_TOL) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    norm = np.linalg.norm(v)
    if abs(norm - 1.0) > tol:
        raise ValueError(f"direction norm {norm!r} deviates from 1 beyond {tol}")
    return v


def project_tangent(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Component of v orthogonal to the unit vector u: (Id - u(x)u) v."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    return v - (u @ v) * u


def polar_decompose(omega: np.ndarray, u: np.ndarray) -> tuple[float, np.ndarray]:
    """Split omega = (omega.u) u + omega_perp; returns (cos_theta, omega_perp)."""
    omega = np.asarray(omega, dtype=float)
    u = np.asarray(u, dtype=float)
    if omega.shape != u.shape:
        raise ValueError(f"dimension mismatch: {omega.shape} vs {u.shape}")
    c = float(np.clip(omega @ u, -1.0, 1.0))
    return c, omega - c * u


def complete_basis(axis: np.ndarray) -> np.ndarray:
    """Orthonormal basis of axis-perp as columns of a (d, d-1) matrix.

    Householder reflection mapping e_1 to axis; deterministic for a given axis.
    """
    axis = np.asarray(axis, dtype=float)
    d = axis.size
    e1 = np.zeros(d)
    e1[0] = 1.0
    w = axis - e1 if axis[0] >= 0 else axis + e1
    nw = np.linalg.norm(w)
    if nw < 1e-14:
        H = np.eye(d)
    else:
        w = w / nw
        H = np.eye(d) - 2.0 * np.outer(w, w)
    # columns 2..d of H are orthonormal and orthogonal to H e_1 = +-axis
    return H[:, 1:]


@dataclass(frozen=True)
class SphereQuadrature:
    """Product quadrature on S^{d-1} around an axis, normalized to total mass 1.

    nodes: (N, d) unit vectors; weights sum to 1.  r_nodes/r_weights are the
    underlying radial (r = omega.axis) rule with weights summing to 1, kept so
    axisymmetric integrands can reuse the 1D rule.
    """

    d: int
    axis: np.ndarray
    nodes: np.ndarray
    weights: np.ndarray
    r_nodes: np.ndarray
    r_weights: np.ndarray
    declared_degree: int

    def integrate(self, values: np.ndarray) -> float | np.ndarray:
        """Sum values against the weights (values indexed like nodes)."""
        return np.tensordot(self.weights, np.asarray(values), axes=(0, 0))


def _azimuthal_nodes(d: int, n_azimuth: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes/weights on S^{d-2} embedded in R^{d-1}, normalized measure."""
    if d == 2:
        # S^0: two points, half the counting measure each
        return np.array([[1.0], [-1.0]]), np.array([0.5, 0.5])
    if d == 3:
        phi = 2.0 * pi * np.arange(n_azimuth) / n_azimuth
        z = np.stack([np.cos(phi), np.sin(phi)], axis=1)
        return z, np.full(n_azimuth, 1.0 / n_azimuth)
    sub_axis = np.zeros(d - 1)
    sub_axis[0] = 1.0
    sub = build_quadrature(d - 1, sub_axis, n_azimuth, n_azimuth)
    return sub.nodes, sub.weights


def build_quadrature(
    d: int, axis: np.ndarray, n_theta: int, n_azimuth: int
) -> SphereQuadrature:
    """Gauss rule in r = omega.axis times a uniform equatorial rule.

    The radial rule is Gaussian for the weight (1-r^2)^{(d-3)/2}, so spherical
    polynomials up to the declared degree integrate exactly; for d > 3 the
    equatorial factor recurses.
    """
    if d < 2:
        raise ValueError("sphere dimension requires d >= 2")
    if n_theta < 2:
        raise ValueError("n_theta >= 2 required")
    axis = assert_unit(axis)
    alpha = (d - 3) / 2.0
    r, wr = roots_jacobi(n_theta, alpha, alpha)
    wr = wr / wr.sum()
    z, wz = _azimuthal_nodes(d, n_azimuth)
    B = complete_basis(axis)  # (d, d-1)
    perp = z @ B.T  # (nz, d)
    s = np.sqrt(np.clip(1.0 - r**2, 0.0, None))
    nodes = r[:, None, None] * axis[None, None, :] + s[:, None, None] * perp[None, :, :]
    weights = (wr[:, None] * wz[None, :]).reshape(-1)
    nodes = nodes.reshape(-1, d)
    deg_radial = 2 * n_theta - 1
    deg_azimuth = 10**9 if d == 2 else n_azimuth - 1
    return SphereQuadrature(
        d=d,
        axis=axis,
        nodes=nodes,
        weights=weights / weights.sum(),
        r_nodes=r,
        r_weights=wr,
        declared_degree=min(deg_radial, deg_azimuth),
    )


def sigma_tensor(u: np.ndarray) -> np.ndarray:
    """Fully symmetric fourth-order tensor 3 Sym(P (x) P) for P = Id - u(x)u.

    Components P_ij P_kl + P_ik P_jl + P_il P_jk; contracting two index pairs
    against gradients of u produces the transverse-isotropic combinations used
    by the macro system.
    """
    u = assert_unit(u)
    P = np.eye(u.size) - np.outer(u, u)
    return (
        np.einsum("ij,kl->ijkl", P, P)
        + np.einsum("ik,jl->ijkl", P, P)
        + np.einsum("il,jk->ijkl", P, P)
    )


def is_sym_tensor4(T: np.ndarray, tol: float = QUAD_TOL) -> bool:
    """Invariance under all 24 permutations of the four indices."""
    for perm in ((0, 1, 3, 2), (0, 2, 1, 3), (1, 0, 2, 3), (3, 1, 2, 0)):
        if np.max(np.abs(T - np.transpose(T, perm))) > tol:
            return False
    return True


def angular_moment(
    a: Callable[[np.ndarray], np.ndarray],
    u: np.ndarray,
    order: int,
    quad: SphereQuadrature,
) -> np.ndarray:
    """Moments int a(omega.u) omega_perp^{(x)order} d(omega) in closed tensor form.

    Odd orders vanish by the omega_perp -> -omega_perp symmetry and return the
    zero tensor.  Order 2 equals [int a(r)(1-r^2)/(d-1)] P_{u-perp}; order 4
    equals [int a(r)(1-r^2)^2/(d^2-1)] Sigma(u).  The scalar prefactors are
    evaluated with the quadrature's radial rule.
    """
    u = assert_unit(u)
    d = u.size
    if order % 2 == 1:
        return np.zeros((d,) * order)
    r = quad.r_nodes
    ar = np.asarray(a(r), dtype=float)
    P = np.eye(d) - np.outer(u, u)
    if order == 2:
        pref = float(quad.r_weights @ (ar * (1.0 - r**2))) / (d - 1)
        return pref * P
    if order == 4:
        pref = float(quad.r_weights @ (ar * (1.0 - r**2) ** 2)) / (d**2 - 1)
        return pref * sigma_tensor(u)
    raise ValueError(f"unsupported moment order {order}")
