"""Q-tensors, leading nematic directions, and aligned-equilibrium eigenvalues.

The Q-tensor of a set of orientations is the symmetric traceless second
moment <omega (x) omega> - Id/d.  Its leading unit eigenvector is the mean
nematic direction, defined up to sign; both signs describe the same line.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import roots_jacobi

from .constants import GAP_FLOOR
from .sphere import SphereQuadrature, assert_unit


class DegenerateLeadingEigenvalue(Exception):
    """Leading eigenvalue not simple within the requested gap floor."""


@dataclass(frozen=True)
class SpectralInfo:
    direction: np.ndarray
    leading_eigenvalue: float
    gap: float


def qtensor_from_orientations(
    orientations: np.ndarray, weights: np.ndarray | None = None
) -> np.ndarray:
    """Weighted average of omega (x) omega - Id/d over the rows of orientations."""
    omega = np.atleast_2d(np.asarray(orientations, dtype=float))
    if omega.shape[0] == 0:
        raise ValueError("empty orientation list")
    n, d = omega.shape
    if weights is None:
        w = np.full(n, 1.0 / n)
    else:
        w = np.asarray(weights, dtype=float)
        total = w.sum()
        if total <= 0:
            raise ValueError("weights must sum to a positive number")
        w = w / total
    second = np.einsum("n,ni,nj->ij", w, omega, omega)
    second = 0.5 * (second + second.T)  # einsum is not bitwise symmetric
    return second - np.eye(d) / d


def qtensor_from_density(f_values: np.ndarray, quad: SphereQuadrature) -> np.ndarray:
    """Q of an angular density sampled on quadrature nodes (f >= 0, any mass)."""
    f = np.asarray(f_values, dtype=float)
    w = quad.weights * f
    if w.sum() <= 0:
        raise ValueError("density integrates to zero on the quadrature")
    return qtensor_from_orientations(quad.nodes, w)


def jacobi_eigh(A: np.ndarray, sweeps: int = 30, tol: float = 1e-14) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi diagonalization of a small symmetric matrix.

    Deterministic sweep order (row-major over the strict upper triangle) so
    results are bit-reproducible across runs.  Returns (eigenvalues ascending,
    eigenvector columns).
    """
    A = np.array(A, dtype=float)
    n = A.shape[0]
    V = np.eye(n)
    for _ in range(sweeps):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                off = max(off, abs(apq))
                if abs(apq) <= tol * (abs(A[p, p]) + abs(A[q, q]) + tol):
                    continue
                # classical 2x2 rotation zeroing A[p,q]
                theta = 0.5 * (A[q, q] - A[p, p]) / apq
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rot = np.eye(n)
                rot[p, p] = rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                A = rot.T @ A @ rot
                V = V @ rot
        if off < tol:
            break
    lam = np.diag(A).copy()
    order = np.argsort(lam, kind="stable")
    return lam[order], V[:, order]


def leading_direction(
    Q: np.ndarray,
    prev: np.ndarray | None = None,
    gap_floor: float = GAP_FLOOR,
) -> SpectralInfo:
    """Leading unit eigenvector of Q with a continuous sign convention.

    Sign: align with prev when given, else make the first nonzero component
    positive.  Raises DegenerateLeadingEigenvalue when the spectral gap falls
    below gap_floor; callers choose their own fallback (the particle stepper
    drops the alignment drift for that particle and step).
    """
    lam, V = jacobi_eigh(np.asarray(Q, dtype=float))
    gap = float(lam[-1] - lam[-2])
    if gap < gap_floor:
        raise DegenerateLeadingEigenvalue(
            f"leading eigenvalue gap {gap:.3e} below floor {gap_floor:.3e}"
        )
    v = V[:, -1]
    if prev is not None:
        if float(np.asarray(prev) @ v) < 0.0:
            v = -v
    else:
        nz = np.nonzero(np.abs(v) > 1e-14)[0]
        if nz.size and v[nz[0]] < 0.0:
            v = -v
    v = v / np.linalg.norm(v)
    return SpectralInfo(direction=v, leading_eigenvalue=float(lam[-1]), gap=gap)


def equilibrium_eigenvalues(kappa: float, d: int) -> tuple[float, float]:
    """Eigenvalues of the Q-tensor of the aligned equilibrium density.

    lambda_par = int M_u (omega.u)^2 d(omega) - 1/d along u, computed by a
    Gauss rule exact for the (1-r^2)^{(d-3)/2} measure; the transverse value
    is -lambda_par/(d-1) by tracelessness, returned exactly in that form.
    """
    if kappa < 0:
        raise ValueError("kappa >= 0 required")
    r, w = roots_jacobi(64, (d - 3) / 2.0, (d - 3) / 2.0)
    mw = w * np.exp(0.5 * kappa * r**2)
    second = float((mw @ r**2) / mw.sum())
    lam_par = second - 1.0 / d
    return lam_par, -lam_par / (d - 1)
