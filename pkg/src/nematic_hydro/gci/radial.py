"""The six radial profile problems h, a, b, c, e, k on r in (-1, 1).

Each profile solves a degenerate Sturm-Liouville problem in self-adjoint form
with weights E(r) (1-r^2)^mu, E(r) = exp(kappa r^2 / 2):

  h, a, b:  -(1-r^2)^{(d-1)/2} E (kappa r^2 + d-1) phi
               + d/dr[(1-r^2)^{(d+1)/2} E phi']  =  f (1-r^2)^{(d-1)/2} E,
            f = r, 1, r^2 respectively;
  e:        zero-order factor 2(kappa r^2 + d), exponents (d+1)/2 and (d+3)/2,
            right-hand side r (1-r^2)^{(d+1)/2} E;
  c, k:     d/dr[(1-r^2)^{(d-1)/2} E phi']  =  g (1-r^2)^{(d-3)/2} E,
            g = r and -2 e(r), with the zero-mean normalization
            int_{-1}^{1} phi dr = 0.

Discretization: continuous piecewise-quadratic Lagrange elements on the graded
grid r_j = cos(theta_j), theta uniform, assembled entirely in theta where every
integrand is smooth for all d >= 2.  The degenerate leading weight vanishes at
r = +-1, so no boundary conditions are imposed (natural).  The zero-mean pair
is solved with one pinned node and the discrete mean subtracted afterwards.

Strong-form residuals are measured at element vertices only: vertex values
superconverge, while interior nodes carry an intra-element error component
that would dominate any second-derivative reconstruction.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import CubicSpline
from scipy.linalg import solveh_banded

DIRICHLET_KINDS = ("h", "a", "b", "e")
NEUMANN_KINDS = ("c", "k")
ALL_KINDS = DIRICHLET_KINDS + NEUMANN_KINDS

ELEMENT_DEGREE = 2
GL_PER_ELEMENT = 8

# residual oracle: sliding polynomial fits over vertex windows
_FIT_HALF_WIDTH = 4
_FIT_DEGREE = 6
INTERIOR_MASK = 0.95


@dataclass
class RadialSolution:
    """Profile values on the graded vertex grid, with projected derivatives.

    grid is ascending in r; values and derivative_values are nodal arrays on
    it.  parity is 'odd' or 'even'; space_tag names the weighted space the
    profile lives in by its two exponents (mu for the value weight, nu for the
    derivative weight), 'zero-mean' marking the gauge-fixed pair.
    """

    kind: str
    kappa: float
    d: int
    n: int
    grid: np.ndarray
    values: np.ndarray
    derivative_values: np.ndarray
    parity: str
    space_tag: str
    _value_spline: CubicSpline | None = field(default=None, repr=False)
    _deriv_spline: CubicSpline | None = field(default=None, repr=False)

    def __call__(self, r: np.ndarray) -> np.ndarray:
        if self._value_spline is None:
            self._value_spline = CubicSpline(self.grid, self.values)
        return self._value_spline(r)

    def derivative(self, r: np.ndarray) -> np.ndarray:
        if self._deriv_spline is None:
            self._deriv_spline = CubicSpline(self.grid, self.derivative_values)
        return self._deriv_spline(r)

    def space_norms(self) -> tuple[float, float]:
        """Discrete weighted integrals (value and derivative) of the space tag."""
        mu, nu = _SPACE_EXPONENTS[self.kind]
        mu = mu(self.d) if callable(mu) else mu
        nu = nu(self.d)
        r = self.grid
        w = np.gradient(r)
        E = np.exp(0.5 * self.kappa * r**2)
        s2 = 1.0 - r**2
        val = float(w @ (s2**mu * E * self.values**2))
        der = float(w @ (s2**nu * E * self.derivative_values**2))
        return val, der


_SPACE_EXPONENTS = {
    "h": (lambda d: (d - 1) / 2, lambda d: (d + 1) / 2),
    "a": (lambda d: (d - 1) / 2, lambda d: (d + 1) / 2),
    "b": (lambda d: (d - 1) / 2, lambda d: (d + 1) / 2),
    "e": (lambda d: (d + 1) / 2, lambda d: (d + 3) / 2),
    "c": (0.0, lambda d: (d - 1) / 2),
    "k": (0.0, lambda d: (d - 1) / 2),
}

_PARITY = {"h": "odd", "a": "even", "b": "even", "c": "odd", "e": "odd", "k": "odd"}


def _space_tag(kind: str, d: int) -> str:
    if kind in ("c", "k"):
        return f"zero-mean H(0, {(d - 1) / 2})"
    mu, nu = _SPACE_EXPONENTS[kind]
    return f"H({mu(d)}, {nu(d)})"


def _lagrange_basis(p: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Shape function values/derivatives at the per-element Gauss points."""
    xg, wg = leggauss(GL_PER_ELEMENT)
    xi = np.linspace(-1.0, 1.0, p + 1)
    Vinv = np.linalg.inv(np.vander(xi, p + 1, increasing=True))
    val = np.vander(xg, p + 1, increasing=True)
    der = np.zeros_like(val)
    for m in range(1, p + 1):
        der[:, m] = m * xg ** (m - 1)
    return xg, wg, val @ Vinv, der @ Vinv


def _weights_for(kind: str, d: int) -> tuple[float, float | None, float]:
    """(stiffness, mass, rhs) measure exponents mu in (1-r^2)^mu."""
    if kind in ("h", "a", "b"):
        return (d + 1) / 2, (d - 1) / 2, (d - 1) / 2
    if kind == "e":
        return (d + 3) / 2, (d + 1) / 2, (d + 1) / 2
    return (d - 1) / 2, None, (d - 3) / 2


def _zero_order(kind: str, kappa: float, d: int, rq: np.ndarray) -> np.ndarray | None:
    if kind in ("h", "a", "b"):
        return kappa * rq**2 + (d - 1)
    if kind == "e":
        return 2.0 * (kappa * rq**2 + d)
    return None


def _rhs(kind: str, rq: np.ndarray, e_sol: RadialSolution | None) -> np.ndarray:
    if kind in ("h", "c", "e"):
        return rq
    if kind == "a":
        return np.ones_like(rq)
    if kind == "b":
        return rq**2
    if e_sol is None:
        raise ValueError("kind 'k' requires the matching e profile")
    return -2.0 * e_sol(rq)


def _assemble_and_solve(
    kind: str, kappa: float, d: int, n: int, e_sol: RadialSolution | None
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Returns (theta nodes, r nodes, nodal solution) on the full element grid."""
    p = ELEMENT_DEGREE
    theta = np.linspace(np.pi, 0.0, p * n + 1)  # r = cos(theta) ascending
    n_nodes = p * n + 1
    xg, wg, N, dN = _lagrange_basis(p)

    th_l = theta[0:-1:p]
    th_r = theta[p::p]
    half = 0.5 * (th_r - th_l)  # negative: theta decreases
    mid = 0.5 * (th_r + th_l)
    tq = mid[:, None] + half[:, None] * xg[None, :]
    wq = np.abs(half)[:, None] * wg[None, :]
    rq = np.cos(tq)
    sq = np.sin(tq)
    E = np.exp(0.5 * kappa * rq**2)

    p_stiff, p_mass, p_rhs = _weights_for(kind, d)
    # chain rule u'(r) = -u_theta/sin(theta) and dr = sin(theta) dtheta put one
    # factor 1/sin on the stiffness weight and one sin on mass and load
    w_stiff = E * sq ** (2 * p_stiff - 1)
    z0 = _zero_order(kind, kappa, d, rq)
    f_load = _rhs(kind, rq, e_sol) * E * sq ** (2 * p_rhs + 1)

    inv_half = 1.0 / half
    Kloc = np.einsum("eq,qi,qj->eij", wq * w_stiff, dN, dN) * (
        inv_half[:, None, None] ** 2
    )
    Aloc = Kloc
    if z0 is not None:
        Aloc = Aloc + np.einsum("eq,qi,qj->eij", wq * E * sq ** (2 * p_mass + 1) * z0, N, N)
    Floc = -np.einsum("eq,qi->ei", wq * f_load, N)

    conn = np.arange(n)[:, None] * p + np.arange(p + 1)[None, :]
    bands = np.zeros((p + 1, n_nodes))  # bands[k] = k-th superdiagonal entries
    F = np.zeros(n_nodes)
    for i in range(p + 1):
        for j in range(i, p + 1):
            np.add.at(bands[j - i], conn[:, i], Aloc[:, i, j])
    np.add.at(F, conn.reshape(-1), Floc.reshape(-1))

    if kind in NEUMANN_KINDS:
        # constants span the kernel: pin the center node, fix the gauge later
        pin = n_nodes // 2
        for k in range(1, p + 1):
            if pin - k >= 0:
                bands[k][pin - k] = 0.0
            if pin + k < n_nodes:
                bands[k][pin] = 0.0
        bands[0][pin] = 1.0
        F[pin] = 0.0

    ab = np.zeros((p + 1, n_nodes))
    for k in range(p + 1):
        ab[p - k, k:] = bands[k][: n_nodes - k]
    u = solveh_banded(ab, F)

    if kind in NEUMANN_KINDS:
        # subtract the discrete mean wrt dr (exact nodal quadrature weights)
        w_int = np.zeros(n_nodes)
        contrib = np.einsum("eq,qi->ei", wq * sq, N)
        np.add.at(w_int, conn.reshape(-1), contrib.reshape(-1))
        u = u - (w_int @ u) / w_int.sum()
    return theta, np.cos(theta), u


def _projected_derivative(theta: np.ndarray, u: np.ndarray) -> np.ndarray:
    """L2(dr) projection of the elementwise derivative onto the nodal space."""
    p = ELEMENT_DEGREE
    n = (len(theta) - 1) // p
    n_nodes = p * n + 1
    xg, wg, N, dN = _lagrange_basis(p)
    th_l = theta[0:-1:p]
    th_r = theta[p::p]
    half = 0.5 * (th_r - th_l)
    mid = 0.5 * (th_r + th_l)
    tq = mid[:, None] + half[:, None] * xg[None, :]
    wq = np.abs(half)[:, None] * wg[None, :]
    sq = np.sin(tq)
    conn = np.arange(n)[:, None] * p + np.arange(p + 1)[None, :]
    Mloc = np.einsum("eq,qi,qj->eij", wq * sq, N, N)
    u_theta = np.einsum("ej,qj->eq", u[conn], dN) / half[:, None]
    Gloc = -np.einsum("eq,qi->ei", wq * u_theta, N)  # int u'(r) N_i dr
    bands = np.zeros((p + 1, n_nodes))
    G = np.zeros(n_nodes)
    for i in range(p + 1):
        for j in range(i, p + 1):
            np.add.at(bands[j - i], conn[:, i], Mloc[:, i, j])
    np.add.at(G, conn.reshape(-1), Gloc.reshape(-1))
    ab = np.zeros((p + 1, n_nodes))
    for k in range(p + 1):
        ab[p - k, k:] = bands[k][: n_nodes - k]
    return solveh_banded(ab, G)


def _make_solution(kind: str, kappa: float, d: int, n: int, e_sol: RadialSolution | None) -> RadialSolution:
    theta, r, u = _assemble_and_solve(kind, kappa, d, n, e_sol)
    du = _projected_derivative(theta, u)
    p = ELEMENT_DEGREE
    return RadialSolution(
        kind=kind,
        kappa=float(kappa),
        d=int(d),
        n=int(n),
        grid=r[::p],
        values=u[::p],
        derivative_values=du[::p],
        parity=_PARITY[kind],
        space_tag=_space_tag(kind, d),
    )


def _validate_problem(kind: str, allowed: tuple[str, ...], kappa: float, d: int, n: int) -> None:
    if kind not in allowed:
        raise ValueError(f"kind {kind!r} not one of {allowed}")
    if kappa < 0:
        raise ValueError("kappa >= 0 required")
    if d < 2:
        raise ValueError("d >= 2 required")
    if n < 64:
        raise ValueError("n >= 64 grid points required")


def solve_dirichlet_type_bvp(kind: str, kappa: float, d: int, n: int) -> RadialSolution:
    """Solve one of the coercive profiles h, a, b, e on n elements."""
    _validate_problem(kind, DIRICHLET_KINDS, kappa, d, n)
    return _make_solution(kind, kappa, d, n, None)


def solve_neumann_type_bvp(
    kind: str, kappa: float, d: int, n: int, e_sol: RadialSolution | None = None
) -> RadialSolution:
    """Solve c or k (pure-divergence operator, zero-mean gauge).

    kind 'k' consumes the matching e profile for its right-hand side.
    """
    _validate_problem(kind, NEUMANN_KINDS, kappa, d, n)
    if kind == "k":
        if e_sol is None or e_sol.kind != "e":
            raise ValueError("kind 'k' requires e_sol of kind 'e'")
        if (e_sol.kappa, e_sol.d) != (float(kappa), int(d)):
            raise ValueError("e_sol was solved at different (kappa, d)")
    return _make_solution(kind, kappa, d, n, e_sol if kind == "k" else None)


def solve_bundle(kappa: float, d: int, n: int) -> dict[str, RadialSolution]:
    """All six profiles at shared (kappa, d, n)."""
    out = {k: solve_dirichlet_type_bvp(k, kappa, d, n) for k in DIRICHLET_KINDS}
    out["c"] = solve_neumann_type_bvp("c", kappa, d, n)
    out["k"] = solve_neumann_type_bvp("k", kappa, d, n, e_sol=out["e"])
    return out


def _vertex_fit_derivatives(r: np.ndarray, u: np.ndarray) -> tuple[np.ndarray, ...]:
    """Sliding degree-6 fits in theta over vertex windows; r-derivatives by chain rule."""
    theta = np.arccos(np.clip(r, -1.0, 1.0))
    dt = theta[1] - theta[0]
    offsets = np.arange(-_FIT_HALF_WIDTH, _FIT_HALF_WIDTH + 1) * dt
    pinv = np.linalg.pinv(np.vander(offsets, _FIT_DEGREE + 1, increasing=True))
    idx = np.arange(_FIT_HALF_WIDTH, len(r) - _FIT_HALF_WIDTH)
    windows = u[idx[:, None] + np.arange(-_FIT_HALF_WIDTH, _FIT_HALF_WIDTH + 1)]
    coef = windows @ pinv.T
    tt = theta[idx]
    st = np.sin(tt)
    v = coef[:, 0]
    v_t = coef[:, 1]
    v_tt = 2.0 * coef[:, 2]
    v_r = -v_t / st
    v_rr = v_tt / st**2 - v_t * np.cos(tt) / st**3
    return r[idx], v, v_r, v_rr


def strong_defect(
    sol: RadialSolution,
    e_sol: RadialSolution | None = None,
    interior: float = INTERIOR_MASK,
) -> tuple[np.ndarray, np.ndarray]:
    """Pointwise strong-form defect L(phi) - f over interior vertices.

    Returns (r, defect) restricted to |r| <= interior, where vertex values
    superconverge and the sliding-fit derivatives are reliable.
    """
    rr, v, v1, v2 = _vertex_fit_derivatives(sol.grid, sol.values)
    kappa, d = sol.kappa, sol.d
    mask = np.abs(rr) <= interior
    rr, v, v1, v2 = rr[mask], v[mask], v1[mask], v2[mask]
    s2 = 1.0 - rr**2
    if sol.kind in ("h", "a", "b"):
        L = s2 * v2 + (kappa * s2 - (d + 1)) * rr * v1 - (kappa * rr**2 + (d - 1)) * v
        f = {"h": rr, "a": np.ones_like(rr), "b": rr**2}[sol.kind]
    elif sol.kind == "e":
        L = s2 * v2 + (kappa * s2 - (d + 3)) * rr * v1 - 2.0 * (kappa * rr**2 + d) * v
        f = rr
    else:
        L = s2 * v2 + (kappa * s2 - (d - 1)) * rr * v1
        if sol.kind == "c":
            f = rr
        else:
            if e_sol is None:
                raise ValueError("residual of kind 'k' requires e_sol")
            f = -2.0 * e_sol(rr)
    return rr, L - f


def strong_residual(
    sol: RadialSolution,
    e_sol: RadialSolution | None = None,
    interior: float = INTERIOR_MASK,
) -> float:
    """Sup-norm defect of the strong ODE over interior vertices |r| <= interior."""
    return float(np.max(np.abs(strong_defect(sol, e_sol, interior)[1])))
