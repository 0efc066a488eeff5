"""Particle simulation of nematically aligning self-propelled swimmers.

Each particle carries a position in a periodic box and a unit orientation.
Positions drift along the orientation at unit speed; orientations relax
toward the local mean nematic direction obar at rate nu, scaled by the
cosine omega.obar, plus spherical Brownian noise of intensity sqrt(2 D).
The cosine factor makes the drift even in obar, so only the line spanned
by the local direction matters, never its sign.

The orientation noise is interpreted in the Stratonovich sense and
integrated with a Heun scheme: both stages project the drift and the same
noise increment onto the tangent space of the stage orientation, and the
result is renormalized to the unit sphere.

Randomness is counter-based.  Step t of a run draws its (N, d) standard
normal table from a fresh Philox-4x64 bit generator keyed (seed, t); row i
of the table belongs to particle i.  Each draw is a pure function of
(seed, t, N, d), so runs are bit-reproducible and restartable and the
update never depends on the order particles are visited in.  The initial
state uses the reserved stream index 2**64 - 1.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .constants import GAP_FLOOR
from .qtensor import (
    DegenerateLeadingEigenvalue,
    leading_direction,
    qtensor_from_orientations,
)

KERNELS = ("indicator", "smooth-bump", "global")

# Orientations must stay unit vectors to this tolerance after each step.
ORIENT_TOL = 1e-10

_INIT_STREAM = 2**64 - 1


@dataclass(frozen=True)
class IbmConfig:
    """Particle model parameters.

    kernel selects the interaction weight profile: "indicator" weighs every
    neighbor within distance R equally, "smooth-bump" weighs by
    exp(-1 / (1 - (dist/R)^2)) inside radius R, and "global" averages over
    the whole box, ignoring R.  Weights are normalized when the local
    Q-tensor is formed, so only their relative profile matters.  nu = 0
    disables alignment and leaves pure angular diffusion.
    """

    N: int
    d: int
    nu: float
    D: float
    R: float
    kernel: str = "indicator"
    box_length: float = 1.0
    dt: float = 1e-3
    seed: int = 0

    def __post_init__(self) -> None:
        if int(self.N) != self.N or self.N < 1:
            raise ValueError("N must be a positive integer")
        if int(self.d) != self.d or self.d < 2:
            raise ValueError("d must be an integer >= 2")
        if not (self.nu >= 0.0):
            raise ValueError("nu >= 0 required")
        if not (self.D >= 0.0):
            raise ValueError("D >= 0 required")
        if not (self.R > 0.0):
            raise ValueError("R > 0 required")
        if self.kernel not in KERNELS:
            raise ValueError(f"kernel must be one of {KERNELS}, got {self.kernel!r}")
        if not (self.box_length > 0.0):
            raise ValueError("box_length > 0 required")
        if not (self.dt > 0.0):
            raise ValueError("dt > 0 required")
        if int(self.seed) != self.seed or not (0 <= self.seed < 2**64):
            raise ValueError("seed must be an integer representable in 64 bits")
        # Alignment must stay a small rotation per step.
        if self.dt * self.nu > 0.1:
            raise ValueError(f"dt * nu = {self.dt * self.nu:.3g} exceeds 0.1")
        # Minimum-image neighborhoods are unambiguous only below half the box.
        if self.R >= self.box_length / 2.0:
            raise ValueError("R must be smaller than half the box length")


@dataclass(frozen=True)
class ParticleState:
    """Positions in [0, L)^d, unit orientations, and the current time."""

    positions: np.ndarray
    orientations: np.ndarray
    time: float = 0.0

    def __post_init__(self) -> None:
        pos = np.asarray(self.positions, dtype=float)
        omega = np.asarray(self.orientations, dtype=float)
        if pos.ndim != 2 or pos.shape[1] < 2:
            raise ValueError("positions must have shape (N, d) with d >= 2")
        if omega.shape != pos.shape:
            raise ValueError("orientations must match the shape of positions")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "orientations", omega)
        object.__setattr__(self, "time", float(self.time))

    @property
    def n_particles(self) -> int:
        return self.positions.shape[0]

    def validate(self, box_length: float) -> None:
        """Check the wrap and unit-norm invariants, raising on violation."""
        norms = np.linalg.norm(self.orientations, axis=1)
        worst = float(np.abs(norms - 1.0).max())
        if worst > ORIENT_TOL:
            raise ValueError(f"orientation norms deviate from 1 by {worst:.3e}")
        if self.positions.min() < 0.0 or self.positions.max() >= box_length:
            raise ValueError("positions must lie in [0, box_length)")


@dataclass(frozen=True)
class Observation:
    """Snapshot summary recorded by run.

    u_hat rows are NaN for grid cells that were empty or had a degenerate
    Q-tensor; rho_hat and u_hat are None unless coarse fields were asked
    for.
    """

    time: float
    qtensor: np.ndarray
    order_parameter: float
    rho_hat: Optional[np.ndarray] = None
    u_hat: Optional[np.ndarray] = None


def _stream(seed: int, index: int) -> np.random.Generator:
    """Independent generator for one step of one run (Philox-4x64 keyed)."""
    key = np.array([seed, index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _wrap(positions: np.ndarray, box_length: float) -> np.ndarray:
    return positions - box_length * np.floor(positions / box_length)


def _min_image(disp: np.ndarray, box_length: float) -> np.ndarray:
    return disp - box_length * np.round(disp / box_length)


def _unit_rows(vectors: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(vectors, axis=1, keepdims=True)
    if norms.min() < 1e-6:
        raise ArithmeticError(
            "orientation update collapsed to the origin; "
            "the noise step is too large for this dt"
        )
    return vectors / norms


def _kernel_weights(dist2: np.ndarray, config: IbmConfig) -> np.ndarray:
    """Relative interaction weight per squared distance (self included)."""
    if config.kernel == "global":
        return np.ones_like(dist2)
    s2 = dist2 / (config.R * config.R)
    if config.kernel == "indicator":
        return (s2 <= 1.0).astype(float)
    inside = s2 < 1.0
    w = np.zeros_like(dist2)
    w[inside] = np.exp(-1.0 / (1.0 - s2[inside]))
    return w


def _local_moments_dense(
    positions: np.ndarray, orientations: np.ndarray, config: IbmConfig
) -> tuple[np.ndarray, np.ndarray]:
    """All-pairs fallback, chunked over rows to bound memory."""
    n = positions.shape[0]
    d = positions.shape[1]
    moments = np.empty((n, d, d))
    wsum = np.empty(n)
    block = max(1, int(2**22 // max(n, 1)))
    for s in range(0, n, block):
        e = min(n, s + block)
        disp = _min_image(positions[s:e, None, :] - positions[None, :, :], config.box_length)
        w = _kernel_weights(np.einsum("pjk,pjk->pj", disp, disp), config)
        moments[s:e] = np.einsum("pj,ja,jb->pab", w, orientations, orientations)
        wsum[s:e] = w.sum(axis=1)
    return moments, wsum


def _local_moments(
    positions: np.ndarray, orientations: np.ndarray, config: IbmConfig
) -> tuple[np.ndarray, np.ndarray]:
    """Kernel-weighted sums of omega (x) omega and of the weights.

    Cell lists with cell size >= R: each particle gathers candidates from
    the 3^d cells around its own under the minimum-image convention, so the
    cost is O(N) at fixed density.  Falls back to chunked all-pairs when
    the box is fewer than three cells across, where the offset enumeration
    would alias cells.  Self pairs are always included, so the weight sum
    stays positive.
    """
    n, d = positions.shape
    side = int(config.box_length / config.R)
    if side < 3:
        return _local_moments_dense(positions, orientations, config)
    cell_size = config.box_length / side
    coords = np.minimum((positions / cell_size).astype(np.int64), side - 1)
    shape = (side,) * d
    cell_id = np.ravel_multi_index(tuple(coords.T), shape)
    order = np.argsort(cell_id, kind="stable")
    sorted_ids = cell_id[order]
    cell_starts = np.searchsorted(sorted_ids, np.arange(side**d), side="left")
    cell_counts = np.bincount(cell_id, minlength=side**d)

    moments = np.zeros((n, d, d))
    wsum = np.zeros(n)
    idx = np.arange(n)
    for offset in itertools.product((-1, 0, 1), repeat=d):
        nbr = np.ravel_multi_index(tuple(((coords + offset) % side).T), shape)
        cnt = cell_counts[nbr]
        total = int(cnt.sum())
        if total == 0:
            continue
        # Bound the temporary pair arrays, splitting the particle range.
        block = max(1, int(n * min(1.0, 2**22 / total)))
        for s in range(0, n, block):
            e = min(n, s + block)
            cnt_b = cnt[s:e]
            tot_b = int(cnt_b.sum())
            if tot_b == 0:
                continue
            pair_i = np.repeat(idx[s:e], cnt_b)
            base = np.repeat(cell_starts[nbr[s:e]], cnt_b)
            local = np.arange(tot_b) - np.repeat(np.cumsum(cnt_b) - cnt_b, cnt_b)
            pair_j = order[base + local]
            disp = _min_image(positions[pair_i] - positions[pair_j], config.box_length)
            w = _kernel_weights(np.einsum("pk,pk->p", disp, disp), config)
            keep = w > 0.0
            if not keep.any():
                continue
            rows = pair_i[keep]
            om = orientations[pair_j[keep]]
            wk = w[keep]
            wsum += np.bincount(rows, weights=wk, minlength=n)
            for a in range(d):
                for b in range(a, d):
                    m_ab = np.bincount(rows, weights=wk * om[:, a] * om[:, b], minlength=n)
                    moments[:, a, b] += m_ab
                    if b != a:
                        moments[:, b, a] += m_ab
    return moments, wsum


def _leading_batch(qtensors: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Leading eigenvectors of a batch of small symmetric matrices.

    Rows whose spectral gap falls below GAP_FLOOR are zeroed and flagged
    False; the alignment drift vanishes for them automatically because it
    is bilinear in the returned direction.
    """
    lam, vec = np.linalg.eigh(qtensors)
    gap = lam[..., -1] - lam[..., -2]
    ok = gap >= GAP_FLOOR
    dirs = vec[..., :, -1].copy()
    dirs[~ok] = 0.0
    return dirs, ok


def _mean_directions(
    positions: np.ndarray, orientations: np.ndarray, config: IbmConfig
) -> tuple[np.ndarray, np.ndarray]:
    """Local mean nematic direction for every particle at once."""
    n, d = orientations.shape
    if config.kernel == "global":
        Q = qtensor_from_orientations(orientations)
        try:
            info = leading_direction(Q)
        except DegenerateLeadingEigenvalue:
            return np.zeros_like(orientations), np.zeros(n, dtype=bool)
        dirs = np.broadcast_to(info.direction, orientations.shape)
        return dirs, np.ones(n, dtype=bool)
    moments, wsum = _local_moments(positions, orientations, config)
    Q = moments / wsum[:, None, None] - np.eye(d) / d
    return _leading_batch(Q)


def local_mean_direction(
    state: ParticleState, config: IbmConfig, i: int
) -> Optional[np.ndarray]:
    """Leading eigenvector of particle i's kernel-weighted Q-tensor.

    Includes the particle itself, so an isolated particle sees its own
    orientation (up to sign).  Returns None when the leading eigenvalue is
    degenerate, in which case the stepper applies no alignment drift.

    This is the per-particle reference path; the stepper computes the same
    quantity for all particles at once through cell lists.
    """
    disp = _min_image(state.positions - state.positions[i], config.box_length)
    weights = _kernel_weights(np.einsum("nk,nk->n", disp, disp), config)
    Q = qtensor_from_orientations(state.orientations, weights)
    try:
        return leading_direction(Q).direction
    except DegenerateLeadingEigenvalue:
        return None


def _alignment_drift(omega: np.ndarray, dirs: np.ndarray, nu: float) -> np.ndarray:
    # nu (omega.obar) P_perp obar; even in obar, so the eigenvector sign
    # chosen by the decomposition cannot influence the dynamics.
    c = np.einsum("ni,ni->n", omega, dirs)[:, None]
    return nu * c * (dirs - c * omega)


def _tangent_rows(omega: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    return vectors - np.einsum("ni,ni->n", omega, vectors)[:, None] * omega


def step(
    state: ParticleState, config: IbmConfig, rng: np.random.Generator
) -> ParticleState:
    """One synchronous update of every particle.

    The local mean directions come from the pre-step state and are held
    fixed through both Heun stages, so each particle sees the same snapshot
    regardless of visit order.  Both stages project the drift and the same
    noise increment onto the tangent space of the stage orientation; the
    combined update is renormalized.  Positions advance along the pre-step
    orientation and wrap periodically.
    """
    omega = state.orientations
    if config.nu == 0.0:
        # No alignment: skip the neighbor pass, the drift is identically zero.
        dirs = np.zeros_like(omega)
    else:
        dirs, _ = _mean_directions(state.positions, omega, config)
    noise = rng.standard_normal(omega.shape) * math.sqrt(2.0 * config.D * config.dt)

    drift0 = _alignment_drift(omega, dirs, config.nu)
    stage = _unit_rows(omega + config.dt * drift0 + _tangent_rows(omega, noise))
    drift1 = _alignment_drift(stage, dirs, config.nu)
    combined = (
        omega
        + 0.5 * config.dt * (drift0 + drift1)
        + 0.5 * (_tangent_rows(omega, noise) + _tangent_rows(stage, noise))
    )
    new_omega = _unit_rows(combined)
    new_pos = _wrap(state.positions + config.dt * omega, config.box_length)
    return ParticleState(new_pos, new_omega, state.time + config.dt)


def initial_state(config: IbmConfig) -> ParticleState:
    """Uniform positions and isotropic orientations from the reserved stream."""
    gen = _stream(config.seed, _INIT_STREAM)
    positions = config.box_length * gen.random((config.N, config.d))
    orientations = _unit_rows(gen.standard_normal((config.N, config.d)))
    return ParticleState(positions, orientations, 0.0)


def _observe(
    state: ParticleState,
    config: IbmConfig,
    coarse_grid_n: Optional[int],
    coarse_bandwidth: float,
) -> Observation:
    Q = qtensor_from_orientations(state.orientations)
    order = float(np.linalg.eigvalsh(Q)[-1])
    rho_hat = None
    u_hat = None
    if coarse_grid_n is not None:
        rho_hat, u_hat = coarse_grain(
            state, coarse_grid_n, coarse_bandwidth, config.box_length
        )
    return Observation(state.time, Q, order, rho_hat, u_hat)


def run(
    config: IbmConfig,
    T: float,
    observe_every: int = 1,
    coarse_grid_n: Optional[int] = None,
    coarse_bandwidth: float = 0.0,
) -> list[Observation]:
    """Simulate from an isotropic random start to time T.

    Records step 0, every observe_every-th step, and the final step.  Each
    observation carries the global Q-tensor and its leading eigenvalue as
    the scalar order parameter, plus coarse-grained fields when a grid was
    requested.  Same config, same observations, bit for bit.
    """
    if not (T > 0.0):
        raise ValueError("T > 0 required")
    if int(observe_every) != observe_every or observe_every < 1:
        raise ValueError("observe_every must be a positive integer")
    state = initial_state(config)
    n_steps = int(round(T / config.dt))
    observations = [_observe(state, config, coarse_grid_n, coarse_bandwidth)]
    for t in range(n_steps):
        state = step(state, config, _stream(config.seed, t))
        if (t + 1) % observe_every == 0 or t + 1 == n_steps:
            observations.append(_observe(state, config, coarse_grid_n, coarse_bandwidth))
    return observations


def coarse_grain(
    state: ParticleState, grid_n: int, bandwidth: float, box_length: float
) -> tuple[np.ndarray, np.ndarray]:
    """Gridded density and nematic direction estimates.

    Density: particles are binned to the uniform grid and smoothed with a
    periodic Gaussian of width bandwidth (length units; 0 skips smoothing).
    The result is a number density, integrating to N over the box.

    Direction: per-cell Q-tensor of the binned orientations, leading unit
    eigenvector per cell.  Cells that are empty or whose Q-tensor is
    degenerate get NaN rows.  Directions always come from eigenvectors of
    averaged outer products, never from averaging orientation vectors,
    which would cancel for nematic states.
    """
    if int(grid_n) != grid_n or grid_n < 1:
        raise ValueError("grid_n must be a positive integer")
    if bandwidth < 0.0:
        raise ValueError("bandwidth >= 0 required")
    n, d = state.positions.shape
    cell_size = box_length / grid_n
    coords = np.minimum((state.positions / cell_size).astype(np.int64), grid_n - 1)
    shape = (grid_n,) * d
    cell_id = np.ravel_multi_index(tuple(coords.T), shape)
    counts = np.bincount(cell_id, minlength=grid_n**d).astype(float)

    rho_hat = (counts / cell_size**d).reshape(shape)
    if bandwidth > 0.0:
        k = [2.0 * np.pi * np.fft.fftfreq(grid_n, d=cell_size) for _ in range(d)]
        k2 = sum(g**2 for g in np.meshgrid(*k, indexing="ij"))
        rho_hat = np.fft.ifftn(np.fft.fftn(rho_hat) * np.exp(-0.5 * bandwidth**2 * k2)).real

    omega = state.orientations
    moments = np.empty((grid_n**d, d, d))
    for a in range(d):
        for b in range(a, d):
            m_ab = np.bincount(cell_id, weights=omega[:, a] * omega[:, b], minlength=grid_n**d)
            moments[:, a, b] = m_ab
            moments[:, b, a] = m_ab
    occupied = counts > 0
    u_hat = np.full((grid_n**d, d), np.nan)
    if occupied.any():
        Q = moments[occupied] / counts[occupied, None, None] - np.eye(d) / d
        dirs, ok = _leading_batch(Q)
        dirs[~ok] = np.nan
        u_hat[occupied] = dirs
    return rho_hat, u_hat.reshape(shape + (d,))


__all__ = [
    "KERNELS",
    "ORIENT_TOL",
    "IbmConfig",
    "ParticleState",
    "Observation",
    "initial_state",
    "local_mean_direction",
    "step",
    "run",
    "coarse_grain",
]
