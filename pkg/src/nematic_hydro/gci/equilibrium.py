"""Aligned angular equilibrium M_u(omega) = exp((kappa/2)(omega.u)^2) / Z."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import roots_jacobi

from ..sphere import angle_weight_norm


@dataclass(frozen=True)
class Equilibrium:
    """Normalized aligned equilibrium on S^{d-1}.

    Z is the normalization against the normalized sphere measure, so the
    density integrates to exactly 1; it depends on omega only through
    (omega.u)^2, hence is invariant under omega -> -omega and under the sign
    choice of the axis u.
    """

    kappa: float
    d: int
    Z: float

    def density(self, r: np.ndarray) -> np.ndarray:
        """M as a function of r = omega.u."""
        return np.exp(0.5 * self.kappa * np.asarray(r, dtype=float) ** 2) / self.Z

    def log_density_derivative(self, r: np.ndarray) -> np.ndarray:
        """d/dr log M = kappa r."""
        return self.kappa * np.asarray(r, dtype=float)


def make_equilibrium(kappa: float, d: int, n_quad: int = 256) -> Equilibrium:
    """Compute Z = int exp((kappa/2) r^2) d(omega) by a Gauss rule.

    The radial rule is exact for the (1-r^2)^{(d-3)/2} measure; the Jacobi
    weights sum to the unnormalized measure, so dividing by W_{d-2} gives the
    normalized Z.  kappa = 0 yields Z = 1 and the uniform density.
    """
    if kappa < 0:
        raise ValueError("kappa >= 0 required")
    if d < 2:
        raise ValueError("d >= 2 required")
    alpha = (d - 3) / 2.0
    r, w = roots_jacobi(n_quad, alpha, alpha)
    Z = float(w @ np.exp(0.5 * kappa * r**2)) / angle_weight_norm(d - 2)
    return Equilibrium(kappa=float(kappa), d=int(d), Z=Z)
