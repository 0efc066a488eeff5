"""Multiscale toolkit for nematically aligning self-propelled particles.

Layers, from microscopic to macroscopic:

- ``ibm``: constant-speed particles whose orientations diffuse on the unit
  sphere and align nematically with a kernel-weighted local Q-tensor axis.
- ``kinetic``: space-homogeneous angular Fokker-Planck relaxation of the
  orientation density toward the aligned equilibrium.
- ``gci``: the analytical core - aligned equilibrium, six radial boundary
  value problems, the generalized collision invariant, the first-order
  corrector, and the sixteen transport coefficients of the limit system,
  computed by two independent routes.
- ``macro``: explicit integrator for the limiting cross-diffusion system for
  density and mean nematic direction on a periodic grid.
- ``validation``: cross-scale studies tying the layers together.
"""

__version__ = "0.1.0"

from .qtensor import DegenerateLeadingEigenvalue

__all__ = ["DegenerateLeadingEigenvalue", "__version__"]
