"""Profile solver checks: closed-form limits, an independent collocation
cross-check frozen into probe values, residual levels, parity, and signs."""
import numpy as np
import pytest

from nematic_hydro.gci.radial import (
    DIRICHLET_KINDS,
    NEUMANN_KINDS,
    solve_bundle,
    solve_dirichlet_type_bvp,
    solve_neumann_type_bvp,
    strong_defect,
    strong_residual,
)

ALL_KINDS = DIRICHLET_KINDS + NEUMANN_KINDS


def small_kappa_closed_form(kind, d, r):
    """Exact solutions of the vanishing-coupling limit, polynomial in r."""
    if kind == "h":
        return -r / (2 * d)
    if kind == "a":
        return -np.ones_like(r) / (d - 1)
    if kind == "b":
        return -(2.0 / (d**2 - 1) + r**2 / (d + 1)) / 3.0
    if kind == "c":
        return -r / (d - 1)
    if kind == "e":
        return -r / (3 * (d + 1))
    if kind == "k":
        return -2.0 * r / (3 * (d**2 - 1))
    raise AssertionError(kind)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_small_kappa_limit_matches_closed_forms(d):
    bundle = solve_bundle(1e-10, d, 512)
    r = np.linspace(-0.95, 0.95, 41)
    for kind in ALL_KINDS:
        dev = np.abs(bundle[kind](r) - small_kappa_closed_form(kind, d, r)).max()
        assert dev < 1e-7, f"{kind}: {dev:.2e}"


def test_probe_values_frozen_against_collocation(bundle_k2d3):
    """Values pinned by an independent scipy.integrate.solve_bvp run that
    reproduced the solver to 1.1e-13 through the same interior points."""
    probes_odd = np.array([-0.75, -0.25, 0.25, 0.75])
    probes_even = np.array([0.25, 0.75])
    expected = {
        "h": [1.250557647829e-01, 4.627867049927e-02, -4.627867049937e-02, -1.250557647830e-01],
        "c": [5.817452374184e-01, 2.122157289146e-01, -2.122157289128e-01, -5.817452374202e-01],
        "e": [5.911867391388e-02, 2.183728584844e-02, -2.183728584841e-02, -5.911867391389e-02],
        "k": [9.044040879105e-02, 3.337163671569e-02, -3.337163671540e-02, -9.044040879133e-02],
        "a": [-4.157645308881e-01, -3.809443612460e-01],
        "b": [-8.423546910923e-02, -1.190556387520e-01],
    }
    for kind, vals in expected.items():
        probes = probes_even if kind in ("a", "b") else probes_odd
        dev = np.abs(bundle_k2d3[kind](probes) - np.array(vals)).max()
        assert dev < 1e-10, f"{kind}: {dev:.2e}"


def test_strong_residual_below_tolerance(bundle_k4d2):
    for kind in ALL_KINDS:
        res = strong_residual(
            bundle_k4d2[kind],
            e_sol=bundle_k4d2["e"] if kind == "k" else None,
        )
        assert res < 1e-6, f"{kind}: {res:.2e}"


def test_solutions_converge_under_refinement():
    kappa, d = 2.0, 3
    ref = solve_bundle(kappa, d, 4096)
    r = np.linspace(-0.9, 0.9, 33)
    errs = []
    for n in (128, 256):
        bundle = solve_bundle(kappa, d, n)
        errs.append(
            max(np.abs(bundle[k](r) - ref[k](r)).max() for k in ALL_KINDS)
        )
    order = np.log2(errs[0] / errs[1])
    assert order > 1.8, f"observed order {order:.2f}"


def test_parity_of_profiles(bundle_k2d3):
    r = np.linspace(0.05, 0.9, 20)
    for kind in ("h", "c", "e", "k"):
        assert np.abs(bundle_k2d3[kind](-r) + bundle_k2d3[kind](r)).max() < 1e-9
    for kind in ("a", "b"):
        assert np.abs(bundle_k2d3[kind](-r) - bundle_k2d3[kind](r)).max() < 1e-9


def test_sign_conditions(bundle_k4d2):
    r_half = np.linspace(0.0, 1.0, 201)
    r_full = np.linspace(-1.0, 1.0, 201)
    for kind in ("h", "c", "e", "k"):
        assert bundle_k4d2[kind](r_half).max() <= 1e-10
    for kind in ("a", "b"):
        assert bundle_k4d2[kind](r_full).max() <= 1e-10


def test_zero_mean_of_zero_mean_kinds(bundle_k2d3):
    """The kinds fixed only up to a constant are returned mean-free in the
    weighted r-measure."""
    from scipy.special import roots_jacobi

    d = 3
    rj, wj = roots_jacobi(128, (d - 3) / 2, (d - 3) / 2)
    weight = wj * np.exp(0.5 * 2.0 * rj**2)
    for kind in NEUMANN_KINDS:
        mean = float(weight @ bundle_k2d3[kind](rj)) / float(weight.sum())
        assert abs(mean) < 1e-10, f"{kind}: {mean:.2e}"


def test_defect_requires_coupled_profile(bundle_k2d3):
    with pytest.raises(ValueError):
        strong_residual(bundle_k2d3["k"])  # needs the e profile it couples to


def test_derivative_consistent_with_values(bundle_k2d3):
    h = bundle_k2d3["h"]
    r = np.linspace(-0.8, 0.8, 17)
    eps = 1e-6
    fd = (h(r + eps) - h(r - eps)) / (2 * eps)
    assert np.abs(fd - h.derivative(r)).max() < 1e-6


def test_solution_metadata(bundle_k2d3):
    for kind in ALL_KINDS:
        sol = bundle_k2d3[kind]
        assert sol.kind == kind
        assert sol.kappa == 2.0 and sol.d == 3 and sol.n == 1024


def test_individual_solvers_match_bundle(bundle_k2d3):
    h = solve_dirichlet_type_bvp("h", 2.0, 3, 1024)
    c = solve_neumann_type_bvp("c", 2.0, 3, 1024)
    r = np.linspace(-0.9, 0.9, 11)
    assert np.abs(h(r) - bundle_k2d3["h"](r)).max() == 0.0
    assert np.abs(c(r) - bundle_k2d3["c"](r)).max() == 0.0


def test_defect_is_pointwise_and_interior(bundle_k2d3):
    rr, defect = strong_defect(bundle_k2d3["a"])
    assert rr.min() >= -0.95 and rr.max() <= 0.95
    assert defect.shape == rr.shape
    assert np.abs(defect).max() < 1e-6
