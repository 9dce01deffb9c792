"""Interior solves: homogeneity series and fixed-point iteration."""

import numpy as np
import pytest

from spheredn.ballfields import harmonic_extension
from spheredn.shape import ShapeState
from spheredn.solvers import (
    NonContraction,
    _fit_tail_ratio,
    boundary_radial_trace_values,
    fixed_point_solve,
    series_solve,
)
from spheredn.spectral import AREA, BoundaryField, mode_degrees, synth_coeffs


def random_field(dim, degree, seed, amp=1.0, zero_mean=False):
    rng = np.random.default_rng(seed)
    f = BoundaryField.zero(dim, degree)
    f.coeffs[:] = amp * rng.standard_normal(f.coeffs.shape)
    if zero_mean:
        f.coeffs[0] = 0.0
    return f


def constant_shape(dim, value):
    h = BoundaryField.zero(dim, 2)
    h.coeffs[0] = value * np.sqrt(AREA[dim])
    return h


@pytest.mark.parametrize("dim", [2, 3])
def test_flat_series_terminates_at_order_zero(dim):
    psi = random_field(dim, 4, seed=1)
    st = ShapeState(dim, BoundaryField.zero(dim, 2), L_cap=8)
    sol = series_solve(st, psi)
    assert sol.converged
    assert sol.m_used == 1
    assert sol.term_norms[1, 0] <= 1e-12 * sol.term_norms[0, 0]
    # the solution is exactly the harmonic extension of psi
    want = harmonic_extension(psi.padded(8), st.rgrid).C
    np.testing.assert_allclose(sol.U[0], want, atol=1e-13)


@pytest.mark.parametrize("dim", [2, 3])
def test_dilation_series_terminates(dim):
    """A constant dilation keeps the extension harmonic: no corrections."""
    psi = random_field(dim, 4, seed=2)
    st = ShapeState(dim, constant_shape(dim, 0.2), L_cap=8)
    sol = series_solve(st, psi)
    assert sol.converged
    assert sol.term_norms[-1, 0] <= 1e-11 * sol.term_norms[0, 0]


@pytest.mark.parametrize("dim", [2, 3])
def test_series_matches_fixed_point(dim):
    h = random_field(dim, 3, seed=3, amp=0.03, zero_mean=True)
    psi = random_field(dim, 4, seed=4)
    st = ShapeState(dim, h, L_cap=10)
    sol = series_solve(st, psi, tol=1e-14)
    U_fp, info = fixed_point_solve(st, psi, tol=1e-14)
    scale = np.max(np.abs(sol.U))
    assert np.max(np.abs(sol.U - U_fp)) / scale < 1e-11
    assert info["rel_update"] < 1e-13
    assert sol.residual < 1e-10


@pytest.mark.parametrize("dim", [2, 3])
def test_series_terms_are_homogeneous_in_shape(dim):
    """Term m of the series scales as amplitude^m."""
    shape = random_field(dim, 3, seed=5, amp=1.0, zero_mean=True)
    psi = random_field(dim, 4, seed=6)
    norms = {}
    for amp in (0.01, 0.02):
        st = ShapeState(dim, shape * amp, L_cap=8)
        sol = series_solve(st, psi, M_fixed=4)
        norms[amp] = sol.term_norms[:, 0]
    for m in range(1, 5):
        ratio = norms[0.02][m] / norms[0.01][m]
        assert ratio == pytest.approx(2.0**m, rel=1e-9)


def test_fixed_point_rejects_wild_geometry():
    h = random_field(2, 2, seed=7, amp=0.9, zero_mean=True)
    st = ShapeState(2, h, L_cap=8)
    assert st.margin < 0.0
    with pytest.raises(NonContraction):
        fixed_point_solve(st, random_field(2, 3, seed=8))


@pytest.mark.parametrize("dim", [2, 3])
def test_partial_sums_accumulate_terms(dim):
    h = random_field(dim, 3, seed=9, amp=0.04, zero_mean=True)
    psi = random_field(dim, 3, seed=10)
    st = ShapeState(dim, h, L_cap=8)
    sol = series_solve(st, psi, M_fixed=6, keep_terms=True)
    np.testing.assert_allclose(sol.partial_sum(sol.m_used), sol.U, atol=1e-15)
    assert len(sol.terms) == sol.m_used + 1


def test_partial_sum_requires_kept_terms():
    st = ShapeState(2, BoundaryField.zero(2, 2), L_cap=6)
    sol = series_solve(st, random_field(2, 3, seed=11))
    with pytest.raises(ValueError):
        sol.partial_sum(0)


@pytest.mark.parametrize("dim", [2, 3])
def test_boundary_radial_trace_of_harmonic_extension(dim):
    """d_r of the degree-d harmonic profile at r = 1 is d * coefficient."""
    psi = random_field(dim, 5, seed=12)
    st = ShapeState(dim, BoundaryField.zero(dim, 2), L_cap=6)
    U = harmonic_extension(psi.padded(6), st.rgrid).C[None]
    got = boundary_radial_trace_values(st, U)[0]
    want = synth_coeffs(
        dim,
        6,
        psi.padded(6).coeffs * mode_degrees(dim, 6),
        st.grid,
    )
    np.testing.assert_allclose(got, want, atol=1e-11)


def test_fit_tail_ratio_recovers_geometric_rate():
    norms = 3.0 * 0.37 ** np.arange(12)
    assert _fit_tail_ratio(norms) == pytest.approx(0.37, rel=1e-10)
    assert _fit_tail_ratio(norms[:2]) is None
    # zeros at the tail are ignored rather than breaking the fit
    padded = np.concatenate([norms, [0.0, 0.0]])
    assert _fit_tail_ratio(padded) == pytest.approx(0.37, rel=1e-10)


@pytest.mark.parametrize("dim", [2, 3])
def test_data_outside_cap_rejected(dim):
    st = ShapeState(dim, BoundaryField.zero(dim, 2), L_cap=4)
    psi = random_field(dim, 6, seed=13)
    with pytest.raises(ValueError):
        series_solve(st, psi)
    with pytest.raises(ValueError):
        fixed_point_solve(st, psi)
