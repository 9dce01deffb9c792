"""Geometry state: scalar triples, piece decomposition, margins, jets."""

import numpy as np
import pytest

from spheredn.ballfields import gradient, harmonic_extension
from spheredn.shape import ShapeState
from spheredn.spectral import AREA, BoundaryField


def random_shape(dim, amp, seed=3, degree=4):
    rng = np.random.default_rng(seed)
    h = BoundaryField.zero(dim, degree)
    h.coeffs[:] = amp * rng.standard_normal(h.coeffs.shape)
    h.coeffs[0] = 0.0
    return h


def constant_shape(dim, value, degree=2):
    h = BoundaryField.zero(dim, degree)
    h.coeffs[0] = value * np.sqrt(AREA[dim])
    return h


def probe_values(state, seed=7):
    """Gradient values (1, dim, n_r, grid) of a smooth harmonic probe."""
    rng = np.random.default_rng(seed)
    f = BoundaryField.zero(state.dim, 3)
    f.coeffs[:] = rng.standard_normal(f.coeffs.shape)
    gr = gradient(harmonic_extension(f.padded(state.L_cap), state.rgrid))
    v = np.zeros((1, state.dim, state.rgrid.n_r) + state.grid.shape)
    for i in range(state.dim):
        v[0, i] = gr.component(i).synth(state.grid)
    return v


@pytest.mark.parametrize("dim", [2, 3])
def test_flat_shape_is_identity(dim):
    h = BoundaryField.zero(dim, 2)
    st = ShapeState(dim, h, L_cap=6)
    p0, p1, p2 = st._full
    np.testing.assert_allclose(p0[0], 1.0, atol=1e-14)
    np.testing.assert_allclose(p1[0], 1.0, atol=1e-14)
    np.testing.assert_allclose(p2[0], 0.0, atol=1e-14)
    assert st.margin == pytest.approx(0.5, abs=1e-13)
    v = probe_values(st)
    np.testing.assert_allclose(st.apply_full(v), v, atol=1e-13)
    np.testing.assert_allclose(
        st.apply_full(v, minus_identity=True), 0.0, atol=1e-13
    )


@pytest.mark.parametrize("dim", [2, 3])
def test_constant_dilation_margin(dim):
    a = 0.23
    st = ShapeState(dim, constant_shape(dim, a), L_cap=6)
    # the harmonic extension of a constant is constant: no gradient term
    assert st.margin == pytest.approx(0.5 - a, abs=1e-12)
    np.testing.assert_allclose(st.Vh[0], a, atol=1e-13)
    np.testing.assert_allclose(st.Vgh[0], 0.0, atol=1e-12)


@pytest.mark.parametrize("dim", [2, 3])
def test_margin_decreases_with_amplitude(dim):
    h1 = random_shape(dim, amp=0.02)
    m1 = ShapeState(dim, h1, L_cap=8).margin
    m2 = ShapeState(dim, h1 * 2.0, L_cap=8).margin
    assert m2 < m1 < 0.5


@pytest.mark.parametrize("dim", [2, 3])
def test_piece_sum_matches_full(dim):
    """The homogeneous pieces sum to the full matrix minus the identity."""
    h = random_shape(dim, amp=0.02)
    st = ShapeState(dim, h, L_cap=8)
    v = probe_values(st)
    want = st.apply_full(v, minus_identity=True)
    acc = np.zeros_like(v)
    for m in range(1, 49):
        acc += st.apply_piece(m, v)
    scale = np.max(np.abs(v))
    assert np.max(np.abs(want - acc)) / scale < 1e-12


@pytest.mark.parametrize("dim", [2, 3])
def test_pieces_scale_homogeneously(dim):
    """Piece m evaluated at shape s*h equals s^m times the piece at h."""
    h = random_shape(dim, amp=0.03)
    s = 1.7
    st1 = ShapeState(dim, h, L_cap=8)
    st2 = ShapeState(dim, h * s, L_cap=8, rgrid=st1.rgrid, grid=st1.grid)
    v = probe_values(st1)
    for m in (1, 2, 3, 4):
        a = st1.apply_piece(m, v)
        b = st2.apply_piece(m, v)
        np.testing.assert_allclose(
            b, s**m * a, atol=1e-12 * max(1.0, float(np.max(np.abs(a))))
        )


@pytest.mark.parametrize("dim", [2, 3])
def test_constant_dilation_pieces(dim):
    """For a pure dilation h = a the pieces collapse to scalar multiples."""
    a = 0.1
    st = ShapeState(dim, constant_shape(dim, a), L_cap=6)
    v = probe_values(st)
    # grad ht = 0, so only the c0 term survives in every piece
    if dim == 3:
        np.testing.assert_allclose(st.apply_piece(1, v), a * v, atol=1e-13)
        np.testing.assert_allclose(st.apply_piece(2, v), 0.0, atol=1e-13)
    else:
        # c0(m) = (-1)^m h^m + (-1)^(m-1) a h^(m-1) with a == h: zero beyond m=1
        np.testing.assert_allclose(st.apply_piece(1, v), 0.0, atol=1e-14)
        np.testing.assert_allclose(st.apply_piece(2, v), 0.0, atol=1e-14)
        np.testing.assert_allclose(
            st.apply_full(v, minus_identity=True), 0.0, atol=1e-13
        )


@pytest.mark.parametrize("dim", [2, 3])
def test_jet_order_matches_finite_difference(dim):
    """Order-1 jet of P v equals the t-derivative of P(h + t eta) v."""
    h = random_shape(dim, amp=0.03, seed=5)
    eta = random_shape(dim, amp=1.0, seed=11)
    st = ShapeState(dim, [h, eta], L_cap=8)
    v01 = probe_values(st)
    v = np.concatenate([v01, np.zeros_like(v01)], axis=0)  # constant-in-t probe
    out = st.apply_full(v)
    t = 1e-6
    stp = ShapeState(dim, h + eta * t, L_cap=8, rgrid=st.rgrid, grid=st.grid)
    stm = ShapeState(dim, h + eta * (-t), L_cap=8, rgrid=st.rgrid, grid=st.grid)
    fd = (stp.apply_full(v01) - stm.apply_full(v01)) / (2 * t)
    np.testing.assert_allclose(out[1], fd[0], atol=3e-8)
    # order zero of the jet application is the plain application at h
    st0 = ShapeState(dim, h, L_cap=8, rgrid=st.rgrid, grid=st.grid)
    np.testing.assert_allclose(out[0], st0.apply_full(v01)[0], atol=1e-13)


@pytest.mark.parametrize("dim", [2, 3])
def test_boundary_scalars(dim):
    """Boundary jets: area factor and weight for the flat sphere."""
    st = ShapeState(dim, BoundaryField.zero(dim, 2), L_cap=6)
    np.testing.assert_allclose(st.J_b[0], 1.0, atol=1e-14)
    np.testing.assert_allclose(st.denom_b[0], 1.0, atol=1e-14)
    np.testing.assert_allclose(st.weight_b[0], 1.0, atol=1e-14)


def test_shape_content_must_fit_cap():
    h = random_shape(3, amp=0.02, degree=9)
    with pytest.raises(ValueError):
        ShapeState(3, h, L_cap=8)
