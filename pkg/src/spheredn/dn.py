"""The boundary operator: Dirichlet data to (scaled) normal flux.

For a nearly spherical domain with boundary {x (1 + h(x))}, G(h) psi is the
outward normal derivative of the harmonic extension of psi into the domain,
scaled by the boundary area element, read back on the unit sphere. In terms of
the transformed potential u on the unit ball (see solvers),

    G(h) psi = Jh <grad u, x>|_{r=1} / ((1 + h)(1 + h + <x, grad ht>|_{r=1}))
               - <grad_S psi, grad_S h> / (Jh (1 + h)),

with Jh = sqrt((1 + h)^2 + |grad_S h|^2). Plain applications, first and
second shape derivatives, radius scans of the homogeneity series, and the
weighted boundary bilinear form all live here.

Defaults: the angular degree cap is a cost/accuracy dial, not a convergence
parameter of the method; every entry point takes L_cap explicitly or derives
a generous default from the data. Outputs are truncated to out_degree
(default: the cap), since the exact image is not band-limited.
"""

import numpy as np

from .jets import jet_mul, jet_reciprocal
from .shape import ShapeState
from .solvers import (
    boundary_radial_trace_values,
    fixed_point_solve,
    series_solve,
)
from .spectral import (
    BoundaryField,
    analyze,
    mode_degrees,
    synth,
    tangential_gradient_values,
)


def default_cap(h_degree, psi_degree):
    """A workable degree cap: boundary data content plus shape-interaction
    headroom proportional to the shape content."""
    return psi_degree + 6 * max(1, h_degree) + 2


def assemble_dn(state, psi, U, out_degree=None):
    """Boundary operator values from solved interior coefficients.

    Returns one BoundaryField per jet order (a list when the state carries a
    jet, a single field otherwise — callers index as needed).
    """
    dim, grid = state.dim, state.grid
    if out_degree is None:
        out_degree = state.L_cap
    out_degree = min(out_degree, state.L_cap)
    urad = boundary_radial_trace_values(state, U)  # <grad u, x> at r = 1
    flux = jet_mul(jet_mul(state.J_b, urad), jet_reciprocal(state.denom_b))
    gpsi = tangential_gradient_values(dim, psi.degree_cut, psi.coeffs, grid)
    dot = (state.gradShb * gpsi[None]).sum(axis=1)
    slide = jet_mul(dot, jet_reciprocal(jet_mul(state.J_b, state.one_ph_b)))
    values = flux - slide
    return [analyze(grid, values[j], dim, out_degree) for j in range(values.shape[0])]


def _solve(state, psi, method, tol, M_max, M_fixed=None, keep_terms=False):
    if method == "series":
        sol = series_solve(
            state, psi, M_max=M_max, tol=tol, M_fixed=M_fixed, keep_terms=keep_terms
        )
        return sol.U, sol
    if method == "fixed_point":
        U, info = fixed_point_solve(state, psi, tol=tol)
        return U, info
    raise ValueError(f"unknown method {method!r}")


def dn_apply(
    h,
    psi,
    L_cap=None,
    method="series",
    tol=1e-12,
    M_max=40,
    out_degree=None,
    return_info=False,
    rgrid=None,
    grid=None,
):
    """G(h) psi as a BoundaryField."""
    if L_cap is None:
        L_cap = default_cap(h.degree_cut, psi.degree_cut)
    state = ShapeState(h.dim, [h], L_cap, rgrid=rgrid, grid=grid)
    U, info = _solve(state, psi, method, tol, M_max)
    out = assemble_dn(state, psi, U, out_degree)[0]
    if return_info:
        return out, {"state": state, "solve": info}
    return out


def dn_derivative(
    h,
    eta,
    psi,
    L_cap=None,
    method="series",
    tol=1e-12,
    M_max=40,
    M_fixed=None,
    out_degree=None,
):
    """Directional shape derivative: d/dt G(h + t eta) psi at t = 0."""
    if L_cap is None:
        L_cap = default_cap(max(h.degree_cut, eta.degree_cut), psi.degree_cut)
    state = ShapeState(h.dim, [h, eta], L_cap)
    U, _ = _solve(state, psi, method, tol, M_max, M_fixed=M_fixed)
    return assemble_dn(state, psi, U, out_degree)[1]


def _second_along(h, eta, psi, L_cap, method, tol, M_max, M_fixed, out_degree):
    """Second t-derivative of G(h + t eta) psi (twice the order-2 jet)."""
    zero = BoundaryField.zero(h.dim, eta.degree_cut)
    state = ShapeState(h.dim, [h, eta, zero], L_cap)
    U, _ = _solve(state, psi, method, tol, M_max, M_fixed=M_fixed)
    jet2 = assemble_dn(state, psi, U, out_degree)[2]
    return 2.0 * jet2


def dn_second_derivative(
    h,
    eta1,
    eta2,
    psi,
    L_cap=None,
    method="series",
    tol=1e-12,
    M_max=40,
    M_fixed=None,
    out_degree=None,
):
    """Second shape derivative G''(h)[eta1, eta2] psi, by polarization.

    Q(e) := d^2/dt^2 G(h + t e) psi is quadratic in e, so
    G''[e1, e2] = (Q(e1 + e2) - Q(e1 - e2)) / 4, which is symmetric in
    (e1, e2) by construction.
    """
    if L_cap is None:
        Lh = max(h.degree_cut, eta1.degree_cut, eta2.degree_cut)
        L_cap = default_cap(Lh, psi.degree_cut)
    args = (psi, L_cap, method, tol, M_max, M_fixed, out_degree)
    plus = _second_along(h, eta1 + eta2, *args)
    minus = _second_along(h, eta1 - eta2, *args)
    return 0.25 * (plus - minus)


def bilinear_form(h, psi1, psi2, L_cap=None, method="series", tol=1e-12, M_max=40):
    """The weighted boundary pairing int psi1 * (G(h) psi2) * w dsigma.

    w = (1 + h)^(dim-2) Jh turns the unit-sphere measure into the boundary
    area element of the actual domain, which is what makes the pairing
    symmetric in (psi1, psi2).
    """
    if L_cap is None:
        L_cap = default_cap(h.degree_cut, max(psi1.degree_cut, psi2.degree_cut))
    state = ShapeState(h.dim, [h], L_cap)
    U, _ = _solve(state, psi2, method, tol, M_max)
    urad = boundary_radial_trace_values(state, U)
    flux = jet_mul(jet_mul(state.J_b, urad), jet_reciprocal(state.denom_b))
    gpsi = tangential_gradient_values(
        state.dim, psi2.degree_cut, psi2.coeffs, state.grid
    )
    dot = (state.gradShb * gpsi[None]).sum(axis=1)
    slide = jet_mul(dot, jet_reciprocal(jet_mul(state.J_b, state.one_ph_b)))
    g_vals = (flux - slide)[0]
    v1 = synth(psi1.padded(state.L_cap), state.grid)
    return float(state.grid.integrate(v1 * g_vals * state.weight_b[0]))


def radius_scan(
    h_shape,
    psi,
    amplitudes,
    L_cap,
    M_max=30,
    s_values=(),
    tol_for_M=1e-8,
    rgrid=None,
    grid=None,
):
    """Sweep shape amplitude and record how the homogeneity series behaves.

    For each amplitude a builds the geometry a*h_shape, runs the series with a
    fixed term budget, and records the per-term H^1 norms, the fitted tail
    ratio, the wellposedness margin, and (per requested Sobolev index s) the
    smallest M whose partial-sum operator matches the full one to tol_for_M
    in relative H^s norm.
    """
    records = []
    for amp in amplitudes:
        state = ShapeState(
            h_shape.dim, [amp * h_shape], L_cap, rgrid=rgrid, grid=grid
        )
        sol = series_solve(
            state, psi, M_fixed=M_max, keep_terms=bool(len(s_values))
        )
        rec = {
            "amplitude": float(amp),
            "margin": state.margin,
            "term_norms": sol.term_norms[:, 0].tolist(),
            "fitted_ratio": sol.fitted_ratio,
            "converged": bool(sol.converged),
            "residual": sol.residual,
        }
        if len(s_values):
            G_ref = assemble_dn(state, psi, sol.U)[0]
            ref_norms = {s: max(G_ref.sobolev_norm(s), 1e-300) for s in s_values}
            M_of_s = {}
            partial = np.zeros_like(sol.U)
            fields = []
            for M in range(sol.m_used + 1):
                partial = partial + sol.terms[M]
                fields.append(assemble_dn(state, psi, partial)[0])
            for s in s_values:
                M_of_s[s] = None
                for M, G_M in enumerate(fields):
                    if (G_M - G_ref).sobolev_norm(s) <= tol_for_M * ref_norms[s]:
                        M_of_s[s] = M
                        break
            rec["M_of_s"] = M_of_s
        records.append(rec)
    return records


def tame_scan(
    dim,
    s,
    s0,
    samples,
    L_cap,
    method="series",
    tol=1e-12,
    M_max=40,
):
    """Evaluate the operator on sampled (h, psi) pairs and report the norms
    entering the tame estimate.

    samples : iterable of (h, psi) BoundaryField pairs.
    Returns a list of records with ||G(h) psi||_s, ||psi||_{s+1},
    ||psi||_{s0+1}, ||h||_{s+1}, and the geometry margin.
    """
    out = []
    for h, psi in samples:
        state = ShapeState(dim, [h], L_cap)
        U, _ = _solve(state, psi, method, tol, M_max)
        G = assemble_dn(state, psi, U)[0]
        out.append(
            {
                "norm_G_s": G.sobolev_norm(s),
                "norm_psi_s1": psi.sobolev_norm(s + 1),
                "norm_psi_s01": psi.sobolev_norm(s0 + 1),
                "norm_h_s1": h.sobolev_norm(s + 1),
                "margin": state.margin,
            }
        )
    return out
