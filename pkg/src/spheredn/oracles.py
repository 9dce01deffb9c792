"""Independent reference solutions for validating the boundary operator.

Nothing here touches the series/fixed-point machinery (shape, solvers, dn) or
the ball-field helpers; only the shared basis transforms are reused. Three
oracles:

* scaled_sphere_oracle:   boundary r = 1 + a, eigenvalues deg/(1+a).
* translated_ball_oracle: unit ball centered at c, solved by re-expanding the
  boundary data around the true center (separation of variables there).
* direct_galerkin_oracle: the transformed divergence-form problem solved in
  one shot as a fully coupled Galerkin system, no homogeneity expansion.

Each returns the boundary operator output as a BoundaryField in the same
normalization as the engine: the plain normal derivative of the harmonic
potential at the mapped boundary point, read back at the unit-sphere
parameter.
"""

import math

import numpy as np

from .spectral import (
    AngularGrid,
    BoundaryField,
    analyze,
    analyze_values,
    eigenvalues,
    mode_degrees,
    mode_index,
    n_modes,
    scatter_synth,
    synth_coeffs,
    tangential_gradient_values,
)


# --------------------------------------------------------------- scaled ball


def scaled_sphere_oracle(psi, a):
    """G for the sphere of radius 1 + a: per-mode factor deg / (1 + a)."""
    deg = mode_degrees(psi.dim, psi.degree_cut)
    return BoundaryField(psi.dim, psi.degree_cut, deg * psi.coeffs / (1.0 + a))


# ----------------------------------------------------------- translated ball


def translated_ball_shape(dim, center, degree):
    """The radial graph h of the unit ball centered at `center`.

    Solving |x (1 + h) - c| = 1 for the positive root gives
        h(x) = <x, c> + sqrt(1 - |c|^2 + <x, c>^2) - 1,
    valid for |c| < 1. Returned as a BoundaryField of the given degree.
    """
    center = np.asarray(center, dtype=float)
    if center.shape != (dim,) or (center**2).sum() >= 1.0:
        raise ValueError("center must be a length-dim vector with |c| < 1")
    grid = AngularGrid.for_degree(dim, 2 * degree)
    units = grid.unit()
    xc = units @ center
    vals = xc + np.sqrt(1.0 - (center**2).sum() + xc**2) - 1.0
    return analyze(grid, vals, dim, degree)


def translated_ball_oracle(psi, center, expansion_degree=None, out_degree=None):
    """G for the unit ball centered at `center`, independent of the engine.

    The potential is expanded around the true center: v(c + rho z) =
    sum a_m rho^deg Y_m(z), where the a_m come from analyzing the Dirichlet
    data as a function of the boundary direction z. The normal derivative at
    the boundary point c + z is then sum a_m deg Y_m(z), which is read back
    at the unit-sphere parameter x via z(x) = x (1 + h(x)) - c.
    """
    dim = psi.dim
    center = np.asarray(center, dtype=float)
    cnorm = math.sqrt(float((center**2).sum()))
    if cnorm >= 1.0:
        raise ValueError("|center| must be < 1")
    if expansion_degree is None:
        # re-expanded data coefficients decay like |c|^deg; size for ~1e-16
        if cnorm < 1e-12:
            expansion_degree = psi.degree_cut + 2
        else:
            expansion_degree = psi.degree_cut + 8 + int(
                16.0 / max(-math.log10(cnorm), 0.25)
            )
    L_o = expansion_degree
    grid = AngularGrid.for_degree(dim, 2 * L_o)
    z = grid.unit()  # boundary directions around the center
    p = z + center  # boundary points, |p - center| = 1
    x = p / np.linalg.norm(p, axis=-1, keepdims=True)
    data = scatter_synth(dim, psi.degree_cut, psi.coeffs, x.reshape(-1, dim))
    a = analyze_values(dim, L_o, data.reshape(grid.shape), grid)
    flux_coeffs = a * mode_degrees(dim, L_o)

    if out_degree is None:
        out_degree = psi.degree_cut + 6
    out_grid = AngularGrid.for_degree(dim, 2 * out_degree)
    xs = out_grid.unit()
    xc = xs @ center
    h = xc + np.sqrt(1.0 - cnorm**2 + xc**2) - 1.0
    zs = xs * (1.0 + h)[..., None] - center  # unit by construction
    vals = scatter_synth(dim, L_o, flux_coeffs, zs.reshape(-1, dim))
    return analyze(out_grid, vals.reshape(out_grid.shape), dim, out_degree)


# --------------------------------------------------------- coupled Galerkin


def _radial_test_basis(d, n_p, r):
    """Values and derivatives of r^d (1 - r^2) P_p(2 r^2 - 1), p < n_p."""
    V = np.polynomial.legendre.legvander(2.0 * r * r - 1.0, n_p - 1)
    dV = np.zeros_like(V)
    for p in range(1, n_p):
        coef = np.zeros(p + 1)
        coef[p] = 1.0
        dV[:, p] = np.polynomial.legendre.legval(
            2.0 * r * r - 1.0, np.polynomial.legendre.legder(coef)
        )
    rd = r**d
    fac = rd * (1.0 - r * r)
    Phi = fac[:, None] * V
    lead = d * r ** max(d - 1, 0) * (1.0 - r * r) if d > 0 else np.zeros_like(r)
    dPhi = lead[:, None] * V - (2.0 * r * rd)[:, None] * V + (fac * 4.0 * r)[:, None] * dV
    return Phi, dPhi


def direct_galerkin_oracle(h, psi, L_cap, n_r_quad=None, n_p=6, out_degree=None):
    """Solve the transformed problem as one coupled Galerkin system.

    Trial space: harmonic lift of psi plus span{ phi_p(r) Y_m(x) } over all
    modes m of degree <= L_cap and p < n_p, with zero boundary trace. The
    divergence-form matrix P is evaluated pointwise from the extension of h,
    the full stiffness matrix is assembled by quadrature, and the boundary
    operator is read off the solution:

        G = Jh <grad u, x>|_{r=1} / ((1+h)(1+h+<x, grad ht>))
            - <grad_S psi, grad_S h> / (Jh (1+h)).
    """
    dim = h.dim
    if psi.dim != dim:
        raise ValueError("dimension mismatch")
    L_work = L_cap + 1
    grid = AngularGrid.for_degree(dim, 2 * L_work + 2)
    gsh = grid.shape
    units = np.moveaxis(grid.unit(), -1, 0)  # (dim,) + gsh
    if n_r_quad is None:
        n_r_quad = 2 * (L_cap + n_p) + 8
    q, wq = np.polynomial.legendre.leggauss(n_r_quad)
    r = 0.5 * (q + 1.0)
    wr = 0.5 * wq * r ** (dim - 1)
    n_rq = r.size

    # --- pointwise geometry: ht, grad ht, <x, grad ht> from per-mode forms
    # ht(r x) = sum_m c_m r^d Y_m(x); grad(r^d Y) = d r^(d-1) Y x + r^(d-1) grad_S Y
    deg_h = mode_degrees(dim, h.degree_cut)
    Yh = synth_coeffs(dim, h.degree_cut, np.eye(n_modes(dim, h.degree_cut)), grid)
    dYh = tangential_gradient_values(
        dim, h.degree_cut, np.eye(n_modes(dim, h.degree_cut)), grid
    )  # (n_modes, dim) + gsh
    rd = r[:, None] ** deg_h[None, :]
    rdm1 = np.where(
        deg_h[None, :] >= 1, r[:, None] ** np.maximum(deg_h - 1, 0)[None, :], 0.0
    )
    ht = np.einsum("qm,m...->q...", rd * h.coeffs[None, :], Yh)
    xdg = np.einsum("qm,m...->q...", rd * (deg_h * h.coeffs)[None, :], Yh)
    grad_ht = (
        np.einsum("qm,m...->q...", rdm1 * (deg_h * h.coeffs)[None, :], Yh)[:, None]
        * units[None]
        + np.einsum("qm,mi...->qi...", rdm1 * h.coeffs[None, :], dYh)
    )
    # P = (1+ht)^(dim-3) [ (1+a) I - gh x^T - x gh^T + ghsq x x^T / (1+a) ]
    one_a = 1.0 + ht + xdg
    ghsq = (grad_ht**2).sum(axis=1)
    pref = (1.0 + ht) ** (dim - 3)

    # --- basis: per mode m (degree d), radial functions p = 0..n_p-1.
    # grad(phi_p(r) Y_m) = phi_p'(r) E_m + (phi_p(r)/r) F_m with the
    # radius-independent angular fields E_m = x Y_m and F_m = grad_S Y_m,
    # so the stiffness matrix assembles from per-radius angular Gram blocks.
    nm = n_modes(dim, L_cap)
    deg_all = mode_degrees(dim, L_cap)
    Y = synth_coeffs(dim, L_cap, np.eye(nm), grid)  # (nm,) + gsh
    F = tangential_gradient_values(dim, L_cap, np.eye(nm), grid)  # (nm, dim)+gsh
    E = units[None] * Y[:, None]
    w_ang = grid.weights
    wE = (E * w_ang).reshape(nm, -1)
    wF = (F * w_ang).reshape(nm, -1)
    RAD = np.zeros((n_rq, nm, n_p))  # phi_p' values per mode (via its degree)
    ANG = np.zeros((n_rq, nm, n_p))  # phi_p / r
    phi_r = {}
    for m in range(nm):
        d = int(deg_all[m])
        if d not in phi_r:
            phi_r[d] = _radial_test_basis(d, n_p, r)
        Phi, dPhi = phi_r[d]
        RAD[:, m] = dPhi
        ANG[:, m] = Phi / r[:, None]

    # harmonic lift gradient values (per radius)
    deg_psi = mode_degrees(dim, psi.degree_cut)
    Yp = synth_coeffs(dim, psi.degree_cut, np.eye(n_modes(dim, psi.degree_cut)), grid)
    dYp = tangential_gradient_values(
        dim, psi.degree_cut, np.eye(n_modes(dim, psi.degree_cut)), grid
    )
    rdp = np.where(
        deg_psi[None, :] >= 1, r[:, None] ** np.maximum(deg_psi - 1, 0)[None, :], 0.0
    )
    lift_grad = (
        np.einsum("qm,m...->q...", rdp * (deg_psi * psi.coeffs)[None, :], Yp)[:, None]
        * units[None]
        + np.einsum("qm,mi...->qi...", rdp * psi.coeffs[None, :], dYp)
    )

    # --- assemble A[(m,p),(m',p')] and b by radial quadrature of Gram blocks
    A4 = np.zeros((nm, n_p, nm, n_p))
    b2 = np.zeros((nm, n_p))
    for q in range(n_rq):
        # evaluate P at this radius on E, F, and the lift gradient

        def P_at_q(V):  # V: (batch, dim) + gsh
            xv = r[q] * np.einsum("i...,bi...->b...", units, V)
            ghv = (grad_ht[q][None] * V).sum(axis=1)
            out = one_a[q] * V - grad_ht[q][None] * xv[:, None]
            out -= r[q] * units[None] * ghv[:, None]
            out += r[q] * units[None] * (ghsq[q] * xv / one_a[q])[:, None]
            return pref[q] * out

        PE = P_at_q(E).reshape(nm, -1)
        PF = P_at_q(F).reshape(nm, -1)
        Pl = P_at_q(lift_grad[q][None]).reshape(1, -1)
        G_EE = PE @ wE.T
        G_EF = PE @ wF.T
        G_FE = PF @ wE.T
        G_FF = PF @ wF.T
        dq, aq = RAD[q], ANG[q]  # (nm, n_p)
        A4 += wr[q] * (
            np.einsum("mM,mp,MP->mpMP", G_EE, dq, dq)
            + np.einsum("mM,mp,MP->mpMP", G_EF, dq, aq)
            + np.einsum("mM,mp,MP->mpMP", G_FE, aq, dq)
            + np.einsum("mM,mp,MP->mpMP", G_FF, aq, aq)
        )
        bE = (Pl @ wE.T).ravel()
        bF = (Pl @ wF.T).ravel()
        b2 += wr[q] * (bE[:, None] * dq + bF[:, None] * aq)
    N = nm * n_p
    A = A4.reshape(N, N)
    wsol = np.linalg.solve(A, -b2.ravel())

    # --- boundary operator from per-mode traces (exact radial factors)
    # d_r of r^d at 1 is d; d_r of phi_p at 1 is -2 (all shifted polys are 1 at 1)
    urad_modes = np.zeros(nm)
    np_psi = n_modes(dim, psi.degree_cut)
    urad_modes[:np_psi] += deg_psi * psi.coeffs
    urad_modes += -2.0 * wsol.reshape(nm, n_p).sum(axis=1)
    urad = synth_coeffs(dim, L_cap, urad_modes, grid)

    hb = synth_coeffs(dim, h.degree_cut, h.coeffs, grid)
    xdg_b = synth_coeffs(dim, h.degree_cut, h.coeffs * deg_h, grid)
    gradSh = tangential_gradient_values(dim, h.degree_cut, h.coeffs, grid)
    gradSpsi = tangential_gradient_values(dim, psi.degree_cut, psi.coeffs, grid)
    Jb = np.sqrt((1.0 + hb) ** 2 + (gradSh**2).sum(axis=0))
    Gv = Jb * urad / ((1.0 + hb) * (1.0 + hb + xdg_b))
    Gv -= (gradSh * gradSpsi).sum(axis=0) / (Jb * (1.0 + hb))
    if out_degree is None:
        out_degree = L_cap
    return analyze(grid, Gv, dim, min(out_degree, L_work + 1))
