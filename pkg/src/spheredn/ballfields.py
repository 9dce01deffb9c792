"""Scalar and vector fields on the unit ball, spectral in angle, collocated in radius.

A field is stored as the radial profiles of its angular modes: an array of
shape (n_r, n_modes) holding the mode coefficients at radial collocation
nodes. The nodes are the positive half of an even-count Chebyshev-Gauss-
Lobatto grid on [-1,1], so r = 1 is a node and r = 0 is not. The profile of a
mode of angular degree d extends to negative r with parity (-1)^d (the
structure smooth fields on the ball actually have), which fixes the
interpolant; differentiation and interpolation matrices come in an even and
an odd flavor accordingly. This removes every 1/r special case at the origin.

Radial quadrature is Gauss-Legendre on [0,1] against the measure r^(dim-1) dr;
mode profiles are moved to the quadrature nodes by parity-aware barycentric
interpolation.
"""

import json
import math

import numpy as np

from .spectral import (
    AngularGrid,
    BoundaryField,
    analyze_values,
    eigenvalues,
    mode_degrees,
    n_modes,
    synth_coeffs,
    tangential_gradient_values,
)


def _cheb_nodes_and_diff(N):
    """Chebyshev-Gauss-Lobatto nodes on [-1,1] and the differentiation matrix."""
    j = np.arange(N)
    x = np.cos(j * np.pi / (N - 1))
    c = np.ones(N)
    c[0] = c[-1] = 2.0
    c = c * (-1.0) ** j
    X = x[:, None] - x[None, :]
    D = np.outer(c, 1.0 / c) / (X + np.eye(N))
    D = D - np.diag(D.sum(axis=1))
    return x, D


def _bary_weights(N):
    w = (-1.0) ** np.arange(N)
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


def _bary_rows(nodes, w, pts):
    pts = np.atleast_1d(np.asarray(pts, dtype=float))
    diff = pts[:, None] - nodes[None, :]
    exact = diff == 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        T = w[None, :] / diff
    T[exact] = 0.0
    rows = T / T.sum(axis=1)[:, None]
    hit = exact.any(axis=1)
    rows[hit] = exact[hit].astype(float)
    return rows


class RadialGrid:
    """Parity-reduced radial collocation plus Gauss quadrature on [0,1]."""

    def __init__(self, n_r, n_quad=None):
        if n_r < 4:
            raise ValueError("need at least 4 radial nodes")
        self.n_r = n_r
        N = 2 * n_r
        x, Dfull = _cheb_nodes_and_diff(N)
        self.r = x[:n_r]  # descending, r[0] = 1
        mirror = N - 1 - np.arange(n_r)
        self.D = {
            +1: Dfull[:n_r, :n_r] + Dfull[:n_r, mirror],
            -1: Dfull[:n_r, :n_r] - Dfull[:n_r, mirror],
        }
        self._xfull = x
        self._wbary = _bary_weights(N)
        if n_quad is None:
            n_quad = 2 * n_r + 4
        q, wq = np.polynomial.legendre.leggauss(n_quad)
        self.rq = 0.5 * (q + 1.0)
        self.wq = 0.5 * wq
        self.M = self.interp_pair(self.rq)
        self._sbasis = {}

    def interp_pair(self, pts):
        """Even/odd interpolation matrices from collocation values to pts."""
        rows = _bary_rows(self._xfull, self._wbary, pts)
        n_r = self.n_r
        mirror = 2 * n_r - 1 - np.arange(n_r)
        return {
            +1: rows[:, :n_r] + rows[:, mirror],
            -1: rows[:, :n_r] - rows[:, mirror],
        }


def _apply_parity(pair, C, deg, flip=False):
    """Apply an (even, odd) matrix pair columnwise by mode-profile parity.

    The natural parity of a smooth field's degree-d profile is (-1)^d; pass
    flip=True for profiles that carry the opposite parity (radial derivatives,
    or smooth fields divided by r).
    """
    C = np.asarray(C)
    out_shape = C.shape[:-2] + (pair[+1].shape[0], C.shape[-1])
    out = np.zeros(out_shape)
    even = (deg.astype(int) % 2) == (1 if flip else 0)
    if even.any():
        out[..., :, even] = np.einsum(
            "ij,...jm->...im", pair[+1], C[..., :, even], optimize=True
        )
    if (~even).any():
        out[..., :, ~even] = np.einsum(
            "ij,...jm->...im", pair[-1], C[..., :, ~even], optimize=True
        )
    return out


class BallField:
    """Scalar field on the unit ball: angular mode profiles at radial nodes."""

    def __init__(self, dim, degree_cut, rgrid, C):
        C = np.asarray(C, dtype=float)
        if C.shape != (rgrid.n_r, n_modes(dim, degree_cut)):
            raise ValueError(f"profile array has shape {C.shape}")
        self.dim = dim
        self.degree_cut = degree_cut
        self.rgrid = rgrid
        self.C = C

    @property
    def deg(self):
        return mode_degrees(self.dim, self.degree_cut)

    def boundary_trace(self):
        return BoundaryField(self.dim, self.degree_cut, self.C[0].copy())

    def radial_trace(self):
        """Per-mode d/dr at r = 1."""
        dC = _apply_parity(self.rgrid.D, self.C, self.deg)
        return BoundaryField(self.dim, self.degree_cut, dC[0])

    def radial_derivative(self):
        dC = _apply_parity(self.rgrid.D, self.C, self.deg)
        return BallField(self.dim, self.degree_cut, self.rgrid, dC)

    def at_quad(self):
        """Mode profiles at the radial quadrature nodes."""
        return _apply_parity(self.rgrid.M, self.C, self.deg)

    def synth(self, grid):
        """Values on (radial nodes) x (angular grid)."""
        return synth_coeffs(self.dim, self.degree_cut, self.C, grid)

    def truncated(self, degree):
        nm = n_modes(self.dim, degree)
        if degree <= self.degree_cut:
            return BallField(self.dim, degree, self.rgrid, self.C[:, :nm].copy())
        C = np.zeros((self.rgrid.n_r, nm))
        C[:, : self.C.shape[1]] = self.C
        return BallField(self.dim, degree, self.rgrid, C)

    def __add__(self, other):
        L = max(self.degree_cut, other.degree_cut)
        a, b = self.truncated(L), other.truncated(L)
        return BallField(self.dim, L, self.rgrid, a.C + b.C)

    def __sub__(self, other):
        L = max(self.degree_cut, other.degree_cut)
        a, b = self.truncated(L), other.truncated(L)
        return BallField(self.dim, L, self.rgrid, a.C - b.C)

    def __mul__(self, scalar):
        return BallField(self.dim, self.degree_cut, self.rgrid, self.C * scalar)

    __rmul__ = __mul__

    def l2_norm(self):
        q = self.at_quad()
        dens = (q * q).sum(axis=1)
        w = self.rgrid.wq * self.rgrid.rq ** (self.dim - 1)
        return math.sqrt(float(dens @ w))

    def h1_norm(self):
        """Full H^1 norm (L2 part plus gradient part), per-mode quadrature."""
        return math.sqrt(self.l2_norm() ** 2 + self.grad_sq())

    def grad_sq(self):
        """Integral of |grad u|^2 via the per-mode radial form."""
        rg = self.rgrid
        q = self.at_quad()
        dq = _apply_parity(rg.M, _apply_parity(rg.D, self.C, self.deg), self.deg, flip=True)
        lam = eigenvalues(self.dim, self.degree_cut)
        w = rg.wq * rg.rq ** (self.dim - 1)
        dens = (dq * dq).sum(axis=1) + (q * q) @ lam / rg.rq**2
        return float(dens @ w)

    def eval_at(self, r, units):
        """Point values at radii r (array) paired with unit vectors."""
        r = np.asarray(r, dtype=float)
        rows = self.rgrid.interp_pair(r.ravel())
        prof = _apply_parity(rows, self.C, self.deg)  # (npts, n_modes)
        flat_units = units.reshape(-1, self.dim)
        out = _scatter_synth_rows(self.dim, self.degree_cut, prof, flat_units)
        return out.reshape(r.shape)

    def to_json(self):
        return json.dumps(
            {
                "dim": self.dim,
                "degree_cut": self.degree_cut,
                "n_r": self.rgrid.n_r,
                "radial_nodes": self.rgrid.r.tolist(),
                "profiles": self.C.tolist(),
            }
        )

    @classmethod
    def from_json(cls, text, rgrid=None):
        d = json.loads(text)
        if rgrid is None:
            rgrid = RadialGrid(d["n_r"])
        return cls(d["dim"], d["degree_cut"], rgrid, np.array(d["profiles"]))

    def __repr__(self):
        return (
            f"BallField(dim={self.dim}, degree_cut={self.degree_cut}, "
            f"n_r={self.rgrid.n_r})"
        )


def _scatter_synth_rows(dim, degree, prof, units):
    """Evaluate per-point coefficient rows at the matching unit vectors."""
    from . import spectral as sp

    npts = prof.shape[0]
    if dim == 2:
        theta = np.arctan2(units[:, 1], units[:, 0])
        out = prof[:, 0] / math.sqrt(2.0 * np.pi)
        for k in range(1, degree + 1):
            out = out + prof[:, 2 * k - 1] * np.cos(k * theta) / math.sqrt(np.pi)
            out = out + prof[:, 2 * k] * np.sin(k * theta) / math.sqrt(np.pi)
        return out
    t = np.clip(units[:, 2], -1.0, 1.0)
    phi = np.arctan2(units[:, 1], units[:, 0])
    s = np.sqrt(np.clip(1.0 - t * t, 0.0, None))
    out = np.zeros(npts)
    Pmm = np.full(npts, 1.0 / math.sqrt(4.0 * np.pi))
    for m in range(degree + 1):
        if m > 0:
            Pmm = math.sqrt((2 * m + 1) / (2.0 * m)) * s * Pmm
        Plm_prev, Plm = None, Pmm
        if m == 0:
            trig_c, trig_s = np.ones(npts), None
        else:
            trig_c = math.sqrt(2.0) * np.cos(m * phi)
            trig_s = math.sqrt(2.0) * np.sin(m * phi)
        for l in range(m, degree + 1):
            if l > m:
                if l == m + 1:
                    Plm_new = math.sqrt(2 * m + 3) * t * Plm
                else:
                    a = math.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
                    b = math.sqrt(
                        ((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1.0) ** 2 - 1.0)
                    )
                    Plm_new = a * (t * Plm - b * Plm_prev)
                Plm_prev, Plm = Plm, Plm_new
            out = out + prof[:, sp.mode_index(3, degree, l, m)] * Plm * trig_c
            if m > 0:
                out = out + prof[:, sp.mode_index(3, degree, l, -m)] * Plm * trig_s
    return out


class VectorBallField:
    """Ambient-component vector field on the ball (dim scalar profiles)."""

    def __init__(self, dim, degree_cut, rgrid, comps):
        comps = np.asarray(comps, dtype=float)
        if comps.shape != (dim, rgrid.n_r, n_modes(dim, degree_cut)):
            raise ValueError(f"component array has shape {comps.shape}")
        self.dim = dim
        self.degree_cut = degree_cut
        self.rgrid = rgrid
        self.comps = comps

    def component(self, i):
        return BallField(self.dim, self.degree_cut, self.rgrid, self.comps[i])

    def __add__(self, other):
        L = max(self.degree_cut, other.degree_cut)
        a = self.truncated(L)
        b = other.truncated(L)
        return VectorBallField(self.dim, L, self.rgrid, a.comps + b.comps)

    def __sub__(self, other):
        L = max(self.degree_cut, other.degree_cut)
        a = self.truncated(L)
        b = other.truncated(L)
        return VectorBallField(self.dim, L, self.rgrid, a.comps - b.comps)

    def __mul__(self, scalar):
        return VectorBallField(self.dim, self.degree_cut, self.rgrid, self.comps * scalar)

    __rmul__ = __mul__

    def truncated(self, degree):
        nm = n_modes(self.dim, degree)
        if degree <= self.degree_cut:
            return VectorBallField(
                self.dim, degree, self.rgrid, self.comps[:, :, :nm].copy()
            )
        comps = np.zeros((self.dim, self.rgrid.n_r, nm))
        comps[:, :, : self.comps.shape[2]] = self.comps
        return VectorBallField(self.dim, degree, self.rgrid, comps)

    def l2_norm(self):
        return math.sqrt(sum(self.component(i).l2_norm() ** 2 for i in range(self.dim)))


def harmonic_extension(field, rgrid):
    """Per-mode closed form r^deg * coefficient."""
    deg = mode_degrees(field.dim, field.degree_cut)
    prof = rgrid.r[:, None] ** deg[None, :]
    return BallField(field.dim, field.degree_cut, rgrid, prof * field.coeffs[None, :])


def gradient(u):
    """Ambient gradient of a ball field: x_hat d_r + (1/r) surface gradient.

    The result is band-limited with degree_cut + 1; the angular products are
    computed on a grid exact for that content.
    """
    dim, L = u.dim, u.degree_cut
    out_deg = L + 1
    grid = AngularGrid.for_degree(dim, 2 * out_deg)
    ru = _apply_parity(u.rgrid.D, u.C, u.deg)
    dr_vals = synth_coeffs(dim, L, ru, grid)  # (n_r,) + grid.shape
    tg_vals = tangential_gradient_values(dim, L, u.C, grid)  # (n_r, dim) + grid
    units = grid.unit()
    inv_r = 1.0 / u.rgrid.r
    comps = np.empty((dim, u.rgrid.n_r, n_modes(dim, out_deg)))
    for i in range(dim):
        vals = dr_vals * units[..., i] + tg_vals[:, i] * inv_r[
            (slice(None),) + (None,) * (len(grid.shape))
        ]
        comps[i] = analyze_values(dim, out_deg, vals, grid)
    return VectorBallField(dim, out_deg, u.rgrid, comps)


def x_dot_gradient(u):
    """The field <x, grad u> = r d_r u (same degree cut as u)."""
    dC = _apply_parity(u.rgrid.D, u.C, u.deg)
    return BallField(u.dim, u.degree_cut, u.rgrid, u.rgrid.r[:, None] * dC)


def _solver_basis(rgrid, dim, d, lam):
    """Per-mode Galerkin data: basis r^d (1-r^2) P_p(2 r^2 - 1), its values
    and radial derivative at the quadrature nodes, values at collocation
    nodes, and the Cholesky-factored stiffness matrix."""
    key = (dim, d)
    cached = rgrid._sbasis.get(key)
    if cached is not None:
        return cached
    n_p = max(1, rgrid.n_r - 1 - d // 2)
    rq, wq, r = rgrid.rq, rgrid.wq, rgrid.r
    V = np.polynomial.legendre.legvander(2.0 * rq * rq - 1.0, n_p - 1)
    dV = np.zeros_like(V)
    for p in range(1, n_p):
        coef = np.zeros(p + 1)
        coef[p] = 1.0
        dV[:, p] = np.polynomial.legendre.legval(2.0 * rq * rq - 1.0, np.polynomial.legendre.legder(coef))
    rd = rq**d
    fac = rd * (1.0 - rq * rq)
    Phi = fac[:, None] * V
    dPhi = (
        (d * rq ** max(d - 1, 0) * (1.0 - rq * rq) if d > 0 else np.zeros_like(rq))[:, None] * V
        - (2.0 * rq * rd)[:, None] * V
        + (rd * (1.0 - rq * rq) * 4.0 * rq)[:, None] * dV
    )
    Vc = np.polynomial.legendre.legvander(2.0 * r * r - 1.0, n_p - 1)
    Phi_col = (r**d * (1.0 - r * r))[:, None] * Vc
    wvol = wq * rq ** (dim - 1)
    K = dPhi.T @ (dPhi * wvol[:, None])
    if lam > 0:
        K = K + Phi.T @ (Phi * (wvol * lam / rq**2)[:, None])
    data = {"Phi": Phi, "dPhi": dPhi, "Phi_col": Phi_col, "K": K, "wvol": wvol}
    rgrid._sbasis[key] = data
    return data


def poisson_div_solve(g, out_degree=None):
    """Solve -Delta u = div g on the unit ball with zero boundary trace.

    Weak identity: int grad u . grad v = - int g . grad v for every test
    function v vanishing at r = 1. Solved mode by mode in a Galerkin basis
    r^deg (1 - r^2) q_p(r^2); the per-mode weak residual of the discrete
    system is recorded on the result as `residual`.

    g must be a VectorBallField. The angular content of the solution is at
    most deg(g) + 1; out_degree can truncate below that.
    """
    dim, Lg, rgrid = g.dim, g.degree_cut, g.rgrid
    L_rhs = Lg + 1
    L_out = L_rhs if out_degree is None else min(out_degree, L_rhs)
    grid = AngularGrid.for_degree(dim, 2 * L_rhs)
    units = grid.unit()
    vals = synth_coeffs(dim, Lg, g.comps, grid)  # (dim, n_r) + grid.shape
    # A = <g, x_hat>, the radial part of g on each sphere r = const
    radial_vals = np.einsum("i...,...i->...", vals, units)
    A = analyze_values(dim, L_rhs, radial_vals, grid)
    # sum_i (grad_S g_i)_i and the tangential divergence correction
    acc = np.zeros((rgrid.n_r,) + grid.shape)
    for i in range(dim):
        tg = tangential_gradient_values(dim, Lg, g.comps[i], grid)
        acc = acc + tg[:, i]
    Cdiv = analyze_values(dim, L_rhs, acc, grid)
    # B_lm(r) = int_S <g, grad_S Y_lm> = -(div_S g_tan)_lm
    #         = -( sum_i (grad_S g_i)_i - (dim-1) <g, x_hat> )_lm
    B = -(Cdiv - (dim - 1) * A)
    # A and B profiles carry parity opposite to their mode degree: A is a
    # smooth field divided by r, B a pure angular derivative of one.
    deg_rhs = mode_degrees(dim, L_rhs)
    Aq = _apply_parity(rgrid.M, A, deg_rhs, flip=True)
    Bq = _apply_parity(rgrid.M, B, deg_rhs, flip=True)

    nm_out = n_modes(dim, L_out)
    U = np.zeros((rgrid.n_r, nm_out))
    lam_all = eigenvalues(dim, L_out)
    deg_out = mode_degrees(dim, L_out)
    worst = 0.0
    wvol = rgrid.wq * rgrid.rq ** (dim - 1)
    for mode in range(nm_out):
        d = int(deg_out[mode])
        data = _solver_basis(rgrid, dim, d, lam_all[mode])
        F = -(data["dPhi"].T @ (Aq[:, mode] * wvol)
              + data["Phi"].T @ (Bq[:, mode] * wvol / rgrid.rq))
        c = np.linalg.solve(data["K"], F)
        res = np.linalg.norm(data["K"] @ c - F)
        scale = max(np.linalg.norm(F), 1e-300)
        worst = max(worst, res / scale)
        U[:, mode] = data["Phi_col"] @ c
    out = BallField(dim, L_out, rgrid, U)
    out.residual = worst
    return out


def weak_laplace_residual(u, g):
    """Max relative weak residual of -Delta u = div g over the test basis."""
    dim, rgrid = u.dim, u.rgrid
    L = max(u.degree_cut, g.degree_cut + 1)
    uu = u.truncated(L)
    grid = AngularGrid.for_degree(dim, 2 * (g.degree_cut + 1))
    units = grid.unit()
    vals = synth_coeffs(dim, g.degree_cut, g.comps, grid)
    radial_vals = np.einsum("i...,...i->...", vals, units)
    A = analyze_values(dim, L, radial_vals, grid)
    acc = np.zeros((rgrid.n_r,) + grid.shape)
    for i in range(dim):
        tg = tangential_gradient_values(dim, g.degree_cut, g.comps[i], grid)
        acc = acc + tg[:, i]
    B = -(analyze_values(dim, L, acc, grid) - (dim - 1) * A)
    deg = mode_degrees(dim, L)
    lam = eigenvalues(dim, L)
    Aq = _apply_parity(rgrid.M, A, deg, flip=True)
    Bq = _apply_parity(rgrid.M, B, deg, flip=True)
    Uq = _apply_parity(rgrid.M, uu.C, deg)
    dUq = _apply_parity(rgrid.M, _apply_parity(rgrid.D, uu.C, deg), deg, flip=True)
    wvol = rgrid.wq * rgrid.rq ** (dim - 1)
    gap_sq = 0.0
    scale_sq = 0.0
    for mode in range(n_modes(dim, L)):
        d = int(deg[mode])
        data = _solver_basis(rgrid, dim, d, lam[mode])
        lhs = data["dPhi"].T @ (dUq[:, mode] * wvol)
        if lam[mode] > 0:
            lhs = lhs + data["Phi"].T @ (Uq[:, mode] * wvol * lam[mode] / rgrid.rq**2)
        rhs = -(data["dPhi"].T @ (Aq[:, mode] * wvol)
                + data["Phi"].T @ (Bq[:, mode] * wvol / rgrid.rq))
        gap_sq += float(((lhs - rhs) ** 2).sum())
        scale_sq += max(float((rhs**2).sum()), float((lhs**2).sum()))
    return math.sqrt(gap_sq) / max(math.sqrt(scale_sq), 1e-300)
