"""Real spectral calculus for scalar fields on the unit circle and unit sphere.

Basis conventions (orthonormal in L2 of the surface measure):

dim=2, modes indexed 0..2L:
    index 0        -> 1/sqrt(2 pi)
    index 2k-1     -> cos(k theta)/sqrt(pi)   (k = 1..L)
    index 2k       -> sin(k theta)/sqrt(pi)
dim=3, modes flat-indexed l*l + (l + m), l = 0..L, m = -l..l:
    m = 0          -> fully normalized Legendre  Pbar_l(cos theta)
    m > 0          -> sqrt(2) Pbar_{l,m}(cos theta) cos(m phi)
    m < 0          -> sqrt(2) Pbar_{l,|m|}(cos theta) sin(|m| phi)
No Condon-Shortley phase, so Y_{1,0} = sqrt(3/4pi) z, Y_{1,1} = sqrt(3/4pi) x,
Y_{1,-1} = sqrt(3/4pi) y.

The Laplace-Beltrami eigenvalue of a mode of degree d is d*(d + dim - 2).
"""

import json
import math
from functools import lru_cache

import numpy as np

AREA = {2: 2.0 * np.pi, 3: 4.0 * np.pi}


class ResolutionError(ValueError):
    """Quadrature grid too coarse for the requested spectral degree."""


def n_modes(dim, degree):
    if dim == 2:
        return 2 * degree + 1
    if dim == 3:
        return (degree + 1) ** 2
    raise ValueError(f"dim must be 2 or 3, got {dim}")


@lru_cache(maxsize=None)
def mode_degrees(dim, degree):
    """Array of per-mode degrees (k on the circle, l on the sphere)."""
    if dim == 2:
        out = np.concatenate([[0], np.repeat(np.arange(1, degree + 1), 2)])
    else:
        out = np.repeat(np.arange(degree + 1), 2 * np.arange(degree + 1) + 1)
    out = out.astype(float)
    out.setflags(write=False)
    return out


def eigenvalues(dim, degree):
    """Laplace-Beltrami eigenvalues per mode: d*(d+dim-2)."""
    d = mode_degrees(dim, degree)
    return d * (d + dim - 2)


def mode_index(dim, degree, *args):
    """Flat index of a mode: (k, 'cos'|'sin') for dim=2, (l, m) for dim=3."""
    if dim == 2:
        k, part = args
        if k == 0:
            return 0
        return 2 * k - 1 if part == "cos" else 2 * k
    l, m = args
    return l * l + l + m


class AngularGrid:
    """Tensor quadrature grid on S^{dim-1}.

    dim=2: n_theta equispaced nodes on [0, 2pi), uniform weights; exact for
    trigonometric polynomials of degree <= n_theta - 1.
    dim=3: Gauss-Legendre nodes in t = cos(theta) crossed with n_phi equispaced
    longitudes; exact for band-limited integrands of combined spherical degree
    <= min(2*n_theta - 1, n_phi - 1).
    """

    def __init__(self, dim, n_theta, n_phi=None):
        if dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {dim}")
        self.dim = dim
        if dim == 2:
            self.theta = 2.0 * np.pi * np.arange(n_theta) / n_theta
            self.weights = np.full(n_theta, 2.0 * np.pi / n_theta)
            self.shape = (n_theta,)
            self.exact_degree = n_theta - 1
        else:
            if n_phi is None:
                n_phi = 2 * n_theta
            t, wt = np.polynomial.legendre.leggauss(n_theta)
            self.t = t
            self.wt = wt
            self.phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
            self.wphi = 2.0 * np.pi / n_phi
            self.weights = np.outer(wt, np.full(n_phi, self.wphi))
            self.shape = (n_theta, n_phi)
            self.exact_degree = min(2 * n_theta - 1, n_phi - 1)
        self._tables = {}

    @classmethod
    def for_degree(cls, dim, degree):
        """Grid exact for integrands of that degree (with one node of headroom,
        so that a grid for degree 2L accepts fields of degree_cut L)."""
        if dim == 2:
            return cls(2, max(degree + 2, 4))
        return cls(3, max((degree + 2) // 2, 2), max(degree + 2, 4))

    @property
    def npts(self):
        return int(np.prod(self.shape))

    def unit(self):
        """Unit vectors at the nodes, shape self.shape + (dim,)."""
        if self.dim == 2:
            return np.stack([np.cos(self.theta), np.sin(self.theta)], axis=-1)
        s = np.sqrt(1.0 - self.t**2)
        x = s[:, None] * np.cos(self.phi)[None, :]
        y = s[:, None] * np.sin(self.phi)[None, :]
        z = np.broadcast_to(self.t[:, None], x.shape)
        return np.stack([x, y, z], axis=-1)

    def integrate(self, values):
        """Quadrature of grid values over the surface (batched on leading axes)."""
        if self.dim == 2:
            return values @ self.weights
        return np.einsum("...qp,qp->...", values, self.weights)

    def _require(self, degree):
        if self.dim == 2:
            if self.shape[0] < 2 * degree + 2:
                raise ResolutionError(
                    f"circle grid with {self.shape[0]} nodes too coarse for degree {degree}"
                )
        else:
            if self.shape[0] < degree + 1 or self.shape[1] < 2 * degree + 2:
                raise ResolutionError(
                    f"sphere grid {self.shape} too coarse for degree {degree}"
                )

    def tables(self, degree):
        """Cached synthesis/analysis tables up to `degree`."""
        if degree not in self._tables:
            if self.dim == 2:
                self._tables[degree] = _circle_tables(self.theta, degree)
            else:
                self._tables[degree] = _sphere_tables(self.t, self.phi, degree)
        return self._tables[degree]


def _circle_tables(theta, L):
    n = theta.size
    B = np.empty((n, 2 * L + 1))
    dB = np.zeros((n, 2 * L + 1))
    B[:, 0] = 1.0 / math.sqrt(2.0 * np.pi)
    for k in range(1, L + 1):
        c, s = np.cos(k * theta), np.sin(k * theta)
        B[:, 2 * k - 1] = c / math.sqrt(np.pi)
        B[:, 2 * k] = s / math.sqrt(np.pi)
        dB[:, 2 * k - 1] = -k * s / math.sqrt(np.pi)
        dB[:, 2 * k] = k * c / math.sqrt(np.pi)
    return {"B": B, "dB": dB}


def _legendre_bar(t, L):
    """Fully normalized associated Legendre values Pbar[l, m] at nodes t.

    Returns (P, dPdtheta), each shaped t.shape + (L+1, L+1), zero for m > l.
    The normalization absorbs the sqrt(2l+1 ...) factors so that the real
    spherical harmonics built from these are orthonormal on the sphere.
    """
    t = np.asarray(t, dtype=float)
    s = np.sqrt(np.clip(1.0 - t * t, 0.0, None))
    P = np.zeros(t.shape + (L + 1, L + 1))
    P[..., 0, 0] = 1.0 / math.sqrt(4.0 * np.pi)
    for m in range(1, L + 1):
        P[..., m, m] = math.sqrt((2 * m + 1) / (2.0 * m)) * s * P[..., m - 1, m - 1]
    for m in range(L):
        P[..., m + 1, m] = math.sqrt(2 * m + 3) * t * P[..., m, m]
    for m in range(L + 1):
        for l in range(m + 2, L + 1):
            a = math.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
            b = math.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1.0) ** 2 - 1.0))
            P[..., l, m] = a * (t * P[..., l - 1, m] - b * P[..., l - 2, m])
    dP = np.zeros_like(P)
    # d/dtheta Pbar_{l,m} = (l t Pbar_{l,m} - A_{l,m} Pbar_{l-1,m}) / sin(theta),
    # valid away from the poles (Gauss nodes are interior).
    with np.errstate(divide="ignore", invalid="ignore"):
        inv_s = np.where(s > 0, 1.0 / np.where(s > 0, s, 1.0), 0.0)
    for m in range(L + 1):
        for l in range(m, L + 1):
            term = l * t * P[..., l, m]
            if l > m:
                A = math.sqrt((2.0 * l + 1.0) * (l * l - m * m) / (2.0 * l - 1.0))
                term = term - A * P[..., l - 1, m]
            dP[..., l, m] = term * inv_s
    return P, dP


def _sphere_tables(t, phi, L):
    P, dP = _legendre_bar(t, L)  # (nt, L+1, L+1)
    m_signed = np.arange(-L, L + 1)
    abs_m = np.abs(m_signed)
    Ps = P[:, :, abs_m]  # (nt, L+1, 2L+1)
    dPs = dP[:, :, abs_m]
    # mask invalid (l < |m|) entries, already zero by construction
    TRIG = np.empty((2 * L + 1, phi.size))
    dTRIG = np.empty_like(TRIG)
    for i, m in enumerate(m_signed):
        if m == 0:
            TRIG[i] = 1.0
            dTRIG[i] = 0.0
        elif m > 0:
            TRIG[i] = math.sqrt(2.0) * np.cos(m * phi)
            dTRIG[i] = -m * math.sqrt(2.0) * np.sin(m * phi)
        else:
            TRIG[i] = math.sqrt(2.0) * np.sin(-m * phi)
            dTRIG[i] = -m * math.sqrt(2.0) * np.cos(-m * phi)
    # scatter/gather between flat mode index and the dense (l, m_signed) layout
    L1 = L + 1
    flat_l = np.repeat(np.arange(L1), 2 * np.arange(L1) + 1)
    flat_m = np.concatenate([np.arange(-l, l + 1) for l in range(L1)])
    dense_pos = flat_l * (2 * L + 1) + (flat_m + L)
    return {
        "Ps": Ps,
        "dPs": dPs,
        "TRIG": TRIG,
        "dTRIG": dTRIG,
        "dense_pos": dense_pos,
        "L": L,
    }


def _to_dense(coeffs, tab):
    L = tab["L"]
    dense = np.zeros(coeffs.shape[:-1] + ((L + 1) * (2 * L + 1),))
    dense[..., tab["dense_pos"]] = coeffs
    return dense.reshape(coeffs.shape[:-1] + (L + 1, 2 * L + 1))


def _from_dense(dense, tab):
    L = tab["L"]
    flat = dense.reshape(dense.shape[:-2] + ((L + 1) * (2 * L + 1),))
    return flat[..., tab["dense_pos"]]


def synth_coeffs(dim, degree, coeffs, grid):
    """Evaluate a coefficient array on the grid. Batched over leading axes."""
    grid._require(degree)
    coeffs = np.asarray(coeffs)
    if coeffs.shape[-1] != n_modes(dim, degree):
        raise ValueError("coefficient count does not match degree")
    tab = grid.tables(degree)
    if dim == 2:
        return coeffs @ tab["B"].T
    dense = _to_dense(coeffs, tab)
    prof = np.einsum("...lm,qlm->...qm", dense, tab["Ps"], optimize=True)
    return prof @ tab["TRIG"]


def analyze_values(dim, degree, values, grid):
    """Project grid values onto modes up to `degree` by quadrature.

    Exact whenever the integrand (values times any basis mode of degree
    <= `degree`) lies within the grid's exactness degree. Batched.
    """
    grid._require(degree)
    tab = grid.tables(degree)
    values = np.asarray(values)
    if dim == 2:
        return (values * grid.weights) @ tab["B"]
    prof = values @ tab["TRIG"].T * grid.wphi
    dense = np.einsum(
        "...qm,qlm,q->...lm", prof, tab["Ps"], grid.wt, optimize=True
    )
    return _from_dense(dense, tab)


def tangential_gradient_values(dim, degree, coeffs, grid):
    """Grid values of the surface gradient, as ambient components.

    The surface gradient is the ambient gradient of the 0-homogeneous
    extension f(x/|x|), so the result is tangent to the surface pointwise.
    Output shape: batch + (dim,) + grid.shape. Batched over leading axes.
    """
    grid._require(degree + 1)
    tab = grid.tables(degree)
    coeffs = np.asarray(coeffs)
    if dim == 2:
        df = coeffs @ tab["dB"].T  # d/dtheta on the grid
        e_t = np.stack([-np.sin(grid.theta), np.cos(grid.theta)])
        return df[..., None, :] * e_t
    dense = _to_dense(coeffs, tab)
    prof = np.einsum("...lm,qlm->...qm", dense, tab["dPs"], optimize=True)
    df_dtheta = prof @ tab["TRIG"]
    prof2 = np.einsum("...lm,qlm->...qm", dense, tab["Ps"], optimize=True)
    df_dphi = prof2 @ tab["dTRIG"]
    s = np.sqrt(1.0 - grid.t**2)
    t = grid.t
    cphi, sphi = np.cos(grid.phi), np.sin(grid.phi)
    e_theta = np.stack(
        [
            t[:, None] * cphi[None, :],
            t[:, None] * sphi[None, :],
            np.broadcast_to(-s[:, None], (t.size, cphi.size)),
        ]
    )
    e_phi = np.stack(
        [
            np.broadcast_to(-sphi[None, :], (t.size, sphi.size)),
            np.broadcast_to(cphi[None, :], (t.size, cphi.size)),
            np.zeros((t.size, cphi.size)),
        ]
    )
    df_dphi_over_s = df_dphi / s[:, None]
    return (
        df_dtheta[..., None, :, :] * e_theta
        + df_dphi_over_s[..., None, :, :] * e_phi
    )


class BoundaryField:
    """Band-limited scalar field on S^{dim-1}, stored as basis coefficients."""

    def __init__(self, dim, degree_cut, coeffs):
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.ndim != 1 or coeffs.size != n_modes(dim, degree_cut):
            raise ValueError(
                f"expected {n_modes(dim, degree_cut)} coefficients, got shape {coeffs.shape}"
            )
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("non-finite coefficients")
        self.dim = dim
        self.degree_cut = degree_cut
        self.coeffs = coeffs

    @classmethod
    def zero(cls, dim, degree_cut=0):
        return cls(dim, degree_cut, np.zeros(n_modes(dim, degree_cut)))

    @classmethod
    def from_mode(cls, dim, degree_cut, index, amplitude=1.0):
        c = np.zeros(n_modes(dim, degree_cut))
        c[index] = amplitude
        return cls(dim, degree_cut, c)

    def padded(self, degree):
        """Same field with the coefficient array extended to a higher cut."""
        if degree < self.degree_cut:
            raise ValueError("padded() cannot lower the degree cut")
        c = np.zeros(n_modes(self.dim, degree))
        c[: self.coeffs.size] = self.coeffs
        return BoundaryField(self.dim, degree, c)

    def truncated(self, degree):
        if degree >= self.degree_cut:
            return self.padded(degree)
        return BoundaryField(self.dim, degree, self.coeffs[: n_modes(self.dim, degree)])

    def __add__(self, other):
        L = max(self.degree_cut, other.degree_cut)
        return BoundaryField(
            self.dim, L, self.padded(L).coeffs + other.padded(L).coeffs
        )

    def __sub__(self, other):
        L = max(self.degree_cut, other.degree_cut)
        return BoundaryField(
            self.dim, L, self.padded(L).coeffs - other.padded(L).coeffs
        )

    def __mul__(self, scalar):
        return BoundaryField(self.dim, self.degree_cut, self.coeffs * scalar)

    __rmul__ = __mul__

    def synth(self, grid):
        return synth_coeffs(self.dim, self.degree_cut, self.coeffs, grid)

    def sobolev_norm(self, s):
        """Spectral Sobolev norm (sum (1+lambda)^s |c|^2)^(1/2)."""
        lam = eigenvalues(self.dim, self.degree_cut)
        return math.sqrt(float(np.sum((1.0 + lam) ** s * self.coeffs**2)))

    def to_json(self):
        return json.dumps(
            {
                "dim": self.dim,
                "degree_cut": self.degree_cut,
                "coeffs": self.coeffs.tolist(),
            }
        )

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        return cls(d["dim"], d["degree_cut"], np.array(d["coeffs"], dtype=float))

    def __repr__(self):
        return (
            f"BoundaryField(dim={self.dim}, degree_cut={self.degree_cut}, "
            f"l2={self.sobolev_norm(0):.3e})"
        )


def analyze(grid, values, dim, degree_cut):
    """BoundaryField from grid samples (quadrature projection)."""
    return BoundaryField(dim, degree_cut, analyze_values(dim, degree_cut, values, grid))


def synth(field, grid):
    return field.synth(grid)


def sobolev_norm_spectral(field, s):
    return field.sobolev_norm(s)


def tangential_gradient(field, out_degree=None):
    """Surface gradient as a tuple of BoundaryFields (ambient components).

    Each component is band-limited with degree <= degree_cut + 1 exactly.
    """
    L = field.degree_cut
    out = L + 1 if out_degree is None else out_degree
    grid = AngularGrid.for_degree(field.dim, L + 1 + out)
    vals = tangential_gradient_values(field.dim, L, field.coeffs, grid)
    return tuple(
        analyze(grid, vals[i], field.dim, out) for i in range(field.dim)
    )


def surface_divergence(vfields):
    """Surface divergence sum_i (grad_S V_i)_i of an ambient-component field."""
    dim = vfields[0].dim
    L = max(f.degree_cut for f in vfields)
    out = L + 1
    grid = AngularGrid.for_degree(dim, 2 * out)
    acc = np.zeros(grid.shape)
    for i, f in enumerate(vfields):
        vals = tangential_gradient_values(dim, f.degree_cut, f.coeffs, grid)
        acc = acc + vals[i]
    return analyze(grid, acc, dim, out)


def multiply(f, g, out_degree=None, report=False):
    """Pointwise product of two band-limited fields, analyzed exactly.

    The product of degrees Lf and Lg is band-limited with degree Lf+Lg; the
    grid is sized so its projection is exact (no aliasing). If out_degree
    truncates below Lf+Lg, the discarded spectral mass is reported.
    """
    if f.dim != g.dim:
        raise ValueError("dimension mismatch")
    Lf, Lg = f.degree_cut, g.degree_cut
    full = Lf + Lg
    out = full if out_degree is None else out_degree
    grid = AngularGrid.for_degree(f.dim, full + max(out, full))
    vals = f.synth(grid) * g.synth(grid)
    prod_full = analyze(grid, vals, f.dim, full)
    result = prod_full.truncated(out)
    if report:
        if out >= full:
            dropped = 0.0
        else:
            dropped = math.sqrt(
                max(
                    prod_full.sobolev_norm(0) ** 2 - result.sobolev_norm(0) ** 2,
                    0.0,
                )
            )
        return result, dropped
    return result


def scatter_synth(dim, degree, coeffs, units):
    """Evaluate a coefficient array at arbitrary unit vectors.

    units: array (..., dim) of points on S^{dim-1}. Batched coefficient
    arrays are not supported here (single field only).
    """
    coeffs = np.asarray(coeffs, dtype=float)
    units = np.asarray(units, dtype=float)
    if dim == 2:
        theta = np.arctan2(units[..., 1], units[..., 0])
        out = np.full(theta.shape, coeffs[0] / math.sqrt(2.0 * np.pi))
        for k in range(1, degree + 1):
            out += coeffs[2 * k - 1] * np.cos(k * theta) / math.sqrt(np.pi)
            out += coeffs[2 * k] * np.sin(k * theta) / math.sqrt(np.pi)
        return out
    t = np.clip(units[..., 2], -1.0, 1.0)
    phi = np.arctan2(units[..., 1], units[..., 0])
    s = np.sqrt(np.clip(1.0 - t * t, 0.0, None))
    out = np.zeros(t.shape)
    # march the normalized Legendre recurrence in m to keep memory at O(npts*L)
    Pmm = np.full(t.shape, 1.0 / math.sqrt(4.0 * np.pi))
    for m in range(degree + 1):
        if m > 0:
            Pmm = math.sqrt((2 * m + 1) / (2.0 * m)) * s * Pmm
        Plm_prev, Plm = None, Pmm
        if m == 0:
            trig_c, trig_s = np.ones_like(phi), None
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
            c_cos = coeffs[mode_index(3, degree, l, m)]
            if c_cos != 0.0:
                out += c_cos * Plm * trig_c
            if m > 0:
                c_sin = coeffs[mode_index(3, degree, l, -m)]
                if c_sin != 0.0:
                    out += c_sin * Plm * trig_s
    return out


def basis_matrix(dim, degree, units):
    """Tabulate every basis function at arbitrary unit vectors.

    Returns an array of shape (npts, n_modes(dim, degree)) whose columns
    follow the mode_index ordering, so that ``basis_matrix(...) @ coeffs``
    reproduces ``scatter_synth`` and ``B @ C.T`` evaluates a whole batch of
    coefficient rows ``C`` of shape (n_fields, n_modes) in one product.
    """
    units = np.asarray(units, dtype=float).reshape(-1, dim)
    npts = units.shape[0]
    out = np.empty((npts, n_modes(dim, degree)))
    if dim == 2:
        theta = np.arctan2(units[:, 1], units[:, 0])
        out[:, 0] = 1.0 / math.sqrt(2.0 * np.pi)
        for k in range(1, degree + 1):
            out[:, 2 * k - 1] = np.cos(k * theta) / math.sqrt(np.pi)
            out[:, 2 * k] = np.sin(k * theta) / math.sqrt(np.pi)
        return out
    t = np.clip(units[:, 2], -1.0, 1.0)
    phi = np.arctan2(units[:, 1], units[:, 0])
    s = np.sqrt(np.clip(1.0 - t * t, 0.0, None))
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
            out[:, mode_index(3, degree, l, m)] = Plm * trig_c
            if m > 0:
                out[:, mode_index(3, degree, l, -m)] = Plm * trig_s
    return out
