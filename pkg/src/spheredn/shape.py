"""Geometry state for a nearly spherical domain.

The domain boundary is the radial graph {x (1 + h(x)) : |x| = 1}. Pulling the
interior problem back to the unit ball turns the Laplacian into a
divergence-form operator div(P grad u) with

    P = (1 + ht)^(dim-3) [ (1 + ht + <x, grad ht>) I
                           - (grad ht) x^T - x (grad ht)^T
                           + |grad ht|^2 x x^T / (1 + ht + <x, grad ht>) ],

where ht is the harmonic extension of h to the ball. Every matrix built here
(P itself, and each term of its expansion in powers of h) has the form

    c0 I  +  c1 (-(grad ht) x^T - x (grad ht)^T)  +  c2 x x^T

for three scalar fields, so a ShapeState stores only scalar value arrays and
applies matrices to vector fields through that structure.

All scalars are jets (leading axis = Taylor order in a parameter t, for shapes
h + t eta); plain geometry is the jet_len == 1 case.

The homogeneous expansion P = I + sum_{m>=1} P_m collects the terms of total
degree m in (ht, grad ht):

    Q_0 = I
    Q_1 = (ht + <x, grad ht>) I - (grad ht) x^T - x (grad ht)^T
    Q_k = (-1)^k |grad ht|^2 (ht + <x, grad ht>)^(k-2) x x^T   (k >= 2)

with P_m = Q_m in dimension 3 and P_m = sum_{s+k=m} (-1)^s ht^s Q_k in
dimension 2 (from expanding the prefactor 1/(1 + ht)).
"""

import numpy as np

from .ballfields import (
    RadialGrid,
    gradient,
    harmonic_extension,
    x_dot_gradient,
)
from .jets import jet_const, jet_mul, jet_power, jet_reciprocal, jet_sqrt
from .spectral import (
    AngularGrid,
    BoundaryField,
    mode_degrees,
    synth_coeffs,
    tangential_gradient_values,
)


class ShapeState:
    """Value-space geometry data for a shape jet h(t) = h0 + t h1 + t^2 h2.

    Parameters
    ----------
    dim : 2 or 3
    h_jets : BoundaryField or sequence of BoundaryField
        Taylor orders of the shape; a single field means no parameter.
    L_cap : int
        Angular degree cap for the downstream solver.
    rgrid, grid : optional discretizations (defaults sized from L_cap).
    """

    def __init__(self, dim, h_jets, L_cap, rgrid=None, grid=None):
        if isinstance(h_jets, BoundaryField):
            h_jets = [h_jets]
        h_jets = list(h_jets)
        if any(f.dim != dim for f in h_jets):
            raise ValueError("shape jet dimension mismatch")
        if max(f.degree_cut for f in h_jets) > L_cap:
            raise ValueError("shape content exceeds the degree cap")
        self.dim = dim
        self.L_cap = L_cap
        self.h_jets = h_jets
        self.jet_len = len(h_jets)
        self.rgrid = rgrid if rgrid is not None else RadialGrid(L_cap + 8)
        self.grid = grid if grid is not None else AngularGrid.for_degree(
            dim, 2 * L_cap + 2
        )
        self.grid._require(L_cap + 1)  # gradients of capped fields must synthesize

        J = self.jet_len
        gsh = self.grid.shape
        n_r = self.rgrid.n_r
        self.units = np.moveaxis(self.grid.unit(), -1, 0)  # (dim,) + gsh
        self.rfield = self.rgrid.r.reshape((n_r,) + (1,) * len(gsh))

        self.Vh = np.zeros((J, n_r) + gsh)
        self.Vgh = np.zeros((J, dim, n_r) + gsh)
        self.Vxdg = np.zeros((J, n_r) + gsh)
        self.hb = np.zeros((J,) + gsh)
        self.gradShb = np.zeros((J, dim) + gsh)
        self.xdgb = np.zeros((J,) + gsh)
        for j, f in enumerate(h_jets):
            ext = harmonic_extension(f, self.rgrid)
            self.Vh[j] = ext.synth(self.grid)
            gr = gradient(ext)
            for i in range(dim):
                self.Vgh[j, i] = gr.component(i).synth(self.grid)
            self.Vxdg[j] = x_dot_gradient(ext).synth(self.grid)
            self.hb[j] = f.synth(self.grid)
            self.gradShb[j] = tangential_gradient_values(
                dim, f.degree_cut, f.coeffs, self.grid
            )
            # <x, grad ht> on the boundary is exactly deg * coefficient per mode
            self.xdgb[j] = synth_coeffs(
                dim,
                f.degree_cut,
                f.coeffs * mode_degrees(dim, f.degree_cut),
                self.grid,
            )

        # interior scalar jets
        self.a = self.Vh + self.Vxdg  # ht + <x, grad ht>
        self.one_plus_a = self.a.copy()
        self.one_plus_a[0] += 1.0
        self.ghsq = sum(
            jet_mul(self.Vgh[:, i], self.Vgh[:, i]) for i in range(dim)
        )
        inv_1a = jet_reciprocal(self.one_plus_a)
        if dim == 3:
            p0 = self.one_plus_a
            p1 = jet_const(np.ones((n_r,) + gsh), J)
            p2 = jet_mul(self.ghsq, inv_1a)
        else:
            one_plus_h = self.Vh.copy()
            one_plus_h[0] += 1.0
            inv_1h = jet_reciprocal(one_plus_h)
            p0 = jet_mul(self.one_plus_a, inv_1h)
            p1 = inv_1h
            p2 = jet_mul(self.ghsq, jet_mul(inv_1h, inv_1a))
        self._full = (p0, p1, p2)
        self._pieces = {}
        self._pow_h = {}
        self._pow_a = {}

        # boundary scalar jets
        self.one_ph_b = self.hb.copy()
        self.one_ph_b[0] += 1.0
        gssq = sum(
            jet_mul(self.gradShb[:, i], self.gradShb[:, i]) for i in range(dim)
        )
        self.gradShb_sq = gssq
        self.J_b = jet_sqrt(jet_mul(self.one_ph_b, self.one_ph_b) + gssq)
        self.denom_b = jet_mul(self.one_ph_b, self.one_ph_b + self.xdgb)
        self.weight_b = (
            self.J_b if dim == 2 else jet_mul(self.one_ph_b, self.J_b)
        )

    @property
    def margin(self):
        """1/2 minus the sup of |ht| + r |grad ht| on the discretization.

        Positive margin places the geometry strictly inside the perturbative
        regime the transformed solver is built for.
        """
        gnorm = np.sqrt((self.Vgh[0] ** 2).sum(axis=0))
        return 0.5 - float((np.abs(self.Vh[0]) + self.rfield * gnorm).max())

    # ------------------------------------------------------------ matrices

    def _piece_scalars(self, m):
        """Scalar triple (c0, c1, c2) of the degree-m homogeneous piece."""
        if m < 1:
            raise ValueError("pieces start at m = 1")
        if m in self._pieces:
            return self._pieces[m]
        if self.dim == 3:
            if m == 1:
                J = self.jet_len
                gsh = self.grid.shape
                c0 = self.a
                c1 = jet_const(np.ones((self.rgrid.n_r,) + gsh), J)
                c2 = None
            else:
                c0 = c1 = None
                c2 = (-1.0) ** m * jet_mul(
                    self.ghsq, jet_power(self.a, m - 2, self._pow_a)
                )
        else:
            Vh = self.Vh

            def hpow(k):
                return jet_power(Vh, k, self._pow_h)

            c0 = (-1.0) ** m * hpow(m) + (-1.0) ** (m - 1) * jet_mul(
                self.a, hpow(m - 1)
            )
            c1 = (-1.0) ** (m - 1) * hpow(m - 1)
            if m >= 2:
                acc = sum(
                    jet_mul(hpow(m - k), jet_power(self.a, k - 2, self._pow_a))
                    for k in range(2, m + 1)
                )
                c2 = (-1.0) ** m * jet_mul(self.ghsq, acc)
            else:
                c2 = None
        self._pieces[m] = (c0, c1, c2)
        return self._pieces[m]

    def _apply_scalars(self, c0, c1, c2, v):
        """Apply c0 I + c1 (-(gh) x^T - x (gh)^T) + c2 x x^T to jet vector v."""
        dim = self.dim
        xv = self.rfield * sum(self.units[i] * v[:, i] for i in range(dim))
        ghv = None
        if c1 is not None:
            ghv = sum(jet_mul(self.Vgh[:, i], v[:, i]) for i in range(dim))
        out = np.zeros_like(v)
        c2xv = jet_mul(c2, xv) if c2 is not None else None
        for i in range(dim):
            acc = np.zeros_like(v[:, 0])
            if c0 is not None:
                acc += jet_mul(c0, v[:, i])
            if c1 is not None:
                acc -= jet_mul(
                    c1,
                    jet_mul(self.Vgh[:, i], xv)
                    + self.rfield * self.units[i] * ghv,
                )
            if c2xv is not None:
                acc += self.rfield * self.units[i] * c2xv
            out[:, i] = acc
        return out

    def apply_piece(self, m, v):
        """P_m applied to a jet vector field of values (J, dim, n_r, grid)."""
        c0, c1, c2 = self._piece_scalars(m)
        return self._apply_scalars(c0, c1, c2, v)

    def apply_full(self, v, minus_identity=False):
        """P (or P - I) applied to a jet vector field of values."""
        p0, p1, p2 = self._full
        out = self._apply_scalars(p0, p1, p2, v)
        if minus_identity:
            out -= v
        return out
