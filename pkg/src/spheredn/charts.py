"""Charts, atlas, partition of unity, and radial cut-off ladders.

The closed unit ball is covered by an interior cap K_0 = B_{1-delta}(0)
together with N boundary caps K_j = B_{2 delta}(p_j) whose centers p_j lie on
the unit sphere.  Each boundary cap carries a rotation R_j taking p_j to the
south pole p0 = (0, ..., 0, -1), and the south-pole chart pair

    f(x) = (-x'/x_n, 1 - |x|)                          (x_n < 0),
    g(y) = (1 - y_n) (1 + |y'|^2)^{-1/2} (y', -1)      (y_n < 1),

mutual inverses that flatten the sphere onto the plane {y_n = 0}.  Chart j is
f_j(x) = f(R_j x) with inverse g_j(y) = R_j^T g(y).

Transition maps between overlapping charts act on the tangential variable y'
only.  With (A, b; c, d) the blocks of R_l R_j^T they have the closed form
T(y') = (-b + A y')/(d - c.y').  An extended version blends T into an affine
map outside |y'| = 8 delta, giving a diffeomorphism of the whole plane that
is inverted here by Newton iteration with an analytic Jacobian.

The partition of unity is Shepard-normalized: a smooth radial profile hands
control from the interior cap to compactly supported bumps centered at the
p_j, so psi_0 + sum_j psi_j = 1 on the closed ball, each psi_j is supported
strictly inside K_j, and sum_{j>=1} psi_j = 1 on the annulus 1-delta <= |x|.

CutoffFamily provides nested radial cut-offs zeta_k — zero inside radius
rho_{k+1}, one outside rho_k — whose transition widths shrink like 2^{-k},
plus a half-scale starred family that equals one on every supp(zeta_k).
"""

from __future__ import annotations

import json
import math

import numpy as np

__all__ = [
    "smooth_step",
    "smooth_step_d1",
    "plateau",
    "plateau_d1",
    "bump_profile",
    "chart_f",
    "chart_g",
    "rotation_to_south",
    "Atlas",
    "CutoffFamily",
]


# ---------------------------------------------------------------------------
# smooth one-dimensional profiles


def smooth_step(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1, strictly increasing between."""
    t = np.asarray(t, dtype=float)
    out = np.where(t >= 1.0, 1.0, 0.0)
    inside = (t > 0.0) & (t < 1.0)
    if np.any(inside):
        ti = t[inside]
        with np.errstate(divide="ignore", over="ignore", under="ignore"):
            a = np.exp(-1.0 / ti)
            b = np.exp(-1.0 / (1.0 - ti))
        out[inside] = a / (a + b)
    return out


def smooth_step_d1(t):
    """Derivative of smooth_step (exactly zero outside (0, 1))."""
    t = np.asarray(t, dtype=float)
    out = np.zeros(t.shape)
    # exp(-1/t) underflows to 0.0 for t < 1/709, where the float step is
    # constant anyway; restrict to the band where the quotient is nonzero.
    inside = (t > 2e-3) & (t < 1.0 - 2e-3)
    if np.any(inside):
        ti = t[inside]
        a = np.exp(-1.0 / ti)
        b = np.exp(-1.0 / (1.0 - ti))
        out[inside] = a * b * (1.0 / ti**2 + 1.0 / (1.0 - ti) ** 2) / (a + b) ** 2
    return out


def plateau(t):
    """C-infinity plateau: 1 for t <= 1, 0 for t >= 2, decreasing between."""
    return smooth_step(2.0 - np.asarray(t, dtype=float))


def plateau_d1(t):
    """Derivative of plateau."""
    return -smooth_step_d1(2.0 - np.asarray(t, dtype=float))


def bump_profile(t):
    """Compactly supported bump exp(-1/(1-t^2)) for |t| < 1, else 0."""
    t = np.asarray(t, dtype=float)
    out = np.zeros(t.shape)
    inside = np.abs(t) < 1.0
    if np.any(inside):
        ti = t[inside]
        out[inside] = np.exp(-1.0 / (1.0 - ti * ti))
    return out


# ---------------------------------------------------------------------------
# the south-pole chart pair


def chart_f(x):
    """Flatten near the south pole: x -> (-x'/x_n, 1 - |x|); needs x_n < 0."""
    x = np.asarray(x, dtype=float)
    xn = x[..., -1]
    if np.any(xn >= 0.0):
        raise ValueError("chart_f requires x_n < 0")
    y = np.empty_like(x)
    y[..., :-1] = -x[..., :-1] / xn[..., None]
    y[..., -1] = 1.0 - np.linalg.norm(x, axis=-1)
    return y


def chart_g(y):
    """Inverse of chart_f: y -> (1 - y_n)(1 + |y'|^2)^{-1/2}(y', -1); needs y_n < 1."""
    y = np.asarray(y, dtype=float)
    yn = y[..., -1]
    if np.any(yn >= 1.0):
        raise ValueError("chart_g requires y_n < 1")
    s = (1.0 - yn) / np.sqrt(1.0 + (y[..., :-1] ** 2).sum(axis=-1))
    x = np.empty_like(y)
    x[..., :-1] = s[..., None] * y[..., :-1]
    x[..., -1] = -s
    return x


def _plane_to_unit(yp):
    """Unit vectors (1 + |y'|^2)^{-1/2}(y', -1) for plane points y' (..., dim-1)."""
    yp = np.asarray(yp, dtype=float)
    s = 1.0 / np.sqrt(1.0 + (yp**2).sum(axis=-1))
    u = np.empty(yp.shape[:-1] + (yp.shape[-1] + 1,))
    u[..., :-1] = s[..., None] * yp
    u[..., -1] = -s
    return u


def rotation_to_south(p):
    """Rotation matrix R with R p = (0, ..., 0, -1), for a unit vector p."""
    p = np.asarray(p, dtype=float)
    dim = p.shape[-1]
    south = np.zeros(dim)
    south[-1] = -1.0
    u = p / np.linalg.norm(p)
    pre = np.eye(dim)
    if u @ south < -0.5:
        # near the north pole the direct formula is ill-conditioned; first
        # rotate by pi in the (e_1, e_n) plane, which already reaches south
        pre[0, 0] = -1.0
        pre[-1, -1] = -1.0
        u = pre @ u
    s = u + south
    R = np.eye(dim) - np.outer(s, s) / (1.0 + u @ south) + 2.0 * np.outer(south, u)
    return R @ pre


# ---------------------------------------------------------------------------
# center generation and covering measurement


def _sphere_centers(dim, n):
    if dim == 2:
        th = 2.0 * np.pi * np.arange(n) / n
        return np.stack([np.cos(th), np.sin(th)], axis=1)
    i = np.arange(n)
    golden = np.pi * (3.0 - math.sqrt(5.0))
    z = 1.0 - (2.0 * i + 1.0) / n
    rho = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    th = golden * i
    return np.stack([rho * np.cos(th), rho * np.sin(th), z], axis=1)


def _test_directions(dim, m):
    """Dense direction set used to measure covering radii (offset lattice)."""
    if dim == 2:
        th = 2.0 * np.pi * (np.arange(m) + 0.37) / m
        return np.stack([np.cos(th), np.sin(th)], axis=1)
    i = np.arange(m)
    golden = np.pi * (3.0 - math.sqrt(5.0))
    z = 1.0 - (2.0 * i + 1.0) / m
    rho = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    th = golden * i + 0.37
    pts = np.stack([rho * np.cos(th), rho * np.sin(th), z], axis=1)
    poles = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]])
    return np.concatenate([pts, poles], axis=0)


def _max_min_chord(dirs, centers):
    """max over dirs of the chordal distance to the nearest center."""
    worst = 0.0
    for lo in range(0, dirs.shape[0], 8192):
        block = dirs[lo : lo + 8192]
        dots = np.clip(block @ centers.T, -1.0, 1.0)
        d2 = 2.0 - 2.0 * dots.max(axis=1)
        worst = max(worst, float(np.sqrt(max(d2.max(), 0.0))))
    return worst


# ---------------------------------------------------------------------------
# the atlas


class Atlas:
    """Boundary charts, rotations, and the partition of unity.

    Scales (relative to delta): bumps have radius 1.95*delta < 2*delta around
    each center, so every psi_j is supported strictly inside K_j; the radial
    hand-off from the interior cap happens across [1-1.15*delta, 1-1.05*delta],
    so psi_0 is supported strictly inside K_0 = B_{1-delta} while the bump sum
    alone equals 1 on the annulus 1-delta <= |x| <= 1.  Center covering is
    verified numerically: every direction must be within chordal distance
    1.30*delta of some center (build) and the bump sum must stay above a
    strictly positive floor on the annulus (constructor).
    """

    BUMP_FACTOR = 1.95
    RADIAL_INNER = 1.15
    RADIAL_OUTER = 1.05
    COVER_TARGET = 1.30

    def __init__(self, dim, delta, centers, rotations):
        if dim not in (2, 3):
            raise ValueError("dim must be 2 or 3")
        if not 0.0 < delta < 0.125:
            raise ValueError("delta must lie in (0, 1/8)")
        centers = np.asarray(centers, dtype=float)
        rotations = np.asarray(rotations, dtype=float)
        n = centers.shape[0]
        if centers.shape != (n, dim) or rotations.shape != (n, dim, dim):
            raise ValueError("centers/rotations shapes are inconsistent")
        self.dim = dim
        self.delta = float(delta)
        self.centers = centers
        self.rotations = rotations
        self.south = np.zeros(dim)
        self.south[-1] = -1.0
        eye = np.eye(dim)
        for j in range(n):
            R = rotations[j]
            if np.abs(R @ R.T - eye).max() > 1e-13:
                raise ValueError(f"rotation {j} is not orthogonal")
            if np.abs(R @ centers[j] - self.south).max() > 1e-13:
                raise ValueError(f"rotation {j} does not send its center south")
        # neighbor lists: charts whose caps can meet (|p_k - p_j| < 4 delta)
        dots = np.clip(centers @ centers.T, -1.0, 1.0)
        self._overlap = (2.0 - 2.0 * dots) < (4.0 * delta) ** 2
        self._neighbors = [np.nonzero(self._overlap[j])[0] for j in range(n)]
        self._check_annulus_floor()

    # -- construction -------------------------------------------------------

    @classmethod
    def build(cls, dim, delta=0.1, n_charts=None):
        """Build an atlas, sizing the center count by measured covering radius."""
        if not 0.0 < delta < 0.125:
            raise ValueError("delta must lie in (0, 1/8)")
        target = cls.COVER_TARGET * delta
        if n_charts is None:
            if dim == 2:
                n = int(math.ceil(math.pi / (2.0 * math.asin(target / 2.0))))
            else:
                n = int(math.ceil((2.3 / target) ** 2))
            while True:
                centers = _sphere_centers(dim, n)
                dirs = _test_directions(dim, 211 * n)
                if _max_min_chord(dirs, centers) <= target:
                    break
                n = int(math.ceil(n * 1.12))
        else:
            n = int(n_charts)
            centers = _sphere_centers(dim, n)
        rotations = np.stack([rotation_to_south(p) for p in centers])
        return cls(dim, delta, centers, rotations)

    def _check_annulus_floor(self):
        """The bump sum must stay well above zero wherever it must carry weight."""
        dirs = _test_directions(self.dim, 211 * self.n_charts)
        radii = np.array(
            [
                1.0 - self.RADIAL_INNER * self.delta,
                1.0 - self.delta,
                1.0 - self.RADIAL_OUTER * self.delta,
                1.0,
            ]
        )
        scale = self.BUMP_FACTOR * self.delta
        floor = np.inf
        for r in radii:
            for lo in range(0, dirs.shape[0], 8192):
                v = dirs[lo : lo + 8192]
                d2 = r * r + 1.0 - 2.0 * r * (v @ self.centers.T)
                b = bump_profile(np.sqrt(np.maximum(d2, 0.0)) / scale)
                floor = min(floor, float(b.sum(axis=1).min()))
        if floor < 1e-7:
            raise ValueError(
                f"bump sum reaches {floor:.3e} on the annulus; "
                "centers do not cover densely enough"
            )

    # -- basic geometry ------------------------------------------------------

    @property
    def n_charts(self):
        return self.centers.shape[0]

    @property
    def disc_radius(self):
        """Radius of the plane image of a sphere cap of chordal radius 2*delta."""
        d = self.delta
        return 2.0 * d * math.sqrt(1.0 - d * d) / (1.0 - 2.0 * d * d)

    def chart_f_j(self, j, x):
        return chart_f(np.asarray(x, dtype=float) @ self.rotations[j].T)

    def chart_g_j(self, j, y):
        return chart_g(y) @ self.rotations[j]

    def chart_dirs(self, j, yp):
        """Ambient unit directions of chart j over plane points y'."""
        return _plane_to_unit(yp) @ self.rotations[j]

    # -- partition of unity --------------------------------------------------

    def radial_profile(self, r):
        """Smooth 0 -> 1 hand-off across [1-1.15 delta, 1-1.05 delta]."""
        r0 = 1.0 - self.RADIAL_INNER * self.delta
        r1 = 1.0 - self.RADIAL_OUTER * self.delta
        return smooth_step((np.asarray(r, dtype=float) - r0) / (r1 - r0))

    def _bump_matrix(self, x):
        """(npts, N) bump values at ambient points x."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        r2 = (x**2).sum(axis=1)
        d2 = r2[:, None] + 1.0 - 2.0 * (x @ self.centers.T)
        scale = self.BUMP_FACTOR * self.delta
        return bump_profile(np.sqrt(np.maximum(d2, 0.0)) / scale)

    def psi_values(self, x):
        """All chart partition functions at ambient points: (N, npts)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        b = self._bump_matrix(x)
        total = b.sum(axis=1)
        rad = self.radial_profile(np.linalg.norm(x, axis=1))
        safe = np.where(total > 0.0, total, 1.0)
        return (rad / safe)[None, :] * b.T

    def psi0_values(self, x):
        """Interior partition function at ambient points: (npts,)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return 1.0 - self.radial_profile(np.linalg.norm(x, axis=1))

    def psi_tensor(self, j, radii, dirs):
        """psi_j on the tensor grid {r * v}: shape (len(radii), len(dirs)).

        Uses only the charts neighboring j; correct wherever psi_j itself can
        be nonzero (outside supp psi_j the value is forced to 0).
        """
        radii = np.asarray(radii, dtype=float)
        dirs = np.asarray(dirs, dtype=float)
        scale = self.BUMP_FACTOR * self.delta
        nbrs = self._neighbors[j]
        G = dirs @ self.centers[nbrs].T  # (n_dirs, m)
        r2p1 = (radii**2 + 1.0)[:, None]
        total = np.zeros((radii.size, dirs.shape[0]))
        bj = None
        for col, k in enumerate(nbrs):
            d2 = r2p1 - 2.0 * radii[:, None] * G[:, col][None, :]
            bk = bump_profile(np.sqrt(np.maximum(d2, 0.0)) / scale)
            total += bk
            if k == j:
                bj = bk
        rad = self.radial_profile(radii)[:, None]
        safe = np.where(total > 0.0, total, 1.0)
        return np.where(bj > 0.0, rad * bj / safe, 0.0)

    # -- transitions ---------------------------------------------------------

    def overlapping_pairs(self):
        """Ordered pairs (j, l), j != l, whose caps K_j, K_l intersect."""
        n = self.n_charts
        return [
            (j, ell)
            for j in range(n)
            for ell in range(n)
            if j != ell and self._overlap[j, ell]
        ]

    def _require_overlap(self, ell, j):
        if not self._overlap[ell, j]:
            raise ValueError(f"charts {ell} and {j} do not overlap")

    def transition_blocks(self, ell, j):
        """Blocks (A, b, c, d) of R_l R_j^T (A matrix, b/c vectors, d scalar)."""
        R = self.rotations[ell] @ self.rotations[j].T
        return R[:-1, :-1], R[:-1, -1], R[-1, :-1], R[-1, -1]

    def transition_formula(self, ell, j, yp):
        """Tangential transition T(y') = (-b + A y')/(d - c.y') for chart j -> l."""
        self._require_overlap(ell, j)
        A, b, c, d = self.transition_blocks(ell, j)
        yp = np.asarray(yp, dtype=float)
        denom = d - yp @ c
        if np.any(denom <= 0.0):
            raise ValueError("plane point leaves the transition domain")
        return (-b + yp @ A.T) / denom[..., None]

    def transition_direct(self, ell, j, y):
        """Full chart change f_l(g_j(y)); keeps the last coordinate."""
        self._require_overlap(ell, j)
        return self.chart_f_j(ell, self.chart_g_j(j, y))

    def _extended_parts(self, ell, j, yp):
        A, b, c, d = self.transition_blocks(ell, j)
        lam = 1.0 / d
        M = A * d - np.outer(b, c)
        yp = np.asarray(yp, dtype=float)
        r = np.linalg.norm(yp, axis=-1)
        t = r / (4.0 * self.delta)
        phi = plateau(t)
        q = lam * (yp @ c)
        live = phi > 0.0
        S = np.where(live, q / np.where(live, 1.0 - q, 1.0), 0.0)
        return A, b, c, d, lam, M, yp, r, t, phi, S

    def transition_extended(self, ell, j, yp):
        """Transition blended to an affine map outside |y'| = 8 delta."""
        self._require_overlap(ell, j)
        _, b, _, _, lam, M, yp, _, _, phi, S = self._extended_parts(ell, j, yp)
        factor = 1.0 + phi * S
        return -lam * b + lam**2 * factor[..., None] * (yp @ M.T)

    def transition_extended_jacobian(self, ell, j, yp):
        """Analytic Jacobian of transition_extended: (..., dim-1, dim-1)."""
        self._require_overlap(ell, j)
        _, b, c, _, lam, M, yp, r, t, phi, S = self._extended_parts(ell, j, yp)
        q = lam * (yp @ c)
        live = phi > 0.0
        dS = np.where(live, lam / np.where(live, (1.0 - q) ** 2, 1.0), 0.0)
        rsafe = np.where(r > 0.0, r, 1.0)
        grad_phi = (plateau_d1(t) / (4.0 * self.delta * rsafe))[..., None] * yp
        grad_psi = S[..., None] * grad_phi + (phi * dS)[..., None] * c
        My = yp @ M.T
        eyeblock = (1.0 + phi * S)[..., None, None] * M
        rank1 = My[..., :, None] * grad_psi[..., None, :]
        return lam**2 * (eyeblock + rank1)

    def transition_extended_inverse(self, ell, j, z, tol=1e-12, max_iter=60):
        """Invert the extended transition by Newton from the affine guess."""
        self._require_overlap(ell, j)
        A, b, c, d = self.transition_blocks(ell, j)
        lam = 1.0 / d
        M = A * d - np.outer(b, c)
        z = np.asarray(z, dtype=float)
        flat = z.reshape(-1, z.shape[-1])
        y = np.linalg.solve(M, (flat + lam * b).T).T / lam**2
        for _ in range(max_iter):
            F = self.transition_extended(ell, j, y) - flat
            if np.abs(F).max() <= tol:
                return y.reshape(z.shape)
            J = self.transition_extended_jacobian(ell, j, y)
            y = y - np.linalg.solve(J, F[..., None])[..., 0]
        F = self.transition_extended(ell, j, y) - flat
        if np.abs(F).max() <= tol:
            return y.reshape(z.shape)
        raise RuntimeError(
            "extended transition inverse: Newton stalled at residual "
            f"{np.abs(F).max():.3e} (evidence that delta is too large)"
        )

    # -- serialization -------------------------------------------------------

    def to_json(self):
        return json.dumps(
            {
                "dim": self.dim,
                "delta": self.delta,
                "centers": self.centers.tolist(),
                "rotations": self.rotations.tolist(),
            }
        )

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        return cls(d["dim"], d["delta"], np.array(d["centers"]), np.array(d["rotations"]))

    def __repr__(self):
        return f"Atlas(dim={self.dim}, delta={self.delta}, n_charts={self.n_charts})"


# ---------------------------------------------------------------------------
# radial cut-off ladders


class CutoffFamily:
    """Nested radial cut-offs zeta_k and the half-scale starred family.

    rho_k = 1 - s*(2 - 2^-k) with s = delta/4 (plain) or delta/2 (starred);
    zeta_k(r) climbs smoothly from 0 at r = rho_{k+1} to 1 at r = rho_k, so
    each zeta_k vanishes inside rho_{k+1}, equals 1 outside rho_k, and its
    transition width (delta/4) 2^{-(k+1)} forces derivative growth ~ 2^{k|a|}.
    Because every starred radius sits below every plain support radius, each
    starred cut-off equals 1 on the support of every plain one.
    """

    def __init__(self, delta, k_max=8):
        if not 0.0 < delta < 0.125:
            raise ValueError("delta must lie in (0, 1/8)")
        self.delta = float(delta)
        self.k_max = int(k_max)

    def _scale(self, starred):
        return self.delta / 2.0 if starred else self.delta / 4.0

    def rho(self, k, starred=False):
        """Cut radius rho_k (decreasing in k)."""
        if not 0 <= k <= self.k_max + 1:
            raise ValueError(f"k must lie in [0, {self.k_max + 1}]")
        return 1.0 - self._scale(starred) * (2.0 - 0.5**k)

    def zeta(self, k, r, starred=False):
        """Cut-off value at radii r: 0 for r <= rho_{k+1}, 1 for r >= rho_k."""
        if not 0 <= k <= self.k_max:
            raise ValueError(f"k must lie in [0, {self.k_max}]")
        lo = self.rho(k + 1, starred)
        hi = self.rho(k, starred)
        return smooth_step((np.asarray(r, dtype=float) - lo) / (hi - lo))

    def support_radius(self, k, starred=False):
        """Inner edge of supp(zeta_k)."""
        return self.rho(k + 1, starred)

    def transition_interval(self, k, starred=False):
        """(rho_{k+1}, rho_k): where zeta_k climbs from 0 to 1."""
        return self.rho(k + 1, starred), self.rho(k, starred)
