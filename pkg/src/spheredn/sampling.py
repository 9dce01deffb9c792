"""Seeded sample generators for scans, studies, and witness experiments.

Everything here is deterministic given its seed, so studies that freeze
expected values stay reproducible bit for bit.
"""

from __future__ import annotations

import numpy as np

from .ballfields import BallField, harmonic_extension
from .spectral import BoundaryField, mode_degrees, n_modes

__all__ = [
    "random_boundary_field",
    "shape_samples",
    "collar_field_samples",
    "GaussianMix",
    "gaussian_pack",
]


def _as_rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def random_boundary_field(dim, degree, seed, decay=2.0, norm_s=None, target=None):
    """Random band-limited field with power-law decay across degrees.

    With norm_s and target set, the field is rescaled so its spectral
    Sobolev norm of order norm_s equals target exactly.
    """
    rng = _as_rng(seed)
    degs = mode_degrees(dim, degree)
    coeffs = rng.standard_normal(n_modes(dim, degree)) * (1.0 + degs) ** (-decay)
    field = BoundaryField(dim, degree, coeffs)
    if target is not None:
        base = field.sobolev_norm(0.0 if norm_s is None else norm_s)
        if base == 0.0:
            raise ValueError("cannot rescale a zero sample")
        field = field * (target / base)
    return field


def shape_samples(dim, degree, count, seed, norm_s, cap, spread=(0.3, 1.0)):
    """Seeded shape perturbations with norms spread through (0, cap].

    Each sample is rescaled so its order-norm_s norm is cap times a uniform
    draw from the spread interval, giving a study a range of sizes while
    respecting the stated cap.
    """
    rng = _as_rng(seed)
    lo, hi = spread
    out = []
    for _ in range(count):
        size = cap * rng.uniform(lo, hi)
        out.append(
            random_boundary_field(
                dim, degree, rng, decay=2.0, norm_s=norm_s, target=size
            )
        )
    return out


def collar_field_samples(dim, degree, count, seed, rgrid):
    """Ball fields with varied radial structure for collar-norm studies.

    Each sample blends a harmonic extension with an even-polynomial radial
    modulation of a second one; the blend weight sweeps from zero to one so
    the family ranges continuously from harmonic profiles to strongly
    boundary-concentrated ones.
    """
    rng = _as_rng(seed)
    out = []
    weight = rgrid.r**2 - 0.3
    for i in range(count):
        t = i / max(count - 1, 1)
        f = random_boundary_field(dim, degree, rng, decay=1.5)
        g = random_boundary_field(dim, degree, rng, decay=1.5)
        base = harmonic_extension(f, rgrid)
        mod = harmonic_extension(g, rgrid)
        C = (1.0 - t) * base.C + t * mod.C * weight[:, None]
        out.append(BallField(dim, degree, rgrid, C))
    return out


class GaussianMix:
    """Analytic mixture of isotropic Gaussian bumps, callable at points."""

    def __init__(self, centers, sigmas, amps):
        self.centers = np.asarray(centers, dtype=float)
        self.sigmas = np.asarray(sigmas, dtype=float)
        self.amps = np.asarray(amps, dtype=float)
        if self.centers.ndim != 2:
            raise ValueError("centers must be (terms, dim)")
        self.dim = self.centers.shape[1]

    def __call__(self, pts):
        pts = np.asarray(pts, dtype=float)
        flat = pts.reshape(-1, self.dim)
        d2 = ((flat[:, None, :] - self.centers[None, :, :]) ** 2).sum(axis=2)
        vals = (self.amps * np.exp(-d2 / self.sigmas**2)).sum(axis=1)
        return vals.reshape(pts.shape[:-1])


def gaussian_pack(dim, count, seed, half_width, terms=3, edge_tol=1e-14):
    """Mixtures whose tails at the centered box edge stay below edge_tol.

    Sigma and center draws keep every bump at least sqrt(log(1/edge_tol))
    deviations away from the box boundary, so sampled fields pass support
    certificates without windowing.
    """
    rng = _as_rng(seed)
    need = float(np.sqrt(np.log(1.0 / edge_tol)))
    packs = []
    for _ in range(count):
        sigmas = half_width * rng.uniform(0.06, 0.12, size=terms)
        room = half_width - need * sigmas
        if np.any(room <= 0.0):
            raise ValueError("box too small for the requested tail tolerance")
        centers = rng.uniform(-1.0, 1.0, size=(terms, dim)) * room[:, None] * 0.95
        amps = rng.uniform(0.5, 1.5, size=terms) * rng.choice([-1.0, 1.0], size=terms)
        packs.append(GaussianMix(centers, sigmas, amps))
    return packs
