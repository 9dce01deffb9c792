"""Chart-based norms: sphere norms and layered half-space seminorms.

The sphere norm of a boundary field is assembled chart by chart: multiply by
one partition piece, pull back through that chart's graph map, and take the
flat-plane Sobolev norm of the compactly supported result, summing over
charts.  The layered seminorm of a ball field does the same with an extra
boundary-collar cutoff and an anisotropic half-space norm, so tangential and
normal regularity can be weighted independently.

Both routines evaluate whole batches of fields per chart through a single
basis-matrix product, which keeps multi-field studies at matmul speed.
"""

from __future__ import annotations

import math

import numpy as np

from .ballfields import BallField, _apply_parity
from .charts import Atlas, CutoffFamily
from .halfspace import HalfSpaceField, plane_norm
from .spectral import BoundaryField, basis_matrix

__all__ = [
    "plane_support_radius",
    "chart_plane_values",
    "chart_norm",
    "x_seminorm_table",
    "x_seminorm",
]


def plane_support_radius(delta):
    """Largest plane radius any partition piece can reach in its own chart.

    A piece is supported in a chordal ball of radius B = 1.95*delta around
    its center; over all radii in the collar the pulled-back support stays
    inside the plane disc of radius B / sqrt(1 - B^2).
    """
    b = Atlas.BUMP_FACTOR * delta
    if not b < 1.0:
        raise ValueError("delta too large for a plane support bound")
    return b / math.sqrt(1.0 - b * b)


def _plane_grid(dim, half_width, n_plane):
    """FFT-ready centered grid on [-W, W)^(dim-1): axes plus flat points."""
    axis = (np.arange(n_plane) - n_plane // 2) * (2.0 * half_width / n_plane)
    if dim == 2:
        return (axis,), axis[:, None]
    mesh = np.meshgrid(axis, axis, indexing="ij")
    flat = np.stack([m.ravel() for m in mesh], axis=-1)
    return (axis, axis), flat


def _stack_boundary(fields):
    """Common (dim, degree) and a (n_fields, n_modes) coefficient stack."""
    if isinstance(fields, BoundaryField):
        fields = [fields]
    fields = list(fields)
    if not fields:
        raise ValueError("no fields given")
    dim = fields[0].dim
    if any(f.dim != dim for f in fields):
        raise ValueError("fields mix dimensions")
    degree = max(f.degree_cut for f in fields)
    coeffs = np.stack([f.padded(degree).coeffs for f in fields])
    return dim, degree, coeffs


def _default_n_plane(dim):
    return 256 if dim == 2 else 48


def chart_plane_values(field, atlas, j, n_plane=None, box_factor=1.12):
    """One chart's plane trace: the cut-off field pulled back at height zero.

    Returns (axes, values) where values samples (u * psi_j) on the centered
    plane grid of that chart.  Mostly a debugging/diagnostic hook; the norm
    routines inline the same evaluation in batched form.
    """
    dim, degree, coeffs = _stack_boundary(field)
    if n_plane is None:
        n_plane = _default_n_plane(dim)
    half = box_factor * plane_support_radius(atlas.delta)
    axes, flat = _plane_grid(dim, half, n_plane)
    dirs = atlas.chart_dirs(j, flat)
    vals = basis_matrix(dim, degree, dirs) @ coeffs[0]
    psi = atlas.psi_tensor(j, np.array([1.0]), dirs)[0]
    shape = (n_plane,) * (dim - 1)
    return axes, (vals * psi).reshape(shape)


def chart_norm(fields, atlas, s, n_plane=None, box_factor=1.12):
    """Sphere Sobolev norm via charts: sum over pieces of plane H^s norms.

    fields may be a single BoundaryField or a sequence; a batch returns one
    norm per field.  All pieces are supported strictly inside the plane box,
    which is checked at the box edge before any transform is taken.
    """
    single = isinstance(fields, BoundaryField)
    dim, degree, coeffs = _stack_boundary(fields)
    if dim != atlas.dim:
        raise ValueError("field dimension does not match the atlas")
    if n_plane is None:
        n_plane = _default_n_plane(dim)
    half = box_factor * plane_support_radius(atlas.delta)
    extents = (2.0 * half,) * (dim - 1)
    _, flat = _plane_grid(dim, half, n_plane)
    shape = (n_plane,) * (dim - 1)
    totals = np.zeros(coeffs.shape[0])
    for j in range(atlas.n_charts):
        dirs = atlas.chart_dirs(j, flat)
        psi = atlas.psi_tensor(j, np.array([1.0]), dirs)[0]
        vals = (basis_matrix(dim, degree, dirs) @ coeffs.T) * psi[:, None]
        boxed = vals.T.reshape((coeffs.shape[0],) + shape)
        scale = np.abs(boxed).max()
        if scale > 0.0:
            edge = max(
                float(np.abs(np.take(boxed, 0, axis=ax)).max())
                for ax in range(1, boxed.ndim)
            )
            if edge > 1e-12 * scale:
                raise ValueError(
                    "chart support reaches the plane box edge; increase box_factor"
                )
        for i in range(coeffs.shape[0]):
            totals[i] += plane_norm(boxed[i], extents, s)
    return float(totals[0]) if single else totals


def _as_ball_fields(fields):
    if isinstance(fields, BallField):
        fields = [fields]
    fields = list(fields)
    if not fields:
        raise ValueError("no fields given")
    dim = fields[0].dim
    degree = fields[0].degree_cut
    if any(f.dim != dim or f.degree_cut != degree for f in fields):
        raise ValueError("ball fields must share one dimension and degree cut")
    return dim, degree, fields


def x_seminorm_table(
    fields,
    atlas,
    cutoffs,
    entries,
    *,
    starred=False,
    n_plane=None,
    n_normal=192,
    normal_extent=None,
    box_factor=1.12,
):
    """Layered collar seminorms for a batch of ball fields.

    entries is a list of (s, r, k) triples; the result has shape
    (len(entries), n_fields) with entry [e, i] the sum over charts of the
    anisotropic half-space norm of (u_i * zeta_k * psi_j) in chart
    coordinates.  The interior partition piece never meets the collar
    cutoffs, so only boundary charts contribute.  The expensive per-chart
    tensors (basis matrix, partition values) are shared across all fields
    and all entries.
    """
    dim, degree, fields = _as_ball_fields(fields)
    if dim != atlas.dim:
        raise ValueError("field dimension does not match the atlas")
    if not isinstance(cutoffs, CutoffFamily):
        raise ValueError("cutoffs must be a CutoffFamily")
    entries = [(float(s), float(r), int(k)) for (s, r, k) in entries]
    if n_plane is None:
        n_plane = _default_n_plane(dim)
    half = box_factor * plane_support_radius(atlas.delta)
    length = normal_extent if normal_extent is not None else 2.4 * atlas.delta
    extents = (2.0 * half,) * (dim - 1) + (float(length),)
    _, flat = _plane_grid(dim, half, n_plane)
    shape = (n_plane,) * (dim - 1)
    yn = np.arange(n_normal) * (length / n_normal)
    radii = 1.0 - yn
    active = atlas.radial_profile(radii) > 0.0
    if bool(active[-1]):
        raise ValueError("normal_extent does not clear the collar support")
    zetas = {}
    for s, r, k in entries:
        if k not in zetas:
            zetas[k] = cutoffs.zeta(k, radii, starred=starred)
    pair_cache = {}
    for f in fields:
        key = id(f.rgrid)
        if key not in pair_cache:
            pair_cache[key] = f.rgrid.interp_pair(radii)
    out = np.zeros((len(entries), len(fields)))
    cell = float(np.prod(np.array(extents) / np.array(shape + (n_normal,))))
    for j in range(atlas.n_charts):
        dirs = atlas.chart_dirs(j, flat)
        bmat = basis_matrix(dim, degree, dirs)
        psi = np.zeros((n_normal, flat.shape[0]))
        psi[active] = atlas.psi_tensor(j, radii[active], dirs)
        for i, f in enumerate(fields):
            prof = _apply_parity(pair_cache[id(f.rgrid)], f.C, f.deg)
            vals = (prof @ bmat.T) * psi
            for e, (s, r, k) in enumerate(entries):
                w = vals * zetas[k][:, None]
                if s == 0.0 and r == 0.0:
                    # the multiplier is identically one, so the norm is the
                    # plain discrete L2 sum without any transform
                    out[e, i] += math.sqrt(float((w * w).sum()) * cell)
                    continue
                boxed = np.ascontiguousarray(w.T.reshape(shape + (n_normal,)))
                out[e, i] += HalfSpaceField(boxed, extents).hsr_norm(s, r)
    return out


def x_seminorm(field, atlas, cutoffs, k, s=0.0, r=0.0, **kwargs):
    """Single-entry convenience wrapper around x_seminorm_table."""
    table = x_seminorm_table([field], atlas, cutoffs, [(s, r, k)], **kwargs)
    return float(table[0, 0])
