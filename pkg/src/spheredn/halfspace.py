"""Non-isotropic Sobolev norms on boxes, half-boxes, and planes.

The H^{s,r} norm weights the Fourier transform by

    m(xi) = (1 + |xi'|^2)^r (1 + |xi|^2)^s,

splitting xi = (xi', xi_n) into tangential and normal frequencies.  Ordinary
frequency is used throughout (transform kernel e^{-2 pi i x.xi}), so the
classical derivative corresponds to multiplication by 2 pi i xi.

Half-space fields live on a uniform grid over a periodic tangential box times
a normal interval [0, L_n); the norm of such a field is computed through an
explicit extension to the doubled box [-L_n, L_n):

  * s = 0: extension by zero.  For the multiplier above this reproduces the
    slice identity: the squared norm equals the integral over x_n > 0 of the
    squared tangential H^r norms of the slices (exactly, in the discrete sum).
  * s = 1: even reflection across x_n = 0.
  * s = 2: the two-point blend w(x', x_n) -> -3 w(x', -x_n) + 4 w(x', -x_n/2)
    for x_n < 0, which matches value and first derivative at x_n = 0.  The
    half-grid values come from cubic interpolation along the normal axis, and
    the field must fit in the lower half of the normal interval so that the
    stretched term has room (its support doubles).

All norms assume (and certify) that the field is compactly supported away
from the box edges, so periodization does not alias the answer.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "box_multiplier",
    "box_norm",
    "plane_norm",
    "embedding_constant",
    "spectral_derivative",
    "HalfSpaceField",
]


def _freq_grids(shape, extents):
    """Ordinary-frequency coordinate arrays, broadcastable to `shape`."""
    out = []
    for axis, (n, length) in enumerate(zip(shape, extents)):
        xi = np.fft.fftfreq(n, d=length / n)
        reshape = [1] * len(shape)
        reshape[axis] = n
        out.append(xi.reshape(reshape))
    return out


def box_multiplier(shape, extents, s, r):
    """(1+|xi'|^2)^r (1+|xi|^2)^s on the FFT grid of a periodic box."""
    freqs = _freq_grids(shape, extents)
    tang = np.zeros(())
    for xi in freqs[:-1]:
        tang = tang + xi**2
    full = tang + freqs[-1] ** 2
    m = (1.0 + full) ** s
    if r != 0:
        m = m * (1.0 + tang) ** r
    return np.broadcast_to(m, shape) if np.ndim(m) != len(shape) else m


def _norm_from_fft(values, extents, mult):
    n_total = values.size
    cell = np.prod([length / n for n, length in zip(values.shape, extents)])
    power = np.abs(np.fft.fftn(values)) ** 2
    return float(np.sqrt((mult * power).sum() * cell / n_total))


def box_norm(values, extents, s, r=0.0):
    """H^{s,r} multiplier norm of a field on a full periodic box."""
    values = np.asarray(values, dtype=float)
    return _norm_from_fft(values, extents, box_multiplier(values.shape, extents, s, r))


def plane_norm(values, extents, s):
    """Isotropic H^s multiplier norm of a field on a periodic plane box."""
    values = np.asarray(values, dtype=float)
    freqs = _freq_grids(values.shape, extents)
    xi2 = np.zeros(())
    for xi in freqs:
        xi2 = xi2 + xi**2
    return _norm_from_fft(values, extents, (1.0 + xi2) ** s)


def spectral_derivative(values, extents, axis, normalized=False):
    """Derivative along one axis of a periodic box field.

    The classical derivative multiplies the transform by 2 pi i xi; with
    normalized=True the symbol is i xi instead (unit slope), the version
    whose H^{s,r} -> H^{s,r+1} contraction has constant exactly 1.
    """
    values = np.asarray(values, dtype=float)
    xi = _freq_grids(values.shape, extents)[axis]
    factor = 1j * xi if normalized else 2j * np.pi * xi
    return np.fft.ifftn(np.fft.fftn(values) * factor).real


def embedding_constant(shape, extents, s, r):
    """Discrete sup-norm embedding constant: sqrt(sum m(xi)^-1 dxi).

    On the given grid, max|v| <= embedding_constant * box_norm(v, s, r)
    exactly (discrete Cauchy-Schwarz in frequency).
    """
    m = box_multiplier(shape, extents, s, r)
    dxi = np.prod([1.0 / length for length in extents])
    return float(np.sqrt((1.0 / m).sum() * dxi))


class HalfSpaceField:
    """Compactly supported samples on a tangential box times [0, L_n).

    values: array (n_1, ..., n_{n-1}, n_n); the last axis is the normal
    direction with coordinates k * L_n / n_n starting at the boundary plane.
    Tangential axes are periodic boxes of the given extents.
    """

    def __init__(self, values, extents):
        values = np.asarray(values, dtype=float)
        if values.ndim != len(extents):
            raise ValueError("values rank and extents length differ")
        if not np.all(np.isfinite(values)):
            raise ValueError("field has non-finite samples")
        self.values = values
        self.extents = tuple(float(length) for length in extents)

    @property
    def deltas(self):
        return tuple(
            length / n for n, length in zip(self.values.shape, self.extents)
        )

    def axis_coords(self, axis):
        """Grid coordinates along one axis (tangential axes centered at 0)."""
        n = self.values.shape[axis]
        d = self.extents[axis] / n
        if axis == self.values.ndim - 1 or axis == -1:
            return np.arange(n) * d
        return (np.arange(n) - n // 2) * d

    def support_leak(self):
        """Largest |value| on the box edges, relative to the overall scale."""
        scale = np.abs(self.values).max()
        if scale == 0.0:
            return 0.0
        worst = np.abs(self.values[..., -1]).max()
        for axis in range(self.values.ndim - 1):
            edge = np.take(self.values, [0, -1], axis=axis)
            worst = max(worst, np.abs(edge).max())
        return float(worst / scale)

    def check_support(self, rtol=1e-13):
        leak = self.support_leak()
        if leak > rtol:
            raise ValueError(
                f"field does not vanish at the box edge (relative leak {leak:.3e}); "
                "enlarge the box"
            )

    # -- extensions to the doubled box -------------------------------------

    def _doubled_extents(self):
        return self.extents[:-1] + (2.0 * self.extents[-1],)

    def extended(self, s):
        """Extension of the samples to the symmetric box [-L_n, L_n).

        Returns (values, extents) with the normal axis doubled; index n_n + k
        holds the value at x_n = (k - n_n) * delta_n < 0.
        """
        w = self.values
        n_n = w.shape[-1]
        zero_slab = np.zeros(w.shape[:-1] + (1,))
        if s == 0:
            ext = np.concatenate([w, np.zeros_like(w)], axis=-1)
        elif s == 1:
            ext = np.concatenate([w, zero_slab, w[..., :0:-1]], axis=-1)
        elif s == 2:
            # the -x_n/2 term pushes support out to twice its depth, so the
            # field must live in the lower half of the normal interval
            upper = np.abs(w[..., n_n // 2 :]).max()
            scale = np.abs(w).max()
            if scale > 0.0 and upper > 1e-13 * scale:
                raise ValueError(
                    "s=2 extension needs headroom: the field must vanish on "
                    "the upper half of the normal interval"
                )
            half = self._half_grid_values()
            m = np.arange(1, n_n)
            neg = -3.0 * w[..., m] + 4.0 * half[..., m]
            ext = np.concatenate([w, zero_slab, neg[..., ::-1]], axis=-1)
        else:
            raise ValueError("extension implemented for s in {0, 1, 2}")
        return ext, self._doubled_extents()

    def _half_grid_values(self):
        """Cubic interpolation of the normal axis onto spacing delta_n / 2."""
        w = self.values
        n_n = w.shape[-1]
        pad = np.concatenate([w, np.zeros(w.shape[:-1] + (2,))], axis=-1)
        half = np.empty(w.shape[:-1] + (2 * n_n,))
        half[..., 0::2] = w
        # midpoint between nodes q and q+1 from the 4-point stencil
        q = np.arange(1, n_n)
        half[..., 2 * q + 1] = (
            -pad[..., q - 1] + 9.0 * pad[..., q] + 9.0 * pad[..., q + 1] - pad[..., q + 2]
        ) / 16.0
        # one-sided stencil for the first midpoint
        half[..., 1] = (
            0.3125 * w[..., 0]
            + 0.9375 * w[..., 1]
            - 0.3125 * w[..., 2]
            + 0.0625 * w[..., 3]
        )
        return half

    # -- norms ---------------------------------------------------------------

    def hsr_norm(self, s, r=0.0, rtol=1e-13):
        """H^{s,r} norm via the extension surrogate for s in {0, 1, 2}."""
        self.check_support(rtol)
        ext, extents = self.extended(s)
        return box_norm(ext, extents, s, r)

    def slice_norms(self, r):
        """Tangential H^r norm of every normal slice: shape (n_n,)."""
        w = self.values
        mult = None
        out = np.empty(w.shape[-1])
        plane_extents = self.extents[:-1]
        for k in range(w.shape[-1]):
            sl = w[..., k]
            if mult is None:
                freqs = _freq_grids(sl.shape, plane_extents)
                xi2 = np.zeros(())
                for xi in freqs:
                    xi2 = xi2 + xi**2
                mult = (1.0 + xi2) ** r
            out[k] = _norm_from_fft(sl, plane_extents, mult)
        return out

    def trace_plane(self):
        """Boundary-plane samples and their extents."""
        return self.values[..., 0], self.extents[:-1]
