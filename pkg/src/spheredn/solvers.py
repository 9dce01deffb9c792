"""Interior solvers for the transformed potential on the unit ball.

The transformed problem is div(P grad u) = 0 with u = psi on the boundary,
P from a ShapeState. Two routes to the same solution:

* series_solve: expand P = I + sum P_m by homogeneity in the shape and solve

      u_0 = harmonic extension of psi,
      u_m = S( sum_{k<m} P_{m-k} grad u_k ),

  where S g is the zero-trace field with int grad(S g).grad v = -int g.grad v
  for all zero-trace v. The term sizes ||u_m||_{H^1} are the empirical handle
  on the convergence radius, so they are recorded on the solution.

* fixed_point_solve: iterate u <- PI psi + S((P - I) grad u), a contraction
  for shapes with positive margin. Raises NonContraction when the iteration
  visibly fails to contract.

Both support jets: all value arrays carry a leading Taylor-order axis and the
products inside P are jet products, so parameter derivatives of the solution
come out of the same recursion.
"""

import math

import numpy as np

from .ballfields import (
    BallField,
    VectorBallField,
    _apply_parity,
    gradient,
    harmonic_extension,
    poisson_div_solve,
)
from .spectral import analyze_values, mode_degrees, n_modes, synth_coeffs


class NonContraction(RuntimeError):
    """The fixed-point map is not contracting for this geometry."""

    def __init__(self, message, diffs=None):
        super().__init__(message)
        self.diffs = diffs or []


def _grad_values(state, U):
    """Gradient values (J, dim, n_r, grid) of capped jet coefficients U."""
    J = U.shape[0]
    dim, rg, grid = state.dim, state.rgrid, state.grid
    out = np.zeros((J, dim, rg.n_r) + grid.shape)
    for j in range(J):
        gv = gradient(BallField(dim, state.L_cap, rg, U[j]))
        for i in range(dim):
            out[j, i] = gv.component(i).synth(grid)
    return out


def _h1_norms(state, U):
    """Per-jet-order H^1 norms of capped coefficients U (J, n_r, n_modes)."""
    return np.array(
        [
            BallField(state.dim, state.L_cap, state.rgrid, U[j]).h1_norm()
            for j in range(U.shape[0])
        ]
    )


def _solve_once(state, gvals):
    """Coefficients of S applied to jet vector values; also worst residual."""
    dim, rg, grid, L = state.dim, state.rgrid, state.grid, state.L_cap
    J = gvals.shape[0]
    Gc = analyze_values(dim, L, gvals, grid)  # (J, dim, n_r, nm)
    out = np.zeros((J, rg.n_r, n_modes(dim, L)))
    worst = 0.0
    for j in range(J):
        sol = poisson_div_solve(VectorBallField(dim, L, rg, Gc[j]), out_degree=L)
        out[j] = sol.C
        worst = max(worst, sol.residual)
    return out, worst


def _fit_tail_ratio(norms):
    """Geometric decay/growth rate of the series tail, by log-linear fit.

    Returns None when fewer than three usable terms exist.
    """
    norms = np.asarray(norms, dtype=float)
    mask = norms > 1e-280
    idx = np.nonzero(mask)[0]
    if idx.size < 3:
        return None
    take = idx[-max(3, idx.size // 2):]
    y = np.log(norms[take])
    slope = np.polyfit(take.astype(float), y, 1)[0]
    return float(math.exp(slope))


class SeriesSolution:
    """Outcome of the homogeneity-series solve.

    Attributes
    ----------
    U : ndarray (jet_len, n_r, n_modes) -- summed solution coefficients
    term_norms : ndarray (n_terms, jet_len) -- H^1 size of each term
    converged : bool -- stopping tolerance reached before the term budget
    m_used : int -- highest homogeneity retained
    fitted_ratio : float or None -- geometric rate of the order-0 tail
    residual : float -- worst relative weak residual over all solves
    terms : list of per-term coefficient arrays (only when keep_terms=True)
    """

    def __init__(self, state, U, term_norms, converged, residual, terms):
        self.state = state
        self.U = U
        self.term_norms = term_norms
        self.converged = converged
        self.residual = residual
        self.terms = terms
        self.m_used = len(term_norms) - 1
        self.fitted_ratio = _fit_tail_ratio(term_norms[:, 0])

    def ball(self, order=0):
        return BallField(
            self.state.dim, self.state.L_cap, self.state.rgrid, self.U[order]
        )

    def partial_sum(self, M):
        """Coefficients of the partial sum through homogeneity M."""
        if self.terms is None:
            raise ValueError("series terms were not kept")
        return sum(self.terms[: M + 1])


def series_solve(state, psi, M_max=32, tol=1e-12, M_fixed=None, keep_terms=False):
    """Sum the homogeneity series for the transformed potential.

    psi : BoundaryField boundary data (degree_cut <= state.L_cap).
    M_max : term budget; the tol test stops earlier when the terms decay.
    M_fixed : run exactly this many correction terms, ignoring tol (used by
        finite-difference checks, where an adaptive stop adds noise).
    keep_terms : retain per-term coefficients for partial-sum diagnostics.
    """
    if psi.dim != state.dim:
        raise ValueError("boundary data dimension mismatch")
    if psi.degree_cut > state.L_cap:
        raise ValueError("boundary data exceeds the degree cap")
    J = state.jet_len
    rg = state.rgrid
    nm = n_modes(state.dim, state.L_cap)
    U0 = np.zeros((J, rg.n_r, nm))
    U0[0] = harmonic_extension(psi.padded(state.L_cap), rg).C
    total = U0.copy()
    terms = [U0.copy()] if keep_terms else None
    norms = [_h1_norms(state, U0)]
    grads = [_grad_values(state, U0)]
    base = max(float(norms[0][0]), 1e-300)
    converged = False
    residual = 0.0
    budget = M_max if M_fixed is None else M_fixed
    for m in range(1, budget + 1):
        gvals = state.apply_piece(m, grads[0])
        for k in range(1, m):
            gvals += state.apply_piece(m - k, grads[k])
        Um, res = _solve_once(state, gvals)
        residual = max(residual, res)
        total += Um
        norms.append(_h1_norms(state, Um))
        if keep_terms:
            terms.append(Um)
        if M_fixed is None and float(norms[-1].max()) <= tol * base:
            converged = True
            break
        if m < budget:
            grads.append(_grad_values(state, Um))
    if M_fixed is not None:
        converged = float(norms[-1].max()) <= tol * base
    return SeriesSolution(
        state, total, np.array(norms), converged, residual, terms
    )


def fixed_point_solve(state, psi, tol=1e-12, max_iter=80):
    """Iterate u <- PI psi + S((P - I) grad u) to a fixed point.

    Returns (U, info) with U the jet coefficients and info a dict holding the
    iteration diffs and the final relative update. Raises NonContraction when
    updates stop shrinking well before the tolerance.
    """
    if psi.degree_cut > state.L_cap:
        raise ValueError("boundary data exceeds the degree cap")
    J = state.jet_len
    rg = state.rgrid
    nm = n_modes(state.dim, state.L_cap)
    U0 = np.zeros((J, rg.n_r, nm))
    U0[0] = harmonic_extension(psi.padded(state.L_cap), rg).C
    base = max(float(_h1_norms(state, U0)[0]), 1e-300)
    U = U0.copy()
    diffs = []
    for it in range(max_iter):
        gv = state.apply_full(_grad_values(state, U), minus_identity=True)
        corr, _ = _solve_once(state, gv)
        V = U0 + corr
        diffs.append(float(_h1_norms(state, V - U).sum()))
        U = V
        if diffs[-1] <= tol * base:
            return U, {"iterations": it + 1, "diffs": diffs, "rel_update": diffs[-1] / base}
        if len(diffs) >= 4 and diffs[-1] > diffs[-2] > diffs[-3] > diffs[-4]:
            raise NonContraction(
                "fixed-point updates are growing; geometry outside the "
                f"contractive regime (margin {state.margin:.3f})",
                diffs,
            )
    raise NonContraction(
        f"no contraction to tol={tol:g} within {max_iter} iterations "
        f"(last relative update {diffs[-1] / base:.3e})",
        diffs,
    )


def boundary_radial_trace_values(state, U):
    """Values of d_r u at r = 1 on the state grid, per jet order."""
    J = U.shape[0]
    deg = mode_degrees(state.dim, state.L_cap)
    out = np.zeros((J,) + state.grid.shape)
    for j in range(J):
        dC = _apply_parity(state.rgrid.D, U[j], deg)[0]
        out[j] = synth_coeffs(state.dim, state.L_cap, dC, state.grid)
    return out
