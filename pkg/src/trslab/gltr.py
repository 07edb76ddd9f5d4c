"""Krylov trust-region driver.

Grows the Lanczos factorization one step at a time, solves each projected
tridiagonal subproblem exactly, and records the full convergence history.
The cheap residual formula beta_{k+1} * |last entry of h_k| equals the true
residual norm ||(A + lam_k I) s_k + g||, so the expensive full-space vector
s_k = Q_k h_k is only formed at termination unless callers ask for it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lanczos import extend_lanczos, lanczos_run
from .linalg import solve_shifted
from .trs import BOUNDARY, INTERIOR, solve_trs_tridiagonal

RESIDUAL_TOL = "residual_tol"
BREAKDOWN = "breakdown"
K_MAX = "k_max"


class ZeroGradient(Exception):
    pass


@dataclass
class ConvergenceRecord:
    k: int
    lam: float
    q: float
    resid_formula: float
    last_entry: float
    case: str
    resid_explicit: float | None = None


@dataclass
class GltrResult:
    history: list[ConvergenceRecord]
    lam: float
    s: np.ndarray
    q: float
    termination: str
    factorization: object = None
    iterates: list | None = None  # per-k (h_k, s_k) when requested

    @property
    def iterations(self):
        return len(self.history)


def objective_via_tridiagonal(T, lam, beta0, delta):
    """Closed-form objective value for a boundary solution of the reduced TRS."""
    e1 = np.zeros(T.order)
    e1[0] = 1.0
    x = solve_shifted(T, lam, e1)
    return -0.5 * beta0 * beta0 * float(x[0]) - 0.5 * lam * delta * delta


def explicit_residual(A, g, lam, s):
    """||(A + lam I) s + g|| by one operator apply."""
    s = np.asarray(s, dtype=float)
    return float(np.linalg.norm(A.apply(s) + lam * s + np.asarray(g, dtype=float)))


def gltr_solve(
    A,
    g,
    delta,
    resid_tol=1e-13,
    k_max=300,
    secular_tol=1e-13,
    breakdown_tol=1e-12,
    verify_residuals=False,
    keep_iterates=False,
):
    """Solve min g^T s + s^T A s / 2 over ||s|| <= delta by Krylov projection.

    Stops when the residual formula drops below resid_tol, on Lanczos
    breakdown (the projected solution is then exact), or at k_max.  The
    multiplier from step k seeds the secular solve at step k+1; multipliers
    are nondecreasing, so the previous value is a valid lower bound.
    """
    g = np.asarray(g, dtype=float)
    beta0 = float(np.linalg.norm(g))
    if beta0 == 0.0:
        raise ZeroGradient("gradient must be nonzero")
    if delta <= 0.0:
        raise ValueError("delta must be positive")

    fact = lanczos_run(A, g, 0, breakdown_tol=breakdown_tol)
    history: list[ConvergenceRecord] = []
    iterates = [] if keep_iterates else None
    warm = None
    termination = K_MAX
    h = None
    s = None

    for k in range(k_max + 1):
        T = fact.tridiag
        sol = solve_trs_tridiagonal(T, beta0, delta, tol=secular_tol, lam_lower=warm)
        h = sol.h
        lam = sol.lam
        if warm is not None and lam < warm:
            lam = warm  # enforce the nondecreasing-multiplier safeguard
        if sol.case == BOUNDARY:
            q = objective_via_tridiagonal(T, lam, beta0, delta)
        else:
            q = beta0 * float(h[0]) + 0.5 * float(h @ T.matvec(h))
        last = float(h[-1])
        resid_formula = fact.beta_next * abs(last)
        record = ConvergenceRecord(
            k=k, lam=lam, q=q, resid_formula=resid_formula, last_entry=last, case=sol.case
        )
        if verify_residuals or keep_iterates:
            s = fact.basis @ h
            if verify_residuals:
                record.resid_explicit = explicit_residual(A, g, lam, s)
            if keep_iterates:
                iterates.append((h, s))
        history.append(record)
        warm = lam
        if fact.broken_down:
            termination = BREAKDOWN
            break
        if resid_formula <= resid_tol:
            termination = RESIDUAL_TOL
            break
        if k == k_max:
            termination = K_MAX
            break
        fact = extend_lanczos(fact, A, 1, breakdown_tol=breakdown_tol)

    if s is None:
        s = fact.basis @ h
    final = history[-1]
    return GltrResult(
        history=history,
        lam=final.lam,
        s=s,
        q=final.q,
        termination=termination,
        factorization=fact,
        iterates=iterates,
    )
