"""Symmetric Lanczos process with complete reorthogonalization.

A run produces the orthonormal basis Q_k and the projected tridiagonal T_k
satisfying the three-term relation A Q_k = Q_k T_k + beta_{k+1} q_{k+1} e_{k+1}^T.
Full two-pass Gram-Schmidt against every stored basis vector keeps the basis
orthonormal to machine precision, which all downstream accuracy checks rely on.
Factorizations are immutable; extending one returns a new value that is
entrywise identical to a longer fresh run.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import SymmetricTridiagonal


class ZeroStartVector(Exception):
    pass


class AlreadyBrokenDown(Exception):
    pass


@dataclass(frozen=True)
class LanczosFactorization:
    basis: np.ndarray  # n x (k+1), orthonormal columns q_0 .. q_k
    tridiag: SymmetricTridiagonal  # order k+1
    beta0: float  # ||g||
    beta_next: float  # beta_{k+1}
    broken_down: bool
    next_vector: np.ndarray | None  # q_{k+1}, kept so the run can be resumed

    @property
    def k(self):
        return self.tridiag.order - 1

    @property
    def dim(self):
        return self.basis.shape[0]


def _grow(A, columns, diag, off, q_prev, q_cur, beta_cur, order_target, breakdown_tol):
    """Advance the three-term recurrence until `order_target` steps are done.

    Invariant on entry: `diag` has one entry fewer than `columns`, and
    `q_cur == columns[-1]` is the vector still to be processed.  The lists
    are mutated in place; returns (beta_next, q_next, broken_down).
    """
    n = q_cur.size
    while True:
        w = A.apply(q_cur)
        delta = float(q_cur @ w)
        diag.append(delta)
        r = w - delta * q_cur
        if q_prev is not None:
            r = r - beta_cur * q_prev
        # complete reorthogonalization, two classical Gram-Schmidt passes
        qmat = np.stack(columns, axis=1)
        for _ in range(2):
            r = r - qmat @ (qmat.T @ r)
        beta = float(np.linalg.norm(r))
        # running estimate of ||A|| from the Gershgorin rows of T so far
        scale = 1e-300
        for i in range(len(diag)):
            left = abs(off[i - 1]) if i > 0 else 0.0
            right = abs(off[i]) if i < len(off) else beta
            scale = max(scale, abs(diag[i]) + left + right)
        if beta <= breakdown_tol * scale or len(columns) >= n:
            return beta, None, True
        q_next = r / beta
        if len(columns) == order_target:
            return beta, q_next, False
        off.append(beta)
        columns.append(q_next)
        q_prev, q_cur, beta_cur = q_cur, q_next, beta


def _assemble(columns, diag, off, beta0, beta_next, q_next, broken):
    basis = np.stack(columns, axis=1)
    tridiag = SymmetricTridiagonal(np.array(diag), np.array(off))
    return LanczosFactorization(
        basis=basis,
        tridiag=tridiag,
        beta0=beta0,
        beta_next=beta_next,
        broken_down=broken,
        next_vector=q_next,
    )


def lanczos_run(A, g, k_max, breakdown_tol=1e-12):
    """Run the Lanczos process on (A, g) through step min(k_max, breakdown).

    The first basis vector is g normalized, so Q_k^T g = beta0 * e_1.
    """
    g = np.asarray(g, dtype=float)
    beta0 = float(np.linalg.norm(g))
    if beta0 == 0.0:
        raise ZeroStartVector("start vector has zero norm")
    if k_max < 0:
        raise ValueError("k_max must be >= 0")
    q0 = g / beta0
    columns = [q0]
    diag: list[float] = []
    off: list[float] = []
    beta_next, q_next, broken = _grow(
        A, columns, diag, off, None, q0, 0.0, k_max + 1, breakdown_tol
    )
    return _assemble(columns, diag, off, beta0, beta_next, q_next, broken)


def extend_lanczos(f, A, steps, breakdown_tol=1e-12):
    """Continue a factorization by the given number of steps.

    Extending is deterministic: the result matches a single longer run
    entrywise.  Raises AlreadyBrokenDown if the process already terminated.
    """
    if steps < 0:
        raise ValueError("steps must be >= 0")
    if steps == 0:
        return f
    if f.broken_down:
        raise AlreadyBrokenDown("Lanczos process has already broken down")
    columns = [f.basis[:, i] for i in range(f.basis.shape[1])]
    diag = f.tridiag.diag.tolist()
    off = f.tridiag.offdiag.tolist()
    # re-enter the recurrence at the dangling (beta_next, q_next) step
    off.append(f.beta_next)
    columns.append(f.next_vector)
    q_prev = columns[-2]
    q_cur = columns[-1]
    order_target = len(diag) + steps
    beta_next, q_next, broken = _grow(
        A, columns, diag, off, q_prev, q_cur, f.beta_next, order_target, breakdown_tol
    )
    return _assemble(columns, diag, off, f.beta0, beta_next, q_next, broken)
