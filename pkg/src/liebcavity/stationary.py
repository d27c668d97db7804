"""Stationary solutions of ``K X + X K^+ + G(X) = 0`` under one linear constraint.

Both the Lindblad steady state (``G`` = quantum jumps) and the truncated
correlation hierarchy (``G`` = interaction-induced coupling to higher order)
have this form. The Lyapunov part is inverted exactly in the eigenbasis of
``K`` and used as a preconditioner for GMRES on the full problem, which keeps
memory at ``O(D^2)`` where a sparse LU of the ``D^2 x D^2`` system fills in
almost completely.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg as la
import scipy.sparse.linalg as spla

log = logging.getLogger(__name__)


class StationarySolveError(RuntimeError):
    pass


class LyapunovInverse:
    """Apply ``R -> X`` solving ``K X + X K^+ = R``.

    Eigenpairs with ``|lambda_i + conj(lambda_j)| < floor`` are treated as
    null modes: the inverse is taken on the complement and `null_modes` holds
    the corresponding matrices ``v_i v_j^+``.
    """

    def __init__(self, k: np.ndarray, floor: float = 1e-10):
        lam, v = la.eig(k)
        self.v = v
        self.vinv = la.inv(v)
        denom = lam[:, None] + lam.conj()[None, :]
        null = np.abs(denom) < floor
        self.inv_denom = np.where(null, 0.0, 1.0 / np.where(null, 1.0, denom))
        self.null_modes = [np.outer(v[:, i], v[:, j].conj()) for i, j in zip(*np.nonzero(null))]
        self.condition = float(np.linalg.cond(v))

    def __call__(self, r: np.ndarray) -> np.ndarray:
        y = self.vinv @ r @ self.vinv.conj().T
        return self.v @ (y * self.inv_denom) @ self.v.conj().T


class ConstrainedLyapunovInverse:
    """Exact inverse of ``X -> K X + X K^+`` with entry ``(0, 0)`` replaced by
    ``constraint(X)``.

    Singular ``K`` (one null mode, with the ``(0, 0)`` equation identically
    zero) is handled by adding the null mode; regular ``K`` by a rank-one
    Sherman-Morrison correction.
    """

    def __init__(self, k: np.ndarray, constraint):
        self.lyap = LyapunovInverse(k)
        self.constraint = constraint
        d = k.shape[0]
        if len(self.lyap.null_modes) > 1:
            raise StationarySolveError(
                f"{len(self.lyap.null_modes)} null modes in the Lyapunov operator")
        if self.lyap.null_modes:
            self.mode = self.lyap.null_modes[0]
        else:
            e00 = np.zeros((d, d), dtype=complex)
            e00[0, 0] = 1.0
            self.mode = self.lyap(e00)
        self.singular = bool(self.lyap.null_modes)
        self.norm = constraint(self.mode)
        if abs(self.norm) < 1e-14:
            raise StationarySolveError("constraint is blind to the normalization mode")

    def __call__(self, r: np.ndarray) -> np.ndarray:
        r00 = r[0, 0]
        if self.singular:
            r = r.copy()
            r[0, 0] = 0.0
        y = self.lyap(r)
        return y + self.mode * ((r00 - self.constraint(y)) / self.norm)


@dataclass
class StationaryResult:
    x: np.ndarray
    residual: float
    iterations: int


def solve_stationary(k: np.ndarray, extra: Callable[[np.ndarray], np.ndarray] | None,
                     constraint: Callable[[np.ndarray], complex],
                     x0: np.ndarray | None = None, tol: float = 1e-12,
                     maxiter: int = 20, restart: int = 80,
                     accept: float = 1e-9) -> StationaryResult:
    """Solve ``K X + X K^+ + extra(X) = 0`` with ``constraint(X) = 1``.

    The equation for entry ``(0, 0)`` is replaced by the constraint, so the
    caller must make sure that equation is redundant (true for trace
    preservation and for the vacuum moment). GMRES stops at relative residual
    ``tol``; a stalled run is still accepted below ``accept``.
    """
    k = np.asarray(k, dtype=complex)
    d = k.shape[0]
    kh = k.conj().T
    pre = ConstrainedLyapunovInverse(k, constraint)

    def apply(xv):
        x = xv.reshape(d, d)
        out = k @ x + x @ kh
        if extra is not None:
            out = out + extra(x)
        out[0, 0] = constraint(x)
        return out.ravel()

    def precond(rv):
        return pre(rv.reshape(d, d)).ravel()

    n = d * d
    a_op = spla.LinearOperator((n, n), matvec=apply, dtype=complex)
    m_op = spla.LinearOperator((n, n), matvec=precond, dtype=complex)
    b = np.zeros(n, dtype=complex)
    b[0] = 1.0
    if x0 is None:
        x0 = precond(b)
    count = [0]

    def cb(_):
        count[0] += 1

    x, info = spla.gmres(a_op, b, x0=np.asarray(x0).ravel(), M=m_op, rtol=tol,
                         atol=0.0, restart=restart, maxiter=maxiter,
                         callback=cb, callback_type="pr_norm")
    res = float(np.linalg.norm(apply(x) - b))
    if info != 0 and res > accept:
        raise StationarySolveError(
            f"GMRES did not converge (info={info}, residual={res:.3g})")
    return StationaryResult(x.reshape(d, d), res, count[0])
