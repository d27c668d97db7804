"""Coherent-field (Gross-Pitaevskii) steady state of the driven lattice.

The classical field obeys

    i d(alpha_s)/dt = (-delta_s - i gamma/2 + U |alpha_s|^2) alpha_s
                      - sum_r J_sr alpha_r + F_s

which is exact at ``U = 0`` and has ``g2 = 1`` by construction.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .model import SITE_INDEX, ModelParams, ResolvedLattice, resolve

log = logging.getLogger(__name__)

TOL = 1e-10


@dataclass
class CoherentField:
    alpha: np.ndarray
    converged: bool
    residual: float
    strategy: str = "newton"
    bistable: bool = False
    others: list = field(default_factory=list)

    @property
    def densities(self) -> np.ndarray:
        return np.abs(self.alpha) ** 2

    @property
    def n_b(self) -> float:
        return float(0.5 * (self.densities[SITE_INDEX["b1"]]
                            + self.densities[SITE_INDEX["b2"]]))


def linear_matrix(lattice: ResolvedLattice) -> np.ndarray:
    """Non-Hermitian 6x6 matrix ``M`` with ``i d(alpha)/dt = M alpha + F`` at U=0."""
    return (np.diag(-lattice.detuning - 0.5j * lattice.gamma)
            - lattice.hopping_matrix()).astype(complex)


def linear_amplitudes(lattice: ResolvedLattice) -> np.ndarray:
    return np.linalg.solve(linear_matrix(lattice), -lattice.drive)


def rhs(alpha: np.ndarray, lattice: ResolvedLattice) -> np.ndarray:
    m = linear_matrix(lattice)
    return m @ alpha + lattice.u * np.abs(alpha) ** 2 * alpha + lattice.drive


def _jacobian(alpha, lattice):
    # derivatives w.r.t. (alpha, conj(alpha)) packed as a real 12x12 system
    m = linear_matrix(lattice)
    d_a = m + np.diag(2 * lattice.u * np.abs(alpha) ** 2)
    d_ac = np.diag(lattice.u * alpha ** 2)
    # rhs as function of x + iy: d/dx = d_a + d_ac, d/dy = i(d_a - d_ac)
    dx = d_a + d_ac
    dy = 1j * (d_a - d_ac)
    return np.block([[dx.real, dy.real], [dx.imag, dy.imag]])


def newton(lattice: ResolvedLattice, seed: np.ndarray, max_iter: int = 100,
           tol: float = TOL) -> tuple[np.ndarray, float, bool]:
    """Damped Newton iteration with backtracking on the residual norm."""
    alpha = np.array(seed, dtype=complex)
    res = np.max(np.abs(rhs(alpha, lattice)))
    for _ in range(max_iter):
        if res < tol:
            return alpha, res, True
        r = rhs(alpha, lattice)
        step = np.linalg.solve(_jacobian(alpha, lattice),
                               -np.concatenate([r.real, r.imag]))
        step = step[:6] + 1j * step[6:]
        lam = 1.0
        while lam > 1e-6:
            trial = alpha + lam * step
            trial_res = np.max(np.abs(rhs(trial, lattice)))
            if trial_res < res:
                break
            lam *= 0.5
        else:
            return alpha, res, False
        alpha, res = trial, trial_res
    return alpha, res, res < tol


def relax(lattice: ResolvedLattice, t_max: float | None = None) -> np.ndarray:
    """Integrate the damped classical equations from vacuum."""
    t_max = t_max or 200.0 / lattice.gamma

    def f(_, y):
        a = y[:6] + 1j * y[6:]
        d = -1j * rhs(a, lattice)
        return np.concatenate([d.real, d.imag])

    sol = solve_ivp(f, (0.0, t_max), np.zeros(12), rtol=1e-10, atol=1e-12,
                    method="DOP853")
    y = sol.y[:, -1]
    return y[:6] + 1j * y[6:]


def gp_steady_state(lattice: ResolvedLattice, seed: np.ndarray | None = None,
                    tol: float = TOL) -> CoherentField:
    """Steady coherent field.

    Newton is seeded from ``seed`` or the linear solution; a relaxation from
    vacuum (polished by Newton) is always tried as well, and disagreement
    between the two converged answers sets the ``bistable`` flag.
    """
    start = linear_amplitudes(lattice) if seed is None else seed
    a1, r1, ok1 = newton(lattice, start, tol=tol)
    a2, r2, ok2 = newton(lattice, relax(lattice), tol=tol)
    if ok1:
        bistable = ok2 and np.max(np.abs(a1 - a2)) > 1e-6
        others = [a2] if bistable else []
        return CoherentField(a1, True, r1, "newton", bistable, others)
    if ok2:
        return CoherentField(a2, True, r2, "relaxation")
    log.warning("mean-field solve failed: residuals %.3g / %.3g", r1, r2)
    best = (a1, r1) if r1 <= r2 else (a2, r2)
    return CoherentField(best[0], False, best[1], "failed")


def gp_density_sweep(params: ModelParams, deltas, jump_tol: float | None = None) -> list[dict]:
    """Continuation sweep over detuning; each point seeds the next.

    A branch jump is flagged when the seeded Newton result differs from the
    previous point by more than ``jump_tol`` (default: ten times the typical
    step change of the linear solution) or when bistability is found.
    """
    rows = []
    prev = None
    deltas = list(deltas)
    for k, d in enumerate(deltas):
        lattice = resolve(params.replace(delta=d))
        cf = gp_steady_state(lattice, seed=prev)
        flag = cf.bistable or not cf.converged
        if prev is not None:
            lin_step = np.max(np.abs(linear_amplitudes(lattice) - linear_amplitudes(
                resolve(params.replace(delta=deltas[k - 1])))))
            limit = jump_tol if jump_tol is not None else 10 * lin_step + 1e-8
            if np.max(np.abs(cf.alpha - prev)) > limit:
                flag = True
        prev = cf.alpha
        dens = cf.densities
        row = {"delta": float(d)}
        for s, i in SITE_INDEX.items():
            row[f"n_{s}"] = float(dens[i])
        row["n_b"] = cf.n_b
        row["residual"] = float(cf.residual)
        row["branch_flag"] = int(flag)
        rows.append(row)
    return rows
