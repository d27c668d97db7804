"""Brute-force steady state of the Lindblad master equation.

The density matrix is vectorized by column stacking, so that
``vec(A X B) = (B^T kron A) vec(X)``.

The Fock space may be displaced by a coherent amplitude ``alpha``: the basis
then describes fluctuations ``a_s = s - alpha_s`` around the classical field,
and the dissipator contributes the extra Hamiltonian term
``i gamma/2 sum_s (conj(alpha_s) a_s - alpha_s a_s^+)``. The frame change is
unitary, so nothing is approximated beyond the basis truncation, but far fewer
levels are needed when the field is large.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .fock import FockBasis, annihilation, hamiltonian, ladder_operators
from .meanfield import gp_steady_state
from .stationary import StationarySolveError, solve_stationary
from .model import SITE_INDEX, ResolvedLattice

log = logging.getLogger(__name__)

MAX_LIOUVILLE_DIM = 4_000_000


class CutoffWarning(UserWarning):
    """An observable needs more Fock levels than the basis holds."""


class SolverError(RuntimeError):
    pass


class Liouvillian:
    """Lindblad generator on a (possibly displaced) truncated Fock space.

    The ``D^2 x D^2`` superoperator is assembled lazily on first access to
    `matrix`; the iterative solver never needs it.
    """

    def __init__(self, h, jumps, basis, gamma, displacement=None,
                 max_dim=MAX_LIOUVILLE_DIM):
        self.hamiltonian = h
        self.jumps = jumps
        self.basis = basis
        self.gamma = gamma
        self.displacement = displacement
        self.max_dim = max_dim
        self._matrix = None

    @property
    def dim(self) -> int:
        return self.basis.dim

    @property
    def matrix(self) -> sp.csr_matrix:
        if self._matrix is None:
            d = self.dim
            if d * d > self.max_dim:
                raise MemoryError(
                    f"Liouville space of dimension {d * d} exceeds the budget "
                    f"{self.max_dim}; lower n_max or add a total-photon cap")
            h = self.hamiltonian
            eye = sp.identity(d, dtype=complex, format="csr")
            lv = -1j * (sp.kron(eye, h) - sp.kron(h.T, eye))
            for a in self.jumps:
                nn = (a.T.conj() @ a).tocsr()
                lv = lv + self.gamma * (sp.kron(a.conj(), a)
                                        - 0.5 * sp.kron(eye, nn)
                                        - 0.5 * sp.kron(nn.T, eye))
            lv = lv.tocsr()
            lv.eliminate_zeros()
            self._matrix = lv
        return self._matrix

    def no_jump_generator(self) -> np.ndarray:
        """Dense ``K = -iH - gamma/2 sum_s a_s^+ a_s``."""
        k = -1j * self.hamiltonian.toarray()
        for a in self.jumps:
            k -= 0.5 * self.gamma * (a.T.conj() @ a).toarray()
        return k

    def apply(self, rho: np.ndarray) -> np.ndarray:
        """``L(rho)`` evaluated with matrix products only."""
        h = self.hamiltonian
        out = -1j * (h @ rho - (h.T @ rho.T).T)
        for a in self.jumps:
            nn = a.T.conj() @ a
            ar = a @ rho
            out = out + self.gamma * ((a.conj() @ ar.T).T
                                      - 0.5 * (nn @ rho) - 0.5 * (nn.T @ rho.T).T)
        return np.asarray(out)


@dataclass
class DensityMatrix:
    rho: np.ndarray
    basis: FockBasis
    displacement: np.ndarray | None = None
    residual: float = 0.0
    converged: bool = True

    @property
    def trace(self) -> complex:
        return complex(np.trace(self.rho))

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.rho - self.rho.conj().T)))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(0.5 * (self.rho + self.rho.conj().T)).min())


def resolve_displacement(lattice: ResolvedLattice, displacement):
    """Turn ``None`` / ``"meanfield"`` / ``"linear"`` / array into amplitudes."""
    if displacement is None:
        return None
    if isinstance(displacement, str):
        if displacement == "meanfield":
            return gp_steady_state(lattice).alpha
        if displacement == "linear":
            from .meanfield import linear_amplitudes
            return linear_amplitudes(lattice)
        raise ValueError(f"unknown displacement {displacement!r}")
    return np.asarray(displacement, dtype=complex)


def build_liouvillian(lattice: ResolvedLattice, basis: FockBasis,
                      displacement=None,
                      max_dim: int = MAX_LIOUVILLE_DIM) -> Liouvillian:
    """Lindblad generator ``L(rho) = -i[H, rho] + gamma sum_s D[s](rho)``.

    ``displacement`` is ``None`` (plain Fock basis), ``"meanfield"``,
    ``"linear"`` or an explicit array of six amplitudes.
    """
    alpha = resolve_displacement(lattice, displacement)
    h = hamiltonian(lattice, basis, include_drive=True, displacement=alpha)
    jumps = [annihilation(i, basis) for i in range(basis.n_sites)]
    if alpha is not None:
        g = lattice.gamma
        for a, al in zip(jumps, alpha):
            h = h + 0.5j * g * (np.conj(al) * a - al * a.T.conj())
    return Liouvillian(h.tocsr(), jumps, basis, lattice.gamma, alpha, max_dim)


def _trace_row(d: int) -> sp.csr_matrix:
    cols = np.arange(d) * (d + 1)
    return sp.csr_matrix((np.ones(d, dtype=complex), (np.zeros(d, int), cols)),
                         shape=(1, d * d))


def _finish(rho: np.ndarray, liou: Liouvillian, converged=True) -> DensityMatrix:
    residual = float(np.linalg.norm(liou.apply(rho)) / np.linalg.norm(rho))
    return DensityMatrix(rho, liou.basis, liou.displacement, residual, converged)


def steady_state_iterative(liou: Liouvillian, tol: float = 1e-12) -> DensityMatrix:
    """Preconditioned GMRES on ``K rho + rho K^+ + sum_s gamma a rho a^+ = 0``.

    Same equations and trace constraint as `steady_state_direct`; memory
    stays at a few dense ``D x D`` matrices.
    """
    g = liou.gamma
    jumps = liou.jumps
    jumps_h = [a.T.conj().tocsr() for a in jumps]

    def jump_term(rho):
        out = np.zeros_like(rho)
        for a, ah in zip(jumps, jumps_h):
            out += g * np.asarray((ah.T @ (a @ rho).T).T)
        return out

    try:
        res = solve_stationary(liou.no_jump_generator(), jump_term,
                               lambda x: np.trace(x), tol=tol)
    except StationarySolveError as exc:
        raise SolverError(str(exc)) from exc
    return _finish(res.x, liou)


def steady_state(liou: Liouvillian, method: str = "auto") -> DensityMatrix:
    """Dispatch to the direct solver for small spaces, GMRES otherwise."""
    if method == "auto":
        method = "direct" if liou.dim <= 40 else "iterative"
    if method == "direct":
        return steady_state_direct(liou)
    if method == "iterative":
        return steady_state_iterative(liou)
    raise ValueError(f"unknown method {method!r}")


def steady_state_direct(liou: Liouvillian) -> DensityMatrix:
    """Solve ``L rho = 0`` with the ``rho_00`` row replaced by ``tr rho = 1``."""
    d = liou.dim
    a = liou.matrix.tolil()
    a[0, :] = _trace_row(d)
    b = np.zeros(d * d, dtype=complex)
    b[0] = 1.0
    try:
        lu = spla.splu(a.tocsc())
    except RuntimeError as exc:
        raise SolverError(f"singular steady-state system: {exc}") from exc
    x = lu.solve(b)
    if not np.all(np.isfinite(x)):
        raise SolverError("steady-state solve produced non-finite values")
    rho = x.reshape((d, d), order="F")
    return _finish(rho, liou)


def _rk4_step(m, y, dt):
    k1 = m @ y
    k2 = m @ (y + 0.5 * dt * k1)
    k3 = m @ (y + 0.5 * dt * k2)
    k4 = m @ (y + dt * k3)
    return y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def steady_state_by_evolution(liou: Liouvillian, rho0: np.ndarray | None = None,
                              dt: float | None = None, t_max: float = 400.0,
                              tol: float = 1e-10) -> DensityMatrix:
    """Fixed-step RK4 integration until ``||L rho|| < tol``.

    The default step is ``2 / ||L||_1``, inside the RK4 stability region. If
    ``t_max`` is reached the last iterate is returned with ``converged=False``.
    """
    d = liou.dim
    m = liou.matrix
    if rho0 is None:
        rho0 = np.zeros((d, d), dtype=complex)
        rho0[0, 0] = 1.0
    if dt is None:
        dt = 2.0 / spla.norm(m, 1)
    y = np.asarray(rho0, dtype=complex).reshape(-1, order="F")
    t = 0.0
    check_every = max(1, int(round(1.0 / (liou.gamma * dt))))
    step = 0
    while t < t_max:
        y = _rk4_step(m, y, dt)
        t += dt
        step += 1
        if step % check_every == 0:
            if not np.all(np.isfinite(y)):
                raise SolverError(f"time integration diverged at t={t:.3g}; reduce dt")
            if np.linalg.norm(m @ y) < tol:
                break
    rho = y.reshape((d, d), order="F")
    converged = np.linalg.norm(m @ y) < tol
    if not converged:
        log.warning("evolution reached t_max=%g without converging", t_max)
    return _finish(rho, liou, converged)


def trace_distance(r1: np.ndarray, r2: np.ndarray) -> float:
    diff = r1 - r2
    diff = 0.5 * (diff + diff.conj().T)
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(diff))))


def liouvillian_gap(liou: Liouvillian, k: int = 4) -> np.ndarray:
    """Eigenvalues of ``L`` closest to zero, sorted by magnitude.

    The first is the steady state (about 0); a second one well away from
    zero means the steady state is unique.
    """
    if liou.matrix.shape[0] <= 2500:
        ev = np.linalg.eigvals(liou.matrix.toarray())
    else:
        ev = spla.eigs(liou.matrix.tocsc(), k=k, sigma=0, return_eigenvectors=False)
    return ev[np.argsort(np.abs(ev))][:k]


# ---------------------------------------------------------------------------
# observables

def monomial_operator(basis: FockBasis, n, m, displacement=None) -> sp.csr_matrix:
    """Normally ordered ``prod_s s+^{n_s} prod_s s^{m_s}`` on ``basis``."""
    ops = ladder_operators(basis, displacement)
    out = sp.identity(basis.dim, dtype=complex, format="csr")
    for s, k in enumerate(n):
        for _ in range(int(k)):
            out = out @ ops[s].T.conj()
    for s, k in enumerate(m):
        for _ in range(int(k)):
            out = out @ ops[s]
    return out.tocsr()


def expectation(state: DensityMatrix, n, m=None) -> complex:
    """``tr(rho s+^n s^m)`` for exponent vectors ``n`` and ``m``.

    ``n`` may also be a mapping ``site -> exponent``.
    """
    n = _exponents(n)
    m = n.copy() if m is None else _exponents(m)
    cap = state.basis.n_max
    if state.displacement is None and (n.max() > cap or m.max() > cap):
        warnings.warn(f"exponent exceeds per-site cutoff {cap}", CutoffWarning)
    op = monomial_operator(state.basis, n, m, state.displacement)
    return complex(op.multiply(state.rho.T).sum())


def _exponents(spec) -> np.ndarray:
    if isinstance(spec, dict):
        out = np.zeros(6, dtype=int)
        for s, k in spec.items():
            out[SITE_INDEX[s]] = k
        return out
    return np.asarray(spec, dtype=int)


def level_populations(state: DensityMatrix) -> dict:
    """Population of the top per-site level and of the top total-number shell."""
    pops = np.real(np.diag(state.rho))
    st = state.basis.states
    per_site = max(float(pops[st[:, s] == state.basis.n_max].sum())
                   for s in range(st.shape[1]))
    out = {"max_level_population": per_site}
    if state.basis.max_total is not None:
        shell = st.sum(axis=1) == state.basis.max_total
        out["top_shell_population"] = float(pops[shell].sum())
        out["max_level_population"] = max(per_site, out["top_shell_population"])
    return out


def observables(state: DensityMatrix) -> dict:
    """Densities and dark-site second-order correlations."""
    dens = np.array([expectation(state, np.eye(6, dtype=int)[s]).real
                     for s in range(6)])
    b1, b2 = SITE_INDEX["b1"], SITE_INDEX["b2"]

    def corr(i, j):
        e = np.zeros(6, dtype=int)
        e[i] += 1
        e[j] += 1
        return expectation(state, e, e).real

    out = {"n": dens, "n_tot": float(dens.sum()),
           "n_b1": float(dens[b1]), "n_b2": float(dens[b2]),
           "n_b": float(0.5 * (dens[b1] + dens[b2]))}
    # same floor as the hierarchy: g2 is undefined for an empty dark site
    flag = min(dens[b1], dens[b2]) < 1e-12
    nan = float("nan")
    out["g2_11"] = nan if flag else corr(b1, b1) / dens[b1] ** 2
    out["g2_22"] = nan if flag else corr(b2, b2) / dens[b2] ** 2
    out["g2_12"] = nan if flag else corr(b1, b2) / (dens[b1] * dens[b2])
    out["g2_flag"] = bool(flag)
    out["residual"] = state.residual
    out.update(level_populations(state))
    return out


def oracle_steady_state(lattice: ResolvedLattice, n_max: int = 2,
                        max_total: int | None = None,
                        displacement="meanfield") -> DensityMatrix:
    """Convenience wrapper: basis, Liouvillian and direct solve."""
    basis = FockBasis(n_max, max_total=max_total)
    return steady_state(build_liouvillian(lattice, basis, displacement))
