"""Equations of motion for normally ordered correlation functions.

A correlation function is indexed by a pair of exponent vectors ``(n, m)``:

    C(n, m) = < prod_s s^{+ n_s} s^{m_s} >

and all functions with ``max(sum n, sum m) > N_c`` are set to zero (global
hard cutoff, an expansion around the vacuum). Since the cutoff treats the
creation and annihilation exponents independently, the unknowns form a
``T x T`` matrix with ``T = C(N_c + 6, 6)`` exponent vectors per side, and the
equations of motion take the form

    dC/dt = K C + C K^+ + R(C)

``K`` acts on the creation exponents and holds detuning, damping, the
diagonal part of the interaction, hopping and drive. ``R`` is the interaction
term coupling ``(n, m)`` to ``(n + e_s, m + e_s)``. Derived from the Lindblad
equation: the damping of ``C(n, m)`` is ``-gamma/2 sum_s (n_s + m_s)``.
"""

from __future__ import annotations

import functools
import itertools
import logging
from dataclasses import dataclass
from math import comb

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .model import SITE_INDEX, ResolvedLattice
from .stationary import StationarySolveError, solve_stationary

log = logging.getLogger(__name__)

N_SITES = 6
MAX_UNKNOWNS = 12_000_000
N_B_FLOOR = 1e-12


class HierarchyError(RuntimeError):
    pass


def exponent_vectors(n_c: int, n_sites: int = N_SITES) -> np.ndarray:
    """All vectors of non-negative integers with sum <= n_c.

    Sorted by total, then lexicographically descending, so the zero vector is
    first and every order block is contiguous.
    """
    out = []
    for total in range(n_c + 1):
        block = [v for v in itertools.product(range(total, -1, -1), repeat=n_sites)
                 if sum(v) == total]
        out.extend(block)
    return np.array(out, dtype=np.int64).reshape(-1, n_sites)


@dataclass(frozen=True)
class MultiIndex:
    n: tuple[int, ...]
    m: tuple[int, ...]

    @property
    def order(self) -> int:
        return max(sum(self.n), sum(self.m))


class HierarchyBasis:
    """All multi-indices ``(n, m)`` of order at most ``cutoff``.

    Position of ``(n, m)`` in the flattened unknown vector is
    ``index(n) * T + index(m)``.
    """

    def __init__(self, cutoff: int, max_unknowns: int = MAX_UNKNOWNS):
        if cutoff < 1:
            raise ValueError("cutoff must be >= 1")
        t = comb(cutoff + N_SITES, N_SITES)
        if t * t > max_unknowns:
            raise MemoryError(f"N_c={cutoff} needs {t * t} unknowns, budget is {max_unknowns}")
        self.cutoff = cutoff
        self.vectors = exponent_vectors(cutoff)
        self.vectors.setflags(write=False)
        self.totals = self.vectors.sum(axis=1)
        self._lookup = {tuple(int(x) for x in v): i for i, v in enumerate(self.vectors)}
        # index of v + e_s and v - e_s, -1 when outside the basis
        self.up = np.full((N_SITES, self.t), -1, dtype=np.int64)
        self.down = np.full((N_SITES, self.t), -1, dtype=np.int64)
        for s in range(N_SITES):
            e = np.zeros(N_SITES, dtype=np.int64)
            e[s] = 1
            self.up[s] = self.positions(self.vectors + e)
            self.down[s] = self.positions(self.vectors - e)
        for arr in (self.totals, self.up, self.down):
            arr.setflags(write=False)

    @property
    def t(self) -> int:
        return len(self.vectors)

    def __len__(self) -> int:
        return self.t * self.t

    def positions(self, vecs: np.ndarray) -> np.ndarray:
        return np.array([self._lookup.get(tuple(int(x) for x in v), -1) for v in vecs],
                        dtype=np.int64)

    def vector_index(self, v) -> int:
        return self._lookup[tuple(int(x) for x in v)]

    def index(self, idx: MultiIndex) -> int:
        return self.vector_index(idx.n) * self.t + self.vector_index(idx.m)

    def multi_index(self, pos: int) -> MultiIndex:
        p, q = divmod(pos, self.t)
        return MultiIndex(tuple(int(x) for x in self.vectors[p]),
                          tuple(int(x) for x in self.vectors[q]))

    def __iter__(self):
        for pos in range(len(self)):
            yield self.multi_index(pos)

    def order(self) -> np.ndarray:
        """Order of every flattened unknown."""
        return np.maximum(self.totals[:, None], self.totals[None, :]).ravel()


def enumerate_basis(n_c: int) -> HierarchyBasis:
    return HierarchyBasis(n_c)


@functools.lru_cache(maxsize=4)
def _shared_basis(n_c: int) -> HierarchyBasis:
    # bases are read-only after construction, so sweeps can reuse them
    return HierarchyBasis(n_c)


class HierarchyEOM:
    """Assembled equations of motion on a `HierarchyBasis`."""

    def __init__(self, lattice: ResolvedLattice, basis: HierarchyBasis):
        self.lattice = lattice
        self.basis = basis
        self.k = self._assemble_k()

    def _assemble_k(self) -> sp.csr_matrix:
        lat, b = self.lattice, self.basis
        v = b.vectors
        diag = (v @ (-1j * lat.detuning - 0.5 * lat.gamma)
                + 0.5j * lat.u * (v * (v - 1)).sum(axis=1))
        rows, cols, vals = [np.arange(b.t)], [np.arange(b.t)], [diag]
        for k, (s, r) in enumerate(lat.edges):
            j = lat.hopping[k]
            for src, dst in ((s, r), (r, s)):
                # n_src * C|_{n_dst+, n_src-}
                p = np.flatnonzero(v[:, src] > 0)
                target = b.positions(v[p] - np.eye(N_SITES, dtype=np.int64)[src]
                                     + np.eye(N_SITES, dtype=np.int64)[dst])
                rows.append(p)
                cols.append(target)
                vals.append(-1j * j * v[p, src])
        for s in range(N_SITES):
            f = lat.drive[s]
            if f == 0:
                continue
            p = np.flatnonzero(v[:, s] > 0)
            rows.append(p)
            cols.append(b.down[s, p])
            vals.append(1j * np.conj(f) * v[p, s])
        rows, cols, vals = (np.concatenate(x) for x in (rows, cols, vals))
        assert np.all(cols >= 0)
        return sp.csr_matrix((vals.astype(complex), (rows, cols)), shape=(b.t, b.t))

    def interaction_term(self, c: np.ndarray) -> np.ndarray:
        """``R(C)[p, q] = iU sum_s (n_s(p) - m_s(q)) C[p + e_s, q + e_s]``."""
        u = self.lattice.u
        out = np.zeros_like(c)
        if u == 0:
            return out
        v = self.basis.vectors
        for s in range(N_SITES):
            up = self.basis.up[s]
            ok = np.flatnonzero(up >= 0)
            coef = v[ok, s][:, None] - v[ok, s][None, :]
            out[np.ix_(ok, ok)] += 1j * u * coef * c[np.ix_(up[ok], up[ok])]
        return out

    def apply(self, c: np.ndarray) -> np.ndarray:
        """Time derivative of the correlation matrix ``c`` (shape ``T x T``)."""
        k = self.k
        return np.asarray(k @ c + (k.conj() @ c.T).T) + self.interaction_term(c)

    def matrix(self) -> sp.csr_matrix:
        """Full sparse ``T^2 x T^2`` operator on the row-major flattened ``C``."""
        t = self.basis.t
        eye = sp.identity(t, dtype=complex, format="csr")
        a = sp.kron(self.k, eye) + sp.kron(eye, self.k.conj())
        u = self.lattice.u
        if u != 0:
            v = self.basis.vectors
            rows, cols, vals = [], [], []
            for s in range(N_SITES):
                up = self.basis.up[s]
                ok = np.flatnonzero(up >= 0)
                p, q = np.meshgrid(ok, ok, indexing="ij")
                coef = 1j * u * (v[p, s] - v[q, s])
                keep = coef != 0
                rows.append((p * t + q)[keep])
                cols.append((up[p] * t + up[q])[keep])
                vals.append(coef[keep])
            r = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                              shape=(t * t, t * t))
            a = a + r
        return a.tocsr()


def assemble_eom(lattice: ResolvedLattice, basis: HierarchyBasis) -> HierarchyEOM:
    return HierarchyEOM(lattice, basis)


@dataclass
class CorrelationVector:
    basis: HierarchyBasis
    values: np.ndarray        # T x T, values[p, q] = C(vectors[p], vectors[q])
    residual: float = 0.0
    iterations: int = 0

    def __getitem__(self, idx: MultiIndex) -> complex:
        b = self.basis
        return complex(self.values[b.vector_index(idx.n), b.vector_index(idx.m)])

    def moment(self, n, m) -> complex:
        return self[MultiIndex(tuple(n), tuple(m))]

    def hermitian_asymmetry(self) -> float:
        return float(np.max(np.abs(self.values - self.values.conj().T)))

    def first_moments(self) -> np.ndarray:
        """``<s>`` for every site."""
        e = np.eye(N_SITES, dtype=int)
        return np.array([self.moment(np.zeros(N_SITES, int), e[s]) for s in range(N_SITES)])


def steady_state_solve(eom: HierarchyEOM, method: str = "auto",
                       tol: float = 1e-12) -> CorrelationVector:
    """Steady state of the truncated hierarchy with ``C(0, 0) = 1``.

    ``method="direct"`` factorizes the sparse ``T^2 x T^2`` system (only
    sensible for small cutoffs); ``"iterative"`` runs GMRES with the exact
    Lyapunov inverse of the ``K`` part as preconditioner.
    """
    b = eom.basis
    if method == "auto":
        method = "direct" if b.t <= 28 else "iterative"
    if method == "direct":
        a = eom.matrix().tolil()
        a[0, :] = 0
        a[0, 0] = 1.0
        rhs = np.zeros(len(b), dtype=complex)
        rhs[0] = 1.0
        try:
            x = spla.splu(a.tocsc()).solve(rhs)
        except RuntimeError as exc:
            raise HierarchyError(f"singular hierarchy at N_c={b.cutoff}: {exc}") from exc
        values, iters = x.reshape(b.t, b.t), 0
    elif method == "iterative":
        try:
            res = solve_stationary(eom.k.toarray(), eom.interaction_term,
                                   lambda c: c[0, 0], tol=tol)
        except StationarySolveError as exc:
            raise HierarchyError(f"N_c={b.cutoff}: {exc}") from exc
        values, iters = res.x, res.iterations
    else:
        raise ValueError(f"unknown method {method!r}")
    if not np.all(np.isfinite(values)):
        raise HierarchyError(f"non-finite solution at N_c={b.cutoff}")
    deriv = eom.apply(values)
    deriv[0, 0] = 0.0
    residual = float(np.linalg.norm(deriv) / np.linalg.norm(values))
    return CorrelationVector(b, values, residual, iters)


def observables(c: CorrelationVector) -> dict:
    """Site densities and dark-site ``g2`` with per-site denominators.

    Values of ``g2`` are NaN when the corresponding density is below
    ``N_B_FLOOR``; ``g2_flag`` is then set.
    """
    if c.basis.cutoff < 2:
        raise HierarchyError("g2 needs N_c >= 2")
    e = np.eye(N_SITES, dtype=int)
    dens = np.array([c.moment(e[s], e[s]).real for s in range(N_SITES)])
    b1, b2 = SITE_INDEX["b1"], SITE_INDEX["b2"]

    def pair(i, j):
        v = e[i] + e[j]
        return c.moment(v, v).real

    out = {"n": dens, "n_tot": float(dens.sum()), "n_b1": float(dens[b1]),
           "n_b2": float(dens[b2]), "n_b": float(0.5 * (dens[b1] + dens[b2]))}
    flag = min(dens[b1], dens[b2]) < N_B_FLOOR
    with np.errstate(divide="ignore", invalid="ignore"):
        out["g2_11"] = float(pair(b1, b1) / dens[b1] ** 2) if not flag else float("nan")
        out["g2_22"] = float(pair(b2, b2) / dens[b2] ** 2) if not flag else float("nan")
        out["g2_12"] = float(pair(b1, b2) / (dens[b1] * dens[b2])) if not flag else float("nan")
    out["g2_flag"] = bool(flag)
    out["residual"] = c.residual
    out["nc"] = c.basis.cutoff
    return out


def solve(lattice: ResolvedLattice, n_c: int = 4, **kwargs) -> CorrelationVector:
    """Assemble and solve the hierarchy in one call."""
    return steady_state_solve(assemble_eom(lattice, _shared_basis(n_c)), **kwargs)


def solve_with_convergence(lattice: ResolvedLattice, n_c: int = 4,
                           key: str = "g2_11") -> dict:
    """Observables at ``n_c`` plus the relative change of ``key`` at ``n_c + 1``."""
    lo = observables(solve(lattice, n_c))
    hi = observables(solve(lattice, n_c + 1))
    delta = abs(hi[key] - lo[key]) / abs(hi[key]) if hi[key] else float("inf")
    lo["convergence_delta"] = float(delta)
    lo["next"] = hi
    return lo
