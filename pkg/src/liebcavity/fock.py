"""Truncated Fock spaces, ladder operators and the many-body Hamiltonian."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb

import numpy as np
import scipy.sparse as sp

from .model import SITE_INDEX, SITES, ModelParams, ResolvedLattice, resolve

N_SITES = len(SITES)


class FockBasis:
    """Occupation-number basis with a per-site cutoff.

    Parameters
    ----------
    n_max : int
        Largest occupation allowed on any site.
    max_total : int, optional
        Additional cap on the total photon number. Without it the basis has
        ``(n_max + 1) ** 6`` states.
    total : int, optional
        Keep only states with exactly this many photons (a number sector).
    """

    def __init__(self, n_max: int, max_total: int | None = None,
                 total: int | None = None, n_sites: int = N_SITES):
        if n_max < 0:
            raise ValueError("n_max must be non-negative")
        self.n_max = n_max
        self.max_total = max_total
        self.total = total
        self.n_sites = n_sites
        grid = np.array(list(itertools.product(range(n_max + 1), repeat=n_sites)),
                        dtype=np.int64).reshape(-1, n_sites)
        sums = grid.sum(axis=1)
        keep = np.ones(len(grid), dtype=bool)
        if max_total is not None:
            keep &= sums <= max_total
        if total is not None:
            keep &= sums == total
        self.states = grid[keep]
        self.states.setflags(write=False)
        self._codes = self._encode(self.states)
        self.index = {tuple(int(x) for x in s): i for i, s in enumerate(self.states)}

    def __len__(self):
        return len(self.states)

    @property
    def dim(self) -> int:
        return len(self.states)

    def _encode(self, states: np.ndarray) -> np.ndarray:
        weights = (self.n_max + 1) ** np.arange(self.n_sites - 1, -1, -1)
        return states @ weights

    def lookup(self, states: np.ndarray) -> np.ndarray:
        """Positions of occupation vectors, -1 where absent from the basis."""
        states = np.atleast_2d(states)
        valid = np.all((states >= 0) & (states <= self.n_max), axis=1)
        codes = self._encode(np.clip(states, 0, self.n_max))
        pos = np.searchsorted(self._codes, codes)
        pos = np.clip(pos, 0, len(self._codes) - 1)
        found = valid & (self._codes[pos] == codes)
        return np.where(found, pos, -1)

    def ket(self, occupation) -> np.ndarray:
        v = np.zeros(self.dim, dtype=complex)
        v[self.index[tuple(occupation)]] = 1.0
        return v


def SectorBasis(total_n: int, n_sites: int = N_SITES) -> FockBasis:
    """All states with exactly ``total_n`` photons; size ``C(total_n + 5, 5)``."""
    basis = FockBasis(total_n, total=total_n, n_sites=n_sites)
    assert basis.dim == comb(total_n + n_sites - 1, n_sites - 1)
    return basis


def annihilation(site, basis: FockBasis) -> sp.csr_matrix:
    """Sparse matrix of the lowering operator on ``site`` (name or index)."""
    i = SITE_INDEX[site] if isinstance(site, str) else int(site)
    occ = basis.states[:, i]
    src = np.flatnonzero(occ > 0)
    lowered = basis.states[src].copy()
    lowered[:, i] -= 1
    dst = basis.lookup(lowered)
    ok = dst >= 0
    data = np.sqrt(occ[src[ok]]).astype(complex)
    return sp.csr_matrix((data, (dst[ok], src[ok])), shape=(basis.dim, basis.dim))


def creation(site, basis: FockBasis) -> sp.csr_matrix:
    return annihilation(site, basis).T.conj().tocsr()


def number(site, basis: FockBasis) -> sp.csr_matrix:
    i = SITE_INDEX[site] if isinstance(site, str) else int(site)
    return sp.diags(basis.states[:, i].astype(complex), format="csr")


def ladder_operators(basis: FockBasis, displacement=None) -> list[sp.csr_matrix]:
    """Annihilators for every site, shifted by ``displacement`` times identity.

    With a displacement ``alpha`` the returned operators represent the
    physical fields ``a_s + alpha_s`` in a coherently displaced basis.
    """
    ops = [annihilation(i, basis) for i in range(basis.n_sites)]
    if displacement is not None:
        eye = sp.identity(basis.dim, dtype=complex, format="csr")
        ops = [(a + complex(al) * eye).tocsr() for a, al in zip(ops, displacement)]
    return ops


def hamiltonian(lattice: ResolvedLattice, basis: FockBasis,
                include_drive: bool = True, displacement=None) -> sp.csr_matrix:
    """Rotating-frame Bose-Hubbard Hamiltonian on ``basis``.

    ``sum_s (-delta_s n_s + U/2 s+ s+ s s) - sum_edges J (s+ r + r+ s)
    + sum_c (F c+ + F* c)``. Every operator product is normal ordered, so the
    matrix is the exact projection onto the truncated space.
    """
    if basis.total is not None:
        # ladder operators leave a number sector, so build on the enclosing
        # capped space and project back
        outer = FockBasis(basis.n_max, max_total=basis.total, n_sites=basis.n_sites)
        keep = outer.lookup(basis.states)
        h = hamiltonian(lattice, outer, include_drive, displacement)
        return h[keep][:, keep].tocsr()
    ops = ladder_operators(basis, displacement)
    dag = [a.T.conj().tocsr() for a in ops]
    h = sp.csr_matrix((basis.dim, basis.dim), dtype=complex)
    for s in range(basis.n_sites):
        h = h - lattice.detuning[s] * (dag[s] @ ops[s])
        if lattice.u != 0:
            h = h + 0.5 * lattice.u * (dag[s] @ dag[s] @ ops[s] @ ops[s])
    for k, (s, r) in enumerate(lattice.edges):
        hop = dag[s] @ ops[r]
        h = h - lattice.hopping[k] * (hop + hop.T.conj())
    if include_drive:
        for s in range(basis.n_sites):
            f = lattice.drive[s]
            if f != 0:
                h = h + f * dag[s] + np.conj(f) * ops[s]
    h.eliminate_zeros()
    return h.tocsr()


def hermiticity_error(op) -> float:
    diff = op - op.T.conj()
    return float(abs(diff).max()) if diff.nnz else 0.0


def sector_blocks_offdiag(op, basis: FockBasis) -> float:
    """Largest matrix element connecting different photon-number sectors."""
    totals = basis.states.sum(axis=1)
    coo = sp.coo_matrix(op)
    mask = totals[coo.row] != totals[coo.col]
    return float(np.max(np.abs(coo.data[mask]))) if mask.any() else 0.0


# ---------------------------------------------------------------------------
# two-photon sector

def _two_photon_state(terms) -> np.ndarray:
    basis = SectorBasis(2)
    v = np.zeros(basis.dim, dtype=complex)
    for coef, occ in terms:
        v[basis.index[occ]] += coef
    return v / np.linalg.norm(v)


def psi_double_occupancy() -> np.ndarray:
    """Equal-weight double occupancy, sign -1 on the b-sites."""
    terms = []
    for i, s in enumerate(SITES):
        occ = [0] * 6
        occ[i] = 2
        terms.append((-1.0 if s.startswith("b") else 1.0, tuple(occ)))
    return _two_photon_state(terms)


def psi_cell_pairs() -> np.ndarray:
    """One photon on each partner site of the two cells: a1a2 - b1b2 + c1c2."""
    terms = []
    for sub, sign in (("a", 1.0), ("b", -1.0), ("c", 1.0)):
        occ = [0] * 6
        occ[SITE_INDEX[sub + "1"]] = occ[SITE_INDEX[sub + "2"]] = 1
        terms.append((sign, tuple(occ)))
    return _two_photon_state(terms)


@dataclass(frozen=True)
class TwoPhotonSpectrum:
    energies: np.ndarray       # relative to 2 omega_c, ascending
    eigenvectors: np.ndarray   # columns over SectorBasis(2)
    basis: FockBasis


def two_photon_spectrum(params: ModelParams) -> TwoPhotonSpectrum:
    """Exact diagonalization of the closed lattice in the N=2 sector.

    Energies are measured from ``2 omega_c``; drive and disorder are ignored.
    """
    clean = resolve(params.replace(delta=0.0, f=0.0))
    basis = SectorBasis(2)
    h = hamiltonian(clean, basis, include_drive=False).toarray()
    energies, vecs = np.linalg.eigh(h)
    return TwoPhotonSpectrum(energies, vecs, basis)


def _dark_double_weight(vec, basis):
    b = [SITE_INDEX["b1"], SITE_INDEX["b2"]]
    mask = np.any(basis.states[:, b] == 2, axis=1)
    return float(np.sum(np.abs(vec[mask]) ** 2))


def _dark_pair_weight(vec, basis):
    b = [SITE_INDEX["b1"], SITE_INDEX["b2"]]
    mask = np.all(basis.states[:, b] == 1, axis=1)
    return float(np.sum(np.abs(vec[mask]) ** 2))


def two_photon_rows(spec: TwoPhotonSpectrum) -> list[dict]:
    p1, p2 = psi_double_occupancy(), psi_cell_pairs()
    rows = []
    for i, e in enumerate(spec.energies):
        v = spec.eigenvectors[:, i]
        rows.append({
            "index": i,
            "energy_minus_2wc": float(e),
            "overlap_psi1": float(abs(p1.conj() @ v)),
            "overlap_psi2": float(abs(p2.conj() @ v)),
            "darksite_weight": _dark_double_weight(v, spec.basis),
        })
    return rows


def resonant_state_overlaps(params: ModelParams, n_states: int = 5) -> list[dict]:
    """The ``n_states`` two-photon levels closest to ``2 omega_c``.

    For each: energy offset, overlaps with the double-occupancy and cell-pair
    states, and the weight of doubly occupied or singly-paired dark sites.
    """
    spec = two_photon_spectrum(params)
    order = np.argsort(np.abs(spec.energies))[:n_states]
    order = order[np.argsort(spec.energies[order])]
    rows = two_photon_rows(spec)
    out = []
    for i in order:
        row = dict(rows[i])
        row["darksite_pair_weight"] = _dark_pair_weight(spec.eigenvectors[:, i], spec.basis)
        out.append(row)
    return out


def resonant_cluster(u_grid, j: float = 3.0, n_states: int = 5) -> np.ndarray:
    """Energies (rows: U values) of the levels nearest ``2 omega_c``."""
    out = []
    for u in u_grid:
        spec = two_photon_spectrum(ModelParams(u=u, j=j))
        idx = np.argsort(np.abs(spec.energies))[:n_states]
        out.append(np.sort(spec.energies[idx]))
    return np.array(out)
