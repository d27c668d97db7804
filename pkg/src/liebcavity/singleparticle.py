"""One-photon spectrum of the closed, undriven lattice and its flat band."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import SITE_INDEX, SITES, ResolvedLattice

DEGENERACY_TOL = 1e-9

# cell swap a1<->a2, b1<->b2, c1<->c2
CELL_SWAP = np.zeros((6, 6))
for _i in range(3):
    CELL_SWAP[_i, _i + 3] = CELL_SWAP[_i + 3, _i] = 1.0


def flat_band_states() -> np.ndarray:
    """The two flat-band states in the site basis, as columns (k=0, k=pi)."""
    k0 = np.zeros(6)
    k0[[SITE_INDEX["a1"], SITE_INDEX["a2"]]] = 1.0
    k0[[SITE_INDEX["c1"], SITE_INDEX["c2"]]] = -2.0
    kpi = np.zeros(6)
    kpi[SITE_INDEX["a1"]], kpi[SITE_INDEX["a2"]] = 1.0, -1.0
    return np.column_stack([k0 / np.sqrt(10), kpi / np.sqrt(2)])


def single_particle_hamiltonian(lattice: ResolvedLattice,
                                frame: str = "lab") -> np.ndarray:
    """6x6 one-photon Hamiltonian.

    ``frame="lab"`` puts the cavity frequencies ``omega_c + (delta - delta_s)``
    on the diagonal; ``frame="rotating"`` puts ``-delta_s``.
    """
    if frame == "lab":
        diag = lattice.omega_c + (lattice.delta - lattice.detuning)
    elif frame == "rotating":
        diag = -lattice.detuning
    else:
        raise ValueError(f"unknown frame {frame!r}")
    return np.diag(diag).astype(complex) - lattice.hopping_matrix()


def bloch_hamiltonian(k: float, j: float, omega_c: float = 0.0) -> np.ndarray:
    """3x3 Bloch matrix in the (a, b, c) sublattice basis for the clean ring."""
    ab = -j * (1 + np.exp(1j * k))
    return np.array([[omega_c, ab, 0],
                     [np.conj(ab), omega_c, -j],
                     [0, -j, omega_c]], dtype=complex)


@dataclass(frozen=True)
class SingleParticleSpectrum:
    energies: np.ndarray       # ascending
    eigenvectors: np.ndarray   # columns
    k_labels: tuple[str, ...]  # "0", "pi" or "mixed"
    hamiltonian: np.ndarray


def _group_levels(energies, tol=DEGENERACY_TOL):
    groups, start = [], 0
    for i in range(1, len(energies) + 1):
        if i == len(energies) or energies[i] - energies[i - 1] > tol:
            groups.append(list(range(start, i)))
            start = i
    return groups


def diagonalize(lattice: ResolvedLattice, frame: str = "lab") -> SingleParticleSpectrum:
    """Diagonalize the one-photon Hamiltonian and label states by cell parity.

    Inside each degenerate group the swap operator is diagonalized as well, so
    every eigenvector of the clean lattice has a definite parity.
    """
    h = single_particle_hamiltonian(lattice, frame)
    energies, vecs = np.linalg.eigh(h)
    vecs = vecs.copy()
    for group in _group_levels(energies):
        if len(group) > 1:
            sub = vecs[:, group]
            p = sub.conj().T @ CELL_SWAP @ sub
            _, w = np.linalg.eigh(p)
            vecs[:, group] = sub @ w
    labels = []
    for col in vecs.T:
        parity = np.real(col.conj() @ CELL_SWAP @ col)
        if abs(parity - 1) < 1e-8:
            labels.append("0")
        elif abs(parity + 1) < 1e-8:
            labels.append("pi")
        else:
            labels.append("mixed")
    return SingleParticleSpectrum(energies, vecs, tuple(labels), h)


@dataclass(frozen=True)
class FlatBandReport:
    energy: float
    degeneracy: int
    splitting: float
    max_dark_amplitude: float
    projector_error: float

    @property
    def is_flat(self) -> bool:
        return self.degeneracy == 2 and self.max_dark_amplitude < 1e-10


def flat_band_check(spectrum: SingleParticleSpectrum,
                    omega_c: float = 0.0) -> FlatBandReport:
    """Locate the two levels closest to ``omega_c`` and test the dark-site property.

    Under disorder the pair splits; the splitting is reported rather than
    treated as failure.
    """
    e = spectrum.energies
    idx = np.argsort(np.abs(e - omega_c))[:2]
    idx.sort()
    splitting = float(abs(e[idx[1]] - e[idx[0]]))
    degeneracy = 2 if splitting < DEGENERACY_TOL else 1
    sub = spectrum.eigenvectors[:, idx]
    dark = [SITE_INDEX["b1"], SITE_INDEX["b2"]]
    max_dark = float(np.max(np.abs(sub[dark, :])))
    proj = sub @ sub.conj().T
    ref = flat_band_states()
    proj_ref = ref @ ref.T
    err = float(np.linalg.norm(proj - proj_ref, 2))
    return FlatBandReport(float(np.mean(e[idx])), degeneracy, splitting,
                          max_dark, err)


def spectrum_rows(spectrum: SingleParticleSpectrum) -> list[dict]:
    """Rows for the single-particle CSV table."""
    rows = []
    for i, (energy, label) in enumerate(zip(spectrum.energies, spectrum.k_labels)):
        row = {"index": i, "energy": float(energy), "k_label": label}
        vec = spectrum.eigenvectors[:, i]
        # fix the global phase on the largest component for stable output
        big = np.argmax(np.abs(vec))
        vec = vec * np.exp(-1j * np.angle(vec[big]))
        for s, amp in zip(SITES, vec):
            row[f"amp_{s}_re"] = float(amp.real)
            row[f"amp_{s}_im"] = float(amp.imag)
        rows.append(row)
    return rows
