"""Ideal probability evaluators for the three sampling families.

Three model families share one circuit abstraction: Fock-state boson
sampling (N single photons into the first N modes, permanent-based),
Gaussian boson sampling (pure squeezed vacuum, hafnian-based), and fermion
sampling (determinant-based). Each evaluates exact outcome probabilities at
desk scale, enumerates photon-number sectors, and exposes first-order
marginals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from scipy.special import eval_laguerre

from .kernels import Interferometer, hafnian, permanent, select_submatrix

ENUMERATION_CAP = 10_000_000
GBS_PHOTON_CAP = 10

BOSONIC = "bosonic"
FERMIONIC = "fermionic"


def format_outcome(x: Sequence[int]) -> str:
    """Occupation list as comma-separated text, e.g. ``"0,2,0,1"``."""
    return ",".join(str(int(v)) for v in x)


def parse_outcome(text: str) -> tuple[int, ...]:
    return tuple(int(tok) for tok in text.strip().split(","))


def occupations_to_indices(x: Sequence[int]) -> list[int]:
    """Flatten occupations to mode indices with repetition: (2,0,1) -> [0,0,2]."""
    out: list[int] = []
    for mode, count in enumerate(x):
        out.extend([mode] * int(count))
    return out


@dataclass(frozen=True)
class Sector:
    """All outcomes with a fixed total particle number and statistics."""

    modes: int
    total: int
    statistics: str

    def __post_init__(self):
        if self.statistics not in (BOSONIC, FERMIONIC):
            raise ValueError(f"unknown statistics {self.statistics!r}")
        if self.modes < 1 or self.total < 0:
            raise ValueError("sector requires modes >= 1 and total >= 0")
        if self.statistics == FERMIONIC and self.total > self.modes:
            raise ValueError("fermionic sector cannot hold more particles than modes")

    @property
    def cardinality(self) -> int:
        if self.statistics == BOSONIC:
            return math.comb(self.total + self.modes - 1, self.total)
        return math.comb(self.modes, self.total)

    def contains(self, x: Sequence[int]) -> bool:
        x = tuple(int(v) for v in x)
        if len(x) != self.modes or any(v < 0 for v in x) or sum(x) != self.total:
            return False
        if self.statistics == FERMIONIC and any(v > 1 for v in x):
            return False
        return True

    def outcomes(self) -> Iterator[tuple[int, ...]]:
        """Every outcome exactly once, in ascending lexicographic order."""
        if self.cardinality > ENUMERATION_CAP:
            raise ValueError(
                f"sector cardinality {self.cardinality} exceeds enumeration cap {ENUMERATION_CAP}"
            )
        if self.statistics == BOSONIC:
            yield from _bosonic_outcomes(self.modes, self.total)
        else:
            yield from _fermionic_outcomes(self.modes, self.total)

    def occupancy_matrix(self) -> np.ndarray:
        """(cardinality, modes) int array of all outcomes in lex order."""
        return np.array(list(self.outcomes()), dtype=np.int64).reshape(self.cardinality, self.modes)

    def unrank(self, rank: int) -> tuple[int, ...]:
        """Outcome at position `rank` of the ascending lexicographic order."""
        if not 0 <= rank < self.cardinality:
            raise IndexError(f"rank {rank} outside sector of size {self.cardinality}")
        if self.statistics == BOSONIC:
            return _bosonic_unrank(rank, self.modes, self.total)
        return _fermionic_unrank(rank, self.modes, self.total)

    def rank_of(self, x: Sequence[int]) -> int:
        if not self.contains(x):
            raise ValueError(f"outcome {format_outcome(x)} not in {self}")
        x = tuple(int(v) for v in x)
        rank = 0
        remaining = self.total
        for pos, v in enumerate(x[:-1]):
            parts_left = self.modes - pos - 1
            for smaller in range(v):
                rank += _completions(self.statistics, remaining - smaller, parts_left)
            remaining -= v
        return rank


def _completions(statistics: str, total: int, parts: int) -> int:
    if total < 0:
        return 0
    if statistics == BOSONIC:
        return math.comb(total + parts - 1, total) if parts > 0 else (1 if total == 0 else 0)
    if total > parts:
        return 0
    return math.comb(parts, total)


def _bosonic_outcomes(modes: int, total: int) -> Iterator[tuple[int, ...]]:
    if modes == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _bosonic_outcomes(modes - 1, total - first):
            yield (first,) + rest


def _fermionic_outcomes(modes: int, total: int) -> Iterator[tuple[int, ...]]:
    if total > modes:
        return
    if modes == 1:
        yield (total,)
        return
    for first in range(min(total, 1) + 1):
        for rest in _fermionic_outcomes(modes - 1, total - first):
            yield (first,) + rest


def _bosonic_unrank(rank: int, modes: int, total: int) -> tuple[int, ...]:
    x: list[int] = []
    remaining = total
    for pos in range(modes - 1):
        parts_left = modes - pos - 1
        for v in range(remaining + 1):
            block = math.comb(remaining - v + parts_left - 1, remaining - v)
            if rank < block:
                x.append(v)
                remaining -= v
                break
            rank -= block
    x.append(remaining)
    return tuple(x)


def _fermionic_unrank(rank: int, modes: int, total: int) -> tuple[int, ...]:
    x: list[int] = []
    remaining = total
    for pos in range(modes):
        modes_left = modes - pos - 1
        block0 = math.comb(modes_left, remaining) if remaining <= modes_left else 0
        if rank < block0:
            x.append(0)
        else:
            rank -= block0
            x.append(1)
            remaining -= 1
    return tuple(x)


def single_mode_squeezed_pnd(r: float, n_max: int) -> np.ndarray:
    """Photon-number distribution of a squeezed vacuum with parameter r."""
    out = np.zeros(n_max + 1)
    if r == 0.0:
        out[0] = 1.0
        return out
    log_tanh = math.log(math.tanh(r))
    for k in range(n_max // 2 + 1):
        n = 2 * k
        log_p = (
            math.lgamma(n + 1)
            - n * math.log(2.0)
            - 2.0 * math.lgamma(k + 1)
            + n * log_tanh
        )
        out[n] = math.exp(log_p) / math.cosh(r)
    return out


def gaussian_mode_pnd(nbar: float, m: complex, n_max: int) -> np.ndarray:
    """Photon-number distribution of a zero-mean single-mode Gaussian state.

    The state is specified by its moments nbar = <a†a> and m = <aa>. The
    Wigner-function overlap with each Fock state reduces to a 2D Gaussian
    integral of a Laguerre polynomial, which Gauss-Hermite quadrature with
    enough nodes evaluates exactly (up to round-off).
    """
    sigma = np.array(
        [[0.5 + nbar + m.real, m.imag], [m.imag, 0.5 + nbar - m.real]]
    )
    det_sigma = sigma[0, 0] * sigma[1, 1] - sigma[0, 1] ** 2
    if det_sigma < 0.25 - 1e-9:
        raise ValueError("moments do not describe a physical Gaussian state")
    a = np.linalg.inv(sigma) + 2.0 * np.eye(2)
    lam = np.linalg.eigvalsh(a)
    out = np.empty(n_max + 1)
    for n in range(n_max + 1):
        nodes, weights = hermegauss(n + 4)
        arg = 2.0 * (nodes[:, None] ** 2 / lam[0] + nodes[None, :] ** 2 / lam[1])
        integral = float(np.sum(weights[:, None] * weights[None, :] * eval_laguerre(n, arg)))
        out[n] = (-1.0) ** n * integral / (np.pi * math.sqrt(det_sigma * lam[0] * lam[1]))
    return out


class FockBosonSampling:
    """N single photons into the first N modes of an M-mode circuit."""

    statistics = BOSONIC
    family = "fbs"

    def __init__(self, interferometer: Interferometer, photons: int):
        if not 0 <= photons <= interferometer.modes:
            raise ValueError("need 0 <= photons <= modes")
        self.interferometer = interferometer
        self.photons = photons
        self._marginal_table: np.ndarray | None = None

    @property
    def modes(self) -> int:
        return self.interferometer.modes

    def sector(self) -> Sector:
        return Sector(self.modes, self.photons, BOSONIC)

    def _check(self, x: Sequence[int]) -> tuple[int, ...]:
        x = tuple(int(v) for v in x)
        if len(x) != self.modes:
            raise ValueError(f"outcome has {len(x)} modes, expected {self.modes}")
        if sum(x) != self.photons:
            raise ValueError(
                f"outcome {format_outcome(x)} has {sum(x)} photons, expected {self.photons}"
            )
        return x

    def probability(self, x: Sequence[int]) -> float:
        x = self._check(x)
        cols = occupations_to_indices(x)
        sub = select_submatrix(self.interferometer, range(self.photons), cols)
        norm = math.prod(math.factorial(v) for v in x)
        return abs(permanent(sub)) ** 2 / norm

    def log_probability(self, x: Sequence[int]) -> float:
        p = self.probability(x)
        return math.log(p) if p > 0.0 else -math.inf

    def log_probabilities(self, occupancy: np.ndarray) -> np.ndarray:
        return np.array([self.log_probability(row) for row in occupancy])

    def marginal(self, mode: int) -> np.ndarray:
        """Occupation distribution of one mode, by exhaustive sector summation."""
        if not 0 <= mode < self.modes:
            raise ValueError(f"mode {mode} out of range")
        return self.marginal_table()[mode]

    def marginal_table(self) -> np.ndarray:
        if self._marginal_table is None:
            table = np.zeros((self.modes, self.photons + 1))
            for x in self.sector().outcomes():
                p = self.probability(x)
                for mode, occ in enumerate(x):
                    table[mode, occ] += p
            self._marginal_table = table
        return self._marginal_table


class FermionSampling:
    """Fermionic analogue: occupation patterns are bit strings."""

    statistics = FERMIONIC
    family = "fs"

    def __init__(self, interferometer: Interferometer, particles: int):
        if not 0 <= particles <= interferometer.modes:
            raise ValueError("need 0 <= particles <= modes")
        self.interferometer = interferometer
        self.particles = particles
        # K = A†A with A the first N rows: the projection kernel whose
        # diagonal gives per-mode occupation probabilities.
        a = interferometer.matrix[:particles, :]
        self.kernel = a.conj().T @ a

    @property
    def modes(self) -> int:
        return self.interferometer.modes

    def sector(self) -> Sector:
        return Sector(self.modes, self.particles, FERMIONIC)

    def _check(self, x: Sequence[int]) -> tuple[int, ...]:
        x = tuple(int(v) for v in x)
        if len(x) != self.modes:
            raise ValueError(f"outcome has {len(x)} modes, expected {self.modes}")
        if any(v not in (0, 1) for v in x):
            raise ValueError(f"fermionic outcome must be binary, got {format_outcome(x)}")
        if sum(x) != self.particles:
            raise ValueError(
                f"outcome {format_outcome(x)} has {sum(x)} particles, expected {self.particles}"
            )
        return x

    def probability(self, x: Sequence[int]) -> float:
        return math.exp(self.log_probability(x))

    def log_probability(self, x: Sequence[int]) -> float:
        x = self._check(x)
        cols = [i for i, v in enumerate(x) if v]
        sub = select_submatrix(self.interferometer, range(self.particles), cols)
        sign, logdet = np.linalg.slogdet(sub)
        if sign == 0:
            return -math.inf
        return 2.0 * logdet

    def log_probabilities(self, occupancy: np.ndarray) -> np.ndarray:
        occupancy = np.asarray(occupancy)
        n = self.particles
        if n == 0:
            return np.zeros(len(occupancy))
        rows = self.interferometer.matrix[:n, :]
        cols = np.argsort(occupancy == 0, axis=1, kind="stable")[:, :n]
        stack = rows[:, cols].transpose(1, 0, 2)
        sign, logdet = np.linalg.slogdet(stack)
        out = np.where(sign == 0, -np.inf, 2.0 * logdet)
        return out

    def occupation_probabilities(self) -> np.ndarray:
        """Pr(mode occupied) for every mode: the kernel diagonal."""
        return np.real(np.diagonal(self.kernel)).copy()

    def marginal(self, mode: int) -> np.ndarray:
        if not 0 <= mode < self.modes:
            raise ValueError(f"mode {mode} out of range")
        p_occ = float(np.real(self.kernel[mode, mode]))
        return np.array([1.0 - p_occ, p_occ])

    def marginal_table(self) -> np.ndarray:
        occ = self.occupation_probabilities()
        return np.stack([1.0 - occ, occ], axis=1)


class GaussianBosonSampling:
    """Pure squeezed vacuum through a lossless interferometer.

    Photon-number-resolving detection; zero displacement and zero thermal
    photons, so outcome probabilities reduce to hafnians of submatrices of
    B = U diag(tanh r) U^T.
    """

    statistics = BOSONIC
    family = "gbs"

    def __init__(
        self,
        interferometer: Interferometer,
        squeezing: Sequence[float],
        photon_cap: int = GBS_PHOTON_CAP,
    ):
        squeezing = np.asarray(squeezing, dtype=float)
        if squeezing.shape != (interferometer.modes,):
            raise ValueError("need one squeezing parameter per mode")
        if np.any(squeezing < 0):
            raise ValueError("squeezing parameters must be >= 0")
        self.interferometer = interferometer
        self.squeezing = squeezing
        self.photon_cap = int(photon_cap)
        u = interferometer.matrix
        self.b_matrix = u @ np.diag(np.tanh(squeezing)) @ u.T
        self._log_vacuum = -float(np.sum(np.log(np.cosh(squeezing))))
        self._nbar_matrix = u @ np.diag(np.sinh(squeezing) ** 2) @ u.conj().T
        self._m_matrix = u @ np.diag(np.sinh(squeezing) * np.cosh(squeezing)) @ u.T
        self._marginal_cache: dict[int, np.ndarray] = {}

    @property
    def modes(self) -> int:
        return self.interferometer.modes

    @property
    def mean_photons(self) -> float:
        return float(np.sum(np.sinh(self.squeezing) ** 2))

    def sector(self, total: int) -> Sector:
        return Sector(self.modes, total, BOSONIC)

    def probability(self, x: Sequence[int]) -> float:
        x = tuple(int(v) for v in x)
        if len(x) != self.modes:
            raise ValueError(f"outcome has {len(x)} modes, expected {self.modes}")
        if any(v < 0 for v in x):
            raise ValueError("occupations must be >= 0")
        total = sum(x)
        if total > self.photon_cap:
            raise ValueError(f"total photons {total} exceeds cap {self.photon_cap}")
        if total % 2:
            return 0.0  # odd-dimension hafnian reads as 0
        idx = occupations_to_indices(x)
        bx = self.b_matrix[np.ix_(idx, idx)]
        haf = hafnian(bx) if total else 1.0
        norm = math.prod(math.factorial(v) for v in x)
        return abs(haf) ** 2 / norm * math.exp(self._log_vacuum)

    def log_probability(self, x: Sequence[int]) -> float:
        p = self.probability(x)
        return math.log(p) if p > 0.0 else -math.inf

    def log_probabilities(self, occupancy: np.ndarray) -> np.ndarray:
        return np.array([self.log_probability(row) for row in occupancy])

    def total_photon_distribution(self, n_max: int) -> np.ndarray:
        """Pr(total = 0..n_max), by convolving the single-mode distributions.

        Lossless circuits preserve total photon number, so the interferometer
        drops out entirely.
        """
        if n_max < 0:
            raise ValueError("n_max must be >= 0")
        dist = np.zeros(n_max + 1)
        dist[0] = 1.0
        for r in self.squeezing:
            dist = np.convolve(dist, single_mode_squeezed_pnd(float(r), n_max))[: n_max + 1]
        return dist

    def marginal(self, mode: int, n_max: int = GBS_PHOTON_CAP) -> np.ndarray:
        """Photon-number distribution of the reduced single-mode state."""
        if not 0 <= mode < self.modes:
            raise ValueError(f"mode {mode} out of range")
        cached = self._marginal_cache.get(mode)
        if cached is None or len(cached) < n_max + 1:
            nbar = float(np.real(self._nbar_matrix[mode, mode]))
            m = complex(self._m_matrix[mode, mode])
            cached = gaussian_mode_pnd(nbar, m, n_max)
            self._marginal_cache[mode] = cached
        return cached[: n_max + 1]

    def marginal_table(self, n_max: int = GBS_PHOTON_CAP) -> np.ndarray:
        return np.stack([self.marginal(i, n_max) for i in range(self.modes)])


Model = FockBosonSampling | FermionSampling | GaussianBosonSampling


def sector_probabilities(model: Model, sector: Sector) -> np.ndarray:
    """Exact probability of every sector outcome, in lexicographic order."""
    occupancy = sector.occupancy_matrix()
    return np.exp(model.log_probabilities(occupancy))
