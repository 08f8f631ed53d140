"""Noisy Fock-state boson sampling: photon loss and partial distinguishability."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations
from typing import Sequence

import numpy as np

from .kernels import Interferometer, _permanent_gray, permanent, select_submatrix
from .models import FockBosonSampling, format_outcome, occupations_to_indices

PD_PHOTON_CAP = 7
IMAG_RESIDUE_TOL = 1e-9


@dataclass(frozen=True)
class NoiseSpec:
    """Uniform noise parameters: transmission and pairwise distinguishability.

    Both live in [0, 1]. Distinguishability 1 means fully indistinguishable
    photons (ideal interference); 0 means fully distinguishable.
    """

    transmission: float = 1.0
    distinguishability: float = 1.0

    def __post_init__(self):
        for name in ("transmission", "distinguishability"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")


def lossy_probability(u: Interferometer, photons: int, x: Sequence[int], transmission: float) -> float:
    """Probability of the surviving N-photon branch under uniform loss.

    Loss rescales every N-photon outcome by transmission^N; lower-photon
    branches are not modeled here.
    """
    if not 0.0 <= transmission <= 1.0:
        raise ValueError("transmission must be in [0, 1]")
    ideal = FockBosonSampling(u, photons).probability(x)
    return transmission**photons * ideal


def partially_distinguishable_probability(
    u: Interferometer, photons: int, x: Sequence[int], distinguishability: float
) -> float:
    """Outcome probability with uniform pairwise photon overlap.

    Sums over permutations sigma with weight d^(N - #fixed points) times the
    permanent of the elementwise product U_x * conj(U_x with columns permuted
    by sigma); the d = 1 case reassembles |Per U_x|^2 and d = 0 leaves only
    the distinguishable-boson term.
    """
    if not 0.0 <= distinguishability <= 1.0:
        raise ValueError("distinguishability must be in [0, 1]")
    x = tuple(int(v) for v in x)
    if sum(x) != photons:
        raise ValueError(f"outcome {format_outcome(x)} has {sum(x)} photons, expected {photons}")
    if photons > PD_PHOTON_CAP:
        raise ValueError(
            f"partial distinguishability limited to N <= {PD_PHOTON_CAP} "
            f"(cost N! 2^N N), got N = {photons}"
        )
    cols = occupations_to_indices(x)
    sub = select_submatrix(u, range(photons), cols)
    conj = sub.conj()
    d = float(distinguishability)
    total = 0.0 + 0.0j
    if photons == 0:
        return 1.0
    for sigma in permutations(range(photons)):
        fixed = sum(1 for j, s in enumerate(sigma) if j == s)
        power = photons - fixed
        weight = 1.0 if power == 0 else d**power
        if weight == 0.0:
            continue
        total += weight * _permanent_gray(np.ascontiguousarray(sub * conj[:, sigma]))
    residue = abs(total.imag)
    if residue > IMAG_RESIDUE_TOL * max(1.0, abs(total.real)):
        raise ArithmeticError(f"imaginary residue {residue:.3e} exceeds tolerance")
    norm = math.prod(math.factorial(v) for v in x)
    return total.real / norm


def distinguishable_probability(u: Interferometer, photons: int, x: Sequence[int]) -> float:
    """Fully distinguishable bosons: permanent of the |U_x|^2 matrix."""
    cols = occupations_to_indices(tuple(int(v) for v in x))
    sub = select_submatrix(u, range(photons), cols)
    norm = math.prod(math.factorial(int(v)) for v in x)
    value = permanent(np.abs(sub) ** 2)
    return value.real / norm
