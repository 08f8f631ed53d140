"""Closed-form XE expectations and the Monte Carlo estimators checking them.

Everything here lives in the collision-free regime, where submatrices of
large Haar-random unitaries behave like complex Gaussian matrices. Closed
forms are evaluated in the log domain (factorials via lgamma) and validated
against seeded Monte Carlo.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .kernels import Seed, permanents_batch

E_SQUARED = math.exp(2.0)
VARIANCE_WARNING_FRACTION = 0.5


@dataclass(frozen=True)
class TheoryResult:
    closed_form: float
    estimate: float
    std_error: float
    trials: int
    params: dict = field(default_factory=dict)

    @property
    def variance_warning(self) -> bool:
        return self.std_error > VARIANCE_WARNING_FRACTION * abs(self.estimate)

    @property
    def relative_error(self) -> float:
        return abs(self.estimate - self.closed_form) / abs(self.closed_form)


def _log_factorial(n: int) -> float:
    return math.lgamma(n + 1)


def closed_form_xe_id(photons: int, modes: int) -> tuple[float, float]:
    """Mean ideal linear XE over Haar circuits: exact and large-M forms.

    Exact: C(M,N) N! (N+1)! / M^(2N), summed over collision-free outcomes.
    Approximation: (N+1)! / M^N.
    """
    if photons > 20:
        raise ValueError("factorial forms limited to N <= 20")
    n, m = photons, modes
    log_exact = (
        _log_factorial(m) - _log_factorial(n) - _log_factorial(m - n)
        + _log_factorial(n) + _log_factorial(n + 1) - 2 * n * math.log(m)
    )
    log_approx = _log_factorial(n + 1) - n * math.log(m)
    return math.exp(log_exact), math.exp(log_approx)


def closed_form_xe_idp(photons: int, modes: int) -> float:
    """Mean linear XE of a sampler independent of the circuit: N!/M^N."""
    return math.exp(_log_factorial(photons) - photons * math.log(modes))


def pd_bound(rho: float, photons: int) -> float:
    """Upper bound on the normalized XE under pairwise distinguishability rho:
    e^2 (1 - rho^(N+1)) / (1 - rho)."""
    if not 0.0 <= rho <= 1.0:
        raise ValueError("rho must be in [0, 1]")
    if rho == 1.0:
        raise ValueError("rho = 1 is singular; the limit is (N+1) e^2")
    if rho == 0.0:
        return E_SQUARED
    return E_SQUARED * (1.0 - rho ** (photons + 1)) / (1.0 - rho)


def derangements(n: int) -> int:
    """Number of fixed-point-free permutations, by the standard recurrence."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if n == 0:
        return 1
    if n == 1:
        return 0
    prev2, prev1 = 1, 0
    for m in range(2, n + 1):
        prev2, prev1 = prev1, (m - 1) * (prev1 + prev2)
    return prev1


def _pd_inner_sum(k: int) -> int:
    return sum(
        math.comb(k, j) ** 2 * math.factorial(j) * math.factorial(k - j)
        * derangements(k - j) * 2**j
        for j in range(k + 1)
    )


def pd_exact_xe_expectation(rho: float, photons: int, modes: int) -> float:
    """Mean linear XE between ideal and partially distinguishable outputs.

    Exact combinatorial expansion over collision-free outcomes; the
    coefficients count permutation pairs by their number of coinciding
    entries, with derangement factors for the rest.
    """
    if photons > 12:
        raise ValueError("exact expansion limited to N <= 12")
    if not 0.0 <= rho <= 1.0:
        raise ValueError("rho must be in [0, 1]")
    n, m = photons, modes
    log_prefactor = (
        _log_factorial(m) - _log_factorial(n) - _log_factorial(m - n)
        - 2 * n * math.log(m)
    )
    total = 0.0
    for k in range(n + 1):
        power = n - k
        weight = 1.0 if power == 0 else rho**power
        if weight == 0.0:
            continue
        coeff = (
            math.comb(n, k) ** 2
            * math.factorial(n - k)
            * derangements(n - k)
            * _pd_inner_sum(k)
        )
        total += weight * coeff
    return math.exp(log_prefactor) * total


def closed_form_h_power_moments(photons: int, power: int) -> tuple[float, float]:
    """Gaussian-proxy moments of the multinomial score raised to a power.

    Returns (E[h~^s], E[p~ h~^s]) where p~ is the normalized squared
    permanent and h~ the normalized column-sum product; their ratio is
    (1 + s/N)^N.
    """
    if power < 0 or photons < 1:
        raise ValueError("need integer power >= 0 and N >= 1")
    n, s = photons, power
    log_eh = n * (_log_factorial(n + s - 1) - _log_factorial(n - 1)) - s * n * math.log(n)
    log_eph = n * (_log_factorial(n + s) - _log_factorial(n)) - s * n * math.log(n)
    return math.exp(log_eh), math.exp(log_eph)


def h_power_ratio(photons: int, power: int) -> float:
    """(1 + s/N)^N, the closed-form XE boost of the s-th power score."""
    return (1.0 + power / photons) ** photons


def _mean_and_stderr(values: np.ndarray) -> tuple[float, float]:
    n = len(values)
    mean = math.fsum(values) / n
    if n == 1:
        return mean, 0.0
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var / n)


def mc_gaussian_permanent_moments(
    photons: int, draws: int, seed: Seed
) -> tuple[TheoryResult, TheoryResult]:
    """Estimate E|Per Z|^2 and E|Per Z|^4 over complex Gaussian matrices.

    Targets are N! and N!(N+1)! respectively.
    """
    if draws < 2:
        raise ValueError("need at least 2 draws")
    n = photons
    sq = np.empty(draws)
    done = 0
    task = 0
    while done < draws:
        b = min(8192, draws - done)
        rng = seed.child(task).generator()
        z = (rng.standard_normal((b, n, n)) + 1j * rng.standard_normal((b, n, n))) / np.sqrt(2.0)
        sq[done : done + b] = np.abs(permanents_batch(z)) ** 2
        done += b
        task += 1
    m2, se2 = _mean_and_stderr(sq)
    m4, se4 = _mean_and_stderr(sq**2)
    second = TheoryResult(
        closed_form=float(math.factorial(n)),
        estimate=m2, std_error=se2, trials=draws, params={"N": n, "moment": 2},
    )
    fourth = TheoryResult(
        closed_form=float(math.factorial(n) * math.factorial(n + 1)),
        estimate=m4, std_error=se4, trials=draws, params={"N": n, "moment": 4},
    )
    return second, fourth


def _haar_rows(n_rows: int, modes: int, seed: Seed) -> np.ndarray:
    # first n_rows rows of a Haar unitary, drawn directly as a Haar frame
    # (QR of an M x n Gaussian with R-diagonal phase fix); the estimators
    # below only ever touch these rows
    rng = seed.generator()
    z = (rng.standard_normal((modes, n_rows)) + 1j * rng.standard_normal((modes, n_rows))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z, mode="reduced")
    d = np.diagonal(r)
    q = q * (d / np.abs(d))
    return q.conj().T


def _collision_free_subsets(modes: int, photons: int, count: int, rng) -> np.ndarray:
    keys = rng.random((count, modes))
    return np.argpartition(keys, photons - 1, axis=1)[:, :photons]


def _column_subset_permanents(rows: np.ndarray, subsets: np.ndarray, chunk: int = 16384) -> np.ndarray:
    out = np.empty(len(subsets), dtype=np.complex128)
    for start in range(0, len(subsets), chunk):
        block = subsets[start : start + chunk]
        stack = rows[:, block].transpose(1, 0, 2)
        out[start : start + len(block)] = permanents_batch(stack)
    return out


def mc_xe_id(
    photons: int,
    modes: int,
    trials: int,
    seed: Seed,
    subsample: int = 2000,
    enumerate_cap: int = 100_000,
) -> TheoryResult:
    """Monte Carlo over Haar circuits of the ideal linear XE.

    Each trial draws a fresh Haar unitary and sums |Per U_x|^4 over
    collision-free outcomes: exhaustively when C(M,N) is small, otherwise
    over a uniform subsample scaled back up by the outcome count.
    """
    if photons > 6:
        raise ValueError("mc_xe_id limited to N <= 6")
    if modes < 50 * photons:
        raise ValueError("collision-free regime requires M >= 50 N")
    if trials < 100:
        raise ValueError("need trials >= 100")
    from itertools import combinations

    n, m = photons, modes
    cardinality = math.comb(m, n)
    full = cardinality <= enumerate_cap
    all_subsets = (
        np.array(list(combinations(range(m), n)), dtype=np.intp) if full else None
    )
    values = np.empty(trials)
    for t in range(trials):
        task = seed.child(t)
        rows = _haar_rows(n, m, task.child(0))
        if full:
            subsets = all_subsets
        else:
            rng = task.child(1).generator()
            subsets = _collision_free_subsets(m, n, subsample, rng)
        fourth = np.abs(_column_subset_permanents(rows, subsets)) ** 4
        if full:
            values[t] = math.fsum(fourth)
        else:
            values[t] = cardinality * (math.fsum(fourth) / subsample)
    mean, stderr = _mean_and_stderr(values)
    exact, _ = closed_form_xe_id(n, m)
    return TheoryResult(
        closed_form=exact, estimate=mean, std_error=stderr, trials=trials,
        params={"N": n, "M": m, "subsample": None if cardinality <= enumerate_cap else subsample},
    )


def mc_h_power_ratio(
    photons: int, power: int, trials: int, seed: Seed, chunk: int = 4096
) -> TheoryResult:
    """Gaussian-proxy Monte Carlo of the s-th power score XE boost.

    Estimates E[p~ h~^s] / E[h~^s] as a ratio of means (exact at s = 1) and
    compares against (1 + s/N)^N. The standard error combines both means by
    the delta method.
    """
    if photons > 8 or power not in (0, 1, 2, 3):
        raise ValueError("mc_h_power_ratio limited to N <= 8 and s in {0,1,2,3}")
    n, s = photons, power
    numer = np.empty(trials)
    denom = np.empty(trials)
    done = 0
    task = 0
    while done < trials:
        b = min(chunk, trials - done)
        rng = seed.child(task).generator()
        z = (rng.standard_normal((b, n, n)) + 1j * rng.standard_normal((b, n, n))) / np.sqrt(2.0)
        col_means = (np.abs(z) ** 2).mean(axis=1)  # (b, n): column sums / N
        h = col_means.prod(axis=1)
        p = np.abs(permanents_batch(z)) ** 2 / math.factorial(n)
        numer[done : done + b] = p * h**s
        denom[done : done + b] = h**s
        done += b
        task += 1
    a_mean, a_se = _mean_and_stderr(numer)
    b_mean, b_se = _mean_and_stderr(denom)
    ratio = a_mean / b_mean
    cov = math.fsum((numer - a_mean) * (denom - b_mean)) / (trials - 1) / trials
    var = (
        (a_se / b_mean) ** 2
        + (a_mean * b_se / b_mean**2) ** 2
        - 2.0 * a_mean * cov / b_mean**3
    )
    stderr = math.sqrt(max(var, 0.0))
    return TheoryResult(
        closed_form=h_power_ratio(n, s), estimate=ratio, std_error=stderr,
        trials=trials, params={"N": n, "s": s},
    )
