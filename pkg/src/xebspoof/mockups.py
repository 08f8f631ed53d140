"""Efficient mock-up samplers and heaviness indicators.

The spoofing recipe needs two ingredients: a cheap sampler q(x) over a
sector, and a cheap score h(x) that correlates with the ideal probability
without ever evaluating it. Both live here. Scores are handled in the log
domain throughout so that large fermionic systems (N >= 20) do not
underflow.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
from scipy.special import gammaln

from .kernels import Interferometer, Seed
from .models import (
    FERMIONIC,
    FermionSampling,
    GaussianBosonSampling,
    Model,
    Sector,
    sector_probabilities,
)
from .samples import SampleSet

# Sectors up to this size use rank-based sampling and score tables; larger
# sectors stream occupancy vectors instead.
TABLE_PATH_CAP = 1_000_000


# ---------------------------------------------------------------------------
# samplers
# ---------------------------------------------------------------------------


class UniformSectorSampler:
    """I.i.d. uniform outcomes over a sector.

    Small sectors are sampled by drawing lexicographic ranks and unranking;
    large sectors are sampled directly in occupancy space (random subsets for
    fermions, stars-and-bars positions for bosons), which is uniform by
    construction.
    """

    name = "uniform"

    def supports(self, sector: Sector) -> bool:
        return True

    def draw_indices(self, sector: Sector, count: int, rng: np.random.Generator) -> np.ndarray | None:
        if sector.cardinality > TABLE_PATH_CAP:
            return None
        return rng.integers(0, sector.cardinality, size=count)

    def draw(self, sector: Sector, count: int, rng: np.random.Generator) -> np.ndarray:
        indices = self.draw_indices(sector, count, rng)
        if indices is not None:
            return np.array([sector.unrank(int(r)) for r in indices], dtype=np.int64)
        if sector.statistics == FERMIONIC:
            return _uniform_subsets_occupancy(sector.modes, sector.total, count, rng)
        return _uniform_compositions_occupancy(sector.modes, sector.total, count, rng)


def _uniform_subsets_occupancy(modes: int, total: int, count: int, rng) -> np.ndarray:
    occ = np.zeros((count, modes), dtype=np.int8)
    if total == 0:
        return occ
    keys = rng.random((count, modes))
    chosen = np.argpartition(keys, total - 1, axis=1)[:, :total]
    np.put_along_axis(occ, chosen, 1, axis=1)
    return occ


def _uniform_compositions_occupancy(modes: int, total: int, count: int, rng) -> np.ndarray:
    # stars and bars: a uniform size-`total` subset of total+modes-1 slots
    # maps to a uniform composition; ball k at sorted position p_k lands in
    # mode p_k - k.
    occ = np.zeros((count, modes), dtype=np.int8)
    if total == 0:
        return occ
    slots = total + modes - 1
    keys = rng.random((count, slots))
    balls = np.sort(np.argpartition(keys, total - 1, axis=1)[:, :total], axis=1)
    mode_of_ball = balls - np.arange(total)[None, :]
    flat = (np.arange(count)[:, None] * modes + mode_of_ball).ravel()
    np.add.at(occ.ravel(), flat, 1)
    return occ


class ScoreTableSampler:
    """Exact sampling from scores normalized over an enumerable sector.

    Inverse-CDF over the lexicographic order, so identical seeds give
    identical samples regardless of how the scores were produced.
    """

    def __init__(self, name: str, log_table_fn):
        self.name = name
        self._log_table_fn = log_table_fn

    def supports(self, sector: Sector) -> bool:
        return sector.cardinality <= TABLE_PATH_CAP

    def draw_indices(self, sector: Sector, count: int, rng: np.random.Generator) -> np.ndarray:
        if not self.supports(sector):
            raise ValueError(
                f"sampler {self.name!r} needs an enumerable sector "
                f"(cardinality {sector.cardinality} > {TABLE_PATH_CAP})"
            )
        log_table = self._log_table_fn(sector)
        return sample_indices_from_log_scores(log_table, count, rng)

    def draw(self, sector: Sector, count: int, rng: np.random.Generator) -> np.ndarray:
        indices = self.draw_indices(sector, count, rng)
        return np.array([sector.unrank(int(r)) for r in indices], dtype=np.int64)


def sample_indices_from_log_scores(log_scores: np.ndarray, count: int, rng) -> np.ndarray:
    log_scores = np.asarray(log_scores, dtype=float)
    finite = log_scores > -np.inf
    if not finite.any():
        raise ValueError("all scores are zero; nothing to sample")
    weights = np.zeros_like(log_scores)
    weights[finite] = np.exp(log_scores[finite] - log_scores[finite].max())
    cdf = np.cumsum(weights)
    u = rng.random(count) * cdf[-1]
    return np.searchsorted(cdf, u, side="right").astype(np.int64)


def exact_sampler_from_scores(
    sector: Sector, scores: Sequence[float], count: int, seed: Seed
) -> SampleSet:
    """Draw from scores normalized over the sector (lexicographic order)."""
    scores = np.asarray(scores, dtype=float)
    if scores.shape != (sector.cardinality,):
        raise ValueError("need one score per sector outcome")
    if np.any(scores < 0):
        raise ValueError("scores must be >= 0")
    with np.errstate(divide="ignore"):
        log_scores = np.log(scores)
    rng = seed.generator()
    indices = sample_indices_from_log_scores(log_scores, count, rng)
    occupancy = np.array([sector.unrank(int(r)) for r in indices], dtype=np.int64)
    return SampleSet(sector=sector, occupancy=occupancy, indices=indices, seed=seed)


def sample_uniform(sector: Sector, count: int, seed: Seed) -> SampleSet:
    """I.i.d. uniform sector outcomes, deterministic per seed."""
    rng = seed.generator()
    sampler = UniformSectorSampler()
    indices = sampler.draw_indices(sector, count, rng)
    if indices is not None:
        occupancy = np.array([sector.unrank(int(r)) for r in indices], dtype=np.int64)
    else:
        occupancy = sampler.draw(sector, count, rng)
    return SampleSet(sector=sector, occupancy=occupancy, indices=indices, seed=seed)


# ---------------------------------------------------------------------------
# heaviness indicators
# ---------------------------------------------------------------------------


class PerModeTableIndicator:
    """Indicator of the form log h(x) = const + sum_i table[i, x_i].

    Covers the marginal-product and both multinomial indicators; the per-mode
    table makes the score a single gather over any batch of outcomes.
    """

    def __init__(self, name: str, table: np.ndarray, constant: float = 0.0):
        self.name = name
        self.table = np.asarray(table, dtype=float)
        self.constant = float(constant)

    def log_scores(self, occupancy: np.ndarray) -> np.ndarray:
        occupancy = np.asarray(occupancy)
        modes = np.arange(self.table.shape[0])
        return self.constant + self.table[modes[None, :], occupancy].sum(axis=1)

    def log_score(self, x: Sequence[int]) -> float:
        return float(self.log_scores(np.asarray([x]))[0])

    def log_score_table(self, sector: Sector) -> np.ndarray:
        return self.log_scores(sector.occupancy_matrix())


def h_marginal_product(model: Model, occupation_cap: int) -> PerModeTableIndicator:
    """Product of first-order marginals: h(x) = prod_i p_i(x_i)."""
    if isinstance(model, GaussianBosonSampling):
        marg = model.marginal_table(occupation_cap)
    else:
        marg = model.marginal_table()
    cap = min(occupation_cap, marg.shape[1] - 1)
    with np.errstate(divide="ignore"):
        table = np.log(np.maximum(marg[:, : cap + 1], 0.0))
    return PerModeTableIndicator("marginal", table)


def _multinomial_indicator(name: str, weights: np.ndarray, total: int) -> PerModeTableIndicator:
    weights = np.maximum(weights, 0.0)  # clamp round-off
    occ = np.arange(total + 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_w = np.log(weights)
        # table[i, n] = n log h_i - log n!, with the n = 0 column exactly 0
        table = occ[None, :] * log_w[:, None] - gammaln(occ + 1)[None, :]
    table[:, 0] = 0.0
    return PerModeTableIndicator(name, table, constant=float(gammaln(total + 1)))


def h_multinomial_mixed(u: Interferometer, photons: int) -> PerModeTableIndicator:
    """Multinomial score with mode weights h_i = mean_j<N |U_ji|^2."""
    amp = np.abs(u.matrix[:photons, :]) ** 2
    weights = amp.mean(axis=0)
    return _multinomial_indicator("multinomial-mixed", weights, photons)


def h_multinomial_superposition(u: Interferometer, photons: int) -> PerModeTableIndicator:
    """Multinomial score with mode weights h_i = |sum_j<N U_ji|^2 / N."""
    col_sums = u.matrix[:photons, :].sum(axis=0)
    weights = (np.abs(col_sums) ** 2) / photons
    return _multinomial_indicator("multinomial-sup", weights, photons)


class IdealPowerIndicator:
    """log h(x) = s log p(x): the idealized stand-in for post-selection.

    Only usable where full enumeration (or per-outcome exact evaluation) is
    affordable, since it touches the ideal probability directly.
    """

    def __init__(self, model: Model, power: float):
        self.name = f"ideal-pow:{power:g}"
        self.model = model
        self.power = float(power)
        self._tables: dict[Sector, np.ndarray] = {}

    def log_scores(self, occupancy: np.ndarray) -> np.ndarray:
        return self.power * self.model.log_probabilities(np.asarray(occupancy))

    def log_score(self, x: Sequence[int]) -> float:
        return self.power * self.model.log_probability(x)

    def log_score_table(self, sector: Sector) -> np.ndarray:
        table = self._tables.get(sector)
        if table is None:
            with np.errstate(divide="ignore"):
                table = self.power * np.log(sector_probabilities(self.model, sector))
            self._tables[sector] = table
        return table


# ---------------------------------------------------------------------------
# name registries (used by configs and the CLI)
# ---------------------------------------------------------------------------


def make_indicator(name: str, model: Model, sector: Sector):
    if name == "marginal":
        return h_marginal_product(model, sector.total)
    if name == "multinomial-mixed":
        if not hasattr(model, "photons"):
            raise ValueError("multinomial indicators require the Fock-state family")
        return h_multinomial_mixed(model.interferometer, model.photons)
    if name == "multinomial-sup":
        if not hasattr(model, "photons"):
            raise ValueError("multinomial indicators require the Fock-state family")
        return h_multinomial_superposition(model.interferometer, model.photons)
    if name.startswith("ideal-pow:"):
        return IdealPowerIndicator(model, float(name.split(":", 1)[1]))
    raise ValueError(f"unknown indicator {name!r}")


def make_sampler(name: str, model: Model, sector: Sector):
    if name == "uniform":
        return UniformSectorSampler()
    if name == "marginal":
        indicator = h_marginal_product(model, sector.total)
        return ScoreTableSampler("marginal", indicator.log_score_table)
    if name.startswith("ideal-pow:"):
        indicator = IdealPowerIndicator(model, float(name.split(":", 1)[1]))
        return ScoreTableSampler(name, indicator.log_score_table)
    raise ValueError(f"unknown sampler {name!r}")


# ---------------------------------------------------------------------------
# exact fermion sampling (projection DPP chain rule)
# ---------------------------------------------------------------------------


def fs_dpp_sampler(
    model: FermionSampling, count: int, seed: Seed, batch: int = 256
) -> SampleSet:
    """Exact samples from |Det(U_x)|^2 in polynomial time.

    The fermionic distribution is a projection determinantal point process,
    so occupied modes can be drawn one at a time: pick a mode with weight
    equal to the squared norm of its (projected) kernel column, then project
    all columns orthogonal to the picked one and repeat.
    """
    modes, n = model.modes, model.particles
    sector = model.sector()
    occupancy = np.zeros((count, modes), dtype=np.int64)
    if n == 0 or count == 0:
        return SampleSet(sector=sector, occupancy=occupancy, seed=seed)
    rng = seed.generator()
    a = model.interferometer.matrix[:n, :]
    done = 0
    retry = 0
    while done < count:
        b = min(batch, count - done)
        chosen, ok = _dpp_chains(a, b, rng)
        if not ok:
            # conditional normalization broke down; restart this block on a
            # fresh derived stream
            retry += 1
            if retry > 10:
                raise RuntimeError("fs_dpp_sampler failed to converge")
            rng = seed.child(retry).generator()
            continue
        rows = done + np.arange(b)
        occupancy[rows[:, None], chosen] = 1
        done += b
    return SampleSet(sector=sector, occupancy=occupancy, seed=seed)


def _dpp_chains(a: np.ndarray, b: int, rng: np.random.Generator):
    # Residual weights are tracked directly (w_j -= |<q_t, a_j>|^2 for each
    # new orthonormal direction q_t), so the kernel columns are never copied
    # per chain and each step is one batched matmul against the shared A.
    n, modes = a.shape
    weights = np.broadcast_to((np.abs(a) ** 2).sum(axis=0), (b, modes)).copy()
    basis = np.zeros((b, n, n), dtype=np.complex128)
    chosen = np.empty((b, n), dtype=np.int64)
    rows = np.arange(b)
    for t in range(n):
        totals = weights.sum(axis=1)
        if np.any(totals < 1e-12):
            return chosen, False
        cdf = np.cumsum(weights, axis=1)
        u = rng.random((b, 1)) * cdf[:, -1:]
        picked = (u > cdf).sum(axis=1)
        np.minimum(picked, modes - 1, out=picked)
        chosen[:, t] = picked
        col = a[:, picked].T.copy()
        if t > 0:
            prev = basis[:, :, :t]
            overlaps = np.einsum("bnt,bn->bt", prev.conj(), col)
            col -= np.einsum("bnt,bt->bn", prev, overlaps)
        norms = np.linalg.norm(col, axis=1)
        if np.any(norms**2 < 1e-12):
            return chosen, False
        col /= norms[:, None]
        basis[:, :, t] = col
        projections = col.conj() @ a
        weights -= np.abs(projections) ** 2
        weights[rows[:, None], chosen[:, : t + 1]] = 0.0
        np.maximum(weights, 0.0, out=weights)
    return chosen, True
