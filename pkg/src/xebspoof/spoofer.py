"""Heavy-outcome post-selection.

The recipe: draw k * n_samples outcomes from a cheap sampler, score each with
a heaviness indicator, keep the n_samples highest-scoring draws (duplicates
and all). Selection never touches the ideal probability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .kernels import Seed
from .models import FERMIONIC, Model, Sector
from .mockups import make_indicator, make_sampler
from .samples import SampleSet

STREAM_CHUNK = 1 << 16


@dataclass(frozen=True)
class SpoofConfig:
    rate: int
    n_samples: int
    sampler: str = "uniform"
    indicator: str = "marginal"
    variant: str = "batch"  # "batch": one pool of rate*n_samples; "iterate": best-of-rate, n_samples times
    seed: Seed = field(default_factory=lambda: Seed(0))

    def __post_init__(self):
        if self.rate < 1 or self.n_samples < 1:
            raise ValueError("rate and n_samples must be >= 1")
        if self.variant not in ("batch", "iterate"):
            raise ValueError(f"unknown variant {self.variant!r}")

    def snapshot(self) -> dict:
        return {
            "rate": self.rate,
            "n_samples": self.n_samples,
            "sampler": self.sampler,
            "indicator": self.indicator,
            "variant": self.variant,
            "seed": [self.seed.value, list(self.seed.path)],
        }


def spoof_sector(config: SpoofConfig, sector: Sector, model: Model) -> SampleSet:
    """Run the post-selection recipe inside one photon-number sector."""
    sampler = make_sampler(config.sampler, model, sector)
    indicator = make_indicator(config.indicator, model, sector)
    if config.variant == "iterate":
        parts = [
            _spoof_batch(config, sector, model, sampler, indicator,
                         pool=config.rate, keep=1, seed=config.seed.child(i))
            for i in range(config.n_samples)
        ]
        occupancy = np.concatenate([p.occupancy for p in parts])
        indices = None
        if all(p.indices is not None for p in parts):
            indices = np.concatenate([p.indices for p in parts])
        scores = np.concatenate([p.log_scores for p in parts])
        out = SampleSet(sector=sector, occupancy=occupancy, indices=indices,
                        log_scores=scores, seed=config.seed, config=config.snapshot())
        return out
    return _spoof_batch(
        config, sector, model, sampler, indicator,
        pool=config.rate * config.n_samples, keep=config.n_samples, seed=config.seed,
    )


def _spoof_batch(config, sector, model, sampler, indicator, pool, keep, seed) -> SampleSet:
    rng = seed.generator()
    indices = sampler.draw_indices(sector, pool, rng)
    if indices is not None:
        table = indicator.log_score_table(sector)
        scores = table[indices]
        if keep >= pool:
            kept = np.arange(pool)
        else:
            kept = _select_top(scores, keep, tie_keys=[indices])
        kept_idx = indices[kept]
        occupancy = np.array([sector.unrank(int(r)) for r in kept_idx], dtype=np.int64)
        return SampleSet(sector=sector, occupancy=occupancy, indices=kept_idx,
                         log_scores=scores[kept], seed=seed, config=config.snapshot())
    occupancy, scores = _streamed_top(sector, sampler, indicator, pool, keep, rng)
    return SampleSet(sector=sector, occupancy=occupancy, indices=None,
                     log_scores=scores, seed=seed, config=config.snapshot())


def _select_top(scores: np.ndarray, keep: int, tie_keys: list[np.ndarray]) -> np.ndarray:
    """Positions of the `keep` largest scores.

    Ties are broken by (score desc, tie_keys asc, draw position asc), so the
    result is a pure function of the pool. Ordering of the returned positions
    follows the same key.
    """
    pool = len(scores)
    candidates = np.argpartition(-scores, keep - 1)[:keep] if keep < pool else np.arange(pool)
    threshold = scores[candidates].min()
    above = np.flatnonzero(scores > threshold)
    tied = np.flatnonzero(scores == threshold)
    need = keep - len(above)
    if need < len(tied):
        order = np.lexsort((tied, *[k[tied] for k in reversed(tie_keys)]))
        tied = tied[order[:need]]
    chosen = np.concatenate([above, tied])
    final = np.lexsort((chosen, *[k[chosen] for k in reversed(tie_keys)], -scores[chosen]))
    return chosen[final]


def _lex_key_columns(occupancy: np.ndarray, statistics: str) -> list[np.ndarray]:
    """Columns encoding ascending outcome-lex order, most significant first.

    Fermionic patterns are bit-packed into big-endian words so wide circuits
    compare with a handful of keys instead of one per mode.
    """
    if statistics == FERMIONIC:
        bits = np.packbits(occupancy.astype(bool), axis=1)
        pad = (-bits.shape[1]) % 8
        if pad:
            bits = np.pad(bits, ((0, 0), (0, pad)))
        words = np.ascontiguousarray(bits).view(">u8")
        return [words[:, j] for j in range(words.shape[1])]
    return [occupancy[:, j] for j in range(occupancy.shape[1])]


def _streamed_top(sector, sampler, indicator, pool, keep, rng):
    """Chunked pool generation with an exact running top-`keep` reduction.

    The reduction key (score desc, outcome lex asc, draw index asc) is a
    total order over draws, so reducing chunk by chunk returns exactly the
    same multiset as sorting the whole pool at once.
    """
    best_occ = None
    best_scores = None
    best_draw = None
    produced = 0
    while produced < pool:
        chunk = min(STREAM_CHUNK, pool - produced)
        occ = sampler.draw(sector, chunk, rng)
        scores = indicator.log_scores(occ)
        draw = produced + np.arange(chunk, dtype=np.int64)
        if best_occ is not None:
            occ = np.concatenate([best_occ, occ])
            scores = np.concatenate([best_scores, scores])
            draw = np.concatenate([best_draw, draw])
        order = np.lexsort((draw, *reversed(_lex_key_columns(occ, sector.statistics)), -scores))
        order = order[:keep]
        best_occ, best_scores, best_draw = occ[order], scores[order], draw[order]
        produced += chunk
    return best_occ, best_scores


def allocate_largest_remainder(weights: dict[int, float], total: int) -> dict[int, int]:
    """Integer allocation of `total` proportional to `weights`."""
    if total < 1:
        raise ValueError("total samples must be >= 1")
    mass = math.fsum(float(w) for w in weights.values())
    if mass <= 0.0:
        raise ValueError("allocation weights sum to zero")
    keys = sorted(weights)
    quotas = {k: total * float(weights[k]) / mass for k in keys}
    counts = {k: int(math.floor(quotas[k])) for k in keys}
    short = total - sum(counts.values())
    by_remainder = sorted(keys, key=lambda k: (-(quotas[k] - counts[k]), k))
    for k in by_remainder[:short]:
        counts[k] += 1
    return counts


def spoof_multisector(
    config: SpoofConfig,
    model: Model,
    sector_weights: dict[int, float],
    total_samples: int,
) -> dict[int, SampleSet]:
    """Spoof several photon-number sectors with sample counts matching Pr(N).

    Weights normally come from the total-photon-number distribution (GBS) or
    are degenerate at N (FBS/FS); allocation uses largest-remainder rounding
    so the output total is exact.
    """
    counts = allocate_largest_remainder(sector_weights, total_samples)
    out: dict[int, SampleSet] = {}
    for total in sorted(counts):
        n = counts[total]
        if n == 0:
            continue
        sector = Sector(model.modes, total, model.statistics)
        sector_config = SpoofConfig(
            rate=config.rate,
            n_samples=n,
            sampler=config.sampler,
            indicator=config.indicator,
            variant=config.variant,
            seed=config.seed.child(total),
        )
        out[total] = spoof_sector(sector_config, sector, model)
    return out
