"""Cross-entropy estimators, exact sector XE, the Bayesian test, and rank
profiles.

XEB here is always applied within one photon-number sector. Estimates carry
the standard error of the per-sample terms (sample std divided by sqrt of
the sample count); reductions use compensated summation so results do not
depend on how work was chunked.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .models import Model, Sector, format_outcome
from .samples import SampleSet

LOG_VARIANT = "log"
LINEAR_VARIANT = "linear"


@dataclass(frozen=True)
class Normalization:
    """Sector normalization constant: Pr(N) over the sector cardinality."""

    sector_probability: float
    cardinality: int

    def __post_init__(self):
        if not 0.0 < self.sector_probability <= 1.0:
            raise ValueError("sector probability must be in (0, 1]")
        if self.cardinality < 1:
            raise ValueError("cardinality must be >= 1")

    @property
    def value(self) -> float:
        return self.sector_probability / self.cardinality

    @classmethod
    def unit(cls) -> "Normalization":
        return cls(sector_probability=1.0, cardinality=1)


@dataclass(frozen=True)
class XEReport:
    variant: str
    estimate: float
    std_error: float
    n_samples: int
    normalization: float = 1.0

    def __post_init__(self):
        if self.variant not in (LOG_VARIANT, LINEAR_VARIANT):
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.std_error < 0 or self.n_samples < 1:
            raise ValueError("bad report fields")


@dataclass(frozen=True)
class XEDifference:
    delta: float
    std_error: float


def _mean_and_stderr(terms: np.ndarray) -> tuple[float, float]:
    n = len(terms)
    mean = math.fsum(terms) / n
    if n == 1:
        return mean, 0.0
    var = math.fsum((t - mean) ** 2 for t in terms) / (n - 1)
    return mean, math.sqrt(var / n)


def _sample_log_probs(
    samples: SampleSet, model: Model, probability_table: np.ndarray | None
) -> np.ndarray:
    if probability_table is not None and samples.indices is not None:
        with np.errstate(divide="ignore"):
            log_p = np.log(np.asarray(probability_table, dtype=float))[samples.indices]
    else:
        log_p = model.log_probabilities(samples.occupancy)
    if np.any(np.isneginf(log_p)):
        bad = int(np.flatnonzero(np.isneginf(log_p))[0])
        raise ValueError(
            f"sample {bad} has zero ideal probability: outcome "
            f"{format_outcome(samples.occupancy[bad])}"
        )
    return log_p


def log_xe_estimate(
    samples: SampleSet,
    model: Model,
    normalization: Normalization | None = None,
    probability_table: np.ndarray | None = None,
) -> XEReport:
    """Estimated log XE: mean of log(p(x)/N) over the sample set."""
    norm = normalization or Normalization.unit()
    log_p = _sample_log_probs(samples, model, probability_table)
    terms = log_p - math.log(norm.value)
    mean, stderr = _mean_and_stderr(terms)
    return XEReport(LOG_VARIANT, mean, stderr, len(samples), norm.value)


def linear_xe_estimate(
    samples: SampleSet,
    model: Model,
    normalization: Normalization | None = None,
    probability_table: np.ndarray | None = None,
) -> XEReport:
    """Estimated linear XE: mean of p(x)/N over the sample set."""
    norm = normalization or Normalization.unit()
    log_p = _sample_log_probs(samples, model, probability_table)
    terms = np.exp(log_p) / norm.value
    mean, stderr = _mean_and_stderr(terms)
    return XEReport(LINEAR_VARIANT, mean, stderr, len(samples), norm.value)


def exact_xe(
    p: np.ndarray,
    q: np.ndarray,
    variant: str = LOG_VARIANT,
    normalization: Normalization | None = None,
) -> float:
    """Exact XE of q against p over an enumerated sector.

    `p` holds raw ideal probabilities (sector order), `q` a distribution over
    the same outcomes. The log variant requires p > 0 wherever q > 0.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError("p and q must align over the same sector")
    norm = normalization or Normalization.unit()
    support = q > 0.0
    if variant == LOG_VARIANT:
        if np.any(p[support] <= 0.0):
            bad = int(np.flatnonzero(support & (p <= 0.0))[0])
            raise ValueError(f"support violation: q > 0 but p = 0 at sector index {bad}")
        log_norm = math.log(norm.value)
        return math.fsum(q[i] * (math.log(p[i]) - log_norm) for i in np.flatnonzero(support))
    if variant == LINEAR_VARIANT:
        return math.fsum(q[i] * p[i] / norm.value for i in np.flatnonzero(support))
    raise ValueError(f"unknown variant {variant!r}")


def xe_difference(spoofed: XEReport, reference: XEReport) -> XEDifference:
    """Spoofed-minus-reference XE with errors combined in quadrature."""
    if spoofed.variant != reference.variant:
        raise ValueError("cannot difference reports of different XE variants")
    if spoofed.normalization != reference.normalization:
        raise ValueError("cannot difference reports with different normalizations")
    delta = spoofed.estimate - reference.estimate
    return XEDifference(delta, math.hypot(spoofed.std_error, reference.std_error))


def bayesian_score(
    samples: SampleSet,
    p: np.ndarray,
    q: np.ndarray,
    normalized_over_sector: bool = True,
) -> tuple[float, float]:
    """Mean log(p/q) over samples drawn from the reference distribution.

    Positive scores favor p (the ideal distribution) over the mock-up q.
    When `normalized_over_sector` is set, both p and q are renormalized over
    the sector before comparing, matching the per-sector testing convention.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError("p and q must align over the same sector")
    if normalized_over_sector:
        p = p / math.fsum(p)
        q = q / math.fsum(q)
    idx = samples.indices
    if idx is None:
        idx = np.array([samples.sector.rank_of(tuple(row)) for row in samples.occupancy])
    if np.any(p[idx] <= 0.0) or np.any(q[idx] <= 0.0):
        raise ValueError("support violation: sampled outcome with p = 0 or q = 0")
    terms = np.log(p[idx]) - np.log(q[idx])
    return _mean_and_stderr(terms)


@dataclass(frozen=True)
class HeavinessProfile:
    """Per-sample ranks of outcomes under descending ideal probability."""

    ranks: np.ndarray
    sector_size: int

    def histogram(self, bins: int = 50) -> tuple[np.ndarray, np.ndarray]:
        edges = np.linspace(0, self.sector_size, bins + 1)
        counts, _ = np.histogram(self.ranks, bins=edges)
        return edges, counts

    def top_fraction_mass(self, fraction: float) -> float:
        """Fraction of samples landing in the heaviest `fraction` of outcomes."""
        cutoff = fraction * self.sector_size
        return float(np.mean(self.ranks < cutoff))


def heaviness_profile(samples: SampleSet, probability_table: np.ndarray) -> HeavinessProfile:
    """Rank every sample under descending ideal probability (0 = heaviest)."""
    p = np.asarray(probability_table, dtype=float)
    order = np.argsort(-p, kind="stable")
    rank_of = np.empty(len(p), dtype=np.int64)
    rank_of[order] = np.arange(len(p))
    idx = samples.indices
    if idx is None:
        idx = np.array([samples.sector.rank_of(tuple(row)) for row in samples.occupancy])
    return HeavinessProfile(ranks=rank_of[idx], sector_size=len(p))


def normalization_for_sector(model: Model, sector: Sector) -> Normalization:
    """Sector normalization Pr(N)/cardinality for GBS; families with a fixed
    particle number leave XE unnormalized (constant 1)."""
    if hasattr(model, "total_photon_distribution"):
        pr = float(model.total_photon_distribution(sector.total)[sector.total])
        return Normalization(sector_probability=pr, cardinality=sector.cardinality)
    return Normalization.unit()
