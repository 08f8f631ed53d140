"""Sample collections shared by samplers, the spoofer, and the metrics."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

from .kernels import Seed
from .models import Sector, format_outcome


@dataclass
class SampleSet:
    """A seeded batch of outcomes from one photon-number sector.

    `occupancy` holds one outcome per row. When the sector was enumerable the
    lexicographic rank of each outcome is kept in `indices` so downstream
    probability lookups can use precomputed tables. `log_scores` carries the
    heaviness-indicator value of each retained sample, when one was used.
    """

    sector: Sector
    occupancy: np.ndarray
    indices: np.ndarray | None = None
    log_scores: np.ndarray | None = None
    seed: Seed | None = None
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        self.occupancy = np.asarray(self.occupancy, dtype=np.int64)
        if self.occupancy.ndim != 2 or self.occupancy.shape[1] != self.sector.modes:
            raise ValueError("occupancy must be (n_samples, modes)")
        if self.indices is not None:
            self.indices = np.asarray(self.indices, dtype=np.int64)
            if self.indices.shape != (len(self.occupancy),):
                raise ValueError("indices length must match sample count")

    def __len__(self) -> int:
        return len(self.occupancy)

    def outcomes(self) -> Iterator[tuple[int, ...]]:
        for row in self.occupancy:
            yield tuple(int(v) for v in row)

    def validate_in_sector(self) -> None:
        occ = self.occupancy
        ok = (occ >= 0).all() and (occ.sum(axis=1) == self.sector.total).all()
        if self.sector.statistics == "fermionic":
            ok = ok and (occ <= 1).all()
        if not ok:
            raise ValueError("sample set contains outcomes outside its sector")


def write_sample_csv(samples: SampleSet, path: str | Path, log_p: np.ndarray | None = None) -> None:
    """One outcome per row plus its indicator score and, optionally, exact log p."""
    path = Path(path)
    header = ["outcome", "log_h"]
    if log_p is not None:
        header.append("log_p")
    scores = samples.log_scores
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for i, row in enumerate(samples.occupancy):
            record = [format_outcome(row), repr(float(scores[i])) if scores is not None else ""]
            if log_p is not None:
                record.append(repr(float(log_p[i])))
            writer.writerow(record)
