"""Per-iteration solve records shared by the solver and the baselines."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

#: Inner-iteration index used for rows recorded after a position sweep.
POSITION_STEP = -1


def layout_hash(layout) -> str:
    """Deterministic 16-hex-digit digest of a layout snapshot."""
    if layout is None:
        return "-" * 16
    arr = np.ascontiguousarray(np.asarray(layout, dtype=float))
    return hashlib.sha256(arr.tobytes()).hexdigest()[:16]


@dataclass
class TraceRow:
    outer: int
    inner: int            # POSITION_STEP (-1) for rows after a position sweep
    surrogate: float
    sum_rate: float
    power: float          # watts
    energy_margin: float  # min_q harvested - E_min, watts (inf when Q == 0)
    layout_hash: str


@dataclass
class SolveTrace:
    rows: list[TraceRow] = field(default_factory=list)

    def add(self, outer, inner, surrogate, sum_rate, power, energy_margin, layout):
        self.rows.append(
            TraceRow(
                outer=outer,
                inner=inner,
                surrogate=float(surrogate),
                sum_rate=float(sum_rate),
                power=float(power),
                energy_margin=float(energy_margin),
                layout_hash=layout_hash(layout),
            )
        )

    @property
    def sum_rates(self) -> np.ndarray:
        return np.array([r.sum_rate for r in self.rows])

    def final_sum_rate(self) -> float:
        return self.rows[-1].sum_rate if self.rows else math.nan
