"""Time-stamped event logs produced by policy runs.

A trace records request completions (with their delay, cost, and the rate
estimate used on that set) and arm selections (with the arm's index inside
its set, its true mean, and the realized reward). Events completing after the
horizon are kept aside in ``overflow`` so accounting checks can still see the
full final set, while the canonical event list stays truncated.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

REQUEST = "request"
SELECTION = "selection"


@dataclass(frozen=True, slots=True)
class TraceEvent:
    time: float
    kind: str
    set_index: int
    delay: float | None = None
    cost: float | None = None
    gamma: float | None = None
    arm: int | None = None
    mean: float | None = None
    reward: float | None = None


@dataclass
class Trace:
    """Ordered event log of one policy run up to a horizon."""

    events: list[TraceEvent]
    horizon: float
    final_clock: float
    overflow: list[TraceEvent] = field(default_factory=list)

    def increments(self) -> tuple[np.ndarray, np.ndarray]:
        """Event times and their mean-reward increments (costs enter negated)."""
        times = np.array([e.time for e in self.events], dtype=float)
        values = np.array(
            [e.mean if e.kind == SELECTION else -e.cost for e in self.events],
            dtype=float,
        )
        return times, values

    def cumulative_on(self, grid: np.ndarray) -> np.ndarray:
        """Accumulated mean reward evaluated at each grid time."""
        times, values = self.increments()
        totals = np.concatenate(([0.0], np.cumsum(values)))
        positions = np.searchsorted(times, np.asarray(grid, dtype=float), side="right")
        return totals[positions]

    def selections_by_set(self) -> dict[int, list[int]]:
        """Selected arm indices grouped by set, in selection order."""
        out: dict[int, list[int]] = {}
        for e in self.events + self.overflow:
            if e.kind == SELECTION:
                out.setdefault(e.set_index, []).append(e.arm)
        return out

    def rate_values(self) -> np.ndarray:
        """Rate estimate in effect at each processed set, in set order."""
        return np.array(
            [e.gamma for e in self.events + self.overflow if e.kind == REQUEST],
            dtype=float,
        )

    def sojourn_total(self) -> float:
        """Total time consumed by all processed sets, including overflow."""
        total = 0.0
        for e in self.events + self.overflow:
            total += e.delay if e.kind == REQUEST else 1.0
        return total


def split_horizon(
    events: list[TraceEvent], horizon: float
) -> tuple[list[TraceEvent], list[TraceEvent]]:
    kept = [e for e in events if e.time <= horizon]
    dropped = [e for e in events if e.time > horizon]
    return kept, dropped
