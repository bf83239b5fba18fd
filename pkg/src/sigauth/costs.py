"""Deployment cost calculator: fixed hardware cost plus VM-hours.

Cost_T = Cost_I + n_v * c_v * (t_c - t_s).  All arithmetic is plain float
with no internal rounding; two-decimal formatting happens only when a value
is rendered for output.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import NegativeDuration, NegativeInput


@dataclass(frozen=True)
class CostParams:
    """Inputs of the total-cost formula (times in hours, money in USD)."""

    cost_i: float   # upfront hardware cost
    n_v: int        # VM count
    c_v: float      # USD per VM-hour
    t_s: float      # submission time
    t_c: float      # completion time

    def validate(self) -> None:
        if min(self.cost_i, self.n_v, self.c_v, self.t_s, self.t_c) < 0:
            raise NegativeInput("cost parameters must be non-negative")
        if self.t_c < self.t_s:
            raise NegativeDuration(
                f"completion {self.t_c} precedes submission {self.t_s}"
            )


def vm_hours(t_s: float, t_c: float) -> float:
    """Billable duration t = t_c - t_s."""
    if t_c < t_s:
        raise NegativeDuration(f"completion {t_c} precedes submission {t_s}")
    return t_c - t_s


def cloud_cost(n_v: float, c_v: float, t: float) -> float:
    """Cost_C = n_v * c_v * t."""
    if min(n_v, c_v, t) < 0:
        raise NegativeInput("VM count, rate, and duration must be non-negative")
    return n_v * c_v * t


def total_cost(p: CostParams) -> float:
    """Cost_T = Cost_I + Cost_C."""
    p.validate()
    return p.cost_i + cloud_cost(p.n_v, p.c_v, vm_hours(p.t_s, p.t_c))


def scaling_table(
    vm_counts, c_v: float, t: float, cost_i: float = 0.0
) -> list[tuple[int, float]]:
    """(n_v, Cost_T) per VM count; exactly linear in n_v for fixed c_v, t."""
    vm_counts = list(vm_counts)
    if not vm_counts:
        raise ValueError("VM count range is empty")
    return [
        (int(n), cost_i + cloud_cost(int(n), c_v, t)) for n in vm_counts
    ]


def format_usd(amount: float) -> str:
    """Render with two decimals; the only rounding in the module."""
    return f"{amount:.2f}"
