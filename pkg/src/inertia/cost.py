"""Prefill cost model with explicit prefix-cache semantics.

Costs are abstract attention operations counted at round granularity:
prefilling a context of n rounds from scratch costs n^2, extending a
cached prefix by one round costs n. Window contexts shift their boundary
every step, which breaks the prefix property and forces full recompute;
clip contexts only pay the quadratic price right after a clearing.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from inertia.errors import ContractError
from inertia.policies import KIND_CLIP, KIND_LONG, KIND_SUMMARY, KIND_WINDOW, PolicyConfig


@dataclass(frozen=True)
class CostReport:
    """Per-step prefill costs plus their mean; ``speedup`` is filled when
    the report was produced by a comparison against a reference."""

    series: tuple[float, ...]
    average: float
    speedup: float | None = None

    def __post_init__(self) -> None:
        if any(c < 0 for c in self.series):
            raise ContractError("costs must be nonnegative")


def _report(series: list[float], speedup: float | None = None) -> CostReport:
    avg = sum(series) / len(series) if series else 0.0
    return CostReport(series=tuple(series), average=avg, speedup=speedup)


def window_cost(window: int, turns: int) -> CostReport:
    """Window context recomputes its full W-round prefix every step."""
    if window < 1 or turns < 1:
        raise ContractError("window and turns must be >= 1")
    return _report([float(min(t, window) ** 2) for t in range(1, turns + 1)])


def clip_cycle_costs(retain: int, threshold: int) -> list[int]:
    """Steady-state per-step costs of one clip cycle: a full prefill of the
    retained context at the post-clear step, then marginal extensions while
    the context grows back toward the threshold."""
    if not 0 <= retain < threshold:
        raise ContractError("need 0 <= retain < threshold")
    return [retain * retain] + list(range(retain + 1, threshold))


def clip_cycle_average(retain: int, threshold: int) -> Fraction:
    """Exact steady-state average cost per step of the clip policy."""
    cycle = clip_cycle_costs(retain, threshold)
    return Fraction(sum(cycle), len(cycle))


def clip_cost(retain: int, threshold: int, turns: int) -> CostReport:
    """Steady-state clip cost series over ``turns`` steps."""
    if turns < 1:
        raise ContractError("turns must be >= 1")
    cycle = clip_cycle_costs(retain, threshold)
    return _report([float(cycle[t % len(cycle)]) for t in range(turns)])


def clip_window_speedup(window: int) -> float:
    """Prefill speedup of clip over a same-budget window (retain 1, clear
    at 2W), per the closed-form analysis: 2*W^2*(2W-1) / (2 + (2W-1)^2)."""
    if window < 1:
        raise ContractError("window must be >= 1")
    return 2 * window * window * (2 * window - 1) / (2 + (2 * window - 1) ** 2)


def _visible_range(cfg: PolicyConfig, prev: tuple[int, int] | None, t: int) -> tuple[int, int] | None:
    """Visible rounds as an inclusive (lo, hi) range; None for an empty
    context (retain 0 right after a clearing)."""
    if cfg.kind == KIND_LONG:
        return (1, t)
    if cfg.kind == KIND_WINDOW:
        return (max(1, t - cfg.window_size + 1), t)
    size = 0 if prev is None else prev[1] - prev[0] + 1
    if size + 1 == cfg.clear_threshold:
        if cfg.retain_recent == 0:
            return None
        return (t - cfg.retain_recent + 1, t)
    return (prev[0], t) if prev is not None else (t, t)


def simulate_ops(cfg: PolicyConfig, turns: int, reuse: bool = True) -> CostReport:
    """Round-level prefill simulation with an optional prefix cache.

    The cache holds the previous step's visible prefix; a step whose
    visible set extends it pays (new rounds) x (visible rounds), any other
    step pays a full (visible rounds)^2 prefill. The system prompt and
    goal are a constant always-cached prefix and cost nothing.
    """
    if turns < 1:
        raise ContractError("turns must be >= 1")
    series: list[float] = []
    cached: tuple[int, int] | None = None
    prev: tuple[int, int] | None = None
    for t in range(1, turns + 1):
        visible = _visible_range(cfg, prev, t)
        if visible is None:
            series.append(0.0)
        else:
            size = visible[1] - visible[0] + 1
            if reuse and cached is not None and visible[0] == cached[0] and visible[1] == cached[1] + 1:
                series.append(float(size))  # one new round against the cache
            elif reuse and cached is None:
                series.append(float(size * size))
            elif reuse and visible == cached:
                series.append(0.0)
            else:
                series.append(float(size * size))
        cached = visible if reuse else None
        prev = visible
    return _report(series)


def steady_average(cfg: PolicyConfig, cycles: int = 10, reuse: bool = True) -> Fraction:
    """Exact average simulated cost over full steady-state clip cycles
    (skips the warm-up before the first clearing)."""
    if cfg.kind not in (KIND_CLIP, KIND_SUMMARY):
        raise ContractError("steady_average applies to clip/summary policies")
    period = cfg.clear_threshold - cfg.retain_recent
    warmup = cfg.clear_threshold - 1
    turns = warmup + cycles * period
    report = simulate_ops(cfg, turns, reuse=reuse)
    steady = report.series[warmup:]
    return Fraction(sum(int(c) for c in steady), len(steady))
