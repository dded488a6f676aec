"""Multi-stage learning-rate schedules for pre-training runs.

The main schedule is a linear warmup, a hybrid main phase that starts as a
cosine decay and switches smoothly to inverse-square-root (rsqrt) decay at a
configurable turning point, and a final linear cooldown to zero.  The rsqrt
constants are solved in closed form so that both the value and the first
derivative are continuous at the turn, which is what makes the schedule
suitable for open-ended continued training.

Two named variants of the hybrid main phase are in common use:

* ``hyb``  -- turn at one quarter of the main steps, single cosine period
  (``turn_fraction=0.25``, ``period_multiplier=1``).  This is the default.
* ``hyb2`` -- doubled cosine period with the turn at half of the main steps
  (``turn_fraction=0.5``, ``period_multiplier=2``).

A plain rsqrt schedule (:func:`rsqrt_lr`) and a plain cosine decay
(:func:`cosine_lr`) are provided for comparison studies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "SchedulerSpec",
    "ContinuityParams",
    "solve_continuity",
    "lr_at",
    "schedule_curve",
    "rsqrt_lr",
    "cosine_lr",
    "average_lr",
    "hyb2_variant",
]


@dataclass(frozen=True)
class SchedulerSpec:
    """Parameters of the full warmup / hybrid-main / cooldown schedule.

    Attributes:
        min_lr: Floor of the cosine section (the rsqrt tail may decay below it).
        max_lr: Peak learning rate, reached at the end of warmup.
        main_steps: Number of optimizer steps in the hybrid main phase.
        warmup_steps: Linear ramp 0 -> max_lr over this many steps.
        cooldown_steps: Linear ramp from the last main-phase value down to 0.
        turn_fraction: Fraction of ``main_steps`` at which cosine hands over
            to rsqrt.
        period_multiplier: Stretch factor for the cosine period; the cosine
            argument is ``2*pi*i / (period_multiplier * main_steps)``.
    """

    min_lr: float
    max_lr: float
    main_steps: int
    warmup_steps: int = 0
    cooldown_steps: int = 0
    turn_fraction: float = 0.25
    period_multiplier: float = 1.0

    def __post_init__(self) -> None:
        if not self.min_lr >= 0.0:
            raise ValueError(f"min_lr must be nonnegative, got {self.min_lr}")
        if not self.max_lr > self.min_lr:
            raise ValueError(
                f"max_lr must exceed min_lr, got min={self.min_lr} max={self.max_lr}"
            )
        if self.main_steps <= 0:
            raise ValueError(f"main_steps must be positive, got {self.main_steps}")
        if self.warmup_steps < 0 or self.cooldown_steps < 0:
            raise ValueError("warmup_steps and cooldown_steps must be nonnegative")
        if not 0.0 < self.turn_fraction < 1.0:
            raise ValueError(f"turn_fraction must lie in (0, 1), got {self.turn_fraction}")
        if self.period_multiplier <= 0.0:
            raise ValueError(
                f"period_multiplier must be positive, got {self.period_multiplier}"
            )
        # The cosine must still be strictly decreasing at the turn, otherwise
        # there is no decaying rsqrt continuation.
        ratio = self.turn_fraction / self.period_multiplier
        if not 0.0 < ratio < 0.5:
            raise ValueError(
                "turn_fraction / period_multiplier must lie in (0, 0.5) so the "
                f"cosine slope at the turn is negative, got {ratio}"
            )

    @property
    def total_steps(self) -> int:
        """Last valid step of the schedule."""
        return self.warmup_steps + self.main_steps + self.cooldown_steps

    @property
    def turn_step(self) -> float:
        """Main-phase step index of the cosine -> rsqrt handover."""
        return self.turn_fraction * self.main_steps


@dataclass(frozen=True)
class ContinuityParams:
    """Closed-form constants of the rsqrt branch ``alpha / sqrt(i + beta)``.

    ``turn_step`` is the main-phase index at which the branches meet; it is
    fractional when ``turn_fraction * main_steps`` is not an integer.
    """

    alpha: float
    beta: float
    turn_step: float

    def __post_init__(self) -> None:
        if not self.alpha > 0.0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not self.turn_step + self.beta > 0.0:
            raise ValueError("turn_step + beta must be positive for a defined rsqrt branch")


def _cosine_branch(spec: SchedulerSpec, i: float) -> float:
    return spec.min_lr + (spec.max_lr - spec.min_lr) / 2.0 * (
        math.cos(2.0 * math.pi * i / (spec.period_multiplier * spec.main_steps)) + 1.0
    )


def _cosine_branch_slope(spec: SchedulerSpec, i: float) -> float:
    period = spec.period_multiplier * spec.main_steps
    return (
        -(spec.max_lr - spec.min_lr)
        / 2.0
        * math.sin(2.0 * math.pi * i / period)
        * (2.0 * math.pi / period)
    )


def solve_continuity(spec: SchedulerSpec) -> ContinuityParams:
    """Solve for the rsqrt constants that make the handover C^1-continuous.

    With ``v`` the cosine value and ``d`` its slope at the turn step ``i*``,
    matching value and derivative of ``alpha / sqrt(i + beta)`` gives

        i* + beta = -v / (2 d)        alpha = v * sqrt(i* + beta)

    Raises:
        ValueError: if the cosine slope at the turn is zero or positive, in
            which case no decaying rsqrt continuation exists.
    """
    i_star = spec.turn_step
    v = _cosine_branch(spec, i_star)
    d = _cosine_branch_slope(spec, i_star)
    if d >= 0.0:
        raise ValueError(
            f"cosine slope at the turn step must be negative, got {d} at i*={i_star}"
        )
    shifted = -v / (2.0 * d)
    return ContinuityParams(alpha=v * math.sqrt(shifted), beta=shifted - i_star, turn_step=i_star)


def lr_at(spec: SchedulerSpec, step: int) -> float:
    """Learning rate at an integer optimizer step.

    Piecewise: linear 0 -> max_lr over the warmup; cosine branch up to the
    turn step and rsqrt branch after it during the main phase; linear ramp
    from the last main-phase value down to 0 over the cooldown.

    Raises:
        ValueError: if ``step`` is negative or beyond the schedule terminus.
    """
    if step < 0:
        raise ValueError(f"step must be nonnegative, got {step}")
    if step > spec.total_steps:
        raise ValueError(
            f"step {step} beyond schedule end {spec.total_steps}"
        )
    if step < spec.warmup_steps:
        return spec.max_lr * (step / spec.warmup_steps)
    if step == spec.warmup_steps:
        # Peak is exact by construction; the cosine formula at i=0 can be an
        # ulp off because (min + (max-min)) need not round back to max.
        return spec.max_lr
    i = step - spec.warmup_steps
    if i <= spec.main_steps:
        if i <= spec.turn_step:
            return _cosine_branch(spec, i)
        cont = solve_continuity(spec)
        return cont.alpha / math.sqrt(i + cont.beta)
    # Cooldown: ramp from the main-phase terminal value to exactly zero.
    cont = solve_continuity(spec)
    last = cont.alpha / math.sqrt(spec.main_steps + cont.beta)
    j = i - spec.main_steps
    return last * (1.0 - j / spec.cooldown_steps)


def schedule_curve(spec: SchedulerSpec) -> np.ndarray:
    """Learning rate for every step ``0..total_steps`` inclusive, vectorized."""
    steps = np.arange(spec.total_steps + 1, dtype=np.float64)
    lr = np.empty_like(steps)

    w = spec.warmup_steps
    warm = steps < w
    lr[warm] = spec.max_lr * (steps[warm] / w) if w > 0 else 0.0

    i = steps - w
    period = spec.period_multiplier * spec.main_steps
    span = (spec.max_lr - spec.min_lr) / 2.0
    cos_mask = ~warm & (i <= spec.turn_step)
    lr[cos_mask] = spec.min_lr + span * (np.cos(2.0 * np.pi * i[cos_mask] / period) + 1.0)

    cont = solve_continuity(spec)
    rs_mask = (i > spec.turn_step) & (i <= spec.main_steps)
    lr[rs_mask] = cont.alpha / np.sqrt(i[rs_mask] + cont.beta)

    cool = i > spec.main_steps
    if np.any(cool):
        last = cont.alpha / math.sqrt(spec.main_steps + cont.beta)
        lr[cool] = last * (1.0 - (i[cool] - spec.main_steps) / spec.cooldown_steps)

    lr[steps == w] = spec.max_lr  # peak exact, matching lr_at
    return lr


def rsqrt_lr(
    step: int,
    warmup_steps: int,
    peak: float,
    total_steps: int | None = None,
    cooldown_fraction: float = 0.1,
) -> float:
    """Plain inverse-square-root schedule, rescaled so the plateau equals ``peak``.

    Returns ``peak * sqrt(warmup_steps / max(step, warmup_steps))``: constant at
    ``peak`` through the warmup plateau, then decaying like 1/sqrt(step).  When
    ``total_steps`` is given, the last ``cooldown_fraction`` of the run ramps
    linearly from the rsqrt value at the cooldown start down to zero.
    """
    if warmup_steps < 1:
        raise ValueError(f"warmup_steps must be >= 1, got {warmup_steps}")
    if step < 0:
        raise ValueError(f"step must be nonnegative, got {step}")
    base = peak * math.sqrt(warmup_steps / max(step, warmup_steps))
    if total_steps is None:
        return base
    cool_start = total_steps * (1.0 - cooldown_fraction)
    if step <= cool_start:
        return base
    anchor = peak * math.sqrt(warmup_steps / max(cool_start, warmup_steps))
    return anchor * max(0.0, (total_steps - step) / (total_steps - cool_start))


def cosine_lr(step: int, min_lr: float, max_lr: float, total_steps: int) -> float:
    """Plain cosine decay max_lr -> min_lr over ``total_steps`` (half period).

    The usual single-sweep decay that reaches its minimum exactly at the end
    of training; used as the baseline in scheduler comparisons.
    """
    if not 0 <= step <= total_steps:
        raise ValueError(f"step {step} outside [0, {total_steps}]")
    return min_lr + (max_lr - min_lr) / 2.0 * (1.0 + math.cos(math.pi * step / total_steps))


def average_lr(spec: SchedulerSpec) -> float:
    """Mean learning rate over the whole schedule (trapezoid at step resolution)."""
    curve = schedule_curve(spec)
    return float(np.trapezoid(curve) / (len(curve) - 1))


def hyb2_variant(spec: SchedulerSpec) -> SchedulerSpec:
    """The doubled-period variant: cosine period x2, turn moved to mid-training."""
    return replace(spec, turn_fraction=0.5, period_multiplier=2.0)
