"""Frame timeline: the transient / active / sleep cycle of one sensed frame.

Sleep time is always derived from the frame period, never supplied, so the
three mode durations account for the whole period by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

from .phy_model import LinkBudget, active_duration

__all__ = ["FrameSchedule", "frame_schedule"]


@dataclass(frozen=True)
class FrameSchedule:
    """One frame period split into its radio modes."""

    t_frame_s: float
    t_transient_s: float
    t_active_s: float
    t_sleep_s: float

    def __post_init__(self) -> None:
        for name in ("t_frame_s", "t_transient_s", "t_active_s", "t_sleep_s"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        parts = self.t_transient_s + self.t_active_s + self.t_sleep_s
        if abs(parts - self.t_frame_s) > 1e-12 * max(self.t_frame_s, 1.0):
            raise ValueError("mode durations must sum to the frame period")

    @property
    def modes(self) -> tuple[tuple[str, float], ...]:
        return (
            ("transient", self.t_transient_s),
            ("active", self.t_active_s),
            ("sleep", self.t_sleep_s),
        )

    @property
    def duty_cycle(self) -> float:
        return self.t_active_s / self.t_frame_s


def frame_schedule(lb: LinkBudget, rate: float = 1.0) -> FrameSchedule:
    """Timeline for one frame at a code rate (rate 1 is the plain scheme)."""
    if not 0.0 < rate <= 1.0:
        raise ValueError("rate must lie in (0, 1]")
    t_active = active_duration(lb.m, lb.frame_bits, lb.bandwidth_hz).t_active_s / rate
    t_sleep = lb.t_frame_s - lb.t_tr_s - t_active
    if t_sleep < 0:
        raise ValueError(
            f"active time {t_active:.4g} s does not fit the frame period "
            f"{lb.t_frame_s:.4g} s at rate {rate}"
        )
    return FrameSchedule(lb.t_frame_s, lb.t_tr_s, t_active, t_sleep)
