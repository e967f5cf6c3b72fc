from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class ModeConfig:
    """Tuning for the mode estimator.

    Defaults reproduce the simulation design: epsilon = 0.1 and a grid of 100
    equally spaced levels on [0.05, 0.95]. ``bandwidth=None`` selects h by the
    modified Koenker-Machado rule at each design point.
    """

    epsilon: float = 0.1
    tau_min: float = 0.05
    tau_max: float = 0.95
    n_grid: int = 100
    bandwidth: float | None = None
    alpha: float = 0.05
    objective: str = "centered"

    def __post_init__(self):
        if not (0.0 < self.epsilon < 0.5):
            raise DomainError("epsilon must lie in (0, 1/2)", parameter="epsilon",
                module="mode_estimator")
        if not (0.0 < self.tau_min < self.tau_max < 1.0):
            raise DomainError("need 0 < tau_min < tau_max < 1", parameter="tau_min",
                module="mode_estimator")
        if self.n_grid < 3:
            raise DomainError("n_grid must be at least 3", parameter="n_grid",
                module="mode_estimator")
        if self.bandwidth is not None and not self.bandwidth > 0:
            raise DomainError("bandwidth must be positive", parameter="bandwidth",
                module="mode_estimator")
        if not (0.0 < self.alpha < 1.0):
            raise DomainError("alpha must lie in (0, 1)", parameter="alpha",
                module="mode_estimator")
        if self.objective not in ("centered", "fivepoint"):
            raise DomainError("objective must be 'centered' or 'fivepoint'", parameter="objective",
                module="mode_estimator")

    def grid(self) -> np.ndarray:
        return np.linspace(self.tau_min, self.tau_max, self.n_grid)

    @property
    def grid_step(self) -> float:
        return (self.tau_max - self.tau_min) / (self.n_grid - 1)

    def to_dict(self) -> dict:
        return asdict(self)
