from dataclasses import dataclass

import numpy as np

from fem.flux import FluxTrace

MIN_SAMPLES = 16


class ShapeError(ValueError):
    pass


class EmptyTrace(ShapeError):
    pass


class TooFewSamples(ShapeError):
    pass


class IncompatibleData(ShapeError):
    pass


class StepTooLarge(ShapeError):
    pass


@dataclass(frozen=True, eq=False)
class CircleTrace:
    """Samples g(theta) on a circle of the given radius, angles strictly increasing in [0, 2 pi)."""

    theta: np.ndarray
    values: np.ndarray
    radius: float

    def __post_init__(self):
        if len(self.theta) < MIN_SAMPLES:
            raise TooFewSamples(f"need at least {MIN_SAMPLES} samples on the circle, got {len(self.theta)}")
        if len(self.values) != len(self.theta):
            raise ShapeError("theta and values must have the same length")
        if np.any(np.diff(self.theta) <= 0.0) or self.theta[0] < 0.0 or self.theta[-1] >= 2.0 * np.pi:
            raise ShapeError("angles must be strictly increasing within [0, 2π)")

    def __len__(self) -> int:
        return len(self.theta)

    @classmethod
    def sample(cls, g, n: int, radius: float = 1.0) -> "CircleTrace":
        theta = 2.0 * np.pi * np.arange(n) / n
        return cls(theta=theta, values=np.asarray(g(theta), dtype=float) * np.ones(n), radius=radius)

    @classmethod
    def from_flux(cls, flux: FluxTrace, values: np.ndarray) -> "CircleTrace":
        if len(flux) == 0:
            raise EmptyTrace("flux trace has no inner nodes")
        return cls(theta=flux.theta, values=np.asarray(values, dtype=float), radius=flux.radius)
