"""Memoryless nonlinearities: truncated power polynomial, saturation and dead-zone."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonFiniteInput


class StaticNonlinearity:
    """Base class; subclasses are immutable value types."""

    kind: str = ""

    def __call__(self, x) -> np.ndarray:
        return eval_nl(self, x)

    def _eval(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Polynomial(StaticNonlinearity):
    """f(x) = sum_i coeffs[i] * x**i."""

    coeffs: tuple[float, ...]
    kind = "polynomial"

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.coeffs)
        if not coeffs:
            raise ValueError("polynomial needs at least one coefficient")
        if not all(np.isfinite(coeffs)):
            raise ValueError("polynomial coefficients must be finite")
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def _eval(self, x):
        # Horner
        out = np.full_like(x, self.coeffs[-1])
        for c in reversed(self.coeffs[:-1]):
            out = out * x + c
        return out

    def to_dict(self):
        return {"type": "polynomial", "coeffs": list(self.coeffs)}


@dataclass(frozen=True)
class Saturation(StaticNonlinearity):
    lo: float
    hi: float
    kind = "saturation"

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"saturation needs lo < hi, got {self.lo}, {self.hi}")

    def _eval(self, x):
        return np.clip(x, self.lo, self.hi)

    def to_dict(self):
        return {"type": "saturation", "lo": self.lo, "hi": self.hi}


@dataclass(frozen=True)
class DeadZone(StaticNonlinearity):
    lo: float
    hi: float
    kind = "deadzone"

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"dead-zone needs lo < hi, got {self.lo}, {self.hi}")

    def _eval(self, x):
        return np.where(x <= self.lo, x - self.lo, np.where(x >= self.hi, x - self.hi, 0.0))

    def to_dict(self):
        return {"type": "deadzone", "lo": self.lo, "hi": self.hi}


def eval_nl(f: StaticNonlinearity, x) -> np.ndarray:
    """Apply ``f`` pointwise; scalars come back as 0-d arrays."""
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise NonFiniteInput("nonlinearity input contains NaN or Inf")
    return f._eval(x)


def polynomial_coefficients(f: StaticNonlinearity) -> list[float] | None:
    """The power-series coefficients a_0..a_n, or ``None`` for non-polynomial variants."""
    if isinstance(f, Polynomial):
        return list(f.coeffs)
    return None


def from_dict(spec: dict) -> StaticNonlinearity:
    kind = spec.get("type")
    if kind == "polynomial":
        return Polynomial(tuple(spec["coeffs"]))
    if kind == "saturation":
        return Saturation(float(spec["lo"]), float(spec["hi"]))
    if kind == "deadzone":
        return DeadZone(float(spec["lo"]), float(spec["hi"]))
    raise ValueError(f"unknown nonlinearity type {kind!r}")


# Reference blocks from the simulated example.
EXAMPLE_POLYNOMIAL = Polynomial((0.0, 0.01, 0.02, -0.008))
EXAMPLE_SATURATION = Saturation(-3.0, 3.0)
EXAMPLE_DEADZONE = DeadZone(-1.0, 1.0)
