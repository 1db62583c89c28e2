"""Rational discrete-time filters in powers of z^-1 with streaming state."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import EmptyDenominator, StateSizeMismatch, UnstableFilter

#: Poles with magnitude at or above ``1 - STABILITY_MARGIN`` are rejected.
STABILITY_MARGIN = 1e-9


def _roots_from_denominator(den) -> np.ndarray:
    # a0 + a1 z^-1 + ... + an z^-n = 0  <=>  a0 z^n + a1 z^(n-1) + ... + an = 0
    den = np.asarray(den, dtype=np.float64)
    if den.size <= 1:
        return np.empty(0, dtype=complex)
    monic = den / den[0]
    n = monic.size - 1
    companion = np.zeros((n, n))
    companion[0, :] = -monic[1:]
    companion[1:, :-1] = np.eye(n - 1)
    return np.linalg.eigvals(companion)


@dataclass(frozen=True)
class TransferFunction:
    """B(z^-1) / A(z^-1), validated stable at construction.

    Use :func:`make_filter` rather than instantiating directly.
    """

    numerator: tuple[float, ...]
    denominator: tuple[float, ...]
    _b: np.ndarray = field(repr=False, compare=False)
    _a: np.ndarray = field(repr=False, compare=False)

    @property
    def order(self) -> int:
        """Length of the delay line, ``max(nb, na)``."""
        return self._b.size - 1

    def new_state(self) -> FilterState:
        return FilterState(np.zeros(self.order))

    def __call__(self, x) -> np.ndarray:
        """Filter ``x`` from zero initial state."""
        return filter_apply(self, x, self.new_state())

    def impulse_response(self, n: int) -> np.ndarray:
        x = np.zeros(n)
        x[0] = 1.0
        return self(x)

    def to_dict(self) -> dict:
        return {"num": list(self.numerator), "den": list(self.denominator)}


@dataclass
class FilterState:
    """Transposed direct-form delay line, mutated by :func:`filter_apply`."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)

    def __len__(self):
        return self.values.size

    def reset(self):
        self.values[:] = 0.0


def pole_magnitudes(denominator) -> list[float]:
    """Magnitudes of the roots of the denominator polynomial in z.

    Parameters
    ----------
    denominator : sequence of float or TransferFunction
        Coefficients a0..an of powers of z^-1.
    """
    if isinstance(denominator, TransferFunction):
        denominator = denominator.denominator
    return sorted(float(abs(p)) for p in _roots_from_denominator(denominator))


def make_filter(numerator, denominator) -> TransferFunction:
    """Build a validated, stable transfer function.

    Raises
    ------
    EmptyDenominator
        If the denominator is empty or its leading coefficient is zero.
    UnstableFilter
        If any pole has magnitude >= 1 - 1e-9.
    """
    num = [float(c) for c in numerator]
    den = [float(c) for c in denominator]
    if not den or den[0] == 0.0:
        raise EmptyDenominator("denominator must be non-empty with a nonzero leading coefficient")
    if not num:
        num = [0.0]
    if not all(np.isfinite(num)) or not all(np.isfinite(den)):
        raise ValueError("filter coefficients must be finite")
    mags = pole_magnitudes(den)
    if mags and max(mags) >= 1.0 - STABILITY_MARGIN:
        raise UnstableFilter(f"pole magnitude {max(mags):.6g} is not inside the unit circle")
    size = max(len(num), len(den))
    b = np.zeros(size)
    a = np.zeros(size)
    b[: len(num)] = num
    a[: len(den)] = den
    b /= den[0]
    a /= den[0]
    return TransferFunction(tuple(num), tuple(den), b, a)


def filter_apply(tf: TransferFunction, x, state: FilterState) -> np.ndarray:
    """Run ``x`` through ``tf``, continuing from and updating ``state``.

    Consecutive calls with the same state are equivalent to one call on the
    concatenated input.
    """
    if len(state) != tf.order:
        raise StateSizeMismatch(f"state has {len(state)} taps, filter needs {tf.order}")
    x = np.ascontiguousarray(x, dtype=np.float64)
    return kernels.df2t_filter(tf._b, tf._a, x, state.values)


IDENTITY = make_filter([1.0], [1.0])
