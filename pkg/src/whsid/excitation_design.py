"""Random-phase multisines whose RMS envelope follows a prescribed shape within one period.

The DFT used throughout is the unitary one (``norm="ortho"``), so that
``u(t) = 1/sqrt(N) * sum_k A_k exp(j(2 pi k t / N + phi_k))`` for t = 1..N and
``sum_t u(t)**2 == sum_k |U(k)|**2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BadLength, EmptyGrid, GridOutOfRange, TooFewSegments

RMS_FLOOR = 1e-12


@dataclass(frozen=True)
class EnvelopeTarget:
    rms: np.ndarray
    description: str = ""

    def __post_init__(self):
        rms = np.asarray(self.rms, dtype=np.float64)
        if rms.ndim != 1 or rms.size == 0:
            raise BadLength("envelope must be a non-empty 1-D sequence")
        if np.any(rms < 0) or not np.all(np.isfinite(rms)):
            raise ValueError("envelope must be finite and nonnegative")
        if not np.any(rms > 0):
            raise ValueError("envelope is identically zero")
        object.__setattr__(self, "rms", rms)

    @property
    def N(self) -> int:
        return self.rms.size


@dataclass
class MultisineSignal:
    """One period of a multisine plus the data needed to regenerate or audit it."""

    samples: np.ndarray
    grid: np.ndarray
    A0: float
    phases: np.ndarray
    seed: int
    iterations: int = 0
    envelope_error: float | None = None
    converged: bool = True
    trace: list[float] = field(default_factory=list)

    @property
    def N(self) -> int:
        return self.samples.size

    def spectrum(self) -> np.ndarray:
        """One-sided unitary DFT of the period, bins 0..N/2."""
        return np.fft.rfft(self.samples, norm="ortho")

    def sidecar(self) -> dict:
        return {
            "N": self.N,
            "grid": [int(k) for k in self.grid],
            "A0": self.A0,
            "seed": self.seed,
            "iterations": self.iterations,
            "envelope_error": self.envelope_error,
        }


def default_trapezoid_envelope(N: int, peak_rms: float = math.sqrt(3.0)) -> EnvelopeTarget:
    """Symmetric ramp-up/ramp-down RMS profile peaking at mid-period.

    ``env(t) = peak_rms * min(t, N + 1 - t) / (N / 2)`` for t = 1..N, so the
    slopes are +-2 * peak_rms / N. The default peak of sqrt(3) gives (close to)
    unit mean power and slopes +-2*sqrt(3)/N.
    """
    if N % 2 or N < 4:
        raise BadLength(f"envelope length must be even and >= 4, got {N}")
    if not peak_rms > 0:
        raise ValueError("peak_rms must be positive")
    t = np.arange(1, N + 1)
    env = peak_rms * np.minimum(t, N + 1 - t) / (N / 2)
    return EnvelopeTarget(env, f"trapezoid peak={peak_rms:g} slope={2 * peak_rms / N:.6g}")


def flat_envelope(N: int, level: float = 1.0) -> EnvelopeTarget:
    return EnvelopeTarget(np.full(N, float(level)), f"flat level={level:g}")


def full_grid(N: int) -> np.ndarray:
    """All harmonics 1..N/2-1 (DC and Nyquist excluded)."""
    return np.arange(1, N // 2)


def _check_grid(N: int, grid) -> np.ndarray:
    if N % 2 or N < 4:
        raise BadLength(f"period length must be even and >= 4, got {N}")
    grid = np.unique(np.asarray(grid, dtype=np.int64))
    if grid.size == 0:
        raise EmptyGrid("excited frequency grid is empty")
    if grid[0] < 1 or grid[-1] > N // 2 - 1:
        raise GridOutOfRange(f"grid must lie within 1..{N // 2 - 1}")
    return grid


def _synthesize(N: int, grid: np.ndarray, A0: float, phases: np.ndarray) -> np.ndarray:
    # the extra exp(j 2 pi k / N) puts sample index 0 at t = 1
    spec = np.zeros(N // 2 + 1, dtype=complex)
    spec[grid] = A0 * np.exp(1j * (phases + 2 * np.pi * grid / N))
    return np.fft.irfft(spec, n=N, norm="ortho")


def _phases_of(u: np.ndarray, grid: np.ndarray) -> np.ndarray:
    N = u.size
    spec = np.fft.rfft(u, norm="ortho")
    return np.mod(np.angle(spec[grid]) - 2 * np.pi * grid / N, 2 * np.pi)


def random_phase_multisine(N: int, grid, A0: float, seed: int) -> MultisineSignal:
    """Uniform-amplitude multisine with i.i.d. phases drawn uniformly on [0, 2 pi)."""
    grid = _check_grid(N, grid)
    if not A0 > 0:
        raise ValueError("A0 must be positive")
    rng = np.random.default_rng(seed)
    phases = rng.uniform(0.0, 2 * np.pi, size=grid.size)
    return MultisineSignal(_synthesize(N, grid, float(A0), phases), grid, float(A0), phases, seed)


def default_segments(N: int) -> int:
    return max(16, N // 256)


def instantaneous_rms(u, segments: int) -> np.ndarray:
    """Per-segment RMS linearly interpolated between segment midpoints.

    Values before the first and after the last midpoint are held constant.
    The result is floored at 1e-12 of its maximum.
    """
    u = np.asarray(u, dtype=np.float64)
    N = u.size
    if segments < 2:
        raise TooFewSegments(f"need at least 2 segments, got {segments}")
    if segments > N:
        raise TooFewSegments(f"{segments} segments exceed {N} samples")
    bounds = np.arange(segments + 1) * N // segments
    starts, stops = bounds[:-1], bounds[1:]
    seg_rms = np.sqrt(np.add.reduceat(u * u, starts) / (stops - starts))
    mids = 0.5 * (starts + stops - 1)
    env = np.interp(np.arange(N), mids, seg_rms)
    peak = env.max()
    if peak == 0.0:
        return np.full(N, RMS_FLOOR)
    return np.maximum(env, RMS_FLOOR * peak)


def achievable_power(N: int, grid, A0: float) -> float:
    """Mean square of any signal with |U(k)| = A0 on ``grid`` and zero elsewhere."""
    return 2.0 * len(grid) * A0 * A0 / N


def design_nonstationary_multisine(
    target: EnvelopeTarget,
    grid,
    A0: float,
    seed: int,
    max_iter: int = 100,
    tol: float = 1e-3,
    segments: int | None = None,
) -> MultisineSignal:
    """Shape a random-phase multisine's RMS envelope toward ``target``.

    Each iteration rescales the signal sample-wise by target/current envelope,
    then restores the uniform amplitude spectrum on ``grid`` while keeping the
    phases. The amplitude constraint fixes total power, so ``target`` is
    rescaled to that power before comparison. Iteration stops when the
    relative envelope error falls below ``tol``, improves by less than ``tol``
    (relative), or after ``max_iter`` steps; the best iterate is returned.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    N = target.N
    grid = _check_grid(N, grid)
    segments = default_segments(N) if segments is None else segments
    start = random_phase_multisine(N, grid, A0, seed)

    r0 = target.rms * math.sqrt(achievable_power(N, grid, A0) / np.mean(target.rms**2))
    r0_norm = np.linalg.norm(r0)
    positive = r0 > 0
    amp = np.zeros(N // 2 + 1)
    amp[grid] = A0

    def envelope_error(env):
        return float(np.linalg.norm(env - r0) / r0_norm)

    u = start.samples
    env = instantaneous_rms(u, segments)
    err = envelope_error(env)
    trace = [err]
    best_u, best_err = u, err
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        scale = np.zeros(N)
        scale[positive] = r0[positive] / env[positive]
        spec = np.fft.rfft(scale * u, norm="ortho")
        spec = amp * np.exp(1j * np.angle(spec))
        u = np.fft.irfft(spec, n=N, norm="ortho")
        env = instantaneous_rms(u, segments)
        prev, err = err, envelope_error(env)
        trace.append(err)
        if err < best_err:
            best_u, best_err = u, err
        if err <= tol or prev - err < tol * prev:
            converged = True
            break

    return MultisineSignal(
        samples=best_u,
        grid=grid,
        A0=float(A0),
        phases=_phases_of(best_u, grid),
        seed=seed,
        iterations=iterations,
        envelope_error=best_err,
        converged=converged,
        trace=trace,
    )
