"""Time-resolved output-disturbance variance and the decisions drawn from it.

The indicator is the across-period sample variance of the output at each
instant of the period, averaged over experiments. Process noise entering
before the nonlinearity makes it follow the input envelope; noise after the
nonlinearity (or none) leaves it flat.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import BadBinCount, TooFewPeriods

RHO_MIN = 0.5
RATIO_MIN = 2.0
PLATEAU_FRAC = 0.15
FLOOR_TOL = 1.25
PEAK_DIP = 0.6
SHOULDER_FRAC = 0.5
DEFAULT_BINS = 32


class Verdict(str, enum.Enum):
    BEFORE = "ProcessNoiseBeforeNL"
    AFTER_OR_ABSENT = "ProcessNoiseAfterNLorAbsent"


class Signature(str, enum.Enum):
    SATURATION = "SaturationLike"
    DEAD_ZONE = "DeadZoneLike"
    SMOOTH = "SmoothLike"
    NOT_APPLICABLE = "NotApplicable"


@dataclass
class VarianceProfile:
    sigma2: np.ndarray
    per_experiment: np.ndarray
    dof: int

    @property
    def N(self) -> int:
        return self.sigma2.size


@dataclass
class Bins:
    sigma2: np.ndarray
    envelope2: np.ndarray
    edges: np.ndarray

    @property
    def B(self) -> int:
        return self.sigma2.size


@dataclass(frozen=True)
class Thresholds:
    rho_min: float = RHO_MIN
    ratio_min: float = RATIO_MIN
    plateau_frac: float = PLATEAU_FRAC
    floor_tol: float = FLOOR_TOL
    peak_dip: float = PEAK_DIP
    shoulder_frac: float = SHOULDER_FRAC

    def to_dict(self) -> dict:
        return {
            "shoulder_frac": self.shoulder_frac,
            "rho_min": self.rho_min,
            "ratio_min": self.ratio_min,
            "plateau_frac": self.plateau_frac,
            "floor_tol": self.floor_tol,
            "peak_dip": self.peak_dip,
        }


@dataclass
class Decision:
    verdict: Verdict
    rho: float | None
    ratio: float
    degenerate: bool = False


@dataclass
class DetectionReport:
    verdict: Verdict
    rho: float | None
    ratio: float
    signature: Signature
    bins: Bins
    thresholds: Thresholds
    mean_sigma2: float
    degenerate: bool = False
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "signature": self.signature.value,
            "rho": self.rho,
            "ratio": self.ratio,
            "mean_sigma2": self.mean_sigma2,
            "degenerate_correlation": self.degenerate,
            "thresholds": self.thresholds.to_dict(),
            "bins": {
                "edges": [int(e) for e in self.bins.edges],
                "sigma2": [float(v) for v in self.bins.sigma2],
                "envelope2": [float(v) for v in self.bins.envelope2],
            },
            "notes": list(self.notes),
        }


def variance_profile(record) -> VarianceProfile:
    """Per-instant unbiased variance across periods, averaged over experiments.

    Accepts a :class:`~whsid.wh_simulator.CampaignRecord` or a raw (M, P, N) array.
    """
    y = getattr(record, "outputs", record)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if y.ndim == 2:
        y = y[np.newaxis]
    M, P, _ = y.shape
    if P < 2:
        raise TooFewPeriods(f"need at least 2 periods per experiment, got {P}")
    per_exp = kernels.period_variance(y)
    return VarianceProfile(per_exp.mean(axis=0), per_exp, M * (P - 1))


def bin_profile(profile, envelope, B: int = DEFAULT_BINS) -> Bins:
    """Means of the variance and of the squared envelope over B equal time bins."""
    sigma2 = np.asarray(getattr(profile, "sigma2", profile), dtype=np.float64)
    env = np.asarray(getattr(envelope, "rms", envelope), dtype=np.float64)
    N = sigma2.size
    if env.size != N:
        raise ValueError(f"envelope length {env.size} != profile length {N}")
    if B < 4 or B > N // 16:
        raise BadBinCount(f"bin count must be in [4, {N // 16}], got {B}")
    edges = np.arange(B + 1) * N // B
    counts = np.diff(edges)
    s = np.add.reduceat(sigma2, edges[:-1]) / counts
    e = np.add.reduceat(env * env, edges[:-1]) / counts
    return Bins(s, e, edges)


def _pearson(a: np.ndarray, b: np.ndarray) -> float | None:
    a = a - a.mean()
    b = b - b.mean()
    den = np.sqrt(np.dot(a, a) * np.dot(b, b))
    if den == 0 or not np.isfinite(den):
        return None
    return float(np.clip(np.dot(a, b) / den, -1.0, 1.0))


def decide_location(bins: Bins, thresholds: Thresholds = Thresholds()) -> Decision:
    """Before-NL iff |rho| >= rho_min or max/min bin variance >= ratio_min.

    ``rho`` is the correlation between binned variance and binned squared
    envelope. Its magnitude is used because clipping nonlinearities make the
    variance dip where the envelope peaks. When either sequence is constant
    the correlation is undefined and the ratio decides alone.
    """
    rho = _pearson(bins.sigma2, bins.envelope2)
    lo, hi = bins.sigma2.min(), bins.sigma2.max()
    if lo > 0:
        ratio = float(hi / lo)
    else:
        ratio = 1.0 if hi == 0 else float("inf")
    before = ratio >= thresholds.ratio_min or (rho is not None and abs(rho) >= thresholds.rho_min)
    verdict = Verdict.BEFORE if before else Verdict.AFTER_OR_ABSENT
    return Decision(verdict, rho, ratio, degenerate=rho is None)


def classify_signature(bins: Bins, verdict: Verdict, thresholds: Thresholds = Thresholds()) -> Signature:
    """Name the nonlinearity family suggested by the variance shape.

    Works on the excess of each bin over the lowest bin. Peak bins are the
    top quartile of squared envelope, edge bins its bottom ``plateau_frac``
    quantile, shoulder bins everything in between.

    - SaturationLike: peak-bin excess <= ``peak_dip`` x the excess elsewhere
      (the variance dips where the input is largest).
    - DeadZoneLike: edge bins within ``floor_tol`` of the floor, peak bins
      carrying the largest excess, and shoulder excess >= ``shoulder_frac`` x
      peak excess (a floor at small amplitude, then an early plateau).
    - SmoothLike otherwise.
    """
    if verdict is not Verdict.BEFORE:
        return Signature.NOT_APPLICABLE
    s, e = bins.sigma2, bins.envelope2
    floor = s.min()
    excess = s - floor
    peak = e >= np.quantile(e, 0.75)
    edge = e <= np.quantile(e, thresholds.plateau_frac)
    rest = ~peak
    shoulder = ~peak & ~edge
    if not (peak.any() and rest.any()):
        return Signature.SMOOTH
    peak_excess = excess[peak].mean()
    if peak_excess <= thresholds.peak_dip * excess[rest].mean():
        return Signature.SATURATION
    if (
        edge.any()
        and shoulder.any()
        and s[edge].mean() <= thresholds.floor_tol * floor
        and peak_excess >= excess[rest].mean()
        and excess[shoulder].mean() >= thresholds.shoulder_frac * peak_excess
    ):
        return Signature.DEAD_ZONE
    return Signature.SMOOTH


def detect(record, envelope=None, B: int = DEFAULT_BINS, thresholds: Thresholds = Thresholds()) -> tuple[DetectionReport, VarianceProfile]:
    """Full detection on a campaign: profile, bins, verdict and signature.

    ``envelope`` defaults to the record's design target, or failing that to the
    mean instantaneous RMS of the recorded input periods.
    """
    from .excitation_design import default_segments, instantaneous_rms

    profile = variance_profile(record)
    notes = ["location thresholds are heuristic; see report.thresholds"]
    if envelope is None:
        envelope = getattr(record, "envelope", None)
    if envelope is None:
        inputs = np.atleast_2d(record.inputs)
        envelope = np.mean([instantaneous_rms(u, default_segments(u.size)) for u in inputs], axis=0)
        notes.append("envelope estimated from recorded inputs")
    bins = bin_profile(profile, envelope, B)
    decision = decide_location(bins, thresholds)
    signature = classify_signature(bins, decision.verdict, thresholds)
    report = DetectionReport(
        verdict=decision.verdict,
        rho=decision.rho,
        ratio=decision.ratio,
        signature=signature,
        bins=bins,
        thresholds=thresholds,
        mean_sigma2=float(profile.sigma2.mean()),
        degenerate=decision.degenerate,
        notes=notes,
    )
    return report, profile
