"""Campaign configuration: JSON loading, defaults and validation."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ParseError, ValidationError, WhsidError
from .excitation_design import EnvelopeTarget, default_trapezoid_envelope, flat_envelope, full_grid
from .lti_filter import TransferFunction, make_filter
from .static_nonlinearity import EXAMPLE_POLYNOMIAL, StaticNonlinearity, from_dict as nl_from_dict
from .structure_detector import DEFAULT_BINS, Thresholds
from .wh_simulator import (
    DEFAULT_FS,
    EXAMPLE_HEX,
    EXAMPLE_HEY,
    EXAMPLE_R,
    EXAMPLE_S,
    Location,
    NoiseModel,
    Node,
    WhSystem,
)

EXAMPLE_N = 16384
EXAMPLE_M = 100
EXAMPLE_P = 100


@dataclass
class ExcitationSpec:
    N: int = EXAMPLE_N
    grid: np.ndarray | None = None
    envelope: str = "trapezoid"
    peak_rms: float = math.sqrt(3.0)
    A0: float = 1.0
    max_iter: int = 100
    tol: float = 1e-3

    def target(self) -> EnvelopeTarget:
        if self.envelope == "flat":
            return flat_envelope(self.N)
        return default_trapezoid_envelope(self.N, self.peak_rms)

    def resolved_grid(self) -> np.ndarray:
        return full_grid(self.N) if self.grid is None else self.grid


@dataclass
class CampaignSpec:
    M: int = EXAMPLE_M
    P: int = EXAMPLE_P
    base_seed: int = 0
    fs: float = DEFAULT_FS


@dataclass
class DetectorSpec:
    bins: int = DEFAULT_BINS
    thresholds: Thresholds = field(default_factory=Thresholds)


@dataclass
class CampaignConfig:
    system: WhSystem
    excitation: ExcitationSpec
    campaign: CampaignSpec
    detector: DetectorSpec
    data_manifest: Path | None = None

    def to_dict(self) -> dict:
        sys = self.system

        def noise(model):
            if model is None:
                return None
            return {"filter": model.shaping.to_dict(), "snr_db": model.snr_db, "node": model.node.value}

        ex = self.excitation
        return {
            "system": {
                "R": sys.R.to_dict(),
                "S": sys.S.to_dict(),
                "nl": sys.f.to_dict(),
                "location": sys.location.value,
                "process_noise": noise(sys.process),
                "measurement_noise": noise(sys.measurement),
                "input_noise_std": sys.input_noise_std,
            },
            "excitation": {
                "N": ex.N,
                "grid": None if ex.grid is None else [int(k) for k in ex.grid],
                "envelope": {"shape": ex.envelope, "peak_rms": ex.peak_rms},
                "A0": ex.A0,
                "max_iter": ex.max_iter,
                "tol": ex.tol,
            },
            "campaign": {
                "M": self.campaign.M,
                "P": self.campaign.P,
                "base_seed": self.campaign.base_seed,
                "fs": self.campaign.fs,
            },
            "detector": {"bins": self.detector.bins, "thresholds": self.detector.thresholds.to_dict()},
        }


def _get(d: dict, key: str, path: str, kind, default=None, required=False):
    if key not in d or d[key] is None:
        if required:
            raise ValidationError(f"{path}.{key}" if path else key, "missing required field")
        return default
    value = d[key]
    try:
        if kind is int:
            if isinstance(value, bool) or int(value) != value:
                raise TypeError
            return int(value)
        if kind is float:
            if isinstance(value, bool):
                raise TypeError
            out = float(value)
            if not math.isfinite(out):
                raise TypeError
            return out
        return kind(value)
    except (TypeError, ValueError):
        raise ValidationError(f"{path}.{key}" if path else key, f"expected {kind.__name__}, got {value!r}") from None


def _filter(spec, path: str, default: TransferFunction) -> TransferFunction:
    if spec is None:
        return default
    if not isinstance(spec, dict) or "num" not in spec or "den" not in spec:
        raise ValidationError(path, "filter must be an object with 'num' and 'den' arrays")
    try:
        return make_filter(spec["num"], spec["den"])
    except (WhsidError, ValueError, TypeError) as exc:
        raise ValidationError(path, f"{type(exc).__name__}: {exc}") from None


def _nl(spec, path: str) -> StaticNonlinearity:
    if spec is None:
        return EXAMPLE_POLYNOMIAL
    try:
        return nl_from_dict(spec)
    except (KeyError, ValueError, TypeError) as exc:
        raise ValidationError(path, str(exc)) from None


def _default_noise(location: Location, which: str) -> dict:
    if which == "process":
        if location is Location.BEFORE:
            return {"snr_db": 26.0, "node": "x"}
        return {"snr_db": 20.0, "node": "fx"}
    return {"snr_db": 20.0 if location is Location.BEFORE else 26.0, "node": "y0"}


def _noise(spec, path: str, location: Location, which: str) -> NoiseModel | None:
    if spec is False:
        return None
    spec = dict(spec or {})
    defaults = _default_noise(location, which)
    shaping = _filter(spec.get("filter"), f"{path}.filter", EXAMPLE_HEX if which == "process" else EXAMPLE_HEY)
    snr = _get(spec, "snr_db", path, float, defaults["snr_db"])
    try:
        node = Node(spec.get("node", defaults["node"]))
    except ValueError:
        raise ValidationError(f"{path}.node", f"unknown node {spec.get('node')!r}") from None
    expected = {"process": Node.X if location is Location.BEFORE else Node.FX, "measurement": Node.Y0}[which]
    if node is not expected:
        raise ValidationError(f"{path}.node", f"{which} noise for location {location.value!r} is referenced to {expected.value!r}")
    gain = spec.get("gain")
    return NoiseModel(shaping, snr, node, None if gain is None else _get(spec, "gain", path, float))


def parse_config(raw: dict, base_dir: Path | None = None) -> CampaignConfig:
    """Validate a config mapping and fill defaults from the simulated example."""
    if not isinstance(raw, dict):
        raise ValidationError("<root>", "config must be a JSON object")
    sys_raw = dict(raw.get("system") or {})
    for key in ("R", "S", "nl", "location", "process_noise", "measurement_noise", "input_noise_std"):
        if key in raw and key not in sys_raw:
            sys_raw[key] = raw[key]

    try:
        location = Location(sys_raw.get("location", "before"))
    except ValueError:
        raise ValidationError("system.location", f"must be one of before/after/none, got {sys_raw.get('location')!r}") from None
    system = WhSystem(
        R=_filter(sys_raw.get("R"), "system.R", EXAMPLE_R),
        S=_filter(sys_raw.get("S"), "system.S", EXAMPLE_S),
        f=_nl(sys_raw.get("nl"), "system.nl"),
        location=location,
        process=None if location is Location.NONE else _noise(sys_raw.get("process_noise"), "system.process_noise", location, "process"),
        measurement=_noise(sys_raw.get("measurement_noise"), "system.measurement_noise", location, "measurement"),
        input_noise_std=_get(sys_raw, "input_noise_std", "system", float, 0.0),
    )
    if system.input_noise_std < 0:
        raise ValidationError("system.input_noise_std", "must be nonnegative")

    ex_raw = raw.get("excitation") or {}
    env_raw = ex_raw.get("envelope") or {}
    if isinstance(env_raw, str):
        env_raw = {"shape": env_raw}
    ex = ExcitationSpec(
        N=_get(ex_raw, "N", "excitation", int, EXAMPLE_N),
        envelope=env_raw.get("shape", "trapezoid"),
        peak_rms=_get(env_raw, "peak_rms", "excitation.envelope", float, math.sqrt(3.0)),
        A0=_get(ex_raw, "A0", "excitation", float, 1.0),
        max_iter=_get(ex_raw, "max_iter", "excitation", int, 100),
        tol=_get(ex_raw, "tol", "excitation", float, 1e-3),
    )
    if ex.N < 64 or ex.N % 2:
        raise ValidationError("excitation.N", "period length must be even and >= 64")
    if ex.envelope not in ("trapezoid", "flat"):
        raise ValidationError("excitation.envelope.shape", f"unknown shape {ex.envelope!r}")
    if not ex.A0 > 0:
        raise ValidationError("excitation.A0", "must be positive (persistent excitation)")
    if not ex.peak_rms > 0:
        raise ValidationError("excitation.envelope.peak_rms", "must be positive")
    if ex.max_iter < 0 or not ex.tol > 0:
        raise ValidationError("excitation", "need max_iter >= 0 and tol > 0")
    if "grid" in ex_raw and ex_raw["grid"] is not None:
        grid = ex_raw["grid"]
        if not isinstance(grid, list) or not grid:
            raise ValidationError("excitation.grid", "excited grid must be a non-empty list (persistent excitation)")
        try:
            arr = np.asarray(grid)
            if arr.dtype.kind not in "iu":
                raise TypeError
        except (TypeError, ValueError):
            raise ValidationError("excitation.grid", "grid entries must be integers") from None
        if arr.min() < 1 or arr.max() > ex.N // 2 - 1:
            raise ValidationError("excitation.grid", f"grid must lie within 1..{ex.N // 2 - 1}")
        ex.grid = np.unique(arr.astype(np.int64))

    c_raw = raw.get("campaign") or {}
    camp = CampaignSpec(
        M=_get(c_raw, "M", "campaign", int, EXAMPLE_M),
        P=_get(c_raw, "P", "campaign", int, EXAMPLE_P),
        base_seed=_get(c_raw, "base_seed", "campaign", int, 0),
        fs=_get(c_raw, "fs", "campaign", float, DEFAULT_FS),
    )
    if camp.M < 1:
        raise ValidationError("campaign.M", "need at least one experiment")
    if camp.P < 2:
        raise ValidationError("campaign.P", "need at least two periods")
    if not camp.fs > 0:
        raise ValidationError("campaign.fs", "sampling rate must be positive")
    if camp.base_seed < 0:
        raise ValidationError("campaign.base_seed", "seed must be nonnegative")

    d_raw = raw.get("detector") or {}
    t_raw = d_raw.get("thresholds") or {}
    defaults = Thresholds()
    thresholds = Thresholds(**{
        name: _get(t_raw, name, "detector.thresholds", float, getattr(defaults, name))
        for name in defaults.to_dict()
    })
    unknown = set(t_raw) - set(defaults.to_dict())
    if unknown:
        raise ValidationError("detector.thresholds", f"unknown thresholds {sorted(unknown)}")
    det = DetectorSpec(bins=_get(d_raw, "bins", "detector", int, DEFAULT_BINS), thresholds=thresholds)
    if det.bins < 4 or det.bins > ex.N // 16:
        raise ValidationError("detector.bins", f"must be in [4, {ex.N // 16}]")

    manifest = None
    data_raw = raw.get("data")
    if data_raw:
        if not isinstance(data_raw, dict) or "manifest" not in data_raw:
            raise ValidationError("data", "expected {'manifest': path}")
        manifest = Path(data_raw["manifest"])
        if base_dir is not None and not manifest.is_absolute():
            manifest = base_dir / manifest
    return CampaignConfig(system, ex, camp, det, manifest)


def load_config(path) -> CampaignConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise ParseError(f"config file {path} not found") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from None
    return parse_config(raw, base_dir=path.parent)
