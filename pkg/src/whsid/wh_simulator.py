"""Wiener-Hammerstein simulation with process noise before or after the nonlinearity.

Case I (``Location.BEFORE``)::

    y = S f(R u + e_x) + e_y

Case II (``Location.AFTER``)::

    y = S (f(R u) + e_x) + e_y

``Location.NONE`` is case II without process noise. Noises are unit-variance
white Gaussian sequences passed through a shaping filter and scaled by a gain
calibrated from a target SNR.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from math import comb

import numpy as np

from .errors import NonFiniteSample, NonPolynomial, ZeroReferenceVariance
from .excitation_design import EnvelopeTarget, MultisineSignal, design_nonstationary_multisine
from .lti_filter import IDENTITY, TransferFunction, make_filter, pole_magnitudes
from .static_nonlinearity import StaticNonlinearity, eval_nl, polynomial_coefficients

DEFAULT_FS = 78125.0

# Seeds are SeedSequence([base_seed, experiment, stream]). The noise stream is
# split further by simulate() into process, measurement and input-noise children.
STREAM_INPUT = 0
STREAM_NOISE = 1


class Location(str, enum.Enum):
    BEFORE = "before"
    AFTER = "after"
    NONE = "none"


class Node(str, enum.Enum):
    """Signal used as SNR reference."""

    X = "x"
    FX = "fx"
    Y0 = "y0"


@dataclass(frozen=True)
class NoiseModel:
    shaping: TransferFunction
    snr_db: float
    node: Node
    gain: float | None = None

    def __post_init__(self):
        if not math.isfinite(self.snr_db):
            raise ValueError("SNR must be finite")
        object.__setattr__(self, "node", Node(self.node))


@dataclass(frozen=True)
class WhSystem:
    R: TransferFunction
    S: TransferFunction
    f: StaticNonlinearity
    location: Location
    process: NoiseModel | None = None
    measurement: NoiseModel | None = None
    input_noise_std: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "location", Location(self.location))

    @property
    def process_gain(self) -> float:
        if self.location is Location.NONE or self.process is None:
            return 0.0
        return _gain_of(self.process, "process")

    @property
    def measurement_gain(self) -> float:
        if self.measurement is None:
            return 0.0
        return _gain_of(self.measurement, "measurement")

    def with_gains(self, process: float | None = None, measurement: float | None = None) -> WhSystem:
        sys = self
        if process is not None and sys.process is not None:
            sys = replace(sys, process=replace(sys.process, gain=float(process)))
        if measurement is not None and sys.measurement is not None:
            sys = replace(sys, measurement=replace(sys.measurement, gain=float(measurement)))
        return sys

    def noise_free(self) -> WhSystem:
        return replace(self, location=Location.NONE, measurement=None, input_noise_std=0.0)


def _gain_of(model: NoiseModel, name: str) -> float:
    if model.gain is None:
        raise ValueError(f"{name} noise gain is not calibrated")
    return model.gain


@dataclass
class CampaignRecord:
    """Outputs ``y[m, p, t]`` for M experiments and P steady-state periods."""

    inputs: np.ndarray
    outputs: np.ndarray
    metadata: dict = field(default_factory=dict)
    envelope: np.ndarray | None = None

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=np.float64)
        self.outputs = np.ascontiguousarray(self.outputs, dtype=np.float64)
        if self.outputs.ndim != 3:
            raise ValueError("outputs must have shape (M, P, N)")
        M, _, N = self.outputs.shape
        if self.inputs.shape != (M, N):
            raise ValueError(f"inputs shape {self.inputs.shape} does not match ({M}, {N})")
        check_finite(self.outputs, "outputs")

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.outputs.shape

    @property
    def M(self) -> int:
        return self.outputs.shape[0]

    @property
    def P(self) -> int:
        return self.outputs.shape[1]

    @property
    def N(self) -> int:
        return self.outputs.shape[2]


def check_finite(a: np.ndarray, what: str) -> None:
    bad = ~np.isfinite(a)
    if bad.any():
        loc = tuple(int(i) for i in np.argwhere(bad)[0])
        raise NonFiniteSample(f"non-finite sample in {what} at index {loc}", location=loc)


def derive_seed(base_seed: int, experiment: int, stream: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(base_seed), int(experiment), int(stream)])


def derive_int_seed(base_seed: int, experiment: int, stream: int) -> int:
    return int(derive_seed(base_seed, experiment, stream).generate_state(1, np.uint64)[0])


def shaped_noise(shaping: TransferFunction, n: int, rng: np.random.Generator) -> np.ndarray:
    """Unit-variance white Gaussian noise through ``shaping`` (zero initial state)."""
    return shaping(rng.standard_normal(n))


@dataclass
class Simulation:
    """Per-period output plus the internal signals (all trimmed to the kept periods)."""

    y: np.ndarray
    parts: dict[str, np.ndarray] = field(default_factory=dict)


def _as_samples(u0) -> np.ndarray:
    if isinstance(u0, MultisineSignal):
        return u0.samples
    return np.asarray(u0, dtype=np.float64)


def simulate(sys: WhSystem, u0, periods: int, seed, warmup: int = 1, keep_parts: bool = False) -> Simulation:
    """Drive ``sys`` with ``periods + warmup`` repetitions of one input period.

    Parameters
    ----------
    seed : int or SeedSequence
        Root of the noise streams. Process and measurement noise come from
        separate child streams that do not depend on the gains, so two runs
        differing only in a gain share their noise realizations.
    """
    if periods < 1 or warmup < 0:
        raise ValueError("need periods >= 1 and warmup >= 0")
    u_period = _as_samples(u0)
    N = u_period.size
    n = N * (periods + warmup)
    u = np.tile(u_period, periods + warmup)

    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    proc_ss, meas_ss, inoise_ss = ss.spawn(3)
    gp, gm = sys.process_gain, sys.measurement_gain

    x = sys.R(u)
    e_x = np.zeros(n)
    if sys.process is not None:
        e_x = gp * shaped_noise(sys.process.shaping, n, np.random.default_rng(proc_ss))
    e_y = np.zeros(n)
    if sys.measurement is not None:
        e_y = gm * shaped_noise(sys.measurement.shaping, n, np.random.default_rng(meas_ss))

    if sys.location is Location.BEFORE:
        r = eval_nl(sys.f, x + e_x)
        y0 = sys.S(r)
    else:
        r = eval_nl(sys.f, x)
        y0 = sys.S(r + e_x) if sys.location is Location.AFTER else sys.S(r)
    y = y0 + e_y
    check_finite(y, "simulated output")

    keep = slice(warmup * N, None)
    out = Simulation(y[keep].reshape(periods, N))
    if keep_parts:
        u_obs = u
        if sys.input_noise_std > 0:
            u_obs = u + sys.input_noise_std * np.random.default_rng(inoise_ss).standard_normal(n)
        for name, arr in (("u", u_obs), ("x", x), ("e_x", e_x), ("r", r), ("y0", y0), ("e_y", e_y), ("y", y)):
            out.parts[name] = arr[keep]
    return out


def simulate_case1(sys: WhSystem, u0, periods: int, seed, warmup: int = 1, keep_parts: bool = False) -> Simulation:
    if sys.location is not Location.BEFORE:
        raise ValueError("simulate_case1 needs process noise before the nonlinearity")
    return simulate(sys, u0, periods, seed, warmup, keep_parts)


def simulate_case2(sys: WhSystem, u0, periods: int, seed, warmup: int = 1, keep_parts: bool = False) -> Simulation:
    if sys.location is Location.BEFORE:
        raise ValueError("simulate_case2 needs process noise after the nonlinearity or none")
    return simulate(sys, u0, periods, seed, warmup, keep_parts)


def ep_oracle_case1(R: TransferFunction, S: TransferFunction, coeffs, u0, e_x) -> np.ndarray:
    """Output disturbance from process noise entering before a polynomial nonlinearity.

    Expands ``f(x + e_x) - f(x)`` binomially and filters each cross term through
    ``S`` separately, starting from zero states:
    ``sum_{i>=1} sum_{j<i} a_i C(i, j) S{x^j e_x^(i-j)}`` with ``x = R u0``.
    """
    if coeffs is None:
        raise NonPolynomial("the analytic disturbance is defined for polynomial nonlinearities only")
    if isinstance(coeffs, StaticNonlinearity):
        c = polynomial_coefficients(coeffs)
        if c is None:
            raise NonPolynomial(f"{type(coeffs).__name__} has no polynomial expansion")
        coeffs = c
    u0 = _as_samples(u0)
    e_x = np.asarray(e_x, dtype=np.float64)
    x = R(u0)
    ep = np.zeros_like(x)
    for i, a_i in enumerate(coeffs):
        if i == 0 or a_i == 0:
            continue
        for j in range(i):
            ep += a_i * comb(i, j) * S(x**j * e_x ** (i - j))
    return ep


def reference_signal(sys: WhSystem, u0, node: Node) -> np.ndarray:
    """One steady-state period of the noise-free signal at ``node``."""
    sim = simulate(sys.noise_free(), u0, periods=1, seed=0, warmup=1, keep_parts=True)
    key = {Node.X: "x", Node.FX: "r", Node.Y0: "y0"}[Node(node)]
    return sim.parts[key]


def shaped_noise_variance(shaping: TransferFunction, rtol: float = 1e-15) -> float:
    """Stationary variance of unit white noise through ``shaping`` (impulse-response energy)."""
    mags = pole_magnitudes(shaping)
    rho = max(mags) if mags else 0.0
    taps = len(shaping.numerator) + len(shaping.denominator)
    if rho > 0:
        taps += int(math.ceil(math.log(rtol) / math.log(rho)))
    h = shaping.impulse_response(taps)
    return float(np.dot(h, h))


def calibrate_noise_gain(sys: WhSystem, u0, node: Node, snr_db: float,
                         shaping: TransferFunction | None = None) -> float:
    """Gain putting ``gain * shaping(white)`` at ``snr_db`` below the reference node.

    The reference variance comes from one steady-state period of the noise-free
    system; the shaped-noise variance is the filter's impulse-response energy.
    """
    if shaping is None:
        model = sys.measurement if Node(node) is Node.Y0 else sys.process
        shaping = model.shaping if model is not None else IDENTITY
    ref = reference_signal(sys, u0, node)
    var_ref = float(np.var(ref))
    if not var_ref > 0:
        raise ZeroReferenceVariance(f"reference signal at node {Node(node).value!r} has zero variance")
    return math.sqrt(var_ref / (shaped_noise_variance(shaping) * 10 ** (snr_db / 10)))


def calibrate_system(sys: WhSystem, u0) -> WhSystem:
    """Return ``sys`` with both noise gains set from their SNR targets."""
    gp = gm = None
    if sys.process is not None and sys.location is not Location.NONE:
        gp = calibrate_noise_gain(sys, u0, sys.process.node, sys.process.snr_db, sys.process.shaping)
    if sys.measurement is not None:
        gm = calibrate_noise_gain(sys, u0, sys.measurement.node, sys.measurement.snr_db, sys.measurement.shaping)
    return sys.with_gains(gp, gm)


def _experiment(sys, target, grid, A0, P, base_seed, m, max_iter, tol, calibrate):
    u0 = design_nonstationary_multisine(
        target, grid, A0, derive_int_seed(base_seed, m, STREAM_INPUT), max_iter=max_iter, tol=tol
    )
    if calibrate:
        sys = calibrate_system(sys, u0)
    sim = simulate(sys, u0, P, derive_seed(base_seed, m, STREAM_NOISE), warmup=1)
    return u0, sys, sim.y


def run_campaign(
    sys: WhSystem,
    target: EnvelopeTarget,
    grid,
    A0: float,
    N: int,
    M: int,
    P: int,
    base_seed: int,
    fs: float = DEFAULT_FS,
    max_iter: int = 100,
    tol: float = 1e-3,
    calibrate: bool = True,
    threads: int = 1,
) -> CampaignRecord:
    """M independent experiments of P steady-state periods each.

    Every experiment designs its own input phase realization, calibrates the
    noise gains against that input (unless ``calibrate`` is false and the
    gains are already set), simulates P + 1 periods and drops the first.
    Seeds derive from ``(base_seed, m, stream)`` so results do not depend on
    ``threads``.
    """
    if M < 1 or P < 2:
        raise ValueError("need M >= 1 and P >= 2")
    if target.N != N:
        raise ValueError(f"envelope length {target.N} != N = {N}")
    outputs = np.empty((M, P, N))
    inputs = np.empty((M, N))

    def job(m):
        return _experiment(sys, target, grid, A0, P, base_seed, m, max_iter, tol, calibrate)

    if threads == 0:
        import os

        threads = os.cpu_count() or 1
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(job, range(M)))
    else:
        results = [job(m) for m in range(M)]

    experiments = []
    for m, (u0, sys_m, y) in enumerate(results):
        inputs[m] = u0.samples
        outputs[m] = y
        experiments.append({
            "input_seed": u0.seed,
            "iterations": u0.iterations,
            "envelope_error": u0.envelope_error,
            "process_gain": sys_m.process_gain,
            "measurement_gain": sys_m.measurement_gain,
        })
    metadata = {
        "N": N,
        "M": M,
        "P": P,
        "base_seed": int(base_seed),
        "fs": float(fs),
        "location": sys.location.value,
        "grid": [int(k) for k in np.asarray(grid)],
        "A0": float(A0),
        "experiments": experiments,
    }
    return CampaignRecord(inputs, outputs, metadata, envelope=target.rms.copy())


# Subsystems and noise filters of the simulated example.
EXAMPLE_R = make_filter([0.1, 0.2, -0.3], [0.95, -1.4, 0.9])
EXAMPLE_S = make_filter([0.0, 1.0, 0.5], [0.95, -0.9, 0.9])
EXAMPLE_HEX = make_filter([1.0, 1.8], [1.0, -1.4, 0.9])
EXAMPLE_HEY = make_filter([1.0, 2.0, 5.0], [1.0, -0.94, 0.88])


def example_system(f: StaticNonlinearity, location: Location | str) -> WhSystem:
    """The simulated example's plant with the matching noise levels.

    Case I: 26 dB process SNR referenced to x, 20 dB measurement SNR.
    Case II: 20 dB process SNR referenced to f(x), 26 dB measurement SNR.
    No process noise: 26 dB measurement SNR.
    """
    location = Location(location)
    if location is Location.BEFORE:
        process = NoiseModel(EXAMPLE_HEX, 26.0, Node.X)
        measurement = NoiseModel(EXAMPLE_HEY, 20.0, Node.Y0)
    else:
        process = NoiseModel(EXAMPLE_HEX, 20.0, Node.FX) if location is Location.AFTER else None
        measurement = NoiseModel(EXAMPLE_HEY, 26.0, Node.Y0)
    return WhSystem(EXAMPLE_R, EXAMPLE_S, f, location, process, measurement)
