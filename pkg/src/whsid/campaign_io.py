"""On-disk formats: per-experiment CSVs plus a JSON manifest.

Layout of a campaign directory::

    campaign.json        manifest, written last (atomic rename)
    input_<m>.csv        t,u0               (one input period, m = 1..M)
    output_<m>.csv       t,period_1..period_K
    envelope.csv         t,rms              (optional design target)

``K = P + discard``; ingestion drops the first ``discard`` periods.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, NonFiniteSample, ParseError
from .wh_simulator import DEFAULT_FS, CampaignRecord

FORMAT = "whsid-campaign/1"
FLOAT_FMT = "%.17g"


def atomic_write_text(path: Path, text: str) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def write_columns(path: Path, header: list[str], columns: list[np.ndarray]) -> None:
    """CSV with an integer ``t`` column (1-based sample index) followed by ``columns``."""
    n = len(columns[0])
    data = np.column_stack([np.arange(1, n + 1)] + [np.asarray(c, dtype=np.float64) for c in columns])
    fmt = ["%d"] + [FLOAT_FMT] * len(columns)
    np.savetxt(path, data, delimiter=",", header=",".join(header), comments="", fmt=fmt)


def read_columns(path: Path) -> tuple[list[str], np.ndarray]:
    """Return the header names and the numeric block (``t`` column stripped)."""
    path = Path(path)
    try:
        with path.open() as fh:
            header = fh.readline().strip().split(",")
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
    except FileNotFoundError:
        raise ParseError(f"{path} not found") from None
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from None
    if header[0] != "t":
        raise ParseError(f"{path}: first column must be 't'")
    return header[1:], data[:, 1:]


def write_input(u0, out_dir: Path, name: str = "input") -> None:
    """One designed period as ``<name>.csv`` plus a JSON sidecar."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_columns(out_dir / f"{name}.csv", ["t", "u0"], [u0.samples])
    atomic_write_text(out_dir / f"{name}.json", dump_json(u0.sidecar()))


def write_campaign(record: CampaignRecord, out_dir: Path) -> Path:
    """Persist ``record``; returns the manifest path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    M, P, N = record.shape
    files = []
    for m in range(M):
        inp, outp = f"input_{m + 1}.csv", f"output_{m + 1}.csv"
        write_columns(out_dir / inp, ["t", "u0"], [record.inputs[m]])
        write_columns(out_dir / outp, ["t"] + [f"period_{p + 1}" for p in range(P)], list(record.outputs[m]))
        files.append({"input": inp, "output": outp})
    manifest = {
        "format": FORMAT,
        "N": N,
        "M": M,
        "P": P,
        "discard": 0,
        "fs": float(record.metadata.get("fs", DEFAULT_FS)),
        "experiments": files,
        "metadata": record.metadata,
    }
    if record.envelope is not None:
        write_columns(out_dir / "envelope.csv", ["t", "rms"], [record.envelope])
        manifest["envelope"] = "envelope.csv"
    path = out_dir / "campaign.json"
    atomic_write_text(path, dump_json(manifest))
    return path


def _require(manifest: dict, key: str, kind=int):
    if key not in manifest:
        raise ParseError(f"manifest is missing {key!r}")
    try:
        return kind(manifest[key])
    except (TypeError, ValueError):
        raise ParseError(f"manifest field {key!r} is not {kind.__name__}") from None


def ingest_measurements(manifest_path) -> CampaignRecord:
    """Assemble a record from a manifest and its period-synchronized CSV files.

    Each output CSV must hold ``N`` rows and ``P + discard`` period columns; the
    first ``discard`` periods are dropped. A manifest may declare ``P`` as the
    number of kept periods. ``P`` of 1 after discarding is accepted here and
    rejected later by the variance estimator.

    Raises
    ------
    DimensionMismatch
        If a file's shape disagrees with the manifest.
    NonFiniteSample
        On the first NaN/Inf, with ``location = (file, row, column)``.
    """
    manifest_path = Path(manifest_path)
    try:
        manifest = json.loads(manifest_path.read_text())
    except FileNotFoundError:
        raise ParseError(f"manifest {manifest_path} not found") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"{manifest_path}: {exc}") from None
    base = manifest_path.parent
    N, M, P = _require(manifest, "N"), _require(manifest, "M"), _require(manifest, "P")
    discard = int(manifest.get("discard", 0))
    fs = float(manifest.get("fs", DEFAULT_FS))
    experiments = manifest.get("experiments")
    if not isinstance(experiments, list) or len(experiments) != M:
        raise DimensionMismatch(f"manifest lists {0 if experiments is None else len(experiments)} experiments, expected M={M}")
    if discard < 0 or P < 1:
        raise DimensionMismatch("need P >= 1 kept periods and discard >= 0")

    outputs = np.empty((M, P, N))
    inputs = np.zeros((M, N))
    have_inputs = True
    for m, entry in enumerate(experiments):
        name = entry["output"] if isinstance(entry, dict) else entry
        _, block = read_columns(base / name)
        if block.shape != (N, P + discard):
            raise DimensionMismatch(f"{name}: shape {block.shape}, expected ({N}, {P + discard})")
        bad = ~np.isfinite(block)
        if bad.any():
            row, col = (int(i) for i in np.argwhere(bad)[0])
            raise NonFiniteSample(f"{name}: non-finite sample at t={row + 1}, column {col + 1}", location=(name, row + 1, col + 1))
        outputs[m] = block[:, discard:].T
        inp = entry.get("input") if isinstance(entry, dict) else None
        if inp is None:
            have_inputs = False
            continue
        _, ublock = read_columns(base / inp)
        if ublock.shape[0] != N:
            raise DimensionMismatch(f"{inp}: {ublock.shape[0]} rows, expected {N}")
        if not np.all(np.isfinite(ublock[:, 0])):
            raise NonFiniteSample(f"{inp}: non-finite input sample", location=(inp,))
        inputs[m] = ublock[:, 0]

    envelope = None
    if manifest.get("envelope"):
        _, eblock = read_columns(base / manifest["envelope"])
        if eblock.shape[0] != N:
            raise DimensionMismatch(f"envelope has {eblock.shape[0]} rows, expected {N}")
        envelope = eblock[:, 0].copy()
    if not have_inputs and envelope is None:
        raise ParseError("need input files or an envelope file to analyse the campaign")

    metadata = dict(manifest.get("metadata") or {})
    metadata.setdefault("N", N)
    metadata.setdefault("M", M)
    metadata.setdefault("P", P)
    metadata.setdefault("fs", fs)
    metadata["source"] = str(manifest_path)
    metadata["discarded_periods"] = discard
    return CampaignRecord(inputs, outputs, metadata, envelope=envelope)


def write_detection(report, profile, out_dir: Path) -> None:
    """``profile.csv``, ``bins.csv``, ``report.json`` and ``summary.txt``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_columns(out_dir / "profile.csv", ["t", "sigma2_e"], [profile.sigma2])
    b = report.bins
    data = np.column_stack([np.arange(1, b.B + 1), b.edges[:-1] + 1, b.edges[1:], b.sigma2, b.envelope2])
    np.savetxt(out_dir / "bins.csv", data, delimiter=",", comments="",
               header="bin,t_start,t_stop,sigma2_e,envelope2", fmt=["%d", "%d", "%d", FLOAT_FMT, FLOAT_FMT])
    body = report.to_dict()
    body["dof_per_sample"] = profile.dof
    atomic_write_text(out_dir / "report.json", dump_json(body))
    atomic_write_text(out_dir / "summary.txt", summary_text(report, profile))


def summary_text(report, profile) -> str:
    rho = "undefined" if report.rho is None else f"{report.rho:+.3f}"
    t = report.thresholds
    return (
        f"verdict:    {report.verdict.value}\n"
        f"signature:  {report.signature.value}\n"
        f"rho:        {rho} (threshold {t.rho_min})\n"
        f"ratio:      {report.ratio:.3f} (threshold {t.ratio_min})\n"
        f"mean var:   {report.mean_sigma2:.6g}\n"
        f"bins:       {report.bins.B}, dof per sample {profile.dof}\n"
    )
