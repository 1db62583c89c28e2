"""Command-line entry point ``whsid``.

Exit status is 0 on success whatever the verdict, 2 for invalid input
(config, manifest, data) and 1 for any other failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import campaign_io
from .config import CampaignConfig, load_config, parse_config
from .errors import WhsidError
from .pipeline import PipelineError, calibrate, design_input, run_pipeline, simulate_campaign
from .structure_detector import Thresholds, detect

log = logging.getLogger("whsid")


def _config(args) -> CampaignConfig:
    cfg = load_config(args.config) if args.config else parse_config({})
    if args.seed is not None:
        cfg.campaign.base_seed = args.seed
    return cfg


def _out(args) -> Path:
    out = Path(args.out or os.environ.get("WHSID_OUT") or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_design_input(args):
    cfg = _config(args)
    u0 = design_input(cfg)
    campaign_io.write_input(u0, _out(args))
    print(f"designed N={u0.N} iterations={u0.iterations} envelope_error={u0.envelope_error:.4g}")


def cmd_simulate(args):
    cfg = _config(args)
    record = simulate_campaign(cfg, args.threads)
    path = campaign_io.write_campaign(record, _out(args))
    print(f"wrote {path}")


def cmd_ingest(args):
    record = campaign_io.ingest_measurements(args.manifest)
    path = campaign_io.write_campaign(record, _out(args))
    M, P, N = record.shape
    print(f"ingested M={M} P={P} N={N}; normalized campaign at {path}")


def cmd_detect(args):
    if args.config:
        cfg = _config(args)
        bins, thresholds = cfg.detector.bins, cfg.detector.thresholds
    else:
        bins, thresholds = 32, Thresholds()
    record = campaign_io.ingest_measurements(args.manifest)
    report, profile = detect(record, None, bins, thresholds)
    out = _out(args)
    campaign_io.write_detection(report, profile, out)
    print(campaign_io.summary_text(report, profile), end="")


def cmd_run(args):
    cfg = _config(args)
    result = run_pipeline(cfg, _out(args), args.threads)
    print(campaign_io.summary_text(result.report, result.profile), end="")


def cmd_calibrate(args):
    cfg = _config(args)
    gains = calibrate(cfg)
    out = _out(args)
    campaign_io.atomic_write_text(out / "calibration.json", campaign_io.dump_json(gains))
    print(json.dumps(gains, sort_keys=True))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="whsid", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True, threads=False):
        if config:
            p.add_argument("--config", type=Path, help="campaign config (JSON)")
            p.add_argument("--seed", type=int, help="override campaign.base_seed")
        p.add_argument("--out", type=Path, help="output directory (default: $WHSID_OUT or .)")
        if threads:
            p.add_argument("--threads", type=int, default=1, help="worker threads, 0 = one per CPU")

    p = sub.add_parser("design-input", help="design one nonstationary multisine period")
    common(p)
    p.set_defaults(func=cmd_design_input)
    p = sub.add_parser("simulate", help="simulate a campaign and write CSVs + manifest")
    common(p, threads=True)
    p.set_defaults(func=cmd_simulate)
    p = sub.add_parser("ingest", help="validate external measurements and normalize them")
    common(p, config=False)
    p.add_argument("--manifest", type=Path, required=True)
    p.set_defaults(func=cmd_ingest)
    p = sub.add_parser("detect", help="variance profile, verdict and signature for a campaign")
    common(p)
    p.add_argument("--manifest", type=Path, required=True)
    p.set_defaults(func=cmd_detect)
    p = sub.add_parser("run", help="full pipeline")
    common(p, threads=True)
    p.set_defaults(func=cmd_run)
    p = sub.add_parser("calibrate", help="report calibrated noise gains")
    common(p)
    p.set_defaults(func=cmd_calibrate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "threads", 1) < 0:
        print("error: --threads must be >= 0", file=sys.stderr)
        return 2
    try:
        args.func(args)
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2 if isinstance(exc.__cause__, WhsidError) else 1
    except WhsidError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
