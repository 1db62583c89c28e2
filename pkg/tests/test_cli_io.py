import json
from pathlib import Path

import numpy as np
import pytest

from whsid import campaign_io
from whsid.cli import main
from whsid.config import load_config, parse_config
from whsid.errors import DimensionMismatch, NonFiniteSample, ParseError, TooFewPeriods, ValidationError
from whsid.pipeline import run_pipeline
from whsid.static_nonlinearity import EXAMPLE_POLYNOMIAL
from whsid.structure_detector import Signature, Verdict, variance_profile
from whsid.wh_simulator import EXAMPLE_HEX, EXAMPLE_HEY, EXAMPLE_R, EXAMPLE_S, CampaignRecord, Location, Node

# desk scale, large enough for saturation to dominate mid-period
DESK = {"excitation": {"N": 4096, "A0": 3.0}, "campaign": {"M": 20, "P": 20, "base_seed": 1}}


def desk(**system):
    return {**DESK, "system": system}


def write_measurements(root, M, K, N, discard, rng, nan_at=None):
    files = []
    for m in range(M):
        block = rng.standard_normal((K, N))
        if nan_at is not None and m == nan_at[0]:
            block[nan_at[2] - 1, nan_at[1] - 1] = np.nan
        name = f"out{m}.csv"
        campaign_io.write_columns(root / name, ["t"] + [f"p{k}" for k in range(K)], list(block))
        files.append({"output": name})
    env = np.ones(N)
    campaign_io.write_columns(root / "env.csv", ["t", "rms"], [env])
    manifest = {"N": N, "M": M, "P": K - discard, "discard": discard, "experiments": files, "envelope": "env.csv"}
    path = root / "manifest.json"
    path.write_text(json.dumps(manifest))
    return path


class TestConfig:
    def test_minimal_config_defaults(self):
        cfg = parse_config({"nl": {"type": "polynomial", "coeffs": [0, 0.01, 0.02, -0.008]}, "location": "before"})
        sys = cfg.system
        assert (cfg.excitation.N, cfg.campaign.M, cfg.campaign.P, cfg.campaign.fs) == (16384, 100, 100, 78125.0)
        assert sys.R == EXAMPLE_R and sys.S == EXAMPLE_S
        assert sys.process.shaping == EXAMPLE_HEX and sys.measurement.shaping == EXAMPLE_HEY
        assert (sys.process.snr_db, sys.process.node) == (26.0, Node.X)
        assert (sys.measurement.snr_db, sys.measurement.node) == (20.0, Node.Y0)
        assert sys.f == EXAMPLE_POLYNOMIAL and sys.location is Location.BEFORE
        assert cfg.excitation.resolved_grid().tolist() == list(range(1, 8192))

    def test_case2_defaults(self):
        sys = parse_config({"location": "after"}).system
        assert (sys.process.snr_db, sys.process.node) == (20.0, Node.FX)
        assert sys.measurement.snr_db == 26.0

    def test_empty_grid(self):
        with pytest.raises(ValidationError) as info:
            parse_config({"excitation": {"grid": []}})
        assert info.value.path == "excitation.grid"

    def test_unstable_filter_names_block(self):
        with pytest.raises(ValidationError) as info:
            parse_config({"system": {"S": {"num": [1], "den": [1, -1.5]}}})
        assert info.value.path == "system.S"
        assert "Unstable" in str(info.value)

    @pytest.mark.parametrize("raw,path", [
        ({"excitation": {"N": 63}}, "excitation.N"),
        ({"campaign": {"P": 1}}, "campaign.P"),
        ({"campaign": {"M": 2.5}}, "campaign.M"),
        ({"location": "sideways"}, "system.location"),
        ({"detector": {"bins": 2}}, "detector.bins"),
        ({"excitation": {"grid": [0, 1]}}, "excitation.grid"),
        ({"system": {"process_noise": {"node": "y0"}}}, "system.process_noise.node"),
        ({"system": {"nl": {"type": "cubic"}}}, "system.nl"),
    ])
    def test_validation_paths(self, raw, path):
        with pytest.raises(ValidationError) as info:
            parse_config(raw)
        assert info.value.path == path

    def test_load_config_errors(self, tmp_path):
        with pytest.raises(ParseError):
            load_config(tmp_path / "missing.json")
        bad = tmp_path / "bad.json"
        bad.write_text("{nope")
        with pytest.raises(ParseError):
            load_config(bad)

    def test_resolved_config_round_trips(self):
        cfg = parse_config(desk(location="after", nl={"type": "deadzone", "lo": -1, "hi": 1}))
        again = parse_config(cfg.to_dict())
        assert again.to_dict() == cfg.to_dict()


class TestIngest:
    def test_discard_one(self, tmp_path):
        path = write_measurements(tmp_path, 32, 33, 2048, 1, np.random.default_rng(0))
        rec = campaign_io.ingest_measurements(path)
        assert rec.shape == (32, 32, 2048)
        _, block = campaign_io.read_columns(tmp_path / "out5.csv")
        np.testing.assert_array_equal(rec.outputs[5], block[:, 1:].T)

    def test_nan_location(self, tmp_path):
        path = write_measurements(tmp_path, 3, 4, 64, 0, np.random.default_rng(1), nan_at=(1, 17, 3))
        with pytest.raises(NonFiniteSample) as info:
            campaign_io.ingest_measurements(path)
        assert info.value.location == ("out1.csv", 17, 3)

    def test_one_period_rejected_downstream(self, tmp_path):
        path = write_measurements(tmp_path, 2, 2, 64, 1, np.random.default_rng(2))
        rec = campaign_io.ingest_measurements(path)
        with pytest.raises(TooFewPeriods):
            variance_profile(rec)

    def test_dimension_mismatch(self, tmp_path):
        path = write_measurements(tmp_path, 2, 3, 64, 0, np.random.default_rng(3))
        manifest = json.loads(path.read_text())
        manifest["N"] = 65
        path.write_text(json.dumps(manifest))
        with pytest.raises(DimensionMismatch):
            campaign_io.ingest_measurements(path)

    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(4)
        rec = CampaignRecord(rng.normal(size=(2, 64)), rng.normal(size=(2, 3, 64)) * 1e-7,
                             {"fs": 1000.0, "note": "x"}, envelope=rng.uniform(0.5, 1, 64))
        path = campaign_io.write_campaign(rec, tmp_path)
        back = campaign_io.ingest_measurements(path)
        assert back.outputs.tobytes() == rec.outputs.tobytes()
        assert back.inputs.tobytes() == rec.inputs.tobytes()
        assert back.envelope.tobytes() == rec.envelope.tobytes()
        assert back.metadata["note"] == "x"

    def test_seventeen_digits_on_disk(self, tmp_path):
        campaign_io.write_columns(tmp_path / "a.csv", ["t", "v"], [np.array([1 / 3])])
        assert (tmp_path / "a.csv").read_text().splitlines()[1] == "1,0.33333333333333331"


class TestPipeline:
    def test_case1_saturation(self, tmp_path):
        cfg = parse_config(desk(location="before", nl={"type": "saturation", "lo": -3, "hi": 3}))
        res = run_pipeline(cfg, tmp_path)
        assert res.report.verdict is Verdict.BEFORE
        assert res.report.signature is Signature.SATURATION
        for name in ("report.json", "profile.csv", "bins.csv", "summary.txt", "config.resolved.json", "campaign/campaign.json"):
            assert (tmp_path / name).exists()

    def test_case2(self, tmp_path):
        res = run_pipeline(parse_config(desk(location="after", nl={"type": "saturation", "lo": -3, "hi": 3})), tmp_path)
        assert res.report.verdict is Verdict.AFTER_OR_ABSENT
        assert res.report.signature is Signature.NOT_APPLICABLE

    def test_byte_identical_reports(self, tmp_path):
        raw = {**desk(location="before"), "campaign": {"M": 4, "P": 4, "base_seed": 9}, "excitation": {"N": 1024}}
        run_pipeline(parse_config(raw), tmp_path / "a")
        run_pipeline(parse_config(raw), tmp_path / "b", threads=2)
        assert (tmp_path / "a/report.json").read_bytes() == (tmp_path / "b/report.json").read_bytes()

    def test_ingested_data_path(self, tmp_path):
        manifest = write_measurements(tmp_path, 3, 5, 1024, 1, np.random.default_rng(5))
        cfg = parse_config({"excitation": {"N": 1024}, "data": {"manifest": str(manifest)}})
        res = run_pipeline(cfg, tmp_path / "out")
        assert res.record.shape == (3, 4, 1024)
        assert not (tmp_path / "out/campaign").exists()


class TestCli:
    @pytest.fixture
    def small_config(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"location": "before", "excitation": {"N": 512}, "campaign": {"M": 2, "P": 3}}))
        return path

    def test_design_input(self, tmp_path, small_config):
        assert main(["design-input", "--config", str(small_config), "--out", str(tmp_path / "d")]) == 0
        side = json.loads((tmp_path / "d/input.json").read_text())
        assert side["N"] == 512 and len(side["grid"]) == 255

    def test_simulate_detect_ingest(self, tmp_path, small_config, capsys):
        assert main(["simulate", "--config", str(small_config), "--out", str(tmp_path / "s"), "--seed", "3"]) == 0
        manifest = tmp_path / "s/campaign.json"
        assert json.loads(manifest.read_text())["metadata"]["base_seed"] == 3
        assert main(["detect", "--manifest", str(manifest), "--out", str(tmp_path / "det")]) == 0
        assert "verdict:" in capsys.readouterr().out
        assert main(["ingest", "--manifest", str(manifest), "--out", str(tmp_path / "norm")]) == 0
        assert (tmp_path / "norm/output_2.csv").read_bytes() == (tmp_path / "s/output_2.csv").read_bytes()

    def test_run_uses_env_out(self, tmp_path, small_config, monkeypatch):
        monkeypatch.setenv("WHSID_OUT", str(tmp_path / "env"))
        assert main(["run", "--config", str(small_config), "--threads", "2"]) == 0
        assert (tmp_path / "env/report.json").exists()

    def test_calibrate(self, tmp_path, small_config, capsys):
        assert main(["calibrate", "--config", str(small_config), "--out", str(tmp_path)]) == 0
        gains = json.loads(capsys.readouterr().out)
        assert gains["process_gain"] > 0 and gains["measurement_snr_db"] == 20.0

    def test_invalid_input_exit_code(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"excitation": {"grid": []}}))
        assert main(["run", "--config", str(bad), "--out", str(tmp_path)]) == 2
        assert "excitation.grid" in capsys.readouterr().err
        assert main(["detect", "--manifest", str(tmp_path / "none.json"), "--out", str(tmp_path)]) == 2
        assert main(["run", "--threads", "-1"]) == 2


@pytest.mark.parametrize("path", sorted((Path(__file__).parents[1] / "configs").glob("*.json")),
                         ids=lambda p: p.name)
def test_shipped_configs_parse(path):
    cfg = load_config(path)
    assert cfg.excitation.N % 2 == 0
