import base64
import csv
import json
import subprocess
import sys
import zlib

import numpy as np
import pytest

from sigl import cli
from sigl.errors import ModelFormatError
from sigl.estimator import SiglConfig, load_model, sample_estimate, save_result, sigl_estimate
from sigl.experiments import RESULT_FIELDS
from sigl.graphons import Constant, Synthetic, discretize, read_edge_list, sample_graph
from sigl.heatmap import gray_levels, heatmap_svg, png_bytes
from sigl.mixup import sampling_plan

HEADER = "method,graphon_id,trial,n_max,offset,gw_error,wall_time_seconds,tau,eps_tr"
FAST = ["--epochs-step1", "2", "--epochs-step3", "2", "--resolution", "300", "--no-models"]


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _run(argv, out):
    return cli.main(argv + ["--out", str(out)])


def test_header_and_row_count(tmp_path):
    assert _run(["estimate", "--graphon", "4", "--trials", "2", "--methods", "sas,usvt"] + FAST, tmp_path) == 0
    lines = (tmp_path / "results.csv").read_text().splitlines()
    assert lines[0] == HEADER == ",".join(RESULT_FIELDS)
    rows = _rows(tmp_path / "results.csv")
    assert [r["method"] for r in rows] == ["sas", "sas", "usvt", "usvt"]
    assert all(float(r["gw_error"]) >= 0 and r["wall_time_seconds"] == "" and r["tau"] == "" for r in rows)
    timings = _rows(tmp_path / "timings.csv")
    assert len(timings) == 4 and all(float(t["wall_time_seconds"]) > 0 for t in timings)
    assert "command=estimate" in (tmp_path / "run.log").read_text()


def test_defaults():
    args = cli.build_parser().parse_args(["estimate", "--graphon", "4"])
    assert args.trials == 10 and args.resolution == 1000 and args.methods == ["sigl", "sas", "usvt"]
    assert cli.build_parser().parse_args(["sweep", "--graphon", "4"]).offsets == [0, 175, 325, 575, 825, 2000]


def test_sigl_row_fields_and_inline_timings(tmp_path):
    assert _run(["estimate", "--graphon", "4", "--trials", "1", "--methods", "sigl", "--timings", "csv"] + FAST,
                tmp_path) == 0
    (row,) = _rows(tmp_path / "results.csv")
    assert row["n_max"] == "300" and row["offset"] == "0"
    assert float(row["wall_time_seconds"]) > 0 and 0 <= float(row["tau"]) <= 1 and float(row["eps_tr"]) >= 0


def test_sweep_doubles_rows(tmp_path):
    argv = ["sweep", "--graphon", "2", "--trials", "1", "--methods", "sas", "--offsets", "0,25"] + FAST
    assert _run(argv, tmp_path) == 0
    rows = _rows(tmp_path / "results.csv")
    assert [(r["offset"], r["n_max"]) for r in rows] == [("0", "300"), ("25", "325")]


def test_ablate_schema(tmp_path):
    a, b = tmp_path / "g", tmp_path / "w"
    assert _run(["ablate", "--graphon", "12", "--trials", "1", "--methods", "sas", "--values", "3"] + FAST, a) == 0
    assert _run(["ablate", "--graphon", "12", "--trials", "1", "--methods", "sas", "--axis", "window",
                 "--values", "3,5"] + FAST, b) == 0
    ga, gb = _rows(a / "results.csv"), _rows(b / "results.csv")
    assert (a / "results.csv").read_text().splitlines()[0] == (b / "results.csv").read_text().splitlines()[0]
    assert ga[0]["method"] == "sas@graphs=3" and np.isfinite(float(ga[0]["gw_error"]))
    assert ga[0]["n_max"] == "125"
    assert [r["method"] for r in gb] == ["sas@window=3", "sas@window=5"]


def test_invalid_graphon_is_usage_error(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "sigl.cli", "estimate", "--graphon", "99", "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 2 and "unknown graphon id 99" in proc.stderr


def test_config_file_with_cli_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"graphon": 7, "methods": "sas", "trials": 3, "resolution": 300,
                               "no_models": True, "epochs-step1": 2}))
    assert cli.main(["estimate", "--config", str(cfg), "--trials", "1", "--out", str(tmp_path / "o")]) == 0
    rows = _rows(tmp_path / "o" / "results.csv")
    assert len(rows) == 1 and rows[0]["graphon_id"] == "7" and rows[0]["method"] == "sas"
    cfg.write_text(json.dumps({"colour": "blue"}))
    with pytest.raises(SystemExit) as exc:
        cli.main(["estimate", "--graphon", "4", "--config", str(cfg)])
    assert exc.value.code == 2


def test_failed_trial_reported(tmp_path, monkeypatch, capsys):
    real = cli.run_trial

    def flaky(spec, trial, *args, **kwargs):
        if trial == 1:
            raise RuntimeError("boom")
        return real(spec, trial, *args, **kwargs)

    monkeypatch.setattr(cli, "run_trial", flaky)
    assert _run(["estimate", "--graphon", "4", "--trials", "3", "--methods", "sas"] + FAST, tmp_path) == 1
    err = capsys.readouterr().err
    assert "failed trials: 1" in err and "boom" in err
    assert [r["trial"] for r in _rows(tmp_path / "results.csv")] == ["0", "2"]


def test_models_and_heatmaps_written(tmp_path):
    argv = ["estimate", "--graphon", "4", "--trials", "1", "--methods", "sigl,usvt", "--epochs-step1", "2",
            "--epochs-step3", "2", "--resolution", "300"]
    assert _run(argv, tmp_path) == 0
    assert (tmp_path / "true_graphon.svg").read_text().startswith("<svg")
    sdir = tmp_path / "models" / "sigl_trial00"
    inr, _ = load_model(sdir)
    assert sample_estimate(inr, 20).values.shape == (20, 20)
    assert (sdir / "estimate.svg").exists() and (tmp_path / "models" / "usvt_trial00" / "usvt.csv").exists()


def test_mixup_lambda_zero_matches_right(tmp_path):
    argv = ["mixup", "--left", "4", "--right", "12", "--lambda", "0", "--count", "4", "--sizes", "20,60",
            "--seed", "9"]
    assert _run(argv, tmp_path) == 0
    for i, (n, s) in enumerate(sampling_plan(4, (20, 60), 9)):
        got = read_edge_list(tmp_path / "graphs" / f"graph_{i:04d}.txt")
        assert np.array_equal(got.adjacency, sample_graph(Synthetic(12), n, s).adjacency)
    labels = _rows(tmp_path / "graphs" / "labels.csv")
    assert [(r["y0"], r["y1"]) for r in labels] == [("0.0", "1.0")] * 4
    assert len(_rows(tmp_path / "results.csv")) == 4


def test_mixup_lambda_range_and_saved_inr(tmp_path):
    res = sigl_estimate([sample_graph(Synthetic(4), n, n) for n in (30, 40)], SiglConfig(epochs_step1=2,
                                                                                       epochs_step3=2))
    save_result(res, tmp_path / "m")
    argv = ["mixup", "--left", str(tmp_path / "m" / "inr.json"), "--right", "2", "--lambda", "0.1,0.2",
            "--count", "2", "--sizes", "20,30"]
    assert _run(argv, tmp_path / "o") == 0
    gid = _rows(tmp_path / "o" / "results.csv")[0]["graphon_id"]
    lam = float(gid.rsplit("@", 1)[1])
    assert gid.startswith("inr.json+2@") and 0.1 <= lam <= 0.2


def test_eval_command(tmp_path, capsys):
    g = discretize(Synthetic(5), 25).values
    np.savetxt(tmp_path / "a.csv", g, delimiter=",", fmt="%.17g")
    np.savetxt(tmp_path / "b.csv", g[::-1, ::-1], delimiter=",", fmt="%.17g")
    assert cli.main(["eval", str(tmp_path / "a.csv"), str(tmp_path / "b.csv")]) == 0
    assert float(capsys.readouterr().out) < 1e-6
    (tmp_path / "c.csv").write_text("0.1,0.2\n")
    assert cli.main(["eval", str(tmp_path / "a.csv"), str(tmp_path / "c.csv")]) == 2


def test_model_round_trip(tmp_path):
    res = sigl_estimate([sample_graph(Synthetic(1), n, n) for n in (30, 40)],
                        SiglConfig(epochs_step1=2, epochs_step3=2))
    save_result(res, tmp_path)
    inr, sorter = load_model(tmp_path)
    assert np.array_equal(sample_estimate(inr, 100).values, sample_estimate(res.inr, 100).values)
    for name in ("inr.json", "sorter.json"):
        assert "schema_version" in json.loads((tmp_path / name).read_text())
    (tmp_path / "inr.json").write_text('{"schema_version": 1, "kind": "siren_inr", "weights": [')
    with pytest.raises(ModelFormatError):
        load_model(tmp_path)


def _decode_png(data):
    assert data[:8] == b"\x89PNG\r\n\x1a\n"
    pos, idat, width = 8, b"", None
    while pos < len(data):
        length = int.from_bytes(data[pos:pos + 4], "big")
        tag = data[pos + 4:pos + 8]
        body = data[pos + 8:pos + 8 + length]
        if tag == b"IHDR":
            width, height = int.from_bytes(body[:4], "big"), int.from_bytes(body[4:8], "big")
        elif tag == b"IDAT":
            idat += body
        pos += 12 + length
    raw = zlib.decompress(idat)
    rows = [raw[r * (width + 1) + 1:(r + 1) * (width + 1)] for r in range(height)]
    return np.array([list(r) for r in rows])


def test_heatmap_constant_is_mid_gray():
    px = _decode_png(png_bytes(discretize(Constant(0.5), 30).values))
    assert px.shape == (30, 30) and np.all(px == 128)
    assert list(gray_levels([0.0, 1.0, 1.5, -1])) == [255, 0, 0, 255]
    svg = heatmap_svg(np.eye(3), "a<b")
    uri = svg.split('href="data:image/png;base64,')[1].split('"')[0]
    assert np.array_equal(_decode_png(base64.b64decode(uri)), 255 * (1 - np.eye(3)))
    assert "a&lt;b" in svg
