import argparse
import json

import pytest

from conftest import SMALL_MANIFEST
from richris import __version__, calibration
from richris.cli import EXIT_INVALID, EXIT_OK, main, parse_snr_grid, read_csv


def _write(path, doc):
    path.write_text(json.dumps(doc))
    return str(path)


def test_validate_default(tmp_path, document, capsys):
    assert main(["validate", _write(tmp_path / "s.json", document)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "VALID" in out
    assert "walls 137" in out and "ris 100" in out and "transceivers 10" in out
    assert "cross 12" in out and "circle 13" in out and "square 16" in out


def test_validate_rejects_24_pixels(tmp_path, document, capsys):
    document["ris"]["segments"][2]["pixels"] = 6
    assert main(["validate", _write(tmp_path / "s.json", document)]) == EXIT_INVALID
    assert "25" in capsys.readouterr().out


def test_validate_rejects_self_intersecting_room(tmp_path, document, capsys):
    document["room"]["boundary"] = [[0, 0], [10, 8], [10, 0], [0, 8]]
    assert main(["validate", _write(tmp_path / "s.json", document)]) == EXIT_INVALID
    assert "self-intersecting" in capsys.readouterr().out


def test_validate_reports_json_position(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{\n  "room": [1, 2,\n}\n')
    assert main(["validate", str(bad)]) == EXIT_INVALID
    out = capsys.readouterr().out
    assert "line 3" in out and "column" in out


def test_validate_names_missing_field(tmp_path, document, capsys):
    del document["transceivers"]["ue"]
    assert main(["validate", _write(tmp_path / "s.json", document)]) == EXIT_INVALID
    assert "transceivers" in capsys.readouterr().out


def test_validate_reports_clearance(tmp_path, document, capsys):
    document["trajectory"]["vertices"] = [[2.5, 4.5], [9.6, 4.5]]
    assert main(["validate", _write(tmp_path / "s.json", document)]) == EXIT_INVALID
    assert "clearance" in capsys.readouterr().out


def test_missing_file_is_invalid(tmp_path):
    assert main(["validate", str(tmp_path / "nope.json")]) == EXIT_INVALID


def test_snr_grid_parsing():
    assert parse_snr_grid("-10:30:10") == [-10, 0, 10, 20, 30]
    assert parse_snr_grid("0:1:0.5") == [0, 0.5, 1.0]
    assert parse_snr_grid("5,7") == [5, 7]
    for bad in ("1:0:1", "0:10:0", "a,b", "1:2"):
        with pytest.raises(argparse.ArgumentTypeError):
            parse_snr_grid(bad)


@pytest.fixture(scope="module")
def calibrated(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    manifest = d / "manifest.json"
    manifest.write_text(json.dumps(SMALL_MANIFEST))
    assert main(["calibrate", "--manifest", str(manifest), "--out", str(d / "art")]) == EXIT_OK
    return d


def test_calibrate_writes_artifacts(calibrated):
    art = calibrated / "art"
    assert sorted(p.name for p in art.iterdir()) == sorted(calibration.FILES.values())
    loaded = calibration.load(art)
    report = json.loads((art / "report.json").read_text())
    assert report["all_separated"]
    assert all(e["r1"] > e["tau"] > e["r0"] for e in report["entries"])
    assert set(report["mode_b_validation"]) == {str(k) for k in loaded.bank_b.pairs}
    assert json.loads((art / "manifest.json").read_text())["version"] == __version__


def test_sweep_and_figures(calibrated, capsys):
    art = calibrated / "art"
    out = calibrated / "out"
    rc = main(["sweep", "--artifacts", str(art), "--snr", "-10:10:20", "--episodes", "3", "--symbols", "20",
               "--out", str(out)])
    assert rc == EXIT_OK
    for name in ("ber", "accuracy", "localization", "levels"):
        meta, rows = read_csv(out / f"{name}.csv")
        assert list(meta)[:3] == ["seed", "scenario_hash", "version"]
        assert len(rows) == 2 * 3
    meta, rows = read_csv(out / "accuracy.csv")
    ignorant = [r for r in rows if r["strategy"] == "context_ignorant"]
    assert all(r["shape_accuracy"] == "nan" for r in ignorant)
    rc = main(["figures", "--artifacts", str(art), "--random", "10", "--positions", "3", "--out", str(out)])
    assert rc == EXIT_OK
    _, const = read_csv(out / "constellation.csv")
    assert len(const) == 2 * (10 + 2 + 2)
    _, trace = read_csv(out / "greedy_trace.csv")
    scores = [float(r["score"]) for r in trace]
    assert scores == sorted(scores)
    _, res = read_csv(out / "resolution.csv")
    assert [int(r["n_bins"]) for r in res] == [64, 32, 16, 8, 4, 2]


def test_sweep_rejects_foreign_scenario(calibrated, tmp_path, document, capsys):
    document["room"]["wall"]["chi"] = 0.31
    other = _write(tmp_path / "other.json", document)
    rc = main(["sweep", "--artifacts", str(calibrated / "art"), "--scenario", other, "--episodes", "3",
               "--symbols", "10", "--out", str(tmp_path)])
    assert rc == EXIT_INVALID
    assert "hash" in capsys.readouterr().err


def test_sweep_missing_artifacts(tmp_path):
    assert main(["sweep", "--artifacts", str(tmp_path), "--episodes", "3"]) == EXIT_INVALID


def test_tampered_bank_detected(calibrated, tmp_path):
    import shutil

    art = tmp_path / "art"
    shutil.copytree(calibrated / "art", art)
    doc = json.loads((art / "bank_b.json").read_text())
    doc["scenario_hash"] = "0" * 64
    (art / "bank_b.json").write_text(json.dumps(doc))
    with pytest.raises(calibration.ArtifactError, match="Mode B"):
        calibration.load(art)


def test_unknown_manifest_field_rejected(tmp_path):
    m = tmp_path / "m.json"
    m.write_text(json.dumps({"positions": 3}))
    assert main(["calibrate", "--manifest", str(m), "--out", str(tmp_path / "x")]) == EXIT_INVALID


def test_failed_save_leaves_nothing(small_artifacts, tmp_path, monkeypatch):
    calls = []
    real = calibration._dump

    def flaky(obj, path):
        calls.append(path)
        if len(calls) == 4:
            raise OSError("disk full")
        real(obj, path)

    monkeypatch.setattr(calibration, "_dump", flaky)
    with pytest.raises(OSError):
        calibration.save(small_artifacts, tmp_path / "out")
    assert list((tmp_path / "out").iterdir()) == []


def test_manifest_round_trip():
    m = calibration.Manifest.from_dict(dict(SMALL_MANIFEST))
    assert calibration.Manifest.from_dict(m.to_dict()) == m
    assert m.train_spec("A").snr_range == (-20.0, 40.0)
    assert m.train_spec("B").snr_range == (0.0, 40.0)
    with pytest.raises(calibration.ArtifactError):
        calibration.Manifest.from_dict({"resolution": 0})
