"""Command line tests: artifacts, exit codes, deterministic reruns."""

import json
import socket

import numpy as np
import pytest

from conftest import DEFAULT_WORLDFILE, write_png, write_worldfile
from boundline import geojson_io
from boundline.cli import main
from boundline.geometry import Polyline
from boundline.vectornet import build_network, clean_topology


def run_cli(argv):
    try:
        return main(argv)
    except SystemExit as exc:  # argparse usage errors
        return exc.code


def fields_image(tmp_path, size=48, name="fields"):
    pixels = np.zeros((size, size, 3), dtype=np.uint8)
    pixels[:, :size // 2] = (70, 140, 60)
    pixels[:, size // 2:] = (170, 120, 60)
    png = tmp_path / f"{name}.png"
    write_png(png, pixels)
    write_worldfile(tmp_path / f"{name}.pgw", DEFAULT_WORLDFILE)
    return png


def constant_image(tmp_path, size=32):
    pixels = np.full((size, size, 3), 90, dtype=np.uint8)
    png = tmp_path / "flat.png"
    write_png(png, pixels)
    write_worldfile(tmp_path / "flat.pgw", DEFAULT_WORLDFILE)
    return png


def line_fc(*coord_lists):
    return {"type": "FeatureCollection", "features": [
        {"type": "Feature", "properties": {},
         "geometry": {"type": "LineString", "coordinates": coords}}
        for coords in coord_lists
    ]}


def write_fc(path, doc):
    path.write_text(json.dumps(doc), encoding="utf-8")
    return path


def read_csv_rows(path):
    lines = path.read_text().strip().splitlines()
    return [line.split(",") for line in lines[1:]]


class TestContours:
    def test_writes_probability_binary_and_outlines(self, tmp_path):
        png = fields_image(tmp_path)
        out = tmp_path / "out"
        code = run_cli(["contours", str(png), "-o", str(out),
                        "--no-spectral", "--threshold", "0.2"])
        assert code == 0
        for name in ("gpb.png", "gpb.pgw", "binary.png", "binary.pgw",
                     "outlines.geojson"):
            assert (out / name).exists(), name
        doc = geojson_io.load(out / "outlines.geojson")
        assert doc["type"] == "FeatureCollection"
        assert len(doc["features"]) >= 1
        xs = [x for f in doc["features"]
              for x, _ in f["geometry"]["coordinates"]]
        split_x = 100.0 + 24 * 0.05
        assert min(abs(x - split_x) for x in xs) < 0.15

    def test_constant_image_gives_empty_outlines(self, tmp_path):
        png = constant_image(tmp_path)
        out = tmp_path / "out"
        code = run_cli(["contours", str(png), "-o", str(out)])
        assert code == 0
        doc = geojson_io.load(out / "outlines.geojson")
        assert doc["features"] == []

    def test_missing_worldfile_exit_2(self, tmp_path):
        pixels = np.zeros((8, 8, 3), dtype=np.uint8)
        png = tmp_path / "orphan.png"
        write_png(png, pixels)
        assert run_cli(["contours", str(png),
                        "-o", str(tmp_path / "out")]) == 2

    def test_missing_image_exit_2(self, tmp_path):
        assert run_cli(["contours", str(tmp_path / "no.png"),
                        "-o", str(tmp_path / "out")]) == 2

    def test_bad_threshold_exit_3(self, tmp_path):
        png = fields_image(tmp_path)
        assert run_cli(["contours", str(png), "-o", str(tmp_path / "out"),
                        "--threshold", "1.5"]) == 3

    def test_reruns_byte_identical(self, tmp_path):
        png = fields_image(tmp_path)
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert run_cli(["contours", str(png), "-o", str(out_a),
                        "--no-spectral"]) == 0
        assert run_cli(["contours", str(png), "-o", str(out_b),
                        "--no-spectral"]) == 0
        for name in ("gpb.png", "binary.png", "outlines.geojson"):
            assert (out_a / name).read_bytes() == \
                (out_b / name).read_bytes(), name


class TestSlic:
    def test_writes_labels_and_outlines(self, tmp_path):
        png = fields_image(tmp_path)
        out = tmp_path / "out"
        code = run_cli(["slic", str(png), "-o", str(out),
                        "--region-size", "12"])
        assert code == 0
        assert (out / "labels.png").exists()
        assert (out / "labels.pgw").exists()
        doc = geojson_io.load(out / "outlines.geojson")
        assert len(doc["features"]) >= 1

    def test_region_size_too_large_exit_3(self, tmp_path):
        png = fields_image(tmp_path, size=32)
        assert run_cli(["slic", str(png), "-o", str(tmp_path / "out"),
                        "--region-size", "32"]) == 3

    def test_region_size_and_target_count_conflict(self, tmp_path):
        png = fields_image(tmp_path)
        assert run_cli(["slic", str(png), "-o", str(tmp_path / "out"),
                        "--region-size", "8",
                        "--target-count", "9"]) == 3

    def test_reruns_byte_identical(self, tmp_path):
        png = fields_image(tmp_path)
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        for out in (out_a, out_b):
            assert run_cli(["slic", str(png), "-o", str(out),
                            "--region-size", "12"]) == 0
        for name in ("labels.png", "outlines.geojson"):
            assert (out_a / name).read_bytes() == \
                (out_b / name).read_bytes(), name


class TestCombine:
    def test_radius_zero_identical_layers_is_cleaned_input(self, tmp_path):
        coords = ([[0.0, 0.0], [10.0, 0.0]],
                  [[10.0, 0.0], [10.0, 8.0]],
                  [[0.0, 0.0], [0.0, 8.0], [10.0, 8.0]])
        layer = write_fc(tmp_path / "layer.geojson", line_fc(*coords))
        out = tmp_path / "network.geojson"
        code = run_cli(["combine", "--slic", str(layer), "--gpb", str(layer),
                        "--radius", "0", "-o", str(out)])
        assert code == 0
        expected = build_network(clean_topology(
            [Polyline(np.asarray(c)) for c in coords]))
        assert geojson_io.load(out) == \
            geojson_io.network_to_feature_collection(expected)

    def test_disjoint_layers_give_empty_network_and_warning(self, tmp_path,
                                                            capsys):
        slic = write_fc(tmp_path / "slic.geojson",
                        line_fc([[0.0, 0.0], [10.0, 0.0]]))
        gpb = write_fc(tmp_path / "gpb.geojson",
                       line_fc([[1000.0, 0.0], [1010.0, 0.0]]))
        out = tmp_path / "network.geojson"
        code = run_cli(["combine", "--slic", str(slic), "--gpb", str(gpb),
                        "--radius", "5", "-o", str(out)])
        assert code == 0
        doc = geojson_io.load(out)
        assert doc["features"] == []
        assert "empty" in capsys.readouterr().err

    def test_nearby_kept_faraway_dropped(self, tmp_path):
        slic = write_fc(tmp_path / "slic.geojson",
                        line_fc([[0.0, 3.0], [10.0, 3.0]],
                                [[0.0, 50.0], [10.0, 50.0]]))
        gpb = write_fc(tmp_path / "gpb.geojson",
                       line_fc([[0.0, 0.0], [10.0, 0.0]]))
        out = tmp_path / "network.geojson"
        assert run_cli(["combine", "--slic", str(slic), "--gpb", str(gpb),
                        "--radius", "5", "-o", str(out)]) == 0
        doc = geojson_io.load(out)
        lines = [f for f in doc["features"]
                 if f["geometry"]["type"] == "LineString"]
        assert len(lines) == 1
        ys = {y for _, y in lines[0]["geometry"]["coordinates"]}
        assert ys == {3.0}

    def test_missing_input_exit_2(self, tmp_path):
        gpb = write_fc(tmp_path / "gpb.geojson",
                       line_fc([[0.0, 0.0], [1.0, 0.0]]))
        assert run_cli(["combine", "--slic", str(tmp_path / "no.geojson"),
                        "--gpb", str(gpb),
                        "-o", str(tmp_path / "out.geojson")]) == 2


class TestAssess:
    def test_identical_layers_all_in_first_band(self, tmp_path, capsys):
        layer = write_fc(tmp_path / "layer.geojson",
                         line_fc([[0.0, 0.0], [10.0, 0.0]]))
        out = tmp_path / "report.csv"
        code = run_cli(["assess", "--delineated", str(layer),
                        "--reference", str(layer),
                        "--gsd", "0.05", "-o", str(out)])
        assert code == 0
        rows = read_csv_rows(out)
        assert rows[0][:2] == ["0.0", "0.2"]
        assert float(rows[0][3]) == 100.0
        assert "100.0% within 0.0-0.2 m" in capsys.readouterr().out

    def test_offset_lands_in_matching_band(self, tmp_path):
        delineated = write_fc(tmp_path / "del.geojson",
                              line_fc([[0.0, 0.5], [10.0, 0.5]]))
        reference = write_fc(tmp_path / "ref.geojson",
                             line_fc([[0.0, 0.0], [10.0, 0.0]]))
        out = tmp_path / "report.csv"
        assert run_cli(["assess", "--delineated", str(delineated),
                        "--reference", str(reference),
                        "--gsd", "0.05", "-o", str(out)]) == 0
        rows = read_csv_rows(out)
        assert rows[2][:2] == ["0.41", "0.6"]
        assert float(rows[2][3]) == 100.0
        assert all(float(r[3]) == 0.0 for i, r in enumerate(rows[:-1])
                   if i != 2)

    def test_empty_delineated_zero_tp(self, tmp_path):
        delineated = write_fc(tmp_path / "del.geojson", line_fc())
        reference = write_fc(tmp_path / "ref.geojson",
                             line_fc([[0.0, 0.0], [10.0, 0.0]]))
        out = tmp_path / "report.csv"
        assert run_cli(["assess", "--delineated", str(delineated),
                        "--reference", str(reference),
                        "--gsd", "0.05", "-o", str(out)]) == 0
        rows = read_csv_rows(out)
        assert all(int(r[2]) == 0 for r in rows)
        report = json.loads(out.with_suffix(".json").read_text())
        assert report["total_tp"] == 0

    def test_renders_histogram_next_to_csv(self, tmp_path):
        layer = write_fc(tmp_path / "layer.geojson",
                         line_fc([[0.0, 0.0], [10.0, 0.0]]))
        out = tmp_path / "report.csv"
        assert run_cli(["assess", "--delineated", str(layer),
                        "--reference", str(layer),
                        "--gsd", "0.05", "-o", str(out)]) == 0
        png = out.with_suffix(".png")
        assert png.exists()
        assert png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
        assert out.with_suffix(".json").exists()
        assert out.with_suffix(".txt").exists()

    def test_custom_bands(self, tmp_path):
        layer = write_fc(tmp_path / "layer.geojson",
                         line_fc([[0.0, 0.0], [10.0, 0.0]]))
        out = tmp_path / "report.csv"
        assert run_cli(["assess", "--delineated", str(layer),
                        "--reference", str(layer), "--gsd", "0.05",
                        "--bands", "0,0.1,0.3", "-o", str(out)]) == 0
        rows = read_csv_rows(out)
        assert [r[:2] for r in rows[:-1]] == [["0.0", "0.1"],
                                              ["0.11", "0.3"]]

    def test_bad_gsd_exit_3(self, tmp_path):
        layer = write_fc(tmp_path / "layer.geojson",
                         line_fc([[0.0, 0.0], [10.0, 0.0]]))
        assert run_cli(["assess", "--delineated", str(layer),
                        "--reference", str(layer), "--gsd", "0",
                        "-o", str(tmp_path / "report.csv")]) == 3


class TestServe:
    def test_busy_port_exit_2(self, tmp_path):
        blocker = socket.socket()
        try:
            blocker.bind(("127.0.0.1", 0))
            blocker.listen(1)
            port = blocker.getsockname()[1]
            code = run_cli(["serve", "--port", str(port),
                            "--data-dir", str(tmp_path / "data")])
        finally:
            blocker.close()
        assert code == 2

    def test_serve_hands_app_to_uvicorn(self, tmp_path, monkeypatch):
        captured = {}

        def fake_run(app, **kwargs):
            captured["app"] = app
            captured.update(kwargs)

        monkeypatch.setattr("uvicorn.run", fake_run)
        data = tmp_path / "data"
        code = run_cli(["serve", "--port", "0", "--data-dir", str(data)])
        assert code == 0
        assert captured["app"].title == "boundline"
        assert captured["port"] == 0
        assert data.is_dir()


class TestUsage:
    def test_no_subcommand_exit_3(self):
        assert run_cli([]) == 3

    def test_unknown_subcommand_exit_3(self):
        assert run_cli(["frobnicate"]) == 3

    def test_bad_flag_value_exit_3(self, tmp_path):
        assert run_cli(["contours", "x.png", "-o", "out",
                        "--max-dim", "lots"]) == 3

    def test_json_logs_parse(self, tmp_path, capsys):
        code = run_cli(["--json-logs", "contours",
                        str(tmp_path / "no.png"), "-o", "out"])
        assert code == 2
        err_lines = [l for l in capsys.readouterr().err.splitlines()
                     if l.strip()]
        assert err_lines
        for line in err_lines:
            doc = json.loads(line)
            assert {"level", "message", "time"} <= set(doc)
        assert any(doc["level"] == "error"
                   for doc in map(json.loads, err_lines))
