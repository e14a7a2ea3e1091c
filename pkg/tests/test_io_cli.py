import json

import numpy as np
import pytest

from conftest import barker
from lowsidelobe import io as fio
from lowsidelobe.cli import main
from lowsidelobe.filter_design import (
    build_convolution_matrix,
    compression_metrics,
    matched_filter,
    solve_min_isl,
)
from lowsidelobe.waveform import generate_lfm

SMALL_LFM = ["--bandwidth", "1e6", "--pulse-width", "8e-6", "--sample-rate", "2e6"]


def read_csv_rows(path):
    lines = path.read_text().splitlines()
    return lines[0], [line.split(",") for line in lines[1:]]


class TestFormats:
    def test_samples_round_trip(self, tmp_path, rng):
        v = rng.standard_normal(9) + 1j * rng.standard_normal(9)
        fio.write_text(tmp_path / "s.csv", fio.samples_csv(v))
        np.testing.assert_array_equal(fio.read_samples_csv(tmp_path / "s.csv"), v)

    def test_waveform_round_trip(self, tmp_path):
        wf = generate_lfm(1e6, 1e-5, 2e6, 0.1)
        fio.write_waveform(tmp_path / "w.csv", wf)
        back = fio.read_waveform(tmp_path / "w.csv")
        np.testing.assert_array_equal(back.samples, wf.samples)
        np.testing.assert_array_equal(back.taper, wf.taper)
        assert json.loads((tmp_path / "w.json").read_text())["taper_alpha"] == 0.1

    def test_filter_round_trip(self, tmp_path):
        S = build_convolution_matrix(barker(7), 14, 3)
        W = solve_min_isl(S, 2 - 1j)
        fio.write_filter(tmp_path / "f.csv", W, compression_metrics(W, S))
        back = fio.read_filter(tmp_path / "f.csv")
        np.testing.assert_array_equal(back.weights, W.weights)
        assert back.provenance == "min_isl" and back.mainlobe_constraint == 2 - 1j
        meta = json.loads((tmp_path / "f.json").read_text())
        assert meta["L"] == 14 and set(meta) >= {"isl_db", "psl_db", "snr_loss_db"}

    def test_power_csv_zero(self):
        text = fio.power_csv([0, 1j], key="cell")
        assert text.splitlines() == ["cell,re,im,power_db", "0,0.0,0.0,-inf", "1,0.0,1.0,0.0"]

    def test_bad_header(self, tmp_path):
        (tmp_path / "x.csv").write_text("a,b\n1,2\n")
        with pytest.raises(ValueError):
            fio.read_samples_csv(tmp_path / "x.csv")

    def test_bad_scene(self):
        with pytest.raises(ValueError):
            fio.parse_scene({"cells": [{"index": 1}]}, 8)
        with pytest.raises(ValueError):
            fio.parse_scene([], 8)


class TestDesignIsl:
    def test_published_defaults(self, tmp_path, capsys):
        assert main(["design-isl", "--paper-defaults", "--out", str(tmp_path)]) == 0
        for name in ("waveform.csv", "matched.csv", "min_isl.csv", "response.csv", "metrics.json", "manifest.json"):
            assert (tmp_path / name).exists()
        m = json.loads((tmp_path / "metrics.json").read_text())
        assert all(np.isfinite(v) for v in m["min_isl"].values())
        assert m["min_isl"]["isl_db"] < m["matched"]["isl_db"] - 10
        cfg = json.loads((tmp_path / "manifest.json").read_text())["config"]
        assert cfg["filter_length"] == 480 and cfg["taper_alpha"] == 0.1

    def test_impulse_single_tap(self, tmp_path):
        fio.write_text(tmp_path / "imp.csv", fio.samples_csv([1.0]))
        out = tmp_path / "o"
        code = main(["design-isl", "--waveform-file", str(tmp_path / "imp.csv"), "--filter-length", "1",
                     "--mainlobe-width", "1", "--out", str(out)])
        assert code == 0
        np.testing.assert_array_equal(fio.read_samples_csv(out / "min_isl.csv"), fio.read_samples_csv(out / "matched.csv"))
        assert json.loads((out / "metrics.json").read_text())["min_isl"]["isl_db"] == "-inf"

    def test_missing_bandwidth(self, tmp_path):
        assert main(["design-isl", "--pulse-width", "1e-5", "--out", str(tmp_path)]) == 2

    def test_flag_overrides_config(self, tmp_path):
        (tmp_path / "c.json").write_text(json.dumps({"bandwidth": 2e6, "pulse_width": 4e-6, "sample_rate": 4e6}))
        assert main(["design-isl", "--config", str(tmp_path / "c.json"), "--bandwidth", "1e6",
                     "--out", str(tmp_path / "o")]) == 0
        cfg = json.loads((tmp_path / "o" / "manifest.json").read_text())["config"]
        assert cfg["bandwidth"] == 1e6 and cfg["sample_rate"] == 4e6

    def test_unknown_config_key(self, tmp_path):
        (tmp_path / "c.json").write_text(json.dumps({"bandwidht": 1e6}))
        assert main(["design-isl", "--config", str(tmp_path / "c.json"), "--out", str(tmp_path / "o")]) == 2

    def test_singular_exit_3(self, tmp_path):
        fio.write_text(tmp_path / "b3.csv", fio.samples_csv(barker(3)))
        assert main(["design-isl", "--waveform-file", str(tmp_path / "b3.csv"), "--filter-length", "3",
                     "--out", str(tmp_path / "o")]) == 3

    def test_aliasing_exit_2(self, tmp_path):
        assert main(["design-isl", "--bandwidth", "5e6", "--pulse-width", "1e-5", "--sample-rate", "1e6",
                     "--out", str(tmp_path)]) == 2

    def test_missing_waveform_file_exit_4(self, tmp_path):
        assert main(["design-isl", "--waveform-file", str(tmp_path / "nope.csv"), "--out", str(tmp_path)]) == 4


class TestOptimizeRls:
    def test_ten_iterations(self, tmp_path, capsys):
        assert main(["optimize-rls", *SMALL_LFM, "--iterations", "10", "--out", str(tmp_path)]) == 0
        header, rows = read_csv_rows(tmp_path / "trace.csv")
        assert header == "iteration,isl_raw,isl_db,best" and len(rows) == 10
        best = json.loads((tmp_path / "metrics.json").read_text())["best_iteration"]
        assert f"best_iteration={best}" in capsys.readouterr().out

    def test_divergence_exit_3(self, tmp_path):
        code = main(["optimize-rls", *SMALL_LFM, "--iterations", "100", "--forgetting-factor", "1e-200",
                     "--out", str(tmp_path)])
        assert code == 3
        header, rows = read_csv_rows(tmp_path / "trace.csv")
        assert header == "iteration,isl_raw" and 0 < len(rows) < 100


class TestClean:
    def test_demo_recovers_weak(self, tmp_path):
        assert main(["clean", "--out", str(tmp_path)]) == 0
        _, rows = read_csv_rows(tmp_path / "cleaned.csv")
        weak = complex(float(rows[70][1]), float(rows[70][2]))
        assert abs(20 * np.log10(abs(weak) / 3.0)) < 1
        det = json.loads((tmp_path / "detections.json").read_text())
        assert 40 in [s["index"] for s in det["strong"]]

    def test_threshold_from_pfa(self, tmp_path):
        main(["clean", "--pfa", "1e-3", "--out", str(tmp_path / "a")])
        main(["clean", "--pfa", "1e-9", "--out", str(tmp_path / "b")])
        eta_a = float(read_csv_rows(tmp_path / "a" / "statistics.csv")[1][0][2])
        eta_b = float(read_csv_rows(tmp_path / "b" / "statistics.csv")[1][0][2])
        assert eta_b / eta_a == pytest.approx(np.sqrt(np.log(1e-9) / np.log(1e-3)))
        assert main(["clean", "--threshold", "7.5", "--out", str(tmp_path / "c")]) == 0
        assert float(read_csv_rows(tmp_path / "c" / "statistics.csv")[1][0][2]) == 7.5

    def test_zero_scene(self, tmp_path):
        (tmp_path / "z.json").write_text(json.dumps({"cells": [], "noise_power": 0.0, "seed": 0}))
        assert main(["clean", *SMALL_LFM, "--scene", str(tmp_path / "z.json"), "--out", str(tmp_path / "o")]) == 0
        for name in ("profile.csv", "cleaned.csv"):
            _, rows = read_csv_rows(tmp_path / "o" / name)
            assert all(float(r[1]) == 0 and float(r[2]) == 0 for r in rows)

    def test_malformed_scene(self, tmp_path):
        (tmp_path / "bad.json").write_text(json.dumps({"cells": [{"index": 999, "re": 1, "im": 0}]}))
        assert main(["clean", *SMALL_LFM, "--scene", str(tmp_path / "bad.json"), "--out", str(tmp_path / "o")]) == 2
        (tmp_path / "bad2.json").write_text("{not json")
        assert main(["clean", *SMALL_LFM, "--scene", str(tmp_path / "bad2.json"), "--out", str(tmp_path / "o")]) == 2


class TestDesignNlfm:
    def test_tiny_run(self, tmp_path):
        args = ["design-nlfm", "--bandwidth", "5e6", "--pulse-width", "8e-6", "--sample-rate", "6e6",
                "--population-size", "4", "--max-generations", "1", "--seed", "3"]
        assert main([*args, "--out", str(tmp_path / "a")]) == 0
        for name in ("history.csv", "best_genome.json", "frequency.csv", "acf.csv", "waveform.csv", "min_isl.csv"):
            assert (tmp_path / "a" / name).exists()
        genome = json.loads((tmp_path / "a" / "best_genome.json").read_text())
        assert len(genome["control_points"]) == 12 and genome["generations"] == 1
        assert main([*args, "--out", str(tmp_path / "b")]) == 0
        assert (tmp_path / "a" / "history.csv").read_bytes() == (tmp_path / "b" / "history.csv").read_bytes()


class TestMetrics:
    def test_filter_file(self, tmp_path, capsys):
        wf = generate_lfm(1e6, 8e-6, 2e6)
        fio.write_waveform(tmp_path / "w.csv", wf)
        fio.write_filter(tmp_path / "f.csv", matched_filter(wf, 32))
        assert main(["metrics", "--waveform-file", str(tmp_path / "w.csv"), "--filter-file", str(tmp_path / "f.csv"),
                     "--mainlobe-width", "1", "--out", str(tmp_path / "o")]) == 0
        report = json.loads(capsys.readouterr().out)
        S = build_convolution_matrix(wf, 32, 1)
        assert report["filter"]["isl_db"] == pytest.approx(compression_metrics(matched_filter(wf, 32), S).isl_db)
