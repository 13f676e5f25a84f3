import csv
import json

import numpy as np
import pytest

from fedpca.cli import EPSILON_FLOOR, main
from fedpca.datasets import SynthSpec, load_csv, synth
from fedpca.federation import depth_error_probe
from fedpca.linalg import singular_values


def run_ok(argv):
    code = main(argv)
    assert code == 0, f"command failed: {argv}"


def read_metrics(out_dir, metric=None):
    with open(out_dir / "metrics.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    if metric is not None:
        rows = [r for r in rows if r["metric"] == metric]
    return rows


class TestSynth:
    def test_writes_exact_spectrum(self, tmp_path, capsys):
        out = tmp_path / "s"
        run_ok(["synth", "--d", "4", "--n", "12", "--alpha", "1", "--seed", "1",
                "--out", str(out)])
        x = load_csv(out / "matrix.csv")
        assert x.shape == (4, 12)
        got = singular_values(x)
        assert np.max(np.abs(got - [1.0, 0.5, 1.0 / 3.0, 0.25])) < 1e-10
        assert (out / "manifest.txt").exists()
        assert (out / "timings.csv").exists()
        assert "synth: wrote" in capsys.readouterr().out

    def test_reruns_are_byte_identical(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        argv = ["synth", "--d", "5", "--n", "9", "--alpha", "0.5", "--seed", "7"]
        run_ok(argv + ["--out", str(a)])
        run_ok(argv + ["--out", str(b)])
        assert (a / "matrix.csv").read_bytes() == (b / "matrix.csv").read_bytes()

    def test_gauss_generator(self, tmp_path):
        out = tmp_path / "g"
        run_ok(["synth", "--d", "3", "--n", "40", "--generator", "gauss",
                "--seed", "2", "--out", str(out)])
        assert load_csv(out / "matrix.csv").shape == (3, 40)

    def test_missing_dimensions_exit_2(self, tmp_path):
        assert main(["synth", "--out", str(tmp_path / "x")]) == 2


class TestRunEdge:
    def test_full_rank_matches_offline_svd(self, tmp_path):
        out = tmp_path / "e"
        run_ok(["run-edge", "--d", "8", "--n", "120", "--rank", "8",
                "--batch", "30", "--no-dp", "--seed", "3", "--out", str(out)])
        got = [float(r["value"]) for r in read_metrics(out, "global_value")]
        x = synth(SynthSpec(8, 120, 1.0, 3))
        expect = np.linalg.svd(x, compute_uv=False)
        assert np.max(np.abs(np.array(got) - expect)) < 1e-8

    def test_reconstruction_error_decreases_with_rank(self, tmp_path):
        errs = {}
        for rank in (2, 6):
            out = tmp_path / f"r{rank}"
            run_ok(["run-edge", "--d", "8", "--n", "100", "--rank", str(rank),
                    "--batch", "100", "--no-dp", "--seed", "0", "--out", str(out)])
            errs[rank] = float(read_metrics(out, "reconstruction_error")[-1]["value"])
        assert errs[6] <= errs[2] + 1e-12

    def test_private_run_logs_noise_scale(self, tmp_path):
        out = tmp_path / "p"
        run_ok(["run-edge", "--d", "6", "--n", "60", "--rank", "2", "--batch", "30",
                "--epsilon", "1.0", "--delta", "0.1", "--seed", "0",
                "--normalize", "unit-ball", "--out", str(out)])
        omegas = read_metrics(out, "noise_omega")
        widths = read_metrics(out, "batch_width")
        assert len(omegas) == 2 and len(widths) == 2
        assert all(float(r["value"]) > 0 for r in omegas)

    def test_missing_data_file_exit_3(self, tmp_path):
        assert main(["run-edge", "--data", str(tmp_path / "nope.csv"),
                     "--no-dp", "--out", str(tmp_path / "o")]) == 3

    def test_ragged_csv_exit_3(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("1,2,3\n4,5\n")
        assert main(["run-edge", "--data", str(bad), "--no-dp",
                     "--out", str(tmp_path / "o")]) == 3

    def test_privacy_infeasible_exit_4(self, tmp_path, capsys):
        code = main(["run-edge", "--d", "20", "--n", "100", "--rank", "4",
                     "--batch", "50", "--epsilon", "0.1", "--delta", "0.05",
                     "--omega-floor", "1.0", "--seed", "0",
                     "--out", str(tmp_path / "o")])
        assert code == 4
        assert "privacy-infeasible" in capsys.readouterr().err


class TestRunFederated:
    def test_single_leaf_equals_edge_run(self, tmp_path):
        fed, edge = tmp_path / "f", tmp_path / "e"
        common = ["--d", "8", "--n", "90", "--rank", "4", "--batch", "30",
                  "--no-dp", "--seed", "5"]
        run_ok(["run-federated", "--leaves", "1", "--threads", "1"] + common
               + ["--out", str(fed)])
        run_ok(["run-edge"] + common + ["--out", str(edge)])
        fed_vals = [float(r["value"]) for r in read_metrics(fed, "global_value")]
        edge_vals = [float(r["value"]) for r in read_metrics(edge, "global_value")]
        assert len(fed_vals) == len(edge_vals)
        assert np.max(np.abs(np.array(fed_vals) - edge_vals)) < 1e-10

    def test_schedule_seed_cannot_change_values(self, tmp_path):
        vals = {}
        for seed in (5, 17):
            out = tmp_path / f"s{seed}"
            run_ok(["run-federated", "--d", "10", "--n", "120", "--leaves", "3",
                    "--rank", "4", "--batch", "10", "--no-dp", "--seed", "1",
                    "--schedule", "random_interleave", "--schedule-seed", str(seed),
                    "--out", str(out)])
            vals[seed] = [r["value"] for r in read_metrics(out, "global_value")]
            dev = read_metrics(out, "schedule_replay_max_dev")
            assert len(dev) == 1 and float(dev[0]["value"]) == 0.0
        assert vals[5] == vals[17]

    def test_merge_count_row(self, tmp_path):
        out = tmp_path / "m"
        run_ok(["run-federated", "--d", "6", "--n", "64", "--leaves", "8",
                "--fanout", "2", "--rank", "3", "--batch", "8", "--no-dp",
                "--seed", "0", "--out", str(out)])
        assert float(read_metrics(out, "merge_count")[0]["value"]) == 7.0
        levels = {int(r["t"]) for r in read_metrics(out, "level_rank")}
        assert levels == {0, 1, 2, 3}


class TestReplay:
    def test_federated_metrics_reproduced_byte_for_byte(self, tmp_path):
        first, second = tmp_path / "one", tmp_path / "two"
        run_ok(["run-federated", "--d", "12", "--n", "150", "--leaves", "4",
                "--rank", "5", "--batch", "25", "--epsilon", "0.5",
                "--delta", "0.1", "--seed", "9", "--policy", "seeded_shuffle",
                "--out", str(first)])
        run_ok(["replay", str(first / "manifest.txt"), "--out", str(second)])
        assert (first / "metrics.csv").read_bytes() == (second / "metrics.csv").read_bytes()
        strip = lambda p: [
            ln for ln in p.read_text().splitlines() if not ln.startswith("# created")
        ]
        assert strip(first / "manifest.txt") == strip(second / "manifest.txt")

    def test_synth_matrix_reproduced(self, tmp_path):
        first, second = tmp_path / "one", tmp_path / "two"
        run_ok(["synth", "--d", "6", "--n", "20", "--seed", "4", "--out", str(first)])
        run_ok(["replay", str(first / "manifest.txt"), "--out", str(second)])
        assert (first / "matrix.csv").read_bytes() == (second / "matrix.csv").read_bytes()

    def test_manifest_without_command_exit_2(self, tmp_path):
        stray = tmp_path / "manifest.txt"
        stray.write_text("d=4\nn=8\n")
        assert main(["replay", str(stray), "--out", str(tmp_path / "o")]) == 2


class TestConfigFile:
    def test_flags_beat_config(self, tmp_path):
        cfg = tmp_path / "cfg.txt"
        cfg.write_text("rank=3\nbatch=20\n")
        out = tmp_path / "o"
        run_ok(["run-edge", "--d", "6", "--n", "40", "--rank", "2", "--no-dp",
                "--seed", "0", "--config", str(cfg), "--out", str(out)])
        manifest = (out / "manifest.txt").read_text()
        assert "rank=2" in manifest  # flag wins
        assert "batch=20" in manifest  # config fills the gap

    def test_unknown_config_key_exit_2(self, tmp_path):
        cfg = tmp_path / "cfg.txt"
        cfg.write_text("rnak=3\n")
        assert main(["run-edge", "--d", "4", "--n", "8", "--no-dp",
                     "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2

    def test_malformed_config_line_exit_2(self, tmp_path):
        cfg = tmp_path / "cfg.txt"
        cfg.write_text("rank 3\n")
        assert main(["run-edge", "--d", "4", "--n", "8", "--no-dp",
                     "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2


class TestUtilitySweep:
    def test_row_counts_and_ranges(self, tmp_path):
        out = tmp_path / "u"
        run_ok(["utility-sweep", "--d", "8", "--n", "200", "--rank", "4",
                "--alphas", "1.0", "--epsilons", "0.1,4.0", "--reps", "2",
                "--delta", "0.1", "--seed", "0", "--out", str(out)])
        qa_abs = read_metrics(out, "qa_abs")
        qa_signed = read_metrics(out, "qa_signed")
        # reps * alphas * epsilons * methods = 2 * 1 * 2 * 3
        assert len(qa_abs) == len(qa_signed) == 12
        for r in qa_abs:
            assert 0.0 <= float(r["value"]) <= 1.0
        for r in qa_signed:
            assert -1.0 <= float(r["value"]) <= 1.0
        methods = {json.loads(r["params"])["method"] for r in qa_abs}
        assert methods == {"fpca_mask", "stream_direct", "sulq_symmetric"}

    def test_epsilon_below_floor_is_clipped_with_warning(self, tmp_path, capsys):
        out = tmp_path / "c"
        run_ok(["utility-sweep", "--d", "6", "--n", "100", "--rank", "2",
                "--alphas", "1.0", "--epsilons", "0.0001", "--reps", "1",
                "--seed", "0", "--out", str(out)])
        assert "clipped" in capsys.readouterr().err
        assert "clipped" in (out / "manifest.txt").read_text()
        row = read_metrics(out, "qa_abs")[0]
        assert json.loads(row["params"])["eps_effective"] == EPSILON_FLOOR

    def test_deterministic_given_seed(self, tmp_path):
        outs = []
        for name in ("x", "y"):
            out = tmp_path / name
            run_ok(["utility-sweep", "--d", "6", "--n", "80", "--rank", "2",
                    "--alphas", "0.5", "--epsilons", "1.0", "--reps", "1",
                    "--seed", "3", "--out", str(out)])
            outs.append((out / "metrics.csv").read_bytes())
        assert outs[0] == outs[1]


class TestDepthProbe:
    def test_rows_echo_library_values(self, tmp_path):
        out = tmp_path / "d"
        run_ok(["depth-probe", "--d", "16", "--n", "64", "--rank", "4",
                "--fanout", "2", "--depths", "1,2", "--seed", "0", "--out", str(out)])
        x = synth(SynthSpec(16, 64, 1.0, 0))
        for depth in (1, 2):
            want_measured, want_bound = depth_error_probe(x, 2, depth, 4)
            got_m = [float(r["value"]) for r in read_metrics(out, "measured_error")
                     if int(r["t"]) == depth]
            got_b = [float(r["value"]) for r in read_metrics(out, "error_bound")
                     if int(r["t"]) == depth]
            assert abs(got_m[0] - want_measured) < 1e-12
            assert abs(got_b[0] - want_bound) < 1e-12
        flags = [float(r["value"]) for r in read_metrics(out, "within_bound")]
        assert flags == [1.0, 1.0]

    def test_indivisible_leaves_exit_2(self, tmp_path):
        assert main(["depth-probe", "--d", "8", "--n", "100", "--depths", "3",
                     "--fanout", "2", "--seed", "0",
                     "--out", str(tmp_path / "o")]) == 2
