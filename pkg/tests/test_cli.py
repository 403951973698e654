import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from pacdnn.channel import make_rng
from pacdnn.cli import main, read_run_config, CliError
from pacdnn.code import PacCode, all_messages, encode
from pacdnn.nn import build_decoder_network, load_checkpoint
from pacdnn.training import _INIT


def run(capsys, *argv):
    rc = main([str(a) for a in argv])
    out = capsys.readouterr()
    return rc, out.out, out.err


def _bit_rows(path):
    return [ln for ln in path.read_text().splitlines() if ln and not ln.startswith("#")]


def _write_messages(path, msgs):
    path.write_text("".join("".join(map(str, m)) + "\n" for m in msgs))
    return path


# encode / decode

def test_encode_all_zero_message(tmp_path, capsys):
    msgs = _write_messages(tmp_path / "m.txt", [[0] * 8])
    rc, _, _ = run(capsys, "encode", "--messages", msgs, "--out", tmp_path)
    assert rc == 0
    text = (tmp_path / "codewords.txt").read_text()
    assert _bit_rows(tmp_path / "codewords.txt") == ["0" * 16]
    assert "# g=1011011" in text and "# A=7,9,10,11,12,13,14,15" in text


def test_encode_random_is_deterministic(tmp_path, capsys):
    for name in ("a.txt", "b.txt"):
        assert run(capsys, "encode", "--random", 10, "--seed", 7, "--output", tmp_path / name)[0] == 0
    assert (tmp_path / "a.txt").read_bytes() == (tmp_path / "b.txt").read_bytes()
    assert len(_bit_rows(tmp_path / "a.txt")) == 10


def test_encode_matches_library(tmp_path, capsys):
    code = PacCode.rm_polar(8, 4)
    msgs = _write_messages(tmp_path / "m.txt", all_messages(4))
    run(capsys, "encode", "--N", 8, "--K", 4, "--messages", msgs, "--out", tmp_path)
    want = ["".join(map(str, x)) for x in encode(all_messages(4), code)]
    assert _bit_rows(tmp_path / "codewords.txt") == want


@pytest.mark.parametrize("fmt", ["bin", "hex"])
def test_round_trip_through_ml(tmp_path, capsys, fmt):
    msgs = _write_messages(tmp_path / "m.txt", all_messages(8))
    run(capsys, "encode", "--messages", msgs, "--format", fmt, "--out", tmp_path)
    rc, out, _ = run(capsys, "decode", "--input", tmp_path / "codewords.txt", "--decoder", "ml",
                     "--ebn0", 12, "--out", tmp_path)
    assert rc == 0 and "ml" in out
    assert _bit_rows(tmp_path / "messages.txt") == _bit_rows(msgs)


def test_hex_codeword_lines(tmp_path, capsys):
    msgs = _write_messages(tmp_path / "m.txt", [[1, 0, 1, 1]])
    run(capsys, "encode", "--N", 8, "--K", 4, "--messages", msgs, "--format", "hex", "--out", tmp_path)
    x = encode(np.array([1, 0, 1, 1]), PacCode.rm_polar(8, 4))
    assert _bit_rows(tmp_path / "codewords.txt") == [format(int("".join(map(str, x)), 2), "02x")]


@pytest.mark.parametrize("content", ["0101\n", "01010102\n", "0101 01x1\n"])
def test_malformed_message_file(tmp_path, capsys, content):
    bad = tmp_path / "bad.txt"
    bad.write_text(content)
    rc, _, err = run(capsys, "encode", "--messages", bad, "--out", tmp_path)
    assert rc != 0 and "bad.txt" in err
    assert not (tmp_path / "codewords.txt").exists()


def test_encode_needs_exactly_one_source(tmp_path, capsys):
    assert run(capsys, "encode", "--out", tmp_path)[0] != 0


def test_decode_rejects_other_code(tmp_path, capsys):
    run(capsys, "encode", "--N", 8, "--K", 4, "--random", 3, "--out", tmp_path)
    rc, _, err = run(capsys, "decode", "--N", 8, "--K", 4, "--profile", "4,5,6,7",
                     "--input", tmp_path / "codewords.txt", "--out", tmp_path)
    assert rc != 0 and "A=" in err


# configuration

def test_config_file_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("schema_version = 1\nN = 8\nK = 4\ng = 1011011\nA = 4,5,6,7   # explicit profile\n")
    msgs = _write_messages(tmp_path / "m.txt", [[1, 1, 1, 1]])
    assert run(capsys, "encode", "--config", cfg, "--messages", msgs, "--out", tmp_path)[0] == 0
    assert "# A=4,5,6,7" in (tmp_path / "codewords.txt").read_text()
    # flags win over the file
    run(capsys, "encode", "--config", cfg, "--profile", "rm-polar", "--messages", msgs, "--out", tmp_path)
    assert "# A=3,5,6,7" in (tmp_path / "codewords.txt").read_text()


@pytest.mark.parametrize("body,needle", [
    ("N = 8\n", "schema_version"),
    ("schema_version = 2\n", "schema_version"),
    ("schema_version = 1\nepochs = 3\n", "epochs"),
    ("schema_version = 1\nbogus = 1\n", "bogus"),
    ("schema_version = 1\nN = eight\n", "N"),
])
def test_config_validation(tmp_path, body, needle):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(body)
    with pytest.raises(CliError, match=needle):
        read_run_config(cfg, "encode")


def test_config_errors_exit_nonzero(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("schema_version = 1\nlist_size = 4\n")
    rc, _, err = run(capsys, "train", "--config", cfg, "--out", tmp_path)
    assert rc != 0 and "list_size" in err
    assert not (tmp_path / "checkpoints").exists()
    assert run(capsys, "train", "--config", tmp_path / "absent.cfg")[0] != 0


def test_bad_flag_value_exits_nonzero(capsys):
    rc, _, err = run(capsys, "train", "--arch", "transformer")
    assert rc != 0 and "arch" in err
    assert run(capsys, "ber", "--help")[0] == 0


# train

def test_train_zero_epochs_is_initialisation(tmp_path, capsys):
    rc, out, _ = run(capsys, "train", "--arch", "mlp", "--N", 16, "--K", 8, "--epochs", 0, "--seed", 5,
                     "--out", tmp_path)
    assert rc == 0
    assert "params=37000" in out.splitlines()[0]
    net, adam, header = load_checkpoint(tmp_path / "checkpoints" / "mlp_N16_K8.ckpt")
    init = build_decoder_network("mlp", 16, 8, seed=int(make_rng(5, _INIT).integers(2 ** 31)))
    for a, b in zip(net.parameters(), init.parameters()):
        np.testing.assert_array_equal(a, b)
    assert header["meta"]["A"] == [7, 9, 10, 11, 12, 13, 14, 15]
    rows = list(csv.reader(open(tmp_path / "curves" / "mlp_N16_K8_loss.csv")))
    assert rows == [["epoch", "mean_bce"]]


@pytest.mark.parametrize("arch,params", [("mlp", 35460), ("cnn", 37652), ("rnn", 36364)])
def test_train_banner_param_count_84(tmp_path, capsys, arch, params):
    rc, out, _ = run(capsys, "train", "--arch", arch, "--N", 8, "--K", 4, "--epochs", 0, "--out", tmp_path)
    assert rc == 0 and f"params={params}" in out


def test_train_prints_epochs_and_writes_loss_csv(tmp_path, capsys):
    rc, out, _ = run(capsys, "train", "--N", 8, "--K", 4, "--epochs", 3, "--dataset-size", 2048, "--batch", 256,
                     "--out", tmp_path)
    assert rc == 0
    assert [ln.split()[1] for ln in out.splitlines() if ln.startswith("epoch ")] == ["1", "2", "3"]
    rows = list(csv.reader(open(tmp_path / "curves" / "mlp_N8_K4_loss.csv")))
    assert [r[0] for r in rows] == ["epoch", "1", "2", "3"]
    manifest = json.loads((tmp_path / "manifests" / "train_mlp_N8_K4.json").read_text())
    assert manifest["seeds"] == [0] and manifest["param_count"] == 35460


@pytest.mark.parametrize("n", [12, 0])
def test_train_rejects_non_power_of_two(tmp_path, capsys, n):
    rc, _, err = run(capsys, "train", "--N", n, "--K", 4, "--out", tmp_path)
    assert rc != 0 and err
    assert not (tmp_path / "checkpoints").exists()


def test_train_rejects_indivisible_batch(tmp_path, capsys):
    assert run(capsys, "train", "--dataset-size", 1000, "--batch", 512, "--out", tmp_path)[0] != 0


def _outputs(root):
    return {p.relative_to(root): p.read_bytes() for p in sorted(root.rglob("*"))
            if p.is_file() and p.parent.name != "manifests"}


def test_commands_are_idempotent(tmp_path, capsys):
    for d in ("a", "b"):
        out = tmp_path / d
        args = ("--N", 8, "--K", 4, "--seed", 3, "--out", out)
        assert run(capsys, "train", *args, "--epochs", 2, "--dataset-size", 1024, "--batch", 256)[0] == 0
        assert run(capsys, "ber", *args, "--decoder", "dnn", "--arch", "mlp", "--grid", "0,2",
                   "--min-errors", 50, "--workers", 1)[0] == 0
        assert run(capsys, "ber", *args, "--decoder", "ml", "--grid", "0,2", "--min-errors", 50,
                   "--workers", 1)[0] == 0
        assert run(capsys, "encode", *args, "--random", 5)[0] == 0
    a, b = _outputs(tmp_path / "a"), _outputs(tmp_path / "b")
    assert a.keys() == b.keys() and len(a) >= 6
    assert a == b
    manifests = sorted(p.name for p in (tmp_path / "a" / "manifests").iterdir())
    assert manifests == ["ber_ml_N8_K4.json", "ber_mlp_N8_K4.json", "train_mlp_N8_K4.json"]


# ber

def _curve_rows(path):
    return list(csv.DictReader(open(path)))


def test_ber_fano_monotone_with_error_target(tmp_path, capsys):
    rc, _, _ = run(capsys, "ber", "--decoder", "fano", "--grid", "0,1,2,3", "--min-errors", 500,
                   "--workers", 1, "--out", tmp_path)
    assert rc == 0
    rows = _curve_rows(tmp_path / "curves" / "fano_N16_K8.csv")
    assert [float(r["ebn0_db"]) for r in rows] == [0, 1, 2, 3]
    for r in rows:
        assert r["censored"] == "0" and int(r["bit_errors"]) >= 500
    for a, b in zip(rows, rows[1:]):
        sa = math.sqrt(float(a["ber"]) / int(a["bits_tested"]))
        sb = math.sqrt(float(b["ber"]) / int(b["bits_tested"]))
        assert float(b["ber"]) <= float(a["ber"]) + 3 * math.hypot(sa, sb)
    plot = list(csv.reader(open(tmp_path / "curves" / "plot_data_N16_K8.csv")))
    assert plot[0] == ["ebn0_db", "fano"] and len(plot) == 5


def test_ber_plot_data_collects_curves(tmp_path, capsys):
    for dec in ("ml", "list"):
        run(capsys, "ber", "--N", 8, "--K", 4, "--decoder", dec, "--grid", "1,3", "--min-errors", 50,
            "--workers", 1, "--out", tmp_path)
    plot = list(csv.reader(open(tmp_path / "curves" / "plot_data_N8_K4.csv")))
    assert plot[0] == ["ebn0_db", "list32", "ml"] and len(plot) == 3


def test_ber_ml_guard(tmp_path, capsys):
    rc, _, err = run(capsys, "ber", "--N", 32, "--K", 17, "--decoder", "ml", "--out", tmp_path)
    assert rc != 0 and "K <= 16" in err


def test_ber_censored_point_still_succeeds(tmp_path, capsys):
    rc, out, _ = run(capsys, "ber", "--N", 8, "--K", 4, "--decoder", "ml", "--grid", 40, "--max-frames", 300,
                     "--workers", 1, "--out", tmp_path)
    assert rc == 0 and "censored" in out
    assert _curve_rows(tmp_path / "curves" / "ml_N8_K4.csv")[0]["censored"] == "1"
    manifest = json.loads((tmp_path / "manifests" / "ber_ml_N8_K4.json").read_text())
    assert manifest["censored_points"] == [40.0]


def test_ber_checkpoint_mismatches(tmp_path, capsys):
    run(capsys, "train", "--arch", "cnn", "--N", 8, "--K", 4, "--epochs", 0, "--out", tmp_path)
    ckpt = tmp_path / "checkpoints" / "cnn_N8_K4.ckpt"
    rc, _, err = run(capsys, "ber", "--N", 8, "--K", 4, "--decoder", "dnn", "--arch", "mlp", "--checkpoint", ckpt,
                     "--out", tmp_path)
    assert rc != 0 and "arch" in err
    rc, _, err = run(capsys, "ber", "--decoder", "dnn", "--checkpoint", ckpt, "--out", tmp_path)
    assert rc != 0 and "(8,4)" in err
    rc, _, err = run(capsys, "ber", "--N", 8, "--K", 4, "--profile", "4,5,6,7", "--decoder", "dnn",
                     "--checkpoint", ckpt, "--out", tmp_path)
    assert rc != 0 and "A=" in err
    rc, _, err = run(capsys, "ber", "--decoder", "dnn", "--arch", "rnn", "--out", tmp_path)
    assert rc != 0 and "missing checkpoint" in err


def test_hard_inputs_no_better_than_llr(tmp_path, capsys):
    bers = {}
    for mode in ("llr", "hard"):
        out = tmp_path / mode
        common = ("--N", 8, "--K", 4, "--input-mode", mode, "--out", out)
        assert run(capsys, "train", *common, "--rho-t", 2, "--epochs", 8, "--dataset-size", 2 ** 14)[0] == 0
        assert run(capsys, "ber", *common, "--decoder", "dnn", "--arch", "mlp", "--grid", 4, "--min-errors", 500,
                   "--workers", 1)[0] == 0
        tag = "mlp" if mode == "llr" else "mlp_hard"
        bers[mode] = _curve_rows(out / "curves" / f"{tag}_N8_K4.csv")[0]
    h, s = (float(bers[m]["ber"]) for m in ("hard", "llr"))
    sigma = math.hypot(*(math.sqrt(float(bers[m]["ber"]) / int(bers[m]["bits_tested"])) for m in bers))
    assert h >= s - 3 * sigma, (h, s)


# nve

def _fake_fano(path, grid):
    with open(path, "w") as fh:
        fh.write("ebn0_db,ber,fer,bit_errors,bits_tested,frames,censored\n")
        for e in grid:
            ber = 0.1 * 10 ** (-e / 3)
            fh.write(f"{e},{ber},{ber},{int(ber * 1e5)},100000,25000,0\n")
    return path


def _nve(capsys, tmp_path, *extra):
    fano = _fake_fano(tmp_path / "fano.csv", [0.0, 2.0])
    return run(capsys, "nve", "--N", 8, "--K", 4, "--grid", "0,2", "--fano-curve", fano, "--epochs", 1,
               "--dataset-size", 1024, "--batch", 256, "--min-errors", 20, "--workers", 1, "--out", tmp_path,
               *extra)


def test_nve_single_candidate_echoed(tmp_path, capsys):
    rc, out, _ = _nve(capsys, tmp_path, "--rho-t", 3)
    assert rc == 0 and out.strip().splitlines()[-1] == "best_rho_t 3"
    rows = list(csv.reader(open(tmp_path / "curves" / "nve_mlp_N8_K4.csv")))
    assert rows[0] == ["rho_t", "nve", "ber_0dB", "ber_2dB"] and len(rows) == 2


def test_nve_table_has_row_per_candidate(tmp_path, capsys):
    rc, out, _ = _nve(capsys, tmp_path, "--rho-t", "1,3,5")
    assert rc == 0
    rows = list(csv.DictReader(open(tmp_path / "curves" / "nve_mlp_N8_K4.csv")))
    assert [float(r["rho_t"]) for r in rows] == [1.0, 3.0, 5.0]
    best = min(rows, key=lambda r: (float(r["nve"]), float(r["rho_t"])))
    assert out.strip().splitlines()[-1] == f"best_rho_t {float(best['rho_t']):g}"


def test_nve_missing_baseline(tmp_path, capsys):
    rc, _, err = run(capsys, "nve", "--fano-curve", tmp_path / "nope.csv", "--out", tmp_path)
    assert rc != 0 and "missing baseline" in err
    fano = _fake_fano(tmp_path / "fano.csv", [0.0])
    rc, _, err = run(capsys, "nve", "--fano-curve", fano, "--grid", "0,2", "--out", tmp_path)
    assert rc != 0 and "lacks" in err


# time

def test_time_table(tmp_path, capsys):
    for arch in ("mlp", "rnn"):
        run(capsys, "train", "--arch", arch, "--epochs", 0, "--out", tmp_path)
    rc, out, _ = run(capsys, "time", "--decoder", "mlp,rnn,fano", "--frames", 300, "--out", tmp_path)
    assert rc == 0
    rows = list(csv.DictReader(open(tmp_path / "timings" / "timings_N16_K8.csv")))
    assert [r["decoder"] for r in rows] == ["mlp", "rnn", "fano"]
    mean = {r["decoder"]: float(r["mean_latency_s"]) for r in rows}
    assert mean["mlp"] < mean["rnn"]
    assert mean["mlp"] < mean["fano"]


def test_time_missing_checkpoint(tmp_path, capsys):
    rc, _, err = run(capsys, "time", "--decoder", "fano,cnn", "--out", tmp_path)
    assert rc != 0 and "cnn_N16_K8.ckpt" in err
    assert not (tmp_path / "timings").exists()


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "pacdnn", "encode", "--random", "2", "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert len(_bit_rows(tmp_path / "codewords.txt")) == 2
    proc = subprocess.run([sys.executable, "-m", "pacdnn", "train", "--N", "12"], capture_output=True, text=True)
    assert proc.returncode != 0 and "power of two" in proc.stderr
