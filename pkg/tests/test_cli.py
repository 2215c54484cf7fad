import csv
import json

import numpy as np
import pytest

from pasmamba import fileio
from pasmamba.cli import main


def run(capsys, *argv):
    rc = main([str(a) for a in argv])
    out = capsys.readouterr().out
    return rc, out


def run_json(capsys, *argv):
    rc, out = run(capsys, *argv)
    assert rc == 0, out
    return json.loads(out)


def test_pipeline(tmp_path, capsys):
    p, m, u, s = (tmp_path / n for n in ("p.pasm", "m.mask", "u.pasm", "s.pasm"))
    run_json(capsys, "phantom", "--size", "64x64", "--out", p, "--pgm", tmp_path / "p.pgm")
    info = run_json(capsys, "gen-mask", "--pattern", "cartesian", "--accel", 4, "--size", 64, "--seed", 1, "--out", m)
    assert info["sampled_fraction"] == 0.25
    run_json(capsys, "undersample", "--img", p, "--mask", m, "--sigma", 0, "--out", u)
    rec = run_json(capsys, "swap-spectrum", "--amp", p, "--phase", u, "--out", s)
    assert set(rec) >= {"psnr_vs_amp", "ssim_vs_phase"}
    assert fileio.read_image(s).shape == (64, 64)
    assert fileio.read_pgm(tmp_path / "p.pgm").shape == (64, 64)


def test_outputs_deterministic(tmp_path, capsys):
    for name in ("a", "b"):
        run_json(capsys, "gen-mask", "--pattern", "radial", "--size", 32, "--seed", 5, "--out", tmp_path / name)
    assert (tmp_path / "a").read_bytes() == (tmp_path / "b").read_bytes()


def test_evaluate_identical(tmp_path, capsys):
    p = tmp_path / "a.pasm"
    run_json(capsys, "phantom", "--size", 32, "--out", p)
    rec = run_json(capsys, "evaluate", p, p)
    assert rec["psnr"] == "inf" and rec["ssim"] == 1.0
    assert rec["hybrid"]["total"] == 0.0


def test_scan_order_output(tmp_path, capsys):
    out = tmp_path / "o.bin"
    rec = run_json(capsys, "scan-order", "--kind", "cfds", "--size", "4x4", "--path", 0, "--out", out, "--pgm", tmp_path / "o.pgm")
    assert rec["head"][0] == 10
    assert fileio.read_order(out).perm[0] == 10
    vis = fileio.read_pgm(tmp_path / "o.pgm")
    assert vis[2, 2] == 0 and vis.max() == 255


def test_ssm_and_ddcfm_demos(capsys):
    rec = run_json(capsys, "ssm-demo", "--cases", 5)
    assert rec["max_dev_kernel_vs_interpreter"] < 1e-10
    rec = run_json(capsys, "ddcfm-demo", "--channels", 20)
    assert rec["gate_count"] == 2 and len(rec["gated_a"]) == 2
    assert rec["max_dev_vs_interpreter"] < 1e-12


def test_forward_demo_with_config(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# tiny run\nchannels = 4\nheight = 16\nwidth = 16\nssm_state = 2\nmask.pattern = radial\nmask.accel = 2\n")
    rec = run_json(capsys, "forward-demo", "--config", cfg, "--outdir", tmp_path / "o", "--save-weights", tmp_path / "w")
    assert set(rec) == {"psnr_zf", "psnr_out", "ssim_zf", "ssim_out"}
    for name in ("input.pgm", "output.pgm", "error.pgm", "metrics.json"):
        assert (tmp_path / "o" / name).exists()
    again = run_json(capsys, "forward-demo", "--config", cfg, "--outdir", tmp_path / "o2", "--weights", tmp_path / "w")
    assert again == rec


def test_toy_train(tmp_path, capsys):
    rec = run_json(capsys, "toy-train", "--size", 32, "--steps", 10, "--outdir", tmp_path)
    assert rec["loss_end"] < rec["loss_start"]
    with open(tmp_path / "trace.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 11 and float(rows[0]["total"]) == rec["loss_start"]
    assert np.array_equal(fileio.read_image(tmp_path / "after.pasm").shape, (32, 32))


def test_config_error_exit_code(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("channels = 4\ngate.fraction = 1.5\n")
    assert main(["forward-demo", "--config", str(cfg), "--outdir", str(tmp_path)]) == 2
    assert "gate" in capsys.readouterr().err
    cfg.write_text("colour = blue\n")
    assert main(["forward-demo", "--config", str(cfg), "--outdir", str(tmp_path)]) == 2
    assert "bad.cfg:1: colour" in capsys.readouterr().err


@pytest.mark.parametrize(
    "argv",
    [[], ["frobnicate"], ["phantom"], ["gen-mask", "--accel", "3", "--out", "x"], ["phantom", "--size", "axb", "--out", "x"]],
)
def test_usage_errors(argv, capsys):
    assert main(argv) == 2


def test_missing_input_file(tmp_path, capsys):
    assert main(["evaluate", str(tmp_path / "nope"), str(tmp_path / "nope")]) == 2


def test_verify_subset(capsys):
    rc, out = run(capsys, "verify", "--only", "2,3")
    assert rc == 0
    assert out.count("[PASS]") == 2
    assert main(["verify", "--only", "12"]) == 2


def test_verify_failure_exit_code(monkeypatch, capsys):
    from pasmamba import acceptance

    failing = acceptance.CheckResult(1, "forced", False, 0.0, 1.0)
    monkeypatch.setattr(acceptance, "run_all", lambda numbers=None: [failing])
    assert main(["verify"]) == 1
    assert "[FAIL]" in capsys.readouterr().out
