"""Command-line interface, exercised end to end through subprocesses."""
import json
import subprocess
import sys

import numpy as np
import pytest

from winnow.audio import read_wav, write_wav
from winnow.checkpoint import save_checkpoint
from winnow.config import save_config, tiny_config
from winnow.data import synthesize_pair
from winnow.model import TwoStageEnhancer


def run_cli(*argv, **kw):
    return subprocess.run(
        [sys.executable, "-m", "winnow", *argv], capture_output=True, text=True, **kw
    )


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    """A directory holding a tiny checkpoint plus noisy/clean WAV pair."""
    d = tmp_path_factory.mktemp("cli")
    model = TwoStageEnhancer(tiny_config(), seed=0)
    save_checkpoint(d / "model.thln", model.parameters(), model.config)
    mix, clean = synthesize_pair(np.random.default_rng(0), duration_s=1.0)
    write_wav(d / "noisy.wav", mix)
    write_wav(d / "clean.wav", clean)
    save_config(d / "tiny.json", tiny_config())
    return d


def test_no_command_is_usage_error():
    assert run_cli().returncode == 2


def test_unknown_flag_is_usage_error():
    assert run_cli("enhance", "--bogus").returncode == 2


def test_version_flag():
    r = run_cli("--version")
    assert r.returncode == 0 and "winnow" in r.stdout


def test_enhance_offline(workdir):
    out = workdir / "enhanced.wav"
    r = run_cli(
        "enhance",
        "--input", str(workdir / "noisy.wav"),
        "--output", str(out),
        "--checkpoint", str(workdir / "model.thln"),
    )
    assert r.returncode == 0, r.stderr
    assert "wrote" in r.stdout
    y = read_wav(out)
    assert y.size == read_wav(workdir / "noisy.wav").size


def test_enhance_stream_mode_matches_offline(workdir):
    off, st = workdir / "off.wav", workdir / "st.wav"
    base = [
        "--input", str(workdir / "noisy.wav"),
        "--checkpoint", str(workdir / "model.thln"),
    ]
    assert run_cli("enhance", *base, "--output", str(off)).returncode == 0
    r = run_cli("enhance", *base, "--output", str(st), "--mode", "stream")
    assert r.returncode == 0, r.stderr
    # both paths quantize to PCM16, so agreement is within one LSB
    np.testing.assert_allclose(read_wav(st), read_wav(off), atol=2.5 / 32768.0)


def test_enhance_reports_si_sdr(workdir):
    r = run_cli(
        "enhance",
        "--input", str(workdir / "noisy.wav"),
        "--output", str(workdir / "e2.wav"),
        "--checkpoint", str(workdir / "model.thln"),
        "--reference", str(workdir / "clean.wav"),
    )
    assert r.returncode == 0, r.stderr
    assert "SI-SDR in:" in r.stdout and "SI-SDR out:" in r.stdout and "gain" in r.stdout


def test_enhance_missing_input_is_io_error(workdir):
    r = run_cli(
        "enhance",
        "--input", str(workdir / "nothere.wav"),
        "--output", str(workdir / "x.wav"),
        "--checkpoint", str(workdir / "model.thln"),
    )
    assert r.returncode == 3
    assert "i/o error" in r.stderr


def test_enhance_malformed_wav_is_format_error(workdir):
    bad = workdir / "bad.wav"
    bad.write_bytes(b"not a wav file at all")
    r = run_cli(
        "enhance",
        "--input", str(bad),
        "--output", str(workdir / "x.wav"),
        "--checkpoint", str(workdir / "model.thln"),
    )
    assert r.returncode == 4
    assert "format error" in r.stderr


def test_enhance_corrupt_checkpoint_is_format_error(workdir):
    bad = workdir / "bad.thln"
    bad.write_bytes(b"XXXX garbage")
    r = run_cli(
        "enhance",
        "--input", str(workdir / "noisy.wav"),
        "--output", str(workdir / "x.wav"),
        "--checkpoint", str(bad),
    )
    assert r.returncode == 4


def test_train_bad_config_is_config_error(workdir, tmp_path):
    badcfg = tmp_path / "bad.json"
    badcfg.write_text('{"bogus_key": 1}')
    r = run_cli("train", "--out", str(tmp_path / "run"), "--config", str(badcfg))
    assert r.returncode == 5
    assert "config error" in r.stderr


def test_train_writes_checkpoints(workdir, tmp_path):
    out = tmp_path / "run"
    r = run_cli(
        "train",
        "--out", str(out),
        "--config", str(workdir / "tiny.json"),
        "--epochs", "0",
        "--seed", "1",
    )
    assert r.returncode == 0, r.stderr
    assert (out / "final.thln").exists()
    assert (out / "config.json").exists()


def test_profile_table_and_json(workdir):
    r = run_cli("profile", "--config", str(workdir / "tiny.json"))
    assert r.returncode == 0, r.stderr
    assert "total" in r.stdout and "lcrb.merge" in r.stdout
    rj = run_cli("profile", "--config", str(workdir / "tiny.json"), "--json")
    assert rj.returncode == 0
    d = json.loads(rj.stdout)
    assert d["total"]["params"] > 0


def test_gradcheck_command():
    r = run_cli("gradcheck", "--seed", "3")
    assert r.returncode == 0, r.stderr
    assert "cases passed" in r.stdout
    assert "FAIL" not in r.stdout


def test_enhance_missing_checkpoint_names_path(workdir):
    r = run_cli(
        "enhance",
        "--input", str(workdir / "noisy.wav"),
        "--output", str(workdir / "x.wav"),
        "--checkpoint", str(workdir / "nothere.thln"),
    )
    assert r.returncode == 3
    assert "nothere.thln" in r.stderr


def test_train_same_seed_gives_identical_history(workdir, tmp_path):
    import dataclasses

    cfg = tiny_config()
    cfg = dataclasses.replace(
        cfg, training=dataclasses.replace(cfg.training, mixtures_per_epoch=2, duration_s=1.0)
    )
    cfg_path = tmp_path / "quick.json"
    save_config(cfg_path, cfg)
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        r = run_cli("train", "--out", str(out), "--config", str(cfg_path), "--epochs", "1", "--seed", "5")
        assert r.returncode == 0, r.stderr
        outs.append((out / "history.csv").read_bytes())
    assert outs[0] == outs[1]


def test_profile_prints_scaled_totals(workdir):
    r = run_cli("profile", "--config", str(workdir / "tiny.json"))
    assert r.returncode == 0, r.stderr
    assert "M params" in r.stdout and "G MACs/s" in r.stdout


def test_profile_empty_config_is_all_zeros(workdir, tmp_path):
    from winnow.config import ModelConfig

    cfg = ModelConfig.from_dict({"schema_version": 1, "lcrb": None, "coarse": None, "fine": None})
    p = tmp_path / "empty.json"
    save_config(p, cfg)
    r = run_cli("profile", "--config", str(p), "--json")
    assert r.returncode == 0, r.stderr
    d = json.loads(r.stdout)
    assert d["total"] == {"params": 0, "macs_per_second": 0}
    assert d["layers"] == []


def test_profile_coarse_only_config(workdir, tmp_path):
    import dataclasses

    cfg = dataclasses.replace(tiny_config(), fine=None)
    p = tmp_path / "coarse_only.json"
    save_config(p, cfg)
    r = run_cli("profile", "--config", str(p), "--json")
    assert r.returncode == 0, r.stderr
    d = json.loads(r.stdout)
    assert d["coarse_stage"] == d["total"]


def test_gradcheck_reports_small_errors_per_case():
    r = run_cli("gradcheck", "--seed", "3")
    assert r.returncode == 0
    for line in r.stdout.splitlines():
        if "max_rel_err=" not in line or "negative_control" in line:
            continue
        err = float(line.split("max_rel_err=")[1].split()[0])
        assert err <= 1e-5, line


def test_gradcheck_impossible_tolerance_fails_loudly():
    # tolerance 0 makes every honest case fail, proving the nonzero-exit
    # path reports the offending ops by name
    r = run_cli("gradcheck", "--tolerance", "0")
    assert r.returncode == 1
    assert "FAIL" in r.stdout and "conv2d" in r.stdout
