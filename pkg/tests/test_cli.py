import json
import subprocess
from pathlib import Path
import sys

import numpy as np
import pytest

from qdenoise import channels as ch
from qdenoise import cli, validation

DEPOL = """
kind = "sweep"
n = 5
k = 1
samples = 200
seed = 3
[channel]
kind = "depolarizing"
[sweep]
param = "p"
values = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]
"""

FLIP = """
kind = "sweep"
n = 4
k = 3
samples = 2000
seed = 5
threads = {threads}
[channel]
kind = "dit_flip"
[sweep]
param = "p"
start = 0.05
stop = 0.5
num = 4
"""

MSD = """
kind = "msd"
n = 3
seed = 0
[params]
p_ae = 0.02
[sweep]
param = "p_in"
values = [0.0, 0.05, 0.1, 0.2, 0.233, 0.5, 1.0]
"""

COOL = """
kind = "cool"
seed = 0
[params]
energies = [0.0, 1.0]
[sweep]
param = "beta"
values = [2.0]
"""


def write(tmp_path, text, name="cfg.toml"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_depolarizing_sweep(tmp_path):
    res = cli.run(cli.load_config(write(tmp_path, DEPOL)))
    assert np.all(np.abs(res.column("denoised_mean") - 1) < 1e-6)
    p = res.column("param")
    assert np.allclose(res.column("success_mean"), 1 - p * 0.8, atol=1e-9)


def test_msd_kind(tmp_path):
    res = cli.run(cli.load_config(write(tmp_path, MSD)))
    assert np.all(res.column("denoiser_copies") <= 3 + 1e-12)
    p = res.column("p_in")
    inf = res.column("msd_infinite").astype(bool)
    assert np.array_equal(inf, p >= 0.233)


def test_cool_kind(tmp_path):
    res = cli.run(cli.load_config(write(tmp_path, COOL)))
    assert abs(res.column("success")[0] - 1 / (1 + np.exp(-2))) < 1e-9


def test_analytic_column_within_tolerance(tmp_path):
    res = cli.run(cli.load_config(write(tmp_path, FLIP.format(threads=1))))
    assert np.all(np.abs(res.column("analytic") - res.column("denoised_mean")) < 0.05)


def test_csv_is_deterministic_and_thread_independent(tmp_path):
    outs = []
    for threads in (1, 1, 3):
        cfg = cli.load_config(write(tmp_path, FLIP.format(threads=threads)))
        csv_path, _ = cli.write_result(cli.run(cfg), cfg, tmp_path / f"out{len(outs)}")
        outs.append(csv_path.read_bytes())
    assert outs[0] == outs[1] == outs[2]
    assert b"\r" not in outs[0]


def test_output_files(tmp_path, monkeypatch):
    cfg_path = write(tmp_path, DEPOL, "depol.toml")
    monkeypatch.setenv(cli.OUTPUT_ENV, str(tmp_path / "env_out"))
    assert cli.main(["run", str(cfg_path), "--samples", "50", "--seed", "9"]) == 0
    csv_text = (tmp_path / "env_out" / "depol.csv").read_text()
    assert csv_text.splitlines()[0] == ",".join(cli.SWEEP_COLUMNS)
    side = json.loads((tmp_path / "env_out" / "depol.json").read_text())
    assert side["config"]["n_samples"] == 50 and side["config"]["seed"] == 9 and "version" in side
    # explicit --output beats the environment
    assert cli.main(["run", str(cfg_path), "--output", str(tmp_path / "x" / "y.csv")]) == 0
    assert (tmp_path / "x" / "y.csv").exists()


def test_config_errors(tmp_path):
    with pytest.raises(cli.ConfigError, match="seed"):
        cli.parse_config({"kind": "sweep", "sweep": {"values": [0.1]}, "channel": {"kind": "dit_flip"}})
    with pytest.raises(cli.ConfigError, match="channel.kind"):
        cli.parse_config({"kind": "sweep", "seed": 1, "sweep": {"values": [0.1]}, "channel": {"kind": "bogus"}})
    with pytest.raises(cli.ConfigError, match="sweep.values"):
        cli.parse_config({"kind": "sweep", "seed": 1, "sweep": {"values": []}, "channel": {"kind": "dit_flip"}})
    with pytest.raises(cli.ConfigError, match="kind"):
        cli.parse_config({"kind": "movie", "seed": 1})
    assert cli.main(["run", str(tmp_path / "missing.toml")]) == 2


def test_oracle_command(capsys):
    assert cli.main(["oracle", "worst_case", "p=0.1"]) == 0
    assert abs(float(capsys.readouterr().out) - 0.9969039949999532) < 1e-15
    assert cli.main(["oracle", "haar_n2", "p=0.5"]) == 0
    assert float(capsys.readouterr().out) == pytest.approx(5 / 6, abs=1e-15)
    assert cli.main(["oracle", "nope"]) == 2


def test_export_denoiser(tmp_path):
    cfg_path = write(tmp_path, FLIP.format(threads=1))
    out = tmp_path / "den.json"
    assert cli.main(["export-denoiser", str(out), "--config", str(cfg_path), "--mesh"]) == 0
    from qdenoise.denoiser import Denoiser

    d = Denoiser.from_json(out.read_text())
    assert d.n == 4 and d.k == 3
    assert (tmp_path / "den.mesh.json").exists()


def test_validate_passes_and_is_deterministic(capsys):
    assert cli.main(["validate"]) == 0
    first = capsys.readouterr().out
    assert cli.main(["validate"]) == 0
    assert capsys.readouterr().out == first


def test_validate_reports_broken_channel():
    def broken(p, n):
        good = ch.dit_flip(p, n)
        ops = np.array(good.kraus())
        ops[0] = ops[0] * 0.9
        return ch.KrausChannel(ops, check=False)

    results = validation.run_checks(0, {"dit_flip": broken})
    failed = [r.name for r in results if not r.passed]
    assert "channel completeness" in failed
    import io

    buf = io.StringIO()
    assert validation.report(results, buf) != 0
    assert "FAIL  channel completeness" in buf.getvalue()


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "qdenoise", "oracle", "breakeven", "k=2", "c=0.5"], capture_output=True, text=True)
    assert proc.returncode == 0 and 0 < float(proc.stdout) <= 1


DEMO_CONFIGS = sorted((Path(__file__).parents[1] / "demos" / "configs").glob("*.toml"))


@pytest.mark.parametrize("path", DEMO_CONFIGS, ids=lambda p: p.stem)
def test_demo_configs_parse(path):
    cfg = cli.load_config(path)
    assert cfg.kind in cli.RUNNERS and len(cfg.sweep_values) > 0
