"""Command-line experiment runner.

Subcommands::

    qdenoise run CONFIG.toml [--seed S] [--samples M] [--threads T] [--output PATH]
    qdenoise validate [--seed S]
    qdenoise oracle FORMULA key=value ...
    qdenoise export-denoiser PATH --config CONFIG.toml [--mesh]

Settings precedence: command-line flags, then the config file, then
defaults.  Outputs go to ``--output``, else the config's ``output``, else
``$QDENOISE_OUTPUT_DIR/<config name>``, else ``./<config name>``.  A run
writes ``<base>.csv`` and a ``<base>.json`` sidecar holding the resolved
config and package version.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import __version__
from . import analytics as an
from . import applications as ap
from . import channels as ch
from . import denoiser as dn
from . import mesh
from . import qstate as qs
from . import validation

OUTPUT_ENV = "QDENOISE_OUTPUT_DIR"
KINDS = ("sweep", "subspace", "quenched", "msd", "cool", "perfect", "oracle")
TRAININGS = ("population", "fidelity")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    kind: str
    n: int = 2
    k: int = 1
    channel: dict = field(default_factory=dict)
    sweep_param: str = "p"
    sweep_values: list = field(default_factory=list)
    training: str = "population"
    n_samples: int = 2000
    seed: int = 0
    threads: int = 1
    subspace: str = "random"
    params: dict = field(default_factory=dict)
    optimizer: dict = field(default_factory=dict)
    output: str | None = None
    name: str = "experiment"

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SweepResult:
    """Table produced by a run: one row per grid point, in grid order."""

    columns: tuple
    rows: list

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([np.nan if r[i] is None else r[i] for r in self.rows], dtype=float)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_fmt(v) for v in row])
        return buf.getvalue()


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return "%.17g" % v


# ---------------------------------------------------------------------------
# Config parsing


def _grid(spec, where: str) -> list:
    if isinstance(spec, dict):
        try:
            start, stop, num = float(spec["start"]), float(spec["stop"]), int(spec["num"])
        except KeyError as exc:
            raise ConfigError(f"{where}: range needs start, stop and num (missing {exc})") from None
        values = np.linspace(start, stop, num).tolist()
    else:
        values = [float(v) for v in spec]
    if not values or not all(math.isfinite(v) for v in values):
        raise ConfigError(f"{where}: grid must be finite and non-empty")
    return values


def parse_config(data: dict, name: str = "experiment") -> ExperimentConfig:
    """Build an :class:`ExperimentConfig` from a parsed TOML document."""
    if "kind" not in data:
        raise ConfigError("kind: missing (one of " + ", ".join(KINDS) + ")")
    kind = data["kind"]
    if kind not in KINDS:
        raise ConfigError(f"kind: unknown experiment kind {kind!r}")
    if "seed" not in data:
        raise ConfigError("seed: missing (runs are always explicitly seeded)")
    sweep = data.get("sweep", {})
    if "values" not in sweep and "start" not in sweep:
        raise ConfigError("sweep.values: missing grid")
    values = _grid(sweep["values"] if "values" in sweep else sweep, "sweep.values")
    channel = dict(data.get("channel", {}))
    if kind in ("sweep", "quenched"):
        if "kind" not in channel:
            raise ConfigError("channel.kind: missing")
        if channel["kind"] not in ch.CHANNEL_KINDS:
            raise ConfigError(f"channel.kind: unknown channel {channel['kind']!r}")
    cfg = ExperimentConfig(
        kind=kind,
        n=int(data.get("n", 2)),
        k=int(data.get("k", 1)),
        channel=channel,
        sweep_param=str(sweep.get("param", "p")),
        sweep_values=values,
        training=str(data.get("training", "population")),
        n_samples=int(data.get("samples", 2000)),
        seed=int(data["seed"]),
        threads=int(data.get("threads", 1)),
        subspace=str(data.get("subspace", "random")),
        params=dict(data.get("params", {})),
        optimizer=dict(data.get("optimizer", {})),
        output=data.get("output"),
        name=name,
    )
    if cfg.training not in TRAININGS:
        raise ConfigError(f"training: must be one of {TRAININGS}, got {cfg.training!r}")
    if not 1 <= cfg.k <= cfg.n:
        raise ConfigError(f"k: need 1 <= k <= n, got k={cfg.k}, n={cfg.n}")
    if cfg.n_samples < 2:
        raise ConfigError("samples: need at least 2")
    if cfg.threads < 1:
        raise ConfigError("threads: need at least 1")
    if cfg.subspace not in ("random", "standard"):
        raise ConfigError("subspace: must be 'random' or 'standard'")
    return cfg


def load_config(path: str | os.PathLike) -> ExperimentConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return parse_config(data, name=path.stem)


# ---------------------------------------------------------------------------
# Experiment kinds.  Each has a setup step (shared, seeded from the run seed)
# and a per-point function receiving its own generator.


def _subspace(cfg: ExperimentConfig) -> qs.Subspace:
    if cfg.subspace == "standard":
        return qs.Subspace.standard(cfg.n, cfg.k)
    return qs.random_subspace(cfg.n, cfg.k, np.random.default_rng([cfg.seed]))


def _channel(cfg: ExperimentConfig, value: float, rng):
    params = {k: v for k, v in cfg.channel.items() if k != "kind"}
    params[cfg.sweep_param] = value
    try:
        return ch.make_channel(cfg.channel["kind"], cfg.n, rng=rng, **params)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"channel: {exc}") from exc


def _optimizer(cfg: ExperimentConfig) -> dn.OptimizerConfig:
    try:
        return dn.OptimizerConfig(**cfg.optimizer)
    except TypeError as exc:
        raise ConfigError(f"optimizer: {exc}") from exc


def _train(cfg: ExperimentConfig, chan, s: qs.Subspace, rng) -> dn.Denoiser:
    if cfg.training == "population":
        return dn.train_population(dn.ensemble_state(chan, s), cfg.k)[0]
    opt = _optimizer(cfg)
    kets = qs.sample_in_subspace_batch(s, opt.n_train, rng)
    rhos = chan(qs.ket_to_dm(kets))
    return dn.train_fidelity(list(zip(kets, rhos)), cfg.n, cfg.k, opt, rng)[0]


def _pure_noise(s: qs.Subspace, c: float) -> np.ndarray:
    """Noise ket with overlap c on the subspace, along its first basis vector."""
    vec = np.sqrt(c) * s.basis[:, 0]
    if s.dim_sub < s.dim_full:
        vec = vec + np.sqrt(1 - c) * s.complement()[:, 0]
    return vec


def _point_sweep(cfg, ctx, value, rng):
    s = ctx["subspace"]
    chan = _channel(cfg, value, rng)
    d = _train(cfg, chan, s, rng)
    bare, fid, g = dn.sample_fidelities(d, chan, s, cfg.n_samples, rng)
    kind = cfg.channel["kind"]
    if kind == "depolarizing" and cfg.training == "population":
        p, n, k = value if cfg.sweep_param == "p" else cfg.channel["p"], cfg.n, cfg.k
        analytic = (1 - p + p / n) / (1 - p + p * k / n)
    else:
        analytic = dn.quenched_fidelity(d.operator, s, chan)
    return (value, *_stats(bare), *_stats(fid), float(g.mean()), analytic)


def _stats(x: np.ndarray) -> tuple[float, float]:
    return float(x.mean()), float(x.std(ddof=1) / np.sqrt(x.size))


SWEEP_COLUMNS = ("param", "bare_mean", "bare_stderr", "denoised_mean", "denoised_stderr", "success_mean", "analytic")


def _point_subspace(cfg, ctx, value, rng):
    s = ctx["subspace"]
    vals = {"p": cfg.params.get("p", 0.1), "c": cfg.params.get("c", 0.0)}
    if cfg.sweep_param not in vals:
        raise ConfigError("sweep.param: subspace experiments sweep 'p' or 'c'")
    vals[cfg.sweep_param] = value
    p, c = vals["p"], vals["c"]
    chan = ch.fixed_state_mix(p, qs.ket_to_dm(_pure_noise(s, c)))
    d = _train(cfg, chan, s, rng)
    bare, fid, g = dn.sample_fidelities(d, chan, s, cfg.n_samples, rng)
    analytic = an.subspace_avg_fidelity(an.SubspaceNoiseParams(cfg.n, cfg.k, p, c)) if cfg.training == "population" else None
    return (value, *_stats(bare), *_stats(fid), float(g.mean()), analytic)


def _point_quenched(cfg, ctx, value, rng):
    s = ctx["subspace"]
    chan = _channel(cfg, value, rng)
    d = _train(cfg, chan, s, rng)
    q = dn.quenched_fidelity(d.operator, s, chan)
    est = dn.average_fidelity_mc(d, chan, s, cfg.n_samples, rng)
    return (value, q, est.mean, est.stderr, abs(q - est.mean))


def _point_perfect(cfg, ctx, value, rng):
    s = ctx["subspace"]
    vals = {"p": cfg.params.get("p", 0.5), "c": cfg.params.get("c", 0.0)}
    if cfg.sweep_param not in vals:
        raise ConfigError("sweep.param: perfect-denoiser experiments sweep 'p' or 'c'")
    vals[cfg.sweep_param] = value
    p, c = vals["p"], vals["c"]
    noise = _pure_noise(s, c)
    try:
        d, ideal_success = dn.build_perfect_denoiser(s, noise)
    except (dn.UnsupportedDimensionError, dn.DegenerateNoiseError) as exc:
        raise ConfigError(f"perfect: {exc}") from exc
    chan = ch.fixed_state_mix(p, qs.ket_to_dm(noise))
    bare, fid, g = dn.sample_fidelities(d, chan, s, cfg.n_samples, rng)
    return (value, *_stats(bare), *_stats(fid), float(g.mean()), (1 - p) * ideal_success)


def _point_msd(cfg, ctx, value, rng):
    n = cfg.n
    p_ae = float(cfg.params.get("p_ae", 0.02))
    den = ap.denoiser_expected_copies(value, p_ae, n)
    target = float(cfg.params.get("target_fidelity", den.achieved_fidelity))
    msd = ap.msd_expected_copies(ctx["map"], value, target, n)
    ratio = msd.expected_copies / den.expected_copies
    return (value, msd.expected_copies, msd.infinite, den.expected_copies, den.achieved_fidelity, ratio)


def _point_cool(cfg, ctx, value, rng):
    h = ctx["hamiltonian"]
    res = ap.cool_gibbs(h, value)
    e = np.linalg.eigvalsh(h)
    w = np.exp(-value * (e - e[0]))
    return (value, res.success_probability, res.fidelity_vs_exact, float(w[0] / w.sum()))


def _point_oracle(cfg, ctx, value, rng):
    args = dict(cfg.params)
    formula = args.pop("formula", None)
    if formula is None:
        raise ConfigError("params.formula: missing")
    args[cfg.sweep_param] = value
    return (value, evaluate_oracle(formula, args))


def _setup(cfg: ExperimentConfig) -> dict:
    ctx = {}
    if cfg.kind in ("sweep", "subspace", "quenched", "perfect"):
        ctx["subspace"] = _subspace(cfg)
    if cfg.kind == "msd":
        ctx["map"] = ap.quadratic_msd_map(
            float(cfg.params.get("threshold", 0.233)), float(cfg.params.get("success", 0.04))
        )
    if cfg.kind == "cool":
        if "hamiltonian" in cfg.params:
            re = np.asarray(cfg.params["hamiltonian"], dtype=float)
            im = np.asarray(cfg.params.get("hamiltonian_imag", np.zeros_like(re)), dtype=float)
            h = re + 1j * im
        elif "energies" in cfg.params:
            h = np.diag(np.asarray(cfg.params["energies"], dtype=float)).astype(complex)
        else:
            raise ConfigError("params.energies: cool experiments need 'energies' or 'hamiltonian'")
        ctx["hamiltonian"] = h
    return ctx


RUNNERS = {
    "sweep": (_point_sweep, SWEEP_COLUMNS),
    "subspace": (_point_subspace, SWEEP_COLUMNS),
    "perfect": (_point_perfect, SWEEP_COLUMNS),
    "quenched": (_point_quenched, ("param", "quenched", "mc_mean", "mc_stderr", "abs_diff")),
    "msd": (_point_msd, ("p_in", "msd_copies", "msd_infinite", "denoiser_copies", "denoiser_fidelity", "cost_ratio")),
    "cool": (_point_cool, ("beta", "success", "ground_fidelity", "analytic_success")),
    "oracle": (_point_oracle, ("param", "value")),
}


def run(cfg: ExperimentConfig) -> SweepResult:
    """Evaluate every grid point; point i uses the generator seeded by (seed, i + 1)."""
    point, columns = RUNNERS[cfg.kind]
    ctx = _setup(cfg)

    def task(idx_value):
        idx, value = idx_value
        return point(cfg, ctx, value, np.random.default_rng([cfg.seed, idx + 1]))

    jobs = list(enumerate(cfg.sweep_values))
    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            rows = list(pool.map(task, jobs))
    else:
        rows = [task(j) for j in jobs]
    return SweepResult(columns, rows)


def output_base(cfg: ExperimentConfig, override: str | None = None) -> Path:
    if override:
        base = Path(override)
    elif cfg.output:
        base = Path(cfg.output)
    elif os.environ.get(OUTPUT_ENV):
        base = Path(os.environ[OUTPUT_ENV]) / cfg.name
    else:
        base = Path(cfg.name)
    return base.with_suffix("") if base.suffix in (".csv", ".json") else base


def write_result(result: SweepResult, cfg: ExperimentConfig, base: Path) -> tuple[Path, Path]:
    csv_path, json_path = base.with_name(base.name + ".csv"), base.with_name(base.name + ".json")
    sidecar = {"version": __version__, "config": cfg.to_dict(), "columns": list(result.columns)}
    try:
        base.parent.mkdir(parents=True, exist_ok=True)
        with open(csv_path, "w", newline="", encoding="utf-8") as fh:
            fh.write(result.to_csv())
        with open(json_path, "w", newline="\n", encoding="utf-8") as fh:
            fh.write(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write results to {base}: {exc}") from exc
    return csv_path, json_path


# ---------------------------------------------------------------------------
# Oracles


def _req(args: dict, *names):
    missing = [n for n in names if n not in args]
    if missing:
        raise ConfigError("missing oracle argument(s): " + ", ".join(missing))
    return [args[n] for n in names]


def _subspace_params(a):
    n, k, p, c = _req(a, "n", "k", "p", "c")
    return an.SubspaceNoiseParams(int(n), int(k), float(p), float(c))


ORACLES = {
    "worst_case": lambda a: an.worst_case_fidelity(*_req(a, "p")),
    "two_level": lambda a: an.two_level_exact(
        a["p"], an.TwoLevelNoise(a["rho00"], a.get("rho01", math.sqrt(a["rho00"] * (1 - a["rho00"]))))
    )[1],
    "haar_n2": lambda a: an.haar_noise_avg_fidelity_exact_n2(*_req(a, "p")),
    "haar_quad": lambda a: an.haar_noise_avg_fidelity_quad(int(_req(a, "n")[0]), a["p"]),
    "small_p_haar": lambda a: an.small_p_expansion_haar(int(_req(a, "n")[0]), a["p"]).value,
    "subspace_exact": lambda a: an.subspace_exact_fidelity(_subspace_params(a), *_req(a, "alpha")),
    "subspace_avg": lambda a: an.subspace_avg_fidelity(_subspace_params(a)),
    "subspace_taylor": lambda a: an.subspace_taylor(_subspace_params(a)).value,
    "bare": lambda a: an.bare_fidelity(_subspace_params(a)),
    "bare_alt": lambda a: an.bare_fidelity_alternative(_subspace_params(a)),
    "breakeven": lambda a: an.breakeven_p(int(_req(a, "k")[0]), *_req(a, "c")),
    "depolarizing_avg": lambda a: (lambda n, k, p: (1 - p + p / n) / (1 - p + p * k / n))(*_req(a, "n", "k", "p")),
    "depolarizing_success": lambda a: (lambda n, k, p: 1 - p + p * k / n)(*_req(a, "n", "k", "p")),
    "noisy_ae_success": lambda a: dn.noisy_ae_model(*_req(a, "p_ae", "p_in"), int(_req(a, "n")[0]))[0],
    "noisy_ae_fidelity": lambda a: dn.noisy_ae_model(*_req(a, "p_ae", "p_in"), int(_req(a, "n")[0]))[1],
    "denoiser_copies": lambda a: ap.denoiser_expected_copies(*_req(a, "p_in", "p_ae"), int(_req(a, "n")[0])).expected_copies,
    "msd_copies": lambda a: ap.msd_expected_copies(
        ap.quadratic_msd_map(a.get("threshold", 0.233), a.get("success", 0.04)),
        *_req(a, "p_in", "target_fidelity"),
        int(a.get("n", 3)),
    ).expected_copies,
}


def evaluate_oracle(formula: str, args: dict) -> float:
    if formula not in ORACLES:
        raise ConfigError(f"unknown formula {formula!r}; choose from {', '.join(sorted(ORACLES))}")
    return float(ORACLES[formula](args))


def _parse_assignments(items: list[str]) -> dict:
    out = {}
    for item in items:
        if "=" not in item:
            raise ConfigError(f"expected key=value, got {item!r}")
        key, raw = item.split("=", 1)
        try:
            out[key] = complex(raw) if "j" in raw else float(raw)
        except ValueError:
            raise ConfigError(f"{key}: not a number: {raw!r}") from None
    return out


# ---------------------------------------------------------------------------
# Entry point


def _apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    if args.seed is not None:
        cfg.seed = args.seed
    if getattr(args, "samples", None) is not None:
        if args.samples < 2:
            raise ConfigError("--samples: need at least 2")
        cfg.n_samples = args.samples
    if getattr(args, "threads", None) is not None:
        if args.threads < 1:
            raise ConfigError("--threads: need at least 1")
        cfg.threads = args.threads
    return cfg


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qdenoise", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment config and write CSV + JSON sidecar")
    p_run.add_argument("config")
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--samples", type=int)
    p_run.add_argument("--threads", type=int)
    p_run.add_argument("--output", help="output base path (extension optional)")

    p_val = sub.add_parser("validate", help="run the seeded invariant suite")
    p_val.add_argument("--seed", type=int, default=0)

    p_or = sub.add_parser("oracle", help="evaluate a closed-form formula")
    p_or.add_argument("formula", help="one of: " + ", ".join(sorted(ORACLES)))
    p_or.add_argument("params", nargs="*", help="key=value arguments")

    p_exp = sub.add_parser("export-denoiser", help="train from a config and write the denoiser as JSON")
    p_exp.add_argument("path")
    p_exp.add_argument("--config", required=True)
    p_exp.add_argument("--seed", type=int)
    p_exp.add_argument("--threads", type=int)
    p_exp.add_argument("--mesh", action="store_true", help="also write MZI settings to <path>.mesh.json")
    return parser


def export_denoiser(cfg: ExperimentConfig, path: Path, with_mesh: bool = False) -> dn.Denoiser:
    """Train on the first grid point of ``cfg`` and write the denoiser JSON."""
    if cfg.kind not in ("sweep", "quenched"):
        raise ConfigError("kind: export-denoiser needs a 'sweep' or 'quenched' config")
    s = _subspace(cfg)
    rng = np.random.default_rng([cfg.seed, 1])
    chan = _channel(cfg, cfg.sweep_values[0], rng)
    d = _train(cfg, chan, s, rng)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(d.to_dict()) + "\n", encoding="utf-8")
    if with_mesh:
        settings = {
            "encoder": mesh.mesh_from_unitary(d.encoder).to_dict(),
            "decoder": mesh.mesh_from_unitary(d.decoder).to_dict(),
        }
        path.with_name(path.stem + ".mesh.json").write_text(json.dumps(settings, indent=2) + "\n", encoding="utf-8")
    return d


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            cfg = _apply_overrides(load_config(args.config), args)
            result = run(cfg)
            csv_path, _ = write_result(result, cfg, output_base(cfg, args.output))
            print(f"wrote {csv_path} ({len(result.rows)} rows)")
            return 0
        if args.command == "validate":
            return validation.report(validation.run_checks(args.seed))
        if args.command == "oracle":
            value = evaluate_oracle(args.formula, _parse_assignments(args.params))
            print(repr(value))
            return 0
        if args.command == "export-denoiser":
            cfg = _apply_overrides(load_config(args.config), args)
            export_denoiser(cfg, Path(args.path), args.mesh)
            print(f"wrote {args.path}")
            return 0
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 1
