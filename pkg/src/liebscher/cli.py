"""Command-line front end.

Every command writes its artifacts plus a ``manifest.json`` into ``--out``.
Passing that manifest back through ``--config`` reruns the command with the
same resolved configuration.  Exit codes: 0 success, 2 invalid input,
3 failure during computation (the manifest then carries ``"status":
"FAILED"`` and whatever outputs were already written are kept).
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .abc import (
    AbcConfig,
    PriorSpec,
    model_from_json,
    posterior_summaries,
    run_abc,
    write_posterior_rho_csv,
    write_retained_csv,
    write_summaries_json,
)
from .analytics import CLParams, dependence_report, liebscher_tail_coefficients
from .empirical import (
    N_BOOT,
    cvm_asymmetry_pvalue,
    kendall_distribution,
    kendall_tau,
    kendall_tau_se,
    spearman_rho,
)
from .errors import InvalidParameter, LiebscherError
from .experiments import DESK, K_VALUES, FULL, SIGMA2_VALUES, table1, table2, write_replicates_csv, write_table_csv
from .io import load_json, load_model_spec, read_sample_csv, write_json, write_kendall_csv, write_sample_csv
from .mle import CIParams, compare_abc_mle, write_compare_csv
from .rng import SEED_ENV, default_master
from .sampler import sample_cl, sample_liebscher

EXIT_OK, EXIT_INPUT, EXIT_RUNTIME = 0, 2, 3


class InputError(Exception):
    """Bad user input detected by the CLI itself."""


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

DEFAULTS = {
    "sample": {"spec": None, "n": 1000},
    "analyze": {"spec": None, "sample": None, "n_boot": N_BOOT},
    "symtest": {"sample": None, "n_boot": N_BOOT},
    "abc": {
        "obs": None, "M_prime": DESK["m_prime"], "M": DESK["m"], "xi": 2.0, "K_max": 50,
        "prior": "zipf", "size": None, "prob": None, "theta": None, "model": "cl", "bases": None,
    },
    "table1": {**DESK, "K": list(K_VALUES), "n_boot": N_BOOT, "xi": 2.0, "K_max": 50},
    "table2": {**DESK, "sigma2": list(SIGMA2_VALUES), "n_boot": N_BOOT, "xi": 2.0, "K_max": 50},
    "compare": {
        "reps": 20, "n_list": [500, 10_000], "m_prime": DESK["m_prime"], "m": DESK["m"],
        "truth": {"theta": 5.0, "p": 0.3, "q": 0.8}, "starts": 8,
    },
}
PAPER_SCALE = {
    "table1": FULL,
    "table2": FULL,
    "compare": {"reps": 100, "m_prime": FULL["m_prime"], "m": FULL["m"]},
    "abc": {"M_prime": FULL["m_prime"], "M": FULL["m"]},
}


def _resolve(args) -> dict:
    cfg = dict(DEFAULTS[args.command])
    if args.paper_scale:
        cfg.update(PAPER_SCALE.get(args.command, {}))
    if args.config:
        given = load_json(args.config)
        if not isinstance(given, dict):
            raise InputError(f"{args.config}: expected a JSON object")
        if "config" in given and "command" in given:
            if given["command"] != args.command:
                raise InputError(f"manifest is for command {given['command']!r}, not {args.command!r}")
            given = given["config"]
        unknown = sorted(set(given) - set(cfg) - {"seed", "workers", "n"})
        if unknown:
            raise InputError(f"{args.config}: unknown field(s) {', '.join(unknown)}")
        cfg.update(given)
    for key in ("spec", "sample", "obs", "n", "n_boot"):
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    for key in ("spec", "sample", "obs"):
        if cfg.get(key):
            cfg[key] = str(Path(cfg[key]).resolve())
    if args.seed is not None:
        cfg["seed"] = args.seed
    elif "seed" not in cfg:
        cfg["seed"] = default_master()
    if args.workers is not None:
        cfg["workers"] = args.workers
    cfg.setdefault("workers", os.cpu_count() or 1)
    return cfg


class Run:
    """Output directory plus its manifest."""

    def __init__(self, command: str, cfg: dict, out):
        self.command = command
        self.cfg = cfg
        self.out = Path(out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.outputs: list[str] = []

    def path(self, name: str) -> Path:
        self.outputs.append(name)
        return self.out / name

    def manifest(self, status: str, error: str | None = None):
        doc = {
            "command": self.command,
            "config": self.cfg,
            "seed": self.cfg.get("seed"),
            "version": __version__,
            "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
            "status": status,
            "outputs": self.outputs,
        }
        if error:
            doc["error"] = error
        write_json(doc, self.out / "manifest.json")


def _require(cfg: dict, key: str, flag: str):
    if not cfg.get(key):
        raise InputError(f"missing input: pass {flag} or set {key!r} in --config")
    return cfg[key]


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_sample(cfg: dict, run: Run):
    spec = load_model_spec(_require(cfg, "spec", "a spec file"))
    n = int(cfg["n"])
    if n < 1:
        raise InputError("n must be positive")
    if isinstance(spec, CLParams):
        sample = sample_cl(spec, n, cfg["seed"])
        meta = {"spec": spec.to_json(), "n": n, "seed": cfg["seed"]}
    else:
        sample = sample_liebscher(spec, n, cfg["seed"])
        meta = {"spec": spec.to_json(), "n": n, "seed": cfg["seed"]}
    side = write_sample_csv(sample, run.path("sample.csv"), meta)
    run.outputs.append(side.name)


def _analytic(spec) -> dict:
    if isinstance(spec, CLParams):
        return dependence_report(spec).to_json()
    if spec.is_comonotonic and spec.d == 2:
        return dependence_report(CLParams.from_spec(spec)).to_json()
    if spec.d == 2 and spec.is_power:
        lam_l, lam_u = liebscher_tail_coefficients(spec)
        return {"lambda_L": lam_l, "lambda_U": lam_u}
    raise InvalidParameter("analytic report needs a bivariate power-transform spec")


def _empirical(sample, cfg: dict, run: Run) -> dict:
    x = sample.data
    kfun = kendall_distribution(x)
    write_kendall_csv(kfun, run.path("kendall.csv"))
    test = cvm_asymmetry_pvalue(x, int(cfg["n_boot"]), cfg["seed"])
    return {
        "n": sample.n,
        "tau": kendall_tau(x),
        "rho": spearman_rho(x),
        "tau_se": kendall_tau_se(sample.n),
        "symmetry": test.to_json(),
    }


def cmd_analyze(cfg: dict, run: Run):
    if not cfg.get("spec") and not cfg.get("sample"):
        raise InputError("analyze needs --spec and/or --sample")
    spec = load_model_spec(cfg["spec"]) if cfg.get("spec") else None
    sample = read_sample_csv(cfg["sample"]) if cfg.get("sample") else None
    report = {}
    if spec is not None:
        report["analytic"] = _analytic(spec)
    if sample is not None:
        report["empirical"] = _empirical(sample, cfg, run)
    if spec is not None and sample is not None and "tau" in report["analytic"]:
        gap = abs(report["empirical"]["tau"] - report["analytic"]["tau"])
        report["tau_consistent"] = bool(gap <= 3.0 * report["empirical"]["tau_se"])
    write_json(report, run.path("report.json"))


def cmd_symtest(cfg: dict, run: Run):
    sample = read_sample_csv(_require(cfg, "sample", "a sample file"))
    test = cvm_asymmetry_pvalue(sample.data, int(cfg["n_boot"]), cfg["seed"])
    write_json(test.to_json(), run.path("symtest.json"))


def cmd_abc(cfg: dict, run: Run):
    obs = read_sample_csv(_require(cfg, "obs", "an observed sample file"))
    if cfg.get("n") is not None and int(cfg["n"]) != obs.n:
        raise InputError(f"manifest says n = {cfg['n']} but the sample has {obs.n} rows")
    cfg["n"] = obs.n
    prior = PriorSpec.from_json(
        {"prior": cfg["prior"], "xi": cfg["xi"], "K_max": cfg["K_max"], "size": cfg.get("size"),
         "prob": cfg.get("prob"), "theta": cfg.get("theta")}
    )
    model = model_from_json(cfg["model"], cfg.get("bases"), obs.d)
    acfg = AbcConfig(int(cfg["M_prime"]), int(cfg["M"]), cfg["seed"], int(cfg["workers"]))
    res = run_abc(obs.data, prior, acfg, model)
    write_retained_csv(res, run.path("retained.csv"))
    write_summaries_json(posterior_summaries(res), run.path("summaries.json"))
    write_posterior_rho_csv(res, run.path("posterior_rho.csv"))


def _table(cfg: dict, run: Run, which: str):
    kw = dict(reps=int(cfg["reps"]), m_prime=int(cfg["m_prime"]), m=int(cfg["m"]), n=int(cfg["n"]),
              seed=cfg["seed"], workers=int(cfg["workers"]), n_boot=int(cfg["n_boot"]),
              xi=float(cfg["xi"]), k_max=int(cfg["K_max"]))
    if which == "table1":
        reps, label = table1(k_values=[int(k) for k in cfg["K"]], **kw), "K"
    else:
        reps, label = table2(sigma2_values=[float(s) for s in cfg["sigma2"]], **kw), "sigma2"
    write_replicates_csv(reps, run.path(f"{which}_replicates.csv"), label)
    write_table_csv(reps, run.path(f"{which}.csv"), label)


def cmd_compare(cfg: dict, run: Run):
    truth = CIParams(**cfg["truth"])
    acfg = AbcConfig(int(cfg["m_prime"]), int(cfg["m"]), cfg["seed"], int(cfg["workers"]))
    rows = compare_abc_mle(truth, [int(n) for n in cfg["n_list"]], int(cfg["reps"]), acfg,
                           cfg["seed"], int(cfg["starts"]))
    write_compare_csv(rows, run.path("compare.csv"))


COMMANDS = {
    "sample": cmd_sample,
    "analyze": cmd_analyze,
    "abc": cmd_abc,
    "table1": lambda cfg, run: _table(cfg, run, "table1"),
    "table2": lambda cfg, run: _table(cfg, run, "table2"),
    "compare": cmd_compare,
    "symtest": cmd_symtest,
}


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help=f"master seed (fallback: ${SEED_ENV}, then a fixed default)")
    common.add_argument("--out", default=".", help="output directory (default: current directory)")
    common.add_argument("--workers", type=int, help="worker threads (default: all cores)")
    common.add_argument("--paper-scale", action="store_true", help="use the full-size experiment settings")
    common.add_argument("--config", help="JSON config, or a manifest.json from an earlier run")

    parser = argparse.ArgumentParser(prog="liebscher", description="Liebscher copula toolkit")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", parents=[common], help="draw a sample from a spec")
    p.add_argument("spec", nargs="?", help="LiebscherSpec or {p, q} JSON file")
    p.add_argument("-n", type=int, help="number of rows")

    p = sub.add_parser("analyze", parents=[common], help="dependence report for a spec and/or sample")
    p.add_argument("--spec", help="LiebscherSpec or {p, q} JSON file")
    p.add_argument("--sample", help="sample CSV")
    p.add_argument("--n-boot", dest="n_boot", type=int)

    p = sub.add_parser("abc", parents=[common], help="rejection ABC on an observed sample")
    p.add_argument("obs", nargs="?", help="observed sample CSV")

    for name, text in (("table1", "ABC accuracy against K"), ("table2", "ABC accuracy under noisy exponents"),
                       ("compare", "ABC against maximum likelihood")):
        sub.add_parser(name, parents=[common], help=text)

    p = sub.add_parser("symtest", parents=[common], help="bootstrap symmetry test")
    p.add_argument("sample", nargs="?", help="sample CSV")
    p.add_argument("--n-boot", dest="n_boot", type=int)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _resolve(args)
        run = Run(args.command, cfg, args.out)
    except (InputError, InvalidParameter, OSError) as exc:
        print(f"liebscher {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        COMMANDS[args.command](cfg, run)
    except (InputError, InvalidParameter) as exc:
        run.manifest("FAILED", str(exc))
        print(f"liebscher {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (LiebscherError, ArithmeticError, ValueError, OSError) as exc:
        run.manifest("FAILED", f"{type(exc).__name__}: {exc}")
        print(f"liebscher {args.command}: failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    run.manifest("ok")
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
