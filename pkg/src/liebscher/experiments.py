"""Simulation studies: ABC accuracy against the number of components, and
against row-wise noise in the exponents."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .abc import AbcConfig, CLModel, PriorSpec, relative_errors, run_abc, test_concordance
from .empirical import N_BOOT
from .rng import as_seed
from .sampler import NoiseSpec, sample_cl, sample_cl_noisy

DESK = {"reps": 5, "m_prime": 2000, "m": 100, "n": 500}
FULL = {"reps": 20, "m_prime": 10_000, "m": 300, "n": 500}
K_VALUES = (2, 3, 4, 5)
SIGMA2_VALUES = (0.0, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1)
NOISE_MEAN = ((1.0, 1.0), (0.4, 0.8))
TRUTH_RANGE = (0.1, 0.9)
METRICS = ("eta_K", "eta_rho", "f_test")


@dataclass(frozen=True)
class Replicate:
    column: object
    rep: int
    eta_K: float
    eta_rho: float
    f_test: float | None
    threshold: float


def evaluate(obs, result, n_boot: int, seed) -> tuple[float, float, float | None]:
    """(eta_K, eta_rho, mismatch fraction) for one ABC run.

    ``n_boot = 0`` skips the symmetry test, which dominates the cost.
    """
    samples = list(result.synthetic_samples())
    err = relative_errors(obs, result, samples=samples)
    f = None
    if n_boot > 0:
        f = test_concordance(obs, result, n_boot=n_boot, seed=seed, samples=samples).mismatch
    return err.eta_K, err.eta_rho, f


def _one(column, rep, obs, prior, m_prime, m, seed, workers, n_boot):
    res = run_abc(obs, prior, AbcConfig(m_prime, m, seed.child(1), workers), CLModel(obs.shape[1]))
    ek, er, f = evaluate(obs, res, n_boot, seed.child(2))
    return Replicate(column, rep, ek, er, f, res.threshold)


def truth_matrix(K: int, rng: np.random.Generator, d: int = 2) -> np.ndarray:
    A = np.ones((K, d))
    A[1:] = rng.uniform(*TRUTH_RANGE, size=(K - 1, d))
    return A


def table1(
    k_values=K_VALUES,
    reps=DESK["reps"],
    m_prime=DESK["m_prime"],
    m=DESK["m"],
    n=DESK["n"],
    seed=None,
    workers=1,
    n_boot=N_BOOT,
    xi=2.0,
    k_max=50,
) -> list[Replicate]:
    """ABC on comonotonic-based data with K components, per K and replicate.

    Replicate ``r`` for column ``K`` uses the stream ``seed.child(K, r)``:
    sub-stream 0 draws the true exponents and the observed sample, 1 drives
    the ABC run and 2 the symmetry tests.
    """
    seed = as_seed(seed)
    prior = PriorSpec(xi=xi, k_max=k_max)
    out = []
    for K in k_values:
        for r in range(reps):
            s = seed.child(int(K), r)
            A = truth_matrix(int(K), s.child(0, 0).generator())
            obs = sample_cl(A, n, s.child(0, 1)).data
            out.append(_one(int(K), r, obs, prior, m_prime, m, s, workers, n_boot))
    return out


def table2(
    sigma2_values=SIGMA2_VALUES,
    reps=DESK["reps"],
    m_prime=DESK["m_prime"],
    m=DESK["m"],
    n=DESK["n"],
    seed=None,
    workers=1,
    n_boot=N_BOOT,
    mean=NOISE_MEAN,
    xi=2.0,
    k_max=50,
) -> list[Replicate]:
    """ABC with the exact model on data whose exponents are Beta-perturbed.

    Replicate ``r`` of noise level number ``i`` uses ``seed.child(i, r)``.
    A variance of 0 means unperturbed data.
    """
    seed = as_seed(seed)
    prior = PriorSpec(xi=xi, k_max=k_max)
    M = np.asarray(mean, dtype=float)
    out = []
    for i, var in enumerate(sigma2_values):
        for r in range(reps):
            s = seed.child(i, r)
            if var == 0:
                obs = sample_cl(M, n, s.child(0, 1)).data
            else:
                obs = sample_cl_noisy(NoiseSpec(M, var), n, s.child(0, 1)).data
            out.append(_one(float(var), r, obs, prior, m_prime, m, s, workers, n_boot))
    return out


def summarize(replicates: list[Replicate]) -> dict:
    """column -> metric -> (mean, sd); sd uses ddof = 1 (0 for one replicate)."""
    cols: dict = {}
    for rep in replicates:
        cols.setdefault(rep.column, []).append(rep)
    out = {}
    for col, reps in cols.items():
        out[col] = {}
        for metric in METRICS:
            vals = np.array([getattr(r, metric) for r in reps if getattr(r, metric) is not None], dtype=float)
            if vals.size == 0:
                out[col][metric] = (float("nan"), float("nan"))
            else:
                sd = float(vals.std(ddof=1)) if vals.size > 1 else 0.0
                out[col][metric] = (float(vals.mean()), sd)
    return out


def _fmt(x) -> str:
    return format(float(x), ".17g")


def write_table_csv(replicates: list[Replicate], path, label: str):
    """Wide table: one row per metric, a mean and an sd column per setting."""
    summary = summarize(replicates)
    cols = list(summary)
    header = ["metric"]
    for c in cols:
        header += [f"{label}={c}", f"{label}={c}_sd"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for metric in METRICS:
            row = [metric]
            for c in cols:
                mu, sd = summary[c][metric]
                row += [_fmt(mu), _fmt(sd)]
            w.writerow(row)


def write_replicates_csv(replicates: list[Replicate], path, label: str):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([label, "rep", *METRICS, "threshold"])
        for r in replicates:
            f = "" if r.f_test is None else _fmt(r.f_test)
            w.writerow([r.column, r.rep, _fmt(r.eta_K), _fmt(r.eta_rho), f, _fmt(r.threshold)])
