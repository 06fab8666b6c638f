"""Maximum pseudo-likelihood for the Clayton x independence Liebscher copula

    C(u, v) = C_theta(u**p, v**q) * u**(1 - p) * v**(1 - q),

and the harness comparing it with ABC posterior point estimates.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit, logit, logsumexp

from .abc import AbcConfig, LiebscherModel, PriorSpec, posterior_summaries, run_abc
from .core import Clayton, Independence, LiebscherSpec, liebscher_spec
from .empirical import pseudo_observations
from .errors import DimensionError, DomainError, InvalidParameter, NonConvergence
from .rng import as_seed
from .sampler import as_array, sample_liebscher

THETA_START = (0.5, 20.0)
PQ_START = (0.05, 0.95)
FATOL = 1e-8
MAXFEV = 10_000


@dataclass(frozen=True)
class CIParams:
    theta: float
    p: float
    q: float

    def __post_init__(self):
        if not (self.theta > 0 and np.isfinite(self.theta)):
            raise InvalidParameter(f"theta = {self.theta!r} must be > 0")
        for name in ("p", "q"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise InvalidParameter(f"{name} = {v!r} must lie in (0, 1)")
        for name in ("theta", "p", "q"):
            object.__setattr__(self, name, float(getattr(self, name)))

    def spec(self) -> LiebscherSpec:
        """Independence in the first slot, Clayton with exponents (p, q) in the second."""
        return liebscher_spec([Independence(), Clayton(self.theta)], [[1.0, 1.0], [self.p, self.q]])

    def to_unconstrained(self) -> np.ndarray:
        return np.array([np.log(self.theta), logit(self.p), logit(self.q)])

    @classmethod
    def from_unconstrained(cls, z) -> "CIParams":
        return cls(float(np.exp(z[0])), float(expit(z[1])), float(expit(z[2])))

    def to_json(self) -> dict:
        return {"theta": self.theta, "p": self.p, "q": self.q}


def _log_w(x, y):
    """log(e**x + e**y - 1) for x, y >= 0 without overflow or cancellation."""
    hi = np.maximum(x, y)
    lo = np.minimum(x, y)
    with np.errstate(over="ignore"):
        small = np.log1p(np.expm1(x) + np.expm1(y))
    large = hi + np.log1p(np.exp(lo - hi) - np.exp(-hi))
    return np.where(hi < 0.5, small, large)


def _log_density(theta, p, q, u, v):
    lu, lv = np.log(u), np.log(v)
    ls, lt = p * lu, q * lv
    lw = _log_w(-theta * ls, -theta * lt)
    # product rule on C1(s, t) * (u / s) * (v / t) with s = u**p, t = v**q
    t1 = np.log(p * q) + np.log1p(theta) - (theta + 1.0) * (ls + lt) - (1.0 / theta + 2.0) * lw
    t2 = np.log(p * (1.0 - q)) - (theta + 1.0) * ls - (1.0 / theta + 1.0) * lw - lt
    t3 = np.log(q * (1.0 - p)) - (theta + 1.0) * lt - (1.0 / theta + 1.0) * lw - ls
    t4 = np.log((1.0 - p) * (1.0 - q)) - lw / theta - ls - lt
    with np.errstate(divide="ignore"):
        terms = np.stack(np.broadcast_arrays(t1, t2, t3, t4))
    return logsumexp(terms, axis=0)


def _check_open(u, v):
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.any(~((u > 0) & (u < 1))) or np.any(~((v > 0) & (v < 1))):
        raise DomainError("density is only defined on the open unit square")
    return u, v


def ci_log_density(params: CIParams, u, v):
    u, v = _check_open(u, v)
    return _log_density(params.theta, params.p, params.q, u, v)


def ci_density(params: CIParams, u, v):
    """Copula density on (0, 1)^2; raises DomainError on the boundary."""
    out = np.exp(ci_log_density(params, u, v))
    return out if np.ndim(out) else float(out)


def loglik(params: CIParams, u) -> float:
    u = np.asarray(u, dtype=float)
    return float(np.sum(ci_log_density(params, u[:, 0], u[:, 1])))


def _nll(z, u, v):
    theta, p, q = np.exp(z[0]), expit(z[1]), expit(z[2])
    if not (np.isfinite(theta) and theta > 0 and 0 < p < 1 and 0 < q < 1):
        return np.inf
    val = -np.sum(_log_density(theta, p, q, u, v))
    return val if np.isfinite(val) else np.inf


@dataclass(frozen=True)
class MLEFit:
    params: CIParams
    loglik: float
    converged: bool
    n_converged: int
    starts: int

    def __iter__(self):
        return iter((self.params, self.loglik, self.converged))


def start_points(starts: int, seed) -> np.ndarray:
    rng = as_seed(seed).generator()
    lo, hi = np.log(THETA_START)
    theta = np.exp(rng.uniform(lo, hi, starts))
    pq = rng.uniform(*PQ_START, size=(starts, 2))
    return np.column_stack([theta, pq])


def fit_mle(s, starts: int = 8, seed=None, pseudo: bool = True) -> MLEFit:
    """Multi-start Nelder-Mead over (log theta, logit p, logit q).

    The data are rank-transformed first unless ``pseudo=False``.  Returns
    the best start that met the simplex tolerance; ties in the
    log-likelihood go to the lower start index.
    """
    x = as_array(s)
    if x.shape[1] != 2:
        raise DimensionError("the Clayton x independence model is bivariate")
    u = pseudo_observations(x) if pseudo else x
    a, b = u[:, 0], u[:, 1]
    best = None
    n_ok = 0
    for theta0, p0, q0 in start_points(starts, seed):
        z0 = CIParams(theta0, p0, q0).to_unconstrained()
        res = minimize(
            _nll, z0, args=(a, b), method="Nelder-Mead",
            options={"fatol": FATOL, "xatol": 1e-7, "maxfev": MAXFEV},
        )
        if not res.success or not np.isfinite(res.fun):
            continue
        n_ok += 1
        if best is None or res.fun < best.fun:
            best = res
    if best is None:
        raise NonConvergence(f"none of {starts} starts converged within {MAXFEV} evaluations")
    return MLEFit(CIParams.from_unconstrained(best.x), float(-best.fun), True, n_ok, starts)


def fit_mle_constrained(s, x0: CIParams, pseudo: bool = True) -> MLEFit:
    """Bounded Nelder-Mead in the native (theta, p, q) coordinates.

    A check on the reparameterisation used by :func:`fit_mle`.
    """
    x = as_array(s)
    u = pseudo_observations(x) if pseudo else x
    a, b = u[:, 0], u[:, 1]

    def nll(w):
        theta, p, q = w
        return -np.sum(_log_density(theta, p, q, a, b))

    res = minimize(
        nll, [x0.theta, x0.p, x0.q], method="Nelder-Mead",
        bounds=[(1e-6, 100.0), (1e-9, 1 - 1e-9), (1e-9, 1 - 1e-9)],
        options={"fatol": 1e-12, "xatol": 1e-10, "maxfev": MAXFEV},
    )
    if not res.success:
        raise NonConvergence(res.message)
    return MLEFit(CIParams(*res.x), float(-res.fun), True, 1, 1)


# ---------------------------------------------------------------------------
# ABC vs MLE
# ---------------------------------------------------------------------------


def ci_model() -> LiebscherModel:
    return LiebscherModel((Independence(), Clayton(None)))


def ci_prior() -> PriorSpec:
    return PriorSpec(theta=THETA_START)


COMPARE_COLUMNS = ["rep", "n", "method", "parameter", "estimate", "runtime_ms"]


def compare_abc_mle(truth: CIParams, n_list, reps: int, cfg: AbcConfig, seed=None, starts: int = 8):
    """Long-format rows: one per (rep, n, method, parameter).

    Methods are ``mle``, ``abc_mean`` and ``abc_median``; the two ABC rows
    share the runtime of one ABC run.  Data for (rep, n) come from stream
    ``seed.child(rep, n, 0)``, the MLE starts from ``(rep, n, 1)`` and the
    ABC run from ``(rep, n, 2)``.
    """
    seed = as_seed(seed)
    spec = truth.spec()
    model, prior = ci_model(), ci_prior()
    rows = []
    for rep in range(reps):
        for n in n_list:
            data = sample_liebscher(spec, n, seed.child(rep, n, 0)).data
            t0 = time.perf_counter()
            fit = fit_mle(data, starts=starts, seed=seed.child(rep, n, 1))
            t_mle = (time.perf_counter() - t0) * 1e3
            t0 = time.perf_counter()
            res = run_abc(
                data, prior, AbcConfig(cfg.m_prime, cfg.m, seed.child(rep, n, 2), cfg.workers), model
            )
            summ = posterior_summaries(res)
            t_abc = (time.perf_counter() - t0) * 1e3
            a_sum = summ["A"]["2"]
            est = {
                "mle": fit.params.to_json(),
                "abc_mean": {"theta": summ["theta"]["mean"][0], "p": a_sum["mean"][1][0], "q": a_sum["mean"][1][1]},
                "abc_median": {
                    "theta": summ["theta"]["median"][0],
                    "p": a_sum["median"][1][0],
                    "q": a_sum["median"][1][1],
                },
            }
            for method, values in est.items():
                ms = t_mle if method == "mle" else t_abc
                for par in ("theta", "p", "q"):
                    rows.append({
                        "rep": rep, "n": n, "method": method, "parameter": par,
                        "estimate": float(values[par]), "runtime_ms": ms,
                    })
    return rows


def write_compare_csv(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COMPARE_COLUMNS)
        for r in rows:
            w.writerow([r["rep"], r["n"], r["method"], r["parameter"],
                        format(r["estimate"], ".17g"), format(r["runtime_ms"], ".17g")])
