"""Rejection ABC for Liebscher copulas with the Hilbert-curve distance.

Iteration ``s`` of a run draws its parameters from ``seed.child(s, 0)`` and
its synthetic sample from ``seed.child(s, 1)``.  Nothing else is stored for
the retained draws: their samples are regenerated from those addresses when
the evaluation metrics need them.
"""

from __future__ import annotations

import csv
import json
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .analytics import CLParams, kendall_tau_cl, spearman_rho_cl
from .core import K_MAX, BaseCopula, cl_exponents_to_iterative, component_exponents, liebscher_spec
from .empirical import (
    N_BOOT,
    cvm_asymmetry_pvalue,
    hilbert_distance,
    hilbert_order,
    kendall_distribution,
    spearman_rho,
)
from .errors import DegenerateObserved, InvalidParameter, PriorUnsupported
from .rng import Seed, as_seed
from .sampler import as_array, sample_cl, sample_liebscher

RHO_ABS_SWITCH = 0.05
_OPEN_EPS = 1e-12


# ---------------------------------------------------------------------------
# Priors and models
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PriorSpec:
    """Prior on the number of components, the exponents and base parameters.

    ``kind="zipf"``: P(K = k) proportional to (k - 1) ** -xi on 2..k_max.
    ``kind="binomial"``: K = 2 + Binomial(size, prob).
    Free exponents are iid uniform on (0, 1).  ``theta`` is an optional
    (low, high) log-uniform range for base parameters left unset in a
    :class:`LiebscherModel`.
    """

    kind: str = "zipf"
    xi: float = 2.0
    k_max: int = 50
    size: int | None = None
    prob: float | None = None
    theta: tuple[float, float] | None = None

    def __post_init__(self):
        if self.kind not in ("zipf", "binomial"):
            raise InvalidParameter(f"unknown prior kind {self.kind!r}")
        if self.kind == "zipf":
            if not self.xi > 1.0:
                raise InvalidParameter("Zipf exponent xi must exceed 1")
            if not 2 <= self.k_max <= K_MAX:
                raise InvalidParameter(f"k_max must lie in [2, {K_MAX}]")
        else:
            if self.size is None or self.prob is None:
                raise InvalidParameter("binomial prior needs size and prob")
            if self.size < 0 or 2 + self.size > K_MAX or not 0.0 <= self.prob <= 1.0:
                raise InvalidParameter("binomial prior parameters out of range")
        if self.theta is not None:
            lo, hi = self.theta
            if not 0 < lo <= hi:
                raise InvalidParameter("theta range must satisfy 0 < low <= high")
            object.__setattr__(self, "theta", (float(lo), float(hi)))

    def k_pmf(self) -> tuple[np.ndarray, np.ndarray]:
        if self.kind == "zipf":
            ks = np.arange(2, self.k_max + 1)
            w = (ks - 1.0) ** -self.xi
            return ks, w / w.sum()
        from scipy.stats import binom

        j = np.arange(self.size + 1)
        return j + 2, binom.pmf(j, self.size, self.prob)

    def draw_K(self, rng: np.random.Generator) -> int:
        if self.kind == "binomial":
            return 2 + int(rng.binomial(self.size, self.prob))
        ks, pmf = self.k_pmf()
        return int(ks[np.searchsorted(np.cumsum(pmf), rng.random(), side="right").clip(max=ks.size - 1)])

    def draw_theta(self, rng: np.random.Generator) -> float:
        if self.theta is None:
            raise PriorUnsupported("model has base parameters but the prior gives no theta range")
        lo, hi = np.log(self.theta)
        return float(np.exp(rng.uniform(lo, hi)))

    def to_json(self) -> dict:
        out = {"prior": self.kind, "xi": self.xi, "K_max": self.k_max}
        if self.kind == "binomial":
            out.update(size=self.size, prob=self.prob)
        if self.theta is not None:
            out["theta"] = list(self.theta)
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "PriorSpec":
        theta = obj.get("theta")
        return cls(
            kind=obj.get("prior", "zipf"),
            xi=float(obj.get("xi", 2.0)),
            k_max=int(obj.get("K_max", 50)),
            size=obj.get("size"),
            prob=obj.get("prob"),
            theta=tuple(theta) if theta is not None else None,
        )


@dataclass(frozen=True)
class Draw:
    K: int
    A: np.ndarray
    theta: tuple = ()


def _free_exponents(rng: np.random.Generator, K: int, d: int) -> np.ndarray:
    A = np.ones((K, d))
    A[1:] = rng.random((K - 1, d))
    return A


@dataclass(frozen=True)
class CLModel:
    """Comonotonic-based copula with the number of components unknown."""

    d: int = 2
    name = "cl"

    def draw(self, prior: PriorSpec, rng: np.random.Generator) -> Draw:
        K = prior.draw_K(rng)
        return Draw(K, _free_exponents(rng, K, self.d))

    def simulate(self, draw: Draw, n: int, seed: Seed) -> np.ndarray:
        return sample_cl(draw.A, n, seed).data

    def bases_json(self) -> list:
        return [{"kind": "comonotonic"}]


@dataclass(frozen=True)
class LiebscherModel:
    """Fixed list of base copulas; only exponents and unset thetas are inferred.

    Base copulas created with ``theta=None`` get a value from the prior's
    log-uniform theta range at every iteration.
    """

    bases: tuple
    d: int = 2
    name = "liebscher"

    def __post_init__(self):
        bases = tuple(b if isinstance(b, BaseCopula) else BaseCopula.from_json(b) for b in self.bases)
        if len(bases) < 1:
            raise InvalidParameter("need at least one base copula")
        object.__setattr__(self, "bases", bases)

    @property
    def K(self) -> int:
        return len(self.bases)

    def check_prior(self, prior: PriorSpec):
        if any(not b.resolved for b in self.bases) and prior.theta is None:
            raise PriorUnsupported("model has base parameters but the prior gives no theta range")

    def draw(self, prior: PriorSpec, rng: np.random.Generator) -> Draw:
        A = _free_exponents(rng, self.K, self.d)
        A[1:] = np.clip(A[1:], _OPEN_EPS, 1.0 - _OPEN_EPS)
        theta = tuple(prior.draw_theta(rng) for b in self.bases if not b.resolved)
        return Draw(self.K, A, theta)

    def spec(self, draw: Draw):
        it = iter(draw.theta)
        bases = [b if b.resolved else b.with_theta(next(it)) for b in self.bases]
        return liebscher_spec(bases, draw.A)

    def simulate(self, draw: Draw, n: int, seed: Seed) -> np.ndarray:
        return sample_liebscher(self.spec(draw), n, seed).data

    def bases_json(self) -> list:
        return [b.to_json() for b in self.bases]


def model_from_json(name: str, bases=None, d: int = 2):
    if name == "cl":
        return CLModel(d)
    if name == "liebscher":
        if not bases:
            raise InvalidParameter("model 'liebscher' needs a list of bases")
        return LiebscherModel(tuple(BaseCopula.from_json(b) for b in bases), d)
    raise InvalidParameter(f"unknown model {name!r}")


# ---------------------------------------------------------------------------
# Runs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AbcConfig:
    m_prime: int
    m: int
    seed: int | Seed | None = None
    workers: int = 1

    def __post_init__(self):
        if not 1 <= self.m <= self.m_prime:
            raise InvalidParameter(f"need 1 <= M <= M', got M = {self.m}, M' = {self.m_prime}")
        object.__setattr__(self, "seed", as_seed(self.seed))

    @property
    def quantile(self) -> float:
        return self.m / self.m_prime


@dataclass(frozen=True, eq=False)
class AbcResult:
    """Retained draws of one run, sorted by distance (ties by iteration)."""

    model: object
    prior: PriorSpec
    seed: Seed
    n: int
    m_prime: int
    iterations: np.ndarray
    draws: tuple
    distances: np.ndarray
    all_distances: np.ndarray | None = field(default=None, repr=False)

    @property
    def m(self) -> int:
        return len(self.draws)

    @property
    def threshold(self) -> float:
        return float(self.distances.max())

    @property
    def K(self) -> np.ndarray:
        return np.array([dr.K for dr in self.draws])

    def synthetic(self, i: int) -> np.ndarray:
        """Regenerate the synthetic sample of the i-th retained draw."""
        return self.model.simulate(self.draws[i], self.n, self.seed.child(int(self.iterations[i]), 1))

    def synthetic_samples(self):
        for i in range(self.m):
            yield self.synthetic(i)


def _iteration(model, prior, seed: Seed, s: int, n: int, obs, order_obs):
    draw = model.draw(prior, seed.child(s, 0).generator())
    z = model.simulate(draw, n, seed.child(s, 1))
    return draw, hilbert_distance(obs, z, order_y=order_obs)


def _run_block(model, prior, seed, start, stop, n, obs, order_obs):
    return [_iteration(model, prior, seed, s, n, obs, order_obs) for s in range(start, stop)]


def run_abc(obs, prior: PriorSpec, cfg: AbcConfig, model=None) -> AbcResult:
    """Rejection ABC keeping the M draws with the smallest Hilbert distance."""
    obs = np.ascontiguousarray(as_array(obs))
    n, d = obs.shape
    if n < 2:
        raise InvalidParameter("observed sample needs at least two rows")
    model = CLModel(d) if model is None else model
    if model.d != d:
        raise InvalidParameter(f"model dimension {model.d} does not match data dimension {d}")
    if hasattr(model, "check_prior"):
        model.check_prior(prior)
    order_obs = hilbert_order(obs)
    seed = cfg.seed
    workers = max(1, int(cfg.workers or 1))
    if workers == 1:
        out = _run_block(model, prior, seed, 0, cfg.m_prime, n, obs, order_obs)
    else:
        edges = np.linspace(0, cfg.m_prime, 4 * workers + 1).astype(int)
        with ThreadPoolExecutor(workers) as pool:
            futures = [
                pool.submit(_run_block, model, prior, seed, a, b, n, obs, order_obs)
                for a, b in zip(edges[:-1], edges[1:])
            ]
            out = [item for f in futures for item in f.result()]
    dist = np.array([d_ for _, d_ in out])
    keep = np.lexsort((np.arange(cfg.m_prime), dist))[: cfg.m]
    return AbcResult(
        model=model,
        prior=prior,
        seed=seed,
        n=n,
        m_prime=cfg.m_prime,
        iterations=keep,
        draws=tuple(out[i][0] for i in keep),
        distances=dist[keep],
        all_distances=dist,
    )


# ---------------------------------------------------------------------------
# Evaluation metrics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RelativeErrors:
    eta_K: float
    eta_rho: float
    rho_mode: str
    per_draw_K: np.ndarray = field(repr=False)
    per_draw_rho: np.ndarray = field(repr=False)

    def __iter__(self):
        return iter((self.eta_K, self.eta_rho))


def relative_errors(obs, result: AbcResult, samples=None) -> RelativeErrors:
    """Mean relative L1 error of Kendall's distribution and of Spearman's rho.

    When the observed rho is nonzero but below 0.05 in absolute value the
    rho error is reported on the absolute scale (with a warning).
    """
    obs = as_array(obs)
    rho_obs = spearman_rho(obs)
    if rho_obs == 0.0:
        raise DegenerateObserved("observed Spearman rho is exactly 0; relative error undefined")
    mode = "relative"
    scale = abs(rho_obs)
    if scale < RHO_ABS_SWITCH:
        warnings.warn(f"|rho_obs| = {scale:.3g} < {RHO_ABS_SWITCH}; using absolute rho error", RuntimeWarning)
        mode, scale = "absolute", 1.0
    k_obs = kendall_distribution(obs)
    norm = k_obs.l1_norm()
    samples = result.synthetic_samples() if samples is None else samples
    ek, er = [], []
    for z in samples:
        ek.append(k_obs.l1_distance(kendall_distribution(z)) / norm)
        er.append(abs(rho_obs - spearman_rho(z)) / scale)
    ek, er = np.array(ek), np.array(er)
    return RelativeErrors(float(ek.mean()), float(er.mean()), mode, ek, er)


@dataclass(frozen=True)
class Concordance:
    concordance: float
    pvalue_obs: float
    pvalues: np.ndarray = field(repr=False)

    @property
    def mismatch(self) -> float:
        return 1.0 - self.concordance

    def to_json(self) -> dict:
        return {
            "concordance": self.concordance,
            "mismatch": self.mismatch,
            "pvalue_obs": self.pvalue_obs,
            "pvalues": self.pvalues.tolist(),
        }


def test_concordance(obs, result: AbcResult, level: float = 0.05, n_boot: int = N_BOOT, seed=None, samples=None):
    """Fraction of retained samples whose symmetry-test decision matches obs."""
    seed = as_seed(seed)
    p_obs = cvm_asymmetry_pvalue(obs, n_boot, seed.child(0)).pvalue
    samples = result.synthetic_samples() if samples is None else samples
    pv = np.array([cvm_asymmetry_pvalue(z, n_boot, seed.child(i + 1)).pvalue for i, z in enumerate(samples)])
    same = (pv < level) == (p_obs < level)
    return Concordance(float(same.mean()), p_obs, pv)


test_concordance.__test__ = False


def _mean_median(x: np.ndarray) -> dict:
    return {"mean": np.mean(x, axis=0).tolist(), "median": np.median(x, axis=0).tolist()}


def canonical_cl_matrix(A) -> np.ndarray:
    """Relabel the components of a comonotonic-based draw.

    The comonotonic product is invariant under permutations of its
    components, so ``A`` is only identified up to relabelling (for K = 2,
    a = (0.4, 0.8) and a = (0.6, 0.2) give the same copula).  The canonical
    representative has the product exponents of the last component with the
    smallest slope p/q, then increasing slopes towards the first.
    """
    E = component_exponents(A)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(E[:, 1] > 0, E[:, 0] / E[:, 1], np.inf)
    order = np.argsort(r, kind="mergesort")
    return cl_exponents_to_iterative(E[order, 0], E[order, 1])


def posterior_summaries(result: AbcResult) -> dict:
    """Posterior mean and median of every parameter, grouped by K.

    Comonotonic-based runs also report the summaries of the canonically
    relabelled matrices under ``"A_canonical"`` (see
    :func:`canonical_cl_matrix`).
    """
    if result.m == 0:
        raise InvalidParameter("empty result")
    Ks = result.K
    values, counts = np.unique(Ks, return_counts=True)
    pmf = counts / counts.sum()
    out = {
        "M": result.m,
        "threshold": result.threshold,
        "K": {
            "mean": float(Ks.mean()),
            "median": float(np.median(Ks)),
            "mode": int(values[np.argmax(counts)]),
            "pmf": {str(int(k)): float(w) for k, w in zip(values, pmf)},
        },
        "A": {},
    }
    for k in values:
        idx = np.nonzero(Ks == k)[0]
        A = np.stack([result.draws[i].A for i in idx])
        out["A"][str(int(k))] = {"count": int(idx.size), **_mean_median(A)}
    thetas = [dr.theta for dr in result.draws if dr.theta]
    if thetas:
        out["theta"] = _mean_median(np.array(thetas))
    if isinstance(result.model, CLModel) and result.model.d == 2:
        out["A_canonical"] = {}
        for k in values:
            A = np.stack([canonical_cl_matrix(dr.A) for dr in result.draws if dr.K == k])
            out["A_canonical"][str(int(k))] = {"count": int(A.shape[0]), **_mean_median(A)}
        rho = posterior_rho(result)
        tau = np.array([kendall_tau_cl(CLParams.from_A(dr.A)) for dr in result.draws])
        out["rho"] = _mean_median(rho)
        out["tau"] = _mean_median(tau)
    return out


def posterior_rho(result: AbcResult) -> np.ndarray:
    """Closed-form Spearman rho of each retained comonotonic-based draw."""
    return np.array([spearman_rho_cl(CLParams.from_A(dr.A)) for dr in result.draws])


# ---------------------------------------------------------------------------
# Exports
# ---------------------------------------------------------------------------


def _fmt(x) -> str:
    return format(float(x), ".17g")


def write_retained_csv(result: AbcResult, path):
    """One row per retained draw: iteration, K, flattened A (padded), thetas, distance."""
    d = result.draws[0].A.shape[1]
    k_top = max(dr.K for dr in result.draws)
    n_theta = max(len(dr.theta) for dr in result.draws)
    header = ["iteration", "K"]
    header += [f"a{k + 1}_{j + 1}" for k in range(k_top) for j in range(d)]
    header += [f"theta{i + 1}" for i in range(n_theta)] + ["distance"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for it, dr, dist in zip(result.iterations, result.draws, result.distances):
            flat = [_fmt(a) for a in dr.A.ravel()] + [""] * ((k_top - dr.K) * d)
            w.writerow([int(it), dr.K, *flat, *[_fmt(t) for t in dr.theta], _fmt(dist)])


def write_summaries_json(summary: dict, path):
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")


def write_posterior_rho_csv(result: AbcResult, path, empirical: np.ndarray | None = None):
    """Per-draw rho: closed form for comonotonic-based draws, else empirical."""
    analytic = posterior_rho(result) if isinstance(result.model, CLModel) else None
    if empirical is None and analytic is None:
        empirical = np.array([spearman_rho(z) for z in result.synthetic_samples()])
    header = ["iteration", "K", "distance"]
    header += ["rho"] if analytic is not None else []
    header += ["rho_hat"] if empirical is not None else []
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i, (it, dr, dist) in enumerate(zip(result.iterations, result.draws, result.distances)):
            row = [int(it), dr.K, _fmt(dist)]
            if analytic is not None:
                row.append(_fmt(analytic[i]))
            if empirical is not None:
                row.append(_fmt(empirical[i]))
            w.writerow(row)
