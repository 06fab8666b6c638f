"""Rank-based statistics on samples and the Hilbert-curve sample distance."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import kendalltau, rankdata

from . import _kernels
from .errors import DegenerateSample, DimensionError, InvalidParameter, ShapeMismatch
from .rng import as_seed
from .sampler import as_array

N_BOOT = 250


def pseudo_observations(x) -> np.ndarray:
    """Column-wise average ranks divided by n + 1."""
    x = as_array(x)
    return rankdata(x, axis=0, method="average") / (x.shape[0] + 1.0)


# ---------------------------------------------------------------------------
# Hilbert curve
# ---------------------------------------------------------------------------


def hilbert_bits(d: int) -> int:
    return 62 // d


def lattice(x, bits: int) -> np.ndarray:
    scaled = np.floor(np.clip(x, 0.0, 1.0) * float(2**bits))
    return np.minimum(scaled, float(2**bits - 1)).astype(np.uint64)


def hilbert_keys(x, bits: int | None = None) -> np.ndarray:
    """Position of each row along the Hilbert curve on the [0,1]^d lattice."""
    x = as_array(x)
    bits = hilbert_bits(x.shape[1]) if bits is None else bits
    if bits < 1 or bits * x.shape[1] > 64:
        raise InvalidParameter(f"{bits} bits per axis do not fit a 64-bit key in d = {x.shape[1]}")
    return _kernels.hilbert_keys(np.ascontiguousarray(lattice(x, bits)), bits)


def hilbert_order(x) -> np.ndarray:
    """Permutation sorting rows by Hilbert key, ties broken lexicographically."""
    x = as_array(x)
    keys = hilbert_keys(x)
    cols = [x[:, j] for j in range(x.shape[1] - 1, -1, -1)]
    return np.lexsort(cols + [keys])


def hilbert_distance(y, z, order_y: np.ndarray | None = None) -> float:
    """Mean Euclidean distance after matching both samples along the curve.

    ``order_y`` may carry a precomputed :func:`hilbert_order` of ``y``.
    """
    y = as_array(y)
    z = as_array(z)
    if y.shape != z.shape:
        raise ShapeMismatch(f"samples have shapes {y.shape} and {z.shape}")
    oy = hilbert_order(y) if order_y is None else order_y
    oz = hilbert_order(z)
    diff = y[oy] - z[oz]
    return float(np.mean(np.sqrt(np.einsum("ij,ij->i", diff, diff))))


# ---------------------------------------------------------------------------
# Kendall's distribution function
# ---------------------------------------------------------------------------


def _bivariate(s) -> np.ndarray:
    x = as_array(s)
    if x.shape[1] != 2:
        raise DimensionError(f"statistic needs bivariate data, got d = {x.shape[1]}")
    return x


def kendall_pseudo_values(s) -> np.ndarray:
    """W_i = #{j : x_j < x_i componentwise} / (n - 1)."""
    x = _bivariate(s)
    n = x.shape[0]
    if n == 1:
        return np.zeros(1)
    a, b = np.ascontiguousarray(x[:, 0]), np.ascontiguousarray(x[:, 1])
    counts = _kernels.dominance_counts(a, b, a, b, True, True)
    return counts / (n - 1.0)


@dataclass(frozen=True, eq=False)
class StepCDF:
    """Right-continuous empirical cdf of values in [0, 1]."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.sort(np.asarray(self.points, dtype=float))
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.searchsorted(self.points, t, side="right") / self.points.size
        return out if out.ndim else float(out)

    @property
    def jumps(self) -> tuple[np.ndarray, np.ndarray]:
        t = np.unique(self.points)
        return t, self(t)

    def l1_norm(self) -> float:
        # integral of 1[W <= t] over [0, 1] is 1 - W
        return float(np.mean(1.0 - np.clip(self.points, 0.0, 1.0)))

    def l1_distance(self, other: "StepCDF") -> float:
        grid = np.unique(np.concatenate([[0.0, 1.0], np.clip(self.points, 0, 1), np.clip(other.points, 0, 1)]))
        left = grid[:-1]
        return float(np.sum(np.abs(self(left) - other(left)) * np.diff(grid)))

    def rows(self):
        t, k = self.jumps
        return list(zip(t.tolist(), k.tolist()))


def kendall_distribution(s) -> StepCDF:
    return StepCDF(kendall_pseudo_values(s))


# ---------------------------------------------------------------------------
# Rank correlations
# ---------------------------------------------------------------------------


def _check_columns(x: np.ndarray):
    if x.shape[0] < 2:
        raise DegenerateSample("need at least two observations")
    if np.any(np.ptp(x, axis=0) == 0):
        raise DegenerateSample("a column is constant")


def spearman_rho(s) -> float:
    x = _bivariate(s)
    _check_columns(x)
    r = rankdata(x, axis=0, method="average")
    r = r - r.mean(axis=0)
    return float(np.sum(r[:, 0] * r[:, 1]) / np.sqrt(np.sum(r[:, 0] ** 2) * np.sum(r[:, 1] ** 2)))


def _tied_pairs(col: np.ndarray) -> int:
    _, counts = np.unique(col, return_counts=True)
    return int(np.sum(counts * (counts - 1) // 2))


def kendall_tau(s) -> float:
    """(concordant - discordant) / (n choose 2); tied pairs count as neither.

    scipy's tau-b has the same numerator over sqrt((n0 - n1)(n0 - n2)),
    where n1, n2 count the pairs tied in each column, so tau-a is recovered
    by rescaling.
    """
    x = _bivariate(s)
    _check_columns(x)
    n0 = x.shape[0] * (x.shape[0] - 1) // 2
    tau_b = kendalltau(x[:, 0], x[:, 1]).statistic
    n1, n2 = _tied_pairs(x[:, 0]), _tied_pairs(x[:, 1])
    return float(tau_b * np.sqrt(float(n0 - n1) * float(n0 - n2)) / n0)


def kendall_tau_se(n: int) -> float:
    """Asymptotic standard error of the sample Kendall tau under independence."""
    return float(np.sqrt(2.0 * (2.0 * n + 5.0) / (9.0 * n * (n - 1.0))))


# ---------------------------------------------------------------------------
# Symmetry test
# ---------------------------------------------------------------------------


def cvm_statistic(u) -> float:
    """sum_i (C_n(u_i, v_i) - C_n(v_i, u_i))**2 on pseudo-observations ``u``."""
    u = np.asarray(u, dtype=float)
    n = u.shape[0]
    a, b = np.ascontiguousarray(u[:, 0]), np.ascontiguousarray(u[:, 1])
    direct = _kernels.dominance_counts(a, b, a, b, False, False)
    swapped = _kernels.dominance_counts(a, b, b, a, False, False)
    return float(np.sum(((direct - swapped) / n) ** 2))


@dataclass(frozen=True)
class SymmetryTest:
    statistic: float
    pvalue: float
    n_boot: int

    def to_json(self) -> dict:
        return {"statistic": self.statistic, "pvalue": self.pvalue, "n_boot": self.n_boot}

    def __iter__(self):
        return iter((self.statistic, self.pvalue))


def _rerank_random_ties(rows: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Ranks / (n + 1) with ties broken in a random order.

    Resampling with replacement duplicates rows; average ranks would turn
    those duplicates into ties that inflate the statistic relative to its
    continuous-data null distribution.
    """
    n = rows.shape[0]
    out = np.empty_like(rows)
    for j in range(rows.shape[1]):
        order = np.lexsort((rng.random(n), rows[:, j]))
        out[order, j] = np.arange(1, n + 1)
    return out / (n + 1.0)


def cvm_asymmetry_pvalue(s, n_boot: int = N_BOOT, seed=None) -> SymmetryTest:
    """Exchangeability test with a symmetrised resampling bootstrap.

    Each replicate resamples the pseudo-observations with replacement, swaps
    the two coordinates of every row with probability 1/2, re-ranks (random
    tie-break) and recomputes the statistic.  The p-value is
    (1 + #{S* >= S}) / (1 + B).
    """
    x = _bivariate(s)
    n = x.shape[0]
    u = pseudo_observations(x)
    stat = cvm_statistic(u)
    seed = as_seed(seed)
    exceed = 0
    for b in range(n_boot):
        rng = seed.child(b).generator()
        rows = u[rng.integers(0, n, size=n)]
        swap = rng.random(n) < 0.5
        rows[swap] = rows[swap][:, ::-1]
        star = cvm_statistic(_rerank_random_ties(rows, rng))
        exceed += star >= stat
    return SymmetryTest(stat, (1.0 + exceed) / (1.0 + n_boot), n_boot)
