"""Exact samplers for Liebscher copulas.

All samplers draw their randomness from a single generator addressed by a
:class:`~liebscher.rng.Seed`, in a fixed layout: the draws of base copula
``k`` are taken in full before those of base ``k + 1``.  The per-row work is
then a pure function of that array, so the output never depends on how the
rows are scheduled.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .core import (
    BaseCopula,
    LiebscherSpec,
    cl_exponents_to_iterative,
    validate_exponents,
)
from .errors import InvalidNoise, InvalidParameter, UnsupportedBase
from .rng import Seed, as_seed


@dataclass(frozen=True)
class Sample:
    """``n x d`` matrix of points in the unit hypercube plus provenance."""

    data: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        data = np.array(self.data, dtype=float, ndmin=2)
        if data.ndim != 2 or data.shape[0] < 1:
            raise InvalidParameter("a sample needs at least one row")
        if np.any(data < 0.0) or np.any(data > 1.0) or np.any(np.isnan(data)):
            raise InvalidParameter("sample entries must lie in [0, 1]")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)


def as_array(s) -> np.ndarray:
    if isinstance(s, Sample):
        return s.data
    return np.array(s, dtype=float, ndmin=2)


def _draw_base(base: BaseCopula, n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """n draws from a base copula; comonotonic draws come back as (n, 1)."""
    if base.kind == "independence":
        return rng.random((n, d))
    if base.kind == "comonotonic":
        return rng.random((n, 1))
    if base.kind == "clayton":
        if base.theta is None:
            raise InvalidParameter("Clayton base has no parameter value")
        frailty = rng.gamma(1.0 / base.theta, size=(n, 1))
        e = rng.exponential(size=(n, d))
        with np.errstate(divide="ignore", over="ignore"):
            return (1.0 + e / frailty) ** (-1.0 / base.theta)
    raise UnsupportedBase(f"no sampler for base copula {base.kind!r}")


def _stack_draws(draws: list[np.ndarray], d: int) -> np.ndarray:
    if all(y.shape[1] == 1 for y in draws):
        return np.ascontiguousarray(np.stack(draws))
    return np.ascontiguousarray(np.stack([np.broadcast_to(y, (y.shape[0], d)) for y in draws]))


def sample_liebscher(spec: LiebscherSpec, n: int, seed=None) -> Sample:
    """Iterative sampler for an arbitrary Liebscher copula."""
    if n < 1:
        raise InvalidParameter("n must be positive")
    seed = as_seed(seed)
    rng = seed.generator()
    d = spec.d
    for b in spec.bases:
        if b.kind == "gumbel_barnett":
            raise UnsupportedBase("no sampler for base copula 'gumbel_barnett'")
    x0 = np.ascontiguousarray(np.broadcast_to(_draw_base(spec.bases[0], n, d, rng), (n, d)))
    ys = [_draw_base(b, n, d, rng) for b in spec.bases[1:]]
    if spec.K == 1:
        data = x0
    elif spec.is_power:
        data = _kernels.power_iterate(x0, _stack_draws(ys, d), spec.A[None, :, :])
    else:
        tr = spec.transforms
        x = x0
        for k, y in enumerate(ys, start=1):
            y = np.broadcast_to(y, (n, d))
            left = np.column_stack([tr.f_inverse(k, j, x[:, j]) for j in range(d)])
            right = np.column_stack([tr.ratio_inverse(k, j, y[:, j]) for j in range(d)])
            x = np.maximum(left, right)
        data = x
    meta = {"spec": spec.to_json() if spec.is_power else None, "n": n, "seed": seed.to_json()}
    return Sample(data, meta)


def _cl_matrix(params) -> np.ndarray:
    if hasattr(params, "p") and hasattr(params, "q"):
        return cl_exponents_to_iterative(params.p, params.q)
    return validate_exponents(params, strict=False)


def sample_cl(params, n: int, seed=None) -> Sample:
    """Sampler for the comonotonic-based copula.

    ``params`` is either an iterative exponent matrix (closed interval
    [0, 1] allowed for the free entries) or an object with ``p``/``q``
    product exponents such as :class:`liebscher.analytics.CLParams`.
    """
    if n < 1:
        raise InvalidParameter("n must be positive")
    A = _cl_matrix(params)
    seed = as_seed(seed)
    rng = seed.generator()
    K, d = A.shape
    x0 = np.ascontiguousarray(np.broadcast_to(rng.random((n, 1)), (n, d)))
    if K == 1:
        data = x0
    else:
        ys = _stack_draws([rng.random((n, 1)) for _ in range(K - 1)], d)
        data = _kernels.power_iterate(x0, ys, A[None, :, :])
    meta = {"A": A.tolist(), "n": n, "seed": seed.to_json()}
    return Sample(data, meta)


@dataclass(frozen=True)
class NoiseSpec:
    """Row-wise Beta perturbation of the iterative exponents.

    ``mean`` has the shape and constraints of an exponent matrix; each free
    entry is redrawn per row from the Beta law with that mean and variance
    ``variance``.
    """

    mean: np.ndarray
    variance: float

    def __post_init__(self):
        M = validate_exponents(self.mean, strict=True)
        var = float(self.variance)
        if not var > 0.0:
            raise InvalidNoise("noise variance must be > 0")
        free = M[1:]
        limit = free * (1.0 - free)
        if np.any(var >= limit):
            k, j = np.argwhere(var >= limit)[0]
            raise InvalidNoise(
                f"variance {var} must be below m(1-m) = {float(limit[k, j])} for mean A[{k + 1}][{j}]"
            )
        M.setflags(write=False)
        object.__setattr__(self, "mean", M)
        object.__setattr__(self, "variance", var)

    def beta_parameters(self) -> tuple[np.ndarray, np.ndarray]:
        m = self.mean[1:]
        c = m * (1.0 - m) / self.variance - 1.0
        return m * c, (1.0 - m) * c

    def draw_exponents(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """(n, K, d) exponent matrices, one per row."""
        K, d = self.mean.shape
        alpha, beta = self.beta_parameters()
        out = np.ones((n, K, d))
        if K > 1:
            out[:, 1:, :] = rng.beta(alpha, beta, size=(n, K - 1, d))
        return out


def sample_cl_noisy(noise: NoiseSpec, n: int, seed=None, return_exponents: bool = False):
    """Comonotonic-based sampler whose exponents are redrawn for every row."""
    if n < 1:
        raise InvalidParameter("n must be positive")
    seed = as_seed(seed)
    rng = seed.generator()
    K, d = noise.mean.shape
    exps = noise.draw_exponents(n, rng)
    x0 = np.ascontiguousarray(np.broadcast_to(rng.random((n, 1)), (n, d)))
    if K == 1:
        data = x0
    else:
        ys = _stack_draws([rng.random((n, 1)) for _ in range(K - 1)], d)
        data = _kernels.power_iterate(x0, ys, np.ascontiguousarray(exps))
    meta = {"mean": noise.mean.tolist(), "variance": noise.variance, "n": n, "seed": seed.to_json()}
    sample = Sample(data, meta)
    return (sample, exps) if return_exponents else sample


__all__ = ["Sample", "NoiseSpec", "Seed", "sample_liebscher", "sample_cl", "sample_cl_noisy", "as_array"]
