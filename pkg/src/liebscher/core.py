"""Base copulas, the Liebscher product construction and its iterative form.

Conventions
-----------
A Liebscher copula with ``K`` components is described by a list of base
copulas ``bases[0..K-1]`` and a ``K x d`` exponent matrix ``A`` whose first
row is all ones.  ``bases[k]`` is the copula drawn at step ``k`` of the
iterative construction, and row ``k`` of ``A`` holds the exponents of the
power transforms ``f(t) = t ** (1 - a)`` applied at that step.

The equivalent product form multiplies ``bases[k]`` evaluated at
``u ** e[k]`` where ``e = component_exponents(A)``.  The matrix returned by
:func:`stick_breaking_exponents` lists the same exponents in reverse order
(its row 0 is the exponent of the *last* base), which is the order the
stick-breaking recursion naturally produces.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DegenerateExponent, InvalidParameter, TransformError

K_MAX = 64
BISECT_TOL = 1e-12

_KINDS = ("independence", "comonotonic", "clayton", "gumbel_barnett")
_ALIASES = {
    "independence": "independence",
    "indep": "independence",
    "product": "independence",
    "pi": "independence",
    "comonotonic": "comonotonic",
    "frechet": "comonotonic",
    "min": "comonotonic",
    "clayton": "clayton",
    "gumbel_barnett": "gumbel_barnett",
    "gumbelbarnett": "gumbel_barnett",
    "gumbel-barnett": "gumbel_barnett",
}


# ---------------------------------------------------------------------------
# Base copulas
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BaseCopula:
    """One of the four supported building blocks.

    ``theta`` is required for Clayton (``theta > 0``) and Gumbel-Barnett
    (``0 <= theta <= 1``) and must be ``None`` otherwise.  A Clayton or
    Gumbel-Barnett base may also be created with ``theta=None`` when its
    parameter is meant to be drawn from a prior (see :mod:`liebscher.abc`);
    such a base cannot be evaluated.
    """

    kind: str
    theta: float | None = None

    def __post_init__(self):
        kind = _ALIASES.get(str(self.kind).lower().replace(" ", "_"))
        if kind is None:
            raise InvalidParameter(f"unknown base copula kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if kind in ("independence", "comonotonic"):
            if self.theta is not None:
                raise InvalidParameter(f"{kind} copula takes no parameter")
            return
        if self.theta is None:
            return
        theta = float(self.theta)
        if kind == "clayton" and not (np.isfinite(theta) and theta > 0):
            raise InvalidParameter(f"Clayton theta must be > 0, got {theta}")
        if kind == "gumbel_barnett" and not 0.0 <= theta <= 1.0:
            raise InvalidParameter(f"Gumbel-Barnett theta must lie in [0, 1], got {theta}")
        object.__setattr__(self, "theta", theta)

    @property
    def parametric(self) -> bool:
        return self.kind in ("clayton", "gumbel_barnett")

    @property
    def resolved(self) -> bool:
        return not self.parametric or self.theta is not None

    def with_theta(self, theta: float) -> "BaseCopula":
        return BaseCopula(self.kind, theta)

    def cdf(self, u) -> np.ndarray:
        """Evaluate on points stored along the last axis of ``u``."""
        u = np.asarray(u, dtype=float)
        if not self.resolved:
            raise InvalidParameter(f"{self.kind} base has no parameter value")
        if self.kind == "independence":
            return np.prod(u, axis=-1)
        if self.kind == "comonotonic":
            return np.min(u, axis=-1)
        zero = np.any(u <= 0.0, axis=-1)
        safe = np.where(u <= 0.0, 1.0, u)
        if self.kind == "clayton":
            d = u.shape[-1]
            s = np.sum(safe ** (-self.theta), axis=-1) - d + 1.0
            val = s ** (-1.0 / self.theta)
        else:
            logs = np.log(safe)
            val = np.exp(np.sum(logs, axis=-1) - self.theta * np.prod(-logs, axis=-1))
        return np.where(zero, 0.0, val)

    def lower_tail_function(self, x, y):
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        if self.kind == "comonotonic":
            return np.minimum(x, y)
        if self.kind == "clayton":
            with np.errstate(divide="ignore"):
                return (x ** (-self.theta) + y ** (-self.theta)) ** (-1.0 / self.theta)
        return np.zeros(np.broadcast(x, y).shape)

    def upper_tail_function(self, x, y):
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        if self.kind == "comonotonic":
            return np.minimum(x, y)
        return np.zeros(np.broadcast(x, y).shape)

    def lambda_lower(self) -> float:
        return float(self.lower_tail_function(1.0, 1.0))

    def lambda_upper(self) -> float:
        return float(self.upper_tail_function(1.0, 1.0))

    def to_json(self) -> dict:
        out = {"kind": self.kind}
        if self.parametric:
            out["theta"] = self.theta
        return out

    @classmethod
    def from_json(cls, obj) -> "BaseCopula":
        if isinstance(obj, str):
            return cls(obj)
        return cls(obj["kind"], obj.get("theta"))


def Independence() -> BaseCopula:
    return BaseCopula("independence")


def Comonotonic() -> BaseCopula:
    return BaseCopula("comonotonic")


def Clayton(theta: float) -> BaseCopula:
    return BaseCopula("clayton", theta)


def GumbelBarnett(theta: float) -> BaseCopula:
    return BaseCopula("gumbel_barnett", theta)


def _as_points(u) -> tuple[np.ndarray, bool]:
    u = np.asarray(u, dtype=float)
    single = u.ndim == 1
    u = np.atleast_2d(u)
    if u.shape[-1] < 2:
        raise InvalidParameter("points must have at least two coordinates")
    if np.any(u < 0.0) or np.any(u > 1.0) or np.any(np.isnan(u)):
        raise InvalidParameter("coordinates must lie in [0, 1]")
    return u, single


def eval_base(c: BaseCopula, u) -> np.ndarray | float:
    u, single = _as_points(u)
    out = c.cdf(u)
    return float(out[0]) if single else out


# ---------------------------------------------------------------------------
# Exponent algebra
# ---------------------------------------------------------------------------


def validate_exponents(A, strict: bool = True) -> np.ndarray:
    """Check a K x d iterative exponent matrix and return it as floats.

    With ``strict`` the free entries must lie in the open interval (0, 1);
    otherwise the closed interval is accepted (the comonotonic sampler has a
    well-defined limit at both ends).
    """
    A = np.array(A, dtype=float, ndmin=2)
    if A.ndim != 2:
        raise InvalidParameter("exponent matrix must be two-dimensional")
    K, d = A.shape
    if K < 1 or K > K_MAX:
        raise InvalidParameter(f"number of components must be in [1, {K_MAX}], got {K}")
    if d < 1:
        raise InvalidParameter("exponent matrix needs at least one column")
    for j in range(d):
        if A[0, j] != 1.0:
            raise InvalidParameter(f"A[0][{j}] = {float(A[0, j])!r} but the first row must be all 1.0")
    for k in range(1, K):
        for j in range(d):
            a = A[k, j]
            ok = 0.0 < a < 1.0 if strict else 0.0 <= a <= 1.0
            if not ok:
                interval = "(0, 1)" if strict else "[0, 1]"
                raise InvalidParameter(f"A[{k}][{j}] = {float(a)!r} must lie in {interval}")
    return A


def stick_breaking_exponents(A) -> np.ndarray:
    """Product-form exponents ``P[k-1, j] = p_j^(k,K)`` from iterative exponents.

    ``P[0] = a^(K)`` and ``P[k-1] = a^(K-k+1) * prod_{i > K-k+1} (1 - a^(i))``;
    every column is a probability vector.
    """
    A = np.array(A, dtype=float, ndmin=2)
    return component_exponents(A)[::-1].copy()


def component_exponents(A) -> np.ndarray:
    """Exponent applied to ``bases[k]`` in the product form, row-aligned with A."""
    A = np.array(A, dtype=float, ndmin=2)
    K = A.shape[0]
    E = np.empty_like(A)
    tail = np.ones(A.shape[1])
    for k in range(K - 1, -1, -1):
        E[k] = A[k] * tail
        tail = tail * (1.0 - A[k])
    return E


def product_to_iterative(P, tol: float = 1e-12) -> np.ndarray:
    """Invert :func:`stick_breaking_exponents`.

    ``P`` is in stick-breaking order (row 0 belongs to the last base).
    Raises :class:`DegenerateExponent` when the remaining mass hits zero
    before the last row, i.e. the copula is representable with fewer
    components.
    """
    P = np.array(P, dtype=float, ndmin=2)
    K, d = P.shape
    if np.any(P < 0.0) or np.any(P > 1.0):
        raise InvalidParameter("product exponents must lie in [0, 1]")
    sums = P.sum(axis=0)
    if np.any(np.abs(sums - 1.0) > 1e-9):
        raise InvalidParameter(f"product exponent columns must sum to 1, got {sums}")
    A = np.empty_like(P)
    A[0] = 1.0
    used = np.zeros(d)
    for k in range(K - 1):
        remaining = 1.0 - used
        if np.any(remaining <= tol):
            j = int(np.argmax(remaining <= tol))
            raise DegenerateExponent(
                f"column {j}: exponents after row {k - 1} carry no mass; "
                f"use K = {k} components instead"
            )
        A[K - 1 - k] = P[k] / remaining
        used = used + P[k]
    if np.any(1.0 - used <= tol):
        j = int(np.argmax(1.0 - used <= tol))
        raise DegenerateExponent(f"column {j}: last component would receive zero exponent")
    bad = (A[1:] <= 0.0) | (A[1:] >= 1.0)
    if np.any(bad):
        k, j = np.argwhere(bad)[0]
        raise DegenerateExponent(f"iterative exponent A[{k + 1}][{j}] = {float(A[k + 1, j])!r} is not in (0, 1)")
    return A


def cl_exponents_to_iterative(p, q) -> np.ndarray:
    """Iterative matrix for a bivariate comonotonic-based copula.

    Unlike :func:`product_to_iterative` this accepts zero weights: once a
    column's remaining mass is exhausted the corresponding step uses
    ``a = 1`` (a reset), which is exact because every earlier step then
    carries a zero exponent.  Because the comonotonic product is
    commutative any pair order is allowed.
    """
    P = np.column_stack([np.asarray(p, dtype=float), np.asarray(q, dtype=float)])
    K, d = P.shape
    A = np.ones_like(P)
    used = np.zeros(d)
    for k in range(K - 1):
        remaining = 1.0 - used
        with np.errstate(divide="ignore", invalid="ignore"):
            a = np.where(remaining > 1e-15, P[k] / remaining, 1.0)
        A[K - 1 - k] = np.clip(a, 0.0, 1.0)
        used = used + P[k]
    return A


# ---------------------------------------------------------------------------
# Transforms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PowerTransforms:
    """``f_j^(k)(t) = t ** (1 - A[k, j])``."""

    A: np.ndarray

    def __post_init__(self):
        A = validate_exponents(self.A, strict=True)
        A.setflags(write=False)
        object.__setattr__(self, "A", A)

    @property
    def K(self) -> int:
        return self.A.shape[0]

    @property
    def d(self) -> int:
        return self.A.shape[1]


def _bisect_inverse(fn: Callable, y: np.ndarray, tol: float = BISECT_TOL) -> np.ndarray:
    """Smallest t in [0, 1] with fn(t) >= y, for nondecreasing fn."""
    y = np.asarray(y, dtype=float)
    lo = np.zeros_like(y)
    hi = np.ones_like(y)
    top = np.asarray(fn(hi), dtype=float)
    if not np.all(np.isfinite(top)) or np.any(top < y - 1e-12):
        raise TransformError("transform does not reach the requested level on [0, 1]")
    for _ in range(int(np.ceil(np.log2(1.0 / tol))) + 2):
        mid = 0.5 * (lo + hi)
        val = np.asarray(fn(mid), dtype=float)
        if not np.all(np.isfinite(val)):
            raise TransformError("transform returned a non-finite value during inversion")
        below = val < y
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.all(hi - lo <= tol):
            break
    return hi


@dataclass(frozen=True)
class CustomTransforms:
    """General transforms in the class F (f and Id/f nondecreasing, f(0)=0, f(1)=1).

    ``fs[k][j]`` is a vectorised callable for step ``k``; ``fs[0]`` must be
    ``None`` since the first step uses the constant function 1.
    """

    fs: tuple
    d: int = field(init=False)

    def __post_init__(self):
        if not self.fs or self.fs[0] is not None:
            raise InvalidParameter("fs[0] must be None: the first transform is the constant 1")
        rows = (None,) + tuple(tuple(r) for r in self.fs[1:])
        if len(rows) > K_MAX:
            raise InvalidParameter(f"at most {K_MAX} components are supported")
        widths = {len(r) for r in rows[1:]}
        if len(widths) > 1:
            raise InvalidParameter("every row of transforms must have the same width")
        d = widths.pop() if widths else 0
        grid = np.linspace(0.0, 1.0, 1001)
        for k, row in enumerate(rows[1:], start=1):
            for j, f in enumerate(row):
                vals = np.asarray(f(grid), dtype=float)
                if abs(vals[0]) > 1e-12 or abs(vals[-1] - 1.0) > 1e-12:
                    raise InvalidParameter(f"transform ({k}, {j}) must satisfy f(0)=0 and f(1)=1")
                if np.any(np.diff(vals) < -1e-12):
                    raise InvalidParameter(f"transform ({k}, {j}) is not increasing")
                ratio = grid[1:] / np.where(vals[1:] > 0, vals[1:], np.nan)
                if np.any(np.isnan(ratio)) or np.any(np.diff(ratio) < -1e-9):
                    raise InvalidParameter(f"transform ({k}, {j}): Id/f is not increasing")
        object.__setattr__(self, "fs", rows)
        object.__setattr__(self, "d", d)

    @property
    def K(self) -> int:
        return len(self.fs)

    def f(self, k: int, j: int, t):
        t = np.asarray(t, dtype=float)
        if k == 0:
            return np.ones_like(t)
        return np.asarray(self.fs[k][j](t), dtype=float)

    def f_inverse(self, k: int, j: int, x):
        return _bisect_inverse(lambda t: self.f(k, j, t), x)

    def ratio_inverse(self, k: int, j: int, y):
        def ratio(t):
            ft = self.f(k, j, t)
            with np.errstate(divide="ignore", invalid="ignore"):
                return np.where(ft > 0, t / np.where(ft > 0, ft, 1.0), 0.0)

        return _bisect_inverse(ratio, y)

    def composed(self, k: int, j: int, u):
        """F^(k)(u) = f^(k) o ... o f^(K-1)(u), with F^(K) = Id."""
        out = np.asarray(u, dtype=float)
        for i in range(self.K - 1, k - 1, -1):
            out = self.f(i, j, out)
        return out


def iterative_to_product(transforms):
    """Product-form transforms ``g^(k,K)`` in stick-breaking order.

    Power transforms return the exponent matrix (identical to
    :func:`stick_breaking_exponents`); custom transforms return a K x d
    nested list of callables.
    """
    if isinstance(transforms, PowerTransforms):
        return stick_breaking_exponents(transforms.A)
    if not isinstance(transforms, CustomTransforms):
        transforms = PowerTransforms(transforms)
        return stick_breaking_exponents(transforms.A)
    K, d = transforms.K, transforms.d
    out = []
    for k in range(1, K + 1):
        base = K - k  # 0-based index of the base paired with g^(k,K)
        out.append([_component_g(transforms, base, j) for j in range(d)])
    return out


def _component_g(tr: CustomTransforms, base: int, j: int) -> Callable:
    def g(u):
        u = np.asarray(u, dtype=float)
        upper = tr.composed(base + 1, j, u)
        lower = tr.composed(base, j, u)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(lower > 0, upper / np.where(lower > 0, lower, 1.0), 0.0)

    return g


# ---------------------------------------------------------------------------
# Liebscher specification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LiebscherSpec:
    bases: tuple
    transforms: PowerTransforms | CustomTransforms

    def __post_init__(self):
        bases = tuple(b if isinstance(b, BaseCopula) else BaseCopula.from_json(b) for b in self.bases)
        tr = self.transforms
        if not isinstance(tr, (PowerTransforms, CustomTransforms)):
            tr = PowerTransforms(tr)
        if len(bases) != tr.K:
            raise InvalidParameter(f"{len(bases)} base copulas given for K = {tr.K} transform rows")
        if tr.d < 2:
            raise InvalidParameter("dimension must be at least 2")
        object.__setattr__(self, "bases", bases)
        object.__setattr__(self, "transforms", tr)

    @property
    def K(self) -> int:
        return self.transforms.K

    @property
    def d(self) -> int:
        return self.transforms.d

    @property
    def is_power(self) -> bool:
        return isinstance(self.transforms, PowerTransforms)

    @property
    def A(self) -> np.ndarray:
        if not self.is_power:
            raise InvalidParameter("custom transforms have no exponent matrix")
        return self.transforms.A

    @property
    def is_comonotonic(self) -> bool:
        return all(b.kind == "comonotonic" for b in self.bases)

    def product_exponents(self) -> np.ndarray:
        return stick_breaking_exponents(self.A)

    def to_json(self) -> dict:
        return {
            "d": self.d,
            "K": self.K,
            "bases": [b.to_json() for b in self.bases],
            "A": self.A.tolist(),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)

    @classmethod
    def from_json(cls, obj: dict) -> "LiebscherSpec":
        for key in ("bases", "A"):
            if key not in obj:
                raise InvalidParameter(f"missing field {key!r}")
        A = np.array(obj["A"], dtype=float)
        if A.ndim != 2:
            raise InvalidParameter("field 'A' must be a list of equal-length rows")
        if "K" in obj and int(obj["K"]) != A.shape[0]:
            raise InvalidParameter(f"field 'K' = {obj['K']} but 'A' has {A.shape[0]} rows")
        if "d" in obj and int(obj["d"]) != A.shape[1]:
            raise InvalidParameter(f"field 'd' = {obj['d']} but 'A' has {A.shape[1]} columns")
        bases = [BaseCopula.from_json(b) for b in obj["bases"]]
        return cls(tuple(bases), PowerTransforms(A))

    @classmethod
    def loads(cls, text: str) -> "LiebscherSpec":
        return cls.from_json(json.loads(text))


def liebscher_spec(bases: Sequence, A) -> LiebscherSpec:
    return LiebscherSpec(tuple(bases), PowerTransforms(np.asarray(A, dtype=float)))


def eval_liebscher(spec: LiebscherSpec, u):
    """Evaluate the Liebscher copula at one point (d,) or many points (n, d)."""
    u, single = _as_points(u)
    if u.shape[-1] != spec.d:
        raise InvalidParameter(f"points have {u.shape[-1]} coordinates, spec has d = {spec.d}")
    out = np.ones(u.shape[0])
    if spec.is_power:
        E = component_exponents(spec.A)
        for base, e in zip(spec.bases, E):
            out = out * base.cdf(u**e)
    else:
        gs = iterative_to_product(spec.transforms)
        K = spec.K
        for k, base in enumerate(spec.bases):
            g_row = gs[K - 1 - k]
            v = np.column_stack([g_row[j](u[:, j]) for j in range(spec.d)])
            out = out * base.cdf(v)
    return float(out[0]) if single else out


def gumbel_barnett_fused_theta(thetas, p, d: int = 2) -> float:
    """Parameter of the single Gumbel-Barnett copula equal to the product.

    Requires the exponents to be shared across dimensions.
    """
    thetas = np.asarray(thetas, dtype=float)
    p = np.asarray(p, dtype=float)
    if thetas.shape != p.shape:
        raise InvalidParameter("need one exponent per component")
    if abs(p.sum() - 1.0) > 1e-12:
        raise InvalidParameter(f"shared exponents must sum to 1, got {p.sum()}")
    return float(np.sum(thetas * p**d))
