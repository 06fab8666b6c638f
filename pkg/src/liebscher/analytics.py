"""Closed-form analytics for the bivariate comonotonic-based copula

    C(u, v) = prod_k min(u ** p_k, v ** q_k),

plus the generic tail-dependence combinators for arbitrary Liebscher
copulas built from power transforms.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .core import BaseCopula, LiebscherSpec, component_exponents, validate_exponents
from .errors import ConstraintViolation, InvalidParameter

SUM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class CLParams:
    """Product exponents of a bivariate comonotonic-based copula.

    The pairs are kept as given in ``p``/``q`` and also in canonical form
    (``pc``, ``qc``, ``r``): pairs sorted by slope ``r = p / q`` with equal
    slopes merged and all-zero pairs dropped, so ``r`` is strictly
    increasing.  ``r`` is 0 when ``p = 0`` and ``inf`` when ``q = 0``.
    """

    p: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        p = np.array(self.p, dtype=float, ndmin=1)
        q = np.array(self.q, dtype=float, ndmin=1)
        if p.shape != q.shape or p.ndim != 1:
            raise InvalidParameter("p and q must be vectors of equal length")
        if np.any(p < 0) or np.any(q < 0) or not (np.all(np.isfinite(p)) and np.all(np.isfinite(q))):
            raise InvalidParameter("p and q must be nonnegative")
        for name, x in (("p", p), ("q", q)):
            if abs(x.sum() - 1.0) > SUM_TOL * max(1, x.size):
                raise InvalidParameter(f"{name} must sum to 1, got {x.sum()!r}")
        keep = (p > 0) | (q > 0)
        pk, qk = p[keep], q[keep]
        with np.errstate(divide="ignore"):
            r = np.where(qk > 0, pk / np.where(qk > 0, qk, 1.0), np.inf)
        order = np.argsort(r, kind="mergesort")
        pk, qk, r = pk[order], qk[order], r[order]
        pc, qc, rc = [], [], []
        for pi, qi, ri in zip(pk, qk, r):
            if rc and (ri == rc[-1] or (np.isfinite(ri) and abs(ri - rc[-1]) <= 1e-12 * max(1.0, ri))):
                pc[-1] += pi
                qc[-1] += qi
            else:
                pc.append(pi)
                qc.append(qi)
                rc.append(ri)
        for name, arr in (("p", p), ("q", q), ("pc", pc), ("qc", qc), ("r", rc)):
            arr = np.asarray(arr, dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def K(self) -> int:
        return self.p.size

    @property
    def pbar(self) -> np.ndarray:
        """Partial sums of the canonical p, with a leading 0."""
        return np.concatenate([[0.0], np.cumsum(self.pc)])

    @property
    def qbar(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum(self.qc)])

    @classmethod
    def from_A(cls, A) -> "CLParams":
        A = validate_exponents(A, strict=False)
        if A.shape[1] != 2:
            raise InvalidParameter("comonotonic-based analytics are bivariate")
        E = component_exponents(A)
        return cls(E[:, 0], E[:, 1])

    @classmethod
    def from_spec(cls, spec: LiebscherSpec) -> "CLParams":
        if not spec.is_comonotonic or not spec.is_power:
            raise InvalidParameter("spec is not comonotonic-based with power transforms")
        return cls.from_A(spec.A)

    def to_json(self) -> dict:
        return {"p": self.p.tolist(), "q": self.q.tolist()}


def _pow(x, r):
    """x ** r with the limits 0 ** 0 = 1 and x ** inf = 0 for x < 1."""
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.power(x, r)


def eval_cl(params: CLParams, u, v):
    """Piecewise evaluation on the partition u**r_{k+1} < v <= u**r_k."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    region = np.zeros(np.broadcast(u, v).shape, dtype=np.intp)
    for rk in params.r:
        region += v <= _pow(u, rk)
    # partial sums can overshoot 1 by an ulp; 0 ** (-eps) would be inf
    pbar, qbar = np.minimum(params.pbar, 1.0), params.qbar
    out = _pow(u, 1.0 - pbar[region]) * _pow(v, qbar[region])
    return out if out.ndim else float(out)


def eval_cl_product(params: CLParams, u, v):
    """Direct product of minima; the reference the piecewise form must match."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    out = np.ones(np.broadcast(u, v).shape)
    for pk, qk in zip(params.p, params.q):
        out = out * np.minimum(_pow(u, pk), _pow(v, qk))
    return out if out.ndim else float(out)


def _curve_exponents(params: CLParams) -> np.ndarray:
    """e_k = r_k * sum_{j<k} q_j + sum_{j>=k} p_j over the canonical pairs.

    Along curve k the singular part of C(u, u**r_k) grows like u**e_k.
    """
    pc, qc, r = params.pc, params.qc, params.r
    q_before = np.concatenate([[0.0], np.cumsum(qc)[:-1]])
    p_from = np.cumsum(pc[::-1])[::-1]
    with np.errstate(invalid="ignore"):
        return np.where(q_before > 0, r * q_before, 0.0) + p_from


def curve_weights(params: CLParams) -> np.ndarray:
    """Mass carried by each singular curve v = u ** r_k.

    Curve k receives the points where component k attains both coordinate
    maxima, which has probability p_k / e_k.  This equals min(p_k, q_k) for
    the curves of smallest and largest slope (so for every curve when K = 2)
    and is strictly smaller for the middle curves.
    """
    pc, qc = params.pc, params.qc
    e = _curve_exponents(params)
    live = (pc > 0) & (qc > 0)
    return np.where(live, pc / np.where(live, e, 1.0), 0.0)


def singular_component(params: CLParams, u, v):
    """Measure of [0, u] x [0, v] carried by the curves v = u ** r_k."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    out = np.zeros(np.broadcast(u, v).shape)
    for w, e, rk in zip(curve_weights(params), _curve_exponents(params), params.r):
        if w <= 0:
            continue
        out = out + w * np.minimum(u, _pow(v, 1.0 / rk)) ** e
    return out if out.ndim else float(out)


def upper_tail_cl(params: CLParams) -> float:
    """lambda_U = sum_k min(p_k, q_k), from C(t, t) = t ** sum_k max(p_k, q_k)."""
    return float(np.minimum(params.pc, params.qc).sum())


def _recip(x: float) -> float:
    return 0.0 if np.isinf(x) else 1.0 / x


def kendall_tau_cl(params: CLParams) -> float:
    # each summand (1 - pbar) qbar (r' - r) / (E(r) E(r')) with E(x) = qbar x + 1 - pbar
    # is written as (1 - pbar) (1/E(r) - 1/E(r')), which also covers r' = inf
    r, pbar, qbar = params.r, params.pbar, params.qbar
    tau = 1.0
    for k in range(1, r.size):
        a, b = qbar[k], 1.0 - pbar[k]
        tau -= b * (_recip(a * r[k - 1] + b) - _recip(a * r[k] + b))
    return float(tau)


def spearman_rho_cl(params: CLParams) -> float:
    # 12 * sum_k integral over region k of u**(1 - pbar_k) v**qbar_k, minus 3;
    # region k contributes (1/E_k(r_k) - 1/E_k(r_{k+1})) / (1 + qbar_k) with
    # E_k(x) = (1 + qbar_k) x + 2 - pbar_k.  The first and last regions give
    # the leading term 12 (1 + r_1 + r_1 r_K) / ((2 + r_1)(1 + 2 r_K)).
    r, pbar, qbar = params.r, params.pbar, params.qbar
    total = 0.5 - 1.0 / (2.0 + r[0]) + 0.5 * _recip(1.0 + 2.0 * r[-1])
    for k in range(1, r.size):
        a, b = 1.0 + qbar[k], 2.0 - pbar[k]
        total += (_recip(a * r[k - 1] + b) - _recip(a * r[k] + b)) / a
    return float(12.0 * total - 3.0)


def blomqvist_beta_cl(params: CLParams) -> float:
    return float(2.0 ** upper_tail_cl(params) - 1.0)


@dataclass(frozen=True)
class DependenceReport:
    beta: float
    tau: float
    rho: float
    lambda_L: float
    lambda_U: float
    singular_mass: float
    weights: tuple
    slopes: tuple

    def to_json(self) -> dict:
        out = asdict(self)
        out["weights"] = list(self.weights)
        out["slopes"] = [None if np.isinf(s) else s for s in self.slopes]
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)


def dependence_report(params: CLParams) -> DependenceReport:
    w = curve_weights(params)
    lam_l = 1.0 if np.all(np.abs(params.p - params.q) <= SUM_TOL) else 0.0
    return DependenceReport(
        beta=blomqvist_beta_cl(params),
        tau=kendall_tau_cl(params),
        rho=spearman_rho_cl(params),
        lambda_L=lam_l,
        lambda_U=upper_tail_cl(params),
        singular_mass=float(w.sum()),
        weights=tuple(float(x) for x in w),
        slopes=tuple(float(x) for x in params.r),
    )


# ---------------------------------------------------------------------------
# Generic tail coefficients
# ---------------------------------------------------------------------------


def _upper_fn(item):
    if isinstance(item, BaseCopula):
        return item.upper_tail_function
    if isinstance(item, str):
        return BaseCopula(item).upper_tail_function
    return item


def tail_coeffs_general(
    tail: str,
    *,
    lambdas=None,
    gammas=None,
    asymmetric: bool = False,
    functions=None,
    derivatives=None,
    tol: float = 1e-9,
) -> float:
    """Combine per-component tail behaviour into the Liebscher coefficient.

    ``tail="lower"``: ``lambdas`` are the components' lower coefficients and
    ``gammas`` the regular-variation indices of the (shared) transforms,
    which must sum to 1.  With ``asymmetric=True`` some component's
    transforms vanish at different rates at the origin and the result is 0.

    ``tail="upper"``: ``functions`` are the components' upper tail
    dependence functions (callables, :class:`BaseCopula` objects or kind
    names) and ``derivatives`` the pairs of transform derivatives at 1; each
    coordinate's derivatives must sum to 1.
    """
    if tail == "lower":
        if asymmetric:
            return 0.0
        lambdas = np.asarray(lambdas, dtype=float)
        gammas = np.asarray(gammas, dtype=float)
        if lambdas.shape != gammas.shape:
            raise InvalidParameter("need one index per component")
        if abs(gammas.sum() - 1.0) > tol:
            raise ConstraintViolation(f"regular-variation indices sum to {gammas.sum()}, not 1")
        return float(np.prod(lambdas))
    if tail == "upper":
        derivatives = np.asarray(derivatives, dtype=float).reshape(-1, 2)
        if len(functions) != derivatives.shape[0]:
            raise InvalidParameter("need one derivative pair per component")
        sums = derivatives.sum(axis=0)
        if np.any(np.abs(sums - 1.0) > tol):
            raise ConstraintViolation(f"derivatives at 1 sum to {sums}, not (1, 1)")
        return float(sum(float(_upper_fn(f)(d1, d2)) for f, (d1, d2) in zip(functions, derivatives)))
    raise InvalidParameter("tail must be 'lower' or 'upper'")


def liebscher_tail_coefficients(spec: LiebscherSpec) -> tuple[float, float]:
    """(lambda_L, lambda_U) of a bivariate Liebscher copula with power transforms."""
    if spec.d != 2 or not spec.is_power:
        raise InvalidParameter("tail coefficients need a bivariate power-transform spec")
    E = component_exponents(spec.A)
    upper = tail_coeffs_general("upper", functions=list(spec.bases), derivatives=E)
    symmetric = np.all(np.abs(E[:, 0] - E[:, 1]) <= SUM_TOL)
    if symmetric:
        lower = tail_coeffs_general(
            "lower", lambdas=[b.lambda_lower() for b in spec.bases], gammas=E[:, 0]
        )
    else:
        lower = tail_coeffs_general("lower", asymmetric=True)
    return lower, upper
