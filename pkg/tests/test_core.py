import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from liebscher.core import (
    K_MAX,
    BaseCopula,
    Clayton,
    Comonotonic,
    CustomTransforms,
    GumbelBarnett,
    Independence,
    LiebscherSpec,
    component_exponents,
    eval_base,
    eval_liebscher,
    gumbel_barnett_fused_theta,
    iterative_to_product,
    liebscher_spec,
    product_to_iterative,
    stick_breaking_exponents,
)
from liebscher.errors import DegenerateExponent, InvalidParameter

GRID = np.linspace(0.0, 1.0, 101)


def grid_points(m=101):
    g = np.linspace(0.0, 1.0, m)
    U, V = np.meshgrid(g, g)
    return np.column_stack([U.ravel(), V.ravel()])


exponent_matrices = st.integers(1, 7).flatmap(
    lambda K: st.lists(
        st.lists(st.floats(0.01, 0.99), min_size=3, max_size=3), min_size=K - 1, max_size=K - 1
    ).map(lambda rows: np.vstack([np.ones((1, 3))] + [np.array(r)[None] for r in rows]))
)


# --- base copulas ----------------------------------------------------------


def test_eval_base_examples():
    assert eval_base(Independence(), [0.5, 0.5]) == 0.25
    assert eval_base(Comonotonic(), [0.3, 0.7]) == 0.3
    # Clayton written out by hand: (u^-t + v^-t - 1)^(-1/t)
    brute = (0.5**-5 + 0.5**-5 - 1.0) ** (-1.0 / 5.0)
    assert_allclose(eval_base(Clayton(5.0), [0.5, 0.5]), 63.0 ** (-0.2), rtol=1e-15)
    assert_allclose(eval_base(Clayton(5.0), [0.5, 0.5]), brute, rtol=1e-15)


@pytest.mark.parametrize("base", [Independence(), Comonotonic(), Clayton(0.7), Clayton(5.0),
                                  GumbelBarnett(0.0), GumbelBarnett(0.6), GumbelBarnett(1.0)])
def test_base_grounded_and_uniform_margins(base):
    zeros = np.column_stack([np.zeros_like(GRID), GRID])
    assert np.all(base.cdf(zeros) == 0.0)
    assert np.all(base.cdf(zeros[:, ::-1]) == 0.0)
    assert_allclose(base.cdf(np.column_stack([GRID, np.ones_like(GRID)])), GRID, atol=1e-15)
    assert_allclose(base.cdf(np.column_stack([np.ones_like(GRID), GRID])), GRID, atol=1e-15)


@pytest.mark.parametrize("kind, theta", [("clayton", 0.0), ("clayton", -0.5), ("clayton", np.inf),
                                         ("gumbel_barnett", 1.5), ("gumbel_barnett", -0.1),
                                         ("independence", 1.0), ("frank", 2.0)])
def test_base_rejects_bad_parameters(kind, theta):
    with pytest.raises(InvalidParameter):
        BaseCopula(kind, theta)


def test_base_json_round_trip():
    for b in (Independence(), Comonotonic(), Clayton(2.5), GumbelBarnett(0.3)):
        assert BaseCopula.from_json(json.loads(json.dumps(b.to_json()))) == b


# --- stick breaking --------------------------------------------------------


def test_stick_breaking_examples():
    assert_allclose(stick_breaking_exponents([[1.0, 1.0]]), [[1.0, 1.0]])
    assert_allclose(stick_breaking_exponents([[1.0], [0.4]]), [[0.4], [0.6]], atol=1e-15)
    P = stick_breaking_exponents([[1.0], [0.5], [0.25]])
    assert_allclose(P[:, 0], [0.25, 0.375, 0.375], atol=1e-15)


@settings(max_examples=60, deadline=None)
@given(exponent_matrices)
def test_stick_breaking_columns_are_probability_vectors(A):
    P = stick_breaking_exponents(A)
    assert np.all(P >= 0)
    assert_allclose(P.sum(axis=0), 1.0, atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(exponent_matrices)
def test_product_to_iterative_round_trip(A):
    P = stick_breaking_exponents(A)
    A2 = product_to_iterative(P)
    assert_allclose(A2, A, atol=1e-12)
    assert_allclose(stick_breaking_exponents(A2), P, atol=1e-12)


def test_product_to_iterative_examples():
    assert_allclose(product_to_iterative([[1.0, 1.0]]), [[1.0, 1.0]])
    assert_allclose(product_to_iterative([[0.4], [0.6]]), [[1.0], [0.4]], atol=1e-15)


def test_product_to_iterative_random_k5():
    rng = np.random.default_rng(5)
    for _ in range(20):
        P = rng.dirichlet(np.ones(5), size=2).T
        assert_allclose(stick_breaking_exponents(product_to_iterative(P)), P, atol=1e-12)


def test_product_to_iterative_degenerate():
    with pytest.raises(DegenerateExponent):
        product_to_iterative([[0.5], [0.5], [0.0]])
    with pytest.raises(DegenerateExponent):
        product_to_iterative([[1.0], [0.0]])


def test_component_exponents_is_reversed_stick_breaking():
    A = np.array([[1.0, 1.0], [0.3, 0.6], [0.2, 0.9]])
    assert_allclose(component_exponents(A), stick_breaking_exponents(A)[::-1])


# --- iterative to product --------------------------------------------------


def test_iterative_to_product_power_matches_stick_breaking():
    A = np.array([[1.0, 1.0], [0.35, 0.8]])
    assert_allclose(iterative_to_product(A), stick_breaking_exponents(A), atol=0)


def test_power_product_of_g_is_identity_on_grid():
    A = np.array([[1.0, 1.0], [0.5, 0.2], [0.25, 0.7]])
    P = iterative_to_product(A)
    for j in range(2):
        prod = np.prod([GRID ** P[k, j] for k in range(3)], axis=0)
        assert np.max(np.abs(prod - GRID)) <= 1e-12


def custom_transforms():
    # f(t) = t^(1/2) is a power; f(t) = 2t / (1 + t) is a Moebius map in F
    return CustomTransforms((None, (np.sqrt, lambda t: 2 * t / (1 + t)),
                             (lambda t: t**0.75, np.sqrt)))


def test_custom_k1_is_identity():
    tr = CustomTransforms((None,))
    assert tr.K == 1


def test_custom_product_of_g_is_identity():
    tr = custom_transforms()
    gs = iterative_to_product(tr)
    for j in range(2):
        prod = np.prod([gs[k][j](GRID) for k in range(tr.K)], axis=0)
        assert np.max(np.abs(prod - GRID)) <= 1e-12


def test_custom_transform_rejects_non_class_f():
    with pytest.raises(InvalidParameter):
        CustomTransforms((None, (lambda t: t**2, np.sqrt)))  # t / t^2 decreases
    with pytest.raises(InvalidParameter):
        CustomTransforms((np.sqrt,))


def test_custom_inverse_tolerance():
    tr = custom_transforms()
    y = np.linspace(0.01, 0.99, 25)
    assert_allclose(tr.f(1, 1, tr.f_inverse(1, 1, y)), y, atol=1e-11)


# --- Liebscher product -----------------------------------------------------


def test_eval_liebscher_examples():
    ex = liebscher_spec([Comonotonic(), Comonotonic()], [[1.0, 1.0], [2.0 / 3.0, 1.0 / 4.0]])
    assert_allclose(eval_liebscher(ex, [0.5, 0.5]), 2.0 ** (-17.0 / 12.0), rtol=1e-14)
    beta = 2.0 ** (7.0 / 12.0) - 1.0
    assert_allclose(eval_liebscher(ex, [0.5, 0.5]), (beta + 1.0) / 4.0, rtol=1e-14)
    assert eval_liebscher(ex, [0.0, 0.4]) == 0.0
    ind = liebscher_spec([Independence()], [[1.0, 1.0, 1.0]])
    u = np.random.default_rng(0).random((50, 3))
    assert_allclose(eval_liebscher(ind, u), u.prod(axis=1), rtol=1e-15)


SPECS = [
    liebscher_spec([Comonotonic(), Comonotonic()], [[1, 1], [0.3, 0.7]]),
    liebscher_spec([Independence(), Clayton(5.0)], [[1, 1], [0.3, 0.8]]),
    liebscher_spec([Clayton(1.5), Comonotonic(), Independence()], [[1, 1], [0.4, 0.2], [0.6, 0.5]]),
]


@pytest.mark.parametrize("spec", SPECS)
def test_liebscher_uniform_margins(spec):
    ones = np.ones_like(GRID)
    assert_allclose(eval_liebscher(spec, np.column_stack([GRID, ones])), GRID, atol=1e-15)
    assert_allclose(eval_liebscher(spec, np.column_stack([ones, GRID])), GRID, atol=1e-15)


@pytest.mark.parametrize("spec", SPECS)
def test_liebscher_is_pqd_for_pqd_bases(spec):
    pts = grid_points()
    assert np.all(eval_liebscher(spec, pts) >= pts[:, 0] * pts[:, 1] - 1e-15)


@pytest.mark.parametrize("spec", SPECS)
def test_liebscher_two_increasing(spec):
    rng = np.random.default_rng(1)
    lo = rng.random((2000, 2))
    hi = lo + rng.random((2000, 2)) * (1 - lo)
    vol = (eval_liebscher(spec, hi) - eval_liebscher(spec, np.column_stack([lo[:, 0], hi[:, 1]]))
           - eval_liebscher(spec, np.column_stack([hi[:, 0], lo[:, 1]])) + eval_liebscher(spec, lo))
    assert vol.min() >= -1e-12


def test_max_stable_fixed_point():
    # equal exponent columns across dimensions
    spec = liebscher_spec([Comonotonic(), Comonotonic(), Comonotonic()],
                          [[1, 1], [0.3, 0.3], [0.6, 0.6]])
    pts = grid_points(41)
    base = eval_liebscher(spec, pts)
    for n in (2, 3, 5):
        assert_allclose(eval_liebscher(spec, pts ** (1.0 / n)) ** n, base, atol=1e-12)


# --- Gumbel-Barnett fusion -------------------------------------------------


def test_gumbel_barnett_fused_examples():
    assert gumbel_barnett_fused_theta([0.5], [1.0]) == 0.5
    assert_allclose(gumbel_barnett_fused_theta([0.2, 0.4], [0.5, 0.5]), 0.15, rtol=1e-15)
    assert_allclose(gumbel_barnett_fused_theta([0.9, 0.9], [1 / 3, 2 / 3]), 5 * 0.9 / 9, rtol=1e-15)


@pytest.mark.parametrize("thetas, p", [((0.2, 0.4), (0.5, 0.5)), ((0.7, 0.7), (1 / 3, 2 / 3)),
                                       ((1.0, 0.3, 0.6), (0.2, 0.5, 0.3))])
def test_gumbel_barnett_fusion_pointwise(thetas, p):
    # shared exponents: P column (stick-breaking order) -> iterative matrix
    P = np.column_stack([p[::-1], p[::-1]])
    A = product_to_iterative(P)
    spec = liebscher_spec([GumbelBarnett(t) for t in thetas], A)
    fused = GumbelBarnett(gumbel_barnett_fused_theta(thetas, p))
    pts = grid_points(21)
    assert_allclose(eval_liebscher(spec, pts), fused.cdf(pts), atol=1e-12)


# --- spec validation and JSON ---------------------------------------------


def test_spec_json_round_trip():
    spec = liebscher_spec([Independence(), Clayton(5.0)], [[1, 1], [0.3, 0.8]])
    back = LiebscherSpec.loads(spec.dumps())
    assert back.bases == spec.bases
    assert_allclose(back.A, spec.A, atol=0)
    doc = json.loads(spec.dumps())
    assert doc["K"] == 2 and doc["d"] == 2 and doc["A"][0] == [1.0, 1.0]


@pytest.mark.parametrize("A, needle", [
    ([[1, 1], [1.0, 0.5]], "A[1][0]"),
    ([[1, 1], [0.5, 0.0]], "A[1][1]"),
    ([[1, 0.9], [0.5, 0.5]], "A[0][1]"),
])
def test_spec_validation_names_entry(A, needle):
    with pytest.raises(InvalidParameter) as err:
        liebscher_spec([Comonotonic(), Comonotonic()], A)
    assert needle in str(err.value)


def test_spec_rejects_inconsistent_json():
    with pytest.raises(InvalidParameter):
        LiebscherSpec.from_json({"K": 3, "d": 2, "bases": ["independence"] * 2, "A": [[1, 1], [0.5, 0.5]]})
    with pytest.raises(InvalidParameter):
        LiebscherSpec.from_json({"bases": ["independence"], "A": [[1, 1], [0.5, 0.5]]})


def test_component_cap():
    A = np.vstack([np.ones((1, 2)), np.full((K_MAX, 2), 0.5)])
    with pytest.raises(InvalidParameter):
        liebscher_spec([Independence()] * (K_MAX + 1), A)
