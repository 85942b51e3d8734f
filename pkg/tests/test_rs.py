import math

import numpy as np
import pytest

from sectlab.grid import FunctionStack, GridFunction, MeasureGrid, mixed_norm
from sectlab.operators import (
    DenseMatrixOperator,
    ONBMapOperator,
    SectorError,
    haar_scaled,
    rademacher,
    random_sectorial_matrix,
)
from sectlab.rs import (
    OperatorFamily,
    diagonal_rs_bound,
    estimate_rs_bound,
    growth_scan,
    maximal_family,
    onb_family,
    product_family,
    resolvent_family,
    rs_persistence_check,
    rs_ratio,
    rs_sectoriality_scan,
    sum_family,
)


def test_ratio_identity_single():
    I = DenseMatrixOperator.identity(3)
    x = GridFunction(I.grid, [1.0, 2.0, 3.0])
    assert rs_ratio([I], [x], 2.0) == pytest.approx(1.0, rel=1e-15)


def test_ratio_diagonal_domination():
    D = DenseMatrixOperator.diagonal([0.5, 3.0, 1.0])
    rng = np.random.default_rng(0)
    for s in (1.0, 2.0, math.inf):
        xs = [GridFunction(D.grid, rng.standard_normal(3)) for _ in range(4)]
        assert rs_ratio([D] * 4, xs, s) <= 3.0 * (1 + 1e-12)
        e = [GridFunction(D.grid, [0.0, 1.0, 0.0])] * 2
        assert rs_ratio([D] * 2, e, s) == pytest.approx(3.0, rel=1e-14)


def test_ratio_errors():
    I = DenseMatrixOperator.identity(2)
    with pytest.raises(ValueError):
        rs_ratio([I, I], [GridFunction(I.grid, [1.0, 0.0])], 2.0)
    with pytest.raises(ZeroDivisionError):
        rs_ratio([I], [GridFunction(I.grid, [0.0, 0.0])], 2.0)


@pytest.mark.parametrize("n", [2, 4, 8])
@pytest.mark.parametrize("s", [1.0, 1.5, 2.0, 4.0])
def test_onb_layers_match_counterexample(n, s):
    # Rademacher layers have |r_j| = 1, so their l^s sum is n^(1/s);
    # the Haar layers are disjoint with unit L^2 norm, giving n^(1/2)
    K = 10
    grid = MeasureGrid.uniform(1 << K)
    R = FunctionStack(grid, np.stack([rademacher(j, K) for j in range(1, n + 1)]))
    F = FunctionStack(grid, np.stack([haar_scaled(j, K) for j in range(1, n + 1)]))
    assert mixed_norm(R, s) == pytest.approx(n ** (1 / s), rel=1e-12)
    assert mixed_norm(F, s) == pytest.approx(n**0.5, rel=1e-12)
    T = ONBMapOperator(n, "T", K)
    ratio = rs_ratio([T] * n, [F.layer(j) for j in range(n)], s)
    assert ratio == pytest.approx(n ** (1 / s - 0.5), rel=1e-12)


def test_onb_growth_rate_s4():
    scan = growth_scan(lambda n: onb_family(n, "S"), 4.0, ns=(2, 4, 8), budget=20)
    assert scan.slope == pytest.approx(0.25, abs=0.025)
    assert scan.verdict == "not R_s-bounded (empirical)"


def test_onb_t_grows_below_two():
    scan = growth_scan(lambda n: onb_family(n, "T"), 1.0, ns=(2, 4, 8), budget=20)
    assert scan.slope == pytest.approx(0.5, abs=0.05)


def test_growth_scan_skips_infeasible():
    scan = growth_scan(lambda n: onb_family(n, "S"), 4.0, ns=(2, 4, 32), budget=10, skip_infeasible=True)
    assert scan.ns == [2, 4]
    assert 32 in scan.skipped
    with pytest.raises(ValueError):
        growth_scan(lambda n: onb_family(n, "S"), 4.0, ns=(2, 32), budget=10)


def test_identity_family_bound_is_one():
    fam = OperatorFamily([DenseMatrixOperator.identity(4)], "identity")
    rep = estimate_rs_bound(fam, 2.0, budget=200, seed=1)
    assert rep.best_ratio == pytest.approx(1.0, abs=1e-10)


def test_report_invariants():
    rng = np.random.default_rng(3)
    A = random_sectorial_matrix(6, rng)
    fam = resolvent_family(A, [-0.5, -2.0, 1j, -4 + 1j])
    rep = estimate_rs_bound(fam, 1.5, budget=300, seed=7)
    assert rep.witness_ratio(fam) == pytest.approx(rep.best_ratio, rel=1e-12)
    assert all(b >= a for a, b in zip(rep.trace, rep.trace[1:]))
    assert rep.to_dict()["kind"] == "lower bound"


def test_resolvent_family_on_diagonal():
    # lam R(lam, A) at lam = -t is diag(t / (t + a_i)); the exact bound is the largest entry
    a = np.array([0.5, 2.0, 9.0])
    A = DenseMatrixOperator.diagonal(a)
    ts = 2.0 ** np.arange(-4, 5)
    fam = resolvent_family(A, -ts)
    oracle = float(np.max(ts[:, None] / (ts[:, None] + a[None, :])))
    assert diagonal_rs_bound(fam.members) == pytest.approx(oracle, rel=1e-14)
    for s in (1.0, 2.0, math.inf):
        rep = estimate_rs_bound(fam, s, budget=2000, seed=0)
        assert rep.best_ratio <= oracle * (1 + 1e-12)
        assert rep.best_ratio >= 0.99 * oracle


def test_sectoriality_scan_identity():
    I = DenseMatrixOperator.identity(3)
    lams = -(2.0 ** np.arange(-6, 7))
    rep = rs_sectoriality_scan(I, 2.0, math.pi / 2, lams, budget=200)
    oracle = float(np.max(np.abs(lams / (lams - 1))))
    assert rep.best_ratio == pytest.approx(oracle, rel=1e-10)


def test_sectoriality_scan_diagonal_componentwise():
    a = np.array([1.0, 4.0]) * np.exp(1j * np.array([0.3, -0.2]))
    A = DenseMatrixOperator.diagonal(a, sector_angle=0.4)
    lams = np.array([-1.0, 2j, -3j, -0.2 + 0.5j, 5 * np.exp(2.0j)])
    rep = rs_sectoriality_scan(A, 2.0, 1.0, lams, budget=1000)
    oracle = float(np.max(np.abs(lams[:, None] / (lams[:, None] - a[None, :]))))
    assert rep.best_ratio == pytest.approx(oracle, rel=1e-3)
    assert rep.best_ratio <= oracle * (1 + 1e-12)


def test_sectoriality_scan_rejects_points_in_sector():
    I = DenseMatrixOperator.identity(2)
    with pytest.raises(SectorError):
        rs_sectoriality_scan(I, 2.0, 1.0, [0.5 + 0.1j], budget=10)
    with pytest.raises(SectorError):
        rs_sectoriality_scan(DenseMatrixOperator.diagonal([1.0, 1j], sector_angle=1.6), 2.0, 1.0, budget=10)


def test_determinism():
    rng = np.random.default_rng(4)
    A = random_sectorial_matrix(5, rng)
    fam = resolvent_family(A, [-1.0, 1j, -1j])
    r1 = estimate_rs_bound(fam, 3.0, budget=300, seed=11)
    r2 = estimate_rs_bound(fam, 3.0, budget=300, seed=11)
    assert r1.best_ratio == r2.best_ratio and r1.trace == r2.trace
    assert np.array_equal(r1.witness_inputs, r2.witness_inputs)


def test_monotone_in_budget():
    rng = np.random.default_rng(5)
    A = random_sectorial_matrix(6, rng)
    fam = resolvent_family(A, [-0.3, -1.0, 2j, -2j, -5.0])
    vals = [estimate_rs_bound(fam, 2.0, budget=b, seed=3).best_ratio for b in (100, 200, 400, 800)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_persistence_identity():
    I = DenseMatrixOperator.identity(3)
    fi = OperatorFamily([I], "identity")
    ri = estimate_rs_bound(fi, 2.0, budget=50)
    s_rep = estimate_rs_bound(sum_family(fi, fi), 2.0, budget=50)
    p_rep = estimate_rs_bound(product_family(fi, fi), 2.0, budget=50)
    assert s_rep.best_ratio == pytest.approx(2.0, rel=1e-10)
    assert p_rep.best_ratio == pytest.approx(1.0, rel=1e-10)
    rec = rs_persistence_check(ri, ri, s_rep, 2.0, "sum", certified=(1.0, 1.0))
    assert rec.passed and rec.bound == 2.0
    rec = rs_persistence_check(ri, ri, p_rep, 2.0, "product", certified=(1.0, 1.0))
    assert rec.passed and rec.bound == 1.0
    adv = rs_persistence_check(ri, ri, s_rep, 2.0, "sum")
    assert adv.advisory and adv.passed is None


def test_maximal_family_at_least_one():
    # M f >= |f| pointwise, so every tuple ratio is at least 1
    fam = maximal_family(64)
    rep = estimate_rs_bound(fam, 2.0, budget=60, seed=0)
    assert rep.best_ratio >= 1.0
    assert rep.witness_ratio(fam) == pytest.approx(rep.best_ratio, rel=1e-12)


def test_empty_family():
    with pytest.raises(ValueError):
        OperatorFamily([], "empty")
