"""Empirical R_s-bounds: lower-bound search over finite operator families.

The search alternates a power-method step on the inputs (duality maps of the
mixed norms, linear families only) with greedy swaps of the operators in the
tuple.  Every evaluated tuple is a valid witness, so best_ratio is always a
lower bound for the R_s-constant of the family.
"""

from __future__ import annotations

import cmath
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .grid import FunctionStack, GridFunction, lp_norm, mixed_norm, pointwise_lsum
from .operators import (
    DenseMatrixOperator,
    MaximalOperator,
    ONBMapOperator,
    OperatorHandle,
    SectorError,
    haar_scaled,
    rademacher,
)

__all__ = [
    "OperatorFamily",
    "RsBoundReport",
    "GrowthScan",
    "PersistenceRecord",
    "rs_ratio",
    "estimate_rs_bound",
    "growth_scan",
    "rs_sectoriality_scan",
    "rs_persistence_check",
    "resolvent_family",
    "onb_family",
    "maximal_family",
    "diagonal_rs_bound",
    "sum_family",
    "product_family",
    "default_lambda_sample",
    "worker_count",
]


def worker_count() -> int:
    env = os.environ.get("SECTLAB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValueError(f"SECTLAB_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


# -- ratios ---------------------------------------------------------------------


def _ratio_arrays(Y: np.ndarray, X: np.ndarray, w: np.ndarray, p: float, s: float) -> float:
    den = float(lp_norm(pointwise_lsum(X.T, s), w, p))
    if den == 0:
        raise ZeroDivisionError("the input tuple has zero mixed norm")
    return float(lp_norm(pointwise_lsum(Y.T, s), w, p)) / den


def rs_ratio(T_list: Sequence[OperatorHandle], x_list: Sequence[GridFunction], s: float) -> float:
    """||(sum |T_j x_j|^s)^(1/s)|| / ||(sum |x_j|^s)^(1/s)||; s = inf uses the sup."""
    if len(T_list) != len(x_list) or not T_list:
        raise ValueError("need equally many operators and inputs, at least one")
    grid = x_list[0].grid
    X = np.stack([x.values for x in x_list])
    Y = np.stack([T.apply_array(x.values) for T, x in zip(T_list, x_list)])
    den = mixed_norm(FunctionStack(grid, X), s)
    if den == 0:
        raise ZeroDivisionError("the input tuple has zero mixed norm")
    return mixed_norm(FunctionStack(grid, Y), s) / den


# -- families -------------------------------------------------------------------


@dataclass
class OperatorFamily:
    """A finite family of operators on one grid.

    witness(n) may return (member indices, (N, n) inputs) for an explicit
    extremal tuple; certified holds a known exact R_s-constant when available.
    """

    members: list
    label: str
    linear: bool = True
    witness: Callable[[int], tuple[np.ndarray, np.ndarray]] | None = None
    certified: float | None = None

    def __post_init__(self) -> None:
        if not self.members:
            raise ValueError("the operator family is empty")
        n = self.members[0].grid.n
        if any(m.grid.n != n for m in self.members):
            raise ValueError("family members live on different grids")

    @property
    def grid(self):
        return self.members[0].grid


def _apply_tuple(fam: OperatorFamily, idx: np.ndarray, X: np.ndarray) -> np.ndarray:
    if np.all(idx == idx[0]):
        return np.asarray(fam.members[idx[0]].apply_array(X), dtype=complex).reshape(X.shape)
    Y = np.empty(X.shape, dtype=complex)
    for k in np.unique(idx):
        cols = np.flatnonzero(idx == k)
        Y[:, cols] = np.asarray(fam.members[k].apply_array(X[:, cols])).reshape(X.shape[0], -1)
    return Y


def _adjoint_tuple(fam: OperatorFamily, idx: np.ndarray, Z: np.ndarray, w: np.ndarray) -> np.ndarray:
    # adjoint for the weighted pairing <f, g> = sum w f conj(g)
    U = np.empty(Z.shape, dtype=complex)
    Zw = Z * w[:, None]
    if np.all(idx == idx[0]):
        return np.asarray(fam.members[idx[0]].adjoint_array(Zw), dtype=complex).reshape(Z.shape) / w[:, None]
    for k in np.unique(idx):
        cols = np.flatnonzero(idx == k)
        U[:, cols] = np.asarray(fam.members[k].adjoint_array(Zw[:, cols])).reshape(Z.shape[0], -1) / w[:, None]
    return U


def _conj_exp(e: float) -> float:
    if e == 1.0:
        return math.inf
    if math.isinf(e):
        return 1.0
    return e / (e - 1.0)


def _norming(Y: np.ndarray, p: float, s: float) -> np.ndarray:
    """Pointwise form of a norming functional for Y in L^p(l^s), up to a positive factor."""
    a = np.abs(Y)
    with np.errstate(all="ignore"):
        sgn = np.where(a > 0, Y / np.where(a > 0, a, 1.0), 0.0)
    if math.isinf(s):
        G = a.max(axis=1)
        inner = np.zeros_like(a)
        inner[np.arange(a.shape[0]), a.argmax(axis=1)] = 1.0
    else:
        G = pointwise_lsum(a.T, s)
        peak = a.max() if a.size else 0.0
        an = a / peak if peak > 0 else a
        Gn = G / peak if peak > 0 else G
        with np.errstate(all="ignore"):
            inner = np.where(Gn[:, None] > 0, (an / np.where(Gn > 0, Gn, 1.0)[:, None]) ** (s - 1.0), 0.0)
    if math.isinf(p):
        outer = np.zeros_like(G)
        outer[G.argmax()] = 1.0
    else:
        Gmax = G.max() if G.size else 0.0
        outer = (G / Gmax) ** (p - 1.0) if Gmax > 0 else np.zeros_like(G)
    return sgn * inner * outer[:, None]


# -- report -------------------------------------------------------------------


@dataclass
class RsBoundReport:
    s: float
    family: str
    best_ratio: float
    witness_ops: list
    witness_inputs: np.ndarray = field(repr=False)
    trace: list
    n_tuples: int
    restarts: int
    seed: int
    evaluations: int
    tuple_size: int | None = None
    kind: str = "lower bound"

    def witness_ratio(self, fam: OperatorFamily) -> float:
        idx = np.asarray(self.witness_ops)
        X = self.witness_inputs
        Y = _apply_tuple(fam, idx, X)
        return _ratio_arrays(Y, X, fam.grid.weights, fam.grid.p, self.s)

    def to_dict(self, include_inputs: bool = True) -> dict:
        out = {
            "kind": self.kind,
            "s": _num(self.s),
            "family": self.family,
            "best_ratio": self.best_ratio,
            "witness": {"operators": [int(v) for v in self.witness_ops]},
            "trace": list(self.trace),
            "n_tuples": self.n_tuples,
            "restarts": self.restarts,
            "seed": self.seed,
            "evaluations": self.evaluations,
            "tuple_size": self.tuple_size,
        }
        if include_inputs and self.witness_inputs.size <= 1 << 14:
            out["witness"]["inputs"] = [[[float(z.real), float(z.imag)] for z in col] for col in self.witness_inputs.T]
        return out


def _num(v: float):
    return "inf" if math.isinf(v) else v


# -- search ---------------------------------------------------------------------


@dataclass
class _RunState:
    fam: OperatorFamily
    s: float
    budget: int
    evals: int = 0
    tuples: int = 0
    best: float = -1.0
    best_idx: np.ndarray | None = None
    best_X: np.ndarray | None = None
    trace: list = field(default_factory=list)

    def score(self, idx: np.ndarray, X: np.ndarray) -> float:
        g = self.fam.grid
        Y = _apply_tuple(self.fam, idx, X)
        self.evals += 1
        self.tuples += 1
        try:
            r = _ratio_arrays(Y, X, g.weights, g.p, self.s)
        except ZeroDivisionError:
            return -1.0
        if r > self.best:
            self.best, self.best_idx, self.best_X = r, idx.copy(), X.copy()
        return r

    @property
    def spent(self) -> bool:
        return self.evals >= self.budget


def _initial_inputs(fam: OperatorFamily, n: int, rng: np.random.Generator, kind: int) -> np.ndarray:
    N = fam.grid.n
    if kind == 0:
        X = np.zeros((N, n), dtype=complex)
        X[rng.integers(0, N, n), np.arange(n)] = 1.0
        return X
    return rng.standard_normal((N, n)) + 1j * rng.standard_normal((N, n))


def _power_step(st: _RunState, idx: np.ndarray, X: np.ndarray) -> np.ndarray:
    g = st.fam.grid
    p, s = g.p, st.s
    Y = _apply_tuple(st.fam, idx, X)
    Z = _norming(Y, p, s)
    U = _adjoint_tuple(st.fam, idx, Z, g.weights)
    Xn = _norming(U, _conj_exp(p), _conj_exp(s))
    if not np.any(Xn):
        return X
    return Xn / np.abs(Xn).max()


def _swap_step(st: _RunState, idx: np.ndarray, X: np.ndarray, rng: np.random.Generator, cur: float,
               max_try: int = 8) -> tuple[np.ndarray, float]:
    M = len(st.fam.members)
    if M == 1:
        return idx, cur
    for j in rng.permutation(idx.size):
        cands = np.arange(M) if M <= max_try else rng.choice(M, max_try, replace=False)
        for k in cands:
            if k == idx[j] or st.spent:
                continue
            trial = idx.copy()
            trial[j] = k
            r = st.score(trial, X)
            if r > cur:
                idx, cur = trial, r
    return idx, cur


def _ascend_inputs(st: _RunState, idx: np.ndarray, X: np.ndarray, cur: float) -> tuple[np.ndarray, float]:
    """One power step, then a jump to point masses at the column peaks; keeps the better."""
    Xn = _power_step(st, idx, X)
    r = st.score(idx, Xn)
    if r > cur:
        X, cur = Xn, r
    # point masses shortcut slow power iterations when the top entries are close
    Xp = np.zeros_like(X)
    cols = np.arange(X.shape[1])
    peaks = np.abs(X).argmax(axis=0)
    Xp[peaks, cols] = X[peaks, cols]
    if not st.spent and not np.array_equal(Xp, X):
        r = st.score(idx, Xp)
        if r > cur:
            X, cur = Xp, r
    return X, cur


def _perturb_step(st: _RunState, idx: np.ndarray, X: np.ndarray, rng: np.random.Generator, cur: float,
                  scale: float) -> tuple[np.ndarray, float]:
    # sublinear members have no adjoint: random local search on the inputs
    N, n = X.shape
    trial = X.copy()
    j = rng.integers(0, n)
    pts = rng.integers(0, N, max(1, N // 16))
    trial[pts, j] += scale * np.abs(X).max() * (rng.standard_normal(pts.size))
    r = st.score(idx, trial)
    if r > cur:
        return trial, r
    return X, cur


def _restart(fam: OperatorFamily, s: float, budget: int, n: int, seq: np.random.SeedSequence,
             r_index: int) -> _RunState:
    rng = np.random.default_rng(seq)
    st = _RunState(fam, s, budget)
    M = len(fam.members)
    starts = []
    if fam.witness is not None and r_index == 0:
        try:
            starts.append(fam.witness(n))
        except ValueError:
            pass
    while not st.spent:
        if starts:
            idx, X = starts.pop()
            idx, X = np.asarray(idx), np.asarray(X, dtype=complex)
        else:
            idx = rng.integers(0, M, n)
            X = _initial_inputs(fam, n, rng, kind=(st.tuples + r_index) % 2)
        cur = st.score(idx, X)
        step = 0.5
        kicks = 0
        patience = 3 if fam.linear else 20
        while not st.spent and kicks < 3:
            start_kick = cur
            stall = 0
            while not st.spent and stall < patience:
                before = cur
                if fam.linear:
                    X, cur = _ascend_inputs(st, idx, X, cur)
                else:
                    X, cur = _perturb_step(st, idx, X, rng, cur, step)
                    step = step * 0.95 if cur == before else step
                idx, cur = _swap_step(st, idx, X, rng, cur)
                st.trace.append(st.best)
                stall = stall + 1 if cur <= before * (1 + 1e-12) else 0
            kicks = 0 if cur > start_kick * (1 + 1e-9) else kicks + 1
            if not fam.linear:
                continue
            # kick: mix in noise so the power step can leave a fixed point
            noise = rng.standard_normal(X.shape) + 1j * rng.standard_normal(X.shape)
            Xk = X + 0.5 * np.abs(X).max() * noise / np.sqrt(2.0)
            X, cur = _ascend_inputs(st, idx, Xk, -1.0)
    return st


def estimate_rs_bound(family: OperatorFamily, s: float, budget: int = 2000, seed: int = 0,
                      restarts: int | None = None, tuple_size: int | None = None,
                      threads: int | None = None) -> RsBoundReport:
    """Randomized multi-restart ascent; best_ratio is a lower bound for R_s(family)."""
    if not family.members:
        raise ValueError("the operator family is empty")
    s = float(s)
    budget = int(budget)
    if budget < 1:
        raise ValueError("budget must be positive")
    if restarts is None:
        restarts = max(1, min(8, budget // 250))
    seqs = np.random.SeedSequence(int(seed)).spawn(restarts)
    per = max(1, budget // restarts)
    sizes = []
    for r in range(restarts):
        if tuple_size is not None:
            sizes.append(int(tuple_size))
        else:
            sizes.append(1 << (r % 4))
    workers = min(restarts, threads or worker_count())
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            states = list(ex.map(lambda r: _restart(family, s, per, sizes[r], seqs[r], r), range(restarts)))
    else:
        states = [_restart(family, s, per, sizes[r], seqs[r], r) for r in range(restarts)]
    # deterministic merge: max ratio, ties to the earliest restart
    best = max(range(restarts), key=lambda r: (states[r].best, -r))
    trace, run = [], -1.0
    for st in states:
        for v in st.trace:
            run = max(run, v)
            trace.append(run)
    b = states[best]
    return RsBoundReport(
        s=s,
        family=family.label,
        best_ratio=float(b.best),
        witness_ops=[int(v) for v in b.best_idx],
        witness_inputs=b.best_X,
        trace=trace,
        n_tuples=sum(st.tuples for st in states),
        restarts=restarts,
        seed=int(seed),
        evaluations=sum(st.evals for st in states),
        tuple_size=tuple_size,
    )


# -- family builders --------------------------------------------------------------


def default_lambda_sample(sigma: float, n_mod: int = 41, n_ang: int = 5, scale: float = 1.0) -> np.ndarray:
    """lambda on rays between arg = sigma and pi, moduli 2^-10 .. 2^10 times scale."""
    mods = scale * 2.0 ** np.linspace(-10, 10, n_mod)
    angs = np.linspace(sigma, math.pi, n_ang)
    lam = (mods[None, :] * np.exp(1j * angs[:, None])).ravel()
    return np.concatenate([lam, lam.conj()[np.abs(np.angle(lam)) < math.pi]])


def resolvent_family(A: OperatorHandle, lambdas: Sequence[complex]) -> OperatorFamily:
    members = [A.resolvent_member(complex(lam)) for lam in lambdas]
    return OperatorFamily(members, f"{{lam R(lam, A)}}: {A.kind}, {len(members)} points")


def onb_family(n: int, direction: str = "S") -> OperatorFamily:
    T = ONBMapOperator(n, direction)
    K = T.K

    def witness(m: int):
        m = min(m, n)
        if direction == "S":
            X = np.stack([rademacher(j, K) for j in range(1, m + 1)], axis=1)
        else:
            X = np.stack([haar_scaled(j, K) for j in range(1, m + 1)], axis=1)
        return np.zeros(m, dtype=int), X.astype(complex)

    return OperatorFamily([T], f"onb-map:{direction} rank {n}", witness=witness)


def maximal_family(n: int, p: float = 2.0) -> OperatorFamily:
    from .grid import MeasureGrid

    M = MaximalOperator(MeasureGrid.uniform(n, p))

    def witness(m: int):
        # indicators of m disjoint blocks: the s = 1 growth witness
        m = min(m, n)
        X = np.zeros((n, m), dtype=complex)
        edges = np.linspace(0, n, m + 1).astype(int)
        for j in range(m):
            X[edges[j]:edges[j + 1], j] = 1.0
        return np.zeros(m, dtype=int), X

    return OperatorFamily([M], f"maximal n={n}", linear=False, witness=witness)


def diagonal_rs_bound(members: Sequence[OperatorHandle]) -> float | None:
    """Exact R_s-constant of a family of diagonal matrices: the largest |entry|."""
    best = 0.0
    for m in members:
        if not isinstance(m, DenseMatrixOperator):
            return None
        M = m.matrix
        if np.count_nonzero(M - np.diag(np.diag(M))):
            return None
        best = max(best, float(np.abs(np.diag(M)).max()))
    return best


class _Sum(OperatorHandle):
    kind = "Sum"

    def __init__(self, a: OperatorHandle, b: OperatorHandle):
        self.a, self.b, self.grid = a, b, a.grid

    def apply_array(self, X):
        return self.a.apply_array(X) + self.b.apply_array(X)

    def adjoint_array(self, X):
        return self.a.adjoint_array(X) + self.b.adjoint_array(X)


class _Product(OperatorHandle):
    kind = "Product"

    def __init__(self, a: OperatorHandle, b: OperatorHandle):
        self.a, self.b, self.grid = a, b, a.grid

    def apply_array(self, X):
        return self.a.apply_array(self.b.apply_array(X))

    def adjoint_array(self, X):
        return self.b.adjoint_array(self.a.adjoint_array(X))


def _pairwise(fa: OperatorFamily, fb: OperatorFamily, make, label: str) -> OperatorFamily:
    members = []
    for a in fa.members:
        for b in fb.members:
            if isinstance(a, DenseMatrixOperator) and isinstance(b, DenseMatrixOperator):
                M = a.matrix + b.matrix if make is _Sum else a.matrix @ b.matrix
                members.append(DenseMatrixOperator(M, None, grid=a.grid))
            else:
                members.append(make(a, b))
    return OperatorFamily(members, f"{label}({fa.label}, {fb.label})", linear=fa.linear and fb.linear)


def sum_family(fa: OperatorFamily, fb: OperatorFamily) -> OperatorFamily:
    return _pairwise(fa, fb, _Sum, "sum")


def product_family(fa: OperatorFamily, fb: OperatorFamily) -> OperatorFamily:
    return _pairwise(fa, fb, _Product, "product")


# -- scans ------------------------------------------------------------------------


@dataclass
class GrowthScan:
    s: float
    ns: list
    ratios: list
    slope: float | None
    r_squared: float | None
    verdict: str
    skipped: dict
    reports: list = field(repr=False, default_factory=list)

    def to_dict(self) -> dict:
        return {
            "s": _num(self.s),
            "n": list(self.ns),
            "best_ratio": list(self.ratios),
            "slope": self.slope,
            "r_squared": self.r_squared,
            "verdict": self.verdict,
            "skipped": {str(k): v for k, v in self.skipped.items()},
        }


def _fit(ns: Sequence[int], ratios: Sequence[float]) -> tuple[float, float]:
    x = np.log(np.asarray(ns, dtype=float))
    y = np.log(np.asarray(ratios, dtype=float))
    slope, icpt = np.polyfit(x, y, 1)
    resid = y - (slope * x + icpt)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((resid**2).sum()) / ss_tot if ss_tot > 0 else (1.0 if abs(slope) < 1e-12 else 0.0)
    return float(slope), float(r2)


def growth_scan(make_family: Callable[[int], OperatorFamily], s: float, ns: Sequence[int] = (2, 4, 8, 16, 32),
                budget: int = 400, seed: int = 0, skip_infeasible: bool = False,
                slope_min: float = 0.1, r2_min: float = 0.9) -> GrowthScan:
    """best_ratio at tuple size n for each n; log-log slope decides empirical growth.

    make_family(n) builds the family used at size n.  With skip_infeasible a
    family that cannot be built (e.g. a grid beyond the size limit) is recorded
    under skipped instead of raising.
    """
    used, ratios, reports, skipped = [], [], [], {}
    for n in ns:
        try:
            fam = make_family(int(n))
        except ValueError as exc:
            if not skip_infeasible:
                raise
            skipped[int(n)] = str(exc)
            continue
        rep = estimate_rs_bound(fam, s, budget=budget, seed=seed, restarts=1, tuple_size=int(n), threads=1)
        used.append(int(n))
        ratios.append(rep.best_ratio)
        reports.append(rep)
    slope = r2 = None
    verdict = "insufficient data"
    if len(used) >= 2:
        slope, r2 = _fit(used, ratios)
        verdict = "not R_s-bounded (empirical)" if (slope > slope_min and r2 > r2_min) else "no growth detected"
    return GrowthScan(float(s), used, ratios, slope, r2, verdict, skipped, reports)


def rs_sectoriality_scan(A: OperatorHandle, s: float, sigma: float, lambdas: Sequence[complex] | None = None,
                         budget: int = 2000, seed: int = 0) -> RsBoundReport:
    """Lower estimate of the R_s-sectoriality constant over lambda outside the sector sigma."""
    if A.sector_angle is None:
        raise SectorError("operator has no declared sector")
    if not sigma > A.sector_angle:
        raise SectorError(f"sigma={sigma} must exceed the sector angle {A.sector_angle}")
    if lambdas is None:
        a_min, a_max = A.spectral_bounds()
        lambdas = default_lambda_sample(sigma, scale=math.sqrt(a_min * a_max))
    lambdas = [complex(v) for v in lambdas]
    for lam in lambdas:
        if lam == 0 or abs(cmath.phase(lam)) < sigma - 1e-12:
            raise SectorError(f"lambda={lam} lies inside the sector of angle {sigma}")
    fam = resolvent_family(A, lambdas)
    return estimate_rs_bound(fam, s, budget=budget, seed=seed)


@dataclass
class PersistenceRecord:
    operation: str
    s: float
    estimates: dict
    bound: float | None
    passed: bool | None
    advisory: bool

    def to_dict(self) -> dict:
        return {
            "operation": self.operation,
            "s": _num(self.s),
            "estimates": self.estimates,
            "bound": self.bound,
            "passed": self.passed,
            "advisory": self.advisory,
        }


def rs_persistence_check(report_a: RsBoundReport, report_b: RsBoundReport, combined: RsBoundReport, s: float,
                         operation: str = "sum", certified: tuple[float, float] | None = None) -> PersistenceRecord:
    """Sum/product rule check against certified bounds; advisory when none exist."""
    if operation not in ("sum", "product"):
        raise ValueError("operation must be 'sum' or 'product'")
    est = {"a": report_a.best_ratio, "b": report_b.best_ratio, "combined": combined.best_ratio}
    if certified is None:
        return PersistenceRecord(operation, float(s), est, None, None, True)
    ca, cb = certified
    bound = ca + cb if operation == "sum" else ca * cb
    passed = combined.best_ratio <= bound * (1 + 1e-12)
    return PersistenceRecord(operation, float(s), est, float(bound), bool(passed), False)
