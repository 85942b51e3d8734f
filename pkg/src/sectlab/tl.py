"""Experiment harness: measured equivalence constants, H^inf bounds, embeddings,
the interpolation retraction and shift invariance, all with refinement checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .funcalc import ContourSpec, scaled_batch, symbols_batch
from .grid import GridFunction, lp_norm, pointwise_lsum
from .norms import NormResult, NormSpec, continuous_dyadic_pair, evaluate
from .operators import DenseMatrixOperator, FourierMultiplierOperator, OperatorHandle, ShiftedOperator
from .symbols import (
    CertificationError,
    Symbol,
    blaschke,
    builtin_symbol,
    cayley,
    exp_tau,
    lacunary,
)

__all__ = [
    "EquivalenceReport",
    "input_suite",
    "fourier_suite",
    "sample_fourier_suite",
    "lp_partition",
    "littlewood_paley_norm",
    "default_hinf_schedule",
    "norm_equivalence_experiment",
    "discrete_equivalence_experiment",
    "hinf_tl_bound_experiment",
    "laplacian_littlewood_paley_experiment",
    "embedding_experiment",
    "retraction_experiment",
    "shift_invariance_experiment",
]

DEGENERATE = 1e-12


@dataclass
class EquivalenceReport:
    pair: str
    ratios: list
    min_ratio: float | None
    max_ratio: float | None
    refinement: list
    verdict: str
    skipped: int = 0
    details: dict = field(default_factory=dict)

    @classmethod
    def build(cls, pair: str, ratios: np.ndarray, refinement: list, verdict: str, skipped: int = 0,
              details: dict | None = None) -> "EquivalenceReport":
        r = [float(v) for v in np.asarray(ratios, dtype=float).ravel()]
        return cls(pair, r, min(r) if r else None, max(r) if r else None, refinement, verdict, skipped,
                   details or {})

    @property
    def stable(self) -> bool:
        return self.verdict == "stable"

    def to_dict(self) -> dict:
        return {
            "pair": self.pair,
            "min_ratio": self.min_ratio,
            "max_ratio": self.max_ratio,
            "verdict": self.verdict,
            "skipped": self.skipped,
            "refinement": self.refinement,
            "ratios": self.ratios,
            "details": self.details,
        }


# -- input suites -----------------------------------------------------------------


def sample_fourier_suite(coeffs: np.ndarray, N: int) -> np.ndarray:
    """Sample trigonometric polynomials sum_k c_k e^{ik x} (k = -K..K) on N points."""
    K = (coeffs.shape[0] - 1) // 2
    if 2 * K >= N:
        raise ValueError("grid too coarse for the suite band")
    x = 2.0 * np.pi * np.arange(N) / N
    k = np.arange(-K, K + 1)
    return np.exp(1j * np.outer(x, k)) @ coeffs


def fourier_suite(size: int, seed: int = 0, band: int = 100) -> np.ndarray:
    """(2 band + 1, size) mean-zero coefficient vectors, independent of any grid size.

    Columns cycle through: smooth random (decaying coefficients), rough random
    (flat spectrum up to the band), the lowest mode and the top mode.
    """
    rng = np.random.default_rng(seed)
    k = np.arange(-band, band + 1)
    C = np.zeros((k.size, size), dtype=complex)
    for c in range(size):
        kind = c % 4
        g = rng.standard_normal(k.size) + 1j * rng.standard_normal(k.size)
        if kind == 0:
            C[:, c] = g / (1.0 + np.abs(k)) ** 1.5
        elif kind == 1:
            C[:, c] = g
        elif kind == 2:
            C[k == 1, c] = 1.0
            C[k == -1, c] = rng.standard_normal()
        else:
            C[k == band, c] = 1.0
            C[k == -band, c] = rng.standard_normal()
        C[k == 0, c] = 0.0
    return C


def input_suite(A: OperatorHandle, size: int, seed: int = 0, band: int | None = None) -> np.ndarray:
    """(N, size) seeded inputs mixing coordinate, random and near-kernel/near-top vectors."""
    base = A.base if isinstance(A, ShiftedOperator) else A
    N = A.n
    if isinstance(base, FourierMultiplierOperator):
        band = band if band is not None else max(1, min(100, N // 8))
        return sample_fourier_suite(fourier_suite(size, seed, band), N)
    rng = np.random.default_rng(seed)
    X = np.zeros((N, size), dtype=complex)
    eig = base.eig() if isinstance(base, DenseMatrixOperator) else None
    order = np.argsort(np.abs(eig[0])) if eig is not None else None
    for c in range(size):
        kind = c % 4
        if kind == 0:
            X[(c // 4) % N, c] = 1.0
        elif kind == 1 or eig is None:
            X[:, c] = rng.standard_normal(N) + 1j * rng.standard_normal(N)
        else:
            V = eig[1]
            pick = order[(c // 4) % max(1, min(3, N))] if kind == 2 else order[-1 - (c // 4) % max(1, min(3, N))]
            v = V[:, pick] / np.abs(V[:, pick]).max()
            X[:, c] = v + 1e-3 * (rng.standard_normal(N) + 1j * rng.standard_normal(N))
    return X


# -- Littlewood-Paley ------------------------------------------------------------------


def _smooth_step(u: np.ndarray) -> np.ndarray:
    # 0 for u <= 0, 1 for u >= 1, C^infinity in between
    u = np.asarray(u, dtype=float)
    out = np.where(u >= 1.0, 1.0, 0.0)
    mid = (u > 0) & (u < 1)
    a = np.exp(-1.0 / u[mid])
    b = np.exp(-1.0 / (1.0 - u[mid]))
    out[mid] = a / (a + b)
    return out


def _psi0(r: np.ndarray) -> np.ndarray:
    """1 on [0, 1], 0 on [2, inf)."""
    return _smooth_step(2.0 - np.asarray(r, dtype=float))


def lp_partition(freqs: np.ndarray, J: int | None = None) -> np.ndarray:
    """(J + 1, len(freqs)) bumps chi_0 = psi0(|xi|), chi_j = psi0(2^-j |xi|) - psi0(2^(1-j) |xi|).

    chi_j lives on 2^(j-1) <= |xi| <= 2^(j+1), every xi meets at most two bumps,
    and the rows sum to 1 for |xi| <= 2^J.
    """
    r = np.abs(np.asarray(freqs, dtype=float))
    if J is None:
        J = int(math.ceil(math.log2(max(r.max(), 1.0)))) + 1
    rows = [_psi0(r)]
    for j in range(1, J + 1):
        rows.append(_psi0(r / 2.0**j) - _psi0(r / 2.0 ** (j - 1)))
    return np.array(rows)


def littlewood_paley_norm(X: np.ndarray, p: float, s: float, alpha: float) -> np.ndarray:
    """||(sum_j |2^(alpha j) chi_j(D) x|^s)^(1/s)||_p on [0, 2 pi) with weights 2 pi / N."""
    X = np.asarray(X, dtype=complex)
    single = X.ndim == 1
    if single:
        X = X[:, None]
    N = X.shape[0]
    k = np.fft.fftfreq(N, d=1.0 / N)
    chi = lp_partition(k)
    Xh = np.fft.fft(X, axis=0)
    scale = 2.0 ** (alpha * np.arange(chi.shape[0]))
    layers = np.fft.ifft((scale[:, None] * chi)[:, :, None] * Xh[None], axis=1)
    g = pointwise_lsum(layers, s)
    out = lp_norm(g, np.full(N, 2.0 * math.pi / N), p)
    return float(out[0]) if single else out


# -- helpers ------------------------------------------------------------------------


def _widen(res: NormResult, spec: NormSpec, level: int) -> NormSpec:
    """Window with 2^level times the log-width and 2^level times the nodes per octave."""
    if level == 0:
        return spec
    f = 2.0**level
    if spec.discrete:
        lo, hi = res.window
        c, h = 0.5 * (lo + hi), 0.5 * (hi - lo)
        return replace(spec, j_range=(math.floor(c - f * h), math.ceil(c + f * h)))
    lo, hi = (math.log2(v) for v in res.window)
    q = spec.nodes_per_octave * int(f)
    if spec.mode == "unit_interval":
        return replace(spec, t_range=(2.0 ** (f * lo), 1.0), nodes_per_octave=q)
    c, h = 0.5 * (lo + hi), 0.5 * (hi - lo)
    return replace(spec, t_range=(2.0 ** (c - f * h), 2.0 ** (c + f * h)), nodes_per_octave=q)


def _levels(A: OperatorHandle, spec: NormSpec, X: np.ndarray, levels: int) -> list[np.ndarray]:
    base = evaluate(A, spec, X)
    out = [base.values]
    for lvl in range(1, levels + 1):
        out.append(evaluate(A, _widen(base, spec, lvl), X).values)
    return out


def _interval_change(prev: tuple[float, float], cur: tuple[float, float]) -> float:
    return max(abs(cur[0] / prev[0] - 1.0), abs(cur[1] / prev[1] - 1.0))


def _refinement(ratio_levels: list[np.ndarray], threshold: float) -> tuple[list, str]:
    trace = []
    verdict = "stable"
    prev = None
    for lvl, r in enumerate(ratio_levels):
        cur = (float(r.min()), float(r.max())) if r.size else None
        entry = {"level": lvl, "min": cur[0] if cur else None, "max": cur[1] if cur else None}
        if prev is not None and cur is not None:
            ch = _interval_change(prev, cur)
            entry["change"] = ch
            if not ch < threshold:
                verdict = "unstable"
        trace.append(entry)
        prev = cur
    if not ratio_levels or not ratio_levels[-1].size:
        verdict = "unstable"
    return trace, verdict


def _inputs(A: OperatorHandle, X) -> np.ndarray:
    if isinstance(X, GridFunction):
        X = X.values[:, None]
    X = np.asarray(X, dtype=complex)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] != A.n:
        raise ValueError(f"inputs must have {A.n} rows")
    return X


# -- experiments ---------------------------------------------------------------------


def norm_equivalence_experiment(A: OperatorHandle, theta: float, s: float, phi: Symbol, psi: Symbol, X,
                                levels: int = 1, threshold: float = 0.05, nodes_per_octave: int = 8,
                                mode: str = "continuous") -> EquivalenceReport:
    """Ratios ||x||_{theta,s,phi} / ||x||_{theta,s,psi} with a refinement check."""
    X = _inputs(A, X)
    sp = NormSpec(theta, s, phi, mode=mode, nodes_per_octave=nodes_per_octave)
    sq = NormSpec(theta, s, psi, mode=mode, nodes_per_octave=nodes_per_octave)
    vp = _levels(A, sp, X, levels)
    vq = _levels(A, sq, X, levels)
    live = ~((vp[0] < DEGENERATE) & (vq[0] < DEGENERATE))
    ratio_levels = [a[live] / b[live] for a, b in zip(vp, vq)]
    trace, verdict = _refinement(ratio_levels, threshold)
    return EquivalenceReport.build(f"{phi.spec} vs {psi.spec} (theta={theta}, s={s})", ratio_levels[-1], trace,
                                   verdict, int((~live).sum()))


def discrete_equivalence_experiment(A: OperatorHandle, theta: float, s: float, phi: Symbol, X, levels: int = 1,
                                    threshold: float = 0.05, nodes_per_octave: int = 8) -> EquivalenceReport:
    """Continuous vs dyadic norms from one lattice-aligned stack.

    The dyadic norm is an exact sub-sum of the continuous one; details record
    whether h^(1/s) ||x||_dyadic <= ||x||_continuous held bitwise for every input.
    """
    X = _inputs(A, X)
    spec = NormSpec(theta, s, phi, nodes_per_octave=nodes_per_octave)
    if not phi.admits_theta(theta, discrete=True):
        raise CertificationError(f"{phi.spec} is not certified in class PhiSigma at theta={theta}")
    base = evaluate(A, spec, X)
    ratio_levels, exact = [], True
    live = None
    for lvl in range(levels + 1):
        cont, sub, h = continuous_dyadic_pair(A, _widen(base, spec, lvl), X)
        exact = exact and bool(np.all(sub <= cont))
        dyad = sub / h ** (0.0 if math.isinf(s) else 1.0 / s)
        if live is None:
            live = ~((cont < DEGENERATE) & (dyad < DEGENERATE))
        ratio_levels.append(cont[live] / dyad[live])
    trace, verdict = _refinement(ratio_levels, threshold)
    return EquivalenceReport.build(f"continuous vs dyadic {phi.spec} (theta={theta}, s={s})", ratio_levels[-1],
                                   trace, verdict, int((~live).sum()), {"exact_subsum": exact})


def default_hinf_schedule(stages: Sequence[int] = (1, 2, 4, 8, 16), sigma: float = 0.45 * math.pi) -> list[list[Symbol]]:
    """Nested families bounded by 1: e^{-tau z}, Cayley maps, a Blaschke-type product
    and an alternating lacunary partial sum, with tau = 2^-n .. 2^n at stage n."""
    out = []
    for n in stages:
        taus = [2.0**e for e in range(-n, n + 1)]
        fam = [exp_tau(t, sigma) for t in taus] + [cayley(t, sigma) for t in taus]
        fam.append(blaschke(taus, sigma))
        fam.append(lacunary([(-1.0) ** k / n for k in range(n)], 2.0**-n, sigma))
        out.append(fam)
    return out


def hinf_tl_bound_experiment(A: OperatorHandle, theta: float, s: float, phi: Symbol, X,
                             schedule: list[list[Symbol]] | None = None, plateau: float = 0.02,
                             nodes_per_octave: int = 8) -> EquivalenceReport:
    """sup over a growing family of ||f(A)x||_{theta,s} / ||x||_{theta,s}."""
    X = _inputs(A, X)
    schedule = schedule if schedule is not None else default_hinf_schedule()
    for fam in schedule:
        for f in fam:
            if f.sup_bound is None or f.sup_bound > 1.0 + 1e-9:
                raise CertificationError(f"{f.spec} is not certified bounded by 1 on its sector")
    spec = NormSpec(theta, s, phi, nodes_per_octave=nodes_per_octave)
    xnorm = evaluate(A, spec, X).values
    live = xnorm >= DEGENERATE
    Xl = X[:, live]
    m = Xl.shape[1]
    ratios_by_symbol: dict[int, np.ndarray] = {}
    stage_sups, stage_sizes = [], []
    for fam in schedule:
        new = [f for f in fam if id(f) not in ratios_by_symbol]
        if new:
            imgs, _ = symbols_batch(A, new, ContourSpec(), Xl)
            Y = np.concatenate(list(imgs), axis=1)
            vals = evaluate(A, spec, Y).values.reshape(len(new), m)
            for f, v in zip(new, vals):
                ratios_by_symbol[id(f)] = v / xnorm[live]
        per = np.array([ratios_by_symbol[id(f)] for f in fam])
        stage_sups.append(float(per.max()))
        stage_sizes.append(len(fam))
    final = np.array([ratios_by_symbol[id(f)] for f in schedule[-1]]).max(axis=0)
    increase = (stage_sups[-1] - stage_sups[-2]) / stage_sups[-2] if len(stage_sups) > 1 else 0.0
    verdict = "stable" if increase < plateau else "unstable"
    trace = [{"level": i, "family_size": n, "sup": v} for i, (n, v) in enumerate(zip(stage_sizes, stage_sups))]
    return EquivalenceReport.build(f"||f(A)x|| vs ||x|| (theta={theta}, s={s}, {phi.spec})", final, trace, verdict,
                                   int((~live).sum()), {"final_increase": increase, "plateau": plateau})


def laplacian_littlewood_paley_experiment(N: int, m: int, p: float, s: float, theta: float, suite_size: int = 50,
                                          seed: int = 0, band: int = 100, k: float | None = None,
                                          levels: int = 1, threshold: float = 0.05, coeffs: np.ndarray | None = None,
                                          nodes_per_octave: int = 8) -> EquivalenceReport:
    """Operator norm for (-Delta)^m against the classical Littlewood-Paley norm.

    The suite is a set of trigonometric polynomials fixed independently of N;
    each refinement level doubles N.
    """
    if not (1 < p < math.inf and 1 < s < math.inf):
        raise ValueError("p and s must lie in (1, inf)")
    if k is None:
        k = 1.0 if abs(theta) < 1 else abs(theta) + 1.0
    if not k > abs(theta):
        raise ValueError("need k > |theta|")
    phi = builtin_symbol("exp_frac", k, m)
    C = coeffs if coeffs is not None else fourier_suite(suite_size, seed, band)
    K = (C.shape[0] - 1) // 2
    ratio_levels, oracle = [], None
    for lvl in range(levels + 1):
        n_grid = N * 2**lvl
        if not K < n_grid // 4:
            raise ValueError(f"inputs must be band-limited below N/4 (band {K}, N {n_grid})")
        A = FourierMultiplierOperator.laplacian(n_grid, power=m, p=p)
        X = sample_fourier_suite(C, n_grid)
        tl = evaluate(A, NormSpec(theta, s, phi, nodes_per_octave=nodes_per_octave), X).values
        lp = littlewood_paley_norm(X, p, s, 2.0 * m * theta)
        live = ~((tl < DEGENERATE) & (lp < DEGENERATE))
        ratio_levels.append(tl[live] / lp[live])
    trace, verdict = _refinement(ratio_levels, threshold)
    return EquivalenceReport.build(f"TL(laplacian^{m}, {phi.spec}) vs Littlewood-Paley (p={p}, s={s}, theta={theta})",
                                   ratio_levels[-1], trace, verdict, 0, {"N": N, "band": K, "symbol": phi.spec})


def embedding_experiment(A: OperatorHandle, thetas: Sequence[float], ss: Sequence[float], X,
                         phi: Symbol | None = None, levels: int = 1, threshold: float = 0.05,
                         nodes_per_octave: int = 8) -> EquivalenceReport:
    """(i) r <= s: ||x||_{theta,s} <= ||x||_{theta,r} on one dyadic window;
    (ii) theta <= theta': ||x||_{X^theta} <= C ||x||_{X^theta'} (inhomogeneous)."""
    X = _inputs(A, X)
    phi = phi if phi is not None else builtin_symbol("rho", 1)
    thetas = sorted(float(t) for t in thetas)
    ss = sorted(float(v) for v in ss)
    nested = {}
    nested_ok = True
    for th in thetas:
        specs = [NormSpec(th, s, phi, mode="dyadic") for s in ss]
        wins = [evaluate(A, sp, X).window for sp in specs]
        jr = (min(w[0] for w in wins), max(w[1] for w in wins))
        vals = [evaluate(A, replace(sp, j_range=jr), X).values for sp in specs]
        for a in range(len(ss)):
            for b in range(a + 1, len(ss)):
                live = vals[a] >= DEGENERATE
                ratio = vals[b][live] / vals[a][live]
                worst = float(ratio.max()) if ratio.size else None
                nested[f"theta={th} s={ss[b]} over r={ss[a]}"] = worst
                if worst is not None and worst > 1.0 + 1e-12:
                    nested_ok = False
    pairs = [(a, b) for i, a in enumerate(thetas) for b in thetas[i + 1:] if a >= 0]
    domination = {}
    main_levels = None
    for a, b in pairs:
        sa = NormSpec(a, ss[0], phi, inhomogeneous=True, nodes_per_octave=nodes_per_octave)
        sb = NormSpec(b, ss[0], phi, inhomogeneous=True, nodes_per_octave=nodes_per_octave)
        va, vb = _levels(A, sa, X, levels), _levels(A, sb, X, levels)
        rl = [x / y for x, y in zip(va, vb)]
        domination[f"theta={a} over theta'={b}"] = float(rl[-1].max())
        if main_levels is None:
            main_levels = rl
    if main_levels is None:
        trace, verdict, ratios = [], ("stable" if nested_ok else "unstable"), np.array([])
    else:
        trace, verdict = _refinement(main_levels, threshold)
        ratios = main_levels[-1]
        if not nested_ok:
            verdict = "unstable"
    return EquivalenceReport.build(f"embeddings {phi.spec} thetas={thetas} s={ss}", ratios, trace, verdict, 0,
                                   {"nested_lsum": nested, "nested_ok": nested_ok, "inhom_domination": domination})


def retraction_experiment(A: OperatorHandle, alpha: float, theta: float, s: float, N: int, X,
                          exploratory: bool = False, tol: float = 1e-6, seed: int = 0,
                          nodes_per_octave: int = 8) -> EquivalenceReport:
    """Jx = (phi(2^j A) x)_{|j|<=N}, P(y) = -sum psi(2^j A) y_j; PJx -> x.

    phi psi = -z/((1+z)(2+z)) telescopes to -1, hence the sign in P.  Norms use
    z^alpha/(1+z), admissible on the same theta strip.
    """
    X = _inputs(A, X)
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if not alpha - 1 < theta < alpha and not exploratory:
        raise ValueError(f"theta={theta} lies outside the strip ({alpha - 1}, {alpha})")
    phi = builtin_symbol("interp_phi", alpha)
    psi = builtin_symbol("interp_psi", alpha)
    rho = builtin_symbol("interp_rho", alpha)
    js = np.arange(-N, N + 1)
    ts = 2.0 ** js.astype(float)
    Jb, _ = scaled_batch(A, phi, ts)
    Pb, _ = scaled_batch(A, psi, ts)
    Y = Jb.apply(X)
    PJ = -Pb.apply_each(Y).sum(axis=0)
    R = PJ - X
    spec = NormSpec(theta, s, rho, nodes_per_octave=nodes_per_octave)
    nx = evaluate(A, spec, X).values
    live = nx >= DEGENERATE
    nres = evaluate(A, spec, R[:, live]).values
    npj = evaluate(A, spec, PJ[:, live]).values
    residual = nres / nx[live]
    w, p = A.grid.weights, A.grid.p
    wj = 2.0 ** (-js * theta)

    def seq_norm(Ys):
        return lp_norm(pointwise_lsum(wj[:, None, None] * Ys, s), w, p)

    bound_J = float((seq_norm(Y[:, :, live]) / nx[live]).max())
    rng = np.random.default_rng(seed)
    mr = min(8, X.shape[1])
    Yr = rng.standard_normal((js.size, A.n, mr)) + 1j * rng.standard_normal((js.size, A.n, mr))
    Py = -Pb.apply_each(Yr).sum(axis=0)
    bound_P = float((evaluate(A, spec, Py).values / seq_norm(Yr)).max())
    details = {
        "N": N,
        "alpha": alpha,
        "residual": [float(v) for v in residual],
        "max_residual": float(residual.max()) if residual.size else None,
        "bound_J": bound_J,
        "bound_P": bound_P,
        "tol": tol,
    }
    spec_vals = _eigen_or_none(A)
    if spec_vals is not None:
        a = spec_vals
        b = np.abs(1.0 / (1.0 + 2.0**N * a)) + np.abs(2.0 ** (-N - 1) * a / (1.0 + 2.0 ** (-N - 1) * a))
        details["scalar_boundary_bound"] = float(b.max())
    verdict = "stable" if residual.size and residual.max() <= tol else "unstable"
    return EquivalenceReport.build(f"PJx vs x (alpha={alpha}, theta={theta}, s={s}, N={N})", npj / nx[live],
                                   [{"level": 0, "max_residual": details["max_residual"]}], verdict,
                                   int((~live).sum()), details)


def _eigen_or_none(A: OperatorHandle) -> np.ndarray | None:
    try:
        return np.asarray(A.spectrum())
    except NotImplementedError:
        return None


def shift_invariance_experiment(A: OperatorHandle, eps: float, theta: float, s: float, X,
                                phi: Symbol | None = None, levels: int = 1, threshold: float = 0.05,
                                nodes_per_octave: int = 8) -> EquivalenceReport:
    """(ii) ||x||_{X^theta_{s,A}} / ||x||_{X^theta_{s,A+eps}}; (i) inhomogeneous over
    homogeneous norm when A is invertible."""
    if theta <= 0:
        raise ValueError("theta must be positive")
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    X = _inputs(A, X)
    phi = phi if phi is not None else builtin_symbol("rho", 1)
    spec = NormSpec(theta, s, phi, inhomogeneous=True, nodes_per_octave=nodes_per_octave)
    va = _levels(A, spec, X, levels)
    if eps == 0:
        vb = va
    else:
        vb = _levels(ShiftedOperator(A, 1.0, eps), spec, X, levels)
    rl = [a / b for a, b in zip(va, vb)]
    trace, verdict = _refinement(rl, threshold)
    details: dict = {"eps": eps}
    spectrum = _eigen_or_none(A)
    if spectrum is not None and np.all(spectrum != 0):
        hom = evaluate(A, replace(spec, inhomogeneous=False), X)
        xn = hom.x_norms
        ratio_i = (hom.values + xn) / hom.values
        details["inhom_over_hom"] = {"min": float(ratio_i.min()), "max": float(ratio_i.max())}
    else:
        details["inhom_over_hom"] = None
    return EquivalenceReport.build(f"X^theta(A) vs X^theta(A+{eps}) (theta={theta}, s={s}, {phi.spec})", rl[-1],
                                   trace, verdict, 0, details)
