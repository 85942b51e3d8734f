"""s-power function norms: continuous, dyadic, [0,1]-truncated and Besov-type.

Layers t^-theta phi(tA)x are produced by the shared contour lattice.  Windows are
chosen (or checked) with an explicit tail bound built from the decay envelope

    |z^-theta phi(z)| <= C min(|z|^b0, |z|^-binf)

on the sector of A, the spectral moduli of A and a calculus constant K with
||f(A)|| <= K sup_spec |f|.  A window is accepted when the bound is below
tail_tol times the computed norm.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Iterator

import numpy as np

from .funcalc import LN2, ContourSpec, make_plan, scaled_batch
from .grid import GridFunction, layer_power_sum, lp_norm, pointwise_lsum
from .operators import OperatorHandle
from .symbols import CertificationError, Symbol, _sample

__all__ = [
    "MODES",
    "NormSpec",
    "NormResult",
    "TruncationError",
    "TruncationWarning",
    "evaluate",
    "spower_norm_continuous",
    "spower_norm_dyadic",
    "inhom_norm",
    "besov_norm_dyadic",
    "unit_interval_norm",
    "continuous_dyadic_pair",
    "theta_envelope",
]

MODES = ("continuous", "dyadic", "unit_interval", "besov_dyadic")
_DISCRETE = ("dyadic", "besov_dyadic")
_MAX_OCTAVES = 400
_CHUNK = 1 << 22
_BATCH_LIMIT = 1 << 23


class TruncationError(ArithmeticError):
    """The tail bound of a continuous window exceeds the tolerance."""


class TruncationWarning(UserWarning):
    pass


@dataclass(frozen=True)
class NormSpec:
    """theta, s, the auxiliary symbol and the index window.

    t_range None or j_range None means the window is chosen automatically.
    nodes_per_octave fixes the log-uniform t-grid t = 2^(i/q).
    """

    theta: float
    s: float
    phi: Symbol
    mode: str = "continuous"
    t_range: tuple[float, float] | None = None
    nodes_per_octave: int = 8
    j_range: tuple[int, int] | None = None
    inhomogeneous: bool = False
    tail_tol: float = 1e-6
    contour: ContourSpec = field(default_factory=ContourSpec)
    strict: bool = True

    def __post_init__(self) -> None:
        s = float(self.s)
        if math.isnan(s) or s < 1:
            raise ValueError(f"s must lie in [1, inf], got {self.s}")
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "theta", float(self.theta))
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.tail_tol <= 0:
            raise ValueError("tail_tol must be positive")
        if int(self.nodes_per_octave) < 1:
            raise ValueError("nodes_per_octave must be at least 1")
        if self.t_range is not None:
            lo, hi = (float(v) for v in self.t_range)
            if not 0 < lo < hi:
                raise ValueError("t-range needs 0 < t_min < t_max")
        if self.j_range is not None:
            lo, hi = self.j_range
            if int(lo) != lo or int(hi) != hi or lo > hi:
                raise ValueError("j-range needs integers j_min <= j_max")
        discrete = self.mode in _DISCRETE
        if not self.phi.admits_theta(self.theta, discrete=discrete):
            tag = "PhiSigma" if discrete else "Phi"
            raise CertificationError(f"{self.phi.spec} is not certified in class {tag} at theta={self.theta}")
        if self.mode == "besov_dyadic" and not 0 < self.theta < 1:
            raise ValueError("the Besov-type norm needs 0 < theta < 1")

    @property
    def discrete(self) -> bool:
        return self.mode in _DISCRETE


@dataclass(frozen=True)
class NormResult:
    values: np.ndarray
    spec: NormSpec
    window: tuple
    tail_bound: np.ndarray
    n_layers: int
    x_norms: np.ndarray
    plan: dict
    converged: bool

    @property
    def value(self) -> float:
        return float(self.values[0])

    def to_dict(self) -> dict:
        sp = self.spec
        return {
            "mode": sp.mode,
            "theta": sp.theta,
            "s": sp.s,
            "symbol": sp.phi.spec,
            "inhomogeneous": sp.inhomogeneous,
            "values": [float(v) for v in self.values],
            "window": list(self.window),
            "tail_bound": [float(v) for v in self.tail_bound],
            "n_layers": self.n_layers,
            "nodes_per_octave": sp.nodes_per_octave if sp.mode in ("continuous", "unit_interval") else None,
            "converged": self.converged,
            "quadrature": self.plan,
        }


# -- tail envelope ---------------------------------------------------------------

_ENVELOPES: dict = {}


def theta_envelope(phi: Symbol, theta: float, angle: float) -> tuple[float, float, float]:
    """(C, b0, binf) with |z^-theta phi(z)| <= C min(|z|^b0, |z|^-binf) for |arg z| <= angle."""
    key = (id(phi.func), phi.sigma, theta, angle)
    if key in _ENVELOPES:
        return _ENVELOPES[key]
    lo, hi = phi.theta_range
    b0 = min(hi - theta, 4.0)
    binf = min(theta - lo, 4.0)
    if b0 <= 0 or binf <= 0:
        raise CertificationError(f"theta={theta} lies outside the admissible range of {phi.spec}")
    z = _sample(max(angle, 0.0))
    with np.errstate(all="ignore"):
        v = np.abs(np.exp(-theta * np.log(z)) * phi(z))
        r = np.abs(z)
        q = v / np.minimum(r**b0, r ** (-binf))
    q = np.where(v == 0, 0.0, q)
    if not np.all(np.isfinite(q)):
        raise CertificationError(f"decay envelope of {phi.spec} at theta={theta} is not finite")
    out = (float(q.max()) * 1.05, b0, binf)
    _ENVELOPES[key] = out
    return out


@dataclass(frozen=True)
class _Tails:
    coef_low: float
    coef_high: float
    b0: float
    binf: float
    s: float

    def _den(self, b: float, discrete: bool) -> float:
        if math.isinf(self.s):
            return 1.0
        if discrete:
            return (1.0 - 2.0 ** (-b * self.s)) ** (1.0 / self.s)
        return (b * self.s) ** (1.0 / self.s)

    def low(self, edge: float, discrete: bool) -> float:
        # edge is t_min, or j_min for dyadic windows
        if discrete:
            return self.coef_low * 2.0 ** ((edge - 1) * self.b0) / self._den(self.b0, True)
        return self.coef_low * edge**self.b0 / self._den(self.b0, False)

    def high(self, edge: float | None, discrete: bool) -> float:
        if edge is None:
            return 0.0
        if discrete:
            return self.coef_high * 2.0 ** (-(edge + 1) * self.binf) / self._den(self.binf, True)
        return self.coef_high * edge ** (-self.binf) / self._den(self.binf, False)

    def need_low(self, budget: float, discrete: bool) -> float:
        """Largest t_min (or j_min) whose low tail is <= budget."""
        if discrete:
            return 1 + math.log2(budget * self._den(self.b0, True) / self.coef_low) / self.b0
        return (budget * self._den(self.b0, False) / self.coef_low) ** (1.0 / self.b0)

    def need_high(self, budget: float, discrete: bool) -> float:
        if discrete:
            return -1 + math.log2(self.coef_high / (budget * self._den(self.binf, True))) / self.binf
        return (self.coef_high / (budget * self._den(self.binf, False))) ** (1.0 / self.binf)


def _tails(A: OperatorHandle, spec: NormSpec) -> _Tails:
    angle = A.sector_angle if A.sector_angle is not None else 0.0
    C, b0, binf = theta_envelope(spec.phi, spec.theta, float(angle))
    K = A.calculus_constant()
    a_min, a_max = A.spectral_bounds()
    w, p = A.grid.weights, A.grid.p
    # pointwise layer bound -> X norm of the l^s function (not needed for the Besov order)
    F = 1.0 if (math.isinf(p) or spec.mode == "besov_dyadic") else float((w.sum() / w.min()) ** (1.0 / p))
    th = spec.theta
    lo_exp, hi_exp = th + b0, th - binf
    coef_low = K * F * C * max(a_min**lo_exp, a_max**lo_exp)
    coef_high = K * F * C * max(a_min**hi_exp, a_max**hi_exp)
    return _Tails(coef_low, coef_high, b0, binf, spec.s)


# -- layer images -----------------------------------------------------------------


def _images(A: OperatorHandle, phi: Symbol, ts: np.ndarray, X: np.ndarray, cspec: ContourSpec,
            align: int) -> Iterator[tuple[slice, np.ndarray, dict]]:
    """(T, N, m_chunk) images phi(t A) X, chunked over inputs."""
    T, N, m = ts.size, A.n, X.shape[1]
    plan = make_plan(A, [phi], cspec, (float(np.log(ts.min())), float(np.log(ts.max()))), align)
    use_batch = A.probe_free or T * N * N <= _BATCH_LIMIT
    batch = scaled_batch(A, phi, ts, cspec, None, plan)[0] if use_batch else None
    chunk = max(1, _CHUNK // max(T * N, 1))
    for c in range(0, m, chunk):
        sl = slice(c, min(m, c + chunk))
        Xc = X[:, sl]
        imgs = batch.apply(Xc) if batch is not None else scaled_batch(A, phi, ts, cspec, Xc, plan)[0]
        yield sl, imgs, plan.to_dict()


def _as_inputs(A: OperatorHandle, x) -> tuple[np.ndarray, bool]:
    if isinstance(x, GridFunction):
        if x.grid.n != A.n:
            raise ValueError("input function lives on a different grid than the operator")
        return x.values[:, None].astype(complex), True
    X = np.asarray(x, dtype=complex)
    single = X.ndim == 1
    if single:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] != A.n:
        raise ValueError(f"inputs must have {A.n} rows")
    if not np.all(np.isfinite(X)):
        raise ValueError("inputs must be finite")
    return X, single


def _grid_indices(window: tuple) -> np.ndarray:
    # j for dyadic windows, i with t = 2^(i/q) for continuous ones
    return np.arange(int(window[0]), int(window[1]) + 1)


def _reduce(spec: NormSpec, A: OperatorHandle, idx: np.ndarray, imgs: np.ndarray) -> np.ndarray:
    """Norm values for one chunk of inputs from raw images."""
    w, p, s, th = A.grid.weights, A.grid.p, spec.s, spec.theta
    if spec.discrete:
        scale = 2.0 ** (-idx * th)
        layers = imgs * scale[:, None, None]
        if spec.mode == "besov_dyadic":
            xn = lp_norm(layers.transpose(1, 0, 2), w, p)  # (J, m)
            if math.isinf(s):
                return xn.max(axis=0)
            return pointwise_lsum(xn, s)
        g = pointwise_lsum(layers, s)
        return lp_norm(g, w, p)
    q = spec.nodes_per_octave
    t = 2.0 ** (idx / q)
    layers = imgs * (t ** (-th))[:, None, None]
    if math.isinf(s):
        return lp_norm(np.abs(layers).max(axis=0), w, p)
    lw = np.full(idx.size, LN2 / q)
    if idx.size > 1:
        lw[0] = lw[-1] = 0.5 * LN2 / q
    if spec.mode == "unit_interval" and idx.size > 4:
        # the integrand does not vanish at t = 1: Gregory end correction, O(h^3)
        lw[-3:] = np.array([23.0 / 24.0, 7.0 / 6.0, 3.0 / 8.0]) * (LN2 / q)
    order = _dyadic_first(idx, q)
    g = pointwise_lsum(layers[order], s, lw[order])
    return lp_norm(g, w, p)


def _dyadic_first(idx: np.ndarray, q: int) -> np.ndarray:
    dy = np.flatnonzero(idx % q == 0)
    rest = np.flatnonzero(idx % q != 0)
    return np.concatenate([dy, rest])


def _compute(A: OperatorHandle, spec: NormSpec, X: np.ndarray, window: tuple) -> tuple[np.ndarray, dict]:
    idx = _grid_indices(window)
    if spec.discrete:
        ts, align = 2.0 ** idx.astype(float), 1
    else:
        ts, align = 2.0 ** (idx / spec.nodes_per_octave), spec.nodes_per_octave
    out = np.zeros(X.shape[1])
    plan: dict = {}
    for sl, imgs, plan in _images(A, spec.phi, ts, X, spec.contour, align):
        out[sl] = _reduce(spec, A, idx, imgs)
    return out, plan


def _tail_values(tails: _Tails, spec: NormSpec, window: tuple, xn: np.ndarray) -> np.ndarray:
    if spec.discrete:
        lo, hi = window
        return (tails.low(lo, True) + tails.high(hi, True)) * xn
    q = spec.nodes_per_octave
    t_min = 2.0 ** (window[0] / q)
    t_max = None if spec.mode == "unit_interval" else 2.0 ** (window[1] / q)
    return (tails.low(t_min, False) + tails.high(t_max, False)) * xn


def _initial_window(A: OperatorHandle, spec: NormSpec) -> tuple[int, int]:
    a_min, a_max = A.spectral_bounds()
    lo = math.floor(-math.log2(a_max)) - 2
    hi = math.ceil(-math.log2(a_min)) + 2
    if spec.discrete:
        return (spec.j_range if spec.j_range is not None else (lo, hi))
    q = spec.nodes_per_octave
    if spec.t_range is not None:
        i_lo = math.floor(q * math.log2(spec.t_range[0]) + 1e-9)
        i_hi = math.ceil(q * math.log2(spec.t_range[1]) - 1e-9)
    else:
        i_lo, i_hi = lo * q, hi * q
    if spec.mode == "unit_interval":
        i_hi = 0
        i_lo = min(i_lo, -q)
    return (i_lo, i_hi)


def _fixed_window(spec: NormSpec) -> bool:
    return (spec.j_range is not None) if spec.discrete else (spec.t_range is not None)


def evaluate(A: OperatorHandle, spec: NormSpec, x) -> NormResult:
    """Norms of one or many inputs (columns) with a shared, tail-certified window."""
    X, _ = _as_inputs(A, x)
    w, p = A.grid.weights, A.grid.p
    xn = lp_norm(X, w, p)
    tails = _tails(A, spec)
    window = _initial_window(A, spec)
    q = 1 if spec.discrete else spec.nodes_per_octave
    fixed = _fixed_window(spec)
    while True:
        values, plan = _compute(A, spec, X, window)
        hom = values
        tail = _tail_values(tails, spec, window, xn)
        live = hom > 1e-12 * xn
        ok = bool(np.all(tail[live] <= spec.tail_tol * hom[live]))
        if ok or fixed:
            break
        # widen to the window the bound asks for, one octave of margin
        budget = 0.5 * spec.tail_tol * float(np.min(hom[live] / xn[live]))
        if spec.discrete:
            need_lo = math.floor(tails.need_low(budget, True)) - 1
            need_hi = math.ceil(tails.need_high(budget, True)) + 1
        else:
            need_lo = math.floor(q * (math.log2(tails.need_low(budget, False)) - 1))
            need_hi = math.ceil(q * (math.log2(tails.need_high(budget, False)) + 1))
            if spec.mode == "unit_interval":
                need_hi = 0
        new = (min(window[0], need_lo), max(window[1], need_hi))
        if new == window:
            break
        if (new[1] - new[0]) / q > _MAX_OCTAVES:
            raise TruncationError(f"tail bound asks for more than {_MAX_OCTAVES} octaves")
        window = new
    if not ok:
        msg = (f"tail bound {float(np.max(tail[live] / hom[live])):.3e} of the norm exceeds "
               f"tail_tol={spec.tail_tol:.1e} on window {window}")
        if spec.strict and not spec.discrete:
            raise TruncationError(msg)
        warnings.warn(msg, TruncationWarning, stacklevel=2)
    if spec.mode == "besov_dyadic" or spec.inhomogeneous:
        values = values + xn
    if spec.discrete:
        shown = (int(window[0]), int(window[1]))
    else:
        shown = (2.0 ** (window[0] / q), 2.0 ** (window[1] / q))
    n_layers = int(window[1] - window[0] + 1)
    return NormResult(values, spec, shown, tail, n_layers, xn, plan, ok)


def _out(res: NormResult, single: bool):
    return float(res.values[0]) if single else res.values


def _run(A, spec, x, mode):
    if spec.mode != mode:
        spec = replace(spec, mode=mode)
    X, single = _as_inputs(A, x)
    return _out(evaluate(A, spec, X), single)


def spower_norm_continuous(A: OperatorHandle, spec: NormSpec, x):
    return _run(A, spec, x, "continuous")


def spower_norm_dyadic(A: OperatorHandle, spec: NormSpec, x):
    return _run(A, spec, x, "dyadic")


def unit_interval_norm(A: OperatorHandle, spec: NormSpec, x):
    """s-power norm with the t-integral cut to (0, 1]."""
    return _run(A, spec, x, "unit_interval")


def besov_norm_dyadic(A: OperatorHandle, spec: NormSpec, x):
    """||x|| + (sum_j ||2^-j theta phi(2^j A) x||^s)^(1/s)."""
    return _run(A, spec, x, "besov_dyadic")


def inhom_norm(A: OperatorHandle, spec: NormSpec, x):
    """||x||_X plus the s-power norm of spec.mode."""
    if spec.theta < 0:
        raise ValueError("inhomogeneous norms are defined for theta >= 0 only")
    if spec.mode == "besov_dyadic":
        return _run(A, spec, x, spec.mode)
    X, single = _as_inputs(A, x)
    return _out(evaluate(A, replace(spec, inhomogeneous=True), X), single)


def _monotone_lp(g: np.ndarray, w: np.ndarray, p: float) -> np.ndarray:
    # no data dependent rescaling, so g <= g' entrywise gives a bitwise <= result
    if math.isinf(p):
        return g.max(axis=0)
    return ((w[:, None] * g**p).sum(axis=0)) ** (1.0 / p)


def continuous_dyadic_pair(A: OperatorHandle, spec: NormSpec, x) -> tuple[np.ndarray, np.ndarray, float]:
    """Continuous norm and the scaled dyadic sub-sum from one stack.

    Returns (continuous, sub, h) where sub = h^(1/s) times the dyadic norm over
    the dyadic nodes strictly inside the window, h = ln 2 / q.  The dyadic
    layers are accumulated first, so sub <= continuous holds exactly.
    """
    if spec.mode != "continuous":
        spec = replace(spec, mode="continuous")
    X, _ = _as_inputs(A, x)
    res = evaluate(A, spec, X)
    q = spec.nodes_per_octave
    i_lo = round(q * math.log2(res.window[0]))
    i_hi = round(q * math.log2(res.window[1]))
    idx = np.arange(i_lo, i_hi + 1)
    dyad_inner = (idx % q == 0) & (idx > i_lo) & (idx < i_hi)
    if not dyad_inner.any():
        raise ValueError("window holds no interior dyadic node")
    w, p, s, th = A.grid.weights, A.grid.p, spec.s, spec.theta
    h = LN2 / q
    ts = 2.0 ** (idx / q)
    cont = np.zeros(X.shape[1])
    sub = np.zeros(X.shape[1])
    for sl, imgs, _ in _images(A, spec.phi, ts, X, spec.contour, q):
        layers = imgs * (ts ** (-th))[:, None, None]
        if math.isinf(s):
            a = np.abs(layers)
            top = a[dyad_inner].max(axis=0)
            sub[sl] = _monotone_lp(top, w, p)
            cont[sl] = _monotone_lp(np.maximum(top, a[~dyad_inner].max(axis=0)), w, p)
            continue
        lw = np.full(idx.size, h)
        lw[0] = lw[-1] = 0.5 * h
        first = layer_power_sum(layers[dyad_inner], s, lw[dyad_inner])
        total = first + layer_power_sum(layers[~dyad_inner], s, lw[~dyad_inner])
        sub[sl] = _monotone_lp(first ** (1.0 / s), w, p)
        cont[sl] = _monotone_lp(total ** (1.0 / s), w, p)
    if spec.inhomogeneous:
        cont, sub = cont + res.x_norms, sub + res.x_norms
    return cont, sub, h if not math.isinf(s) else 1.0
