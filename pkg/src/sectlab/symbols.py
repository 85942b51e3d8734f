"""Holomorphic symbols on sectors with numerically certified decay data."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

__all__ = [
    "CertificationError",
    "Symbol",
    "builtin_symbol",
    "parse_symbol",
    "certify_decay",
    "certify_sup",
    "check_ue",
    "product",
    "telescoping_symbol",
    "exp_tau",
    "cayley",
    "blaschke",
    "lacunary",
    "constant",
]

H0 = "Hinf0"
E = "E"
PHI = "Phi"
PHI_SIGMA = "PhiSigma"
HINF = "Hinf"


class CertificationError(ValueError):
    """A symbol failed a sampled decay, boundedness or (UE) check."""


def _power(z: np.ndarray, a: float) -> np.ndarray:
    # principal branch, cut on (-inf, 0]
    return np.exp(a * np.log(z))


@dataclass(frozen=True)
class Symbol:
    """An analytic function on the sector |arg z| < sigma plus its class data.

    theta_range is the open interval of theta with z^-theta phi in H^inf_0;
    ue_shift is d in the quotient condition phi(t.)/phi(2^d .), phi(2^-d .)/phi(t .).
    """

    name: str
    func: Callable[[np.ndarray], np.ndarray] = field(repr=False, compare=False)
    sigma: float
    classes: frozenset = frozenset()
    C0: float | None = None
    beta: float | None = None
    f0: complex = 0.0
    finf: complex = 0.0
    theta_range: tuple[float, float] | None = None
    ue_shift: int | None = None
    sup_bound: float | None = None
    params: tuple = ()

    def __call__(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        return self.func(z)

    @property
    def spec(self) -> str:
        if not self.params:
            return self.name
        return self.name + ":" + ",".join(_fmt(v) for v in self.params)

    def has(self, tag: str) -> bool:
        return tag in self.classes

    def admits_theta(self, theta: float, discrete: bool = False) -> bool:
        if self.theta_range is None:
            return False
        lo, hi = self.theta_range
        if not lo < theta < hi:
            return False
        return self.has(PHI_SIGMA) if discrete else self.has(PHI)

    def decay_theta(self, theta: float) -> float:
        """Decay exponent of z^-theta phi at 0 and infinity (the smaller one)."""
        if self.theta_range is None:
            raise CertificationError(f"{self.name} carries no theta data")
        lo, hi = self.theta_range
        return min(hi - theta, theta - lo)

    def h0_part(self) -> "Symbol":
        """phi = f - (f(0) - f(inf))/(1 + z) - f(inf); identical for H^inf_0 symbols."""
        if self.has(H0):
            return self
        a, b = complex(self.f0), complex(self.finf)
        f = self.func

        def part(z):
            return f(z) - (a - b) / (1.0 + z) - b

        return Symbol(self.name + ".h0", part, self.sigma, frozenset({H0}), self.C0, self.beta)


def _fmt(v) -> str:
    if isinstance(v, float) and v.is_integer():
        return str(int(v))
    return repr(v) if isinstance(v, float) else str(v)


# -- certification ---------------------------------------------------------------


def _sample(sigma: float, n_ang: int = 41, n_rad: int = 481, r_lo: float = -12.0, r_hi: float = 12.0):
    ang = np.linspace(-sigma, sigma, n_ang) * (1 - 1e-9)
    r = np.logspace(r_lo, r_hi, n_rad)
    return (r[None, :] * np.exp(1j * ang[:, None])).ravel()


def certify_decay(func: Callable, sigma: float, beta: float, safety: float = 1.05,
                  bound: float = 1e8) -> float:
    """Sampled C0 with |f(z)| <= C0 min(|z|^beta, |z|^-beta) on the sector."""
    z = _sample(sigma)
    with np.errstate(all="ignore"):
        v = np.abs(func(z))
        env = np.minimum(np.abs(z) ** beta, np.abs(z) ** (-beta))
        q = v / env
    if not np.all(np.isfinite(q)):
        raise CertificationError("symbol is not finite on the sampled sector")
    c0 = float(q.max()) * safety
    if c0 > bound:
        raise CertificationError(f"decay constant {c0:.3e} exceeds {bound:.1e}")
    return c0


def certify_sup(func: Callable, sigma: float) -> float:
    """Sampled sup |f| over the sector."""
    z = _sample(sigma)
    with np.errstate(all="ignore"):
        v = np.abs(func(z))
    if not np.all(np.isfinite(v)):
        raise CertificationError("symbol is not finite on the sampled sector")
    return float(v.max())


def check_ue(phi: Symbol, d: int | None = None, n_t: int = 9, limit_tol: float = 1e-3,
             bound: float = 1e6) -> bool:
    """Sampled check of the quotient condition for phi with shift d.

    Both families z -> phi(t z)/phi(2^d z) and z -> phi(2^-d z)/phi(t z), t in [1, 2],
    must stay bounded on the sector and settle to finite limits at 0 and infinity.
    Dyadic rescalings are covered because the sample spans many decades.
    """
    d = phi.ue_shift if d is None else d
    if d is None:
        return False
    n_ang, n_rad = 21, 241
    z = _sample(phi.sigma * 0.98, n_ang=n_ang, n_rad=n_rad, r_lo=-6, r_hi=6)
    with np.errstate(all="ignore"):
        for t in np.linspace(1.0, 2.0, n_t):
            a1, a2, a3 = phi(t * z), phi(2.0**d * z), phi(2.0 ** (-d) * z)
            # radii where some factor under/overflows carry no information
            ok = np.ones(n_rad, dtype=bool)
            for v in (a1, a2, a3):
                m = np.abs(v).reshape(n_ang, n_rad)
                ok &= np.all((m > 1e-280) & np.isfinite(m), axis=0)
            if ok.sum() < 12:
                return False
            for q in (a1 / a2, a3 / a1):
                qq = q.reshape(n_ang, n_rad)[:, ok]
                a = np.abs(qq)
                if not np.all(np.isfinite(a)) or a.max() > bound:
                    return False
                scale = max(a.max(), 1e-300)
                c = n_ang // 2
                for edge, inner in ((qq[:, :3], qq[:, 3:12]), (qq[:, -3:], qq[:, -12:-3])):
                    spread = np.abs(edge - edge[c, 1]).max()
                    if spread <= limit_tol * scale:
                        continue
                    # still moving at the sample edge: accept only if clearly contracting
                    if spread > 0.5 * np.abs(inner - edge[c, 1]).max():
                        return False
    return True


# -- builtin families ----------------------------------------------------------------

_SIGMA_ANALYTIC = 0.9 * math.pi
_SIGMA_EXP = 0.45 * math.pi


def _finish(sym: Symbol, beta_cert: float | None = None) -> Symbol:
    beta = sym.beta if beta_cert is None else beta_cert
    if beta is not None:
        sym = replace(sym, C0=certify_decay(sym.h0_part().func if not sym.has(H0) else sym.func, sym.sigma, beta))
    return sym


def _rho(m: int, sigma: float) -> Symbol:
    if m < 1 or int(m) != m:
        raise ValueError("rho_m needs a positive integer m")
    m = int(m)
    if not 0 < sigma < math.pi:
        raise ValueError("rho_m needs 0 < sigma < pi")

    def f(z):
        return z**m / (1.0 + z) ** (2 * m)

    return _finish(Symbol(f"rho_{m}", f, sigma, frozenset({H0, E, PHI, PHI_SIGMA}), beta=float(m),
                          theta_range=(-float(m), float(m)), ue_shift=0, params=()))


def _exp_alpha(alpha: float, sigma: float) -> Symbol:
    if alpha <= 0:
        raise ValueError("exp_alpha needs alpha > 0")
    if not 0 < sigma < math.pi / 2:
        raise ValueError("exp_alpha needs 0 < sigma < pi/2")

    def f(z):
        return _power(z, alpha) * np.exp(-z)

    return _finish(Symbol("exp_alpha", f, sigma, frozenset({H0, E, PHI, PHI_SIGMA}), beta=float(alpha),
                          theta_range=(-math.inf, float(alpha)), ue_shift=-1, params=(float(alpha),)))


def _exp_frac(k: float, m: int, sigma: float) -> Symbol:
    if k <= 0 or m < 1 or int(m) != m:
        raise ValueError("exp_frac needs k > 0 and a positive integer m")
    m = int(m)
    if not 0 < sigma < min(math.pi, m * math.pi / 2):
        raise ValueError("exp_frac needs 0 < sigma < min(pi, m pi/2)")

    def f(z):
        return _power(z, k) * np.exp(-_power(z, 1.0 / m))

    # z^-theta phi decays at 0 iff theta < k; tagged for the discrete class when k > |theta|
    return _finish(Symbol("exp_frac", f, sigma, frozenset({H0, E, PHI, PHI_SIGMA}), beta=float(k),
                          theta_range=(-float(k), float(k)), ue_shift=-1, params=(float(k), m)))


def _one_over_1pz(sigma: float) -> Symbol:
    def f(z):
        return 1.0 / (1.0 + z)

    return Symbol("one_over_1pz", f, sigma, frozenset({E, HINF}), f0=1.0, finf=0.0, C0=0.0, beta=1.0,
                  sup_bound=certify_sup(f, sigma))


def _interp_phi(alpha: float, sigma: float) -> Symbol:
    _check_alpha(alpha)

    def f(z):
        return -_power(z, alpha) / (2.0 + z)

    return _finish(Symbol("interp_phi", f, sigma, frozenset({H0, E, PHI, PHI_SIGMA}),
                          beta=min(alpha, 1 - alpha), theta_range=(alpha - 1.0, alpha), ue_shift=0,
                          params=(float(alpha),)))


def _interp_psi(alpha: float, sigma: float) -> Symbol:
    _check_alpha(alpha)

    def f(z):
        return _power(z, 1.0 - alpha) / (1.0 + z)

    return _finish(Symbol("interp_psi", f, sigma, frozenset({H0, E, PHI, PHI_SIGMA}),
                          beta=min(alpha, 1 - alpha), theta_range=(-alpha, 1.0 - alpha), ue_shift=0,
                          params=(float(alpha),)))


def _interp_rho(alpha: float, sigma: float) -> Symbol:
    _check_alpha(alpha)

    def f(z):
        return _power(z, alpha) / (1.0 + z)

    return _finish(Symbol("interp_rho", f, sigma, frozenset({H0, E, PHI, PHI_SIGMA}),
                          beta=min(alpha, 1 - alpha), theta_range=(alpha - 1.0, alpha), ue_shift=0,
                          params=(float(alpha),)))


def _check_alpha(alpha: float) -> None:
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")


_BUILTINS = {
    "rho": (1, lambda a, s: _rho(int(a[0]) if a else 1, s if s is not None else _SIGMA_ANALYTIC)),
    "exp_alpha": (1, lambda a, s: _exp_alpha(float(a[0]) if a else 1.0, s if s is not None else _SIGMA_EXP)),
    "exp_frac": (2, lambda a, s: _exp_frac(float(a[0]) if a else 1.0, int(a[1]) if len(a) > 1 else 1,
                                          s if s is not None else min(_SIGMA_ANALYTIC, _SIGMA_EXP * (int(a[1]) if len(a) > 1 else 1)))),
    "one_over_1pz": (0, lambda a, s: _one_over_1pz(s if s is not None else _SIGMA_ANALYTIC)),
    "interp_phi": (1, lambda a, s: _interp_phi(float(a[0]) if a else 0.5, s if s is not None else _SIGMA_ANALYTIC)),
    "interp_psi": (1, lambda a, s: _interp_psi(float(a[0]) if a else 0.5, s if s is not None else _SIGMA_ANALYTIC)),
    "interp_rho": (1, lambda a, s: _interp_rho(float(a[0]) if a else 0.5, s if s is not None else _SIGMA_ANALYTIC)),
}


def builtin_symbol(name: str, *params: float, sigma: float | None = None) -> Symbol:
    """Built-in symbol by name; rho_m may be written rho_2 or rho with m = 2."""
    m = re.fullmatch(r"rho_(\d+)", name)
    if m:
        name, params = "rho", (int(m.group(1)),) + tuple(params)
    if name not in _BUILTINS:
        raise ValueError(f"unknown symbol {name!r}; known: {sorted(_BUILTINS) + ['rho_<m>']}")
    nmax, make = _BUILTINS[name]
    if len(params) > nmax:
        raise ValueError(f"{name} takes at most {nmax} parameters")
    return make(tuple(params), sigma)


def parse_symbol(text: str) -> Symbol:
    """'rho_1', 'exp_alpha:1', 'exp_frac:2,1', 'interp_phi:0.5,sigma=2.5'."""
    name, _, rest = text.strip().partition(":")
    params: list[float] = []
    sigma = None
    for tok in filter(None, (t.strip() for t in rest.split(","))):
        if tok.startswith("sigma="):
            sigma = float(tok.split("=", 1)[1])
        else:
            params.append(float(tok))
    return builtin_symbol(name, *params, sigma=sigma)


# -- algebra and the bounded families ------------------------------------------------


def product(a: Symbol, b: Symbol) -> Symbol:
    fa, fb = a.func, b.func

    def f(z):
        return fa(z) * fb(z)

    sigma = min(a.sigma, b.sigma)
    tags = frozenset({H0, E}) if (a.has(H0) or b.has(H0)) else frozenset({E})
    f0 = complex(a.f0) * complex(b.f0)
    finf = complex(a.finf) * complex(b.finf)
    beta = max(a.beta or 0.0, b.beta or 0.0) if H0 in tags else 1.0
    sym = Symbol(f"({a.spec})*({b.spec})", f, sigma, tags, beta=beta, f0=f0, finf=finf)
    return _finish(sym)


def telescoping_symbol(sigma: float = _SIGMA_ANALYTIC) -> Symbol:
    """-z/((1+z)(2+z)) = 1/(1+z) - 2/(2+z)."""

    def f(z):
        return -z / ((1.0 + z) * (2.0 + z))

    return _finish(Symbol("telescoping", f, sigma, frozenset({H0, E}), beta=1.0))


def _bounded(name, f, sigma, f0, finf, params) -> Symbol:
    sup = certify_sup(f, sigma)
    sym = Symbol(name, f, sigma, frozenset({E, HINF}), f0=f0, finf=finf, sup_bound=sup, beta=1.0,
                 params=params)
    # H^inf_0 part decays at least linearly for every member of the families below
    try:
        return replace(sym, C0=certify_decay(sym.h0_part().func, sigma, 1.0, bound=1e12))
    except CertificationError:
        return replace(sym, C0=None, beta=None)


def exp_tau(tau: float, sigma: float = _SIGMA_EXP) -> Symbol:
    if tau <= 0 or sigma >= math.pi / 2:
        raise ValueError("e^{-tau z} needs tau > 0 and sigma < pi/2")
    return _bounded("exp_tau", lambda z: np.exp(-tau * z), sigma, 1.0, 0.0, (float(tau),))


def cayley(tau: float, sigma: float = _SIGMA_EXP) -> Symbol:
    if tau <= 0 or sigma > math.pi / 2:
        raise ValueError("(1 - tau z)/(1 + tau z) needs tau > 0 and sigma <= pi/2")
    return _bounded("cayley", lambda z: (1.0 - tau * z) / (1.0 + tau * z), sigma, 1.0, -1.0, (float(tau),))


def blaschke(taus, sigma: float = _SIGMA_EXP) -> Symbol:
    taus = tuple(float(t) for t in taus)
    if not taus or min(taus) <= 0:
        raise ValueError("need positive scales")

    def f(z):
        out = np.ones_like(z)
        for t in taus:
            out = out * (1.0 - t * z) / (1.0 + t * z)
        return out

    return _bounded("blaschke", f, sigma, 1.0, (-1.0) ** len(taus), taus)


def lacunary(coeffs, tau: float = 1.0, sigma: float = _SIGMA_EXP) -> Symbol:
    """sum_k c_k e^{-2^k tau z}, k = 0, 1, ...; requires sum |c_k| <= 1."""
    c = tuple(complex(v) for v in coeffs)
    if sum(abs(v) for v in c) > 1 + 1e-12:
        raise ValueError("lacunary coefficients must satisfy sum |c_k| <= 1")

    def f(z):
        out = np.zeros_like(z)
        for k, ck in enumerate(c):
            out = out + ck * np.exp(-(2.0**k) * tau * z)
        return out

    return _bounded("lacunary", f, sigma, sum(c), 0.0, (float(tau), len(c)))


def constant(value: complex = 1.0, sigma: float = _SIGMA_ANALYTIC) -> Symbol:
    v = complex(value)
    return Symbol("constant", lambda z: np.full_like(z, v), sigma, frozenset({E, HINF}), f0=v, finf=v,
                  sup_bound=abs(v), C0=0.0, beta=1.0, params=(v.real,))
