"""Sectorial operator backends: dense matrices, Fourier multipliers, ONB maps.

Every backend works on raw column arrays X of shape (N, m) internally; the
GridFunction wrappers at the bottom are the public entry points.
"""

from __future__ import annotations

import cmath
import math
from typing import Any, Callable

import numpy as np
import scipy.linalg

from .grid import GridFunction, MeasureGrid

__all__ = [
    "SectorError",
    "NumericalError",
    "OperatorHandle",
    "DenseMatrixOperator",
    "FourierMultiplierOperator",
    "ShiftedOperator",
    "ONBMapOperator",
    "MaximalOperator",
    "MatrixBatch",
    "MultiplierBatch",
    "apply",
    "resolvent_apply",
    "maximal_apply",
    "maximal_reference",
    "maximal_fast",
    "random_sectorial_matrix",
    "laplacian_symbol",
    "rademacher",
    "haar_scaled",
    "operator_from_json",
    "MAX_ONB_EXPONENT",
    "weighted_pnorm_bound",
]

MAX_ONB_EXPONENT = 24


class SectorError(ValueError):
    """Spectral parameter or contour angle inside a forbidden sector."""


class NumericalError(ArithmeticError):
    pass


def _cols(X: np.ndarray) -> tuple[np.ndarray, bool]:
    X = np.asarray(X, dtype=complex)
    if X.ndim == 1:
        return X[:, None], True
    return X, False


# -- operator batches -------------------------------------------------------


class MatrixBatch:
    """A stack of T dense N x N matrices."""

    def __init__(self, mats: np.ndarray):
        self.mats = np.asarray(mats, dtype=complex)

    def __len__(self) -> int:
        return self.mats.shape[0]

    def apply(self, X: np.ndarray) -> np.ndarray:
        X, _ = _cols(X)
        return np.matmul(self.mats, X[None])

    def apply_each(self, Y: np.ndarray) -> np.ndarray:
        return np.matmul(self.mats, Y)

    def lincomb(self, a: np.ndarray, other: "MatrixBatch | None" = None, b: np.ndarray | None = None,
                c: np.ndarray | None = None) -> "MatrixBatch":
        out = a[:, None, None] * self.mats
        if other is not None:
            out = out + b[:, None, None] * other.mats
        if c is not None:
            n = self.mats.shape[1]
            out = out + c[:, None, None] * np.eye(n)[None]
        return MatrixBatch(out)

    def compose(self, other: "MatrixBatch") -> "MatrixBatch":
        return MatrixBatch(np.matmul(self.mats, other.mats))

    def take(self, idx) -> "MatrixBatch":
        return MatrixBatch(self.mats[idx])


class MultiplierBatch:
    """A stack of T Fourier multipliers (numpy FFT frequency order)."""

    def __init__(self, mults: np.ndarray):
        self.mults = np.asarray(mults, dtype=complex)

    def __len__(self) -> int:
        return self.mults.shape[0]

    def apply(self, X: np.ndarray) -> np.ndarray:
        X, _ = _cols(X)
        Xh = np.fft.fft(X, axis=0)
        return np.fft.ifft(self.mults[:, :, None] * Xh[None], axis=1)

    def apply_each(self, Y: np.ndarray) -> np.ndarray:
        Yh = np.fft.fft(Y, axis=1)
        return np.fft.ifft(self.mults[:, :, None] * Yh, axis=1)

    def lincomb(self, a, other=None, b=None, c=None) -> "MultiplierBatch":
        out = a[:, None] * self.mults
        if other is not None:
            out = out + b[:, None] * other.mults
        if c is not None:
            out = out + c[:, None]
        return MultiplierBatch(out)

    def compose(self, other: "MultiplierBatch") -> "MultiplierBatch":
        return MultiplierBatch(self.mults * other.mults)

    def take(self, idx) -> "MultiplierBatch":
        return MultiplierBatch(self.mults[idx])


# -- base class -------------------------------------------------------------


class OperatorHandle:
    """Common interface; subclasses fill in the array-level methods."""

    kind: str = "abstract"
    grid: MeasureGrid
    sector_angle: float | None = None

    @property
    def n(self) -> int:
        return self.grid.n

    # array level
    def apply_array(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def adjoint_array(self, X: np.ndarray) -> np.ndarray:
        """Conjugate transpose with respect to the plain sum pairing."""
        raise NotImplementedError

    def resolvent_array(self, lam: complex, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    # quadrature support: resolvent samples in a backend specific flat layout
    def _samples(self, lams: np.ndarray, probe: np.ndarray | None = None) -> np.ndarray:
        """Rows k hold R(lams[k], A), flattened; applied to probe when one is given."""
        raise NotImplementedError

    def _samples_a(self, lams: np.ndarray, probe: np.ndarray | None = None) -> np.ndarray:
        """Rows k hold A R(lams[k], A) computed without cancellation against the identity."""
        raise NotImplementedError

    def _identity_flat(self, probe: np.ndarray | None = None) -> np.ndarray:
        raise NotImplementedError

    def _finish(self, flat: np.ndarray, probe: np.ndarray | None = None):
        """Rows of flat become a batch of operators, or the (T, N, m) images of probe."""
        raise NotImplementedError

    def resolvent_batch(self, lams: np.ndarray, probe: np.ndarray | None = None):
        return self._finish(self._samples(np.asarray(lams, dtype=complex), probe), probe)

    def spectral_batch(self, funcs: Callable[[np.ndarray], np.ndarray]):
        """Oracle path: apply funcs (spectrum -> (T, n_eig) values) spectrally."""
        raise NotImplementedError

    def spectrum(self) -> np.ndarray:
        raise NotImplementedError

    def spectral_bounds(self) -> tuple[float, float]:
        mod = np.abs(self.spectrum())
        mod = mod[mod > 0]
        if mod.size == 0:
            return 1.0, 1.0
        return float(mod.min()), float(mod.max())

    def resolvent_constant(self, omega: float) -> float:
        """Upper estimate of sup |lam| ||R(lam, A)|| on the rays arg lam = +-omega."""
        return 1.0

    def resolvent_member(self, lam: complex) -> "OperatorHandle":
        """The single operator lam R(lam, A) as a standalone handle."""
        raise NotImplementedError

    # contour samples do not depend on the probe (multiplier backends)
    probe_free: bool = False

    def calculus_constant(self) -> float:
        """K with ||f(A)||_X <= K sup over the spectrum of |f|."""
        raise NotImplementedError

    def check_outside_sector(self, lam: complex) -> None:
        if self.sector_angle is None:
            raise SectorError(f"{self.kind} operator has no declared sector")
        if lam == 0:
            raise SectorError("resolvent at 0 is not available")
        if abs(cmath.phase(lam)) <= self.sector_angle:
            raise SectorError(
                f"lambda={lam!r} lies in the closed sector of angle {self.sector_angle:.6g}"
            )


def weighted_pnorm_bound(M: np.ndarray, weights: np.ndarray, p: float) -> float:
    """Upper bound for the L^p(weights) operator norm of M (exact for p = 1, 2, inf)."""
    a = np.abs(M)
    norm_inf = float(a.sum(axis=1).max())
    norm_1 = float(((weights[:, None] * a) / weights[None, :]).sum(axis=0).max())
    if math.isinf(p):
        return norm_inf
    if p == 1.0:
        return norm_1
    if p == 2.0:
        r = np.sqrt(weights)
        return float(np.linalg.norm(r[:, None] * M / r[None, :], 2))
    return norm_1 ** (1.0 / p) * norm_inf ** (1.0 - 1.0 / p)


def _sector_factor(delta: float) -> float:
    """sup over r > 0 of r / |r e^{i delta} - 1| for an eigenvalue on the unit ray."""
    delta = abs(delta)
    if delta >= math.pi / 2:
        return 1.0
    return 1.0 / math.sin(delta)


# -- dense matrices ----------------------------------------------------------


class DenseMatrixOperator(OperatorHandle):
    kind = "DenseMatrix"

    def __init__(self, matrix: np.ndarray, sector_angle: float | None = None,
                 eig: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None,
                 grid: MeasureGrid | None = None):
        M = np.array(matrix, dtype=complex)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise ValueError("matrix must be square")
        if not np.all(np.isfinite(M)):
            raise ValueError("matrix entries must be finite")
        M.setflags(write=False)
        self.matrix = M
        self.grid = grid if grid is not None else MeasureGrid.counting(M.shape[0])
        if self.grid.n != M.shape[0]:
            raise ValueError("grid size does not match the matrix")
        self._eig = None
        self._schur_cache = None
        if eig is not None:
            lam, V, Vinv = (np.asarray(a, dtype=complex) for a in eig)
            recon = (V * lam) @ Vinv
            err = np.linalg.norm(recon - M) / max(np.linalg.norm(M), 1e-300)
            if err > 1e-10:
                raise ValueError(f"eigendecomposition cache inconsistent (rel. err {err:.2e})")
            self._eig = (lam, V, Vinv)
        if sector_angle is not None:
            sector_angle = float(sector_angle)
            if not 0 <= sector_angle < math.pi:
                raise ValueError("sector angle must lie in [0, pi)")
            lam = self.spectrum()
            if np.any(lam == 0) or np.any(np.abs(np.angle(lam)) > sector_angle + 1e-12):
                raise SectorError("spectrum is not inside the declared closed sector minus 0")
        self.sector_angle = sector_angle

    @classmethod
    def diagonal(cls, values, sector_angle: float | None = None, p: float = 2.0) -> "DenseMatrixOperator":
        a = np.asarray(values, dtype=complex).ravel()
        if sector_angle is None:
            sector_angle = float(np.max(np.abs(np.angle(a))))
        n = a.size
        eye = np.eye(n, dtype=complex)
        return cls(np.diag(a), sector_angle, eig=(a, eye, eye), grid=MeasureGrid.counting(n, p))

    @classmethod
    def from_spectrum(cls, spectrum, rng: np.random.Generator, cond: float = 10.0,
                      sector_angle: float | None = None, p: float = 2.0) -> "DenseMatrixOperator":
        """Matrix V diag(spectrum) V^-1 with a random V of prescribed condition number."""
        lam = np.asarray(spectrum, dtype=complex).ravel()
        n = lam.size
        Q1 = _random_unitary(n, rng)
        Q2 = _random_unitary(n, rng)
        if n > 1:
            sv = np.exp(np.linspace(0.0, math.log(cond), n))
        else:
            sv = np.ones(1)
        V = (Q1 * sv) @ Q2
        Vinv = (Q2.conj().T / sv) @ Q1.conj().T
        M = (V * lam) @ Vinv
        if sector_angle is None:
            sector_angle = float(np.max(np.abs(np.angle(lam))))
        return cls(M, sector_angle, eig=(lam, V, Vinv), grid=MeasureGrid.counting(n, p))

    @classmethod
    def identity(cls, n: int, p: float = 2.0) -> "DenseMatrixOperator":
        return cls.diagonal(np.ones(n), 0.0, p)

    def eig(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if self._eig is None:
            lam, V = np.linalg.eig(self.matrix)
            self._eig = (lam, V, np.linalg.inv(V))
        return self._eig

    def has_cache(self) -> bool:
        return self._eig is not None

    def spectrum(self) -> np.ndarray:
        if self._eig is not None:
            return self._eig[0]
        return np.linalg.eigvals(self.matrix)

    def apply_array(self, X):
        return self.matrix @ X

    def adjoint_array(self, X):
        return self.matrix.conj().T @ X

    def resolvent_array(self, lam, X):
        self.check_outside_sector(lam)
        S = lam * np.eye(self.n) - self.matrix
        cond = np.linalg.cond(S)
        if not np.isfinite(cond) or cond > 1e14:
            raise NumericalError(f"resolvent solve is singular (condition number {cond:.3e})")
        return np.linalg.solve(S, X)

    def resolvent_constant(self, omega):
        lam, V, Vinv = self.eig()
        kappa = np.linalg.norm(V, 2) * np.linalg.norm(Vinv, 2)
        delta = omega - float(np.max(np.abs(np.angle(lam))))
        return float(kappa * _sector_factor(delta))

    def calculus_constant(self):
        lam, V, Vinv = self.eig()
        w, p = self.grid.weights, self.grid.p
        return weighted_pnorm_bound(V, w, p) * weighted_pnorm_bound(Vinv, w, p)

    def _schur(self):
        if self._schur_cache is None:
            self._schur_cache = scipy.linalg.schur(self.matrix, output="complex")
        return self._schur_cache

    def _samples(self, lams, probe=None):
        T, Z = self._schur()
        B = Z.conj().T @ (np.eye(self.n, dtype=complex) if probe is None else np.asarray(probe, dtype=complex))
        Y = np.matmul(Z, _shifted_backsub(T, np.asarray(lams, dtype=complex), B))
        return Y.reshape(Y.shape[0], -1)

    def _samples_a(self, lams, probe=None):
        T, Z = self._schur()
        B = T @ (Z.conj().T @ (np.eye(self.n, dtype=complex) if probe is None else np.asarray(probe, dtype=complex)))
        Y = np.matmul(Z, _shifted_backsub(T, np.asarray(lams, dtype=complex), B))
        return Y.reshape(Y.shape[0], -1)

    def _identity_flat(self, probe=None):
        return (np.eye(self.n, dtype=complex) if probe is None else np.asarray(probe, dtype=complex)).ravel()

    def _finish(self, flat, probe=None):
        m = self.n if probe is None else np.asarray(probe).shape[1]
        arr = np.asarray(flat).reshape(-1, self.n, m)
        return MatrixBatch(arr) if probe is None else arr

    def spectral_batch(self, funcs):
        lam, V, Vinv = self.eig()
        F = np.atleast_2d(funcs(lam))
        return MatrixBatch(np.einsum("ik,tk,kj->tij", V, F, Vinv))

    def resolvent_member(self, lam):
        self.check_outside_sector(lam)
        M = lam * np.linalg.inv(lam * np.eye(self.n) - self.matrix)
        return DenseMatrixOperator(M, None, grid=self.grid)


def _shifted_backsub(T: np.ndarray, lams: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Solve (lam_k - T) Y_k = B for upper triangular T, all k at once."""
    N, m = B.shape
    Y = np.empty((lams.size, N, m), dtype=complex)
    for i in range(N - 1, -1, -1):
        acc = np.broadcast_to(B[i], (lams.size, m))
        if i + 1 < N:
            acc = acc + np.tensordot(Y[:, i + 1:, :], T[i, i + 1:], axes=([1], [0]))
        Y[:, i, :] = acc / (lams - T[i, i])[:, None]
    return Y


def _random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    Z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    Q, R = np.linalg.qr(Z)
    d = np.diag(R)
    return Q * (d / np.abs(d))


def random_sectorial_matrix(n: int, rng: np.random.Generator, sector_angle: float = math.pi / 4,
                            cond: float | None = None, cond_max: float = 100.0,
                            modulus: tuple[float, float] = (0.25, 4.0), p: float = 2.0) -> DenseMatrixOperator:
    """Dense matrix with spectrum drawn inside the open sector and cond(V) <= cond_max."""
    r = np.exp(rng.uniform(math.log(modulus[0]), math.log(modulus[1]), n))
    arg = rng.uniform(-0.95 * sector_angle, 0.95 * sector_angle, n)
    lam = r * np.exp(1j * arg)
    if cond is None:
        cond = float(np.exp(rng.uniform(0.0, math.log(cond_max))))
    op = DenseMatrixOperator.from_spectrum(lam, rng, cond=min(cond, cond_max), p=p)
    op.sector_angle = float(sector_angle)
    return op


# -- Fourier multipliers -------------------------------------------------------


def laplacian_symbol(N: int) -> np.ndarray:
    """(2 - 2 cos(2 pi k / N)) (N / 2 pi)^2 in numpy FFT order; ~ k^2 for small k."""
    k = np.fft.fftfreq(N, d=1.0 / N)
    return (2.0 - 2.0 * np.cos(2.0 * np.pi * k / N)) * (N / (2.0 * np.pi)) ** 2


class FourierMultiplierOperator(OperatorHandle):
    """Periodic 1-D multiplier on [0, 2 pi) with N equispaced points."""

    kind = "FourierMultiplier"

    def __init__(self, multiplier: np.ndarray, sector_angle: float | None = None, p: float = 2.0,
                 shift: float = 0.0, label: str = "multiplier"):
        m = np.asarray(multiplier, dtype=complex).ravel() + float(shift)
        if not np.all(np.isfinite(m)):
            raise ValueError("multiplier must be finite")
        N = m.size
        self.grid = MeasureGrid.uniform(N, p, total=2.0 * math.pi)
        self.multiplier = m
        self.shift = float(shift)
        self.label = label
        uniq, inv = np.unique(m, return_inverse=True)
        self._uniq, self._inv = uniq, inv.ravel()
        if sector_angle is not None:
            nz = m[m != 0]
            if nz.size and np.max(np.abs(np.angle(nz))) > sector_angle + 1e-12:
                raise SectorError("multiplier values leave the declared sector")
        self.sector_angle = sector_angle

    @classmethod
    def laplacian(cls, N: int, power: float = 1.0, shift: float = 0.0, p: float = 2.0) -> "FourierMultiplierOperator":
        if N < 2 or N & (N - 1):
            raise ValueError("grid size must be a power of two")
        base = laplacian_symbol(N) ** power
        return cls(base, 0.0, p=p, shift=shift, label=f"laplacian^{power}")

    def frequencies(self) -> np.ndarray:
        return np.fft.fftfreq(self.n, d=1.0 / self.n)

    def spectrum(self):
        return self.multiplier

    def apply_array(self, X):
        X, flat = _cols(X)
        Y = np.fft.ifft(self.multiplier[:, None] * np.fft.fft(X, axis=0), axis=0)
        return Y[:, 0] if flat else Y

    def adjoint_array(self, X):
        X, flat = _cols(X)
        Y = np.fft.ifft(self.multiplier.conj()[:, None] * np.fft.fft(X, axis=0), axis=0)
        return Y[:, 0] if flat else Y

    def resolvent_array(self, lam, X):
        self.check_outside_sector(lam)
        X, flat = _cols(X)
        d = lam - self.multiplier
        if np.any(d == 0):
            raise NumericalError("resolvent hits a multiplier value")
        Y = np.fft.ifft(np.fft.fft(X, axis=0) / d[:, None], axis=0)
        return Y[:, 0] if flat else Y

    def resolvent_constant(self, omega):
        nz = self.multiplier[self.multiplier != 0]
        worst = float(np.max(np.abs(np.angle(nz)))) if nz.size else 0.0
        return _sector_factor(omega - worst)

    probe_free = True

    def calculus_constant(self):
        p = self.grid.p
        return 1.0 if p == 2.0 else float(self.n ** abs(0.5 - (0.0 if math.isinf(p) else 1.0 / p)))

    def _samples(self, lams, probe=None):
        return 1.0 / (np.asarray(lams, dtype=complex)[:, None] - self._uniq[None, :])

    def _samples_a(self, lams, probe=None):
        return self._uniq[None, :] / (np.asarray(lams, dtype=complex)[:, None] - self._uniq[None, :])

    def _identity_flat(self, probe=None):
        return np.ones(self._uniq.size, dtype=complex)

    def _finish(self, flat, probe=None):
        batch = MultiplierBatch(np.asarray(flat).reshape(-1, self._uniq.size)[:, self._inv])
        return batch if probe is None else batch.apply(probe)

    def spectral_batch(self, funcs):
        return MultiplierBatch(np.atleast_2d(funcs(self.multiplier)))

    def resolvent_member(self, lam):
        self.check_outside_sector(lam)
        op = FourierMultiplierOperator(lam / (lam - self.multiplier), None, p=self.grid.p,
                                       label=f"{lam}R({lam})")
        return op


# -- scaled / shifted wrapper -------------------------------------------------


class ShiftedOperator(OperatorHandle):
    """c A + eps for c > 0, eps >= 0; resolvents are delegated to A."""

    kind = "ScaledShifted"

    def __init__(self, base: OperatorHandle, scale: float = 1.0, shift: float = 0.0):
        if scale <= 0 or shift < 0:
            raise ValueError("need scale > 0 and shift >= 0")
        self.base = base
        self.scale = float(scale)
        self.shift = float(shift)
        self.grid = base.grid
        self.sector_angle = base.sector_angle
        self.probe_free = base.probe_free

    def _inner(self, lam):
        return (np.asarray(lam) - self.shift) / self.scale

    def spectrum(self):
        return self.scale * self.base.spectrum() + self.shift

    def apply_array(self, X):
        return self.scale * self.base.apply_array(X) + self.shift * np.asarray(X)

    def adjoint_array(self, X):
        return self.scale * self.base.adjoint_array(X) + self.shift * np.asarray(X)

    def resolvent_array(self, lam, X):
        self.check_outside_sector(lam)
        return self.base.resolvent_array(complex(self._inner(lam)), X) / self.scale

    def resolvent_constant(self, omega):
        return self.base.resolvent_constant(omega) * (1.0 + (self.shift > 0))

    def calculus_constant(self):
        return self.base.calculus_constant()

    def _samples(self, lams, probe=None):
        return self.base._samples(self._inner(lams), probe) / self.scale

    def _samples_a(self, lams, probe=None):
        # (c A + eps) R(lam, c A + eps) = A R(mu, A) + (eps / c) R(mu, A), mu = (lam - eps) / c
        mu = self._inner(lams)
        out = self.base._samples_a(mu, probe)
        if self.shift:
            out = out + (self.shift / self.scale) * self.base._samples(mu, probe)
        return out

    def _identity_flat(self, probe=None):
        return self.base._identity_flat(probe)

    def _finish(self, flat, probe=None):
        return self.base._finish(flat, probe)

    def spectral_batch(self, funcs):
        return self.base.spectral_batch(lambda lam: funcs(self.scale * lam + self.shift))

    def resolvent_member(self, lam):
        self.check_outside_sector(lam)
        inner = complex(self._inner(lam))
        member = self.base.resolvent_member(inner)
        factor = lam / (self.scale * inner)
        return _ScaledMember(member, factor)


class _ScaledMember(OperatorHandle):
    kind = "ScaledMember"

    def __init__(self, member: OperatorHandle, factor: complex):
        self.member = member
        self.factor = complex(factor)
        self.grid = member.grid

    def apply_array(self, X):
        return self.factor * self.member.apply_array(X)

    def adjoint_array(self, X):
        return self.factor.conjugate() * self.member.adjoint_array(X)


# -- the Rademacher / Haar pair -------------------------------------------------


def rademacher(j: int, K: int) -> np.ndarray:
    """r_j = sgn sin(2^j pi t) at the 2^K cell midpoints; exact for 1 <= j <= K."""
    if not 0 <= j <= K:
        raise ValueError("need 0 <= j <= K")
    i = np.arange(1 << K, dtype=np.int64)
    return np.where((i >> (K - j)) & 1, -1.0, 1.0)


def haar_scaled(j: int, K: int) -> np.ndarray:
    """f_j = 2^{j/2} on (2^-j, 2^{1-j}], zero elsewhere, on the 2^K midpoint grid."""
    if not 1 <= j <= K:
        raise ValueError("need 1 <= j <= K")
    out = np.zeros(1 << K)
    lo, hi = 1 << (K - j), 1 << (K - j + 1)
    out[lo:hi] = 2.0 ** (j / 2.0)
    return out


class ONBMapOperator(OperatorHandle):
    """Rank-n map between the Rademacher and the scaled Haar systems on [0, 1].

    direction "T" sends f_j to r_j, direction "S" sends r_j to f_j.
    """

    kind = "ONBMap"

    def __init__(self, rank: int, direction: str = "S", K: int | None = None):
        rank = int(rank)
        if rank < 1:
            raise ValueError("rank must be positive")
        if direction not in ("S", "T"):
            raise ValueError("direction must be 'S' or 'T'")
        if K is None:
            K = max(10, rank + 1)
        if K < rank + 1:
            raise ValueError(f"grid 2^{K} is too small for rank {rank}; need exponent >= {rank + 1}")
        if K > MAX_ONB_EXPONENT:
            raise ValueError(
                f"rank {rank} needs a grid of 2^{K} points, above the limit 2^{MAX_ONB_EXPONENT}"
            )
        self.rank, self.direction, self.K = rank, direction, K
        self.grid = MeasureGrid.uniform(1 << K, 2.0)
        R = np.stack([rademacher(j, K) for j in range(1, rank + 1)], axis=1)
        F = np.stack([haar_scaled(j, K) for j in range(1, rank + 1)], axis=1)
        self.source, self.target = (R, F) if direction == "S" else (F, R)
        self._source_w = self.source * self.grid.weights[:, None]

    def gram(self, which: str = "source") -> np.ndarray:
        B = self.source if which == "source" else self.target
        return (B.T * self.grid.weights) @ B

    def apply_array(self, X):
        X, flat = _cols(X)
        Y = _real_matmul(self.target, _real_matmul(self._source_w.T, X))
        return Y[:, 0] if flat else Y

    def adjoint_array(self, X):
        X, flat = _cols(X)
        Y = _real_matmul(self._source_w, _real_matmul(self.target.T, X))
        return Y[:, 0] if flat else Y


def _real_matmul(M: np.ndarray, X: np.ndarray) -> np.ndarray:
    # real matrix times complex block without promoting M to complex
    X = np.ascontiguousarray(X, dtype=complex)
    Y = M @ X.view(float).reshape(X.shape[0], X.shape[1], 2).reshape(X.shape[0], -1)
    return np.ascontiguousarray(Y).view(complex)


# -- maximal operator ------------------------------------------------------------


class MaximalOperator(OperatorHandle):
    """Exact uncentered discrete maximal function on a uniform 1-D grid."""

    kind = "Maximal"

    def __init__(self, grid: MeasureGrid, method: str = "fast"):
        if not np.allclose(grid.weights, grid.weights[0], rtol=0, atol=0):
            raise ValueError("the maximal operator needs uniform weights")
        self.grid = grid
        self.method = method

    def apply_array(self, X):
        X, flat = _cols(X)
        fn = maximal_fast if self.method == "fast" else maximal_reference
        Y = np.stack([fn(X[:, c]) for c in range(X.shape[1])], axis=1).astype(complex)
        return Y[:, 0] if flat else Y


def maximal_reference(f: np.ndarray) -> np.ndarray:
    """O(N^2): for each left end a, suffix maxima of the averages over [a, b]."""
    a = np.abs(np.asarray(f))
    N = a.size
    P = np.concatenate([[0.0], np.cumsum(a)])
    M = np.zeros(N)
    for left in range(N):
        avg = (P[left + 1:] - P[left]) / np.arange(1, N - left + 1)
        suffix = np.maximum.accumulate(avg[::-1])[::-1]
        M[left:] = np.maximum(M[left:], suffix)
    return M


def _upper_hull(xs, ys):
    hx, hy = [], []
    for x, y in zip(xs, ys):
        while len(hx) >= 2 and (hx[-1] - hx[-2]) * (y - hy[-2]) - (hy[-1] - hy[-2]) * (x - hx[-2]) >= 0:
            hx.pop()
            hy.pop()
        hx.append(x)
        hy.append(y)
    return hx, hy


def _lower_hull(xs, ys):
    hx, hy = [], []
    for x, y in zip(xs, ys):
        while len(hx) >= 2 and (hx[-1] - hx[-2]) * (y - hy[-2]) - (hy[-1] - hy[-2]) * (x - hx[-2]) <= 0:
            hx.pop()
            hy.pop()
        hx.append(x)
        hy.append(y)
    return hx, hy


def _max_slope_from_left(px, py, hx, hy):
    """max over hull vertices (all right of px) of slope; upper hull is unimodal."""
    lo, hi = 0, len(hx) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        s1 = (hy[mid] - py) / (hx[mid] - px)
        s2 = (hy[mid + 1] - py) / (hx[mid + 1] - px)
        if s2 >= s1:
            lo = mid + 1
        else:
            hi = mid
    return (hy[lo] - py) / (hx[lo] - px)


def _max_slope_to_right(px, py, hx, hy):
    """max over lower-hull vertices (all left of px) of slope to (px, py)."""
    lo, hi = 0, len(hx) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        s1 = (py - hy[mid]) / (px - hx[mid])
        s2 = (py - hy[mid + 1]) / (px - hx[mid + 1])
        if s2 >= s1:
            lo = mid + 1
        else:
            hi = mid
    return (py - hy[lo]) / (px - hx[lo])


def maximal_fast(f: np.ndarray) -> np.ndarray:
    """Divide and conquer over the split point; crossing intervals are found as
    tangents to convex hulls of the prefix-sum graph. O(N log^2 N)."""
    a = np.abs(np.asarray(f, dtype=complex)).astype(float)
    N = a.size
    P = np.concatenate([[0.0], np.cumsum(a)]).tolist()
    M = a.copy()
    stack = [(0, N)]
    while stack:
        lo, hi = stack.pop()
        if hi - lo < 2:
            continue
        mid = (lo + hi) // 2
        # intervals [l, r] with lo <= l < mid <= r < hi; average = slope(P at l, P at r + 1)
        rx = list(range(mid + 1, hi + 1))
        ux, uy = _upper_hull(rx, [P[c] for c in rx])
        best = -math.inf
        for l in range(lo, mid):
            best = max(best, _max_slope_from_left(l, P[l], ux, uy))
            if best > M[l]:
                M[l] = best
        lx = list(range(lo, mid))
        wx, wy = _lower_hull(lx, [P[c] for c in lx])
        best = -math.inf
        for r in range(hi - 1, mid - 1, -1):
            best = max(best, _max_slope_to_right(r + 1, P[r + 1], wx, wy))
            if best > M[r]:
                M[r] = best
        stack.append((lo, mid))
        stack.append((mid, hi))
    return M


# -- GridFunction level ------------------------------------------------------------


def _check_grid(A: OperatorHandle, x: GridFunction) -> None:
    if x.grid.n != A.grid.n or not np.array_equal(x.grid.weights, A.grid.weights):
        raise ValueError("input function lives on a different grid than the operator")


def apply(A: OperatorHandle, x: GridFunction) -> GridFunction:
    _check_grid(A, x)
    return GridFunction(x.grid, A.apply_array(x.values[:, None])[:, 0])


def resolvent_apply(A: OperatorHandle, lam: complex, x: GridFunction) -> GridFunction:
    _check_grid(A, x)
    return GridFunction(x.grid, A.resolvent_array(complex(lam), x.values[:, None])[:, 0])


def maximal_apply(M: MaximalOperator, f: GridFunction, method: str | None = None) -> GridFunction:
    _check_grid(M, f)
    fn = maximal_fast if (method or M.method) == "fast" else maximal_reference
    return GridFunction(f.grid, fn(f.values))


# -- JSON construction ---------------------------------------------------------------


def _complex_list(values: Any) -> np.ndarray:
    out = []
    for v in values:
        if isinstance(v, (list, tuple)):
            out.append(complex(float(v[0]), float(v[1]) if len(v) > 1 else 0.0))
        else:
            out.append(complex(v))
    return np.array(out, dtype=complex)


def _p_of(doc: dict) -> float:
    p = doc.get("p", 2.0)
    return math.inf if isinstance(p, str) and p.lower() == "inf" else float(p)


def operator_from_json(doc: dict) -> OperatorHandle:
    """Build an operator from a small JSON document.

    kinds: identity, diagonal, dense, random, laplacian, onb-map.
    """
    kind = str(doc.get("kind", "")).lower()
    p = _p_of(doc)
    seed = int(doc.get("seed", 0))
    spectrum = doc.get("spectrum")
    if kind == "identity":
        return DenseMatrixOperator.identity(int(doc["n"]), p)
    if kind in ("laplacian", "fourier") or spectrum == "laplacian":
        return FourierMultiplierOperator.laplacian(int(doc["n"]), float(doc.get("power", 1.0)),
                                                   float(doc.get("shift", 0.0)), p)
    if kind == "diagonal":
        op: OperatorHandle = DenseMatrixOperator.diagonal(_complex_list(spectrum), doc.get("sector_angle"), p)
    elif kind == "dense":
        rng = np.random.default_rng(seed)
        if spectrum is not None:
            op = DenseMatrixOperator.from_spectrum(_complex_list(spectrum), rng, float(doc.get("cond", 10.0)),
                                                   doc.get("sector_angle"), p)
        elif "matrix" in doc:
            rows = [_complex_list(r) for r in doc["matrix"]]
            op = DenseMatrixOperator(np.array(rows), doc.get("sector_angle"), grid=MeasureGrid.counting(len(rows), p))
        else:
            raise ValueError("dense operator needs 'spectrum' or 'matrix'")
    elif kind == "random":
        rng = np.random.default_rng(seed)
        op = random_sectorial_matrix(int(doc["n"]), rng, float(doc.get("sector_angle", math.pi / 4)),
                                     cond_max=float(doc.get("cond", 100.0)), p=p)
    elif kind in ("onb-map", "onb"):
        return ONBMapOperator(int(doc.get("rank", doc.get("n", 8))), str(doc.get("direction", "S")),
                              doc.get("K"))
    else:
        raise ValueError(f"unknown operator kind {kind!r}")
    shift = float(doc.get("shift", 0.0))
    if shift:
        op = ShiftedOperator(op, 1.0, shift)
    return op
