import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given
from hypothesis import strategies as st

from sectlab.funcalc import (
    ContourSpec,
    contour_apply,
    dunford_riesz_apply,
    fractional_power_apply,
    operator_function,
    phi_tA_stack,
    scaled_batch,
)
from sectlab.grid import GridFunction
from sectlab.operators import DenseMatrixOperator, FourierMultiplierOperator, SectorError, random_sectorial_matrix
from sectlab.symbols import (
    CertificationError,
    builtin_symbol,
    cayley,
    check_ue,
    exp_tau,
    parse_symbol,
    product,
    telescoping_symbol,
)


def rel(a, b):
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b)) / np.linalg.norm(np.asarray(b)))


# -- symbols -------------------------------------------------------------------


def test_rho_values():
    rho = builtin_symbol("rho_1")
    assert rho(1.0) == pytest.approx(0.25)
    assert builtin_symbol("rho", 2)(1.0) == pytest.approx(1 / 16)


def test_parse_symbol_forms():
    assert parse_symbol("rho_1").spec == "rho_1"
    assert parse_symbol("exp_alpha:1").params == (1.0,)
    assert parse_symbol("exp_frac:2,1").params == (2.0, 1)
    s = parse_symbol("interp_phi:0.5,sigma=2.5")
    assert s.sigma == 2.5
    with pytest.raises(ValueError):
        parse_symbol("nope")


def test_decay_certificate_is_an_upper_bound():
    for name, params in (("rho_1", ()), ("exp_alpha", (1.0,)), ("exp_frac", (2.0, 1))):
        sym = builtin_symbol(name, *params)
        z = np.logspace(-6, 6, 301) * np.exp(1j * 0.5 * sym.sigma)
        env = sym.C0 * np.minimum(np.abs(z) ** sym.beta, np.abs(z) ** -sym.beta)
        assert np.all(np.abs(sym(z)) <= env * (1 + 1e-12))


def test_bad_symbol_parameters():
    with pytest.raises(ValueError):
        builtin_symbol("exp_alpha", -1.0)
    with pytest.raises(ValueError):
        builtin_symbol("interp_phi", 1.5)


def test_ue_shifts():
    assert check_ue(builtin_symbol("rho_1"), 0)
    assert check_ue(builtin_symbol("exp_alpha", 1.0), -1)
    # the exponential symbol fails with no shift: phi(z)/phi(tz) grows like e^{(t-1)z}
    assert not check_ue(builtin_symbol("exp_alpha", 1.0), 0)


def test_bounded_families_have_sup_one():
    assert exp_tau(0.5).sup_bound <= 1 + 1e-12
    assert cayley(2.0).sup_bound <= 1 + 1e-12


# -- contour quadrature against independent matrix functions -------------------------


def _oracles(M):
    I = np.eye(M.shape[0])
    return {
        "rho_1": M @ np.linalg.inv((I + M) @ (I + M)),
        "rho_2": M @ M @ np.linalg.matrix_power(np.linalg.inv(I + M), 4),
        "exp_alpha": M @ scipy.linalg.expm(-M),
        "exp_frac": M @ M @ scipy.linalg.expm(-M),
    }


SYMS = {
    "rho_1": builtin_symbol("rho_1"),
    "rho_2": builtin_symbol("rho_2"),
    "exp_alpha": builtin_symbol("exp_alpha", 1.0),
    "exp_frac": builtin_symbol("exp_frac", 2.0, 1),
}


@pytest.mark.parametrize("name", sorted(SYMS))
def test_diagonal_against_closed_form(name):
    a = np.array([0.01, 0.5, 1.0, 3.0, 8.0])
    A = DenseMatrixOperator.diagonal(a)
    x = GridFunction(A.grid, np.ones(5))
    y = contour_apply(A, SYMS[name], x).values
    ref = np.diag(_oracles(np.diag(a))[name])
    assert np.max(np.abs(y - ref) / np.abs(ref)) <= 1e-8


@pytest.mark.parametrize("seed", range(6))
@pytest.mark.parametrize("name", sorted(SYMS))
def test_dense_against_scipy(seed, name):
    rng = np.random.default_rng(seed)
    A = random_sectorial_matrix(12, rng)
    x = rng.standard_normal(12) + 1j * rng.standard_normal(12)
    y = contour_apply(A, SYMS[name], GridFunction(A.grid, x)).values
    ref = _oracles(A.matrix)[name] @ x
    assert rel(y, ref) <= 1e-8


def test_dunford_riesz_resolvent_symbol():
    # 1/(1+z) has nonzero limit at 0 and goes through the exact E-class branch
    rng = np.random.default_rng(3)
    A = random_sectorial_matrix(8, rng)
    x = rng.standard_normal(8) + 0j
    f = builtin_symbol("one_over_1pz")
    y = dunford_riesz_apply(A, f, GridFunction(A.grid, x)).values
    assert rel(y, np.linalg.solve(np.eye(8) + A.matrix, x)) <= 1e-10
    with pytest.raises(CertificationError):
        contour_apply(A, f, GridFunction(A.grid, x))


def test_cayley_and_exponential():
    rng = np.random.default_rng(4)
    A = random_sectorial_matrix(8, rng)
    x = rng.standard_normal(8) + 0j
    I = np.eye(8)
    y = dunford_riesz_apply(A, cayley(0.7), GridFunction(A.grid, x)).values
    assert rel(y, np.linalg.solve(I + 0.7 * A.matrix, (I - 0.7 * A.matrix) @ x)) <= 1e-9
    y = dunford_riesz_apply(A, exp_tau(0.3), GridFunction(A.grid, x)).values
    assert rel(y, scipy.linalg.expm(-0.3 * A.matrix) @ x) <= 1e-9


def test_identity_operator():
    A = DenseMatrixOperator.identity(3)
    x = GridFunction(A.grid, [1.0, 2.0, 3.0])
    y = contour_apply(A, SYMS["rho_1"], x).values
    assert np.allclose(y, 0.25 * x.values, rtol=1e-12)


@pytest.mark.parametrize("alpha", [0.5, -0.5, 1.5])
def test_fractional_power(alpha):
    rng = np.random.default_rng(7)
    A = random_sectorial_matrix(6, rng)
    x = rng.standard_normal(6) + 0j
    y = fractional_power_apply(A, alpha, GridFunction(A.grid, x)).values
    ref = scipy.linalg.fractional_matrix_power(A.matrix, alpha) @ x
    assert rel(y, ref) <= 1e-9


def test_fractional_power_fourier_mean_zero():
    A = FourierMultiplierOperator.laplacian(32)
    t = 2 * np.pi * np.arange(32) / 32
    x = GridFunction(A.grid, np.sin(2 * t))
    lam = A.spectrum()[2]
    y = fractional_power_apply(A, -0.5, x).values
    assert np.allclose(y, lam**-0.5 * x.values, atol=1e-13)
    with pytest.raises(ZeroDivisionError):
        fractional_power_apply(A, -0.5, GridFunction(A.grid, 1.0 + np.sin(t)))


def test_phi_tA_stack_against_scalar():
    a = np.array([0.3, 2.0])
    A = DenseMatrixOperator.diagonal(a)
    ts = 2.0 ** np.arange(-40, 41, 5)
    stack = phi_tA_stack(A, SYMS["rho_1"], ts, GridFunction(A.grid, [1.0, 1.0]))
    z = ts[:, None] * a[None, :]
    ref = z / (1 + z) ** 2
    assert np.max(np.abs(stack.layers - ref) / ref) <= 1e-9
    with pytest.raises(ValueError):
        phi_tA_stack(A, SYMS["rho_1"], ts[::-1], GridFunction(A.grid, [1.0, 1.0]))


def test_extreme_scales_keep_relative_accuracy():
    # small |phi(tA)| values are not swamped by the quadrature error of the large ones
    a = np.array([0.5, 1.0, 2.0, 4.0, 8.0])
    A = DenseMatrixOperator.diagonal(a)
    ts = 2.0 ** np.arange(-60, 61, 4)
    out, _ = scaled_batch(A, SYMS["rho_1"], ts, probe=np.ones((5, 1), dtype=complex))
    z = ts[:, None] * a[None, :]
    ref = z / (1 + z) ** 2
    assert np.max(np.abs(out[:, :, 0] - ref) / ref) <= 1e-12


def test_multiplicativity():
    rng = np.random.default_rng(9)
    A = random_sectorial_matrix(8, rng)
    f, g = SYMS["rho_1"], SYMS["exp_alpha"]
    fg = product(f, g)
    x = GridFunction(A.grid, rng.standard_normal(8))
    left = contour_apply(A, fg, x).values
    right = contour_apply(A, f, contour_apply(A, g, x)).values
    assert rel(left, right) <= 1e-9


@pytest.mark.parametrize("omega", [0.9, 1.1, 1.3])
def test_omega_independence(omega):
    rng = np.random.default_rng(10)
    A = random_sectorial_matrix(8, rng)
    x = GridFunction(A.grid, rng.standard_normal(8))
    ref = contour_apply(A, SYMS["rho_1"], x).values
    y = contour_apply(A, SYMS["rho_1"], x, ContourSpec(omega=omega)).values
    assert rel(y, ref) <= 1e-10


def test_omega_outside_window_rejected():
    A = DenseMatrixOperator.diagonal([1.0, 2.0], sector_angle=0.5)
    x = GridFunction(A.grid, [1.0, 1.0])
    with pytest.raises(SectorError):
        contour_apply(A, SYMS["rho_1"], x, ContourSpec(omega=0.3))


def test_node_convergence():
    rng = np.random.default_rng(11)
    A = random_sectorial_matrix(8, rng)
    x = GridFunction(A.grid, rng.standard_normal(8))
    ref = SYMS["exp_alpha"]
    exact = A.matrix @ scipy.linalg.expm(-A.matrix) @ x.values
    errs = []
    for n in (80, 160, 320):
        y = contour_apply(A, ref, x, ContourSpec(n_nodes=n, L=18.0, auto=False, self_check=False)).values
        errs.append(rel(y, exact))
    assert errs[2] <= errs[0]
    assert errs[2] <= 1e-7


def test_telescoping_identity():
    # -z/((1+z)(2+z)) = 1/(1+z) - 1/(1+z/2), so the dyadic sum collapses to two boundary terms
    a = np.array([0.7, 3.0])
    A = DenseMatrixOperator.diagonal(a)
    N = 12
    ts = 2.0 ** np.arange(-N, N + 1)
    out, _ = scaled_batch(A, telescoping_symbol(), ts, probe=np.ones((2, 1), dtype=complex))
    total = out[:, :, 0].sum(axis=0)
    ref = 1 / (1 + 2.0**N * a) - 1 / (1 + 2.0 ** (-N - 1) * a)
    assert np.allclose(total, ref, rtol=1e-10)


def test_operator_function_batch(rng):
    A = random_sectorial_matrix(5, rng)
    B = operator_function(A, SYMS["rho_1"])
    ref = _oracles(A.matrix)["rho_1"]
    assert rel(B.mats[0], ref) <= 1e-9


@given(st.floats(0.05, 20.0))
def test_scale_covariance(c):
    # phi(t (cA)) = phi((ct) A)
    a = np.array([0.5, 2.0, 5.0])
    A = DenseMatrixOperator.diagonal(a)
    Ac = DenseMatrixOperator.diagonal(c * a)
    x = np.ones((3, 1), dtype=complex)
    y1, _ = scaled_batch(Ac, SYMS["rho_1"], [1.0], probe=x)
    y2, _ = scaled_batch(A, SYMS["rho_1"], [c], probe=x)
    assert np.allclose(y1, y2, rtol=1e-11)


def test_kernel_mode_input_gives_zero_without_false_alarm():
    A = FourierMultiplierOperator.laplacian(16)
    x = GridFunction(A.grid, np.ones(16))
    y = contour_apply(A, builtin_symbol("rho_1"), x).values
    assert np.abs(y).max() <= 1e-14
