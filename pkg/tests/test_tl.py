import math

import numpy as np
import pytest

from sectlab.norms import NormSpec, evaluate
from sectlab.operators import DenseMatrixOperator, FourierMultiplierOperator, random_sectorial_matrix
from sectlab.symbols import CertificationError, builtin_symbol, constant, exp_tau
from sectlab.tl import (
    discrete_equivalence_experiment,
    embedding_experiment,
    fourier_suite,
    hinf_tl_bound_experiment,
    input_suite,
    laplacian_littlewood_paley_experiment,
    littlewood_paley_norm,
    lp_partition,
    norm_equivalence_experiment,
    retraction_experiment,
    sample_fourier_suite,
    shift_invariance_experiment,
)

RHO1 = builtin_symbol("rho_1")
EXPA1 = builtin_symbol("exp_alpha", 1.0)
DIAG = DenseMatrixOperator.diagonal([0.3, 1.0, 2.5, 7.0, 20.0])
# sum_{|j|<=5} -f(2^j), f(z) = -z/((1+z)(2+z)); mpmath, exact rational
PJ_IDENTITY_N5 = 0.95431235431235431


def test_equivalence_same_symbol_is_one():
    X = input_suite(DIAG, 8)
    rep = norm_equivalence_experiment(DIAG, 0.0, 2, RHO1, RHO1, X)
    assert np.allclose(rep.ratios, 1.0, rtol=1e-14)
    assert rep.stable


def test_equivalence_diagonal_scalar_constants():
    # theta = 0: c(rho_1) = 6^-1/2, c(z e^-z) = 1/2
    X = input_suite(DIAG, 12, seed=2)
    rep = norm_equivalence_experiment(DIAG, 0.0, 2, RHO1, EXPA1, X)
    assert np.allclose(rep.ratios, 2 / math.sqrt(6), rtol=1e-6)


def test_equivalence_random_matrix_stable():
    A = random_sectorial_matrix(16, np.random.default_rng(0))
    rep = norm_equivalence_experiment(A, 0.0, 2, RHO1, EXPA1, input_suite(A, 12))
    assert rep.stable
    assert rep.refinement[1]["change"] < 0.05


def test_discrete_equivalence_exact_direction():
    A = random_sectorial_matrix(8, np.random.default_rng(1))
    rep = discrete_equivalence_experiment(A, 0.0, 2, RHO1, input_suite(A, 8))
    assert rep.details["exact_subsum"]
    assert rep.stable
    with pytest.raises(CertificationError):
        discrete_equivalence_experiment(A, 1.5, 2, RHO1, input_suite(A, 2))


def test_hinf_constant_symbol_ratio_one():
    X = input_suite(DIAG, 6)
    rep = hinf_tl_bound_experiment(DIAG, 0.0, 2, RHO1, X, schedule=[[constant(1.0)], [constant(1.0)]])
    assert np.allclose(rep.ratios, 1.0, rtol=1e-9)


def test_hinf_exponential_on_diagonal():
    a = np.array([0.3, 1.0, 2.5, 7.0, 20.0])
    X = input_suite(DIAG, 10, seed=1)
    f = exp_tau(1.0)
    rep = hinf_tl_bound_experiment(DIAG, 0.0, 2, RHO1, X, schedule=[[f], [f]])
    oracle = np.linalg.norm(np.exp(-a)[:, None] * X, axis=0) / np.linalg.norm(X, axis=0)
    assert np.allclose(rep.ratios, oracle, rtol=1e-6)
    assert np.all(np.array(rep.ratios) <= 1 + 1e-6)


def test_hinf_rejects_unbounded_family():
    with pytest.raises(CertificationError):
        hinf_tl_bound_experiment(DIAG, 0.0, 2, RHO1, input_suite(DIAG, 2), schedule=[[constant(2.0)]])


def test_hinf_laplacian_plateaus():
    A = FourierMultiplierOperator.laplacian(64)
    rep = hinf_tl_bound_experiment(A, 0.0, 2, RHO1, input_suite(A, 8))
    assert rep.stable
    assert rep.details["final_increase"] < 0.02


# -- Laplacian against Littlewood-Paley --------------------------------------------


def test_lp_partition_sums_to_one():
    k = np.arange(0, 200)
    chi = lp_partition(k, J=9)
    assert np.allclose(chi.sum(axis=0), 1.0, atol=1e-15)
    assert np.all((chi > 0).sum(axis=0) <= 2)


@pytest.mark.parametrize("p,s,theta", [(2.0, 2.0, 0.0), (3.0, 2.0, 0.25), (2.0, 4.0, 0.1)])
def test_single_mode_closed_form(p, s, theta):
    # e^{i 4 x}: chi_2 = 1 is the only bump; the operator norm factors through
    # lambda_4^theta c(z e^-z, theta, s), c^s = Gamma(s(1 - theta)) / s^(s(1 - theta))
    N, k = 64, 4
    A = FourierMultiplierOperator.laplacian(N, p=p)
    x = np.exp(1j * k * 2 * np.pi * np.arange(N) / N)
    lam = (2 - 2 * math.cos(2 * math.pi * k / N)) * (N / (2 * math.pi)) ** 2
    c = (math.gamma(s * (1 - theta)) / s ** (s * (1 - theta))) ** (1 / s)
    tl = evaluate(A, NormSpec(theta, s, builtin_symbol("exp_frac", 1.0, 1)), x).values[0]
    lp = littlewood_paley_norm(x, p, s, 2 * theta)
    assert lp == pytest.approx((2 * math.pi) ** (1 / p) * 4.0 ** (2 * theta), rel=1e-14)
    assert tl / lp == pytest.approx(lam**theta * c / 4.0 ** (2 * theta), rel=1e-6)


def test_laplacian_plancherel_case_narrow():
    # flat-spectrum band-limited random inputs (every fourth suite column from index 1)
    C = fourier_suite(48, seed=0, band=30)[:, 1::4]
    rep = laplacian_littlewood_paley_experiment(256, 1, 2.0, 2.0, 0.0, coeffs=C)
    assert rep.max_ratio / rep.min_ratio < 1.10
    assert rep.stable


def test_laplacian_suite_independent_of_grid():
    C = fourier_suite(3, seed=4, band=8)
    x64 = sample_fourier_suite(C, 64)
    x128 = sample_fourier_suite(C, 128)
    assert np.allclose(x64, x128[::2])
    with pytest.raises(ValueError):
        sample_fourier_suite(fourier_suite(1, band=40), 64)


# -- embeddings, retraction, shift --------------------------------------------------


def test_embedding_nested_and_domination():
    A = DenseMatrixOperator.diagonal(np.linspace(1.0, 2.0, 5))
    X = input_suite(A, 10)
    rep = embedding_experiment(A, [0.3, 0.6], [1.0, 2.0, math.inf], X)
    assert rep.details["nested_ok"]
    # scalar factorization with s = 1: c(theta) = pi theta / sin(pi theta)
    a = np.linspace(1.0, 2.0, 5)
    c3, c6 = 0.3 * math.pi / math.sin(0.3 * math.pi), 0.6 * math.pi / math.sin(0.6 * math.pi)
    xn = np.linalg.norm(X, axis=0)
    oracle = (xn + c3 * np.linalg.norm(a[:, None] ** 0.3 * X, axis=0)) / (
        xn + c6 * np.linalg.norm(a[:, None] ** 0.6 * X, axis=0))
    assert np.allclose(rep.ratios, oracle, rtol=1e-6)


def test_embedding_shifted_laplacian_domination():
    A = FourierMultiplierOperator.laplacian(64, shift=1.0)
    rep = embedding_experiment(A, [0.3, 0.6], [2.0], input_suite(A, 8))
    assert rep.details["inhom_domination"]["theta=0.3 over theta'=0.6"] <= 1.0


def test_retraction_identity_partial_sum():
    I = DenseMatrixOperator.identity(2)
    rep = retraction_experiment(I, 0.5, 0.0, 2, 5, np.array([[1.0], [2.0]]))
    assert rep.ratios[0] == pytest.approx(PJ_IDENTITY_N5, rel=1e-10)
    assert rep.details["max_residual"] == pytest.approx(1 - PJ_IDENTITY_N5, rel=1e-8)


def test_retraction_diagonal_bound():
    a = np.array([0.3, 1.0, 2.5, 7.0, 20.0])
    N = 8
    rep = retraction_experiment(DIAG, 0.5, 0.0, 2, N, input_suite(DIAG, 12))
    bound = float(np.max(2.0**-N / (2.0**-N + a) + a / (2.0 ** (N + 1) + a)))
    assert rep.details["scalar_boundary_bound"] == pytest.approx(bound, rel=1e-14)
    assert rep.details["max_residual"] <= bound * (1 + 1e-9)


def test_retraction_random_matrix():
    A = random_sectorial_matrix(8, np.random.default_rng(2))
    rep = retraction_experiment(A, 0.5, 0.0, 2, 30, input_suite(A, 8))
    assert rep.details["max_residual"] <= 1e-6
    assert rep.stable


def test_retraction_strip():
    with pytest.raises(ValueError):
        retraction_experiment(DIAG, 0.5, 0.7, 2, 5, input_suite(DIAG, 2))
    with pytest.raises(ValueError):
        retraction_experiment(DIAG, 1.5, 0.0, 2, 5, input_suite(DIAG, 2))


def test_shift_zero_eps_is_one():
    rep = shift_invariance_experiment(DIAG, 0.0, 0.5, 2, input_suite(DIAG, 6))
    assert np.allclose(rep.ratios, 1.0, rtol=0, atol=0)


def test_shift_diagonal_scalar_oracle():
    # theta = 1/2, s = 2: c(rho_1)^2 = int_0^inf (1 + t)^-4 dt = 1/3
    a = np.linspace(1.0, 10.0, 5)
    A = DenseMatrixOperator.diagonal(a)
    X = input_suite(A, 10)
    rep = shift_invariance_experiment(A, 1.0, 0.5, 2, X)
    c = 1 / math.sqrt(3)
    xn = np.linalg.norm(X, axis=0)
    hom = c * np.linalg.norm(np.sqrt(a)[:, None] * X, axis=0)
    hom_eps = c * np.linalg.norm(np.sqrt(a + 1)[:, None] * X, axis=0)
    assert np.allclose(rep.ratios, (xn + hom) / (xn + hom_eps), rtol=1e-6)
    part_i = (xn + hom) / hom
    assert rep.details["inhom_over_hom"]["max"] == pytest.approx(part_i.max(), rel=1e-6)
    assert rep.details["inhom_over_hom"]["min"] == pytest.approx(part_i.min(), rel=1e-6)


def test_shift_laplacian_stable():
    A = FourierMultiplierOperator.laplacian(64)
    rep = shift_invariance_experiment(A, 1.0, 0.5, 2, input_suite(A, 8))
    assert rep.stable
    with pytest.raises(ValueError):
        shift_invariance_experiment(A, 1.0, 0.0, 2, input_suite(A, 2))
