import numpy as np
import pytest
from numpy.testing import assert_allclose

from binquant.arma import (
    ArmaParams,
    ArmaPlant,
    companion_matrix,
    g_bound,
    lemma1_constants,
    margin_lemma1_constants,
    plant_step,
    simulate_output,
    spectral_radius,
)
from binquant.errors import DegenerateFir, DomainError, UnstableSystem

from conftest import random_stable_a


def test_companion_scalar():
    assert_allclose(companion_matrix(ArmaParams([-0.02], [1.0])), [[-0.02]])


def test_companion_second_order_layout():
    assert_allclose(companion_matrix([0.5, -0.06]), [[0.5, -0.06], [1.0, 0.0]])


def test_companion_second_order_eigenvalues():
    lam = np.sort(np.linalg.eigvals(companion_matrix([0.5, -0.06])).real)
    # roots of x^2 - 0.5x + 0.06
    disc = np.sqrt(0.25 - 4 * 0.06)
    assert_allclose(lam, [(0.5 - disc) / 2, (0.5 + disc) / 2], rtol=1e-12)
    assert_allclose(lam, [0.2, 0.3], rtol=1e-12)


def test_companion_rejects_fir():
    with pytest.raises(DegenerateFir):
        companion_matrix(ArmaParams([], [1.0]))


@pytest.mark.parametrize("a, rho", [([-0.02], 0.02), ([0.5, -0.06], 0.3), ([-0.4], 0.4)])
def test_spectral_radius(a, rho):
    assert spectral_radius(companion_matrix(a)) == pytest.approx(rho, rel=1e-10)


def test_g_bound_values():
    assert g_bound(0.03, 1) == pytest.approx(9e-4)
    assert g_bound(0.5, 2) == pytest.approx(4 * 0.25 + 0.0625)
    assert g_bound(1e-9, 3) < 1e-16


@pytest.mark.parametrize("h", [0.0, 1.0, -0.1, 1.5])
def test_g_bound_domain(h):
    with pytest.raises(DomainError):
        g_bound(h, 2)


def test_lemma1_scalar_cases():
    assert lemma1_constants(companion_matrix([-0.02])) == pytest.approx((1.0, 0.51))
    assert lemma1_constants(companion_matrix([-0.4])) == pytest.approx((1.0, 0.7))


def test_lemma1_second_order_bound_holds():
    A = companion_matrix([0.5, -0.06])
    M, h1 = lemma1_constants(A)
    assert h1 == pytest.approx(0.65)
    P = np.eye(2)
    for k in range(101):
        assert np.linalg.norm(P, 2) <= M * h1**k * (1 + 1e-12)
        P = P @ A


def test_lemma1_rejects_unstable():
    with pytest.raises(UnstableSystem):
        lemma1_constants(np.array([[1.2]]))


def test_margin_constants_scalar():
    M, h1 = margin_lemma1_constants(0.03, 1)
    assert M == 1.0 and h1 == pytest.approx(0.515)


def test_params_validation():
    with pytest.raises(DomainError):
        ArmaParams([0.5, 0.0], [1.0])
    with pytest.raises(DomainError):
        ArmaParams([0.5], [])
    with pytest.raises(UnstableSystem):
        ArmaParams([1.1], [1.0])
    with pytest.raises(UnstableSystem):
        ArmaParams([-0.4], [0.4]).check_margin(0.3)


def test_plant_first_step():
    plant = ArmaPlant(ArmaParams([-0.02], [1.0]))
    assert plant_step(plant, 1.0, 0.0, 0.0) == (1.0, 1.0, 0)


def test_plant_boundary_is_inclusive():
    plant = ArmaPlant(ArmaParams([], [1.0]))
    assert plant.step(0.25, -0.25, 0.0)[2] == 1


def test_plant_fir_feedthrough():
    plant = ArmaPlant(ArmaParams([], [1.0]))
    y, z, s = plant.step(5.0, -6.0, 0.0)
    assert (y, z, s) == (5.0, -1.0, 1)


def test_plant_matches_lfilter():
    rng = np.random.default_rng(3)
    params = ArmaParams([0.5, -0.06], [1.0, 0.3, -0.2])
    u = rng.standard_normal(500)
    plant = ArmaPlant(params)
    ys = [plant.step(uk, 0.0, 0.0)[0] for uk in u]
    assert_allclose(ys, simulate_output(params, u), rtol=1e-12, atol=1e-12)


def test_plant_batch_matches_scalar():
    rng = np.random.default_rng(4)
    params = ArmaParams([0.3], [1.0, 0.5])
    u = rng.standard_normal((3, 50))
    d = rng.standard_normal((3, 50))
    batch = ArmaPlant(params, batch=3)
    single = [ArmaPlant(params) for _ in range(3)]
    for j in range(50):
        yb, _, sb = batch.step(u[:, j], d[:, j], 0.1)
        for t in range(3):
            y, _, s = single[t].step(u[t, j], d[t, j], 0.1)
            assert y == yb[t] and s == sb[t]


# ---- properties -----------------------------------------------------------


def test_eigenvalues_are_reciprocal_roots():
    rng = np.random.default_rng(11)
    for _ in range(1000):
        p = int(rng.integers(1, 5))
        a = random_stable_a(rng, p)
        eig = np.sort_complex(np.linalg.eigvals(companion_matrix(a)))
        # 1 - a_1 z - ... - a_p z^p, coefficients highest power first
        roots = np.roots(np.concatenate([-a[::-1], [1.0]]))
        assert_allclose(np.sort_complex(1.0 / roots), eig, atol=1e-8)


def test_companion_norm_bounded_by_margin():
    rng = np.random.default_rng(12)
    for _ in range(300):
        p = int(rng.integers(1, 5))
        h = rng.uniform(0.05, 0.95)
        a = random_stable_a(rng, p, radius=h * 0.999)
        g = g_bound(h, p)
        assert np.sum(a**2) <= g * (1 + 1e-12)
        assert np.linalg.norm(companion_matrix(a), 2) <= np.sqrt(1 + g) * (1 + 1e-12)


def test_power_bound_random_systems():
    rng = np.random.default_rng(13)
    for _ in range(100):
        p = int(rng.integers(1, 5))
        A = companion_matrix(random_stable_a(rng, p))
        M, h1 = lemma1_constants(A)
        P = np.eye(p)
        for k in range(101):
            assert np.linalg.norm(P, 2) <= M * h1**k * (1 + 1e-9)
            P = P @ A


def test_margin_constants_dominate_powers():
    rng = np.random.default_rng(14)
    for _ in range(100):
        p = int(rng.integers(1, 5))
        h = rng.uniform(0.1, 0.9)
        A = companion_matrix(random_stable_a(rng, p, radius=h * 0.999))
        M, h1 = margin_lemma1_constants(h, p)
        P = np.eye(p)
        for k in range(101):
            assert np.linalg.norm(P, 2) <= M * h1**k * (1 + 1e-9)
            P = P @ A


def test_output_bounded_long_run():
    params = ArmaParams([-0.02], [1.0])
    rng = np.random.default_rng(15)
    u = np.where(np.arange(1, 10**6 + 1) % 2 == 1, 1.0 + 0.01 * rng.random(10**6), 0.0)
    y = simulate_output(params, u)
    assert np.all(np.isfinite(y))
    assert np.max(np.abs(y)) < 1.01 / (1 - 0.02)
