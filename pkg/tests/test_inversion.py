import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from starwave.inversion import (
    auto_precision, delta_q, eta_coeffs, mode_grid, q_from_eta_kernel, q_from_eta_triangular,
    reconstruct_from_grid, reconstruct_state, roundtrip,
)
from starwave.lattice import StarState, make_lattice
from starwave.modes import xi_transform


def lattice(N, L):
    return make_lattice(N, L, 1.0, 0.0, 1.0)


def ray_sums(state):
    """``Q_0 = N u`` followed by ``Q_n = sum_j phi_n^(j)``."""
    return np.concatenate(([state.phi.shape[0] * state.u], state.phi.sum(axis=0)))


def test_grid_samples_match_xi_transform():
    p = lattice(4, 10)
    s = StarState.random(p, np.random.default_rng(0))
    g = mode_grid(s, p, 16, precision="double")
    for i in (0, 7, 15):
        sp = xi_transform(s, float(g.nodes[i]), p)
        assert np.allclose(g.xi[i], sp.xi, atol=1e-13)
        assert np.allclose(g.xi_dot[i], sp.xi_dot, atol=1e-13)


def test_delta_q_single_site_example():
    p = lattice(3, 6)
    s = StarState.zeros(p)
    s.phi[1, 1] = 1.0
    dq = delta_q(mode_grid(s, p, 8, "double"), 3)
    expect = np.zeros((3, 6))
    expect[0, 1] = 1.0   # phi^(2) - phi^(1)
    expect[1, 1] = -1.0  # phi^(3) - phi^(2)
    assert np.allclose(dq, expect, atol=1e-14)


def test_delta_q_equal_rays_vanish():
    p = lattice(5, 8)
    s = StarState.zeros(p)
    s.phi[:] = np.random.default_rng(1).standard_normal(8)
    s.u = 0.4
    assert np.max(np.abs(delta_q(mode_grid(s, p, 12, "double"), 5))) < 1e-13


def test_delta_q_random_state():
    p = lattice(4, 12)
    s = StarState.random(p, np.random.default_rng(2))
    g = mode_grid(s, p, 20, "double")
    assert np.allclose(delta_q(g, 4), np.roll(s.phi, -1, axis=0) - s.phi, atol=1e-12)
    assert np.allclose(delta_q(g, 4, velocity=True), np.roll(s.phi_dot, -1, axis=0) - s.phi_dot, atol=1e-12)


def test_eta_center_example():
    p = lattice(3, 6)
    s = StarState.zeros(p)
    s.u = 1.0
    eta = eta_coeffs(mode_grid(s, p, 8, "double"))
    assert eta[0] == pytest.approx(3.0, abs=1e-14)
    assert np.max(np.abs(eta[1:])) < 1e-14


def test_eta_zero_state():
    p = lattice(3, 6)
    assert not np.any(eta_coeffs(mode_grid(StarState.zeros(p), p, 8, "double")))


@pytest.mark.parametrize("N", [3, 4, 6])
def test_eta_matches_ray_sums(N):
    L = 8
    p = lattice(N, L)
    s = StarState.random(p, np.random.default_rng(N))
    Q = np.append(ray_sums(s), 0.0)
    eta = eta_coeffs(mode_grid(s, p, 2 * L, "double"))
    assert np.allclose(eta, Q[:-1] + (N - 1) * Q[1:], atol=1e-10)


def test_sum_of_modes_expands_in_half_integer_cosines():
    N, L = 4, 7
    p = lattice(N, L)
    s = StarState.random(p, np.random.default_rng(9))
    eta = eta_coeffs(mode_grid(s, p, 16, "double"))
    for k in (0.37, 1.9, 2.7):
        direct = xi_transform(s, k, p).xi.sum()
        series = sum(eta[n] * math.cos(k * (n + 0.5)) for n in range(L + 1))
        assert series == pytest.approx(direct, abs=1e-12)


def test_doubling_grid_changes_nothing():
    p = lattice(5, 10)
    s = StarState.random(p, np.random.default_rng(4))
    a, b = mode_grid(s, p, 12, "double"), mode_grid(s, p, 24, "double")
    assert np.max(np.abs(delta_q(a, 5) - delta_q(b, 5))) <= 1e-12
    assert np.max(np.abs(eta_coeffs(a) - eta_coeffs(b))) <= 1e-12


def test_triangular_examples():
    assert np.array_equal(q_from_eta_triangular(np.array([1.0, 2.0, 3.0]), 3, 2), [9.0, -4.0, 3.0])
    assert not q_from_eta_triangular(np.zeros(5), 4, 4).any()
    N, L = 4, 5
    for n in range(L + 1):
        q = q_from_eta_triangular(np.eye(L + 1)[n], N, L)
        expect = [(1 - N) ** (n - m) if m <= n else 0 for m in range(L + 1)]
        assert np.array_equal(q, expect)


def test_triangular_shape_check():
    with pytest.raises(ValueError):
        q_from_eta_triangular(np.zeros(3), 3, 3)


def test_reconstruct_equal_rays():
    q = np.array([3.0, 1.0, -2.0, 0.5])
    u, phi = reconstruct_state(q, np.zeros((3, 3)), 3, 3)
    assert u == 1.0
    assert np.allclose(phi, q[1:] / 3)


def test_reconstruct_single_ray_example():
    a = 2.5
    dq = np.array([[-a], [0.0], [a]])
    u, phi = reconstruct_state(np.array([0.0, a]), dq, 3, 1)
    assert u == 0
    assert np.allclose(phi[:, 0], [a, 0, 0])


def test_reconstruct_rejects_inconsistent_differences():
    with pytest.raises(ValueError, match="inconsistent"):
        reconstruct_state(np.zeros(3), np.ones((3, 2)), 3, 2)
    with pytest.raises(ValueError):
        reconstruct_state(np.zeros(2), np.zeros((3, 2)), 3, 2)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(3, 7), st.integers(1, 9))
def test_reconstruct_inverts_sums_and_differences(seed, N, L):
    rng = np.random.default_rng(seed)
    u, phi = rng.standard_normal(), rng.standard_normal((N, L))
    q = np.concatenate(([N * u], phi.sum(axis=0)))
    u2, phi2 = reconstruct_state(q, np.roll(phi, -1, axis=0) - phi, N, L)
    assert u2 == pytest.approx(u, abs=1e-12)
    assert np.allclose(phi2, phi, atol=1e-12)


def test_zero_state_roundtrip():
    p = lattice(4, 16)
    assert roundtrip(StarState.zeros(p), p, 18) == 0


@pytest.mark.parametrize("N, L, P", [(3, 32, 64), (5, 16, 18), (5, 16, 64), (6, 32, 34)])
def test_roundtrip_examples(N, L, P):
    p = lattice(N, L)
    s = StarState.random(p, np.random.default_rng(N * L))
    assert roundtrip(s, p, P) < 1e-10


def test_reconstruct_from_grid_returns_velocities():
    p = lattice(4, 9)
    s = StarState.random(p, np.random.default_rng(12))
    back = reconstruct_from_grid(mode_grid(s, p, 11))
    assert back.u_dot == pytest.approx(s.u_dot, abs=1e-10)
    assert np.allclose(back.phi_dot, s.phi_dot, atol=1e-10)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(3, 6), st.integers(2, 20), st.integers(2, 40))
def test_roundtrip_property(seed, N, L, extra):
    p = lattice(N, L)
    s = StarState.random(p, np.random.default_rng(seed))
    assert roundtrip(s, p, L + extra) < 1e-10


def test_auto_precision():
    assert auto_precision(3, 8) is None
    assert auto_precision(6, 32) == 53 + math.ceil(32 * math.log2(5)) + 64


def test_float64_amplification_is_real():
    # the junction bound state makes Q -> eta ill-conditioned by ~(N-1)^L
    p = lattice(6, 32)
    s = StarState.random(p, np.random.default_rng(0))
    assert roundtrip(s, p, 34, precision="double") > 1.0
    assert roundtrip(s, p, 34, precision="auto") < 1e-10
    assert roundtrip(s, p, 34, precision=256) < 1e-10


def test_precision_validation():
    p = lattice(3, 4)
    with pytest.raises(ValueError, match="precision"):
        mode_grid(StarState.zeros(p), p, 8, precision=32)
    with pytest.raises(ValueError, match="precision"):
        mode_grid(StarState.zeros(p), p, 8, precision="quad")


def test_requires_unit_center_mass_and_spacing():
    with pytest.raises(ValueError, match="center_mass"):
        p = make_lattice(3, 4, 1.0, 0.0, 2.0)
        mode_grid(StarState.zeros(p), p, 8)
    with pytest.raises(ValueError, match="delta"):
        p = make_lattice(3, 4, 0.5, 0.0, 1.0)
        mode_grid(StarState.zeros(p), p, 8)


def test_two_rays_unsupported():
    p = lattice(2, 4)
    g = mode_grid(StarState.zeros(p), p, 8)
    with pytest.raises(ValueError, match="n_rays"):
        delta_q(g, 2)
    with pytest.raises(ValueError, match="n_rays"):
        q_from_eta_kernel(g, 2)
    with pytest.raises(ValueError, match="n_rays"):
        roundtrip(StarState.zeros(p), p, 8)


def test_coarse_grid_rejected():
    p = lattice(3, 10)
    g = mode_grid(StarState.zeros(p), p, 11)
    with pytest.raises(ValueError, match="coarse"):
        delta_q(g, 3)
    with pytest.raises(ValueError, match="coarse"):
        eta_coeffs(g)


def test_kernel_zero_spectrum():
    p = lattice(4, 6)
    rep = q_from_eta_kernel(mode_grid(StarState.zeros(p), p, 12), 4)
    assert not rep.q_kernel.any() and not rep.q_triangular.any()
    assert rep.max_abs_dev == 0


@pytest.mark.parametrize("N", [3, 4, 5, 8])
def test_kernel_denominator_positive(N):
    k = np.linspace(-math.pi, math.pi, 2001)
    den = N**2 - 4 * (N - 1) * np.sin(k / 2) ** 2
    assert den.min() == pytest.approx((N - 2) ** 2)
    assert den.min() > 0


def test_kernel_report_is_data():
    p = lattice(3, 8)
    s = StarState.random(p, np.random.default_rng(5))
    rep = q_from_eta_kernel(mode_grid(s, p, 16), 3)
    lines = rep.lines()
    assert lines[0].startswith("kernel vs triangular  N=3 L=8 P=16")
    assert len(lines) == 1 + 9
    assert np.isfinite(rep.max_abs_dev)
    # the triangular column is the state's ray sums
    assert np.allclose(rep.q_triangular, ray_sums(s), atol=1e-10)
