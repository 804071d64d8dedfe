"""Invariant suite run by ``starwave verify``."""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from .dynamics import (
    PacketSpec, boundary_horizon, default_dt, evolve_exact, run_verlet, shadow_energy,
)
from .inversion import roundtrip
from .lattice import (
    StarState, acceleration, build_quadratic_form, energy, make_lattice,
    mass_diagonal,
)
from .modes import verify_decoupling
from .scattering import (
    ContinuumParams, continuum_limit_check, fitted_order, measure_reflection,
    reflection_exact, reflection_paper_n3,
)


@dataclass(frozen=True)
class Check:
    name: str
    ok: bool
    value: float
    limit: float

    def line(self) -> str:
        tag = "PASS" if self.ok else "FAIL"
        return f"[{tag}] {self.name}: {self.value:.3e} (limit {self.limit:.1e})"


def _below(name, value, limit):
    return Check(name, bool(value < limit), float(value), float(limit))


K_SWEEP = (np.arange(64) + 0.5) * math.pi / 64


def check_unitarity():
    worst = 0.0
    for N in range(2, 7):
        for M in (0.5, 1.0, 1.5, 3.0):
            for m in (0.0, 1.0):
                r = reflection_exact(K_SWEEP, make_lattice(N, 2, 1.0, m, M)).r
                worst = max(worst, float(np.max(np.abs(np.abs(r) ** 2 + (N - 1) * np.abs(r + 1) ** 2 - 1))))
    return _below("unitarity |R|^2 + (N-1)|R+1|^2 = 1", worst, 1e-12)


def check_paper_form():
    worst = 0.0
    for M in (0.5, 1.0, 1.5, 3.0):
        a = reflection_exact(K_SWEEP, make_lattice(3, 2, 1.0, 0.0, M)).r
        b = reflection_paper_n3(K_SWEEP, M, 1.0).r
        worst = max(worst, float(np.max(np.abs(a - b))))
    spot = abs(reflection_exact(math.pi / 2, make_lattice(3, 2, 1.0, 0.0, 1.0)).r - (-0.4 - 0.2j))
    return _below("exact vs three-ray closed form (m=0) and R(pi/2)", max(worst, spot), 1e-12)


def check_constant_r():
    a = reflection_exact(K_SWEEP, make_lattice(3, 2, 1.0, 0.0, 1.5)).r
    b = reflection_exact(K_SWEEP, make_lattice(2, 2, 1.0, 0.7, 1.0)).r
    dev = max(float(np.max(np.abs(a + 1 / 3))), float(np.max(np.abs(b))))
    return _below("constant R cases (-1/3 and 0)", dev, 1e-12)


def check_continuum():
    deltas = (1e-1, 1e-2, 1e-3, 1e-4)
    errs = continuum_limit_check(1.0, ContinuumParams(1j), deltas)
    order = fitted_order(deltas, errs)
    monotone = all(b < a for a, b in zip(errs, errs[1:]))
    return Check("continuum limit fitted order", monotone and order >= 0.9, order, 0.9)


def check_scattering(ray_len=4000):
    worst = 0.0
    asym = 0.0
    energy_err = 0.0
    for M in (1.0, 1.5):
        p = make_lattice(3, ray_len, 1.0, 0.0, M)
        res = measure_reflection(PacketSpec(1, math.pi / 2, 1000.0, 40.0), p)
        exact = abs(reflection_exact(math.pi / 2, p).r)
        worst = max(worst, abs(res.r_abs - exact) / exact)
        asym = max(asym, res.ray_asymmetry)
        energy_err = max(energy_err, res.energy_rel_error)
    return [
        _below("measured |R| relative error", worst, 0.02),
        _below("transmitted rays identical", asym, 1e-10),
        _below("packet energy conservation", energy_err, 1e-6),
    ]


def check_decoupling(rng):
    worst = 0.0
    ks = np.linspace(0.2, 3.0, 8)
    for N in (2, 3, 4, 5):
        for M in (0.7, 1.0, 2.0):
            for m in (0.0, 1.0):
                p = make_lattice(N, 64, 1.0, m, M)
                state = StarState.random(p, rng, support=8)
                times = np.linspace(0.0, boundary_horizon(p, 8), 5)
                worst = max(worst, verify_decoupling(state, p, ks, times))
    return _below("normal-mode decoupling", worst, 1e-8)


def check_roundtrip(rng, states=20):
    worst = 0.0
    for N in (3, 4, 5, 6):
        for L in (16, 32):
            p = make_lattice(N, L, 1.0, 0.0, 1.0)
            for P in (L + 2, 4 * L):
                for _ in range(states):
                    worst = max(worst, roundtrip(StarState.random(p, rng), p, P))
    return _below("inverse transform round trip", worst, 1e-10)


def check_integrator(rng):
    p = make_lattice(3, 200, 1.0, 0.0, 1.0)
    dt = default_dt(p)
    state = StarState.random(p, rng, support=20)
    s0 = shadow_energy(state, p, dt)
    later = run_verlet(state, p, dt, 10_000)
    drift = abs(shadow_energy(later, p, dt) - s0) / s0
    back = run_verlet(StarState(later.u, -later.u_dot, later.phi, -later.phi_dot), p, dt, 10_000)
    rev = StarState(back.u, -back.u_dot, back.phi, -back.phi_dot).max_abs_diff(state)
    return [_below("Verlet energy drift (shadow energy)", drift, 1e-6), _below("Verlet reversibility", rev, 1e-9)]


def check_quadratic_form(rng):
    worst = 0.0
    for N, M, m in ((2, 1.0, 0.0), (3, 0.7, 1.0), (5, 2.5, 0.3)):
        p = make_lattice(N, 20, 0.8, m, M)
        H = build_quadratic_form(p)
        d = np.sqrt(mass_diagonal(p))
        state = StarState.random(p, rng)
        a = acceleration(state, p)
        expect = -(H @ (d * state.displacement_vector())) / d
        got = np.concatenate(([a.a_u], a.a_phi.ravel()))
        worst = max(worst, float(np.max(np.abs(got - expect)) / np.max(np.abs(expect))))
    return _below("forces match quadratic form", worst, 1e-12)


def check_exact_energy(rng):
    p = make_lattice(3, 30, 1.0, 0.5, 1.3)
    state = StarState.random(p, rng)
    e0 = energy(state, p)
    worst = max(abs(energy(evolve_exact(state, p, t), p) - e0) / e0 for t in (0.7, 13.0, 250.0))
    return _below("exact propagator energy conservation", worst, 1e-10)


def run_suite(seed: int, scatter_ray_len: int = 4000) -> list[Check]:
    rng = np.random.default_rng(seed)
    checks = [
        check_unitarity(), check_paper_form(), check_constant_r(), check_continuum(),
        check_quadratic_form(rng), check_exact_energy(rng),
    ]
    checks += check_integrator(rng)
    checks.append(check_decoupling(rng))
    checks.append(check_roundtrip(rng))
    checks += check_scattering(scatter_ray_len)
    return checks
