"""Reflection and transmission at the star junction.

A wave ``exp(-i k n delta)`` arriving on one ray produces ``R exp(+i k n delta)``
on that ray and ``T exp(+i k n delta)`` on each of the other ``N - 1`` rays,
with ``T = R + 1`` and ``u = T`` at the center. Writing
``R = (e^{i theta} - (N - 1)) / N`` the phase factor is a ratio of complex
conjugates, which makes ``|R|^2 + (N - 1) |T|^2 = 1`` automatic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np

from .dynamics import (
    PacketSpec, check_dt, default_dt, energy, init_packet, packet_horizon,
    run_verlet, shadow_energy, verlet_frequency,
)
from .lattice import LatticeParams, dispersion, group_velocity


@dataclass(frozen=True)
class Reflection:
    k: float
    r: complex
    phase: complex

    @property
    def t(self) -> complex:
        """Transmission amplitude onto each non-incident ray."""
        return self.r + 1


def _from_phase(k, phase, n_rays) -> Reflection:
    return Reflection(k, phase / n_rays - (n_rays - 1) / n_rays, phase)


def _check_band(k, delta):
    kd = np.asarray(k) * delta
    if np.any(kd <= 0) or np.any(kd >= math.pi):
        raise ValueError(f"k*delta must lie strictly inside (0, pi); band edges carry no flux (got {k})")


def reflection_exact(k, params: LatticeParams) -> Reflection:
    """Junction solution for arbitrary N, M, m and delta (``k`` may be an array)."""
    _check_band(k, params.delta)
    N, M = params.n_rays, params.center_mass
    half = 0.5 * np.asarray(k, dtype=float) * params.delta
    s, c = np.sin(half), np.cos(half)
    re = (2 * N - 4 * M) * s**2 + (1 - M) * (params.mass * params.delta) ** 2
    im = 2 * N * s * c
    phase = -(re + 1j * im) / (re - 1j * im)
    return _from_phase(k, phase, N)


def reflection_paper_n3(k, center_mass, delta) -> Reflection:
    """Three-ray phase factor with the mass term dropped at the junction.

    ``center_mass`` may be complex; that is only meaningful for the
    continuum-limit analysis, never for simulation.
    """
    _check_band(k, delta)
    half = 0.5 * np.asarray(k, dtype=float) * delta
    s, c = np.sin(half), np.cos(half)
    a = (2 * center_mass - 3) * s
    phase = -(a - 3j * c) / (a + 3j * c)
    return _from_phase(k, phase, 3)


def junction_residual(refl: Reflection, params: LatticeParams) -> float:
    """Residual of the center equation of motion evaluated on the scattering ansatz.

    Site amplitudes are ``e^{-iqn} + R e^{iqn}`` on the incident ray and
    ``(R + 1) e^{iqn}`` elsewhere, ``q = k delta``; the center carries ``R + 1``.
    """
    N, M, d = params.n_rays, params.center_mass, params.delta
    q = refl.k * d
    w2 = float(dispersion(refl.k, params)) ** 2
    R = refl.r
    u = R + 1
    first = np.exp(-1j * q) + R * np.exp(1j * q) + (N - 1) * u * np.exp(1j * q)
    lhs = -M * w2 * u
    rhs = (first - N * u) / d**2 - params.mass**2 * u
    return float(abs(lhs - rhs))


@dataclass(frozen=True)
class ContinuumParams:
    k1: complex

    def __post_init__(self):
        if self.k1 == 0:
            raise ValueError("k1 must be nonzero")


def theta_continuum(k, c: ContinuumParams) -> complex:
    """Point-scatterer phase factor ``-(k - k1) / (k + k1)``."""
    if np.any(np.asarray(k) + c.k1 == 0):
        raise ValueError("k = -k1 is a pole of the continuum phase")
    return -(k - c.k1) / (k + c.k1)


def continuum_reflection(k, c: ContinuumParams) -> Reflection:
    return _from_phase(k, theta_continuum(k, c), 3)


def continuum_limit_check(k, c: ContinuumParams, deltas) -> list[float]:
    """Distance between the lattice and continuum phase factors as delta shrinks.

    The center mass is scaled as ``M(delta) = 3i / (k1 delta)``.
    """
    target = theta_continuum(k, c)
    errors = []
    for d in deltas:
        M = 3j / (c.k1 * d)
        errors.append(float(abs(reflection_paper_n3(k, M, d).phase - target)))
    return errors


def fitted_order(deltas, errors) -> float:
    """Least-squares slope of ``log(error)`` against ``log(delta)``."""
    slope, _ = np.polyfit(np.log(np.asarray(deltas, float)), np.log(np.asarray(errors, float)), 1)
    return float(slope)


@dataclass
class MeasuredScattering:
    k0: float
    r: complex
    t: complex
    energy_rel_error: float
    shadow_rel_error: float
    ray_asymmetry: float
    t_final: float
    series: list = field(default_factory=list)

    @property
    def r_abs(self) -> float:
        return abs(self.r)

    @property
    def r_arg(self) -> float:
        return float(np.angle(self.r))

    @property
    def t_abs(self) -> float:
        return abs(self.t)


def _carrier_amplitude(phi, phi_dot, omega_eff, q, sign):
    """Project the positive-frequency field ``phi + i phi_dot / omega`` onto ``exp(sign*i*q*n)``."""
    n = np.arange(1, phi.shape[-1] + 1)
    c = phi + 1j * phi_dot / omega_eff
    return complex(np.sum(c * np.exp(-1j * sign * q * n)))


def measure_reflection(
    spec: PacketSpec,
    params: LatticeParams,
    dt: float | None = None,
    n_records: int = 0,
) -> MeasuredScattering:
    """Scatter a packet off the junction with Verlet and read off R and T at the carrier.

    The packet is launched with velocities matched to Verlet's discrete
    dispersion so it is purely incoming. It is evolved until the reflected
    packet has travelled back out as far as it started, then the carrier
    Fourier amplitude on the incident ray and on the first transmitted ray
    are divided by the incident amplitude at t = 0.
    """
    if spec.direction != "toward":
        raise ValueError("direction: scattering needs a packet moving toward the junction")
    dt = default_dt(params) if dt is None else dt
    check_dt(dt, params)
    q = spec.k0 * params.delta
    omega = float(dispersion(spec.k0, params))
    scale = math.sqrt(1.0 - 0.25 * (omega * dt) ** 2)
    omega_eff = omega * scale
    omega_num = float(verlet_frequency(omega, dt))

    state = init_packet(spec, params, velocity_scale=scale)
    inc = spec.ray - 1
    a_in = _carrier_amplitude(state.phi[inc], state.phi_dot[inc], omega_eff, q, -1)
    if abs(a_in) < 1e-8:
        raise ValueError("incident carrier amplitude below noise floor")

    vg = float(group_velocity(spec.k0, params))
    t_final = 2.0 * spec.center * params.delta / vg
    if t_final > packet_horizon(spec, params):
        raise ValueError(
            f"horizon violated: need t={t_final:.4g} but the outgoing packet reaches "
            f"site L after {packet_horizon(spec, params):.4g}; increase ray_len or move the packet"
        )
    n_steps = int(math.ceil(t_final / dt))
    t_final = n_steps * dt

    e0 = energy(state, params)
    s0 = shadow_energy(state, params, dt)
    series = []
    shadow_dev = 0.0
    chunks = max(n_records, 1)
    bounds = np.linspace(0, n_steps, chunks + 1).astype(int)
    if n_records:
        series.append(_record(0.0, state, params, e0))
    for a, b in zip(bounds[:-1], bounds[1:]):
        state = run_verlet(state, params, dt, int(b - a))
        shadow_dev = max(shadow_dev, abs(shadow_energy(state, params, dt) - s0) / s0)
        if n_records:
            series.append(_record(b * dt, state, params, energy(state, params)))

    others = [j for j in range(params.n_rays) if j != inc]
    ref = others[0]
    asym = 0.0
    for j in others[1:]:
        asym = max(asym, float(np.max(np.abs(state.phi[j] - state.phi[ref]))),
                   float(np.max(np.abs(state.phi_dot[j] - state.phi_dot[ref]))))

    rot = np.exp(1j * omega_num * t_final)
    a_ref = _carrier_amplitude(state.phi[inc], state.phi_dot[inc], omega_eff, q, +1)
    a_tr = _carrier_amplitude(state.phi[ref], state.phi_dot[ref], omega_eff, q, +1)
    return MeasuredScattering(
        k0=spec.k0,
        r=a_ref * rot / a_in,
        t=a_tr * rot / a_in,
        energy_rel_error=abs(energy(state, params) - e0) / e0,
        shadow_rel_error=shadow_dev,
        ray_asymmetry=asym,
        t_final=t_final,
        series=series,
    )


def _record(t, state, params, e):
    dens = state.phi**2 + state.phi_dot**2
    n = np.arange(1, params.ray_len + 1)
    mass = dens.sum(axis=1)
    cents = np.where(mass > 0, (dens * n).sum(axis=1) / np.where(mass > 0, mass, 1.0), 0.0)
    return (t, e, *cents.tolist())
