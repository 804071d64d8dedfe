"""Time evolution of star-lattice states.

Two propagators are provided: velocity Verlet for long runs on large lattices
and an exact propagator based on a dense eigendecomposition of the
mass-weighted stiffness matrix, used as a reference for small systems.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np

from . import _kernels
from .lattice import (
    LatticeParams, StarState, acceleration, build_quadratic_form, check_state,
    dispersion, energy, group_velocity, mass_diagonal, omega_max_bound,
)

MAX_EXACT_SIZE = 5000


def default_dt(params: LatticeParams) -> float:
    return 0.1 * 2.0 / params.omega_band_max


def check_dt(dt: float, params: LatticeParams) -> None:
    limit = 2.0 / omega_max_bound(params)
    if not (dt > 0 and dt < limit):
        raise ValueError(f"dt={dt!r} outside the Verlet stability range (0, {limit:.6g})")


def run_verlet(state: StarState, params: LatticeParams, dt: float, n_steps: int) -> StarState:
    """Return the state after ``n_steps`` velocity-Verlet steps; input is not modified."""
    check_state(state, params)
    check_dt(dt, params)
    out = state.copy()
    out.phi = np.ascontiguousarray(out.phi, dtype=float)
    out.phi_dot = np.ascontiguousarray(out.phi_dot, dtype=float)
    u, u_dot = _kernels.verlet_kernel(
        float(out.u), float(out.u_dot), out.phi, out.phi_dot, float(dt), int(n_steps),
        1.0 / params.delta**2, params.mass**2, params.center_mass,
    )
    out.u, out.u_dot = float(u), float(u_dot)
    return out


def step_verlet(state: StarState, params: LatticeParams, dt: float) -> StarState:
    return run_verlet(state, params, dt, 1)


def shadow_energy(state: StarState, params: LatticeParams, dt: float) -> float:
    """Quadratic invariant conserved exactly by velocity Verlet on this linear system.

    ``E - dt**2 / 8 * a^T D a`` where ``a`` is the acceleration and ``D`` the
    mass diagonal. The physical energy oscillates about it by O(dt**2).
    """
    acc = acceleration(state, params)
    ada = params.center_mass * acc.a_u**2 + float(np.sum(acc.a_phi**2))
    return energy(state, params) - dt**2 / 8.0 * ada


def verlet_frequency(omega, dt: float):
    """Frequency at which Verlet rotates a mode of exact frequency ``omega``."""
    return np.arccos(1.0 - 0.5 * (omega * dt) ** 2) / dt


class ExactPropagator:
    """Closed-form evolution ``x(t)`` from the eigenpairs of the quadratic form."""

    def __init__(self, params: LatticeParams):
        if params.size > MAX_EXACT_SIZE:
            raise ValueError(
                f"system size {params.size} exceeds {MAX_EXACT_SIZE} for dense "
                "eigendecomposition; use run_verlet instead"
            )
        self.params = params
        lam, vecs = np.linalg.eigh(build_quadratic_form(params))
        self.freqs = np.sqrt(np.clip(lam, 0.0, None))
        self.vecs = vecs
        self.sqrt_mass = np.sqrt(mass_diagonal(params))

    def __call__(self, state: StarState, t: float) -> StarState:
        check_state(state, self.params)
        y0 = self.sqrt_mass * state.displacement_vector()
        v0 = self.sqrt_mass * state.velocity_vector()
        c = self.vecs.T @ y0
        s = self.vecs.T @ v0
        w = self.freqs
        cos_wt, sin_wt = np.cos(w * t), np.sin(w * t)
        y = self.vecs @ (c * cos_wt + s * _sinc_t(w, t))
        v = self.vecs @ (-c * w * sin_wt + s * cos_wt)
        return StarState.from_vectors(y / self.sqrt_mass, v / self.sqrt_mass, self.params)


def _sinc_t(w, t):
    """``sin(w t) / w`` with the ``w -> 0`` limit ``t``."""
    out = np.full_like(w, float(t))
    nz = w > 0
    out[nz] = np.sin(w[nz] * t) / w[nz]
    return out


@lru_cache(maxsize=16)
def exact_propagator(params: LatticeParams) -> ExactPropagator:
    return ExactPropagator(params)


def evolve_exact(state: StarState, params: LatticeParams, t: float) -> StarState:
    return exact_propagator(params)(state, t)


def boundary_horizon(params: LatticeParams, support: int, safety: float = 0.5) -> float:
    """Latest time at which a disturbance confined to sites ``<= support`` leaves site L quiet.

    Signals on the lattice travel no faster than one site per ``delta`` of
    time; ``safety`` keeps the exponentially small precursor ahead of the
    wavefront negligible at the boundary.
    """
    return safety * (params.ray_len - support) * params.delta


@dataclass(frozen=True)
class PacketSpec:
    """Gaussian wave packet on ray ``ray`` (1-based), centered at site ``center``."""

    ray: int
    k0: float
    center: float
    width: float
    direction: str = "toward"

    def validate(self, params: LatticeParams) -> None:
        if not 1 <= self.ray <= params.n_rays:
            raise ValueError(f"ray: {self.ray} not in 1..{params.n_rays}")
        if not 0 < self.k0 * params.delta < math.pi:
            raise ValueError(f"k0: need 0 < k0*delta < pi, got {self.k0 * params.delta}")
        if self.width < 5:
            raise ValueError(f"width: must be >= 5, got {self.width}")
        if self.direction not in ("toward", "away"):
            raise ValueError(f"direction: expected 'toward' or 'away', got {self.direction!r}")
        if self.center - 4 * self.width <= 1:
            raise ValueError("packet overlaps the junction (center - 4*width <= 1)")
        if self.center + 4 * self.width >= params.ray_len:
            raise ValueError("packet overlaps the outer boundary (center + 4*width >= L)")


def init_packet(spec: PacketSpec, params: LatticeParams, velocity_scale: float = 1.0) -> StarState:
    """Gaussian-enveloped cosine with velocities of the matching traveling wave.

    ``velocity_scale`` multiplies the velocities; measurement code uses it to
    launch a wave that is purely one-directional under Verlet's discrete
    dispersion rather than the exact one.
    """
    spec.validate(params)
    n = np.arange(1, params.ray_len + 1, dtype=float)
    envelope = np.exp(-((n - spec.center) ** 2) / (2.0 * spec.width**2))
    phase = spec.k0 * params.delta * (n - spec.center)
    omega = float(dispersion(spec.k0, params))
    sign = -1.0 if spec.direction == "toward" else 1.0
    state = StarState.zeros(params)
    state.phi[spec.ray - 1] = envelope * np.cos(phase)
    state.phi_dot[spec.ray - 1] = velocity_scale * sign * omega * envelope * np.sin(phase)
    return state


def packet_horizon(spec: PacketSpec, params: LatticeParams) -> float:
    """Time for the leading edge of an outgoing packet to reach site L."""
    return (params.ray_len - spec.center - 4 * spec.width) * params.delta / float(group_velocity(spec.k0, params))


def centroid(values: np.ndarray) -> float:
    """Site-index centroid (1-based) of a nonnegative density along one ray."""
    n = np.arange(1, values.shape[-1] + 1)
    return float(np.sum(n * values) / np.sum(values))
