"""Decoupled normal-mode amplitudes of the star lattice.

Everything here works in lattice units (``delta = 1``, ``0 < k < pi``); use
``LatticeParams.unit_spacing`` to convert a model first.

For each ray ``j`` the combination

    xi_j(k) = sin(k) * xi0(k) + C(k) * phi_s^(j)(k),
    xi0(k)  = sum_j phi_c^(j)(k) + M u,
    C(k)    = (N - 2M)(1 - cos k) + (1 - M) m^2,

oscillates at exactly ``omega(k)`` while ``xi0`` alone is driven by ``-C(k) u``.
At ``M = 1`` the common factor ``2 sin(k/2)`` is divided out.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from .dynamics import boundary_horizon, evolve_exact
from .lattice import LatticeParams, StarState, acceleration, dispersion


@dataclass(frozen=True)
class RaySpectra:
    k: float
    phi_c: np.ndarray
    phi_s: np.ndarray

    @property
    def complex(self) -> np.ndarray:
        """``sum_n exp(i k n) phi_n`` for each ray."""
        return self.phi_c + 1j * self.phi_s


@dataclass(frozen=True)
class ModeSpectrum:
    k: float
    xi0: float
    xi: np.ndarray
    coeff_c: float
    xi0_dot: float
    xi_dot: np.ndarray
    reduced: bool  # True when the M = 1 form (divided by 2 sin(k/2)) is used


def _require_unit_spacing(params: LatticeParams):
    if params.delta != 1.0:
        raise ValueError("normal-mode transforms use delta = 1; call params.unit_spacing() first")


def _check_k(k):
    if not 0 < k < math.pi:
        raise ValueError(f"k must lie in (0, pi), got {k}")


def _sums(phi, k):
    n = np.arange(1, phi.shape[-1] + 1)
    return phi @ np.cos(k * n), phi @ np.sin(k * n)


def ray_spectra(state: StarState, k: float) -> RaySpectra:
    _check_k(k)
    c, s = _sums(state.phi, k)
    return RaySpectra(k, c, s)


def coefficient_c(k, params: LatticeParams):
    M = params.center_mass
    return (params.n_rays - 2 * M) * (1 - np.cos(k)) + (1 - M) * params.mass**2


def _xi(u, phi, k, params, reduced):
    c, s = _sums(phi, k)
    xi0 = c.sum() + params.center_mass * u
    if reduced:
        xi = math.cos(0.5 * k) * xi0 + (params.n_rays - 2) * math.sin(0.5 * k) * s
    else:
        xi = math.sin(k) * xi0 + coefficient_c(k, params) * s
    return float(xi0), xi


def xi_transform(state: StarState, k: float, params: LatticeParams, reduced: bool | None = None) -> ModeSpectrum:
    """Mode amplitudes at ``k`` from displacements, and their rates from velocities.

    ``reduced`` defaults to ``M == 1``; forcing ``reduced=False`` at M = 1
    returns the undivided form for comparison.
    """
    _require_unit_spacing(params)
    _check_k(k)
    if reduced is None:
        reduced = params.center_mass == 1.0
    elif reduced and params.center_mass != 1.0:
        raise ValueError("the reduced mode form only exists for center_mass = 1")
    xi0, xi = _xi(state.u, state.phi, k, params, reduced)
    xi0_dot, xi_dot = _xi(state.u_dot, state.phi_dot, k, params, reduced)
    return ModeSpectrum(k, xi0, xi, float(coefficient_c(k, params)), xi0_dot, xi_dot, reduced)


def xi0_drive_residual(state: StarState, k: float, params: LatticeParams) -> float:
    """``|xi0'' + omega^2 xi0 + C(k) u|`` with ``xi0''`` built from the accelerations."""
    _require_unit_spacing(params)
    acc = acceleration(state, params)
    c_acc, _ = _sums(acc.a_phi, k)
    xi0_ddot = c_acc.sum() + params.center_mass * acc.a_u
    xi0 = _sums(state.phi, k)[0].sum() + params.center_mass * state.u
    w2 = float(dispersion(k, params)) ** 2
    return abs(xi0_ddot + w2 * xi0 + float(coefficient_c(k, params)) * state.u)


def complex_mode_residual(state: StarState, k: float, params: LatticeParams) -> float:
    """Largest ``|phi''(k) + omega^2 phi(k) - u e^{ik} + phi_1|`` over rays."""
    _require_unit_spacing(params)
    acc = acceleration(state, params)
    n = np.arange(1, params.ray_len + 1)
    e = np.exp(1j * k * n)
    lhs = acc.a_phi @ e
    rhs = -float(dispersion(k, params)) ** 2 * (state.phi @ e) + state.u * np.exp(1j * k) - state.phi[:, 0]
    return float(np.max(np.abs(lhs - rhs)))


def support_of(state: StarState) -> int:
    """Highest 1-based site index carrying a nonzero displacement or velocity."""
    active = np.any((state.phi != 0) | (state.phi_dot != 0), axis=0)
    idx = np.nonzero(active)[0]
    return int(idx[-1]) + 1 if idx.size else 0


def verify_decoupling(state: StarState, params: LatticeParams, k_values, times) -> float:
    """Largest departure of ``xi_j(k, t)`` from free oscillation at ``omega(k)``.

    Also folds in the residual of the driven ``xi0`` equation at each time.
    Evolution uses the exact propagator; all times must lie inside the
    boundary horizon of the state's support.
    """
    _require_unit_spacing(params)
    horizon = boundary_horizon(params, support_of(state))
    if max(times) > horizon:
        raise ValueError(f"time {max(times)} beyond boundary horizon {horizon}")
    ks = list(k_values)
    start = [xi_transform(state, k, params) for k in ks]
    worst = 0.0
    for t in times:
        moved = evolve_exact(state, params, t)
        for k, s0 in zip(ks, start):
            w = float(dispersion(k, params))
            expect = s0.xi * math.cos(w * t) + s0.xi_dot * math.sin(w * t) / w
            got = xi_transform(moved, k, params).xi
            worst = max(worst, float(np.max(np.abs(got - expect))), xi0_drive_residual(moved, k, params))
    return worst
