"""Star lattice model: N harmonic Klein-Gordon chains tied to one center oscillator.

Sites on ray ``j`` are stored at ``phi[j, n - 1]`` for ``n = 1..L``; the
center displacement ``u`` plays the role of site 0 on every ray. Each ray is
closed at ``n = L`` by a fixed ghost site ``L + 1`` held at zero.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from . import _kernels


class ParamError(ValueError):
    """Out-of-range model parameter; ``field`` names the offending argument."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass(frozen=True)
class LatticeParams:
    n_rays: int
    ray_len: int
    delta: float
    mass: float
    center_mass: float

    def __post_init__(self):
        checks = (
            ("n_rays", _is_int(self.n_rays) and self.n_rays >= 2, "must be an integer >= 2"),
            ("ray_len", _is_int(self.ray_len) and self.ray_len >= 2, "must be an integer >= 2"),
            ("delta", _finite(self.delta) and self.delta > 0, "must be > 0"),
            ("mass", _finite(self.mass) and self.mass >= 0, "must be >= 0"),
            ("center_mass", _finite(self.center_mass) and self.center_mass > 0, "must be > 0"),
        )
        for field, ok, msg in checks:
            if not ok:
                raise ParamError(field, msg)

    @property
    def size(self) -> int:
        """Number of degrees of freedom, ``N * L + 1``."""
        return self.n_rays * self.ray_len + 1

    @property
    def omega_band_max(self) -> float:
        """Top of the chain band, ``sqrt(4 / delta**2 + m**2)``."""
        return math.sqrt(4.0 / self.delta**2 + self.mass**2)

    def replace(self, **changes) -> "LatticeParams":
        fields = dict(
            n_rays=self.n_rays, ray_len=self.ray_len, delta=self.delta,
            mass=self.mass, center_mass=self.center_mass,
        )
        fields.update(changes)
        return LatticeParams(**fields)

    def unit_spacing(self) -> "LatticeParams":
        """Equivalent model with ``delta = 1``.

        Lengths are measured in sites and time in units of ``delta``, so the
        field mass becomes ``mass * delta``. Displacements are unchanged.
        """
        return self.replace(delta=1.0, mass=self.mass * self.delta)


def _is_int(x) -> bool:
    return isinstance(x, (int, np.integer)) and not isinstance(x, bool)


def _finite(x) -> bool:
    return isinstance(x, (int, float, np.integer, np.floating)) and not isinstance(x, bool) and math.isfinite(x)


def make_lattice(n_rays, ray_len, delta, mass, center_mass) -> LatticeParams:
    return LatticeParams(n_rays, ray_len, float(delta), float(mass), float(center_mass))


@dataclass
class StarState:
    """Displacements and velocities of the center and of every ray site."""

    u: float
    u_dot: float
    phi: np.ndarray
    phi_dot: np.ndarray

    @classmethod
    def zeros(cls, params: LatticeParams) -> "StarState":
        shape = (params.n_rays, params.ray_len)
        return cls(0.0, 0.0, np.zeros(shape), np.zeros(shape))

    @classmethod
    def random(cls, params: LatticeParams, rng: np.random.Generator, support: int | None = None) -> "StarState":
        """Standard-normal entries on the center and sites ``1..support`` of each ray."""
        state = cls.zeros(params)
        s = params.ray_len if support is None else min(support, params.ray_len)
        state.u = float(rng.standard_normal())
        state.u_dot = float(rng.standard_normal())
        state.phi[:, :s] = rng.standard_normal((params.n_rays, s))
        state.phi_dot[:, :s] = rng.standard_normal((params.n_rays, s))
        return state

    def copy(self) -> "StarState":
        return StarState(self.u, self.u_dot, self.phi.copy(), self.phi_dot.copy())

    def combine(self, alpha: float, other: "StarState", beta: float) -> "StarState":
        """Return ``alpha * self + beta * other``."""
        return StarState(
            alpha * self.u + beta * other.u,
            alpha * self.u_dot + beta * other.u_dot,
            alpha * self.phi + beta * other.phi,
            alpha * self.phi_dot + beta * other.phi_dot,
        )

    def displacement_vector(self) -> np.ndarray:
        return np.concatenate(([self.u], self.phi.ravel()))

    def velocity_vector(self) -> np.ndarray:
        return np.concatenate(([self.u_dot], self.phi_dot.ravel()))

    @classmethod
    def from_vectors(cls, x: np.ndarray, v: np.ndarray, params: LatticeParams) -> "StarState":
        shape = (params.n_rays, params.ray_len)
        return cls(float(x[0]), float(v[0]), x[1:].reshape(shape).copy(), v[1:].reshape(shape).copy())

    def max_abs_diff(self, other: "StarState") -> float:
        return max(
            abs(self.u - other.u),
            abs(self.u_dot - other.u_dot),
            float(np.max(np.abs(self.phi - other.phi))),
            float(np.max(np.abs(self.phi_dot - other.phi_dot))),
        )


@dataclass(frozen=True)
class Accel:
    a_u: float
    a_phi: np.ndarray


def check_state(state: StarState, params: LatticeParams) -> None:
    shape = (params.n_rays, params.ray_len)
    if state.phi.shape != shape or state.phi_dot.shape != shape:
        raise ValueError(f"state arrays have shape {state.phi.shape}/{state.phi_dot.shape}, expected {shape}")
    if not (math.isfinite(state.u) and math.isfinite(state.u_dot)
            and np.all(np.isfinite(state.phi)) and np.all(np.isfinite(state.phi_dot))):
        raise ValueError("state contains non-finite entries")


def dispersion(k, params: LatticeParams):
    """Lattice frequency ``omega(k)``; accepts scalars or arrays."""
    d = params.delta
    return np.sqrt(4.0 / d**2 * np.sin(0.5 * k * d) ** 2 + params.mass**2)


def group_velocity(k, params: LatticeParams):
    """``d omega / dk = sin(k delta) / (delta * omega)``."""
    d = params.delta
    return np.sin(k * d) / (d * dispersion(k, params))


def acceleration(state: StarState, params: LatticeParams) -> Accel:
    check_state(state, params)
    a_phi = np.empty_like(state.phi, dtype=float)
    phi = np.ascontiguousarray(state.phi, dtype=float)
    a_u = _kernels.accel_kernel(
        float(state.u), phi, 1.0 / params.delta**2, params.mass**2, params.center_mass, a_phi
    )
    return Accel(float(a_u), a_phi)


def energy(state: StarState, params: LatticeParams) -> float:
    check_state(state, params)
    inv_d2 = 1.0 / params.delta**2
    m2 = params.mass**2
    phi, phi_dot = state.phi, state.phi_dot
    bonds = np.diff(phi, axis=1, append=0.0)  # last bond reaches the zero ghost site
    chain = 0.5 * (np.sum(phi_dot**2) + inv_d2 * np.sum(bonds**2) + m2 * np.sum(phi**2))
    junction = 0.5 * inv_d2 * np.sum((state.u - phi[:, 0]) ** 2)
    center = 0.5 * (params.center_mass * state.u_dot**2 + m2 * state.u**2)
    return float(chain + junction + center)


def stiffness_matrix(params: LatticeParams) -> np.ndarray:
    """Dense potential matrix ``K`` with ``V = x^T K x / 2``, ``x = (u, phi_1^(1), ..)``."""
    n_rays, ray_len = params.n_rays, params.ray_len
    inv_d2 = 1.0 / params.delta**2
    m2 = params.mass**2
    K = np.zeros((params.size, params.size))
    K[0, 0] = n_rays * inv_d2 + m2
    for j in range(n_rays):
        base = 1 + j * ray_len
        idx = np.arange(base, base + ray_len)
        K[idx, idx] = 2.0 * inv_d2 + m2
        K[idx[:-1], idx[1:]] = -inv_d2
        K[idx[1:], idx[:-1]] = -inv_d2
        K[0, base] = K[base, 0] = -inv_d2
    return K


def mass_diagonal(params: LatticeParams) -> np.ndarray:
    d = np.ones(params.size)
    d[0] = params.center_mass
    return d


def build_quadratic_form(params: LatticeParams) -> np.ndarray:
    """Mass-weighted stiffness ``D^{-1/2} K D^{-1/2}``; its eigenvalues are the squared normal frequencies."""
    s = 1.0 / np.sqrt(mass_diagonal(params))
    return s[:, None] * stiffness_matrix(params) * s[None, :]


def omega_max_bound(params: LatticeParams) -> float:
    """Upper bound on the largest normal frequency (Gershgorin on ``D^{-1} K``).

    Equals the band top unless a light center, ``M < N / 2`` roughly, can
    oscillate faster than any chain mode.
    """
    inv_d2 = 1.0 / params.delta**2
    m2 = params.mass**2
    center_row = (2.0 * params.n_rays * inv_d2 + m2) / params.center_mass
    return math.sqrt(max(4.0 * inv_d2 + m2, center_row))
