"""Recover lattice displacements from sampled normal-mode amplitudes (M = 1).

Pipeline: sample ``xi_j(k)`` on a midpoint grid, integrate to get the
inter-ray differences ``dQ[j, n] = phi_n^(j+1) - phi_n^(j)`` and the half-integer
cosine coefficients ``eta_n = Q_n + (N - 1) Q_{n+1}`` of ``sum_j xi_j``, solve the
bidiagonal system for the ray sums ``Q_n`` (``Q_0 = N u``), then split the sums
back into rays.

Conditioning: the map from ``Q`` to ``eta`` has a near-null vector
``Q_n ~ (1 - N)^{-n}`` (the junction's bound state), so recovering ``Q``
amplifies sample errors by about ``(N - 1)^L``. Grids can therefore be built in
multiprecision (gmpy2 ``mpfr`` in numpy object arrays); ``precision="auto"``
picks enough bits for the amplification at hand.
"""

from __future__ import annotations

import contextlib
from dataclasses import dataclass
from functools import lru_cache
import math

import gmpy2
import numpy as np

from .lattice import LatticeParams, StarState, check_state

_mp_cos = np.frompyfunc(gmpy2.cos, 1, 1)
_mp_sin = np.frompyfunc(gmpy2.sin, 1, 1)
_mp_float = np.frompyfunc(float, 1, 1)
_mp_from = np.frompyfunc(gmpy2.mpfr, 1, 1)


def auto_precision(n_rays: int, ray_len: int) -> int | None:
    """Bits needed to keep the ``(N - 1)^L`` amplification below ~1e-19; ``None`` means float64."""
    growth = ray_len * math.log2(max(n_rays - 1, 1))
    if growth <= 12:
        return None
    return 53 + math.ceil(growth) + 64


def _resolve_precision(precision, n_rays, ray_len):
    if precision == "auto":
        return auto_precision(n_rays, ray_len)
    if precision in (None, "double", 53):
        return None
    if isinstance(precision, int) and precision > 53:
        return precision
    raise ValueError(f"precision must be 'auto', 'double' or an int > 53, got {precision!r}")


def _context(bits):
    return gmpy2.context(precision=bits) if bits else contextlib.nullcontext()


def _cos(x):
    return _mp_cos(x) if x.dtype == object else np.cos(x)


def _sin(x):
    return _mp_sin(x) if x.dtype == object else np.sin(x)


def _lift(x, bits):
    x = np.asarray(x, dtype=float)
    return _mp_from(x) if bits else x


@lru_cache(maxsize=64)
def _tables(size: int, ray_len: int, bits: int | None):
    """Grid nodes and the trigonometric matrices every stage projects onto."""
    with _context(bits):
        if bits:
            pi = gmpy2.const_pi()
            nodes = np.array([(2 * i + 1) * pi / (2 * size) for i in range(size)], dtype=object)
            half = gmpy2.mpfr(1) / 2
        else:
            nodes = (np.arange(size) + 0.5) * math.pi / size
            half = 0.5
        n = np.arange(1, ray_len + 1)
        h = np.arange(ray_len + 1) + half
        tables = dict(
            nodes=nodes,
            cos_n=_cos(np.outer(nodes, n)),          # (P, L)
            sin_n=_sin(np.outer(nodes, n)),          # (P, L)
            cos_half_int=_cos(np.outer(nodes, h)),   # (P, L+1) cos k(n + 1/2), n = 0..L
            cos_half=_cos(nodes / 2),
            sin_half=_sin(nodes / 2),
        )
    for v in tables.values():
        v.setflags(write=False)
    return tables


def _to_float(x):
    x = np.asarray(x)
    return _mp_float(x).astype(float) if x.dtype == object else x.astype(float)


@dataclass(frozen=True)
class ModeGrid:
    """``xi_j`` and ``xi_j'`` sampled at ``k_p = (p + 1/2) pi / P``, ``p = 0..P-1``.

    The integrands are even in ``k``, so integrals over ``(-pi, pi)`` are twice
    the half-interval midpoint sums. ``precision`` is ``None`` for float64 or
    the mpfr bit count of the object arrays.
    """

    nodes: np.ndarray
    xi: np.ndarray        # shape (P, N)
    xi_dot: np.ndarray    # shape (P, N)
    n_rays: int
    ray_len: int
    precision: int | None = None

    @property
    def size(self) -> int:
        return len(self.nodes)

    def check(self):
        if self.size < self.ray_len + 2:
            raise ValueError(f"grid too coarse: P={self.size} < L+2={self.ray_len + 2}")


def mode_grid(state: StarState, params: LatticeParams, size: int, precision="auto") -> ModeGrid:
    """Sample the ``M = 1`` mode amplitudes of ``state`` on a ``size``-node grid."""
    _require_m1(params)
    check_state(state, params)
    N, L = params.n_rays, params.ray_len
    bits = _resolve_precision(precision, N, L)
    tab = _tables(size, L, bits)
    with _context(bits):
        def sample(u, phi):
            phi = _lift(phi, bits)
            xi0 = tab["cos_n"] @ phi.sum(axis=0) + _lift(u, bits)                 # (P,)
            phi_s = tab["sin_n"] @ phi.T                                         # (P, N)
            return tab["cos_half"][:, None] * xi0[:, None] + (N - 2) * tab["sin_half"][:, None] * phi_s

        xi = sample(state.u, state.phi)
        xi_dot = sample(state.u_dot, state.phi_dot)
    nodes = tab["nodes"]
    return ModeGrid(nodes, xi, xi_dot, N, L, bits)


def _require_m1(params: LatticeParams):
    if params.center_mass != 1.0:
        raise ValueError("inversion is only available for center_mass = 1")
    if params.delta != 1.0:
        raise ValueError("inversion uses delta = 1; call params.unit_spacing() first")


def _require_n3(n_rays):
    if n_rays < 3:
        raise ValueError("n_rays = 2 is unsupported: mode differences vanish identically")


def _samples(grid, velocity):
    return grid.xi_dot if velocity else grid.xi


def delta_q(grid: ModeGrid, n_rays: int, velocity: bool = False) -> np.ndarray:
    """Cyclic inter-ray differences ``dq[j, n-1] = phi_n^(j+1) - phi_n^(j)``, shape (N, L).

    The mode difference carries a factor ``(N - 2) sin(k/2)``; both are
    divided out before projecting on ``sin(k n)``.
    """
    _require_n3(n_rays)
    grid.check()
    xi = _samples(grid, velocity)
    P, L = grid.size, grid.ray_len
    with _context(grid.precision):
        diff = np.roll(xi, -1, axis=1) - xi                         # (P, N)
        tab = _tables(P, L, grid.precision)
        weight = 1 / tab["sin_half"]
        proj = tab["sin_n"]
        return 2 * ((diff * weight[:, None]).T @ proj) / ((n_rays - 2) * P)


def eta_coeffs(grid: ModeGrid, velocity: bool = False) -> np.ndarray:
    """Coefficients of ``sum_j xi_j(k) = sum_n eta_n cos(k (n + 1/2))``, ``n = 0..L``."""
    grid.check()
    total = _samples(grid, velocity).sum(axis=1)
    with _context(grid.precision):
        proj = _tables(grid.size, grid.ray_len, grid.precision)["cos_half_int"]
        return 2 * (total @ proj) / grid.size


def q_from_eta_triangular(eta, n_rays: int, ray_len: int) -> np.ndarray:
    """Back-substitute ``Q_L = eta_L``, ``Q_n = eta_n - (N - 1) Q_{n+1}``."""
    eta = np.asarray(eta)
    if eta.shape != (ray_len + 1,):
        raise ValueError(f"eta must have length L+1={ray_len + 1}")
    q = eta.copy()
    for n in range(ray_len - 1, -1, -1):
        q[n] = eta[n] - (n_rays - 1) * q[n + 1]
    return q


@dataclass(frozen=True)
class KernelReport:
    n_rays: int
    ray_len: int
    grid_size: int
    q_kernel: np.ndarray
    q_triangular: np.ndarray

    @property
    def max_abs_dev(self) -> float:
        return float(np.max(np.abs(self.q_kernel - self.q_triangular)))

    def lines(self) -> list[str]:
        out = [f"kernel vs triangular  N={self.n_rays} L={self.ray_len} P={self.grid_size}  "
               f"max|dQ|={self.max_abs_dev:.3e}"]
        for n, (a, b) in enumerate(zip(self.q_kernel, self.q_triangular)):
            out.append(f"  n={n:3d}  kernel={a: .17g}  triangular={b: .17g}  diff={a - b: .3e}")
        return out


def q_from_eta_kernel(grid: ModeGrid, n_rays: int, velocity: bool = False) -> KernelReport:
    """Ray sums from the closed-form integral kernel, reported against the triangular solve.

    The kernel is ``[cos k(n+1/2) + (N-1) cos k(n-1/2)] / (N^2 - 4 (N-1) sin^2(k/2))``.
    It is evaluated as given; no agreement with the triangular solve is implied.
    """
    _require_n3(n_rays)
    grid.check()
    total = _samples(grid, velocity).sum(axis=1)
    L = grid.ray_len
    with _context(grid.precision):
        half = gmpy2.mpfr(1) / 2 if grid.precision else 0.5
        n = np.arange(L + 1)
        k = grid.nodes
        num = _cos(np.outer(k, n + half)) + (n_rays - 1) * _cos(np.outer(k, n - half))
        den = n_rays**2 - 4 * (n_rays - 1) * _sin(k / 2) ** 2
        q_kernel = 2 * ((total / den) @ num) / grid.size
        q_tri = q_from_eta_triangular(eta_coeffs(grid, velocity), n_rays, L)
    return KernelReport(n_rays, L, grid.size, _to_float(q_kernel), _to_float(q_tri))


def reconstruct_state(q, dq, n_rays: int, ray_len: int):
    """Split ray sums ``q`` (length L+1) and cyclic differences ``dq`` (N, L) into ``(u, phi)``.

    ``phi_n^(j) = (Q_n - sum_m (N - 1 - m) dQ_{j+m, n}) / N`` with ray indices mod N.
    """
    q = np.asarray(q)
    dq = np.asarray(dq)
    if q.shape != (ray_len + 1,) or dq.shape != (n_rays, ray_len):
        raise ValueError("q must have length L+1 and dq shape (N, L)")
    scale = max(1.0, float(np.max(np.abs(_to_float(dq)))))
    if np.max(np.abs(_to_float(dq.sum(axis=0)))) > 1e-10 * scale:
        raise ValueError("inconsistent differences: sum over rays of dq is not zero")
    acc = np.zeros_like(dq)
    for m in range(n_rays):
        acc = acc + (n_rays - 1 - m) * np.roll(dq, -m, axis=0)
    phi = (q[None, 1:] - acc) / n_rays
    return q[0] / n_rays, phi


def reconstruct_from_grid(grid: ModeGrid) -> StarState:
    N, L = grid.n_rays, grid.ray_len
    _require_n3(N)
    with _context(grid.precision):
        parts = []
        for velocity in (False, True):
            q = q_from_eta_triangular(eta_coeffs(grid, velocity), N, L)
            parts.append(reconstruct_state(q, delta_q(grid, N, velocity), N, L))
    (u, phi), (u_dot, phi_dot) = parts
    return StarState(float(u), float(u_dot), _to_float(phi), _to_float(phi_dot))


def roundtrip(state: StarState, params: LatticeParams, grid_size: int, precision="auto") -> float:
    """Max abs error of ``(u, phi, u', phi')`` after transform and reconstruction."""
    _require_m1(params)
    _require_n3(params.n_rays)
    grid = mode_grid(state, params, grid_size, precision)
    return reconstruct_from_grid(grid).max_abs_diff(state)
