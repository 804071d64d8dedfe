"""Hot loops for the star lattice: forces and velocity-Verlet stepping.

Two interchangeable implementations live here. The numba versions are used
when numba imports cleanly and ``STARWAVE_NO_NUMBA`` is unset (or ``0``);
otherwise the vectorised numpy versions are bound to the public names.
Both are always importable so tests and the benchmark can compare them.
"""

import os

import numpy as np

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False


def _numba_requested():
    flag = os.environ.get("STARWAVE_NO_NUMBA", "").strip().lower()
    return flag in ("", "0", "false", "no")


USE_NUMBA = HAVE_NUMBA and _numba_requested()
BACKEND = "numba" if USE_NUMBA else "numpy"


# ---------------------------------------------------------------- numpy path

def accel_numpy(u, phi, inv_d2, m2, center_mass, a_phi):
    """Fill ``a_phi`` in place and return the center acceleration."""
    a_phi[:, 0] = phi[:, 1] + u
    a_phi[:, 1:-1] = phi[:, 2:] + phi[:, :-2]
    a_phi[:, -1] = phi[:, -2]  # Dirichlet ghost site L+1 is zero
    a_phi -= 2.0 * phi
    a_phi *= inv_d2
    a_phi -= m2 * phi
    n_rays = phi.shape[0]
    return (inv_d2 * (phi[:, 0].sum() - n_rays * u) - m2 * u) / center_mass


def verlet_numpy(u, u_dot, phi, phi_dot, dt, n_steps, inv_d2, m2, center_mass):
    """Advance ``n_steps`` velocity-Verlet steps; arrays are updated in place.

    Returns the final ``(u, u_dot)`` since scalars cannot be mutated.
    """
    a_phi = np.empty_like(phi)
    half = 0.5 * dt
    a_u = accel_numpy(u, phi, inv_d2, m2, center_mass, a_phi)
    for _ in range(n_steps):
        u_dot += half * a_u
        phi_dot += half * a_phi
        u += dt * u_dot
        phi += dt * phi_dot
        a_u = accel_numpy(u, phi, inv_d2, m2, center_mass, a_phi)
        u_dot += half * a_u
        phi_dot += half * a_phi
    return u, u_dot


# ---------------------------------------------------------------- numba path

if HAVE_NUMBA:

    @numba.njit(cache=True, fastmath=False)
    def accel_numba(u, phi, inv_d2, m2, center_mass, a_phi):
        n_rays, ray_len = phi.shape
        s = 0.0
        for j in range(n_rays):
            s += phi[j, 0]
            for n in range(ray_len):
                left = u if n == 0 else phi[j, n - 1]
                right = phi[j, n + 1] if n + 1 < ray_len else 0.0
                a_phi[j, n] = (left + right - 2.0 * phi[j, n]) * inv_d2 - m2 * phi[j, n]
        return (inv_d2 * (s - n_rays * u) - m2 * u) / center_mass

    @numba.njit(cache=True, fastmath=False)
    def verlet_numba(u, u_dot, phi, phi_dot, dt, n_steps, inv_d2, m2, center_mass):
        n_rays, ray_len = phi.shape
        a_phi = np.empty_like(phi)
        half = 0.5 * dt
        a_u = accel_numba(u, phi, inv_d2, m2, center_mass, a_phi)
        for _ in range(n_steps):
            u_dot += half * a_u
            u += dt * u_dot
            for j in range(n_rays):
                for n in range(ray_len):
                    phi_dot[j, n] += half * a_phi[j, n]
                    phi[j, n] += dt * phi_dot[j, n]
            a_u = accel_numba(u, phi, inv_d2, m2, center_mass, a_phi)
            u_dot += half * a_u
            for j in range(n_rays):
                for n in range(ray_len):
                    phi_dot[j, n] += half * a_phi[j, n]
        return u, u_dot

else:  # pragma: no cover
    accel_numba = None
    verlet_numba = None


if USE_NUMBA:
    accel_kernel = accel_numba
    verlet_kernel = verlet_numba
else:
    accel_kernel = accel_numpy
    verlet_kernel = verlet_numpy
