"""Linear stability of mean-field states with the spin adiabatically eliminated."""
from __future__ import annotations

import cmath
from dataclasses import dataclass

import numpy as np

from openrabi.meanfield import MeanFieldState
from openrabi.params import ModelParams

MARGIN = 1e-10


@dataclass(frozen=True)
class StabilityMatrix:
    m11: float
    m12: float
    m21: float
    m22: float
    sigma: float
    q_value: float

    def array(self) -> np.ndarray:
        return np.array([[self.m11, self.m12], [self.m21, self.m22]])

    @property
    def trace(self) -> float:
        return self.m11 + self.m22

    @property
    def det(self) -> float:
        return self.m11 * self.m22 - self.m12 * self.m21


@dataclass(frozen=True)
class StabilityVerdict:
    eigenvalues: tuple[complex, complex]
    stable: bool
    label: str  # "stable", "unstable" or "critical"
    closed_form_eigenvalues: tuple[complex, complex]

    @property
    def max_real(self) -> float:
        return max(e.real for e in self.eigenvalues)


def _sigma(u, tau, x, y):
    return 1 + 4 * u * ((1 + tau) ** 2 * x * x + (1 - tau) ** 2 * y * y)


def spin_eliminate(p: ModelParams, state: MeanFieldState) -> np.ndarray:
    """2x2 block E with (ds_x, ds_y) = E (dx, dy) once the spin is slaved to the field."""
    g, tau = p.g_tilde, p.tau
    u = g * g
    x, y, sz = state.x, state.y, state.s_z
    sig = _sigma(u, tau, x, y)
    a = 2 * g * sz * (1 + tau) / sig
    b = 2 * g * sz * (1 - tau) / sig
    return np.array([
        [a * (4 * u * (1 - tau) ** 2 * y * y + 1), -a * 4 * u * (1 - tau) ** 2 * x * y],
        [b * 4 * u * (1 + tau) ** 2 * x * y, -b * (4 * u * (1 + tau) ** 2 * x * x + 1)],
    ])


def q_closed(p: ModelParams, state: MeanFieldState) -> float:
    g, tau, k, gm = p.g_tilde, p.tau, p.kappa, p.gamma_tilde
    u = g * g
    x, y, sz = state.x, state.y, state.s_z
    sig = _sigma(u, tau, x, y)
    return (
        (1 + gm * gm + 4 * k * u) * sig
        + 2 * (1 + tau * tau) * sz * u
        + (1 - tau * tau) ** 2 * (sz * sz + 4 * (x * x + y * y) * sz) * u * u
        + 4 * k * sz * (1 - tau) ** 2 * u * u * (4 * u * (1 + tau) ** 2 * x * x + 1)
    )


def build_M(p: ModelParams, state: MeanFieldState) -> StabilityMatrix:
    g, tau, k, gm = p.g_tilde, p.tau, p.kappa, p.gamma_tilde
    u = g * g
    x, y, sz = state.x, state.y, state.s_z
    sig = _sigma(u, tau, x, y)
    cross = 4 * sz * x * y * (1 - tau * tau) ** 2 * u * u / sig
    m12 = 1 + sz * (1 - tau) ** 2 * (4 * x * x * (1 + tau) ** 2 * u + 1) * u / sig
    m21 = -(1 + 4 * k * u) - sz * (1 + tau) ** 2 * (4 * y * y * (1 - tau) ** 2 * u + 1) * u / sig
    return StabilityMatrix(-gm - cross, m12, m21, -gm + cross, sig, q_closed(p, state))


def q_np(p: ModelParams) -> float:
    tau, k, gm = p.tau, p.kappa, p.gamma_tilde
    u = p.g_tilde**2
    return 1 + gm * gm + 2 * (2 * k - tau * tau - 1) * u + (1 - tau) ** 2 * ((1 + tau) ** 2 - 4 * k) * u * u


def eigenvalues(m: StabilityMatrix) -> tuple[complex, complex]:
    # roots of lambda^2 - tr lambda + det, written to avoid cancellation
    tr, det = m.trace, m.det
    disc = cmath.sqrt(tr * tr / 4 - det)
    half = tr / 2
    big = half - disc if half.real <= 0 else half + disc
    if big == 0:
        return (0j, 0j)
    return (complex(big), complex(det / big))


def assess(p: ModelParams, state: MeanFieldState, margin: float = MARGIN) -> StabilityVerdict:
    """Stable iff both eigenvalues of M have real part below -margin (units of omega)."""
    m = build_M(p, state)
    ev = eigenvalues(m)
    ev = tuple(sorted(ev, key=lambda z: (z.real, z.imag)))
    gm = p.gamma_tilde
    # the lambda = -gamma +- sqrt(gamma - Q/Sigma) closed form, kept for diagnostics only
    r = cmath.sqrt(gm - m.q_value / m.sigma)
    closed = (-gm + r, -gm - r)
    mx = max(e.real for e in ev)
    if mx < -margin:
        label = "stable"
    elif mx > margin:
        label = "unstable"
    else:
        label = "critical"
    return StabilityVerdict(ev, label == "stable", label, closed)


def full_jacobian(p: ModelParams, state: MeanFieldState, ratio: float, h: float = 1e-7) -> np.ndarray:
    """Finite-difference Jacobian of the full (x, y, s_x, s_y) mean-field flow.

    Time is in units of 1/omega and ``ratio`` is Delta/omega; s_z is slaved to
    the spin length on the branch of ``state``.
    """
    g, tau, k, gm = p.g_tilde, p.tau, p.kappa, p.gamma_tilde
    u = g * g
    sgn = -1.0 if state.s_z < 0 else 1.0

    def flow(v):
        x, y, sx, sy = v
        sz = sgn * np.sqrt(max(1 - sx * sx - sy * sy, 0.0))
        al = x + 1j * y
        sm = 0.5 * (sx - 1j * sy)
        da = -1j * ((1 - 1j * gm) * al + g * (sm + tau * np.conj(sm)) + 2 * k * u * (al + np.conj(al)))
        dsm = -1j * ratio * (sm - g * (al + tau * np.conj(al)) * sz)
        return np.array([da.real, da.imag, 2 * dsm.real, -2 * dsm.imag])

    v0 = np.array([state.x, state.y, state.s_x, state.s_y])
    J = np.zeros((4, 4))
    for i in range(4):
        e = np.zeros(4)
        e[i] = h
        J[:, i] = (flow(v0 + e) - flow(v0 - e)) / (2 * h)
    return J
