"""Semiclassical cavity dynamics with the spin slaved to the field."""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from openrabi.meanfield import (
    SRP_MINUS, TRIVIAL_DOWN, TRIVIAL_UP, MeanFieldState, superradiant_states,
)
from openrabi.params import ModelParams

RATE_TOL = 1e-8
TRIVIAL_TOL = 1e-6


@dataclass
class Trajectory:
    times: np.ndarray
    alpha: np.ndarray
    s_x: np.ndarray
    s_y: np.ndarray
    s_z: np.ndarray
    branch: int
    converged_to: MeanFieldState | None
    steady_time: float | None

    @property
    def converged(self) -> bool:
        return self.converged_to is not None

    def spin_norm_error(self) -> float:
        return float(np.max(np.abs(self.s_x**2 + self.s_y**2 + self.s_z**2 - 1)))


def spin_from_alpha(p: ModelParams, alpha, branch: int):
    """(s_x, s_y, s_z) of the spin slaved to the field on the given branch."""
    g, tau = p.g_tilde, p.tau
    alpha = np.asarray(alpha, complex)
    b = alpha + tau * np.conj(alpha)
    s_z = branch / np.sqrt(1 + 4 * g * g * np.abs(b) ** 2)
    s_minus = g * b * s_z
    return 2 * s_minus.real, -2 * s_minus.imag, s_z


def rhs(p: ModelParams, alpha: complex, branch: int) -> complex:
    g, tau, k, gm = p.g_tilde, p.tau, p.kappa, p.gamma_tilde
    u = g * g
    ac = np.conj(alpha)
    s_z = branch / math.sqrt(1 + 4 * u * abs(alpha + tau * ac) ** 2)
    return complex(
        -1j * (1 - 1j * gm) * alpha
        - 1j * u * s_z * ((1 + tau * tau) * alpha + 2 * tau * ac)
        - 2j * k * u * (alpha + ac)
    )


def _identify(p: ModelParams, alpha: complex, branch: int) -> MeanFieldState:
    s_x, s_y, s_z = (float(v) for v in spin_from_alpha(p, alpha, branch))
    if abs(alpha) < TRIVIAL_TOL:
        return MeanFieldState(0.0, 0.0, 0.0, 0.0, float(branch), TRIVIAL_DOWN if branch < 0 else TRIVIAL_UP)
    tag = SRP_MINUS
    if branch < 0:
        _, cands = superradiant_states(p)
        if cands:
            tag = min(cands, key=lambda c: abs(c.alpha - alpha)).branch
    return MeanFieldState(alpha.real, alpha.imag, s_x, s_y, s_z, tag)


def integrate(p: ModelParams, alpha0: complex, branch: int = -1, t_max: float = 2000.0,
              tol: float = 1e-10, dt_sample: float = 0.05, chunk: float = 50.0) -> Trajectory:
    """Integrate until the flow has been stationary for 10/gamma_tilde or t_max is reached.

    Output samples are spaced by ``dt_sample``. Convergence means
    |d alpha/dt| < 1e-8 (units of omega) at every sample across the dwell.
    """
    if branch not in (1, -1):
        raise ValueError("branch must be +1 or -1")
    if not t_max > 0 or not tol > 0:
        raise ValueError("t_max and tol must be positive")
    dwell = 10.0 / p.gamma_tilde if p.gamma_tilde > 0 else 10.0

    def f(_t, z):
        d = rhs(p, complex(z[0], z[1]), branch)
        return [d.real, d.imag]

    ts = [np.array([0.0])]
    zs = [np.array([[alpha0.real], [alpha0.imag]])]
    rates = [np.array([abs(rhs(p, complex(alpha0), branch))])]
    t0, z0 = 0.0, [alpha0.real, alpha0.imag]
    quiet_since = 0.0 if rates[0][0] < RATE_TOL else None
    steady = None
    while t0 < t_max and steady is None:
        t1 = min(t0 + chunk, t_max)
        n = max(int(round((t1 - t0) / dt_sample)), 1)
        t_eval = np.linspace(t0, t1, n + 1)[1:]
        # atol well below tol: near alpha = 0 the fast rotation turns atol-sized
        # noise into a spurious rate floor
        sol = solve_ivp(f, (t0, t1), z0, method="RK45", t_eval=t_eval, rtol=tol, atol=tol * 1e-4)
        if not sol.success:
            break
        a = sol.y[0] + 1j * sol.y[1]
        r = np.array([abs(rhs(p, v, branch)) for v in a])
        for t, rv in zip(sol.t, r):
            if rv < RATE_TOL:
                if quiet_since is None:
                    quiet_since = t
                elif t - quiet_since >= dwell:
                    steady = quiet_since
                    break
            else:
                quiet_since = None
        ts.append(sol.t)
        zs.append(sol.y)
        rates.append(r)
        t0, z0 = t1, sol.y[:, -1]
    times = np.concatenate(ts)
    z = np.concatenate(zs, axis=1)
    alpha = z[0] + 1j * z[1]
    s_x, s_y, s_z = spin_from_alpha(p, alpha, branch)
    conv = _identify(p, complex(alpha[-1]), branch) if steady is not None else None
    return Trajectory(times, alpha, s_x, s_y, s_z, branch, conv, steady)


def classify_endpoint(traj: Trajectory) -> str:
    if traj.converged_to is None:
        return "NoConvergence"
    return "NP" if traj.converged_to.is_trivial else "SRP"


def _basin_cell(args):
    p, a0, t_max, tol = args
    return classify_endpoint(integrate(p, a0, -1, t_max=t_max, tol=tol))


def worker_count(workers: int | None = None) -> int:
    if workers is not None:
        return max(int(workers), 1)
    env = os.environ.get("OPENRABI_WORKERS")
    if env:
        return max(int(env), 1)
    return os.cpu_count() or 1


def basin_map(p: ModelParams, re_range: tuple[float, float], im_range: tuple[float, float],
              resolution: int | tuple[int, int], workers: int | None = None,
              t_max: float = 2000.0, tol: float = 1e-10):
    """Labels NP / SRP / NoConvergence on a grid of initial alpha (branch -1).

    Returns (re_values, im_values, labels) with labels[i, j] for
    alpha0 = re_values[i] + 1j*im_values[j].
    """
    nr, ni = (resolution, resolution) if np.isscalar(resolution) else resolution
    re_v = np.linspace(re_range[0], re_range[1], nr)
    im_v = np.linspace(im_range[0], im_range[1], ni)
    jobs = [(p, complex(x, y), t_max, tol) for x in re_v for y in im_v]
    nw = worker_count(workers)
    if nw == 1:
        out = [_basin_cell(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=nw) as ex:
            out = list(ex.map(_basin_cell, jobs, chunksize=max(len(jobs) // (4 * nw), 1)))
    return re_v, im_v, np.array(out, dtype=object).reshape(nr, ni)
