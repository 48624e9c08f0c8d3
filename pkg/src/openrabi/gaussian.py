"""Quadratic effective theories for the normal and superradiant phases.

Rates and energies are in units of omega. Second moments refer to the
displaced, squeezed frame in which the effective Hamiltonian is
R a^dag a + P a^dag^2 + P* a^2 and the loss operator is a cosh r + a^dag sinh r.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.linalg import solve_continuous_lyapunov
from scipy.optimize import brentq

from openrabi.errors import InsufficientDecades, NotSuperradiant, SingularK
from openrabi.meanfield import MeanFieldState, superradiant_states, trivial_state
from openrabi.params import ModelParams
from openrabi.stability import assess, build_M

DENOM_FLOOR = 1e-12


@dataclass(frozen=True)
class GaussianCoeffs:
    R: float
    P: complex
    r: float
    phase: str  # "NP" or "SRP"
    g_r: complex | None = None
    g_cr: complex | None = None
    s_z: float | None = None

    @property
    def denominator_at(self):
        return lambda gamma: gamma * gamma + self.R**2 - 4 * abs(self.P) ** 2


@dataclass(frozen=True)
class SecondMoments:
    n: float
    a2: complex
    n_closed: float

    def symplectic_eigenvalue(self) -> float:
        return 0.5 * math.sqrt(max((2 * self.n + 1) ** 2 - 4 * abs(self.a2) ** 2, 0.0))


@dataclass(frozen=True)
class ExponentFit:
    beta: float
    nu: float
    beta_stderr: float
    nu_stderr: float
    window: tuple[float, float]
    n_points: int
    g_c: float
    side: int
    phase: str
    consistent: bool


def squeeze_parameter(p: ModelParams) -> float:
    return -0.25 * math.log1p(4 * p.kappa * p.g_tilde**2)


def np_coeffs(p: ModelParams) -> GaussianCoeffs:
    tau = p.tau
    u = p.g_tilde**2
    xi = math.sqrt(1 + 4 * p.kappa * u)
    R = 0.5 * (2 * xi - u * ((1 + tau) ** 2 / xi + xi * (1 - tau) ** 2))
    P = 0.25 * u * (xi * (1 - tau) ** 2 - (1 + tau) ** 2 / xi)
    return GaussianCoeffs(R, complex(P), squeeze_parameter(p), "NP")


def np_liouville_matrix(p: ModelParams) -> np.ndarray:
    """First-moment Liouville matrix for (<a>, <a^dag>) in the reference form with damping gamma cosh r, gamma sinh r."""
    c = np_coeffs(p)
    gm = p.gamma_tilde
    ch, sh = math.cosh(c.r), math.sinh(c.r)
    P = c.P
    return np.array([
        [-1j * c.R - gm * ch, -2j * P.conjugate() - gm * sh],
        [2j * P - gm * sh, 1j * c.R - gm * ch],
    ])


def first_moment_matrix(c: GaussianCoeffs, gamma: float) -> np.ndarray:
    """Generator of (<a>, <a^dag>) obtained directly from the effective master equation."""
    return np.array([
        [-1j * c.R - gamma, -2j * c.P],
        [2j * np.conj(c.P), 1j * c.R - gamma],
    ])


def _sorted_pair(ev):
    ev = sorted((complex(e) for e in ev), key=lambda z: (z.real, z.imag))
    return ev[0], ev[1]


def np_liouville_eigs(p: ModelParams) -> tuple[complex, complex]:
    """(l-, l+) of the reference NP Liouville matrix, ordered by real part."""
    return _sorted_pair(np.linalg.eigvals(np_liouville_matrix(p)))


def first_moment_eigs(c: GaussianCoeffs, gamma: float) -> tuple[complex, complex]:
    return _sorted_pair(np.linalg.eigvals(first_moment_matrix(c, gamma)))


def dressed_couplings(p: ModelParams, state: MeanFieldState) -> tuple[complex, complex]:
    """Spin-rotated couplings g_r, g_cr (before squeezing).

    The square of b uses alpha* + tau alpha, the combination that matches the
    sign convention of the mean-field spin equations.
    """
    g, tau, sz = p.g_tilde, p.tau, state.s_z
    u = g * g
    al = state.alpha
    b = al.conjugate() + tau * al
    chi = 1 / sz**2
    rc = math.sqrt(chi)
    g_r = -0.5 * g * (1 + 1 / rc - 4 * tau * u * b * b / (chi + rc))
    g_cr = -0.5 * g * (tau * (1 + 1 / rc) - 4 * u * b * b / (chi + rc))
    return g_r, g_cr


def linear_residual(p: ModelParams, state: MeanFieldState) -> complex:
    """Coefficient of a left in the spin-down projection of the displaced, rotated Hamiltonian."""
    g, tau, gm, k = p.g_tilde, p.tau, p.gamma_tilde, p.kappa
    u = g * g
    al = state.alpha
    eta_ = u * abs(state.s_z) * ((1 + tau * tau) * al + 2 * tau * al.conjugate())
    return (1 + 1j * gm) * al.conjugate() + 4 * k * u * al.real - eta_.conjugate()


def srp_coeffs(p: ModelParams, state: MeanFieldState, check: bool = True) -> GaussianCoeffs:
    sz = state.s_z
    if not -1.0 < sz < 0.0 or state.alpha == 0:
        raise NotSuperradiant(f"s_z={sz}, alpha={state.alpha}")
    if check:
        res = abs(linear_residual(p, state))
        if res > 1e-10 * (1 + abs(state.alpha)) * (1 + p.g_tilde**2 * (1 + abs(p.tau)) ** 2 + p.kappa * p.g_tilde**2):
            raise NotSuperradiant(f"state is not stationary (linear residual {res:.3g})")
    g_r, g_cr = dressed_couplings(p, state)
    r = squeeze_parameter(p)
    ch, sh = math.cosh(r), math.sinh(r)
    gp_r = g_r * ch + g_cr * sh
    gp_cr = g_r * sh + g_cr * ch
    xi = math.sqrt(1 + 4 * p.kappa * p.g_tilde**2)
    a = abs(sz)
    R = xi - a * (abs(gp_r) ** 2 + abs(gp_cr) ** 2)
    P = -a * gp_r * np.conj(gp_cr)
    return GaussianCoeffs(float(R), complex(P), r, "SRP", complex(gp_r), complex(gp_cr), sz)


def k_system(c: GaussianCoeffs, gamma: float) -> tuple[np.ndarray, np.ndarray]:
    """K and Y of d/dt (n, <a^2>, <a^dag^2>) = K s + Y."""
    P, R, r = c.P, c.R, c.r
    Pc = np.conj(P)
    K = np.array([
        [-2 * gamma, 2j * Pc, -2j * P],
        [-4j * P, -2j * R - 2 * gamma, 0],
        [4j * Pc, 0, 2j * R - 2 * gamma],
    ], dtype=complex)
    Y = np.array([
        2 * gamma * math.sinh(r) ** 2,
        -2j * P - gamma * math.sinh(2 * r),
        2j * Pc - gamma * math.sinh(2 * r),
    ], dtype=complex)
    return K, Y


def n_closed_form(c: GaussianCoeffs, gamma: float) -> float:
    P, R, r = c.P, c.R, c.r
    den = gamma * gamma + R * R - 4 * abs(P) ** 2
    pt = -(gamma * P.imag + R * P.real)
    num = (R * R + gamma * gamma) * math.sinh(r) ** 2 + pt * math.sinh(2 * r) + 2 * abs(P) ** 2
    return num / den


def second_moments(c: GaussianCoeffs, gamma: float) -> SecondMoments:
    den = gamma * gamma + c.R**2 - 4 * abs(c.P) ** 2
    if den <= 0:
        raise SingularK(f"gamma^2 + R^2 - 4|P|^2 = {den:.3g}")
    K, Y = k_system(c, gamma)
    if abs(np.linalg.det(K)) < 1e-14:
        raise SingularK("det K vanishes")
    s = -np.linalg.solve(K, Y)
    return SecondMoments(float(s[0].real), complex(s[1]), n_closed_form(c, gamma))


def frame_to_lab(m: SecondMoments, r: float) -> tuple[float, complex]:
    """Undo the squeezing: moments of a given moments of a cosh r + a^dag sinh r."""
    ch, sh = math.cosh(r), math.sinh(r)
    n, a2 = m.n, m.a2
    n_lab = ch * ch * n + sh * sh * (n + 1) + 2 * ch * sh * a2.real
    a2_lab = ch * ch * a2 + sh * sh * np.conj(a2) + ch * sh * (2 * n + 1)
    return float(n_lab), complex(a2_lab)


def lyapunov_moments(p: ModelParams, state: MeanFieldState) -> tuple[float, complex]:
    """Lab-frame fluctuation moments from the cavity stability matrix plus vacuum noise.

    Independent of the effective Hamiltonians; used to cross-check them.
    """
    M = build_M(p, state).array()
    S = solve_continuous_lyapunov(M, -(p.gamma_tilde / 2) * np.eye(2))
    n = S[0, 0] + S[1, 1] - 0.5
    a2 = S[0, 0] - S[1, 1] + 2j * S[0, 1]
    return float(n), complex(a2)


# ---------------------------------------------------------------------------
# exponents


def stable_srp_state(p: ModelParams) -> MeanFieldState:
    _, cands = superradiant_states(p)
    for s in cands:
        if assess(p, s).stable:
            return s
    raise NotSuperradiant(f"no stable superradiant state at tau={p.tau}, g={p.g_tilde}")


def fluctuation_point(p: ModelParams, phase: str) -> tuple[float, float, float]:
    """(n, Re l+, denominator) for the NP or the stable SRP at ``p``."""
    gm = p.gamma_tilde
    if phase == "NP":
        c = np_coeffs(p)
        lp = np_liouville_eigs(p)[1]
    else:
        c = srp_coeffs(p, stable_srp_state(p))
        lp = first_moment_eigs(c, gm)[1]
    den = gm * gm + c.R**2 - 4 * abs(c.P) ** 2
    try:
        n = second_moments(c, gm).n
    except SingularK:
        n = math.nan
    return n, lp.real, den


def _denominator(p: ModelParams, phase: str) -> float:
    c = np_coeffs(p) if phase == "NP" else srp_coeffs(p, stable_srp_state(p))
    return p.gamma_tilde**2 + c.R**2 - 4 * abs(c.P) ** 2


def _fixed_tau_path(base: ModelParams):
    return lambda g: base.with_(g_tilde=g)


def refine_gc(base: ModelParams, g_c: float, phase: str = "NP", width: float = 1e-6, path=None) -> float:
    """Polish g_c on the vanishing denominator when it changes sign near the estimate."""
    path = path or _fixed_tau_path(base)

    def f(g):
        try:
            return _denominator(path(g), phase)
        except NotSuperradiant:
            return math.nan
    lo, hi = g_c - width, g_c + width
    flo, fhi = f(lo), f(hi)
    if np.isfinite(flo) and np.isfinite(fhi) and flo * fhi < 0:
        return brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return g_c


def fit_exponents(base: ModelParams, g_c: float, side: int, phase: str = "NP",
                  deltas=None, refine: bool = True, path=None) -> ExponentFit:
    """Power-law fits of n and |Re l+| against |g - g_c|.

    The default path varies g_tilde at the tau, kappa, gamma of ``base``;
    ``path`` maps g_tilde to ModelParams for any other one-parameter cut.
    ``side`` is -1 to approach from below, +1 from above.
    """
    path = path or _fixed_tau_path(base)
    if deltas is None:
        deltas = np.geomspace(1e-6, 1e-2, 40)
    deltas = np.asarray(deltas, float)
    if refine:
        g_c = refine_gc(base, g_c, phase, path=path)
    ds, ns, ls = [], [], []
    for d in deltas:
        try:
            n, lp, den = fluctuation_point(path(g_c + side * d), phase)
        except (NotSuperradiant, SingularK):
            continue
        if den < DENOM_FLOOR or not np.isfinite(n) or n <= 0 or lp == 0:
            continue
        ds.append(d)
        ns.append(n)
        ls.append(abs(lp))
    if len(ds) < 20 or math.log10(max(ds) / min(ds)) < 2 - 1e-9:
        raise InsufficientDecades(f"{len(ds)} usable points")
    x = np.log(ds)
    fb = stats.linregress(x, np.log(ns))
    fn = stats.linregress(x, np.log(ls))
    ok = abs(fb.slope + fn.slope) < fb.stderr + fn.stderr + 0.05
    return ExponentFit(float(fb.slope), float(fn.slope), float(fb.stderr), float(fn.stderr),
                       (min(ds), max(ds)), len(ds), g_c, side, phase, bool(ok))


def np_state() -> MeanFieldState:
    return trivial_state(-1)
