"""Mean-field steady states, critical lines and phase classification.

All quantities are dimensionless: alpha = sqrt(omega/Delta) <a>, couplings are
g_tilde = g/sqrt(omega*Delta), rates in units of omega.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from openrabi.errors import DegenerateAnisotropy, EtaZero, NegativeRadicand, NoRootInWindow
from openrabi.params import ModelParams

TRIVIAL_DOWN = "trivial-down"
TRIVIAL_UP = "trivial-up"
SRP_PLUS = "superradiant-plus-root"
SRP_MINUS = "superradiant-minus-root"

_ROOT_XTOL = 1e-15


class PhaseLabel(str, enum.Enum):
    NP = "NP"
    SRP = "SRP"
    BISTABLE = "Bistable"


@dataclass(frozen=True)
class MeanFieldState:
    x: float
    y: float
    s_x: float
    s_y: float
    s_z: float
    branch: str

    @property
    def alpha(self) -> complex:
        return complex(self.x, self.y)

    @property
    def is_trivial(self) -> bool:
        return self.branch in (TRIVIAL_DOWN, TRIVIAL_UP)

    def spin_norm(self) -> float:
        return self.s_x**2 + self.s_y**2 + self.s_z**2


def trivial_state(spin: int = -1) -> MeanFieldState:
    return MeanFieldState(0.0, 0.0, 0.0, 0.0, float(spin), TRIVIAL_DOWN if spin < 0 else TRIVIAL_UP)


@dataclass(frozen=True)
class SzRoot:
    value: float
    root_sign: int  # -1: h - sqrt(h^2-q) (the physical root), +1: h + sqrt
    physical: bool


@dataclass
class CriticalSet:
    tau: float
    kappa: float
    gamma_tilde: float
    g_c_minus: float | None = None
    g_c_plus: float | None = None
    g_c_b: list[float] = field(default_factory=list)
    tau_c_b: list[float] = field(default_factory=list)
    tau_c_s: float | None = None
    tricritical: list[tuple[float, float]] = field(default_factory=list)
    asymptote: bool = False


# ---------------------------------------------------------------------------
# steady-state equations


def _hq(tau, u, kappa, gamma):
    h = 1.0 + tau * tau + 2.0 * kappa * u * (1.0 - tau) ** 2
    q = (1.0 - tau * tau) ** 2 * (1.0 + 4.0 * kappa * u + gamma * gamma)
    return h, q


def steady_residual(p: ModelParams, state: MeanFieldState) -> np.ndarray:
    """The three complex expressions of the steady-state equations (all zero at a solution)."""
    g, tau, k, gm = p.g_tilde, p.tau, p.kappa, p.gamma_tilde
    a = state.alpha
    s_minus = 0.5 * (state.s_x - 1j * state.s_y)
    s_plus = s_minus.conjugate()
    r1 = (1 - 1j * gm) * a + g * (s_minus + tau * s_plus) + 2 * k * g * g * (a + a.conjugate())
    r2 = g * (a + tau * a.conjugate()) * state.s_z - s_minus
    # stationarity of s_z: s_+ b - s_- b* with b = alpha + tau alpha*
    b = a + tau * a.conjugate()
    r3 = s_plus * b - s_minus * b.conjugate()
    return np.array([r1, r2, r3])


def coefficient_matrix(p: ModelParams, s_z: float) -> np.ndarray:
    """4x4 linear system M (x, y, s_x, s_y)^T = 0 at fixed s_z."""
    g, tau, k, gm = p.g_tilde, p.tau, p.kappa, p.gamma_tilde
    return np.array([
        [1 + 4 * k * g * g, gm, 0.5 * g * (1 + tau), 0.0],
        [gm, -1.0, 0.0, 0.5 * g * (1 - tau)],
        [-g * (1 + tau) * s_z, 0.0, 0.5, 0.0],
        [0.0, g * (1 - tau) * s_z, 0.0, 0.5],
    ])


def det_closed_form(p: ModelParams, s_z: float) -> float:
    g, tau, k, gm = p.g_tilde, p.tau, p.kappa, p.gamma_tilde
    u = g * g
    return -0.25 * (
        2 * (u * (1 + tau**2) + 2 * k * u * u * (1 - tau) ** 2) * s_z
        + (1 + 4 * k * u + gm * gm)
        + (1 - tau**2) ** 2 * u * u * s_z**2
    )


def _sz_roots(tau, u, kappa, gamma):
    """Both real roots of the determinant quadratic in s_z, cancellation free.

    Returns [] when h^2 < q or u == 0. At |tau| = 1 only the finite root is
    returned (the other one runs off to -infinity).
    """
    if u <= 0:
        return []
    h, q = _hq(tau, u, kappa, gamma)
    disc = h * h - q
    if disc < 0:
        return []
    sq = math.sqrt(disc)
    c0 = 1.0 + 4.0 * kappa * u + gamma * gamma
    near = -c0 / (u * (h + sq))
    out = [(near, -1)]
    a = (1.0 - tau * tau) ** 2 * u
    if a > 0:
        out.append((-(h + sq) / a, +1))
    return out


def solve_sz(p: ModelParams) -> list[SzRoot]:
    """Nontrivial s_z roots of det[M] = 0.

    Both roots are returned; ``physical`` flags those inside (-1, 0). An empty
    list means h^2 < q, i.e. no superradiant solution at this point.
    """
    if abs(abs(p.tau) - 1.0) == 0.0:
        raise DegenerateAnisotropy(f"tau={p.tau}")
    return [
        SzRoot(v, sgn, -1.0 < v < 0.0)
        for v, sgn in _sz_roots(p.tau, p.g_tilde**2, p.kappa, p.gamma_tilde)
    ]


def solve_xy(p: ModelParams, s_z: float, root_sign: int = -1) -> list[MeanFieldState]:
    """Superradiant states (+-(x, y)) for a given physical s_z.

    The cavity equation fixes the direction of (x, y), spin conservation its
    length; the two states are Z2 partners.
    """
    if not -1.0 <= s_z < 0.0:
        raise ValueError(f"s_z={s_z} outside [-1, 0)")
    g, tau, k, gm = p.g_tilde, p.tau, p.kappa, p.gamma_tilde
    u = g * g
    branch = SRP_MINUS if root_sign < 0 else SRP_PLUS
    rad = 1.0 - s_z * s_z
    if rad < 0:
        raise NegativeRadicand(f"1 - s_z^2 = {rad}")
    if rad == 0.0:
        return [MeanFieldState(0.0, 0.0, 0.0, 0.0, s_z, branch)]
    # [[a, gm], [-gm, b]] (x, y)^T = 0
    a = 1 + 4 * k * u + u * s_z * (1 + tau) ** 2
    b = 1 + u * s_z * (1 - tau) ** 2
    v1 = np.array([b, gm])
    v2 = np.array([gm, -a])
    v = v1 if np.hypot(*v1) >= np.hypot(*v2) else v2
    norm = (1 + tau) ** 2 * v[0] ** 2 + (1 - tau) ** 2 * v[1] ** 2
    if norm == 0:
        raise NegativeRadicand("degenerate direction for (x, y)")
    scale = math.sqrt(rad / (4 * u * s_z * s_z) / norm)
    x, y = v * scale
    states = []
    for sgn in (1.0, -1.0):
        xs, ys = sgn * x, sgn * y
        states.append(MeanFieldState(
            float(xs), float(ys),
            float(2 * g * (1 + tau) * xs * s_z),
            float(2 * g * (tau - 1) * ys * s_z),
            float(s_z), branch,
        ))
    return states


def xy_closed_form(p: ModelParams, s_z: float) -> tuple[float, float]:
    """|x|, |y| from the explicit closed forms (for cross-checking solve_xy)."""
    g, tau, k, gm = p.g_tilde, p.tau, p.kappa, p.gamma_tilde
    u = g * g
    pre = (1 - s_z**2) / (4 * u * s_z**2)
    dx = (1 + tau) ** 2 + gm**2 * (1 - tau) ** 2 / (1 + u * (1 - tau) ** 2 * s_z) ** 2
    dy = (1 - tau) ** 2 + gm**2 * (1 + tau) ** 2 / (1 + 4 * k * u + u * (1 + tau) ** 2 * s_z) ** 2
    return math.sqrt(pre / dx), math.sqrt(pre / dy)


def isotropic_state(p: ModelParams) -> tuple[float, complex] | None:
    """tau = 1 superradiant solution (s_z, alpha) or None when unphysical."""
    u = p.g_tilde**2
    if u == 0:
        return None
    sz = -(1 + p.gamma_tilde**2 + 4 * p.kappa * u) / (4 * u)
    if not -1 < sz < 0:
        return None
    x = math.sqrt((1 / sz**2 - 1) / (16 * u))
    return sz, complex(x, p.gamma_tilde * x)


# ---------------------------------------------------------------------------
# critical lines


def eta(tau: float, kappa: float) -> float:
    return (tau - 1) ** 2 * ((1 + tau) ** 2 - 4 * kappa)


def q_np(tau: float, kappa: float, gamma: float, g: float) -> float:
    """NP stability polynomial; the NP is stable where it is positive."""
    u = g * g
    return 1 + gamma**2 + 2 * (2 * kappa - tau**2 - 1) * u + eta(tau, kappa) * u * u


def critical_g_pm(tau: float, kappa: float, gamma: float) -> tuple[float | None, float | None]:
    """(g_c^-, g_c^+): zeros of the NP stability polynomial.

    A branch is None when its value is not real and positive. At tau = 1 the
    polynomial is linear and the single root is reported as g_c^-.
    """
    if tau == 1.0:
        lin = 4 * (1 - kappa)
        if lin <= 0:
            return None, None
        return math.sqrt((1 + gamma**2) / lin), None
    e = eta(tau, kappa)
    if e == 0.0 or abs(e) < 1e-14 * (1 + tau * tau) ** 2:
        raise EtaZero(f"eta=0 at tau={tau}, kappa={kappa}")
    disc = 4 * (kappa - tau) ** 2 - gamma**2 * e
    if disc < 0:
        return None, None
    b = tau * tau - 2 * kappa + 1
    sq = math.sqrt(disc)
    out = []
    for s in (-1, 1):
        num = b + s * sq
        # cancellation-free partner root via the product of roots (1+gamma^2)/eta
        if s * b < 0 and num != 0:
            other = b - s * sq
            val = (1 + gamma**2) / other if other != 0 else num / e
        else:
            val = num / e
        out.append(math.sqrt(val) if val > 0 else None)
    return out[0], out[1]


def critical_g_pm_kappa0(tau: float, gamma: float) -> tuple[float | None, float | None]:
    """kappa = 0 reduction of the critical couplings in closed form."""
    disc = 4 * tau**2 - gamma**2 * (1 - tau**2) ** 2
    if disc < 0 or tau * tau == 1:
        return None, None
    sq = math.sqrt(disc)
    out = []
    for s in (-1, 1):
        num = tau**2 + 1 + s * sq
        out.append(math.sqrt(num) / abs(1 - tau**2) if num > 0 else None)
    return out[0], out[1]


def critical_g_closed(tau: float, kappa: float) -> float:
    """gamma -> 0 limit of g_c^-."""
    if tau < kappa:
        return 1 / abs(1 - tau)
    return 1 / math.sqrt((tau + 1) ** 2 - 4 * kappa)


def critical_g_b(tau: float, kappa: float, gamma: float) -> list[float]:
    """Couplings where the s_z roots become real (h^2 = q), ascending. Empty for kappa = 0."""
    if kappa == 0 or tau == 1.0:
        return []
    den = 2 * kappa * (tau - 1) ** 2
    vals = []
    for s in (1, -1):
        v = (2 * tau + s * gamma * (1 - tau * tau)) / den
        if v > 0:
            vals.append(math.sqrt(v))
    return sorted(vals)


def tau_c_b(gamma: float) -> list[float]:
    """kappa = 0: the four g-independent anisotropies where h^2 = q."""
    if gamma <= 0:
        return []
    r = math.sqrt(gamma * gamma + 1)
    return sorted(s1 * (1 + s2 * r) / gamma for s1 in (1, -1) for s2 in (1, -1))


def g_c_first_order_closed(tau: float, kappa: float) -> float:
    """gamma -> 0 limit of g_c^b (first-order line of the closed model)."""
    return math.sqrt(tau / (kappa * (tau - 1) ** 2))


def discriminant(tau: float, kappa: float, gamma: float, g: float) -> float:
    h, q = _hq(tau, g * g, kappa, gamma)
    return h * h - q


def _merge_poly(tau, kappa, gamma):
    return 4 * (kappa - tau) ** 2 - gamma**2 * eta(tau, kappa)


def merge_residual(tau: float, kappa: float, gamma: float) -> float:
    rad = ((1 + tau) / 2) ** 2 - kappa
    return abs((kappa - tau) / (1 - tau)) - gamma * math.sqrt(max(rad, 0.0))


def _sign_change_roots(f, lo, hi, n=801):
    ts = np.linspace(lo, hi, n)
    vals = np.array([f(t) for t in ts])
    roots = []
    for i in range(n - 1):
        a, b = vals[i], vals[i + 1]
        if not (np.isfinite(a) and np.isfinite(b)):
            continue
        if a == 0.0:
            roots.append(float(ts[i]))
        elif a * b < 0:
            roots.append(brentq(f, ts[i], ts[i + 1], xtol=_ROOT_XTOL, rtol=4 * np.finfo(float).eps))
    if vals[-1] == 0.0:
        roots.append(float(ts[-1]))
    return roots


def merge_tau(kappa: float, gamma: float, window: tuple[float, float]) -> tuple[float, float]:
    """Anisotropy in ``window`` where g_c^+ and g_c^- merge; returns (tau_c_s, g_c0)."""
    lo, hi = window
    if lo < 1 < hi:
        raise ValueError("window must exclude tau = 1")
    roots = [t for t in _sign_change_roots(lambda t: _merge_poly(t, kappa, gamma), lo, hi)
             if ((1 + t) / 2) ** 2 - kappa >= 0 and t != 1]
    if not roots:
        raise NoRootInWindow(f"no merge point in {window}")
    t = roots[0]
    return t, merge_coupling(t, kappa)


def merge_coupling(tau: float, kappa: float) -> float:
    """Double root g_c0 of the NP polynomial at a merge point."""
    val = (tau * tau - 2 * kappa + 1) / eta(tau, kappa)
    return math.sqrt(val)


def _tricritical_u(tau, kappa):
    den = (1 - tau) ** 2 * ((1 + tau) ** 2 - 2 * kappa)
    return (1 + tau * tau) / den if den != 0 else math.nan


def _tricritical_f(tau, kappa, gamma):
    u = _tricritical_u(tau, kappa)
    if not u > 0:
        return math.nan
    return 1 + 4 * kappa * u + gamma**2 - u * u * (1 - tau * tau) ** 2


def tricritical_points(kappa: float, gamma: float, tau_window=(-6.0, 10.0), n=4001) -> list[tuple[float, float]]:
    """Points where the g_c^b curve meets a g_c^+- branch.

    There s_z = -1 is a double root of the determinant quadratic, so the two
    curves touch rather than cross; the point is located from that
    double-root condition.
    """
    f = lambda t: _tricritical_f(t, kappa, gamma)  # noqa: E731
    lo, hi = tau_window
    pts = []
    for t in _sign_change_roots(f, lo, hi, n):
        if abs(t - 1) < 1e-12:
            continue
        u = _tricritical_u(t, kappa)
        # reject the pole of u where f jumps through infinity
        if abs(f(t)) > 1e-8 * (1 + abs(4 * kappa * u)):
            continue
        pts.append((t, math.sqrt(u)))
    return pts


def critical_set(tau: float, kappa: float, gamma: float, merge_window=None, tri_window=None) -> CriticalSet:
    cs = CriticalSet(tau=tau, kappa=kappa, gamma_tilde=gamma)
    try:
        cs.g_c_minus, cs.g_c_plus = critical_g_pm(tau, kappa, gamma)
    except EtaZero:
        cs.asymptote = True
    cs.g_c_b = critical_g_b(tau, kappa, gamma)
    if kappa == 0:
        cs.tau_c_b = tau_c_b(gamma)
    if merge_window is not None:
        try:
            cs.tau_c_s = merge_tau(kappa, gamma, merge_window)[0]
        except NoRootInWindow:
            pass
    if tri_window is not None:
        cs.tricritical = tricritical_points(kappa, gamma, tri_window)
    return cs


def crossings_along_path(kappa: float, gamma: float, tau_of_g, g_lo: float, g_hi: float, n: int = 2001) -> dict:
    """Boundary crossings along a one-parameter path tau = tau_of_g(g).

    Returns {'g_c_minus': [...], 'g_c_plus': [...], 'g_c_b': [...]} with the
    couplings where the path meets each family of critical lines.
    """
    qf = lambda g: q_np(tau_of_g(g), kappa, gamma, g)  # noqa: E731
    bf = lambda g: discriminant(tau_of_g(g), kappa, gamma, g)  # noqa: E731
    out = {"g_c_minus": [], "g_c_plus": [], "g_c_b": []}
    for g in _sign_change_roots(qf, g_lo, g_hi, n):
        t = tau_of_g(g)
        try:
            gm_, gp_ = critical_g_pm(t, kappa, gamma)
        except EtaZero:
            continue
        dm = abs(gm_ - g) if gm_ is not None else math.inf
        dp = abs(gp_ - g) if gp_ is not None else math.inf
        out["g_c_minus" if dm <= dp else "g_c_plus"].append(g)
    out["g_c_b"] = _sign_change_roots(bf, g_lo, g_hi, n)
    return out


# ---------------------------------------------------------------------------
# classification


@dataclass
class Classification:
    label: PhaseLabel
    stable_states: list[MeanFieldState]
    candidates: list[MeanFieldState]
    sz_roots: list[SzRoot]
    np_max_re: float


def superradiant_states(p: ModelParams) -> tuple[list[SzRoot], list[MeanFieldState]]:
    """All physical superradiant candidates; tau = +-1 handled by the finite root."""
    roots = [SzRoot(v, s, -1.0 < v < 0.0) for v, s in _sz_roots(p.tau, p.g_tilde**2, p.kappa, p.gamma_tilde)]
    states = []
    for r in roots:
        if r.physical:
            states.extend(solve_xy(p, r.value, r.root_sign))
    return roots, states


def classify_phase(p: ModelParams) -> Classification:
    from openrabi.stability import assess

    roots, cands = superradiant_states(p)
    np_state = trivial_state(-1)
    np_verdict = assess(p, np_state)
    stable = [np_state] if np_verdict.stable else []
    srp_stable = [s for s in cands if assess(p, s).stable]
    stable.extend(srp_stable)
    if np_verdict.stable and srp_stable:
        label = PhaseLabel.BISTABLE
    elif srp_stable:
        label = PhaseLabel.SRP
    elif np_verdict.stable:
        label = PhaseLabel.NP
    else:
        # no stable fixed point on the s_z < 0 branch; the NP is the only
        # candidate and it is marginal/unstable. Report SRP when the NP is
        # unstable, since the flow leaves the origin.
        label = PhaseLabel.SRP if cands else PhaseLabel.NP
    return Classification(label, stable, cands, roots, max(e.real for e in np_verdict.eigenvalues))
