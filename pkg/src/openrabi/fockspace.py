"""Exact Lindblad steady states on a truncated spin x Fock space.

Basis ordering is spin (x) Fock with the spin index slowest; spin index 0 is
up (sigma_z = +1), so the spin-down cavity block is rho[n+1:, n+1:] for a
cutoff n. Superoperators act on column-stacked density matrices.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy import ndimage, special

from openrabi.errors import ConfigError, DegenerateNullSpace
from openrabi.params import ModelParams

TOP_LEVEL_TOL = 1e-6


@dataclass(frozen=True)
class HilbertConfig:
    n_max: int
    ratio: float = 50.0

    def __post_init__(self):
        if self.n_max < 2:
            raise ConfigError("n_max must be >= 2")
        if not self.ratio > 0:
            raise ConfigError("ratio must be positive")

    @property
    def dim(self) -> int:
        return 2 * (self.n_max + 1)


@dataclass(frozen=True)
class WignerGrid:
    x: np.ndarray
    p: np.ndarray
    values: np.ndarray  # values[i, j] = W(x[i], p[j])

    def integral(self) -> float:
        dx = self.x[1] - self.x[0]
        dp = self.p[1] - self.p[0]
        return float(self.values.sum() * dx * dp)


def _ops(n_max):
    a = sp.diags(np.sqrt(np.arange(1, n_max + 1)), 1, shape=(n_max + 1, n_max + 1), format="csr")
    i_f = sp.identity(n_max + 1, format="csr")
    s_z = sp.diags([1.0, -1.0], format="csr")
    s_p = sp.csr_matrix(np.array([[0.0, 1.0], [0.0, 0.0]]))
    return a, i_f, s_z, s_p


def full_operators(n_max: int) -> dict:
    a, i_f, s_z, s_p = _ops(n_max)
    i2 = sp.identity(2, format="csr")
    return {
        "a": sp.kron(i2, a, format="csr"),
        "sz": sp.kron(s_z, i_f, format="csr"),
        "sp": sp.kron(s_p, i_f, format="csr"),
        "sm": sp.kron(s_p.T, i_f, format="csr"),
        "n": sp.kron(i2, a.T @ a, format="csr"),
    }


def hamiltonian(p: ModelParams, h: HilbertConfig) -> sp.csr_matrix:
    w = p.omega
    delta = h.ratio * w
    g = p.g_tilde * math.sqrt(w * delta)
    d = p.kappa * p.g_tilde**2 * w
    o = full_operators(h.n_max)
    a, ad = o["a"], o["a"].T.tocsr()
    x = a + ad
    return (
        w * o["n"] + 0.5 * delta * o["sz"] + d * (x @ x)
        + g * ((o["sp"] @ a + o["sm"] @ ad) + p.tau * (o["sp"] @ ad + o["sm"] @ a))
    ).tocsr()


def build_liouvillian(p: ModelParams, h: HilbertConfig) -> sp.csc_matrix:
    H = hamiltonian(p, h)
    a = full_operators(h.n_max)["a"]
    gamma = p.gamma
    dim = H.shape[0]
    eye = sp.identity(dim, format="csr")
    ada = (a.T @ a).tocsr()
    L = -1j * (sp.kron(eye, H) - sp.kron(H.T, eye))
    L = L + gamma * (2 * sp.kron(a.conj(), a) - sp.kron(eye, ada) - sp.kron(ada.T, eye))
    return L.tocsc()


def vec(rho: np.ndarray) -> np.ndarray:
    return rho.reshape(-1, order="F")


def unvec(v: np.ndarray) -> np.ndarray:
    d = int(round(math.sqrt(v.size)))
    return v.reshape(d, d, order="F")


def steady_state(L, check_degeneracy: bool = False, degeneracy_tol: float = 1e-9) -> np.ndarray:
    """Unit-trace null vector of L, Hermitized.

    One row of L is replaced by the trace functional and the system is solved
    by sparse LU. With ``check_degeneracy`` the two eigenvalues nearest zero
    are computed first and DegenerateNullSpace is raised when both vanish; a
    singular LU factor raises it as well.
    """
    if check_degeneracy:
        _check_null_space(L, degeneracy_tol)
    dim = int(round(math.sqrt(L.shape[0])))
    A = L.tolil(copy=True)
    tr = np.zeros(dim * dim, complex)
    tr[:: dim + 1] = 1.0
    A[0, :] = tr
    b = np.zeros(dim * dim, complex)
    b[0] = 1.0
    try:
        v = spla.spsolve(A.tocsc(), b)
    except RuntimeError as e:
        raise DegenerateNullSpace(f"steady-state system is singular ({e})") from e
    if not np.all(np.isfinite(v)):
        raise DegenerateNullSpace("steady-state system is singular")
    rho = unvec(v)
    rho = 0.5 * (rho + rho.conj().T)
    rho /= np.trace(rho).real
    return rho


def _check_null_space(L, tol):
    # small real shift keeps the shift-invert factorization regular when L is singular
    vals, vecs = spla.eigs(L, k=2, sigma=-1e-7, which="LM")
    order = np.argsort(np.abs(vals))
    if abs(vals[order[1]]) < tol:
        basis = []
        for i in order:
            r = unvec(vecs[:, i])
            basis.append(r / np.trace(r) if abs(np.trace(r)) > 1e-12 else r)
        raise DegenerateNullSpace(f"null eigenvalues {vals[order]}", basis=basis)


def residual(L, rho) -> float:
    return float(np.linalg.norm(L @ vec(rho)))


def observables(rho: np.ndarray) -> dict:
    n_max = rho.shape[0] // 2 - 1
    o = full_operators(n_max)
    a = o["a"]

    def ev(op):
        return complex(np.trace(op @ rho)) if not sp.issparse(op) else complex((op.multiply(rho.T)).sum())

    fock_parity = np.where(np.arange(n_max + 1) % 2 == 0, 1.0, -1.0)
    parity = sp.diags(-np.concatenate([fock_parity, -fock_parity]))
    return {
        "a": ev(a),
        "n": ev(o["n"]).real,
        "a2": ev(a @ a),
        "sz": ev(o["sz"]).real,
        "s_plus": ev(o["sp"]),
        "s_minus": ev(o["sm"]),
        "parity": ev(parity).real,
        "p_down": float(np.trace(spin_down_block(rho)).real),
    }


def spin_down_block(rho: np.ndarray) -> np.ndarray:
    m = rho.shape[0] // 2
    return rho[m:, m:]


def spin_up_block(rho: np.ndarray) -> np.ndarray:
    m = rho.shape[0] // 2
    return rho[:m, :m]


def top_level_population(rho: np.ndarray) -> float:
    m = rho.shape[0] // 2
    d = np.diag(rho).real
    return float(d[m - 2] + d[m - 1] + d[2 * m - 2] + d[2 * m - 1])


def cutoff_ok(rho: np.ndarray, tol: float = TOP_LEVEL_TOL) -> bool:
    return top_level_population(rho) < tol


def check_state(rho: np.ndarray) -> dict:
    return {
        "trace_err": abs(np.trace(rho) - 1),
        "herm_err": float(np.max(np.abs(rho - rho.conj().T))),
        "min_eig": float(np.linalg.eigvalsh(rho).min()),
    }


# ---------------------------------------------------------------------------
# Wigner function


def _wigner_raw(rho, X, P, skip=1e-15):
    """Displaced-parity sum with Laguerre matrix elements, evaluated in logs."""
    m = rho.shape[0]
    z = np.sqrt(2.0) * (X + 1j * P)  # 2*beta with beta = (x + i p)/sqrt(2)
    xx = np.abs(z) ** 2
    theta = np.angle(z)
    with np.errstate(divide="ignore"):
        lx = np.log(xx)
    W = np.zeros_like(xx)
    lg = special.gammaln(np.arange(m) + 1.0)
    for k in range(m):
        diag = np.diagonal(rho, k)
        if np.max(np.abs(diag), initial=0.0) < skip:
            continue
        phase = np.exp(1j * k * theta)
        for n in range(m - k):
            c = diag[n]
            if abs(c) < skip:
                continue
            lag = special.eval_genlaguerre(n, k, xx)
            with np.errstate(divide="ignore", invalid="ignore"):
                mag = 0.5 * (lg[n] - lg[n + k]) - 0.5 * xx + np.log(np.abs(lag))
                if k:
                    mag = mag + 0.5 * k * lx
            g = np.sign(lag) * np.exp(mag)
            g = np.nan_to_num(g)
            if k == 0:
                term = c.real * g
            else:
                term = 2.0 * g * (c * phase).real
            W += term if n % 2 == 0 else -term
    return W / math.pi


def wigner(rho: np.ndarray, x, p=None, auto_expand: bool = True, edge_tol: float = 1e-6,
           max_expand: int = 6) -> WignerGrid:
    """W(x, p) of a single-mode matrix with x = (a+a^dag)/sqrt2, p = (a-a^dag)/(i sqrt2).

    With ``auto_expand`` the grid is widened (same spacing) until |W| on the
    boundary drops below ``edge_tol``.
    """
    x = np.asarray(x, float)
    p = x if p is None else np.asarray(p, float)
    for _ in range(max_expand + 1):
        X, P = np.meshgrid(x, p, indexing="ij")
        W = _wigner_raw(rho, X, P)
        edge = max(np.abs(W[0]).max(), np.abs(W[-1]).max(), np.abs(W[:, 0]).max(), np.abs(W[:, -1]).max())
        if not auto_expand or edge < edge_tol:
            break
        x = _widen(x)
        p = _widen(p)
    return WignerGrid(x, p, W)


def _widen(ax):
    h = ax[1] - ax[0]
    extra = max(len(ax) // 4, 1)
    return np.concatenate([ax[0] - h * np.arange(extra, 0, -1), ax, ax[-1] + h * np.arange(1, extra + 1)])


def count_peaks(grid: WignerGrid, rel_threshold: float = 0.05, separation: int = 3) -> list[tuple[float, float, float]]:
    """Local maxima above rel_threshold * max(W), at least ``separation`` cells apart."""
    W = grid.values
    mx = ndimage.maximum_filter(W, size=2 * separation + 1, mode="constant", cval=-np.inf)
    idx = np.argwhere((W == mx) & (W > rel_threshold * W.max()))
    return [(float(grid.x[i]), float(grid.p[j]), float(W[i, j])) for i, j in idx]


def wigner_position_oracle(rho: np.ndarray, x, p, y_max: float = 12.0, ny: int = 1201) -> np.ndarray:
    """Direct phase-space integral (1/pi) int <x+y|rho|x-y> e^{-2ipy} dy via Hermite functions."""
    m = rho.shape[0]
    ys = np.linspace(-y_max, y_max, ny)
    dy = ys[1] - ys[0]

    def psi(q):
        q = np.asarray(q, float)
        out = np.zeros((m,) + q.shape)
        out[0] = math.pi ** -0.25 * np.exp(-q * q / 2)
        if m > 1:
            out[1] = math.sqrt(2) * q * out[0]
        for n in range(2, m):
            out[n] = math.sqrt(2 / n) * q * out[n - 1] - math.sqrt((n - 1) / n) * out[n - 2]
        return out

    W = np.zeros((len(x), len(p)))
    for i, xv in enumerate(x):
        up = psi(xv + ys)  # <x+y|n>
        dn = psi(xv - ys)
        kern = np.einsum("my,mn,ny->y", up, rho, dn)  # <x+y|rho|x-y>
        for j, pv in enumerate(p):
            W[i, j] = (kern * np.exp(-2j * pv * ys)).sum().real * dy / math.pi
    return W
