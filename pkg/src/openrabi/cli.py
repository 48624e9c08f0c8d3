"""Command-line driver: sweeps, fits, trajectories and exact steady states to CSV."""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from openrabi import dynamics, fockspace, gaussian, meanfield, stability
from openrabi.errors import ConfigError, EtaZero, InsufficientDecades, NoRootInWindow, OpenRabiError
from openrabi.params import ModelParams
from openrabi.tables import (
    IoError, TableWriter, count_data_rows, emit_table, read_manifest, write_manifest,
)

EXIT_OK, EXIT_CONFIG, EXIT_PARTIAL = 0, 2, 3
NAN = math.nan

COMMON = {"kappa": 3.0, "gamma_tilde": 0.5, "out": "openrabi-out", "workers": None}

DEFAULTS = {
    "phase-diagram": {"plane": "tau-g", "tau_range": [-4.0, 8.0, 121, "linear"],
                      "g_range": [0.02, 2.5, 60, "linear"], "gcr_range": [0.02, 6.0, 60, "linear"],
                      "chunk": 256},
    "critical-lines": {"tau_range": [-4.0, 8.0, 241, "linear"], "merge_window": None,
                       "tri_window": [-6.0, 10.0]},
    "fluctuations": {"g_range": [0.2, 3.0, 281, "linear"], "tau": None, "gcr": 3.0, "chunk": 256},
    "exponent-fit": {"g_range": [0.2, 3.0], "tau": None, "gcr": 3.0, "target": "auto",
                     "merge_window": [2.0, 3.0], "delta_range": [1e-6, 1e-2, 40, "geometric"]},
    "dynamics": {"tau": 2.0, "g_tilde": 1.2, "alpha0": None, "branch": -1, "t_max": 2000.0,
                 "tol": 1e-10, "dt_sample": 0.05, "seed": 0},
    "basin": {"tau": 6.0, "g_tilde": 0.5, "re_range": [-1.5, 1.5, 21, "linear"],
              "im_range": [-1.5, 1.5, 21, "linear"], "t_max": 2000.0, "tol": 1e-10, "chunk": 64},
    "steady-state": {"tau": 2.0, "g_tilde": 1.5, "ratio": 50.0, "n_max": 40,
                     "check_degeneracy": False},
    "wigner": {"tau": 2.4, "g_tilde": 0.9, "ratio": 50.0, "n_max": 40,
               "x_range": [-8.0, 8.0, 161, "linear"], "block": "down", "auto_expand": True},
}

# fields that do not change the data and are left out of the config hash
NON_DATA = {"out", "workers", "stop_after", "resume", "config"}


# ---------------------------------------------------------------------------
# configuration


def axis(spec, name):
    if spec is None or not isinstance(spec, (list, tuple)) or len(spec) not in (3, 4):
        raise ConfigError(f"{name}: expected [start, stop, count, (linear|geometric)]")
    try:
        start, stop, count = float(spec[0]), float(spec[1]), int(spec[2])
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{name}: {e}") from e
    scale = spec[3] if len(spec) == 4 else "linear"
    if not (math.isfinite(start) and math.isfinite(stop)):
        raise ConfigError(f"{name}: range must be finite")
    if count < 2:
        raise ConfigError(f"{name}: count must be >= 2")
    if scale == "linear":
        return np.linspace(start, stop, count)
    if scale == "geometric":
        if start * stop <= 0:
            raise ConfigError(f"{name}: geometric range must not contain 0")
        return np.geomspace(start, stop, count)
    raise ConfigError(f"{name}: unknown scale {scale!r}")


def _range_arg(s):
    parts = s.split(",") if "," in s else s.split()
    out = []
    for x in parts:
        try:
            out.append(int(x) if x.lstrip("-").isdigit() else float(x))
        except ValueError:
            out.append(x)
    return out


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="openrabi", description=__doc__)
    sub = ap.add_subparsers(dest="mode", required=True)

    def add(name, help_):
        sp_ = sub.add_parser(name, help=help_)
        sp_.add_argument("--config", help="JSON file with the same field names as the flags")
        sp_.add_argument("--out", help="output directory")
        sp_.add_argument("--kappa", type=float)
        sp_.add_argument("--gamma-tilde", dest="gamma_tilde", type=float)
        sp_.add_argument("--workers", type=int, help="worker processes (default: $OPENRABI_WORKERS or CPU count)")
        return sp_

    rng = dict(type=_range_arg, metavar="START,STOP,COUNT[,SCALE]")

    p = add("phase-diagram", "NP / SRP / Bistable raster")
    p.add_argument("--plane", choices=["tau-g", "gcr-gr"])
    p.add_argument("--tau-range", dest="tau_range", **rng)
    p.add_argument("--g-range", dest="g_range", **rng)
    p.add_argument("--gcr-range", dest="gcr_range", **rng)
    p.add_argument("--resume", action="store_true")
    p.add_argument("--stop-after", dest="stop_after", type=int, help=argparse.SUPPRESS)

    p = add("critical-lines", "critical couplings versus tau")
    p.add_argument("--tau-range", dest="tau_range", **rng)
    p.add_argument("--merge-window", dest="merge_window", type=_range_arg, metavar="LO,HI")
    p.add_argument("--tri-window", dest="tri_window", type=_range_arg, metavar="LO,HI")

    p = add("fluctuations", "Gaussian photon-number fluctuations along a path")
    p.add_argument("--g-range", dest="g_range", **rng)
    p.add_argument("--tau", type=float, help="fixed anisotropy (overrides --gcr)")
    p.add_argument("--gcr", type=float, help="fixed tau*g_tilde")
    p.add_argument("--resume", action="store_true")
    p.add_argument("--stop-after", dest="stop_after", type=int, help=argparse.SUPPRESS)

    p = add("exponent-fit", "critical exponents beta and nu")
    p.add_argument("--g-range", dest="g_range", type=_range_arg, metavar="LO,HI")
    p.add_argument("--tau", type=float)
    p.add_argument("--gcr", type=float)
    p.add_argument("--target", choices=["auto", "merge"])
    p.add_argument("--merge-window", dest="merge_window", type=_range_arg, metavar="LO,HI")
    p.add_argument("--delta-range", dest="delta_range", **rng)

    p = add("dynamics", "semiclassical trajectory")
    p.add_argument("--tau", type=float)
    p.add_argument("--g-tilde", dest="g_tilde", type=float)
    p.add_argument("--alpha0", type=_range_arg, metavar="RE,IM")
    p.add_argument("--branch", type=int, choices=[-1, 1])
    p.add_argument("--t-max", dest="t_max", type=float)
    p.add_argument("--tol", type=float)
    p.add_argument("--dt-sample", dest="dt_sample", type=float)
    p.add_argument("--seed", type=int, help="draws alpha0 when it is not given")

    p = add("basin", "basins of attraction over initial alpha")
    p.add_argument("--tau", type=float)
    p.add_argument("--g-tilde", dest="g_tilde", type=float)
    p.add_argument("--re-range", dest="re_range", **rng)
    p.add_argument("--im-range", dest="im_range", **rng)
    p.add_argument("--t-max", dest="t_max", type=float)
    p.add_argument("--tol", type=float)
    p.add_argument("--resume", action="store_true")
    p.add_argument("--stop-after", dest="stop_after", type=int, help=argparse.SUPPRESS)

    for name, help_ in (("steady-state", "exact Lindblad steady state"),
                        ("wigner", "Wigner function of the exact steady state")):
        p = add(name, help_)
        p.add_argument("--tau", type=float)
        p.add_argument("--g-tilde", dest="g_tilde", type=float)
        p.add_argument("--ratio", type=float, help="Delta/omega")
        p.add_argument("--n-max", dest="n_max", type=int)
        if name == "steady-state":
            p.add_argument("--check-degeneracy", dest="check_degeneracy", action="store_const", const=True)
        else:
            p.add_argument("--x-range", dest="x_range", **rng)
            p.add_argument("--block", choices=["down", "up", "full"])
            p.add_argument("--no-expand", dest="auto_expand", action="store_const", const=False)
    return ap


def resolve_config(args) -> dict:
    cfg = dict(COMMON)
    cfg.update(DEFAULTS[args.mode])
    if args.config:
        try:
            with open(args.config) as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config: {e}") from e
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        doc.pop("mode", None)
        unknown = set(doc) - set(cfg) - {"resume", "stop_after"}
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        cfg.update(doc)
    for k, v in vars(args).items():
        if k in ("mode", "config") or v is None or v is False and k == "resume":
            continue
        cfg[k] = v
    cfg.setdefault("resume", False)
    cfg.setdefault("stop_after", None)
    return cfg


def data_config(mode, cfg) -> dict:
    d = {k: v for k, v in cfg.items() if k not in NON_DATA}
    d["mode"] = mode
    return d


def _params(cfg, **kw) -> ModelParams:
    base = dict(tau=cfg.get("tau"), g_tilde=cfg.get("g_tilde"), kappa=cfg["kappa"],
                gamma_tilde=cfg["gamma_tilde"])
    base.update(kw)
    try:
        return ModelParams(float(base["tau"]), float(base["g_tilde"]), float(base["kappa"]),
                           float(base["gamma_tilde"]))
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e)) from e


# ---------------------------------------------------------------------------
# cell workers (top level so they pickle)


def _err(e):
    return f"{type(e).__name__}: {e}"


def phase_cell(args):
    tau, g, kappa, gamma = args
    try:
        p = ModelParams(tau, g, kappa, gamma)
        c = meanfield.classify_phase(p)
        srp = [s for s in c.stable_states if not s.is_trivial]
        st = srp[0] if srp else meanfield.trivial_state()
        re_l = stability.assess(p, st).max_real
        return (tau, g, c.label.value, st.s_z, st.x, st.y, re_l, "")
    except Exception as e:  # recorded per cell, run continues
        return (tau, g, "", NAN, NAN, NAN, NAN, _err(e))


def fluct_cell(args):
    g, tau, kappa, gamma = args
    try:
        p = ModelParams(tau, g, kappa, gamma)
        c = meanfield.classify_phase(p)
        np_stable = any(s.is_trivial for s in c.stable_states)
        re_np = gaussian.np_liouville_eigs(p)[1].real
        n_np = gaussian.second_moments(gaussian.np_coeffs(p), gamma).n if np_stable else NAN
        srp = [s for s in c.stable_states if not s.is_trivial]
        n_srp = re_srp = a_sq = NAN
        if srp:
            cs = gaussian.srp_coeffs(p, srp[0])
            n_srp = gaussian.second_moments(cs, gamma).n
            re_srp = gaussian.first_moment_eigs(cs, gamma)[1].real
            a_sq = abs(srp[0].alpha) ** 2
        return (g, tau, c.label.value, n_np, re_np, n_srp, re_srp, a_sq, "")
    except Exception as e:
        return (g, tau, "", NAN, NAN, NAN, NAN, NAN, _err(e))


def basin_cell(args):
    tau, g, kappa, gamma, re, im, t_max, tol = args
    try:
        p = ModelParams(tau, g, kappa, gamma)
        tr = dynamics.integrate(p, complex(re, im), -1, t_max=t_max, tol=tol)
        label = dynamics.classify_endpoint(tr)
        a = tr.converged_to.alpha if tr.converged else complex(NAN, NAN)
        return (re, im, label, a, "")
    except Exception as e:
        return (re, im, "", complex(NAN, NAN), _err(e))


# ---------------------------------------------------------------------------
# ordered, resumable raster runner


def run_raster(mode, cfg, schema, fn, cells, extra=None) -> int:
    out = cfg["out"]
    os.makedirs(out, exist_ok=True)
    fname = f"{mode}.csv"
    path = os.path.join(out, fname)
    dcfg = data_config(mode, cfg)
    start = 0
    man = read_manifest(out)
    if cfg.get("resume") and man and man.get("config") == json.loads(json.dumps(dcfg, default=str)) \
            and man.get("status") == "partial" and os.path.exists(path):
        start = int(man.get("completed_cells", 0))
        _truncate_rows(path, start)
    errors = 0
    if start:
        errors = sum(1 for _ in _iter_errors(path))
    writer = TableWriter(path, mode, dcfg, schema, extra, append=bool(start))
    nw = dynamics.worker_count(cfg.get("workers"))
    chunk = int(cfg.get("chunk", 256))
    stop_after = cfg.get("stop_after")
    done = start
    files = [{"name": fname, "schema": [list(s) for s in schema]}]
    ex = ProcessPoolExecutor(max_workers=nw) if nw > 1 and len(cells) - start > 1 else None
    try:
        while done < len(cells):
            hi = min(done + chunk, len(cells))
            if stop_after is not None:
                hi = min(hi, stop_after)
            batch = cells[done:hi]
            res = list(ex.map(fn, batch)) if ex else [fn(c) for c in batch]
            for row in res:
                writer.write(row)
                errors += bool(row[-1])
            writer.flush()
            done = hi
            status = "complete" if done == len(cells) else "partial"
            write_manifest(out, mode, dcfg, files, status=status, completed_cells=done,
                           total_cells=len(cells), failed_cells=errors)
            if stop_after is not None and done >= stop_after and done < len(cells):
                break
    finally:
        writer.close()
        if ex:
            ex.shutdown()
    if done < len(cells):
        return EXIT_PARTIAL
    return EXIT_PARTIAL if errors else EXIT_OK


def _truncate_rows(path, keep):
    with open(path) as fh:
        lines = fh.readlines()
    out, seen_header, rows = [], False, 0
    for line in lines:
        if line.startswith("#"):
            out.append(line)
        elif not seen_header:
            out.append(line)
            seen_header = True
        elif rows < keep and line.endswith("\n"):
            out.append(line)
            rows += 1
    with open(path, "w") as fh:
        fh.writelines(out)
    assert count_data_rows(path) == keep


def _iter_errors(path):
    from openrabi.tables import read_table
    t = read_table(path)
    for e in t.columns.get("error", []):
        if e:
            yield e


# ---------------------------------------------------------------------------
# modes


PHASE_SCHEMA = [("tau", "float"), ("g_tilde", "float"), ("label", "str"), ("s_z", "float"),
                ("x", "float"), ("y", "float"), ("re_l_plus", "float"), ("error", "str")]


def mode_phase_diagram(cfg):
    k, gm = cfg["kappa"], cfg["gamma_tilde"]
    gs = axis(cfg["g_range"], "g_range")
    if cfg["plane"] == "tau-g":
        ts = axis(cfg["tau_range"], "tau_range")
        cells = [(float(t), float(g), k, gm) for t in ts for g in gs]
    elif cfg["plane"] == "gcr-gr":
        gcrs = axis(cfg["gcr_range"], "gcr_range")
        if np.any(gs <= 0):
            raise ConfigError("g_range must be positive in the gcr-gr plane")
        cells = [(float(c / g), float(g), k, gm) for c in gcrs for g in gs]
    else:
        raise ConfigError(f"unknown plane {cfg['plane']!r}")
    return run_raster("phase-diagram", cfg, PHASE_SCHEMA, phase_cell, cells)


def mode_critical_lines(cfg):
    k, gm = cfg["kappa"], cfg["gamma_tilde"]
    ts = axis(cfg["tau_range"], "tau_range")
    out = cfg["out"]
    os.makedirs(out, exist_ok=True)
    dcfg = data_config("critical-lines", cfg)
    schema = [("tau", "float"), ("g_c_minus", "float"), ("g_c_plus", "float"),
              ("g_c_b_lo", "float"), ("g_c_b_hi", "float"), ("asymptote", "bool")]
    rows = []
    for t in ts:
        cs = meanfield.critical_set(float(t), k, gm)
        b = cs.g_c_b + [NAN] * (2 - len(cs.g_c_b))
        rows.append((float(t), _nan(cs.g_c_minus), _nan(cs.g_c_plus), b[0], b[1], cs.asymptote))
    emit_table(os.path.join(out, "critical-lines.csv"), "critical-lines", dcfg, schema, rows)
    pschema = [("kind", "str"), ("tau", "float"), ("g_tilde", "float")]
    prow = []
    if cfg.get("merge_window"):
        try:
            ts_, g0 = meanfield.merge_tau(k, gm, tuple(cfg["merge_window"]))
            prow.append(("merge", ts_, g0))
        except NoRootInWindow:
            pass
    for t, g in meanfield.tricritical_points(k, gm, tuple(cfg["tri_window"])):
        prow.append(("tricritical", t, g))
    if k == 0:
        for t in meanfield.tau_c_b(gm):
            prow.append(("tau_c_b", t, NAN))
    emit_table(os.path.join(out, "critical-points.csv"), "critical-lines", dcfg, pschema, prow)
    write_manifest(out, "critical-lines", dcfg, [
        {"name": "critical-lines.csv", "schema": [list(s) for s in schema]},
        {"name": "critical-points.csv", "schema": [list(s) for s in pschema]}])
    return EXIT_OK


def _nan(v):
    return NAN if v is None else v


def _path(cfg):
    k, gm = cfg["kappa"], cfg["gamma_tilde"]
    if cfg.get("tau") is not None:
        t = float(cfg["tau"])
        return (lambda g: t), (lambda g: ModelParams(t, g, k, gm))
    if cfg.get("gcr") is None:
        raise ConfigError("set tau or gcr")
    c = float(cfg["gcr"])
    return (lambda g: c / g), (lambda g: ModelParams(c / g, g, k, gm))


FLUCT_SCHEMA = [("g_tilde", "float"), ("tau", "float"), ("label", "str"), ("n_np", "float"),
                ("re_l_np", "float"), ("n_srp", "float"), ("re_l_srp", "float"),
                ("alpha_sq", "float"), ("error", "str")]


def mode_fluctuations(cfg):
    tau_of, _ = _path(cfg)
    gs = axis(cfg["g_range"], "g_range")
    if np.any(gs <= 0):
        raise ConfigError("g_range must be positive")
    cells = [(float(g), float(tau_of(g)), cfg["kappa"], cfg["gamma_tilde"]) for g in gs]
    return run_raster("fluctuations", cfg, FLUCT_SCHEMA, fluct_cell, cells)


def _fit_row(kind, fn):
    try:
        f = fn()
        return (kind, f.g_c, f.side, f.phase, f.beta, f.beta_stderr, f.nu, f.nu_stderr,
                f.consistent, f.n_points, "")
    except (OpenRabiError, ValueError) as e:
        return (kind, NAN, 0, "", NAN, NAN, NAN, NAN, False, 0, _err(e))


def mode_exponent_fit(cfg):
    k, gm = cfg["kappa"], cfg["gamma_tilde"]
    deltas = axis(cfg["delta_range"], "delta_range")
    schema = [("kind", "str"), ("g_c", "float"), ("side", "int"), ("phase", "str"),
              ("beta", "float"), ("beta_stderr", "float"), ("nu", "float"), ("nu_stderr", "float"),
              ("consistent", "bool"), ("n_points", "int"), ("error", "str")]
    rows = []
    if cfg["target"] == "merge":
        try:
            t, g0 = meanfield.merge_tau(k, gm, tuple(cfg["merge_window"]))
        except NoRootInWindow as e:
            raise ConfigError(str(e)) from e
        base = ModelParams(t, g0, k, gm)
        for side in (-1, 1):
            rows.append(_fit_row("merge", lambda s=side: gaussian.fit_exponents(base, g0, s, "NP", deltas)))
    elif cfg["target"] == "auto":
        tau_of, path = _path(cfg)
        lo, hi = (float(v) for v in cfg["g_range"][:2])
        if lo <= 0 or hi <= lo:
            raise ConfigError("g_range must be 0 < lo < hi")
        cr = meanfield.crossings_along_path(k, gm, tau_of, lo, hi)
        for kind in ("g_c_minus", "g_c_plus", "g_c_b"):
            for g_c in cr[kind]:
                rows.extend(_auto_fits(kind, g_c, path, deltas))
    else:
        raise ConfigError(f"unknown target {cfg['target']!r}")
    out = cfg["out"]
    os.makedirs(out, exist_ok=True)
    dcfg = data_config("exponent-fit", cfg)
    emit_table(os.path.join(out, "exponent-fit.csv"), "exponent-fit", dcfg, schema, rows)
    write_manifest(out, "exponent-fit", dcfg, [{"name": "exponent-fit.csv", "schema": [list(s) for s in schema]}])
    return EXIT_PARTIAL if any(r[-1] for r in rows) else EXIT_OK


def _auto_fits(kind, g_c, path, deltas):
    """Fit on every side where the relevant branch is stable near g_c."""
    rows = []
    probe = 1e-4
    for side in (-1, 1):
        p = path(g_c + side * probe)
        c = meanfield.classify_phase(p)
        srp = [s for s in c.stable_states if not s.is_trivial]
        if kind == "g_c_b":
            if not srp:
                continue
            phase = "SRP"
        elif any(s.is_trivial for s in c.stable_states):
            phase = "NP"
        elif srp and srp[0].s_z < -0.99:
            # superradiant branch born continuously at this boundary
            phase = "SRP"
        else:
            continue
        rows.append(_fit_row(kind, lambda s=side, ph=phase: gaussian.fit_exponents(
            path(g_c), g_c, s, ph, deltas, path=path)))
    return rows


def mode_dynamics(cfg):
    p = _params(cfg)
    a0 = cfg.get("alpha0")
    if a0 is None:
        rng = np.random.default_rng(int(cfg["seed"]))
        a0 = list(rng.uniform(-1, 1, 2))
        cfg["alpha0"] = [float(v) for v in a0]
    if len(a0) != 2:
        raise ConfigError("alpha0 must be RE,IM")
    if cfg["branch"] not in (1, -1):
        raise ConfigError("branch must be +1 or -1")
    tr = dynamics.integrate(p, complex(float(a0[0]), float(a0[1])), int(cfg["branch"]),
                            t_max=float(cfg["t_max"]), tol=float(cfg["tol"]),
                            dt_sample=float(cfg["dt_sample"]))
    out = cfg["out"]
    os.makedirs(out, exist_ok=True)
    dcfg = data_config("dynamics", cfg)
    schema = [("t", "float"), ("alpha", "complex"), ("s_x", "float"), ("s_y", "float"), ("s_z", "float")]
    conv = tr.converged_to
    extra = {"converged": tr.converged, "steady_time": tr.steady_time,
             "fixed_point": None if conv is None else {"alpha": [conv.x, conv.y], "s_z": conv.s_z,
                                                        "branch": conv.branch}}
    rows = zip(tr.times, tr.alpha, tr.s_x, tr.s_y, tr.s_z)
    emit_table(os.path.join(out, "dynamics.csv"), "dynamics", dcfg, schema, rows, extra)
    write_manifest(out, "dynamics", dcfg, [{"name": "dynamics.csv", "schema": [list(s) for s in schema]}],
                   **extra)
    return EXIT_OK if tr.converged else EXIT_PARTIAL


BASIN_SCHEMA = [("re_alpha0", "float"), ("im_alpha0", "float"), ("label", "str"),
                ("alpha_final", "complex"), ("error", "str")]


def mode_basin(cfg):
    p = _params(cfg)
    re_v = axis(cfg["re_range"], "re_range")
    im_v = axis(cfg["im_range"], "im_range")
    cells = [(p.tau, p.g_tilde, p.kappa, p.gamma_tilde, float(x), float(y),
              float(cfg["t_max"]), float(cfg["tol"])) for x in re_v for y in im_v]
    return run_raster("basin", cfg, BASIN_SCHEMA, basin_cell, cells)


def _exact(cfg):
    p = _params(cfg)
    h = fockspace.HilbertConfig(int(cfg["n_max"]), float(cfg["ratio"]))
    L = fockspace.build_liouvillian(p, h)
    rho = fockspace.steady_state(L, check_degeneracy=bool(cfg.get("check_degeneracy")))
    return p, h, L, rho


def mode_steady_state(cfg):
    p, h, L, rho = _exact(cfg)
    ob = fockspace.observables(rho)
    st = fockspace.check_state(rho)
    schema = [("tau", "float"), ("g_tilde", "float"), ("ratio", "float"), ("n_max", "int"),
              ("n", "float"), ("a", "complex"), ("a2", "complex"), ("sz", "float"),
              ("s_minus", "complex"), ("parity", "float"), ("p_down", "float"),
              ("top_population", "float"), ("cutoff_ok", "bool"), ("residual", "float"),
              ("trace_err", "float"), ("herm_err", "float"), ("min_eig", "float")]
    top = fockspace.top_level_population(rho)
    row = (p.tau, p.g_tilde, h.ratio, h.n_max, ob["n"], ob["a"], ob["a2"], ob["sz"], ob["s_minus"],
           ob["parity"], ob["p_down"], top, top < fockspace.TOP_LEVEL_TOL, fockspace.residual(L, rho),
           abs(st["trace_err"]), st["herm_err"], st["min_eig"])
    out = cfg["out"]
    os.makedirs(out, exist_ok=True)
    dcfg = data_config("steady-state", cfg)
    emit_table(os.path.join(out, "steady-state.csv"), "steady-state", dcfg, schema, [row])
    write_manifest(out, "steady-state", dcfg, [{"name": "steady-state.csv", "schema": [list(s) for s in schema]}])
    return EXIT_OK


def mode_wigner(cfg):
    p, h, L, rho = _exact(cfg)
    m = h.n_max + 1
    block = cfg["block"]
    if block == "down":
        r = fockspace.spin_down_block(rho)
    elif block == "up":
        r = fockspace.spin_up_block(rho)
    elif block == "full":
        r = rho[:m, :m] + rho[m:, m:]
    else:
        raise ConfigError(f"unknown block {block!r}")
    xs = axis(cfg["x_range"], "x_range")
    grid = fockspace.wigner(r, xs, auto_expand=bool(cfg["auto_expand"]))
    peaks = fockspace.count_peaks(grid)
    out = cfg["out"]
    os.makedirs(out, exist_ok=True)
    dcfg = data_config("wigner", cfg)
    extra = {"peaks": [list(pk) for pk in peaks], "peak_count": len(peaks),
             "block_trace": float(np.trace(r).real), "integral": grid.integral()}
    schema = [("x_a", "float"), ("p_a", "float"), ("W", "float")]
    rows = ((grid.x[i], grid.p[j], grid.values[i, j]) for i in range(len(grid.x)) for j in range(len(grid.p)))
    emit_table(os.path.join(out, "wigner.csv"), "wigner", dcfg, schema, rows, extra)
    emit_table(os.path.join(out, "wigner-x.csv"), "wigner", dcfg, [("x_a", "float")], ((v,) for v in grid.x))
    emit_table(os.path.join(out, "wigner-p.csv"), "wigner", dcfg, [("p_a", "float")], ((v,) for v in grid.p))
    pk_schema = [("x_a", "float"), ("p_a", "float"), ("W", "float")]
    emit_table(os.path.join(out, "wigner-peaks.csv"), "wigner", dcfg, pk_schema, peaks)
    write_manifest(out, "wigner", dcfg, [
        {"name": "wigner.csv", "schema": [list(s) for s in schema]},
        {"name": "wigner-x.csv", "schema": [["x_a", "float"]]},
        {"name": "wigner-p.csv", "schema": [["p_a", "float"]]},
        {"name": "wigner-peaks.csv", "schema": [list(s) for s in pk_schema]}], **extra)
    return EXIT_OK


MODES = {
    "phase-diagram": mode_phase_diagram,
    "critical-lines": mode_critical_lines,
    "fluctuations": mode_fluctuations,
    "exponent-fit": mode_exponent_fit,
    "dynamics": mode_dynamics,
    "basin": mode_basin,
    "steady-state": mode_steady_state,
    "wigner": mode_wigner,
}


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        cfg = resolve_config(args)
        return MODES[args.mode](cfg)
    except (ConfigError, EtaZero, InsufficientDecades) as e:
        print(f"openrabi: config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except IoError as e:
        print(f"openrabi: io error: {e}", file=sys.stderr)
        return 1
    except OpenRabiError as e:
        print(f"openrabi: failed: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_PARTIAL


if __name__ == "__main__":
    sys.exit(main())
