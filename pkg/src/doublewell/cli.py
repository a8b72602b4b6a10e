"""Command-line front end: ``dw <subcommand>`` and ``dw sweep <subcommand>``.

Parameters live in a flat key space (``trap.s``, ``lambda``, ``N`` ...).  Values
come from an optional TOML file first and from flags second.  Every value is
validated before any computation starts; validation problems exit with status
2, numerical failures with status 1.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from . import __version__

log = logging.getLogger("doublewell")

try:  # Python 3.11+
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - exercised on 3.10
    import tomli as tomllib


class ValidationError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"invalid value for '{key}': {message}")
        self.key = key


# ---------------------------------------------------------------- parameters

def _floats(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    text = str(text).strip()
    return [float(v) for v in text.split(",") if v.strip()] if text else []


def _bool(v) -> bool:
    if isinstance(v, bool):
        return v
    s = str(v).lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _int(v) -> int:
    if isinstance(v, bool):
        raise ValueError("expected an integer")
    f = float(v)
    if not f.is_integer():
        raise ValueError(f"expected an integer, got {v!r}")
    return int(f)


@dataclass(frozen=True)
class Param:
    flag: str
    convert: Callable[[Any], Any]
    default: Any = None
    check: Callable[[Any], bool] | None = None
    rule: str = ""
    help: str = ""


PARAMS: dict[str, Param] = {
    "trap.s": Param("--s", float, 2.0, lambda v: v >= 2, "must be >= 2", "power-law exponent"),
    "trap.d": Param("--d", _int, 1, lambda v: v in (1, 2, 3), "must be 1, 2 or 3", "dimension"),
    "trap.L": Param("--L", float, 6.0, lambda v: v > 0, "must be positive", "well separation"),
    "kernel.shape": Param("--kernel", str, "Triangle",
                          lambda v: v in ("Triangle", "TruncatedGaussian"),
                          "must be Triangle or TruncatedGaussian", "kernel shape"),
    "kernel.w0": Param("--w0", float, 1.0, lambda v: v >= 0, "must be >= 0", "kernel peak"),
    "kernel.Rw": Param("--Rw", float, 0.5, lambda v: v > 0, "must be positive", "kernel range"),
    "grid.n": Param("--grid-n", _int, None, lambda v: v >= 16, "must be >= 16", "grid points"),
    "grid.halfwidth": Param("--halfwidth", float, None, lambda v: v > 0, "must be positive",
                            "box half-width"),
    "lambda": Param("--lambda", float, 1.0, lambda v: v >= 0, "must be >= 0", "coupling"),
    "mass": Param("--mass", float, 1.0, lambda v: v > 0, "must be positive", "L2 mass"),
    "tol": Param("--tol", float, None, lambda v: v > 0, "must be positive", "residual tolerance"),
    "perturb": Param("--perturb", _floats, None, lambda v: len(v) == 3,
                     "must be delta,center,ell", "strip perturbation"),
    "arrays": Param("--arrays", _bool, False, None, "", "include x and u in the output"),
    "L_list": Param("--L-list", _floats, [4.0, 5.0, 6.0, 7.0, 8.0],
                    lambda v: all(x > 0 for x in v), "entries must be positive", "separations"),
    "spacing": Param("--spacing", float, 0.025, lambda v: v > 0, "must be positive",
                     "grid spacing for double-well runs"),
    "modes": Param("--modes", _int, 32, lambda v: v >= 1, "must be >= 1", "Bogoliubov modes"),
    "N": Param("--N", _int, 100, lambda v: v >= 2, "must be >= 2", "particle number"),
    "e_minus": Param("--e-minus", float, 0.0, None, "", "left on-site energy"),
    "e_plus": Param("--e-plus", float, 0.0, None, "", "right on-site energy"),
    "T": Param("--T", float, -1.0, None, "", "tunneling energy"),
    "U": Param("--U", float, 1.0, lambda v: v >= 0, "must be >= 0", "on-site interaction"),
    "state": Param("--state", str, "ground", None, "",
                   "ground|fock|coherent|gaussian[:SIGMA]|squeezed:THETA:PHI"),
    "T_log_range": Param("--T-log-range", _floats, [-8.0, 6.0, 40.0],
                         lambda v: len(v) == 3 and v[2] >= 0 and float(v[2]).is_integer(),
                         "must be a,b,steps with integer steps >= 0", "log10 |T| range"),
    "epsilon": Param("--epsilon", float, 0.5, lambda v: 0 <= v < 1, "must lie in [0, 1)",
                     "criterion slack"),
    "sigma": Param("--sigma", float, None, lambda v: v > 0, "must be positive", "Gaussian width"),
    "n": Param("--n", _int, None, lambda v: v >= 0, "must be >= 0", "Fock index"),
}

MODEL_KEYS = ("trap.s", "trap.d", "kernel.shape", "kernel.w0", "kernel.Rw")
SWEEP_KEYS = {"L": "trap.L", "T": "T", "lambda": "lambda", "sigma": "sigma", "n": "n"}


def convert_value(key: str, value):
    if key not in PARAMS:
        raise ValidationError(key, "unknown key")
    p = PARAMS[key]
    try:
        v = p.convert(value)
    except (TypeError, ValueError) as exc:
        raise ValidationError(key, str(exc)) from None
    if isinstance(v, float) and not math.isfinite(v):
        raise ValidationError(key, "must be finite")
    if p.check is not None and not p.check(v):
        raise ValidationError(key, p.rule)
    return v


def flatten(table: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in table.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(flatten(v, key + "."))
        else:
            out[key] = v
    return out


def load_config(path: str) -> dict:
    """Read a TOML file (or JSON, by extension) into a flat key map."""
    try:
        with open(path, "rb") as fh:
            data = json.load(fh) if path.endswith(".json") else tomllib.load(fh)
    except OSError as exc:
        raise ValidationError("config", f"cannot read {path}: {exc}") from None
    except (tomllib.TOMLDecodeError, json.JSONDecodeError) as exc:
        raise ValidationError("config", f"bad config in {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ValidationError("config", f"{path} must hold a table of parameters")
    return flatten(data)


# ---------------------------------------------------------------- targets

def _model(params):
    from .model import InteractionKernel, TrapSpec

    trap = TrapSpec("SingleWell", params["trap.s"], 0.0, params["trap.d"])
    kernel = InteractionKernel(params["kernel.shape"], params["kernel.w0"], params["kernel.Rw"])
    return trap, kernel


def _grid(params, trap, kernel, lam, n_default):
    from .hartree import default_grid

    n = params.get("grid.n") or n_default
    return default_grid(trap, kernel, lam, params.get("mass", 1.0), n, params.get("grid.halfwidth"))


def run_hartree(params) -> dict:
    from .hartree import PerturbationSpec, chemical_potential, minimize_hartree, solve_perturbed

    trap, kernel = _model(params)
    lam = params["lambda"]
    grid = _grid(params, trap, kernel, lam, 4096)
    out: dict[str, Any]
    if params.get("perturb"):
        d, c, ell = params["perturb"]
        if params["mass"] != 1.0:
            raise ValidationError("perturb", "perturbed solves are at unit mass")
        cmp = solve_perturbed(trap, PerturbationSpec(d, c, ell), kernel, lam, grid, params["tol"])
        sol = cmp.solution
        out = {"delta_e": cmp.delta_e, "l2_distance": cmp.l2_distance}
    else:
        sol = minimize_hartree(trap, kernel, lam, params["mass"], grid, params["tol"])
        out = {}
    out.update({"e_H": sol.e_H, "mu": chemical_potential(sol), "residual": sol.residual,
                "iterations": sol.iterations})
    if params.get("arrays"):
        out["x"] = sol.grid.x.tolist()
        out["u"] = sol.u.values.tolist()
    return out


def run_tunnel(params) -> list[dict]:
    from .tunneling import tunnel_report

    _, kernel = _model(params)
    spacing = params["spacing"]
    n, hw = params.get("grid.n"), params.get("grid.halfwidth")
    if n and hw:
        spacing = 2.0 * hw / (n - 1)
    rows = []
    for L in params["L_list"]:
        rows.append(tunnel_report(L, params["trap.s"], kernel, params["lambda"], spacing,
                                  min(params["tol"] or 1e-12, 1e-12), hw).as_row())
    return rows


def run_bog(params) -> dict:
    from .bogoliubov import solve_bogoliubov

    trap, kernel = _model(params)
    from .model import Grid1D

    grid = Grid1D(params.get("grid.n") or 2048, params.get("grid.halfwidth") or 12.0)
    run = solve_bogoliubov(trap, kernel, params["lambda"], params["modes"], grid, params["tol"])
    return {"e_B": run.e_B, "frequencies": run.result.frequencies.tolist(),
            "tr_gamma": run.density.tr_gamma, "tr_V_rho": run.density.tr_V_rho,
            "quasifree_defect": run.result.quasifree_defect}


def _parse_state(params):
    spec = params["state"]
    parts = spec.split(":")
    kind = parts[0]
    N = params["N"]
    try:
        if kind == "ground":
            return kind, {}
        if kind == "fock":
            n0 = params.get("n")
            if n0 is None:
                if N % 2:
                    raise ValidationError("N", "fock state at N/2 needs even N")
                n0 = N // 2
            if n0 > N:
                raise ValidationError("n", f"must not exceed N={N}")
            return kind, {"n0": n0}
        if kind == "coherent":
            return kind, {}
        if kind == "gaussian":
            sigma = float(parts[1]) if len(parts) > 1 else params.get("sigma")
            if sigma is None or not sigma > 0:
                raise ValidationError("sigma", "gaussian state needs sigma > 0")
            return kind, {"sigma": sigma}
        if kind == "squeezed" and len(parts) == 3:
            return kind, {"theta": float(parts[1]), "phi": float(parts[2])}
    except ValueError as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError("state", str(exc)) from None
    raise ValidationError("state", f"unrecognised state {spec!r}")


def validate_bh(params):
    if params["N"] % 2:
        raise ValidationError("N", "the two-mode model needs even N")
    _parse_state(params)


def run_bh(params) -> dict:
    from .twomode import TwoModeParams, classify_regime, ground_state, make_state, observables

    p = TwoModeParams(params["N"], params["e_minus"], params["e_plus"], params["T"], params["U"])
    kind, kw = _parse_state(params)
    if kind == "ground":
        _, st = ground_state(p)
    else:
        st = make_state(kind, p.N, **kw)
    obs = observables(st, p)
    return {"energy": obs.energy, "mean_N_minus": obs.mean_N_minus,
            "var_N_minus": obs.var_N_minus, "Jx": obs.Jx, "Jy": obs.Jy, "Jz": obs.Jz,
            "var_Jy": obs.var_Jy, "var_Jz": obs.var_Jz,
            "uncertainty_product_gap": obs.uncertainty_product_gap,
            "regime": classify_regime(p).regime.value}


def validate_bh_scan(params):
    if params["N"] % 2:
        raise ValidationError("N", "the two-mode model needs even N")


def run_bh_scan(params) -> list[dict]:
    from .twomode import scan_point

    a, b, steps = params["T_log_range"]
    Ts = -np.logspace(a, b, int(steps)) if steps else []
    return [scan_point(params["N"], params["U"], float(T)).as_row() for T in Ts]


def _memo(params):
    from .assembly import CouplingMemo

    trap, kernel = _model(params)
    return CouplingMemo(trap, kernel, params["lambda"], params["modes"])


def run_split(params) -> list[dict]:
    from .assembly import even_split_check

    tab = even_split_check(params["N"], params["lambda"], _memo(params), check=False)
    return [{"n": n, "E_loc": e} for n, e in tab.entries]


def run_theorem(params) -> dict:
    from .assembly import theorem_energy

    th = theorem_energy(params["N"], params["lambda"], _memo(params))
    return {"energy_per_particle": th.energy_per_particle, "e_H_term": th.e_H_term,
            "e_B_term": th.e_B_term, "Delta_N": th.Delta_N}


def validate_theorem(params):
    if params["N"] % 2:
        raise ValidationError("N", "the energy formula assumes even N")


def validate_compare(params):
    if params["N"] % 2 or params["N"] < 4:
        raise ValidationError("N", "comparison needs even N >= 4")


def run_compare(params) -> dict:
    from .assembly import loc_vs_dloc_report
    from .model import TrapSpec

    _, kernel = _model(params)
    trap = TrapSpec("DoubleWell", params["trap.s"], params["trap.L"], params["trap.d"])
    rep = loc_vs_dloc_report(params["N"], params["lambda"], trap, kernel, params["epsilon"],
                             params["spacing"])
    return rep.as_dict()


@dataclass(frozen=True)
class Target:
    name: str
    keys: tuple[str, ...]
    run: Callable[[dict], Any]
    columns: tuple[str, ...]
    rows: bool = False
    validate: Callable[[dict], None] | None = None
    help: str = ""
    aliases: dict = field(default_factory=dict)


TARGETS: dict[str, Target] = {t.name: t for t in [
    Target("hartree", MODEL_KEYS + ("lambda", "mass", "grid.n", "grid.halfwidth", "tol",
                                    "perturb", "arrays"),
           run_hartree, ("e_H", "mu", "residual", "iterations"),
           help="minimize the Hartree functional in a single well"),
    Target("tunnel", MODEL_KEYS + ("lambda", "L_list", "spacing", "grid.n", "grid.halfwidth",
                                   "tol"), run_tunnel,
           ("L", "overlap", "T", "two_route_gap", "agmon", "log_ratio"), rows=True,
           help="tunneling energy and overlap over a list of separations",
           aliases={"trap.L": "L_list"}),
    Target("bog", MODEL_KEYS + ("lambda", "modes", "grid.n", "grid.halfwidth", "tol"), run_bog,
           ("e_B", "frequencies", "tr_gamma", "tr_V_rho", "quasifree_defect"),
           help="Bogoliubov ground-state energy and quasi-free state"),
    Target("bh", ("N", "e_minus", "e_plus", "T", "U", "state", "sigma", "n"), run_bh,
           ("energy", "mean_N_minus", "var_N_minus", "Jx", "Jy", "Jz", "var_Jy", "var_Jz",
            "uncertainty_product_gap", "regime"),
           validate=validate_bh, help="two-mode Bose-Hubbard state statistics"),
    Target("bh-scan", ("N", "U", "T_log_range"), run_bh_scan,
           ("T", "ratio_T_over_U", "var_Nminus", "Jx", "energy", "regime"), rows=True,
           validate=validate_bh_scan, help="ground-state crossover scan in |T|"),
    Target("split", MODEL_KEYS + ("N", "lambda", "modes"), run_split, ("n", "E_loc"), rows=True,
           help="split energies E_loc(n, N - n)"),
    Target("theorem", MODEL_KEYS + ("N", "lambda", "modes"), run_theorem,
           ("energy_per_particle", "e_H_term", "e_B_term", "Delta_N"), validate=validate_theorem,
           help="leading-order energy per particle"),
    Target("compare", MODEL_KEYS + ("N", "lambda", "trap.L", "epsilon", "spacing"), run_compare,
           ("E_loc", "E_dloc", "T", "U", "winner", "criterion_pass"),
           validate=validate_compare, help="localized versus delocalized trial energies"),
]}


def resolve_params(target: Target, raw: dict) -> dict:
    """Convert, range-check and complete a flat parameter map for ``target``."""
    params = {}
    raw = dict(raw)
    for key, alias in target.aliases.items():
        # e.g. a scalar trap.L in a shared config becomes a one-element L_list
        if key in raw:
            value = raw.pop(key)
            raw.setdefault(alias, value if isinstance(value, (list, tuple)) else [value])
    for key, value in raw.items():
        if key not in target.keys:
            raise ValidationError(key, f"not a parameter of '{target.name}'")
        params[key] = convert_value(key, value) if value is not None else None
    for key in target.keys:
        if params.get(key) is None:
            params[key] = PARAMS[key].default
    if target.validate is not None:
        target.validate(params)
    _check_model(target, params)
    return params


def _check_model(target: Target, params: dict):
    from .model import Grid1D, InteractionKernel

    if "kernel.shape" in params:
        try:
            k = InteractionKernel(params["kernel.shape"], params["kernel.w0"], params["kernel.Rw"])
        except ValueError as exc:
            raise ValidationError("kernel", str(exc)) from None
        if params.get("grid.n") and params.get("grid.halfwidth"):
            g = Grid1D(params["grid.n"], params["grid.halfwidth"])
            if k.range_Rw < g.spacing:
                raise ValidationError("kernel.Rw", f"below the grid spacing {g.spacing:.4g}")
        if params.get("spacing") and k.range_Rw < params["spacing"]:
            raise ValidationError("kernel.Rw", "below the grid spacing")
        if k.shape.value == "TruncatedGaussian":
            from .model import kernel_fourier_check

            g = Grid1D(params.get("grid.n") or 2048, params.get("grid.halfwidth") or 10.0)
            if not kernel_fourier_check(k, g).passed:
                raise ValidationError("kernel.shape", "kernel fails the positive-type test")
    if target.name == "hartree" and params.get("perturb"):
        from .hartree import PerturbationSpec

        try:
            PerturbationSpec(*params["perturb"])
        except ValueError as exc:
            raise ValidationError("perturb", str(exc)) from None


# ---------------------------------------------------------------- output

def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return format(v, ".17g") if math.isfinite(v) else "null"
    raise TypeError(type(v))


def dump_json(obj, indent: int = 0) -> str:
    """Deterministic JSON: sorted keys, 17 significant digits for every float."""
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{pad}{dump_json(str(k))}: {dump_json(obj[k], indent + 1)}' for k in sorted(obj)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple)) for v in obj):
            return "[" + ", ".join(dump_json(v) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + dump_json(v, indent + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, str):
        return json.dumps(obj)
    if obj is None:
        return "null"
    return _fmt(obj)


def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, (list, tuple)):
        return ";".join(_csv_cell(x) for x in v)
    return _fmt(v)


def dump_csv(columns, rows) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(columns)
    for row in rows:
        wr.writerow([_csv_cell(row.get(c)) for c in columns])
    return buf.getvalue()


def header(subcommand: str) -> dict:
    return {"tool": "dw", "version": __version__, "subcommand": subcommand}


def render(target: Target, result, out: str, subcommand: str | None = None) -> str:
    sub = subcommand or target.name
    if out == "csv":
        rows = result if target.rows else [result]
        cols = list(target.columns)
        if not target.rows:
            cols += [k for k in result if k not in cols]
        return dump_csv(cols, rows)
    if target.rows:
        payload = {"rows": result}
    else:
        payload = dict(result)
    payload["header"] = header(sub)
    return dump_json(payload) + "\n"


# ---------------------------------------------------------------- sweeps

def _run_point(name: str, params: dict):
    target = TARGETS[name]
    try:
        res = target.run(params)
    except ValidationError as exc:
        return "error: " + str(exc), None
    except Exception as exc:  # per-point failures become a status, the sweep goes on
        return f"error: {type(exc).__name__}: {exc}", None
    return "ok", res


def _map_points(name: str, plist: list[dict], jobs: int):
    if jobs <= 1 or len(plist) <= 1:
        return [_run_point(name, p) for p in plist]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        futs = [ex.submit(_run_point, name, p) for p in plist]
        return [f.result() for f in futs]


def sweep_points(target: Target, base: dict, sweep: dict, zipped: bool) -> tuple[list, list]:
    """List of (labels, params) for every sweep point, in deterministic order."""
    keys = list(sweep)
    if zipped and keys:
        lens = {len(sweep[k]) for k in keys}
        if len(lens) > 1:
            raise ValidationError("sweep", "zipped sweep lists must have equal length")
        combos = list(zip(*(sweep[k] for k in keys)))
    else:
        # with no sweep keys the product has one empty combination: a single point
        combos = list(itertools.product(*(sweep[k] for k in keys)))
    labels, plist = [], []
    for combo in combos:
        raw = dict(base)
        for k, v in zip(keys, combo):
            pkey = SWEEP_KEYS[k]
            if pkey in target.aliases:
                raw[target.aliases[pkey]] = [v]
            else:
                raw[pkey] = v
        labels.append(dict(zip(keys, combo)))
        plist.append(raw)
    return labels, plist


def run_sweep(target: Target, base: dict, sweep: dict, zipped: bool = False, jobs: int = 1):
    for k in sweep:
        if k not in SWEEP_KEYS:
            raise ValidationError(k, f"not sweepable; choose from {sorted(SWEEP_KEYS)}")
        pkey = SWEEP_KEYS[k]
        if pkey not in target.keys and pkey not in target.aliases:
            raise ValidationError(k, f"not a parameter of '{target.name}'")
    labels, raws = sweep_points(target, base, sweep, zipped)
    plist = [resolve_params(target, r) for r in raws]  # validate every point up front
    results = _map_points(target.name, plist, jobs)
    columns = ["index"] + list(sweep) + [c for c in target.columns if c not in sweep] + ["status"]
    rows = []
    for i, (lab, (status, res)) in enumerate(zip(labels, results)):
        base_row = {"index": i, **lab, "status": status}
        if res is None:
            rows.append(base_row)
        elif target.rows:
            for r in res:
                rows.append({**r, **base_row})
        else:
            rows.append({**res, **base_row})
    return columns, rows


def _parse_sweep_arg(text: str) -> tuple[str, list]:
    if "=" not in text:
        raise ValidationError("sweep", f"expected KEY=v1,v2,..., got {text!r}")
    k, v = text.split("=", 1)
    return k.strip(), _floats(v)


# ---------------------------------------------------------------- argparse

def _add_target_args(p: argparse.ArgumentParser, target: Target):
    for key in target.keys:
        spec = PARAMS[key]
        p.add_argument(spec.flag, dest=key, default=None, help=spec.help)
    p.add_argument("--config", default=None, help="TOML file with parameters")
    p.add_argument("--out", choices=("json", "csv"), default=None, help="output format")
    p.add_argument("--output", default=None, help="output path (default: stdout)")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers for sweeps")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dw", description=__doc__.splitlines()[0], allow_abbrev=False)
    ap.add_argument("--version", action="version", version=f"dw {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for t in TARGETS.values():
        _add_target_args(sub.add_parser(t.name, help=t.help, allow_abbrev=False), t)
    sw = sub.add_parser("sweep", help="run a subcommand over lists of parameter values")
    swsub = sw.add_subparsers(dest="target", required=True)
    for t in TARGETS.values():
        p = swsub.add_parser(t.name, help=t.help, allow_abbrev=False)
        _add_target_args(p, t)
        p.add_argument("--sweep", action="append", default=[], metavar="KEY=V1,V2",
                       help=f"sweep values; keys: {', '.join(SWEEP_KEYS)}")
        p.add_argument("--zip", action="store_true", help="zip sweep lists instead of product")
    return ap


def _setup_logging():
    level = os.environ.get("DW_LOG")
    if not level:
        return
    logging.basicConfig(stream=sys.stderr, level=getattr(logging, level.upper(), logging.INFO),
                        format="%(levelname)s %(name)s: %(message)s")


def _numerical_errors():
    from .assembly import AssemblyError
    from .bogoliubov import BogoliubovError
    from .hartree import HartreeError
    from .tunneling import TunnelingError

    return (HartreeError, TunnelingError, BogoliubovError, AssemblyError, ArithmeticError,
            np.linalg.LinAlgError)


_VALUE_FLAGS = {p.flag for p in PARAMS.values()} | {"--config", "--output", "--sweep"}


def _join_negative_values(argv: list[str]) -> list[str]:
    """Turn ``--flag -8,5`` into ``--flag=-8,5`` so argparse keeps negative values."""
    out: list[str] = []
    i = 0
    while i < len(argv):
        a = argv[i]
        if a in _VALUE_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-") \
                and argv[i + 1][1:2] in set("0123456789.,"):
            out.append(f"{a}={argv[i + 1]}")
            i += 2
        else:
            out.append(a)
            i += 1
    return out


def main(argv=None) -> int:
    _setup_logging()
    ap = build_parser()
    args = ap.parse_args(_join_negative_values(list(sys.argv[1:] if argv is None else argv)))
    is_sweep = args.command == "sweep"
    name = args.target if is_sweep else args.command
    target = TARGETS[name]
    try:
        raw: dict = {}
        sweep: dict = {}
        zipped = bool(getattr(args, "zip", False))
        if args.config:
            for k, v in load_config(args.config).items():
                if k.startswith("sweep."):
                    sweep[k[len("sweep."):]] = _floats(v)
                elif k == "zip":
                    zipped = _bool(v)
                else:
                    raw[k] = v
        for key in target.keys:
            v = getattr(args, key)
            if v is not None:
                raw[key] = v
        for s in getattr(args, "sweep", []) or []:
            k, vals = _parse_sweep_arg(s)
            sweep[k] = vals
        if args.jobs < 1:
            raise ValidationError("jobs", "must be >= 1")
        if is_sweep:
            if "trap.L" in target.aliases and "L" in sweep:
                raw.pop(target.aliases["trap.L"], None)
            if "n" in sweep:
                sweep["n"] = [_int(v) for v in sweep["n"]]
            columns, rows = run_sweep(target, raw, sweep, zipped, args.jobs)
            out = args.out or "csv"
            if out == "csv":
                text = dump_csv(columns, rows)
            else:
                text = dump_json({"rows": rows, "header": header(f"sweep {name}")}) + "\n"
        else:
            params = resolve_params(target, raw)
            result = target.run(params)
            out = args.out or ("csv" if target.rows else "json")
            text = render(target, result, out)
    except ValidationError as exc:
        print(f"dw: {exc}", file=sys.stderr)
        return 2
    except _numerical_errors() as exc:
        print(f"dw: numerical failure: {exc}", file=sys.stderr)
        return 1
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
