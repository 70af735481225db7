"""Scenario configuration: TOML parsing, validation, defaults, presets for
initial data and loads, and a deterministic effective-config echo.

The echo is a fixed point: parsing the echoed text reproduces the same
effective configuration byte for byte.
"""

import copy
import json

import numpy as np

try:
    import tomllib as _toml
except ModuleNotFoundError:  # Python < 3.11
    import tomli as _toml

from . import dynamics, galerkin, materials, regularization
from .errors import ParseError, ValidationError

DEFAULTS = {
    "scenario": {"name": "scenario", "material": "neo_hookean_thermal",
                 "bc_mode": "Periodic", "t_end": 0.1, "seed": 0},
    "material": {"params": {}},
    "domain": {"lengths": [1.0, 1.0]},
    "resolution": {"k": 4, "n": 32, "quad_factor": 2},
    "time": {"dt": 1e-3, "scheme": "rk4", "controller": "fixed",
             "rtol": 1e-6, "dt_min": 1e-8},
    "regularization": {"lambda": 0.05, "epsilon": 0.0, "nu": 1e-4,
                       "nu_flat": 1.0, "p": 3.0, "q": 3.0},
    "initial": {"rho_R": 1.0,
                "theta0": {"kind": "constant", "value": 1.0},
                "velocity": {"kind": "rest"},
                "deformation": {"kind": "identity"}},
    "loads": {"gravity": [0.0, 0.0],
              "traction": {"kind": "none"},
              "heat_flux": {"kind": "none"}},
    "output": {"directory": "out", "ledger_every": 1, "snapshot_every": 0,
               "vtk": False},
}

# keys whose value is a free-form preset table (validated by the preset
# builders rather than the schema walk)
_PRESET_KEYS = {("initial", "theta0"), ("initial", "velocity"),
                ("initial", "deformation"), ("loads", "traction"),
                ("loads", "heat_flux"), ("material", "params")}


def _merge(defaults, user, path=()):
    out = copy.deepcopy(defaults)
    for key, val in user.items():
        here = path + (key,)
        if key not in defaults:
            raise ValidationError(f"unknown key '{'.'.join(here)}'")
        if here in _PRESET_KEYS:
            if not isinstance(val, dict) and here != ("initial", "theta0"):
                raise ValidationError(f"'{'.'.join(here)}' must be a table")
            out[key] = copy.deepcopy(val) if isinstance(val, dict) else val
        elif isinstance(defaults[key], dict):
            if not isinstance(val, dict):
                raise ValidationError(f"'{'.'.join(here)}' must be a table")
            out[key] = _merge(defaults[key], val, here)
        else:
            out[key] = copy.deepcopy(val)
    return out


def apply_overrides(cfg, overrides):
    """Apply dotted-key overrides ('regularization.lambda=0.02')."""
    for item in overrides:
        if "=" not in item:
            raise ValidationError(f"override '{item}' is not KEY=VALUE")
        key, _, raw = item.partition("=")
        try:
            val = _toml.loads(f"v = {raw.strip()}")["v"]
        except _toml.TOMLDecodeError:
            val = raw.strip()
        parts = key.strip().split(".")
        # schema walk against DEFAULTS; keys inside preset tables are free-form
        probe, free = DEFAULTS, False
        for i, p in enumerate(parts):
            if free:
                continue
            if not isinstance(probe, dict) or p not in probe:
                raise ValidationError(f"unknown key '{key.strip()}'")
            if tuple(parts[:i + 1]) in _PRESET_KEYS:
                free = True
            else:
                probe = probe[p]
        node = cfg
        for p in parts[:-1]:
            if not isinstance(node.get(p), dict):
                node[p] = {}
            node = node[p]
        node[parts[-1]] = val
    return cfg


def parse_config(text, overrides=()):
    """Parse scenario TOML into (effective-config dict, Scenario)."""
    try:
        user = _toml.loads(text)
    except _toml.TOMLDecodeError as exc:
        raise ParseError(str(exc)) from exc
    cfg = _merge(DEFAULTS, user)
    cfg = apply_overrides(cfg, overrides)
    _validate(cfg)
    return cfg, build_scenario(cfg)


def _validate(cfg):
    res = cfg["resolution"]
    if not (1 <= res["k"] <= 64):
        raise ValidationError("resolution.k must satisfy 1 <= k <= 64")
    if not (4 <= res["n"] <= 512):
        raise ValidationError("resolution.n must satisfy 4 <= n <= 512")
    if res["n"] % res["quad_factor"] != 0:
        raise ValidationError("resolution.n must be divisible by quad_factor")
    if cfg["scenario"]["bc_mode"] not in ("Periodic", "SlipRectangle"):
        raise ValidationError("scenario.bc_mode must be Periodic or SlipRectangle")
    if cfg["scenario"]["material"] not in materials.registry:
        known = ", ".join(sorted(materials.registry))
        raise ValidationError(
            f"unknown material '{cfg['scenario']['material']}' (known: {known})")
    if cfg["time"]["scheme"] not in ("rk4", "euler", "imex1"):
        raise ValidationError("time.scheme must be rk4, euler, or imex1")
    if cfg["time"]["controller"] not in ("fixed", "adaptive"):
        raise ValidationError("time.controller must be fixed or adaptive")
    th = cfg["initial"]["theta0"]
    if isinstance(th, dict):
        base = th.get("value", th.get("base", 1.0))
        amp = th.get("amplitude", 0.0)
        if base < 0.0 or base - abs(amp) < 0.0:
            raise ValidationError("initial.theta0 must be >= 0 everywhere")
    elif th < 0.0:
        raise ValidationError("initial.theta0 must be >= 0 everywhere")
    trac = cfg["loads"]["traction"]
    if trac.get("kind", "none") not in ("none", "tangential_shear"):
        raise ValidationError(
            "loads.traction.kind must be 'none' or 'tangential_shear' "
            "(traction must be tangential: f.n = 0)")
    if trac.get("kind") == "tangential_shear" \
            and cfg["scenario"]["bc_mode"] != "SlipRectangle":
        raise ValidationError("traction requires bc_mode = SlipRectangle")
    try:
        regularization.RegularizationParams(
            lam=cfg["regularization"]["lambda"],
            epsilon=cfg["regularization"]["epsilon"],
            nu=cfg["regularization"]["nu"],
            nu_flat=cfg["regularization"]["nu_flat"],
            p=cfg["regularization"]["p"], q=cfg["regularization"]["q"])
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc


# ---------------------------------------------------------------------------
# presets


def _velocity_preset(spec, lengths):
    kind = spec.get("kind", "rest")
    Lx, Ly = lengths
    A = float(spec.get("amplitude", 0.05))
    m = int(spec.get("mode", 1))
    if kind == "rest":
        return None
    if kind == "shear_wave":
        return lambda pts: np.stack(
            [A * np.sin(2.0 * np.pi * m * pts[..., 1] / Ly),
             np.zeros_like(pts[..., 0])], axis=-1)
    if kind == "vortex":
        def v(pts):
            x, y = pts[..., 0], pts[..., 1]
            return A * np.stack(
                [np.sin(2 * np.pi * m * x / Lx) * np.cos(2 * np.pi * m * y / Ly),
                 -np.cos(2 * np.pi * m * x / Lx) * np.sin(2 * np.pi * m * y / Ly)],
                axis=-1)
        return v
    raise ValidationError(f"unknown initial.velocity.kind '{kind}'")


def _deformation_preset(spec, lengths):
    kind = spec.get("kind", "identity")
    Lx, Ly = lengths
    A = float(spec.get("amplitude", 0.05))
    m = int(spec.get("mode", 1))
    if kind == "identity":
        return None
    if kind == "shear":
        def F(pts):
            out = np.broadcast_to(np.eye(2), pts.shape[:-1] + (2, 2)).copy()
            out[..., 0, 1] += A * np.sin(2 * np.pi * m * pts[..., 1] / Ly)
            return out
        return F
    if kind == "compressed":
        # near-uniform compression dimple: drives det F toward the cut-off
        def F(pts):
            x, y = pts[..., 0], pts[..., 1]
            s = 1.0 - A * np.sin(2 * np.pi * m * x / Lx) * np.sin(2 * np.pi * m * y / Ly)
            out = np.zeros(pts.shape[:-1] + (2, 2))
            out[..., 0, 0] = s
            out[..., 1, 1] = s
            return out
        return F
    raise ValidationError(f"unknown initial.deformation.kind '{kind}'")


def _theta_preset(spec, lengths):
    if not isinstance(spec, dict):
        return float(spec)
    kind = spec.get("kind", "constant")
    Lx, Ly = lengths
    if kind == "constant":
        return float(spec.get("value", 1.0))
    if kind == "cosine_bump":
        base = float(spec.get("base", spec.get("value", 1.0)))
        A = float(spec.get("amplitude", 0.1))
        m = int(spec.get("mode", 1))
        return lambda pts: base + A * np.cos(2 * np.pi * m * pts[..., 0] / Lx) \
            * np.cos(2 * np.pi * m * pts[..., 1] / Ly)
    raise ValidationError(f"unknown initial.theta0.kind '{kind}'")


def build_scenario(cfg):
    sc_tab, res, tim = cfg["scenario"], cfg["resolution"], cfg["time"]
    lengths = tuple(float(x) for x in cfg["domain"]["lengths"])
    material = materials.registry[sc_tab["material"]](**cfg["material"]["params"])
    reg = cfg["regularization"]
    rp = regularization.RegularizationParams(
        lam=reg["lambda"], epsilon=reg["epsilon"], nu=reg["nu"],
        nu_flat=reg["nu_flat"], p=reg["p"], q=reg["q"])
    loads = galerkin.Loads()
    gvec = np.asarray(cfg["loads"]["gravity"], dtype=float)
    if np.any(gvec != 0.0):
        loads.g = lambda pts, t: np.broadcast_to(gvec, pts.shape[:-1] + (2,))
    trac = cfg["loads"]["traction"]
    if trac.get("kind") == "tangential_shear":
        amp = float(trac.get("amplitude", 0.1))

        def f(pts, normals, t):
            # rotate each outward normal by 90 degrees: exactly tangential
            tang = np.stack([-normals[..., 1], normals[..., 0]], axis=-1)
            return amp * tang
        loads.f = f
    hf = cfg["loads"]["heat_flux"]
    if hf.get("kind", "none") == "cooling":
        rate = float(hf.get("rate", 0.1))
        target = float(hf.get("target", 1.0))
        loads.h = lambda theta_b: rate * (target - theta_b)
    elif hf.get("kind", "none") != "none":
        raise ValidationError(f"unknown loads.heat_flux.kind '{hf.get('kind')}'")

    return dynamics.Scenario(
        material=material, rp=rp, domain=galerkin.Domain(lengths),
        bc_mode=sc_tab["bc_mode"], k=int(res["k"]), n_col=int(res["n"]),
        quad_factor=int(res["quad_factor"]), loads=loads,
        rho_R=float(cfg["initial"]["rho_R"]),
        F0=_deformation_preset(cfg["initial"]["deformation"], lengths),
        v0=_velocity_preset(cfg["initial"]["velocity"], lengths),
        theta0=_theta_preset(cfg["initial"]["theta0"], lengths),
        scheme=tim["scheme"], dt=float(tim["dt"]), t_end=float(sc_tab["t_end"]),
        dt_controller=tim["controller"], rtol=float(tim["rtol"]),
        dt_min=float(tim["dt_min"]), ledger_every=int(cfg["output"]["ledger_every"]),
        seed=int(sc_tab["seed"]), name=sc_tab["name"])


# ---------------------------------------------------------------------------
# deterministic echo


def _toml_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, float):
        return repr(float(v))
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise TypeError(f"cannot echo value {v!r}")


def echo_config(cfg):
    """Serialize the effective config as sorted TOML (round-trip stable)."""
    lines = []

    def emit(table, path):
        scalars = {k: v for k, v in sorted(table.items()) if not isinstance(v, dict)}
        subtables = {k: v for k, v in sorted(table.items()) if isinstance(v, dict)}
        if scalars or (path and not subtables):
            if path:
                lines.append(f"[{'.'.join(path)}]")
            for k, v in scalars.items():
                key = k if k.isidentifier() else json.dumps(k)
                lines.append(f"{key} = {_toml_value(v)}")
            lines.append("")
        for k, v in subtables.items():
            emit(v, path + (k,))

    emit(cfg, ())
    return "\n".join(lines).rstrip() + "\n"
