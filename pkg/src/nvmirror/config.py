"""Run configuration: YAML file merged over the shipped defaults."""
from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from . import materials as mat
from .collection import CollectionGeometry
from .dipole import GEOMETRIC_WEIGHTS, REPORTED_WEIGHTS, EmitterEnvironment, OrientationWeights
from .exceptions import NVMirrorError, ParseError, ValidationError
from .stratified import Layer, LayerStack

__all__ = ["ConfigError", "RunConfig", "load_config", "default_config_text", "grid"]


class ConfigError(NVMirrorError, ValueError):
    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


def default_config_text():
    return (resources.files("nvmirror.data") / "default_config.yaml").read_text(encoding="utf-8")


def _merge(base, override):
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def grid(spec, field):
    """``{start, stop, step}`` to an inclusive, drift-free grid."""
    try:
        start, stop, step = (float(spec[k]) for k in ("start", "stop", "step"))
    except (KeyError, TypeError, ValueError):
        raise ConfigError(field, "needs numeric start, stop and step") from None
    if not step > 0:
        raise ConfigError(f"{field}.step", "must be > 0")
    if stop < start:
        raise ConfigError(field, "stop must be >= start")
    n = int(np.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(n)


def _material(name, spec, base_dir):
    field = f"materials.{name}"
    if not isinstance(spec, dict):
        raise ConfigError(field, "must be a mapping with 'n' (and optional 'k') or 'table'")
    if "table" in spec:
        src = spec["table"]
        if src is None or src == "":
            raise ConfigError(f"{field}.table", "no table path given")
        src = str(src)
        try:
            if src.startswith("builtin:"):
                fname = src[len("builtin:"):]
                with resources.as_file(resources.files("nvmirror.data") / fname) as p:
                    if not p.exists():
                        raise ConfigError(f"{field}.table", f"no bundled table named {fname!r}")
                    table = mat.load_dispersion_table(p)
            else:
                path = Path(src)
                if not path.is_absolute():
                    path = base_dir / path
                if not path.exists():
                    raise ConfigError(f"{field}.table", f"file not found: {path}")
                table = mat.load_dispersion_table(path)
        except (ParseError, ValidationError) as exc:
            raise ConfigError(f"{field}.table", str(exc)) from None
        return mat.OpticalMaterial(name, mat.Tabulated(table))
    try:
        return mat.constant(name, float(spec["n"]), float(spec.get("k", 0.0)))
    except KeyError:
        raise ConfigError(field, "needs 'n' or 'table'") from None
    except (TypeError, ValueError, ValidationError) as exc:
        raise ConfigError(field, str(exc)) from None


@dataclass
class RunConfig:
    raw: dict
    materials: dict
    env: EmitterEnvironment
    geometry: CollectionGeometry
    normalization: str
    reference: str
    lambda_grid: np.ndarray
    d_grid: np.ndarray
    output_dir: Path
    image: bool
    workers: int
    base_dir: Path

    @property
    def fingerprint(self):
        canon = json.dumps(self.raw, sort_keys=True, separators=(",", ":"), default=str)
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]

    def environment(self, gap):
        return self.env.with_stack(self.env.upward_stack.with_thickness(0, float(gap)))


def _weights(spec):
    if spec == "reported":
        return REPORTED_WEIGHTS
    if spec == "geometric":
        return GEOMETRIC_WEIGHTS
    try:
        a_par, a_perp = (float(x) for x in spec)
        return OrientationWeights(a_par, a_perp)
    except (TypeError, ValueError, ValidationError) as exc:
        raise ConfigError("emitter.weights", f"expected reported, geometric or [a_par, a_perp] ({exc})") from None


def build_config(raw, base_dir=Path(".")):
    base_dir = Path(base_dir)
    mats_raw = raw.get("materials") or {}
    if not isinstance(mats_raw, dict):
        raise ConfigError("materials", "must be a mapping")
    materials = {name: _material(name, spec, base_dir) for name, spec in mats_raw.items()}
    materials.setdefault("ideal_mirror", mat.IDEAL_MIRROR)

    stack_raw = raw.get("stack") or {}

    def lookup(key, field):
        name = stack_raw.get(key)
        if name not in materials:
            raise ConfigError(field, f"unknown material {name!r}")
        return materials[name]

    host = lookup("host", "stack.host")
    gap = lookup("gap", "stack.gap")
    mirror = lookup("mirror", "stack.mirror")
    if host is mat.IDEAL_MIRROR or not host.is_lossless:
        raise ConfigError("stack.host", "host must be a lossless constant-index material")
    if gap is mat.IDEAL_MIRROR:
        raise ConfigError("stack.gap", "the gap cannot be the ideal mirror")
    # placeholder thickness; maps replace it cell by cell
    layers = [Layer(gap, 1000.0)]
    for i, item in enumerate(stack_raw.get("layers") or []):
        field = f"stack.layers[{i}]"
        try:
            name, t = item["material"], float(item["thickness_nm"])
        except (KeyError, TypeError, ValueError):
            raise ConfigError(field, "needs 'material' and numeric 'thickness_nm'") from None
        if name not in materials or materials[name] is mat.IDEAL_MIRROR:
            raise ConfigError(f"{field}.material", f"unknown layer material {name!r}")
        try:
            layers.append(Layer(materials[name], t))
        except ValidationError as exc:
            raise ConfigError(f"{field}.thickness_nm", str(exc)) from None
    stack = LayerStack(host, tuple(layers), mirror)

    em = raw.get("emitter") or {}
    weights = _weights(em.get("weights", "reported"))
    try:
        env = EmitterEnvironment(stack, float(em.get("depth_nm", 8.0)), weights)
    except (TypeError, ValueError) as exc:
        raise ConfigError("emitter.depth_nm", str(exc)) from None

    col = raw.get("collection") or {}
    try:
        geom = CollectionGeometry(float(col.get("numerical_aperture", 0.35)),
                                  bool(col.get("bottom_transmission", False)))
        geom.sin_max(env.n_host)
    except (TypeError, ValueError) as exc:
        raise ConfigError("collection.numerical_aperture", str(exc)) from None
    normalization = col.get("normalization", "raw")
    if normalization not in ("raw", "unit_counts"):
        raise ConfigError("collection.normalization", "must be 'raw' or 'unit_counts'")

    grids = raw.get("grids") or {}
    lambda_grid = grid(grids.get("lambda_nm"), "grids.lambda_nm")
    d_grid = grid(grids.get("d_nm"), "grids.d_nm")
    if d_grid[0] <= 0:
        raise ConfigError("grids.d_nm.start", "mirror distance must be > 0")
    used = (host, gap, mirror, *(l.material for l in layers))
    for name, m in materials.items():
        if m is mat.IDEAL_MIRROR or not any(m is u for u in used):
            continue
        lo, hi = m.span()
        if lambda_grid[0] < lo or lambda_grid[-1] > hi:
            raise ConfigError("grids.lambda_nm", f"outside the table span of {name} [{lo}, {hi}] nm")

    out = raw.get("output") or {}
    workers = raw.get("workers", 1)
    if not isinstance(workers, int) or workers < 1:
        raise ConfigError("workers", "must be a positive integer")
    return RunConfig(raw, materials, env, geom, normalization, col.get("reference", "synthetic"),
                     lambda_grid, d_grid, Path(out.get("directory", "out")), bool(out.get("image", True)),
                     workers, base_dir)


def load_config(path=None):
    """Defaults, overridden by the YAML file at ``path`` if given."""
    raw = yaml.safe_load(default_config_text())
    base_dir = Path(".")
    if path is not None:
        path = Path(path)
        try:
            user = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
        except FileNotFoundError:
            raise ConfigError("--config", f"file not found: {path}") from None
        except yaml.YAMLError as exc:
            raise ConfigError("--config", f"invalid YAML: {exc}") from None
        if not isinstance(user, dict):
            raise ConfigError("--config", "top level must be a mapping")
        raw = _merge(raw, user)
        # a material entry is replaced as a whole, never merged key by key
        for name, spec in (user.get("materials") or {}).items():
            raw["materials"][name] = copy.deepcopy(spec)
        base_dir = path.parent
    return build_config(raw, base_dir)
