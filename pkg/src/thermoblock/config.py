"""Case files: YAML experiment descriptions resolved into ready-to-run problems.

A case file is a small key-value tree (see ``cases/*.yaml``). Everything that is
not given falls back to the heavy-oil defaults below. Source positions are in
metres so that the same file can be re-run on any grid resolution.
"""
import copy
import itertools
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np
import yaml
from scipy import ndimage

from .amg import AmgOptions
from .discretization import Problem, State
from .mesh import build_grid
from .physics import MILLIDARCY, FluidModel, RockModel, SourceTerm
from .precond import PreconditionerConfig
from .solver import DAY, NewtonConfig, TimeController

SCHEMA_VERSION = 1

INITIAL_PRESSURE = 4.1369e5
INITIAL_TEMPERATURE = 288.706


class CaseError(ValueError):
    """Raised for malformed or inconsistent case files."""


# allowed keys per section; ``None`` marks a free-form leaf
_SCHEMA = {
    "schema": None, "name": None, "description": None, "gravity": None, "notes": None,
    "grid": {"dims": None, "lengths": None},
    "permeability": {"kind": None, "value": None, "path": None, "layer": None, "file_dims": None,
                     "seed": None, "mean": None, "sigma_log": None, "correlation": None, "scale": None},
    "rock": {"porosity": None, "conductivity": None, "heat_capacity": None, "density": None},
    "fluid": {"conductivity": None, "heat_capacity": None, "specific_gravity": None,
              "compressibility_bar": None, "thermal_expansion": None, "beta_sign": None,
              "reference_pressure": None, "reference_temperature": None},
    "initial": {"pressure": None, "temperature": None},
    "sources": None,
    "time": {"steps_days": None, "dt0_days": None, "t_end_days": None, "dt_max_days": None,
             "target_newton": None},
    "solver": {"rtol_f": None, "rtol_step": None, "max_newton": None, "gmres_rtol": None,
               "gmres_restart": None, "gmres_maxit": None},
    "preconditioner": {"kind": None, "schur": None, "decoupling": None,
                       "strength_threshold": None, "coarse_threshold": None},
}
_SOURCE_KEYS = {"kind", "at", "lattice", "mode", "rate", "p_bh", "T_inj", "U", "T_heater", "r_w", "h"}
_SOURCE_NUMBERS = _SOURCE_KEYS - {"kind", "at", "lattice", "mode"}
_SOLVER_INTS = {"max_newton", "gmres_restart", "gmres_maxit", "coarse_threshold"}


def _number(value, where, kind=float):
    """Numeric case value; PyYAML reads forms like ``2.0e5`` (no exponent sign) as strings."""
    try:
        return kind(float(value)) if kind is int else kind(value)
    except (TypeError, ValueError):
        raise CaseError(f"{where} must be a number, got {value!r}") from None


def _numbers(section, where):
    return {k: _number(v, f"{where}.{k}", int if k in _SOLVER_INTS else float) for k, v in section.items()}


def _check_keys(tree, schema, where):
    if not isinstance(tree, dict):
        raise CaseError(f"{where or 'case'}: expected a mapping, got {type(tree).__name__}")
    for key, value in tree.items():
        if key not in schema:
            raise CaseError(f"unknown key {where + '.' if where else ''}{key}")
        if schema[key] is not None:
            _check_keys(value, schema[key], f"{where}.{key}" if where else key)


@dataclass
class CaseSpec:
    """A fully resolved case; ``build()`` turns it into solver inputs."""
    name: str
    dims: tuple
    lengths: tuple
    perm: np.ndarray
    porosity: float
    fluid: FluidModel
    rock_params: dict
    sources: list                  # dicts with a physical ``at`` position
    initial_p: float
    initial_T: float
    gravity: bool
    steps: list = None             # fixed step list in seconds, or None for adaptive
    adaptive: dict = None
    newton: NewtonConfig = field(default_factory=NewtonConfig)
    precond: PreconditionerConfig = field(default_factory=PreconditionerConfig)
    perm_spec: dict = field(default_factory=dict, repr=False)
    base_dir: Path = None
    description: str = ""

    @property
    def n_cells(self):
        return int(np.prod(self.dims))

    def with_grid(self, dims):
        """Same case on another resolution; permeability is re-resolved for the new grid."""
        dims = tuple(int(n) for n in dims)
        if len(dims) != len(self.dims):
            raise CaseError(f"grid override {dims} does not match the case dimension {len(self.dims)}")
        perm = permeability_field(self.perm_spec, dims, self.lengths, self.base_dir)
        out = replace(self, dims=dims, perm=perm)
        _check_sources(out)
        return out

    def with_options(self, precond=None, newton=None):
        return replace(self, precond=precond or self.precond, newton=newton or self.newton)

    def grid(self):
        return build_grid(self.dims, self.lengths)

    def build(self):
        """Return ``(problem, initial_state, controller)``."""
        grid = self.grid()
        rock = RockModel(perm=self.perm, poro=np.full(grid.n_cells, self.porosity), **self.rock_params)
        sources = []
        for s in self.sources:
            kw = {k: v for k, v in s.items() if k not in ("at", "mode", "rate")}
            sources.append(SourceTerm(
                cell=grid.locate(s["at"]), rate_mode=s.get("mode", "fixed-rate"),
                q_target=float(s.get("rate", 0.0)), D_x=grid.cell_size[0], D_y=grid.cell_size[1], **kw))
        problem = Problem(grid, self.fluid, rock, sources, gravity=self.gravity)
        state = State.uniform(grid.n_cells, self.initial_p, self.initial_T)
        if self.steps is not None:
            ctrl = TimeController(fixed_steps=list(self.steps))
        else:
            ctrl = TimeController(**self.adaptive)
        return problem, state, ctrl


def case_path(name_or_path):
    """Resolve a shipped case name (``case1``) or a filesystem path."""
    p = Path(name_or_path)
    if p.exists():
        return p
    shipped = resources.files("thermoblock") / "cases" / f"{p.stem}.yaml"
    if p.suffix in ("", ".yaml") and shipped.is_file():
        return Path(str(shipped))
    raise CaseError(f"case file {name_or_path} not found")


def shipped_cases():
    root = resources.files("thermoblock") / "cases"
    return sorted(Path(str(p)).stem for p in root.iterdir() if p.name.endswith(".yaml"))


def load_case(path):
    """Parse a case file (or a shipped case name) into a CaseSpec."""
    path = case_path(path)
    with open(path) as fh:
        try:
            tree = yaml.safe_load(fh) or {}
        except yaml.YAMLError as exc:
            raise CaseError(f"{path}: not valid YAML ({exc})") from None
    return case_from_dict(tree, base_dir=path.parent, default_name=path.stem)


def case_from_dict(tree, base_dir=None, default_name="case"):
    tree = copy.deepcopy(tree)
    _check_keys(tree, _SCHEMA, "")
    version = tree.get("schema", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise CaseError(f"unsupported schema version {version} (expected {SCHEMA_VERSION})")
    base_dir = Path(base_dir) if base_dir is not None else Path.cwd()

    grid = tree.get("grid")
    if not grid or "dims" not in grid:
        raise CaseError("grid.dims is required")
    dims = tuple(int(n) for n in grid["dims"])
    lengths = tuple(float(x) for x in grid.get("lengths", [20.0] * len(dims)))
    if len(dims) not in (2, 3) or len(lengths) != len(dims):
        raise CaseError(f"inconsistent grid: dims={dims} lengths={lengths}")
    if min(dims) < 1 or min(lengths) <= 0:
        raise CaseError("grid dims and lengths must be positive")

    perm_spec = tree.get("permeability", {"kind": "uniform", "value": 3e-13})
    perm = permeability_field(perm_spec, dims, lengths, base_dir)

    rock = tree.get("rock", {})
    rock_params = {}
    for key, name in (("conductivity", "k_tr"), ("heat_capacity", "c_r"), ("density", "rho_r")):
        if key in rock:
            rock_params[name] = float(rock[key])

    fl = tree.get("fluid", {})
    names = {"conductivity": "k_tf", "heat_capacity": "c_v", "specific_gravity": "gamma_sg",
             "compressibility_bar": "compressibility_bar", "thermal_expansion": "beta",
             "beta_sign": "beta_sign", "reference_pressure": "p0", "reference_temperature": "T0"}
    fluid = FluidModel(**{names[k]: float(v) for k, v in fl.items()})

    init = tree.get("initial", {})
    time_cfg = tree.get("time", {})
    steps, adaptive = None, None
    if "steps_days" in time_cfg:
        extra = set(time_cfg) - {"steps_days"}
        if extra:
            raise CaseError(f"time.steps_days cannot be combined with {sorted(extra)}")
        steps = [float(d) * DAY for d in time_cfg["steps_days"]]
        if not steps or min(steps) <= 0:
            raise CaseError("time.steps_days must list positive step lengths")
    else:
        adaptive = {
            "dt": float(time_cfg.get("dt0_days", 1.0)) * DAY,
            "t_end": float(time_cfg.get("t_end_days", 1000.0)) * DAY,
            "dt_max": float(time_cfg.get("dt_max_days", 100.0)) * DAY,
            "target_newton": int(time_cfg.get("target_newton", 4)),
        }

    pc = dict(tree.get("preconditioner", {}))
    amg_kw = _numbers({k: pc.pop(k) for k in ("strength_threshold", "coarse_threshold") if k in pc}, "preconditioner")
    try:
        precond = PreconditionerConfig(amg=AmgOptions(**amg_kw), **pc)
        newton = NewtonConfig(**_numbers(tree.get("solver", {}), "solver"))
    except (TypeError, ValueError) as exc:
        raise CaseError(str(exc)) from None

    spec = CaseSpec(
        name=str(tree.get("name", default_name)), dims=dims, lengths=lengths, perm=perm,
        porosity=float(rock.get("porosity", 0.2)), fluid=fluid, rock_params=rock_params,
        sources=_expand_sources(tree.get("sources", []), len(dims)),
        initial_p=float(init.get("pressure", INITIAL_PRESSURE)),
        initial_T=float(init.get("temperature", INITIAL_TEMPERATURE)),
        gravity=bool(tree.get("gravity", False)), steps=steps, adaptive=adaptive,
        newton=newton, precond=precond, perm_spec=perm_spec, base_dir=base_dir,
        description=str(tree.get("description", "")).strip(),
    )
    if not 0 < spec.porosity < 1:
        raise CaseError("rock.porosity must lie in (0, 1)")
    _check_sources(spec)
    return spec


def _expand_sources(entries, ndim):
    if not isinstance(entries, list):
        raise CaseError("sources must be a list")
    out = []
    for i, entry in enumerate(entries):
        if not isinstance(entry, dict):
            raise CaseError(f"sources[{i}] must be a mapping")
        unknown = set(entry) - _SOURCE_KEYS
        if unknown:
            raise CaseError(f"unknown key sources[{i}].{sorted(unknown)[0]}")
        if entry.get("kind") not in ("injector", "producer", "heater"):
            raise CaseError(f"sources[{i}].kind must be injector, producer or heater")
        if ("at" in entry) == ("lattice" in entry):
            raise CaseError(f"sources[{i}] needs exactly one of 'at' or 'lattice'")
        base = {k: (_number(v, f"sources[{i}].{k}") if k in _SOURCE_NUMBERS else v)
                for k, v in entry.items() if k not in ("at", "lattice")}
        if "at" in entry:
            points = [entry["at"]]
        else:
            axes = entry["lattice"]
            if not isinstance(axes, list) or len(axes) != ndim:
                raise CaseError(f"sources[{i}].lattice needs one coordinate list per axis")
            points = list(itertools.product(*axes))
        for pt in points:
            pt = [_number(c, f"sources[{i}] position") for c in pt]
            if len(pt) != ndim:
                raise CaseError(f"sources[{i}] position {pt} is not {ndim}-dimensional")
            out.append({**base, "at": pt})
    return out


def _check_sources(spec):
    for s in spec.sources:
        if any(c < 0 or c > L for c, L in zip(s["at"], spec.lengths)):
            raise CaseError(f"source at {s['at']} lies outside the domain {spec.lengths}")
        if s["kind"] != "heater" and s.get("mode", "fixed-rate") == "peaceman" and "p_bh" not in s:
            raise CaseError("Peaceman wells need a bottom-hole pressure p_bh")


def permeability_field(spec, dims, lengths, base_dir=None):
    """Per-cell permeability (n_cells, ndim) in m^2 from a ``permeability`` section."""
    ndim = len(dims)
    n = int(np.prod(dims))
    kind = spec.get("kind", "uniform")
    scale = float(spec.get("scale", 1.0))
    if kind in ("uniform", "anisotropic"):
        value = np.atleast_1d(np.asarray(spec.get("value", 3e-13), dtype=float))
        if value.size == 1:
            value = np.repeat(value, ndim)
        if value.size != ndim:
            raise CaseError(f"permeability value needs 1 or {ndim} entries, got {value.size}")
        perm = np.tile(value, (n, 1))
    elif kind == "file":
        if ndim != 2:
            raise CaseError("permeability files are only supported on 2D grids")
        path = Path(spec["path"])
        if not path.is_absolute() and base_dir is not None:
            path = Path(base_dir) / path
        if not path.exists():
            raise CaseError(f"permeability file {path} not found")
        perm = load_permeability_file(path, int(spec.get("layer", 0)), dims, spec.get("file_dims"))
    elif kind == "lognormal":
        perm = synthetic_lognormal(dims, seed=int(spec.get("seed", 0)), mean=float(spec.get("mean", 1e-13)),
                                   sigma_log=float(spec.get("sigma_log", 2.0)),
                                   correlation=float(spec.get("correlation", 0.05)), lengths=lengths)
    else:
        raise CaseError(f"unknown permeability kind {kind!r}")
    return perm * scale


def load_permeability_file(path, layer, dims, file_dims=None):
    """Read a whitespace-separated millidarcy file and return one layer in m^2.

    The file stores layers one after another with x varying fastest. Without
    ``file_dims`` it must hold a whole number of ``nx*ny`` layers (one isotropic
    value per cell). With ``file_dims = (NX, NY, NZ)`` it may hold either one
    value or three (x, y, z components, one full block each) per cell of that
    larger grid, and the leading ``nx x ny`` window of the layer is used.
    Returns an ``(nx*ny, 2)`` array of (K_x, K_y).
    """
    nx, ny = (int(d) for d in dims)
    values = np.loadtxt(path, dtype=float).ravel()
    found = values.size
    if file_dims is None:
        NX, NY = nx, ny
        per_layer = nx * ny
        if found == 0 or found % per_layer:
            raise CaseError(f"{path}: expected a multiple of {per_layer} values, found {found}")
        NZ, ncomp = found // per_layer, 1
    else:
        NX, NY, NZ = (int(d) for d in file_dims)
        block = NX * NY * NZ
        if found == block:
            ncomp = 1
        elif found == 3 * block:
            ncomp = 3
        else:
            raise CaseError(f"{path}: expected {block} or {3 * block} values, found {found}")
        if nx > NX or ny > NY:
            raise CaseError(f"grid {nx}x{ny} exceeds the file extent {NX}x{NY}")
    if not 0 <= layer < NZ:
        raise CaseError(f"layer {layer} outside the file extent (0..{NZ - 1})")
    comps = values.reshape(ncomp, NZ, NY, NX)[:, layer, :ny, :nx]
    kx = comps[0].ravel()
    ky = comps[1].ravel() if ncomp == 3 else kx
    if np.any(kx <= 0) or np.any(ky <= 0):
        raise CaseError(f"{path}: permeabilities must be positive")
    return np.column_stack([kx, ky]) * MILLIDARCY


def synthetic_lognormal(dims, seed=0, mean=1e-13, sigma_log=2.0, correlation=0.05, lengths=None):
    """Smooth, seeded lognormal field (isotropic per cell) standing in for real reservoir data.

    ``mean`` is the geometric mean in m^2, ``correlation`` a length scale as a
    fraction of the domain.
    """
    rng = np.random.default_rng(seed)
    shape = tuple(reversed(dims))   # x fastest in the flattened order
    z = rng.standard_normal(shape)
    width = [max(correlation * n, 0.0) for n in shape]
    z = ndimage.gaussian_filter(z, width, mode="wrap")
    std = z.std()
    z = (z - z.mean()) / (std if std > 0 else 1.0)
    k = mean * np.exp(sigma_log * z.ravel())
    return np.tile(k[:, None], (1, len(dims)))


def parse_grid(text, ndim):
    """``"40"`` -> (40,)*ndim, ``"30x60"`` -> (30, 60)."""
    parts = [int(p) for p in str(text).lower().split("x")]
    if len(parts) == 1:
        parts = parts * ndim
    if len(parts) != ndim or min(parts) < 1:
        raise CaseError(f"grid {text!r} does not fit a {ndim}-d case")
    return tuple(parts)
