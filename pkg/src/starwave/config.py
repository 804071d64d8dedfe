"""JSON run configuration for the ``starwave`` command line tool."""

from __future__ import annotations

from dataclasses import dataclass, field
import json
import math

from .lattice import LatticeParams, ParamError

COMMANDS = ("dispersion", "reflection", "scatter", "modes-roundtrip", "continuum", "verify")
DEFAULT_SEED = 20240917


class ConfigError(ValueError):
    """Invalid configuration; ``path`` is the dotted location of the problem."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


@dataclass(frozen=True)
class KGrid:
    k_min: float
    k_max: float
    count: int

    def values(self):
        if self.count == 1:
            return [self.k_min]
        step = (self.k_max - self.k_min) / (self.count - 1)
        return [self.k_min + i * step for i in range(self.count)]


@dataclass(frozen=True)
class PacketBlock:
    ray: int = 1
    k0: tuple = (math.pi / 2,)
    center: float = 1000.0
    width: float = 40.0
    direction: str = "toward"


@dataclass(frozen=True)
class RoundtripBlock:
    n_rays: tuple = (3, 4, 5, 6)
    ray_len: tuple = (16, 32)
    grid_sizes: tuple | None = None  # None -> (L + 2, 4 L) for each L
    states: int = 20
    precision: object = "auto"


@dataclass(frozen=True)
class ContinuumBlock:
    k: float = 1.0
    k1: complex = 1j
    deltas: tuple = (1e-1, 1e-2, 1e-3, 1e-4)


@dataclass(frozen=True)
class RunConfig:
    model: LatticeParams
    command: str
    k_grid: KGrid | None = None
    packet: PacketBlock = field(default_factory=PacketBlock)
    roundtrip: RoundtripBlock = field(default_factory=RoundtripBlock)
    continuum: ContinuumBlock = field(default_factory=ContinuumBlock)
    dt: float | None = None
    seed: int = DEFAULT_SEED
    output: str = "."


def _join(path, key):
    return f"{path}.{key}" if path else key


def _strict(obj, allowed, path):
    if not isinstance(obj, dict):
        raise ConfigError(path, "expected an object")
    for key in obj:
        if key not in allowed:
            raise ConfigError(_join(path, key), "unknown key")


def _number(obj, key, path, default=None, required=False):
    where = _join(path, key)
    if key not in obj:
        if required:
            raise ConfigError(where, "missing")
        return default
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(where, "expected a finite number")
    return v


def _integer(obj, key, path, default=None, required=False, minimum=None):
    v = _number(obj, key, path, default, required)
    if v is None:
        return v
    if not isinstance(v, int):
        raise ConfigError(_join(path, key), "expected an integer")
    if minimum is not None and v < minimum:
        raise ConfigError(_join(path, key), f"must be >= {minimum}")
    return v


def _number_list(obj, key, path, default, integer=False):
    if key not in obj:
        return default
    v = obj[key]
    items = v if isinstance(v, list) else [v]
    if not items:
        raise ConfigError(f"{path}.{key}", "must not be empty")
    probe = {str(i): x for i, x in enumerate(items)}
    conv = _integer if integer else _number
    return tuple(conv(probe, str(i), f"{path}.{key}", required=True) for i in range(len(items)))


def _model(obj) -> LatticeParams:
    keys = ("n_rays", "ray_len", "delta", "mass", "center_mass")
    _strict(obj, keys, "model")
    vals = {k: _number(obj, k, "model", required=True) for k in keys}
    for k in ("n_rays", "ray_len"):
        if not isinstance(vals[k], int):
            raise ConfigError(f"model.{k}", "expected an integer")
    try:
        return LatticeParams(vals["n_rays"], vals["ray_len"], float(vals["delta"]),
                             float(vals["mass"]), float(vals["center_mass"]))
    except ParamError as exc:
        raise ConfigError(f"model.{exc.field}", str(exc).split(": ", 1)[1]) from None


def _k_grid(obj, model: LatticeParams, closed: bool) -> KGrid:
    _strict(obj, ("min", "max", "count"), "k_grid")
    k_min = _number(obj, "min", "k_grid", required=True)
    k_max = _number(obj, "max", "k_grid", required=True)
    count = _integer(obj, "count", "k_grid", required=True, minimum=1)
    edge = math.pi / model.delta
    for key, k in (("min", k_min), ("max", k_max)):
        inside = 0 <= k <= edge if closed else 0 < k < edge
        if not inside:
            interval = "[0, pi/delta]" if closed else "(0, pi/delta)"
            raise ConfigError(f"k_grid.{key}", f"{k} outside {interval}")
    if k_max < k_min:
        raise ConfigError("k_grid.max", "must be >= k_grid.min")
    return KGrid(float(k_min), float(k_max), count)


def default_k_grid(model: LatticeParams, count: int = 64) -> KGrid:
    """Midpoints of ``count`` equal cells spanning ``(0, pi/delta)``."""
    edge = math.pi / model.delta
    return KGrid(0.5 * edge / count, edge - 0.5 * edge / count, count)


def _packet(obj) -> PacketBlock:
    _strict(obj, ("ray", "k0", "center", "width", "direction"), "packet")
    d = PacketBlock()
    direction = obj.get("direction", d.direction)
    if direction not in ("toward", "away"):
        raise ConfigError("packet.direction", "expected 'toward' or 'away'")
    return PacketBlock(
        ray=_integer(obj, "ray", "packet", d.ray, minimum=1),
        k0=_number_list(obj, "k0", "packet", d.k0),
        center=float(_number(obj, "center", "packet", d.center)),
        width=float(_number(obj, "width", "packet", d.width)),
        direction=direction,
    )


def _roundtrip(obj) -> RoundtripBlock:
    _strict(obj, ("n_rays", "ray_len", "grid_sizes", "states", "precision"), "roundtrip")
    d = RoundtripBlock()
    precision = obj.get("precision", d.precision)
    if not (precision in ("auto", "double") or (isinstance(precision, int) and not isinstance(precision, bool) and precision > 53)):
        raise ConfigError("roundtrip.precision", "expected 'auto', 'double' or an integer bit count > 53")
    n_rays = _number_list(obj, "n_rays", "roundtrip", d.n_rays, integer=True)
    if min(n_rays) < 3:
        raise ConfigError("roundtrip.n_rays", "inversion needs n_rays >= 3")
    ray_len = _number_list(obj, "ray_len", "roundtrip", d.ray_len, integer=True)
    if min(ray_len) < 2:
        raise ConfigError("roundtrip.ray_len", "must be >= 2")
    return RoundtripBlock(
        n_rays=n_rays,
        ray_len=ray_len,
        grid_sizes=_number_list(obj, "grid_sizes", "roundtrip", None, integer=True),
        states=_integer(obj, "states", "roundtrip", d.states, minimum=1),
        precision=precision,
    )


def _continuum(obj) -> ContinuumBlock:
    _strict(obj, ("k", "k1", "deltas"), "continuum")
    d = ContinuumBlock()
    k1 = d.k1
    if "k1" in obj:
        pair = _number_list(obj, "k1", "continuum", None)
        if len(pair) != 2:
            raise ConfigError("continuum.k1", "expected [re, im]")
        k1 = complex(*pair)
        if k1 == 0:
            raise ConfigError("continuum.k1", "must be nonzero")
    deltas = _number_list(obj, "deltas", "continuum", d.deltas)
    if any(x <= 0 for x in deltas) or list(deltas) != sorted(deltas, reverse=True):
        raise ConfigError("continuum.deltas", "must be positive and decreasing")
    return ContinuumBlock(k=float(_number(obj, "k", "continuum", d.k)), k1=k1, deltas=deltas)


def parse_config(text: str) -> RunConfig:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"malformed JSON: {exc}") from None
    top = ("model", "command", "k_grid", "packet", "roundtrip", "continuum", "dt", "seed", "output")
    _strict(doc, top, "")
    if "model" not in doc:
        raise ConfigError("model", "missing")
    model = _model(doc["model"])
    command = doc.get("command")
    if command not in COMMANDS:
        raise ConfigError("command", f"expected one of {', '.join(COMMANDS)}")
    k_grid = _k_grid(doc["k_grid"], model, closed=command == "dispersion") if "k_grid" in doc else None
    seed = _integer(doc, "seed", "", DEFAULT_SEED, minimum=0)
    if seed >= 2**64:
        raise ConfigError("seed", "must fit in 64 bits")
    dt = _number(doc, "dt", "", None)
    if dt is not None and dt <= 0:
        raise ConfigError("dt", "must be > 0")
    output = doc.get("output", ".")
    if not isinstance(output, str):
        raise ConfigError("output", "expected a path string")
    return RunConfig(
        model=model,
        command=command,
        k_grid=k_grid,
        packet=_packet(doc["packet"]) if "packet" in doc else PacketBlock(),
        roundtrip=_roundtrip(doc["roundtrip"]) if "roundtrip" in doc else RoundtripBlock(),
        continuum=_continuum(doc["continuum"]) if "continuum" in doc else ContinuumBlock(),
        dt=dt,
        seed=seed,
        output=output,
    )
