"""Problem-instance data model, validation and JSON (de)serialisation."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import TYPE_CHECKING, Any, Iterable, Union

from .delay import DelayParams
from .power import PowerParams
from .split_maps import SplitTables

if TYPE_CHECKING:
    from .assignment import Assignment

SCHEMA_VERSION = 1
TOP_LEVEL_KEYS = {"version", "topology", "users", "files", "split_tables", "power_params",
                  "delay_params", "solver_defaults", "assignment"}
MODES = ("fscp", "all_ec", "all_cc", "greedy")


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class CCSpec:
    du_count: int
    du_cp_capacity: int
    du_up_capacity: int
    cache_capacity_bytes: int


@dataclass(frozen=True)
class CellSpec:
    id: int
    ec_id: int
    radius_m: float = 250.0
    rb_per_user: int = 1


@dataclass(frozen=True)
class ECSpec:
    id: int
    du_count: int
    du_cp_capacity: int
    du_up_capacity: int
    cache_capacity_bytes: int
    cells: tuple[CellSpec, ...] = ()


@dataclass(frozen=True)
class UserSpec:
    id: int
    cell_id: int
    distance_m: float
    demanded_file: int
    delay_threshold_s: float


@dataclass(frozen=True)
class FileSpec:
    id: int
    size_bytes: int


@dataclass(frozen=True)
class SolverDefaults:
    mode: str = "fscp"
    time_budget_s: float = 60.0
    split_once_relation: str = "eq"


@dataclass(frozen=True)
class Diagnostic:
    level: str  # "error" | "warning"
    message: str

    def __str__(self) -> str:
        return f"{self.level}: {self.message}"


@dataclass(frozen=True)
class Scenario:
    central_cloud: CCSpec
    edge_clouds: tuple[ECSpec, ...]
    users: tuple[UserSpec, ...]
    files: tuple[FileSpec, ...]
    wavelengths: int
    wavelength_capacity_mbps: float
    f_up: int
    f_cp: int
    split_tables: SplitTables
    power_params: PowerParams = field(default_factory=PowerParams)
    delay_params: DelayParams = field(default_factory=DelayParams)
    solver_defaults: SolverDefaults = field(default_factory=SolverDefaults)

    # lookups ---------------------------------------------------------------
    @cached_property
    def _cells(self) -> dict[int, CellSpec]:
        return {c.id: c for ec in self.edge_clouds for c in ec.cells}

    @cached_property
    def _ecs(self) -> dict[int, ECSpec]:
        return {ec.id: ec for ec in self.edge_clouds}

    @cached_property
    def _users(self) -> dict[int, UserSpec]:
        return {u.id: u for u in self.users}

    @cached_property
    def _files(self) -> dict[int, FileSpec]:
        return {f.id: f for f in self.files}

    @cached_property
    def users_by_cell(self) -> dict[int, tuple[int, ...]]:
        out: dict[int, list[int]] = {c: [] for c in self._cells}
        for u in self.users:
            out.setdefault(u.cell_id, []).append(u.id)
        return {c: tuple(v) for c, v in out.items()}

    @property
    def cells(self) -> list[CellSpec]:
        return list(self._cells.values())

    def cell(self, cid: int) -> CellSpec:
        return self._cells[cid]

    def ec(self, rid: int) -> ECSpec:
        return self._ecs[rid]

    def user(self, uid: int) -> UserSpec:
        return self._users[uid]

    def file(self, fid: int) -> FileSpec:
        return self._files[fid]

    def ec_of_user(self, uid: int) -> int:
        return self._cells[self._users[uid].cell_id].ec_id

    def active_ecs(self, a: "Assignment") -> set[int]:
        return {self.ec_of_user(u) for u in a.admitted}

    def with_params(self, **changes: Any) -> "Scenario":
        return replace(self, **changes)


# validation ----------------------------------------------------------------

def validate(s: Scenario) -> list[Diagnostic]:
    """Diagnostics for every broken invariant plus warnings for suspicious configurations."""
    out: list[Diagnostic] = []

    def err(msg: str) -> None:
        out.append(Diagnostic("error", msg))

    def warn(msg: str) -> None:
        out.append(Diagnostic("warning", msg))

    if s.f_up < 1 or s.f_cp < 1:
        err("f_up and f_cp must be >= 1")
    if s.wavelength_capacity_mbps <= 0:
        err("wavelength capacity K must be positive")
    if s.wavelengths < 0:
        err("wavelength count must be >= 0")
    cc = s.central_cloud
    for name in ("du_count", "du_cp_capacity", "du_up_capacity", "cache_capacity_bytes"):
        if getattr(cc, name) < 0:
            err(f"CC {name} is negative")
    if (s.split_tables.f_up, s.split_tables.f_cp) != (s.f_up, s.f_cp):
        err("split tables do not match f_up/f_cp")
    else:
        out += [Diagnostic("error", m) for m in s.split_tables.problems()]
    out += [Diagnostic("error", m) for m in s.power_params.problems()]
    out += [Diagnostic("error", m) for m in s.delay_params.problems()]
    if s.solver_defaults.mode not in MODES:
        err(f"unknown solver mode {s.solver_defaults.mode!r}")
    if s.solver_defaults.split_once_relation not in ("eq", "le"):
        err("split_once_relation must be 'eq' or 'le'")

    ec_ids: set[int] = set()
    cell_seen: set[int] = set()
    for ec in s.edge_clouds:
        if ec.id in ec_ids:
            err(f"duplicate EC id {ec.id}")
        ec_ids.add(ec.id)
        for name in ("du_count", "du_cp_capacity", "du_up_capacity", "cache_capacity_bytes"):
            if getattr(ec, name) < 0:
                err(f"EC {ec.id} {name} is negative")
        if ec.du_cp_capacity > cc.du_cp_capacity:
            err(f"EC {ec.id} DU CP capacity exceeds the CC DU CP capacity")
        elif ec.du_cp_capacity == cc.du_cp_capacity:
            warn(f"EC {ec.id} DU CP capacity equals the CC DU CP capacity")
        if ec.cache_capacity_bytes == 0 and s.solver_defaults.mode == "all_ec":
            warn(f"EC {ec.id} has no cache but the all_ec baseline caches every request at the edge")
        for c in ec.cells:
            if c.id in cell_seen:
                err(f"cell {c.id} belongs to more than one EC")
            cell_seen.add(c.id)
            if c.ec_id != ec.id:
                err(f"cell {c.id} lists EC {c.ec_id} but is nested under EC {ec.id}")
            if c.radius_m <= 0:
                err(f"cell {c.id} has nonpositive radius")
            if c.rb_per_user < 1:
                err(f"cell {c.id} allocates fewer than one resource block per user")

    file_ids = set()
    for f in s.files:
        if f.id in file_ids:
            err(f"duplicate file id {f.id}")
        file_ids.add(f.id)
        if f.size_bytes <= 0:
            err(f"file {f.id} has nonpositive size")

    user_ids = set()
    for u in s.users:
        if u.id in user_ids:
            err(f"duplicate user id {u.id}")
        user_ids.add(u.id)
        if u.cell_id not in cell_seen:
            err(f"user {u.id}: unknown cell {u.cell_id}")
            continue
        if u.demanded_file not in file_ids:
            err(f"user {u.id}: unknown file {u.demanded_file}")
        if u.delay_threshold_s <= 0:
            err(f"user {u.id}: nonpositive delay threshold")
        radius = s.cell(u.cell_id).radius_m
        if not 0 <= u.distance_m <= radius:
            err(f"user {u.id}: distance {u.distance_m} m outside the cell radius {radius} m")
    return out


# serialisation ---------------------------------------------------------------

def _table1() -> dict:
    text = resources.files("fscp").joinpath("data/table1.json").read_text(encoding="utf-8")
    return json.loads(text)


def _build(cls, data: dict, where: str, defaults: dict | None = None):
    names = {f.name for f in fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ScenarioError(f"unknown key {where}.{sorted(unknown)[0]}")
    merged = dict(defaults or {})
    merged.update(data)
    try:
        return cls(**merged)
    except TypeError as e:
        missing = sorted(names - set(merged))
        key = missing[0] if missing else "?"
        raise ScenarioError(f"missing key {where}.{key}") from e


def _require(d: dict, key: str, where: str) -> Any:
    if key not in d:
        raise ScenarioError(f"missing key {where}.{key}")
    return d[key]


def scenario_from_dict(doc: dict, *, check: bool = True) -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioError("scenario document must be a JSON object")
    unknown = set(doc) - TOP_LEVEL_KEYS
    if unknown:
        raise ScenarioError(f"unknown key {sorted(unknown)[0]}")
    version = doc.get("version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ScenarioError(f"unsupported version {version}")
    base = _table1()
    topo = dict(base["topology"])
    topo_in = _require(doc, "topology", "")
    if not isinstance(topo_in, dict):
        raise ScenarioError("topology must be an object")
    allowed_topo = {"central_cloud", "edge_clouds", "wavelengths", "wavelength_capacity_mbps",
                    "f_up", "f_cp"}
    bad = set(topo_in) - allowed_topo
    if bad:
        raise ScenarioError(f"unknown key topology.{sorted(bad)[0]}")
    cc = _build(CCSpec, topo_in.get("central_cloud", {}), "topology.central_cloud",
                base["topology"]["central_cloud"])
    ec_default = {k: v for k, v in base["topology"]["edge_clouds"][0].items() if k not in ("id", "cells")}
    ecs = []
    for k, e in enumerate(_require(topo_in, "edge_clouds", "topology")):
        e = dict(e)
        cells_in = e.pop("cells", [])
        rid = _require(e, "id", f"topology.edge_clouds[{k}]")
        cells = tuple(_build(CellSpec, {"ec_id": rid, **c}, f"topology.edge_clouds[{k}].cells")
                      for c in cells_in)
        ecs.append(_build(ECSpec, {**e, "cells": cells}, f"topology.edge_clouds[{k}]", ec_default))
    f_up = int(topo_in.get("f_up", topo["f_up"]))
    f_cp = int(topo_in.get("f_cp", topo["f_cp"]))
    users = tuple(_build(UserSpec, u, f"users[{k}]") for k, u in enumerate(doc.get("users", [])))
    files = tuple(_build(FileSpec, f, f"files[{k}]") for k, f in enumerate(doc.get("files", [])))
    if "split_tables" in doc:
        try:
            tables = SplitTables.from_dict(doc["split_tables"])
        except KeyError as e:
            raise ScenarioError(f"missing key split_tables.{e.args[0]}") from e
    elif (f_up, f_cp) == (topo["f_up"], topo["f_cp"]):
        tables = SplitTables.from_dict(base["split_tables"])
    else:
        raise ScenarioError("missing key split_tables (required when f_up/f_cp differ from defaults)")
    s = Scenario(
        central_cloud=cc,
        edge_clouds=tuple(ecs),
        users=users,
        files=files,
        wavelengths=int(topo_in.get("wavelengths", topo["wavelengths"])),
        wavelength_capacity_mbps=float(topo_in.get("wavelength_capacity_mbps",
                                                   topo["wavelength_capacity_mbps"])),
        f_up=f_up,
        f_cp=f_cp,
        split_tables=tables,
        power_params=_build(PowerParams, doc.get("power_params", {}), "power_params",
                            base["power_params"]),
        delay_params=_build(DelayParams, doc.get("delay_params", {}), "delay_params",
                            base["delay_params"]),
        solver_defaults=_build(SolverDefaults, doc.get("solver_defaults", {}), "solver_defaults",
                               base["solver_defaults"]),
    )
    if check:
        errors = [d for d in validate(s) if d.level == "error"]
        if errors:
            raise ScenarioError(errors[0].message)
    return s


def scenario_to_dict(s: Scenario) -> dict:
    return {
        "version": SCHEMA_VERSION,
        "topology": {
            "f_up": s.f_up,
            "f_cp": s.f_cp,
            "wavelengths": s.wavelengths,
            "wavelength_capacity_mbps": s.wavelength_capacity_mbps,
            "central_cloud": asdict(s.central_cloud),
            "edge_clouds": [
                {**{k: v for k, v in asdict(ec).items() if k != "cells"},
                 "cells": [{k: v for k, v in asdict(c).items() if k != "ec_id"} for c in ec.cells]}
                for ec in s.edge_clouds
            ],
        },
        "users": [asdict(u) for u in s.users],
        "files": [asdict(f) for f in s.files],
        "split_tables": s.split_tables.to_dict(),
        "power_params": s.power_params.to_dict(),
        "delay_params": s.delay_params.to_dict(),
        "solver_defaults": asdict(s.solver_defaults),
    }


def load_scenario(source: Union[str, Path, dict]) -> Scenario:
    """Load from a path, a JSON string or an already-parsed document."""
    if isinstance(source, dict):
        return scenario_from_dict(source)
    if isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith("{")):
        text = Path(source).read_text(encoding="utf-8")
    else:
        text = source
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioError(f"invalid JSON: {e}") from e
    return scenario_from_dict(doc)


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def save_scenario(s: Scenario, path: Union[str, Path, None] = None) -> str:
    text = dumps(scenario_to_dict(s))
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def table1_document() -> dict:
    return _table1()


def iter_cells(s: Scenario) -> Iterable[CellSpec]:
    for ec in s.edge_clouds:
        yield from ec.cells
