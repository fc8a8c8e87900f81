"""
JSON scenario files.

Every dimensioned value is a string with an explicit unit, e.g.
``"0.01 deg/h"``. Unknown keys are rejected. Each parsed value is recorded
in :attr:`Scenario.audit` with its SI equivalent so reports can echo the
conversions back.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

from .errors import ScenarioError
from .sins_model import Earth, ImuSpec
from .trajectory import RotationProfile, ScenarioConfig
from .units import UnitError, parse_quantity

# key -> (SI dimension, vector length or None for scalar)
_IMU_FIELDS = {
    "sample_rate": ("Hz", None),
    "init_att_err": ("rad", 3),
    "init_vel_err": ("m/s", 3),
    "init_pos_err": ("m", 3),
    "gyro_bias": ("rad/s", 3),
    "acc_bias": ("m/s^2", 3),
    "gyro_sf": ("1", 3),
    "acc_sf": ("1", 3),
    "gyro_mount": ("rad", 3),
    "acc_mount": ("rad", 6),
    "arw": ("rad/sqrt(s)", 3),
    "vrw": ("m/s/sqrt(s)", 3),
}
_SCENARIO_KEYS = {"kind", "lat", "lon", "h", "duration", "rotation", "path"}
_ROTATION_FIELDS = {"rate": "rad/s", "turn_angle": "rad", "dwell": "s", "ramp": "s"}
_RUN_KEYS = {"step", "report_epochs", "vertical_channel", "partition"}
_MC_KEYS = {"N", "seed"}
_TOP_KEYS = {"name", "description", "imu", "scenario", "run", "montecarlo"}


@dataclass(frozen=True)
class AuditEntry:
    key: str
    text: str
    si: float
    unit: str


@dataclass
class RunConfig:
    step: float = 1.0
    report_epochs: list[float] | None = None
    vertical_channel: bool = False
    partition: str = "per-axis"


@dataclass
class MonteCarloConfig:
    count: int = 1000
    seed: int = 0


@dataclass
class Scenario:
    name: str
    imu: ImuSpec
    config: ScenarioConfig
    run: RunConfig
    montecarlo: MonteCarloConfig | None
    audit: list[AuditEntry] = field(default_factory=list)
    base_dir: Path | None = None

    def epochs(self) -> list[float]:
        return list(self.run.report_epochs) if self.run.report_epochs else [self.config.duration]


class _Parser:
    def __init__(self, text: str, source: str):
        self.text = text
        self.source = source
        self.audit: list[AuditEntry] = []

    def fail(self, key: str, msg: str) -> ScenarioError:
        leaf = key.rsplit(".", 1)[-1]
        line = next((i for i, ln in enumerate(self.text.splitlines(), 1) if f'"{leaf}"' in ln), None)
        where = f"{self.source}:{line}" if line else self.source
        return ScenarioError(f"{where}: {key}: {msg}")

    def section(self, obj: Any, key: str, allowed: set[str]) -> dict:
        if not isinstance(obj, dict):
            raise self.fail(key, "expected an object")
        unknown = sorted(set(obj) - allowed)
        if unknown:
            raise self.fail(f"{key}.{unknown[0]}" if key else unknown[0], f"unknown key (allowed: {', '.join(sorted(allowed))})")
        return obj

    def quantity(self, value: Any, key: str, dim: str) -> float:
        try:
            si = parse_quantity(value, dim)
        except UnitError as exc:
            raise self.fail(key, str(exc)) from None
        if not math.isfinite(si):
            raise self.fail(key, "value is not finite")
        self.audit.append(AuditEntry(key, value, si, dim))
        return si

    def vector(self, value: Any, key: str, dim: str, size: int) -> tuple[float, ...]:
        if isinstance(value, list):
            if len(value) != size:
                raise self.fail(key, f"expected {size} values, got {len(value)}")
            return tuple(self.quantity(v, f"{key}[{i}]", dim) for i, v in enumerate(value))
        return (self.quantity(value, key, dim),) * size


def parse_scenario(text: str, source: str = "<scenario>", base_dir: Path | None = None) -> Scenario:
    p = _Parser(text, source)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{source}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from None
    doc = p.section(doc, "", _TOP_KEYS)
    for required in ("imu", "scenario"):
        if required not in doc:
            raise p.fail(required, "missing section")

    imu = p.section(doc["imu"], "imu", set(_IMU_FIELDS))
    kwargs: dict[str, Any] = {}
    for name, (dim, size) in _IMU_FIELDS.items():
        if name not in imu:
            continue
        key = f"imu.{name}"
        kwargs[name] = p.quantity(imu[name], key, dim) if size is None else p.vector(imu[name], key, dim, size)
    try:
        spec = ImuSpec(**kwargs)
    except ValueError as exc:
        raise p.fail("imu", str(exc)) from None

    sc = p.section(doc["scenario"], "scenario", _SCENARIO_KEYS)
    run = p.section(doc.get("run", {}), "run", _RUN_KEYS)
    run_cfg = RunConfig()
    if "step" in run:
        run_cfg.step = p.quantity(run["step"], "run.step", "s")
    if "report_epochs" in run:
        if not isinstance(run["report_epochs"], list) or not run["report_epochs"]:
            raise p.fail("run.report_epochs", "expected a non-empty list")
        run_cfg.report_epochs = [
            p.quantity(v, f"run.report_epochs[{i}]", "s") for i, v in enumerate(run["report_epochs"])
        ]
    if "vertical_channel" in run:
        if not isinstance(run["vertical_channel"], bool):
            raise p.fail("run.vertical_channel", "expected true or false")
        run_cfg.vertical_channel = run["vertical_channel"]
    if "partition" in run:
        if run["partition"] not in ("per-axis", "per-category"):
            raise p.fail("run.partition", "expected 'per-axis' or 'per-category'")
        run_cfg.partition = run["partition"]

    kind = sc.get("kind", "static")
    rotation = None
    if "rotation" in sc:
        rot = p.section(sc["rotation"], "scenario.rotation", set(_ROTATION_FIELDS))
        rkw = {k: p.quantity(v, f"scenario.rotation.{k}", _ROTATION_FIELDS[k]) for k, v in rot.items()}
        try:
            rotation = RotationProfile(**rkw)
        except ValueError as exc:
            raise p.fail("scenario.rotation", str(exc)) from None
    try:
        config = ScenarioConfig(
            kind=kind,
            lat=p.quantity(sc.get("lat", "34 deg"), "scenario.lat", "rad"),
            lon=p.quantity(sc.get("lon", "108 deg"), "scenario.lon", "rad"),
            h=p.quantity(sc.get("h", "0 m"), "scenario.h", "m"),
            duration=p.quantity(sc["duration"], "scenario.duration", "s") if "duration" in sc else 3600.0,
            step=run_cfg.step,
            rotation=rotation,
            path=sc.get("path"),
            earth=Earth(),
        )
    except ValueError as exc:
        raise p.fail("scenario", str(exc)) from None
    for epoch in run_cfg.report_epochs or []:
        if not 0.0 <= epoch <= config.duration + 1e-9:
            raise p.fail("run.report_epochs", f"epoch {epoch} s outside [0, {config.duration}] s")

    mc = None
    if "montecarlo" in doc:
        m = p.section(doc["montecarlo"], "montecarlo", _MC_KEYS)
        mc = MonteCarloConfig()
        if "N" in m:
            if not isinstance(m["N"], int) or isinstance(m["N"], bool):
                raise p.fail("montecarlo.N", "expected an integer")
            mc.count = m["N"]
        if "seed" in m:
            if not isinstance(m["seed"], int) or isinstance(m["seed"], bool) or m["seed"] < 0:
                raise p.fail("montecarlo.seed", "expected a non-negative integer")
            mc.seed = m["seed"]

    if not run_cfg.vertical_channel and (spec.init_vel_err[2] or spec.init_pos_err[2]):
        raise p.fail("imu.init_vel_err", "vertical initial errors need run.vertical_channel = true")

    return Scenario(
        name=str(doc.get("name", Path(source).stem)),
        imu=spec,
        config=config,
        run=run_cfg,
        montecarlo=mc,
        audit=p.audit,
        base_dir=base_dir,
    )


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"{path}: {exc.strerror}") from None
    return parse_scenario(text, str(path), path.parent)


BUNDLED = ("static_navgrade", "rotation_navgrade")


def bundled_scenario_path(name: str) -> Path:
    """Path of a scenario shipped with the package (``static_navgrade`` or ``rotation_navgrade``)."""
    if name not in BUNDLED:
        raise KeyError(f"no bundled scenario {name!r}; available: {', '.join(BUNDLED)}")
    return Path(str(resources.files("sinsbudget") / "data" / f"{name}.json"))
