"""Scenario configuration: JSON schema, loading and defaults."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from maggrab.errors import ConfigError
from maggrab.fieldsim import Conductor, FieldScene
from maggrab.geom import Line3, RigidTransform, rotation_from_rotvec
from maggrab.grasp import ProcedureParams
from maggrab.localize import SensorRig
from maggrab.sigproc import AMPLITUDE_FLOOR

log = logging.getLogger(__name__)

_VEC3 = {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3}
_TRANSFORM = {
    "type": "object",
    "properties": {
        "translation": _VEC3,
        "rotvec": _VEC3,
        "rotation": {"type": "array", "items": _VEC3, "minItems": 3, "maxItems": 3},
    },
    "required": ["translation"],
    "additionalProperties": False,
    "not": {"required": ["rotvec", "rotation"]},
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "maggrab scenario",
    "type": "object",
    "properties": {
        "name": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0},
        "scene": {
            "type": "object",
            "properties": {
                "conductors": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "properties": {
                            "point": _VEC3,
                            "direction": _VEC3,
                            "current_rms": {"type": "number", "exclusiveMinimum": 0},
                            "frequency": {"type": "number", "exclusiveMinimum": 0},
                            "phase": {"type": "number"},
                        },
                        "required": ["point", "direction", "current_rms", "frequency"],
                        "additionalProperties": False,
                    },
                },
                "earth_field": _VEC3,
                "noise_sigma": {"type": "number", "minimum": 0},
                "full_scale": {"type": ["number", "null"], "exclusiveMinimum": 0},
            },
            "required": ["conductors"],
            "additionalProperties": False,
        },
        "rig": {
            "type": "object",
            "properties": {"m1_mount": _TRANSFORM, "m2_mount": _TRANSFORM},
            "required": ["m1_mount", "m2_mount"],
            "additionalProperties": False,
        },
        "base_pose": _TRANSFORM,
        "start_poses": {"type": "array", "items": _TRANSFORM},
        "procedure": {
            "type": "object",
            "properties": {
                "alpha_min_deg": {"type": "number", "exclusiveMinimum": 0, "maximum": 90},
                "approach_offset_d": {"type": "number", "exclusiveMinimum": 0},
                "d_min": {"type": "number", "exclusiveMinimum": 0},
                "d_max": {"type": "number", "exclusiveMinimum": 0},
                "dwell_k": {"type": "number", "exclusiveMinimum": 0},
                "max_iterations": {"type": "integer", "minimum": 1},
            },
            "additionalProperties": False,
        },
        "sampling": {
            "type": "object",
            "properties": {
                "rate": {"type": "number", "exclusiveMinimum": 0},
                "window_length": {"type": "integer", "minimum": 2},
                "target_frequency": {"type": "number", "exclusiveMinimum": 0},
                "amplitude_floor": {"type": "number", "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
    },
    "required": ["scene", "rig", "start_poses"],
    "additionalProperties": False,
}


def transform_from_json(d: dict) -> RigidTransform:
    if "rotation" in d:
        R = np.asarray(d["rotation"], dtype=float)
    else:
        R = rotation_from_rotvec(d.get("rotvec", (0.0, 0.0, 0.0)))
    return RigidTransform(R, d["translation"])


def transform_to_json(T: RigidTransform) -> dict:
    return {"translation": T.translation.tolist(), "rotation": T.rotation.tolist()}


@dataclass(frozen=True, eq=False)
class ScenarioConfig:
    scene: FieldScene
    m1_mount: RigidTransform
    m2_mount: RigidTransform
    start_poses: tuple
    base_pose: RigidTransform = field(default_factory=RigidTransform.identity)
    params: ProcedureParams = field(default_factory=ProcedureParams)
    rate: float = 200.0
    window_length: int = 200
    target_frequency: float = 50.0
    amplitude_floor: float = AMPLITUDE_FLOOR
    seed: int = 0
    name: str = "scenario"

    @property
    def rig(self) -> SensorRig:
        return SensorRig.from_poses(self.m1_mount, self.m2_mount)

    @property
    def windows_per_dwell(self) -> int:
        return max(1, int(math.floor(self.params.dwell_k * self.rate / self.window_length + 1e-9)))

    @property
    def bin_aligned(self) -> bool:
        cycles = self.window_length / self.rate * self.target_frequency
        return abs(cycles - round(cycles)) < 1e-9

    def with_seed(self, seed: int) -> "ScenarioConfig":
        return replace(self, seed=seed, scene=replace(self.scene, rng_seed=seed))

    def with_noise(self, sigma: float) -> "ScenarioConfig":
        return replace(self, scene=replace(self.scene, noise_sigma=sigma))

    def truth_line_base(self, index: int = 0) -> Line3:
        """Ground-truth conductor ``index`` in the robot-base frame."""
        return self.base_pose.inverse().apply_line(self.scene.conductors[index].line)


def config_from_dict(doc: dict) -> ScenarioConfig:
    try:
        jsonschema.validate(doc, SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {path}: {exc.message}") from None

    sc = doc["scene"]
    seed = int(doc.get("seed", 0))
    try:
        conductors = [
            Conductor(
                Line3(c["point"], c["direction"]),
                float(c["current_rms"]),
                float(c["frequency"]),
                float(c.get("phase", 0.0)),
            )
            for c in sc["conductors"]
        ]
        scene = FieldScene(
            conductors,
            sc.get("earth_field", (0.0, 0.0, 0.0)),
            float(sc.get("noise_sigma", 0.0)),
            seed,
            sc.get("full_scale"),
        )
        pr = doc.get("procedure", {})
        defaults = ProcedureParams()
        params = ProcedureParams(
            alpha_min=math.radians(pr["alpha_min_deg"]) if "alpha_min_deg" in pr else defaults.alpha_min,
            approach_offset_d=pr.get("approach_offset_d", defaults.approach_offset_d),
            d_min=pr.get("d_min", defaults.d_min),
            d_max=pr.get("d_max", defaults.d_max),
            dwell_k=pr.get("dwell_k", defaults.dwell_k),
            max_iterations=pr.get("max_iterations", defaults.max_iterations),
        )
        sa = doc.get("sampling", {})
        cfg = ScenarioConfig(
            scene=scene,
            m1_mount=transform_from_json(doc["rig"]["m1_mount"]),
            m2_mount=transform_from_json(doc["rig"]["m2_mount"]),
            start_poses=tuple(transform_from_json(p) for p in doc["start_poses"]),
            base_pose=transform_from_json(doc["base_pose"]) if "base_pose" in doc else RigidTransform.identity(),
            params=params,
            rate=float(sa.get("rate", 200.0)),
            window_length=int(sa.get("window_length", 200)),
            target_frequency=float(sa.get("target_frequency", 50.0)),
            amplitude_floor=float(sa.get("amplitude_floor", AMPLITUDE_FLOOR)),
            seed=seed,
            name=doc.get("name", "scenario"),
        )
        cfg.rig  # coincident mounts are rejected here
    except ValueError as exc:
        raise ConfigError(f"config invalid: {exc}") from None

    if cfg.target_frequency >= cfg.rate / 2:
        raise ConfigError("target_frequency must be below rate/2")
    if not cfg.bin_aligned:
        log.warning(
            "window of %d samples at %g Hz is not an integer number of %g Hz periods; expect spectral leakage",
            cfg.window_length, cfg.rate, cfg.target_frequency,
        )
    return cfg


def config_to_dict(cfg: ScenarioConfig) -> dict:
    p = cfg.params
    return {
        "name": cfg.name,
        "seed": cfg.seed,
        "scene": {
            "conductors": [
                {
                    "point": c.line.point.tolist(),
                    "direction": c.line.direction.tolist(),
                    "current_rms": c.current_rms,
                    "frequency": c.frequency,
                    "phase": c.phase,
                }
                for c in cfg.scene.conductors
            ],
            "earth_field": cfg.scene.earth_field.tolist(),
            "noise_sigma": cfg.scene.noise_sigma,
            "full_scale": cfg.scene.full_scale,
        },
        "rig": {"m1_mount": transform_to_json(cfg.m1_mount), "m2_mount": transform_to_json(cfg.m2_mount)},
        "base_pose": transform_to_json(cfg.base_pose),
        "start_poses": [transform_to_json(T) for T in cfg.start_poses],
        "procedure": {
            "alpha_min_deg": math.degrees(p.alpha_min),
            "approach_offset_d": p.approach_offset_d,
            "d_min": p.d_min,
            "d_max": p.d_max,
            "dwell_k": p.dwell_k,
            "max_iterations": p.max_iterations,
        },
        "sampling": {
            "rate": cfg.rate,
            "window_length": cfg.window_length,
            "target_frequency": cfg.target_frequency,
            "amplitude_floor": cfg.amplitude_floor,
        },
    }


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from None
    return config_from_dict(doc)


def _bundled(name: str) -> dict:
    return json.loads(resources.files("maggrab.data").joinpath(name).read_text())


def default_config_dict() -> dict:
    """The lab scenario: one 36 A / 50 Hz wire, 20 cm sensor baseline, 12 start poses."""
    return _bundled("default_scenario.json")


def default_config() -> ScenarioConfig:
    return config_from_dict(default_config_dict())


def repeatability_config_dict() -> dict:
    """Twelve copies of one start pose with 0.5 uT sensor noise."""
    return _bundled("repeatability_scenario.json")


def repeatability_config() -> ScenarioConfig:
    return config_from_dict(repeatability_config_dict())
