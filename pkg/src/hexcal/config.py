"""Geometry and scenario configuration files (YAML).

Errors point at the line of the offending node, or at the enclosing mapping
when a field is missing.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import yaml

from .errors import ConfigError
from .geometry import POSE_FIELDS, PlatformGeometry, PoseBounds
from .simulator import NoiseSpec, PerturbationSpec

GEOMETRY_FIELDS = ("base_joints", "platform_joints", "leg_min_mm", "leg_max_mm", "fd_mm",
                   "gd_home_mm", "ug_offset_mm", "pose_bounds", "singularity_tol")


@dataclass(frozen=True)
class Scenario:
    geometry: PlatformGeometry
    perturbation: PerturbationSpec
    noise: NoiseSpec
    pose_count: int
    seed: int


def _line(node) -> int:
    return node.start_mark.line + 1


class _Reader:
    def __init__(self, path):
        self.path = path

    def error(self, message, node=None):
        return ConfigError(message, line=None if node is None else _line(node), path=self.path)

    def compose(self, text):
        try:
            node = yaml.compose(text, Loader=yaml.SafeLoader)
        except yaml.MarkedYAMLError as exc:
            mark = exc.problem_mark or exc.context_mark
            line = mark.line + 1 if mark is not None else None
            raise ConfigError(f"YAML syntax error: {exc.problem}", line=line, path=self.path) from exc
        if node is None:
            raise ConfigError("file is empty", line=1, path=self.path)
        return node

    def mapping(self, node, what):
        if not isinstance(node, yaml.MappingNode):
            raise self.error(f"{what} must be a mapping", node)
        out = {}
        for key, value in node.value:
            if key.value in out:
                raise self.error(f"duplicate field '{key.value}'", key)
            out[key.value] = value
        return out

    def require(self, fields, name, parent):
        if name not in fields:
            raise self.error(f"missing field '{name}'", parent)
        return fields[name]

    def number(self, node, name):
        if not isinstance(node, yaml.ScalarNode):
            raise self.error(f"'{name}' must be a number", node)
        try:
            value = float(node.value)
        except ValueError:
            raise self.error(f"'{name}' must be a number, got '{node.value}'", node) from None
        if not math.isfinite(value):
            raise self.error(f"'{name}' must be finite", node)
        return value

    def integer(self, node, name):
        if not isinstance(node, yaml.ScalarNode):
            raise self.error(f"'{name}' must be an integer", node)
        try:
            return int(node.value, 0)
        except ValueError:
            raise self.error(f"'{name}' must be an integer, got '{node.value}'", node) from None

    def vector(self, node, name, n):
        if not isinstance(node, yaml.SequenceNode) or len(node.value) != n:
            count = len(node.value) if isinstance(node, yaml.SequenceNode) else "a scalar"
            raise self.error(f"'{name}' must have {n} entries, got {count}", node)
        return [self.number(v, name) for v in node.value]

    def matrix(self, node, name, rows, cols):
        if not isinstance(node, yaml.SequenceNode) or len(node.value) != rows:
            count = len(node.value) if isinstance(node, yaml.SequenceNode) else "a scalar"
            raise self.error(f"'{name}' must have {rows} rows, got {count}", node)
        return [self.vector(row, f"{name}[{i}]", cols) for i, row in enumerate(node.value)]


def _geometry_from_node(reader: _Reader, node) -> PlatformGeometry:
    fields = reader.mapping(node, "geometry")
    for name in GEOMETRY_FIELDS:
        reader.require(fields, name, node)
    bounds_node = fields["pose_bounds"]
    bounds_fields = reader.mapping(bounds_node, "pose_bounds")
    lower, upper = [], []
    for name in POSE_FIELDS:
        lo, hi = reader.vector(reader.require(bounds_fields, name, bounds_node),
                               f"pose_bounds.{name}", 2)
        lower.append(lo)
        upper.append(hi)
    try:
        return PlatformGeometry(
            base_joints=reader.matrix(fields["base_joints"], "base_joints", 6, 3),
            platform_joints=reader.matrix(fields["platform_joints"], "platform_joints", 6, 3),
            leg_min=reader.number(fields["leg_min_mm"], "leg_min_mm"),
            leg_max=reader.number(fields["leg_max_mm"], "leg_max_mm"),
            fd=reader.number(fields["fd_mm"], "fd_mm"),
            gd_home=reader.number(fields["gd_home_mm"], "gd_home_mm"),
            ug_offset=reader.vector(fields["ug_offset_mm"], "ug_offset_mm", 3),
            pose_bounds=PoseBounds(tuple(lower), tuple(upper)),
            singularity_tol=reader.number(fields["singularity_tol"], "singularity_tol"),
        )
    except ValueError as exc:
        raise reader.error(f"invalid geometry: {exc}", node) from exc


def parse_geometry(text: str, path=None) -> PlatformGeometry:
    reader = _Reader(path)
    return _geometry_from_node(reader, reader.compose(text))


def load_geometry(path) -> PlatformGeometry:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read geometry file: {exc.strerror}", path=path) from exc
    return parse_geometry(text, path)


def reference_geometry_text() -> str:
    return resources.files("hexcal").joinpath("data/reference_geometry.yaml").read_text("utf-8")


def reference_geometry() -> PlatformGeometry:
    """The bundled symmetric 6-6 reference platform."""
    return parse_geometry(reference_geometry_text(), "<reference_geometry.yaml>")


def parse_scenario(text: str, path=None) -> Scenario:
    reader = _Reader(path)
    root = reader.compose(text)
    fields = reader.mapping(root, "scenario")

    geom_node = reader.require(fields, "geometry", root)
    if isinstance(geom_node, yaml.ScalarNode):
        geom_path = Path(geom_node.value)
        if path is not None and not geom_path.is_absolute():
            geom_path = Path(path).parent / geom_path
        if geom_node.value == "reference":
            geometry = reference_geometry()
        else:
            geometry = load_geometry(geom_path)
    else:
        geometry = _geometry_from_node(reader, geom_node)

    pose_count = reader.integer(reader.require(fields, "pose_count", root), "pose_count")
    if pose_count < 1:
        raise reader.error("'pose_count' must be >= 1", fields["pose_count"])
    seed = reader.integer(reader.require(fields, "seed", root), "seed")

    pert_node = reader.require(fields, "perturbation", root)
    pert = reader.mapping(pert_node, "perturbation")
    bias_node = reader.require(pert, "leg_offset_bias_mm", pert_node)
    if isinstance(bias_node, yaml.ScalarNode):
        bias = [reader.number(bias_node, "leg_offset_bias_mm")] * 6
    else:
        bias = reader.vector(bias_node, "leg_offset_bias_mm", 6)
    try:
        perturbation = PerturbationSpec(
            joint_position_noise=reader.number(
                reader.require(pert, "joint_position_noise_mm", pert_node),
                "joint_position_noise_mm"),
            leg_offset_bias=tuple(bias),
            seed=reader.integer(pert["seed"], "seed") if "seed" in pert else seed,
        )
    except ValueError as exc:
        raise reader.error(f"invalid perturbation: {exc}", pert_node) from exc

    noise_node = reader.require(fields, "noise", root)
    noise_fields = reader.mapping(noise_node, "noise")
    try:
        noise = NoiseSpec(
            position_sigma=reader.number(
                reader.require(noise_fields, "position_sigma_mm", noise_node), "position_sigma_mm"),
            orientation_sigma=reader.number(
                reader.require(noise_fields, "orientation_sigma_deg", noise_node),
                "orientation_sigma_deg"),
            seed=(reader.integer(noise_fields["seed"], "seed")
                  if "seed" in noise_fields else seed),
        )
    except ValueError as exc:
        raise reader.error(f"invalid noise: {exc}", noise_node) from exc

    return Scenario(geometry, perturbation, noise, pose_count, seed)


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read scenario file: {exc.strerror}", path=path) from exc
    return parse_scenario(text, path)
