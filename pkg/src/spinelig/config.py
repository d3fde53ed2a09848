"""
Pipeline configuration and its flat ``key = value`` file format.

Example::

    poi_scheme = poi15
    with_scale = true
    edge_radius = auto
    rule.SSL.plane_axis = LR
    rule.SSL.search_radius = 4
    hint_ap = 0 1 0

Blank lines and ``#`` comments are ignored. Keys are the ``PipelineConfig``
field names; projection rules use ``rule.<GROUP>.<field>``.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .errors import InvalidSpec
from .landmarks import LigamentGroup
from .poi import SCHEMES
from .projection import ProjectionRule, default_rules

PATH_KEYS = ("atlas_mesh", "atlas_landmarks", "target_mesh", "out")
HINT_KEYS = ("hint_lr", "hint_ap", "hint_si")


def _flag(text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise InvalidSpec(f"expected a boolean, got {text!r}")


@dataclass(frozen=True)
class PipelineConfig:
    poi_scheme: str = "poi15"
    with_scale: bool = True
    edge_radius: object = "auto"
    rules: dict = field(default_factory=default_rules)
    seed: int = 0
    hint_lr: tuple | None = None
    hint_ap: tuple | None = None
    hint_si: tuple | None = None
    atlas_mesh: str | None = None
    atlas_landmarks: str | None = None
    target_mesh: str | None = None
    out: str | None = None

    def __post_init__(self):
        if self.poi_scheme not in SCHEMES:
            raise InvalidSpec(f"poi_scheme must be one of {sorted(SCHEMES)}")
        if self.edge_radius != "auto":
            r = float(self.edge_radius)
            if not r > 0:
                raise InvalidSpec("edge_radius must be positive or 'auto'")
            object.__setattr__(self, "edge_radius", r)
        hints = [getattr(self, k) for k in HINT_KEYS]
        if any(h is not None for h in hints) and any(h is None for h in hints):
            raise InvalidSpec("orientation hints need all of hint_lr, hint_ap, hint_si")
        object.__setattr__(self, "rules", {LigamentGroup(k): v for k, v in self.rules.items()})

    @property
    def hints(self):
        """Hint axes as rows ``(lr, ap, si)``, or None."""
        if self.hint_lr is None:
            return None
        return np.array([self.hint_lr, self.hint_ap, self.hint_si], dtype=np.float64)

    def check_paths(self, keys=PATH_KEYS[:3]):
        for k in keys:
            p = getattr(self, k)
            if p is not None and not os.path.exists(p):
                raise FileNotFoundError(f"{k}: {p}")

    def with_overrides(self, values):
        """Copy with ``values`` (same keys as the file format) applied."""
        return apply_settings(self, values)

    def dumps(self):
        lines = [f"poi_scheme = {self.poi_scheme}",
                 f"with_scale = {str(self.with_scale).lower()}",
                 f"edge_radius = {self.edge_radius}",
                 f"seed = {self.seed}"]
        for k in HINT_KEYS:
            if getattr(self, k) is not None:
                lines.append(f"{k} = " + " ".join(repr(float(x)) for x in getattr(self, k)))
        for g, r in self.rules.items():
            lines += [f"rule.{g.value}.plane_axis = {r.plane_axis}",
                      f"rule.{g.value}.search_radius = {r.search_radius!r}",
                      f"rule.{g.value}.plane_mode = {r.plane_mode}"]
        for k in PATH_KEYS:
            if getattr(self, k) is not None:
                lines.append(f"{k} = {getattr(self, k)}")
        return "\n".join(lines) + "\n"


_SCALAR = {f.name for f in fields(PipelineConfig)} - {"rules"}


def apply_settings(config, values):
    """Apply ``{key: text}`` settings to ``config``; unknown keys raise InvalidSpec."""
    changes = {}
    rules = dict(config.rules)
    for key, text in values.items():
        if key.startswith("rule."):
            parts = key.split(".")
            if len(parts) != 3 or parts[2] not in ("plane_axis", "search_radius", "plane_mode"):
                raise InvalidSpec(f"bad rule key {key!r}")
            try:
                g = LigamentGroup(parts[1])
            except ValueError:
                raise InvalidSpec(f"unknown ligament group in {key!r}") from None
            v = float(text) if parts[2] == "search_radius" else str(text).strip()
            try:
                rules[g] = replace(rules.get(g, ProjectionRule(g)), **{parts[2]: v})
            except ValueError as exc:
                raise InvalidSpec(f"{key}: {exc}") from None
        elif key not in _SCALAR:
            raise InvalidSpec(f"unknown config key {key!r}")
        elif key == "with_scale":
            changes[key] = _flag(text)
        elif key == "seed":
            changes[key] = int(text)
        elif key in HINT_KEYS:
            vec = tuple(float(x) for x in str(text).replace(",", " ").split())
            if len(vec) != 3:
                raise InvalidSpec(f"{key} needs three numbers")
            changes[key] = vec
        elif key == "edge_radius":
            changes[key] = "auto" if str(text).strip() == "auto" else float(text)
        else:
            changes[key] = str(text).strip()
    try:
        return replace(config, rules=rules, **changes)
    except ValueError as exc:
        raise InvalidSpec(str(exc)) from None


def parse_config(text):
    values = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidSpec(f"line {n}: expected key = value")
        k, v = line.split("=", 1)
        values[k.strip()] = v.strip()
    return apply_settings(PipelineConfig(), values)


def load_config(path):
    with open(path) as fh:
        return parse_config(fh.read())
