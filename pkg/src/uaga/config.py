"""Run configuration: built-in defaults, overridden by a TOML/JSON file,
overridden by command-line flags.
"""
from __future__ import annotations

import json
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .adversarial import AdvConfig
from .embedding import WalkConfig
from .errors import UagaError
from .incremental import AlignConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = ["RunConfig", "FLAGS", "load_config_file", "resolve_config"]

SECTIONS = {"walk": WalkConfig, "adversarial": AdvConfig, "align": AlignConfig}

# (flag, section, field, type, help)
FLAGS = [
    ("--walks-per-node", "walk", "walks_per_node", int, "random walks started per node"),
    ("--walk-length", "walk", "walk_length", int, "nodes per walk"),
    ("--window", "walk", "window", int, "skip-gram context window"),
    ("--dim", "walk", "dim", int, "embedding dimension"),
    ("--negatives", "walk", "negatives", int, "negative samples per context pair"),
    ("--walk-epochs", "walk", "epochs", int, "skip-gram passes over the walk corpus"),
    ("--walk-lr", "walk", "initial_lr", float, "initial skip-gram learning rate"),
    ("--epochs", "adversarial", "epochs", int, "adversarial training epochs"),
    ("--batch", "adversarial", "batch", int, "adversarial batch size"),
    ("--lr", "adversarial", "lr", float, "adversarial SGD learning rate"),
    ("--lr-decay", "adversarial", "lr_decay", float, "learning-rate factor applied after each epoch"),
    ("--epoch-size", "adversarial", "epoch_size", int,
     "samples per adversarial epoch (unset: size of the larger graph)"),
    ("--disc-steps", "adversarial", "disc_steps_per_map_step", int, "discriminator steps per map step"),
    ("--beta", "adversarial", "beta", float, "orthogonality update strength"),
    ("--hidden", "adversarial", "hidden", int, "discriminator hidden units"),
    ("--dropout", "adversarial", "input_dropout", float, "discriminator input dropout rate"),
    ("--smoothing", "adversarial", "smoothing", float, "discriminator label smoothing s"),
    ("--init", "adversarial", "init", str, "initial map: identity or moments"),
    ("--k", "align", "k", int, "neighbourhood size K of the similarity correction"),
    ("--threshold", "align", "threshold", float, "minimum CGSS score of a pseudo anchor"),
    ("--top", "align", "top", int, "candidate list length written and evaluated"),
    ("--outer-max", "align", "outer_max", int, "maximum incremental rounds"),
    ("--stop-tol", "align", "stop_tol", float, "relative anchor-set change that counts as converged"),
]


def flag_dest(flag: str) -> str:
    return flag.lstrip("-").replace("-", "_")


@dataclass(frozen=True)
class RunConfig:
    walk: WalkConfig = field(default_factory=WalkConfig)
    adversarial: AdvConfig = field(default_factory=AdvConfig)
    align: AlignConfig = field(default_factory=AlignConfig)

    def to_dict(self) -> dict:
        return {name: asdict(getattr(self, name)) for name in SECTIONS}


def load_config_file(path) -> dict:
    """Parse a TOML or JSON file into ``{section: {field: value}}``."""
    p = Path(path)
    if not p.exists():
        raise UagaError(f"config file not found: {p}")
    text = p.read_text(encoding="utf-8")
    try:
        data = json.loads(text) if p.suffix == ".json" else tomllib.loads(text)
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        raise UagaError(f"cannot parse config {p}: {exc}") from None
    for section, values in data.items():
        if section not in SECTIONS:
            raise UagaError(f"{p}: unknown section [{section}]; expected one of {', '.join(SECTIONS)}")
        known = {f.name for f in fields(SECTIONS[section])}
        bad = set(values) - known
        if bad:
            raise UagaError(f"{p}: unknown key(s) in [{section}]: {', '.join(sorted(bad))}")
    return data


def resolve_config(file_values: dict | None = None, overrides: dict | None = None) -> RunConfig:
    """Defaults, then ``file_values``, then non-None ``overrides``.

    ``overrides`` maps ``(section, field)`` to a value.
    """
    merged = {name: {} for name in SECTIONS}
    for section, values in (file_values or {}).items():
        merged[section].update(values)
    for (section, name), value in (overrides or {}).items():
        if value is not None:
            merged[section][name] = value
    try:
        return RunConfig(**{name: cls(**merged[name]) for name, cls in SECTIONS.items()})
    except TypeError as exc:
        raise UagaError(f"invalid configuration: {exc}") from None
