"""JSON configuration for model parameters.

A config file is a JSON object. The optional ``models`` section builds the
device models; any other top-level key names a CLI subcommand and holds its
parameter overrides.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, fields, is_dataclass
from importlib import resources
from pathlib import Path
from typing import Any

from .constants import DriveSpec, SpinSystem
from .readout.spin_to_charge import TunnelSpec
from .readout.stability import DQDConfig
from .readout.tia import TIA_MODELS, TiaModel
from .sequence.engine import Models

__all__ = ["load_config", "reference_config", "models_from_dict", "models_to_dict", "tia_from", "config_hash"]


def load_config(path: str | Path | None) -> dict[str, Any]:
    if path is None:
        return {}
    data = json.loads(Path(path).read_text())
    if not isinstance(data, dict):
        raise ValueError(f"config {path} must hold a JSON object")
    return data


def reference_config() -> dict[str, Any]:
    text = resources.files("spinsim").joinpath("data/models.json").read_text()
    return json.loads(text)


def _build(cls, data: dict[str, Any] | None):
    data = dict(data or {})
    names = {f.name for f in fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ValueError(f"unknown {cls.__name__} fields: {sorted(unknown)}")
    return cls(**data)


def tia_from(spec: str | dict[str, Any] | None) -> TiaModel:
    if spec is None:
        return TIA_MODELS["300K"]
    if isinstance(spec, str):
        try:
            return TIA_MODELS[spec]
        except KeyError:
            raise ValueError(f"unknown TIA preset {spec!r}; choose from {sorted(TIA_MODELS)}") from None
    return _build(TiaModel, spec)


def models_from_dict(data: dict[str, Any] | None) -> Models:
    """Build :class:`Models` from a ``models`` section; missing parts use defaults."""
    data = dict(data or {})
    spin = _build(SpinSystem, data.pop("spin", None))
    drive_d = data.pop("drive", None)
    if drive_d is None:
        drive = DriveSpec.from_rabi(750e6, g=spin.g_factor)
    elif "B1" in drive_d and "f_R" not in drive_d:
        drive = DriveSpec.from_field(drive_d["B1"], g=spin.g_factor, phase=drive_d.get("phase", 0.0))
    else:
        drive = DriveSpec.from_rabi(drive_d["f_R"], g=spin.g_factor, phase=drive_d.get("phase", 0.0))
    kw = dict(
        dqd=_build(DQDConfig, data.pop("dqd", None)),
        tunnel=_build(TunnelSpec, data.pop("tunnel", None)),
        tia=tia_from(data.pop("tia", None)),
        drive=drive,
        spin=spin,
    )
    for key in ("i_peak", "sensor_pulse", "crosstalk"):
        if key in data:
            kw[key] = float(data.pop(key))
    if data:
        raise ValueError(f"unknown model sections: {sorted(data)}")
    return Models(**kw)


def models_to_dict(m: Models) -> dict[str, Any]:
    out = {k: (asdict(v) if is_dataclass(v) else v) for k, v in m.__dict__.items()}
    return out


def config_hash(obj: Any) -> str:
    text = json.dumps(obj, sort_keys=True, default=str, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:16]
