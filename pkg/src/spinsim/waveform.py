"""Uniformly sampled signals with a physical unit tag."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

UNITS = ("volt", "ampere", "tesla")


@dataclass(frozen=True, eq=False)
class Waveform:
    """Samples taken at ``t0 + k / fs``.

    Samples are real for passband signals; complex samples hold a baseband
    envelope relative to a carrier recorded in ``meta``.
    """

    samples: np.ndarray
    fs: float
    t0: float = 0.0
    unit: str = "volt"
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples)
        if samples.ndim != 1 or samples.size < 1:
            raise ValueError("waveform needs a 1-D array with at least one sample")
        if not self.fs > 0:
            raise ValueError(f"sample rate must be positive, got {self.fs}")
        if self.unit not in UNITS:
            raise ValueError(f"unknown unit {self.unit!r}; expected one of {UNITS}")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return self.samples.size

    @property
    def dt(self) -> float:
        return 1.0 / self.fs

    @property
    def duration(self) -> float:
        return self.samples.size / self.fs

    @property
    def t_end(self) -> float:
        return self.t0 + self.duration

    @property
    def time(self) -> np.ndarray:
        return self.t0 + np.arange(self.samples.size) / self.fs

    @property
    def is_baseband(self) -> bool:
        return np.iscomplexobj(self.samples)

    def replace(self, samples: np.ndarray | None = None, **changes: Any) -> Waveform:
        kwargs = dict(
            samples=self.samples if samples is None else samples,
            fs=self.fs,
            t0=self.t0,
            unit=self.unit,
            meta=dict(self.meta),
        )
        kwargs.update(changes)
        return Waveform(**kwargs)

    def __mul__(self, k: float) -> Waveform:
        return self.replace(self.samples * k)

    __rmul__ = __mul__

    def __add__(self, other: Waveform) -> Waveform:
        if not isinstance(other, Waveform):
            return NotImplemented
        if other.unit != self.unit or other.fs != self.fs or other.t0 != self.t0:
            raise ValueError("can only add waveforms sharing unit, fs and t0")
        if len(other) != len(self):
            raise ValueError("waveform lengths differ")
        return self.replace(self.samples + other.samples)

    def to_csv(self, path: str | Path) -> Path:
        """Write ``time_s,value`` rows plus a ``.json`` sidecar with metadata.

        Baseband waveforms get ``real`` and ``imag`` columns instead.
        """
        path = Path(path)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            if self.is_baseband:
                writer.writerow(["time_s", "real", "imag"])
                for t, v in zip(self.time, self.samples):
                    writer.writerow([repr(float(t)), repr(float(v.real)), repr(float(v.imag))])
            else:
                writer.writerow(["time_s", "value"])
                for t, v in zip(self.time, self.samples):
                    writer.writerow([repr(float(t)), repr(float(v))])
        sidecar = path.with_suffix(".json")
        sidecar.write_text(json.dumps(self.sidecar(), indent=2, sort_keys=True) + "\n")
        return path

    def sidecar(self) -> dict[str, Any]:
        return {
            "fs": self.fs,
            "t0": self.t0,
            "unit": self.unit,
            "n_samples": len(self),
            "baseband": self.is_baseband,
            "meta": _jsonable(self.meta),
        }

    @classmethod
    def from_csv(cls, path: str | Path) -> Waveform:
        path = Path(path)
        info = json.loads(path.with_suffix(".json").read_text())
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        if info.get("baseband"):
            samples = data[:, 1] + 1j * data[:, 2]
        else:
            samples = data[:, 1]
        return cls(samples, fs=info["fs"], t0=info["t0"], unit=info["unit"], meta=info.get("meta", {}))


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return str(obj)
    return obj
