"""Physical parameters of the driven four-level atom between two waveguides.

Units: hbar = k_B = 1 and gamma21 = 1 sets the frequency scale. Temperatures
are given as k_B*T in the same units.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any, Mapping

# Transition -> reservoir assignment is fixed by the geometry: waveguide 1
# couples 2<->1 and 4<->3, waveguide 2 couples 3<->1 and 4<->2.
TRANSITIONS = ((2, 1), (3, 1), (4, 2), (4, 3))
RESERVOIR = {(2, 1): 1, (4, 3): 1, (3, 1): 2, (4, 2): 2}

CONFIG_FIELDS = (
    "omega1", "omega2", "omega3", "omega4",
    "gamma21", "gamma31", "gamma42", "gamma43",
    "rabi42", "rabi43",
    "laser42", "laser43",
    "temp1", "temp2",
)

SECULAR_GAP_FACTOR = 10.0
WEAK_COUPLING_FRACTION = 0.1


class ConfigError(ValueError):
    """Raised for a configuration that violates a hard physical constraint."""


@dataclass(frozen=True, order=True)
class TransitionId:
    upper: int
    lower: int

    def __post_init__(self):
        if (self.upper, self.lower) not in TRANSITIONS:
            raise ValueError(f"no coupled transition {self.upper}<->{self.lower}")

    @property
    def label(self) -> str:
        return f"{self.upper}{self.lower}"

    @property
    def reservoir(self) -> int:
        return RESERVOIR[(self.upper, self.lower)]


ALL_TRANSITIONS = tuple(TransitionId(u, l) for u, l in TRANSITIONS)


def bose_occupation(omega: float, T: float) -> float:
    """Mean thermal photon number 1/(exp(omega/T) - 1).

    T = 0 maps to exactly 0, and so does any omega/T large enough that the
    exponential would overflow.
    """
    if not omega > 0:
        raise ValueError(f"occupation undefined for non-positive frequency {omega!r}")
    if T < 0:
        raise ValueError(f"negative temperature {T!r}")
    if T == 0:
        return 0.0
    x = omega / T
    if x > 700.0:
        return 0.0
    return 1.0 / math.expm1(x)


@dataclass(frozen=True)
class SystemConfig:
    omega: tuple[float, float, float, float]
    gamma: tuple[float, float, float, float]  # (21, 31, 42, 43)
    rabi: tuple[float, float]  # (42, 43)
    laser_freq: tuple[float, float]  # (42, 43)
    temperature: tuple[float, float]  # (T1, T2)

    def __post_init__(self):
        for name, n in (("omega", 4), ("gamma", 4), ("rabi", 2),
                        ("laser_freq", 2), ("temperature", 2)):
            value = tuple(float(v) for v in getattr(self, name))
            if len(value) != n:
                raise ConfigError(f"{name} needs {n} entries, got {len(value)}")
            object.__setattr__(self, name, value)

    @classmethod
    def resonant(cls, omega, gamma, rabi, temperature) -> SystemConfig:
        """Config with both lasers tuned to their transitions."""
        w1, w2, w3, w4 = omega
        return cls(tuple(omega), tuple(gamma), tuple(rabi),
                   (w4 - w2, w4 - w3), tuple(temperature))

    def transition_frequency(self, t: TransitionId) -> float:
        return self.omega[t.upper - 1] - self.omega[t.lower - 1]

    def decay_rate(self, t: TransitionId) -> float:
        return self.gamma[TRANSITIONS.index((t.upper, t.lower))]

    def reservoir_temperature(self, t: TransitionId) -> float:
        return self.temperature[t.reservoir - 1]

    def occupation(self, t: TransitionId) -> float:
        """Thermal occupation seen by a transition; 0 when the transition is uncoupled."""
        if self.decay_rate(t) == 0.0:
            return 0.0
        return bose_occupation(self.transition_frequency(t), self.reservoir_temperature(t))

    # flat JSON schema

    def to_dict(self) -> dict[str, float]:
        return dict(zip(CONFIG_FIELDS, (*self.omega, *self.gamma, *self.rabi,
                                        *self.laser_freq, *self.temperature)))

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> SystemConfig:
        unknown = set(data) - set(CONFIG_FIELDS)
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        required = [f for f in CONFIG_FIELDS if f not in ("laser42", "laser43")]
        missing = [f for f in required if f not in data]
        if missing:
            raise ConfigError(f"missing config fields: {missing}")
        d = {k: float(v) for k, v in data.items()}
        d.setdefault("laser42", d["omega4"] - d["omega2"])
        d.setdefault("laser43", d["omega4"] - d["omega3"])
        return cls(
            omega=(d["omega1"], d["omega2"], d["omega3"], d["omega4"]),
            gamma=(d["gamma21"], d["gamma31"], d["gamma42"], d["gamma43"]),
            rabi=(d["rabi42"], d["rabi43"]),
            laser_freq=(d["laser42"], d["laser43"]),
            temperature=(d["temp1"], d["temp2"]),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> SystemConfig:
        data = json.loads(text)
        if not isinstance(data, dict):
            raise ConfigError("config JSON must be an object")
        return cls.from_dict(data)

    def replace(self, **fields: float) -> SystemConfig:
        """Copy with flat-schema fields overridden, e.g. ``cfg.replace(temp1=10)``."""
        d = self.to_dict()
        unknown = set(fields) - set(CONFIG_FIELDS)
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        d.update(fields)
        return SystemConfig.from_dict(d)


@dataclass(frozen=True)
class ValidationReport:
    fatal: tuple[str, ...] = ()
    warnings: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.fatal

    @property
    def status(self) -> str:
        if self.fatal:
            return "fatal"
        return "warnings" if self.warnings else "ok"

    def to_dict(self) -> dict:
        return {"status": self.status, "fatal": list(self.fatal), "warnings": list(self.warnings)}

    def raise_if_fatal(self):
        if self.fatal:
            raise ConfigError("; ".join(self.fatal))


def validate(config: SystemConfig) -> ValidationReport:
    """Check hard constraints (fatal) and approximation validity (warnings)."""
    fatal: list[str] = []
    warnings: list[str] = []
    values = config.to_dict()
    for name, v in values.items():
        if not math.isfinite(v):
            fatal.append(f"{name} is not finite")
    if fatal:
        return ValidationReport(tuple(fatal))

    for name in ("gamma21", "gamma31", "gamma42", "gamma43", "rabi42", "rabi43", "temp1", "temp2"):
        if values[name] < 0:
            fatal.append(f"{name} = {values[name]} must be >= 0")

    w1, w2, w3, w4 = config.omega
    if not (w2 >= w1 and w3 >= w1):
        fatal.append("level ordering requires omega2 >= omega1 and omega3 >= omega1")
    if not (w4 > w2 and w4 > w3):
        fatal.append("level ordering requires omega4 > omega2 and omega4 > omega3")

    driven = {(4, 2): config.rabi[0], (4, 3): config.rabi[1]}
    for t in ALL_TRANSITIONS:
        wt = config.transition_frequency(t)
        coupled = config.decay_rate(t) > 0 or driven.get((t.upper, t.lower), 0.0) > 0
        if coupled and wt <= 0:
            fatal.append(f"transition {t.label} is coupled but has frequency {wt} <= 0")
    if fatal:
        return ValidationReport(tuple(fatal), tuple(warnings))

    # Secular approximation: the driven-side transitions {43, 42} must be well
    # separated from the lower-side transitions {21, 31}.
    scale = max(*config.gamma, *config.rabi)
    gap = min(abs(a - b) for a in (w4 - w3, w4 - w2) for b in (w2 - w1, w3 - w1))
    if gap < SECULAR_GAP_FACTOR * scale:
        warnings.append(
            f"secular approximation questionable: transition gap {gap:g} < "
            f"{SECULAR_GAP_FACTOR:g} x max rate {scale:g}")

    rates = {(2, 1): [config.gamma[0]], (3, 1): [config.gamma[1]],
             (4, 2): [config.gamma[2], config.rabi[0]], (4, 3): [config.gamma[3], config.rabi[1]]}
    for t in ALL_TRANSITIONS:
        wt = config.transition_frequency(t)
        for r in rates[(t.upper, t.lower)]:
            if r > 0 and r > WEAK_COUPLING_FRACTION * wt:
                warnings.append(
                    f"weak coupling questionable on {t.label}: rate {r:g} > "
                    f"{WEAK_COUPLING_FRACTION:g} x frequency {wt:g}")
    return ValidationReport(tuple(fatal), tuple(warnings))


def fig2_config(temp1: float = 10.0, temp2: float = 0.0) -> SystemConfig:
    return SystemConfig.resonant((0.0, 50.0, 50.0, 70.0), (1.0, 1.0, 0.2, 0.2), (1.0, 0.0), (temp1, temp2))


def fig3_config(rabi42: float = 1.0, rabi43: float = 1.0, temp1: float = 1.0, temp2: float = 10.0) -> SystemConfig:
    return SystemConfig.resonant((0.0, 50.0, 50.0, 70.0), (1.0, 1.0, 0.2, 0.2), (rabi42, rabi43), (temp1, temp2))


def fig4_config(rabi42: float = 0.1) -> SystemConfig:
    return SystemConfig.resonant((0.0, 60.0, 60.0, 62.0), (1.0, 1.0, 0.0, 0.1), (rabi42, 0.0), (10.0, 1.0))


def fig5_config(temp1: float = 10.0) -> SystemConfig:
    return SystemConfig.resonant((0.0, 50.0, 25.0, 60.0), (1.0, 1.0, 0.1, 0.1), (1.0, 1.0), (temp1, 1.0))
