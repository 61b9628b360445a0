"""Local hidden-variable model families.

Four families are shipped, bracketing the space the laboratory explores:

* ``bell_deterministic`` — outcomes are pure functions of (setting, lambda);
  no instrument randomness at all.
* ``factorizable_instrument`` — each station independently replaces its
  deterministic outcome with a fair coin with probability ``epsilon``. The
  two stations' instrument values are conditionally independent given lambda
  by construction (they come from disjoint substreams that never see the
  remote setting).
* ``time_tagged_anticorrelated`` — each station's instrument value is a
  deterministic function of (local setting, shared clock tick); the station
  output is that flip times the deterministic sign, with station 2 globally
  negated. Equal settings at equal ticks therefore give A = -B on every
  trial even though the instrument values genuinely vary with setting and
  time.
* ``setting_pair_dependent`` — a diagnostic construction whose instrument
  value reads the trial's full setting pair and forces the product +1 on the
  first canonical pair and -1 on the other three. It is flagged as
  distribution-level setting dependence and is not offered as a physical
  model; it exists to exhibit the algebraic maximum of the four-term
  statistic.

All randomness enters through the ``sample_*`` functions; the ``detector_*``
functions are pure in (setting, lambda, instrument value). Internal kernels
are vectorized over trial indices, and the scalar API calls the same kernels
with length-1 arrays, so scalar and batch evaluation agree bit for bit.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Protocol, runtime_checkable

import numpy as np

from . import rng
from .core import (
    TAU,
    DiscreteIndex,
    HiddenVariable,
    PlanarAngle,
    Setting,
    discrete_lambda_angle,
)
from .errors import InvalidSpec

WEIGHT_TOLERANCE = 1e-12

# Setting angles are quantized to this grid when they key a hash; equal
# normalized angles always collide, which is all correctness requires.
_ANGLE_QUANTUM = 1e-9


class ModelKind(enum.Enum):
    BELL_DETERMINISTIC = "bell_deterministic"
    FACTORIZABLE_INSTRUMENT = "factorizable_instrument"
    TIME_TAGGED_ANTICORRELATED = "time_tagged_anticorrelated"
    SETTING_PAIR_DEPENDENT = "setting_pair_dependent"


class Station(enum.Enum):
    S1 = "s1"
    S2 = "s2"


@dataclass(frozen=True)
class DiscreteSource:
    """Finite source space with explicit weights over m values."""

    weights: tuple[float, ...]

    def __post_init__(self):
        if len(self.weights) == 0:
            raise InvalidSpec("discrete source needs at least one weight")
        if any((not math.isfinite(w)) or w < 0.0 for w in self.weights):
            raise InvalidSpec(f"source weights must be finite and >= 0, got {self.weights}")
        total = math.fsum(self.weights)
        if abs(total - 1.0) > WEIGHT_TOLERANCE:
            raise InvalidSpec(f"source weights must sum to 1 within {WEIGHT_TOLERANCE}, got {total!r}")

    @classmethod
    def uniform(cls, size: int) -> "DiscreteSource":
        if size < 1:
            raise InvalidSpec(f"discrete source size must be >= 1, got {size}")
        return cls(tuple([1.0 / size] * size))

    @property
    def size(self) -> int:
        return len(self.weights)


@dataclass(frozen=True)
class UniformAngleSource:
    """Source value uniform on the circle [0, 2*pi)."""


SourceDistribution = DiscreteSource | UniformAngleSource


@dataclass(frozen=True)
class ModelSpec:
    """A model family plus its source distribution and parameters."""

    kind: ModelKind
    source: SourceDistribution = field(default_factory=UniformAngleSource)
    epsilon: float = 0.0

    def __post_init__(self):
        if not isinstance(self.kind, ModelKind):
            raise InvalidSpec(f"unknown model kind {self.kind!r}")
        if not isinstance(self.source, (DiscreteSource, UniformAngleSource)):
            raise InvalidSpec(f"unknown source distribution {self.source!r}")
        if not (math.isfinite(self.epsilon) and 0.0 <= self.epsilon <= 1.0):
            raise InvalidSpec(f"epsilon must be in [0, 1], got {self.epsilon!r}")
        if self.epsilon != 0.0 and self.kind is not ModelKind.FACTORIZABLE_INSTRUMENT:
            raise InvalidSpec(f"epsilon applies only to factorizable_instrument, not {self.kind.value}")

    @property
    def lambda_kind(self) -> str:
        """'discrete' or 'angle': how the source value is represented."""
        return "discrete" if isinstance(self.source, DiscreteSource) else "angle"

    @property
    def source_size(self) -> int | None:
        return self.source.size if isinstance(self.source, DiscreteSource) else None

    @property
    def setting_dependent_distribution(self) -> bool:
        """True for the flagged non-factorizable diagnostic family."""
        return self.kind is ModelKind.SETTING_PAIR_DEPENDENT

    @property
    def flags(self) -> dict[str, bool]:
        return {"setting_dependent_distribution": self.setting_dependent_distribution}


def bell_deterministic(source: SourceDistribution | None = None) -> ModelSpec:
    return ModelSpec(ModelKind.BELL_DETERMINISTIC, source or UniformAngleSource())


def factorizable_instrument(epsilon: float, source: SourceDistribution | None = None) -> ModelSpec:
    return ModelSpec(ModelKind.FACTORIZABLE_INSTRUMENT, source or UniformAngleSource(), epsilon=epsilon)


def time_tagged_anticorrelated(source: SourceDistribution | None = None) -> ModelSpec:
    return ModelSpec(ModelKind.TIME_TAGGED_ANTICORRELATED, source or UniformAngleSource())


def setting_pair_dependent(source: SourceDistribution | None = None) -> ModelSpec:
    return ModelSpec(ModelKind.SETTING_PAIR_DEPENDENT, source or UniformAngleSource())


# --- Vectorized kernels ------------------------------------------------------
#
# These are the single implementation of each family; the scalar API below
# and the experiment runner both call them.


def source_arrays(spec: ModelSpec, seed: int, indices: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sample the source value for each trial index.

    Returns (lam_repr, lam_angle): the logged representation (discrete index
    as a float, or the angle itself) and the angle fed to the detectors.
    """
    u = rng.uniforms(seed, "source", indices)
    if isinstance(spec.source, DiscreteSource):
        cumulative = np.cumsum(spec.source.weights)
        idx = np.minimum(
            np.searchsorted(cumulative, u, side="right"),
            len(cumulative) - 1,
        )
        m = spec.source.size
        angle = TAU * (idx + 0.5) / m
        return idx.astype(np.float64), angle
    angle = u * TAU
    return angle, angle


def _quantize_angle(theta: np.ndarray) -> np.ndarray:
    return np.round(np.asarray(theta, dtype=np.float64) / _ANGLE_QUANTUM).astype(np.uint64)


def instrument_arrays(
    spec: ModelSpec,
    seed: int,
    indices: np.ndarray,
    t: np.ndarray,
    theta_local: np.ndarray,
    station: Station,
    pair_id: np.ndarray | None = None,
) -> np.ndarray:
    """Instrument parameter values in [0, 1), one per trial.

    What each family does with the uniform canonical representation:

    * bell_deterministic: constant 0.0 (no instrument randomness).
    * factorizable_instrument: a station-local uniform keyed only by
      (seed, trial, station) — never by the remote setting.
    * time_tagged_anticorrelated: a deterministic hash of (local setting,
      shared tick); both stations compute the same value for equal inputs.
    * setting_pair_dependent: pair_id / 4 — the instrument reads the trial's
      full setting pair, the explicitly flagged locality-of-distribution
      violation.
    """
    kind = spec.kind
    if kind is ModelKind.BELL_DETERMINISTIC:
        return np.zeros(np.broadcast(np.asarray(indices), np.asarray(t)).shape, dtype=np.float64)
    if kind is ModelKind.FACTORIZABLE_INSTRUMENT:
        return rng.uniforms(seed, f"ip.{station.value}", indices)
    if kind is ModelKind.TIME_TAGGED_ANTICORRELATED:
        return rng.uniforms(seed, "ttac.flip", np.asarray(t), draw=_quantize_angle(theta_local))
    if kind is ModelKind.SETTING_PAIR_DEPENDENT:
        if pair_id is None:
            raise InvalidSpec(
                "setting_pair_dependent instruments need the trial's setting pair; "
                "this model only runs inside a paired experiment"
            )
        return np.asarray(pair_id, dtype=np.float64) / 4.0
    raise InvalidSpec(f"unknown model kind {kind!r}")


def _deterministic_sign(theta: np.ndarray, lam_angle: np.ndarray) -> np.ndarray:
    """sign(cos(theta - lambda)) with the tie rule sign(0) := +1."""
    return np.where(np.cos(np.asarray(theta) - np.asarray(lam_angle)) >= 0.0, 1, -1).astype(np.int8)


def outcome_arrays(
    spec: ModelSpec,
    station: Station,
    theta_local: np.ndarray,
    lam_angle: np.ndarray,
    ip: np.ndarray,
) -> np.ndarray:
    """Detector outputs (+1/-1 int8), one per trial."""
    kind = spec.kind
    negate = -1 if station is Station.S2 else 1

    if kind is ModelKind.SETTING_PAIR_DEPENDENT:
        ip = np.asarray(ip)
        if station is Station.S1:
            return np.ones(ip.shape, dtype=np.int8)
        return np.where(ip < 0.25, 1, -1).astype(np.int8)

    base = _deterministic_sign(theta_local, lam_angle)
    if kind is ModelKind.BELL_DETERMINISTIC:
        return (negate * base).astype(np.int8)
    if kind is ModelKind.FACTORIZABLE_INSTRUMENT:
        eps = spec.epsilon
        ip = np.asarray(ip)
        coin = np.where(ip < eps / 2.0, 1, -1).astype(np.int8)
        return np.where(ip < eps, coin, (negate * base).astype(np.int8))
    if kind is ModelKind.TIME_TAGGED_ANTICORRELATED:
        flip = np.where(np.asarray(ip) < 0.5, 1, -1).astype(np.int8)
        return (negate * flip * base).astype(np.int8)
    raise InvalidSpec(f"unknown model kind {kind!r}")


# --- Scalar API (one trial at a time) ---------------------------------------


def sample_source(spec: ModelSpec, seed: int, trial: int) -> HiddenVariable:
    """Draw the source value for one trial from substream (seed, trial, "source")."""
    repr_v, _ = source_arrays(spec, seed, np.asarray([trial], dtype=np.uint64))
    if spec.lambda_kind == "discrete":
        return DiscreteIndex(int(repr_v[0]))
    return PlanarAngle(float(repr_v[0]))


def _lambda_angle(spec: ModelSpec, lam: HiddenVariable) -> float:
    if isinstance(lam, DiscreteIndex):
        if spec.source_size is None:
            raise InvalidSpec("discrete source value supplied to a continuous-source spec")
        return discrete_lambda_angle(lam.index, spec.source_size)
    return lam.angle


def sample_instrument_params(
    spec: ModelSpec,
    setting_local: Setting,
    t: int,
    lam: HiddenVariable,
    seed: int,
    trial: int,
    station: Station,
    pair_id: int | None = None,
) -> float:
    """Instrument value for one station on one trial (canonical [0,1) real)."""
    del lam  # shipped families key instruments on (setting, t, station) only
    pid = None if pair_id is None else np.asarray([pair_id])
    out = instrument_arrays(
        spec,
        seed,
        np.asarray([trial], dtype=np.uint64),
        np.asarray([t], dtype=np.uint64),
        np.asarray([setting_local.angle]),
        station,
        pair_id=pid,
    )
    return float(out[0])


def detector_a(spec: ModelSpec, setting: Setting, lam: HiddenVariable, ip: float, t: int) -> int:
    """Station-1 outcome; pure in its inputs."""
    del t  # time enters only through the instrument value
    out = outcome_arrays(
        spec, Station.S1, np.asarray([setting.angle]), np.asarray([_lambda_angle(spec, lam)]), np.asarray([ip])
    )
    return int(out[0])


def detector_b(spec: ModelSpec, setting: Setting, lam: HiddenVariable, ip: float, t: int) -> int:
    """Station-2 outcome; the globally negated side."""
    del t
    out = outcome_arrays(
        spec, Station.S2, np.asarray([setting.angle]), np.asarray([_lambda_angle(spec, lam)]), np.asarray([ip])
    )
    return int(out[0])


# --- Anticorrelation check ---------------------------------------------------


@dataclass(frozen=True)
class AnticorrelationReport:
    trials: int
    violations: int


def check_anticorrelation(
    spec: ModelSpec, settings: list[Setting], n_trials: int, seed: int
) -> AnticorrelationReport:
    """Count trials where A != -B with equal settings and a shared tick.

    Settings cycle deterministically over the supplied list, one per trial.
    """
    if n_trials < 1:
        raise InvalidSpec(f"n_trials must be >= 1, got {n_trials}")
    if not settings:
        raise InvalidSpec("need at least one setting")
    if spec.kind is ModelKind.SETTING_PAIR_DEPENDENT:
        raise InvalidSpec(
            "setting_pair_dependent has no equal-settings semantics; "
            "anticorrelation is not defined for it"
        )
    indices = np.arange(n_trials, dtype=np.uint64)
    t = indices
    theta = np.asarray([s.angle for s in settings])[np.arange(n_trials) % len(settings)]
    _, lam_angle = source_arrays(spec, seed, indices)
    ip1 = instrument_arrays(spec, seed, indices, t, theta, Station.S1)
    ip2 = instrument_arrays(spec, seed, indices, t, theta, Station.S2)
    a = outcome_arrays(spec, Station.S1, theta, lam_angle, ip1)
    b = outcome_arrays(spec, Station.S2, theta, lam_angle, ip2)
    violations = int(np.count_nonzero(a != -b))
    return AnticorrelationReport(trials=n_trials, violations=violations)


# --- Plug-in point -----------------------------------------------------------


@runtime_checkable
class ModelFamily(Protocol):
    """Interface a custom (externally supplied) model family must satisfy.

    The experiment runner accepts any such object in place of a ModelSpec.
    No custom family ships with the package.
    """

    lambda_kind: str  # "discrete" or "angle"
    source_size: int | None
    flags: dict[str, bool]

    def source_arrays(self, seed: int, indices: np.ndarray) -> tuple[np.ndarray, np.ndarray]: ...

    def instrument_arrays(
        self,
        seed: int,
        indices: np.ndarray,
        t: np.ndarray,
        theta_local: np.ndarray,
        station: Station,
        pair_id: np.ndarray | None,
    ) -> np.ndarray: ...

    def outcome_arrays(
        self, station: Station, theta_local: np.ndarray, lam_angle: np.ndarray, ip: np.ndarray
    ) -> np.ndarray: ...


_CUSTOM_FAMILIES: dict[str, ModelFamily] = {}


def register_family(name: str, family: ModelFamily) -> None:
    """Register a custom model family under a kind name."""
    if name in {k.value for k in ModelKind}:
        raise InvalidSpec(f"kind name {name!r} is reserved for a shipped family")
    if not isinstance(family, ModelFamily):
        raise InvalidSpec(f"object {family!r} does not satisfy the model family interface")
    _CUSTOM_FAMILIES[name] = family


def registered_family(name: str) -> ModelFamily | None:
    return _CUSTOM_FAMILIES.get(name)
