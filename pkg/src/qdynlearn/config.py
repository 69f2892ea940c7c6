"""Run configuration: JSON in, fully resolved defaults out.

Field names carry units (ns, rad/ns).  Numeric defaults are the published
initializations and learning rates; the evolution time and grid resolution
are simulator choices.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .circuit import ShotBackend
from .qcore import OUTPUT_MAPS, TimeGrid
from .rl import RLConfig
from .backprop import BackpropConfig
from .schedules import FourierSchedule, PiecewiseSchedule

MODES = ("rl", "backprop", "circuit")


class ConfigError(ValueError):
    pass


# Fourier-mode (continuum) defaults
FOURIER_INIT = {"tunneling": 2.5e-3, "bias": 1.0e-4, "coupling": 1.0e-4}
FOURIER_RATES = {"tunneling": 2e-7, "bias": 0.0, "coupling": 4e-7}
# Circuit-mode defaults
CIRCUIT_INIT = {"tunneling": 2.0e-3, "bias": 1.0e-4, "coupling": 1.0e-4}
CIRCUIT_RATES = {"tunneling": 1.0e-2, "bias": 1.0e-3, "coupling": 1.0e-3}

DELTA_REL = 2e-4  # 0.02 % perturbation (continuum RL)
# Circuit-mode perturbations are macroscopic so the difference quotient
# stays above shot noise; see circuit.CircuitRLConfig.
CIRCUIT_DELTA_REL = 5e-2
CIRCUIT_DELTA_ABS = {"tunneling": 1.0e-2, "bias": 1.0e-3, "coupling": 1.0e-3}

# Default evolution times, calibrated so the published learning rates give
# stable, converging training: the witness needs a total tunneling pulse area
# near pi/4, and the gradient magnitudes the rates were tuned against scale
# with T.  The continuum modes use a long pulse; the circuit mode's much
# larger rates need a short one.
DEFAULT_T_NS = {"rl": 250.0, "backprop": 250.0, "circuit": 2.0}
DEFAULT_STEPS = 200
DEFAULT_SEGMENTS = 4


@dataclass
class RunConfig:
    """Everything needed to reproduce one training run."""

    mode: str = "rl"
    num_qubits: int = 2
    T_ns: float | None = None  # default depends on mode
    steps: int = DEFAULT_STEPS
    epochs: int = 2000
    seed: int = 0
    n_max: int = 3
    segments: int = DEFAULT_SEGMENTS
    tied: bool | None = None  # default: tied for fourier, untied for circuit
    init: dict = field(default_factory=dict)
    learning_rates: dict = field(default_factory=dict)
    delta_rel: float | None = None  # default depends on mode
    delta_abs: dict | None = None  # default: delta_rel * init scale per kind
    output_map: str = "square"
    update_mode: str = "deferred"
    shots: int | str = "exact"
    p_dep: float = 0.0
    p_ro: float = 0.0
    rms_target: float | None = None
    trace_every: int = 200
    initial_schedule: str | None = None  # path; overrides init values

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r} (expected {MODES})")
        if self.output_map not in OUTPUT_MAPS:
            raise ConfigError(f"unknown output map {self.output_map!r}")
        if self.num_qubits < 2 or self.num_qubits > 6:
            raise ConfigError("num_qubits must be in 2..6")
        if self.epochs < 0:
            raise ConfigError("epochs must be >= 0")
        if isinstance(self.shots, str) and self.shots != "exact":
            raise ConfigError('shots must be a positive integer or "exact"')
        if self.T_ns is None:
            self.T_ns = DEFAULT_T_NS[self.mode]
        defaults = CIRCUIT_INIT if self.mode == "circuit" else FOURIER_INIT
        rates = CIRCUIT_RATES if self.mode == "circuit" else FOURIER_RATES
        self.init = {**defaults, **self.init}
        self.learning_rates = {**rates, **self.learning_rates}
        if self.tied is None:
            self.tied = self.mode != "circuit"
        if self.delta_rel is None:
            self.delta_rel = CIRCUIT_DELTA_REL if self.mode == "circuit" else DELTA_REL
        if self.delta_abs is None:
            if self.mode == "circuit":
                self.delta_abs = dict(CIRCUIT_DELTA_ABS)
            else:
                self.delta_abs = {
                    kind: self.delta_rel * abs(scale) if scale else self.delta_rel * 1e-4
                    for kind, scale in self.init.items()
                }

    @classmethod
    def from_dict(cls, data) -> "RunConfig":
        unknown = set(data) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        with open(path) as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config is not valid JSON: {exc}") from exc
        return cls.from_dict(data)

    def resolved(self) -> dict:
        return asdict(self)

    # -- derived objects ---------------------------------------------------

    def grid(self) -> TimeGrid:
        return TimeGrid(self.T_ns, self.steps)

    def build_schedule(self):
        if self.initial_schedule is not None:
            from .schedules import load_schedule

            sched = load_schedule(self.initial_schedule)
            if sched.num_qubits != self.num_qubits:
                raise ConfigError(
                    f"initial schedule has {sched.num_qubits} qubits, "
                    f"config says {self.num_qubits}")
            return sched
        kw = dict(tunneling=self.init["tunneling"], bias=self.init["bias"],
                  coupling=self.init["coupling"], tied=self.tied)
        if self.mode == "circuit":
            return PiecewiseSchedule.initialized(
                self.num_qubits, self.T_ns, segments=self.segments, **kw)
        return FourierSchedule.initialized(
            self.num_qubits, self.T_ns, n_max=self.n_max, **kw)

    def rl_config(self) -> RLConfig:
        return RLConfig(
            delta_rel=self.delta_rel, delta_abs=dict(self.delta_abs),
            learning_rates=dict(self.learning_rates), epochs=self.epochs,
            seed=self.seed, update_mode=self.update_mode,
            rms_target=self.rms_target)

    def backprop_config(self) -> BackpropConfig:
        return BackpropConfig(
            learning_rates=dict(self.learning_rates), epochs=self.epochs,
            rms_target=self.rms_target)

    def backend(self) -> ShotBackend:
        shots = None if self.shots == "exact" else int(self.shots)
        return ShotBackend(shots=shots, p_dep=self.p_dep, p_ro=self.p_ro,
                           seed=self.seed)


def default_config(mode) -> RunConfig:
    return RunConfig(mode=mode)
