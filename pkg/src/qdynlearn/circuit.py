"""Hardware-style mode: segment unitaries, shot-sampled readout, RL training.

A piecewise-constant schedule compiles to one exact unitary per time segment.
Measurement happens in the computational basis, either exactly (probabilities)
or by sampling a finite number of shots, optionally with a depolarizing
channel after each segment and independent readout bit flips.  Training is
the same finite-difference loop as the continuum RL module, but the error is
the whole-set RMS between witness estimates and targets.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import qcore, rl
from .backprop import TrainingDiverged
from .qcore import DensityMatrix, OutputMap, SQUARE_MAP
from .reporting import EpochLog
from .schedules import PiecewiseSchedule, list_trainable

UNITARITY_TOL = 1e-12


@dataclass
class ShotBackend:
    """Measurement backend: shot count (None = exact) and noise knobs."""

    shots: int | None = None
    p_dep: float = 0.0  # depolarizing probability applied after each segment
    p_ro: float = 0.0  # independent per-qubit readout flip probability
    seed: int = 0

    def __post_init__(self):
        if self.shots is not None and self.shots < 1:
            raise ValueError("shots must be >= 1 (or None for exact)")
        if not 0.0 <= self.p_dep <= 1.0 or not 0.0 <= self.p_ro <= 1.0:
            raise ValueError("noise probabilities must lie in [0, 1]")
        self._rng = np.random.default_rng(self.seed)

    @property
    def exact(self):
        return self.shots is None


@dataclass(frozen=True)
class SegmentedCircuit:
    """Ordered segment unitaries compiled from a piecewise schedule."""

    unitaries: np.ndarray  # (S, d, d)
    schedule: PiecewiseSchedule

    def __post_init__(self):
        us = self.unitaries
        eye = np.eye(us.shape[-1])
        err = np.abs(us @ us.conj().swapaxes(-1, -2) - eye).max()
        if err > UNITARITY_TOL:
            raise ValueError(f"segment unitaries not unitary (residual {err:.2e})")


def compile_segments(schedule: PiecewiseSchedule) -> SegmentedCircuit:
    """U_s = exp(-i H_s T/S) from each segment's constant parameters."""
    s = schedule.segments
    tau = schedule.T / s
    midpoints = (np.arange(s) + 0.5) * tau
    k, e, z = schedule.eval_many(midpoints)
    h = qcore.assemble_hamiltonians(k, e, z, schedule.num_qubits)
    return SegmentedCircuit(qcore.expm_hermitian(h, tau), schedule)


def _apply_segments(circuit: SegmentedCircuit, rho: np.ndarray, p_dep: float):
    d = rho.shape[0]
    for u in circuit.unitaries:
        rho = u @ rho @ u.conj().T
        if p_dep > 0.0:
            rho = (1.0 - p_dep) * rho + p_dep * np.trace(rho).real * np.eye(d) / d
    return rho


def _readout_matrix(num_qubits, p_ro):
    f1 = np.array([[1.0 - p_ro, p_ro], [p_ro, 1.0 - p_ro]])
    f = np.array([[1.0]])
    for _ in range(num_qubits):
        f = np.kron(f, f1)
    return f


def run_shots(circuit: SegmentedCircuit, rho0: DensityMatrix,
              backend: ShotBackend):
    """Apply the segments and measure in the computational basis.

    Exact mode returns the outcome probability vector; otherwise a dict of
    bitstring counts summing to `shots`.
    """
    n = circuit.schedule.num_qubits
    rho = _apply_segments(circuit, rho0.matrix, backend.p_dep)
    probs = np.clip(np.diag(rho).real, 0.0, None)
    probs = probs / probs.sum()
    if backend.p_ro > 0.0:
        probs = _readout_matrix(n, backend.p_ro) @ probs
    if backend.exact:
        return probs
    counts = backend._rng.multinomial(backend.shots, probs)
    return {format(i, f"0{n}b"): int(c) for i, c in enumerate(counts) if c}


def estimate_output(counts, output_map: OutputMap = SQUARE_MAP,
                    num_qubits: int = 2) -> float:
    """Witness output f(<zz>) from counts (dict) or exact probabilities.

    The pair correlation is estimated from the measured bitstrings:
    (n00 + n11 - n01 - n10) / shots for two qubits, and in general the parity
    of the designated pair (first two qubits).
    """
    if isinstance(counts, dict):
        if not counts:
            raise ValueError("empty counts")
        total = sum(counts.values())
        probs = np.zeros(2**num_qubits)
        for bits, c in counts.items():
            probs[int(bits, 2)] = c / total
    else:
        probs = np.asarray(counts, dtype=float)
        if probs.size != 2**num_qubits:
            raise ValueError("probability vector has wrong length")
    idx = np.arange(probs.size)
    b0 = (idx >> (num_qubits - 1)) & 1
    b1 = (idx >> (num_qubits - 2)) & 1
    parity = 1.0 - 2.0 * ((b0 + b1) % 2)
    return float(output_map(np.dot(parity, probs)))


def set_rms_error(pairs, schedule: PiecewiseSchedule, backend: ShotBackend,
                  output_map: OutputMap = SQUARE_MAP) -> float:
    """Whole-set RMS error through the compile -> measure -> estimate path."""
    circuit = compile_segments(schedule)
    n = schedule.num_qubits
    sq = []
    for pair in pairs:
        out = estimate_output(run_shots(circuit, pair.rho0, backend),
                              output_map, num_qubits=n)
        sq.append((pair.target - out) ** 2)
    return float(np.sqrt(np.mean(sq)))


@dataclass
class CircuitRLConfig(rl.RLConfig):
    """Circuit-mode defaults: the 20-weight loop's rates and scales.

    The perturbations are far larger than the continuum loop's: a shot-
    sampled error estimate carries statistical noise of a few parts in a
    thousand, so the difference quotient only carries signal when the
    perturbation moves the error by more than that.
    """

    delta_rel: float = 5e-2
    delta_abs: dict = field(
        default_factory=lambda: {"tunneling": 1.0e-2,
                                 "bias": 1.0e-3,
                                 "coupling": 1.0e-3}
    )
    learning_rates: dict = field(
        default_factory=lambda: {"tunneling": 1.0e-2, "bias": 1.0e-3,
                                 "coupling": 1.0e-3}
    )


def train_circuit_rl(pairs, schedule: PiecewiseSchedule,
                     config: rl.RLConfig, backend: ShotBackend,
                     output_map: OutputMap = SQUARE_MAP):
    """Per-weight finite-difference training on the circuit pipeline.

    Each weight update evaluates the whole-set RMS error nominally and with
    the weight perturbed; one sweep over all weights is an epoch.  The logged
    per-epoch RMS is a fresh evaluation after the sweep.
    """
    if not pairs:
        raise ValueError("empty training set")
    schedule = schedule.copy()
    cids = list_trainable(schedule, config.learning_rates)
    error_fn = lambda s: set_rms_error(pairs, s, backend, output_map)
    log = EpochLog()
    rms_limit = None
    for epoch in range(config.epochs):
        rl.fd_update_pass(schedule, cids, error_fn, config)
        rms = error_fn(schedule)
        log.append(epoch, rms)
        if rms_limit is None:
            rms_limit = config.divergence_factor * max(rms, 1e-12)
        elif rms > rms_limit:
            raise TrainingDiverged(
                f"RMS {rms:.4g} exceeded {config.divergence_factor}x its "
                f"initial value at epoch {epoch}", log=log)
        if config.epoch_callback is not None:
            config.epoch_callback(epoch, rms, schedule)
        if config.rms_target is not None and rms <= config.rms_target:
            break
    return schedule, log
