"""Time-dependent Hamiltonian parameter schedules.

Two families: truncated Fourier series (half-period basis sin/cos(n pi t / T))
and piecewise-constant segments.  Both expose their trainable coefficients
through `CoefficientId` handles so the training loops can enumerate, read,
perturb and update them uniformly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .qcore import HamiltonianParams, pair_indices

KIND_ORDER = ("tunneling", "bias", "coupling")


@dataclass(frozen=True, order=True)
class CoefficientId:
    """Handle for one stored coefficient.

    basis meaning: 0 is the constant term; for Fourier schedules 1..n_max are
    the sine terms and n_max+1..2*n_max the cosine terms; for piecewise
    schedules the basis index is the segment index.
    """

    kind: str
    site: int
    basis: int


class ScheduleError(ValueError):
    pass


class _Schedule:
    """Shared storage/evaluation machinery for both schedule families.

    Coefficients live in one array per parameter kind with shape
    (rows, width): a row per site, or a single shared row when the kind is
    tied across sites.
    """

    mode = None

    def __init__(self, num_qubits, T, coeffs, tied):
        if num_qubits < 1:
            raise ScheduleError("need at least one qubit")
        if T <= 0:
            raise ScheduleError("T must be positive")
        self.num_qubits = int(num_qubits)
        self.T = float(T)
        self.tied = bool(tied)
        self.coeffs = {}
        for kind in KIND_ORDER:
            c = np.array(coeffs[kind], dtype=float)
            if c.ndim != 2 or c.shape != (self.rows(kind), self.width):
                raise ScheduleError(
                    f"{kind} coefficients must have shape "
                    f"({self.rows(kind)}, {self.width}), got {c.shape}"
                )
            if not np.isfinite(c).all():
                raise ScheduleError(f"non-finite {kind} coefficient")
            self.coeffs[kind] = c

    # -- structure ---------------------------------------------------------

    @property
    def width(self):
        raise NotImplementedError

    @property
    def pairs(self):
        return pair_indices(self.num_qubits)

    def n_sites(self, kind):
        return len(self.pairs) if kind == "coupling" else self.num_qubits

    def rows(self, kind):
        return 1 if self.tied else self.n_sites(kind)

    def coefficient_ids(self, kinds=KIND_ORDER):
        """All coefficient handles in deterministic (kind, site, basis) order."""
        out = []
        for kind in KIND_ORDER:
            if kind not in kinds:
                continue
            for site in range(self.rows(kind)):
                for basis in range(self.width):
                    out.append(CoefficientId(kind, site, basis))
        return out

    def _check(self, cid: CoefficientId):
        if cid.kind not in KIND_ORDER:
            raise ScheduleError(f"unknown parameter kind {cid.kind!r}")
        if not 0 <= cid.site < self.rows(cid.kind):
            raise ScheduleError(f"site {cid.site} out of range for {cid.kind}")
        if not 0 <= cid.basis < self.width:
            raise ScheduleError(f"basis index {cid.basis} out of range")

    def get(self, cid: CoefficientId) -> float:
        self._check(cid)
        return float(self.coeffs[cid.kind][cid.site, cid.basis])

    def set(self, cid: CoefficientId, value: float):
        self._check(cid)
        self.coeffs[cid.kind][cid.site, cid.basis] = value

    def copy(self):
        return type(self)._from_parts(self)

    # -- evaluation --------------------------------------------------------

    def basis_row(self, ts):
        """Basis-function values at times ts, shape (len(ts), width)."""
        raise NotImplementedError

    def basis_values(self, cid: CoefficientId, t) -> float:
        """d P(t) / d coefficient: the basis function attached to `cid`."""
        self._check(cid)
        return float(self.basis_row(np.atleast_1d(float(t)))[0, cid.basis])

    def eval_many(self, ts):
        """Parameter values at times ts.

        Returns (tunneling (M, N), bias (M, N), coupling (M, P)) with the
        coupling columns in `pair_indices` order; tied rows are broadcast to
        every site.
        """
        ts = np.asarray(ts, dtype=float)
        if ts.size and (ts.min() < -1e-12 or ts.max() > self.T + 1e-12):
            raise ScheduleError("evaluation time outside [0, T]")
        b = self.basis_row(ts)
        out = []
        for kind in KIND_ORDER:
            vals = b @ self.coeffs[kind].T  # (M, rows)
            if self.tied:
                vals = np.repeat(vals, self.n_sites(kind), axis=1)
            out.append(vals)
        return tuple(out)

    def eval(self, t) -> HamiltonianParams:
        """HamiltonianParams at a single time t in [0, T]."""
        k, e, z = self.eval_many(np.atleast_1d(float(t)))
        n = self.num_qubits
        zmat = np.zeros((n, n))
        for col, (i, j) in enumerate(self.pairs):
            zmat[i, j] = zmat[j, i] = z[0, col]
        return HamiltonianParams(tunneling=k[0], bias=e[0], coupling=zmat)

    def sites_for(self, cid: CoefficientId):
        """Physical site indices a coefficient feeds (all sites when tied)."""
        self._check(cid)
        if self.tied:
            return list(range(self.n_sites(cid.kind)))
        return [cid.site]

    # -- serialization -----------------------------------------------------

    def to_dict(self):
        d = {
            "mode": self.mode,
            "num_qubits": self.num_qubits,
            "T_ns": self.T,
            "tied": self.tied,
            "coefficients": {k: self.coeffs[k].tolist() for k in KIND_ORDER},
        }
        d.update(self._extra_fields())
        return d

    def _extra_fields(self):
        return {}


class FourierSchedule(_Schedule):
    """P(t) = P_0 + sum_{n=1..n_max} S_n sin(n pi t / T) + C_n cos(n pi t / T)."""

    mode = "fourier"

    def __init__(self, num_qubits, T, coeffs, tied=True, n_max=3):
        if n_max < 0:
            raise ScheduleError("n_max must be >= 0")
        self.n_max = int(n_max)
        super().__init__(num_qubits, T, coeffs, tied)

    @property
    def width(self):
        return 1 + 2 * self.n_max

    def basis_row(self, ts):
        ts = np.asarray(ts, dtype=float)
        cols = [np.ones_like(ts)]
        ns = np.arange(1, self.n_max + 1)
        args = np.outer(ts, ns) * (np.pi / self.T)  # (M, n_max)
        return np.concatenate(
            [np.ones((ts.size, 1)), np.sin(args), np.cos(args)], axis=1
        )

    @classmethod
    def initialized(cls, num_qubits, T, n_max=3, tied=True, tunneling=2.5e-3,
                    bias=1.0e-4, coupling=1.0e-4):
        """Constant-term initialization; all sine/cosine coefficients zero."""
        sched = cls.__new__(cls)
        sched.n_max = int(n_max)
        init = {"tunneling": tunneling, "bias": bias, "coupling": coupling}
        coeffs = {}
        width = 1 + 2 * int(n_max)
        for kind in KIND_ORDER:
            rows = 1 if tied else (
                len(pair_indices(num_qubits)) if kind == "coupling" else num_qubits
            )
            c = np.zeros((rows, width))
            c[:, 0] = init[kind]
            coeffs[kind] = c
        cls.__init__(sched, num_qubits, T, coeffs, tied=tied, n_max=n_max)
        return sched

    @classmethod
    def _from_parts(cls, other):
        return cls(other.num_qubits, other.T,
                   {k: other.coeffs[k].copy() for k in KIND_ORDER},
                   tied=other.tied, n_max=other.n_max)

    def _extra_fields(self):
        return {"n_max": self.n_max}


class PiecewiseSchedule(_Schedule):
    """Parameters held constant on S equal segments of [0, T]."""

    mode = "piecewise"

    def __init__(self, num_qubits, T, coeffs, tied=False, segments=4):
        if segments < 1:
            raise ScheduleError("need at least one segment")
        self.segments = int(segments)
        super().__init__(num_qubits, T, coeffs, tied)

    @property
    def width(self):
        return self.segments

    def segment_of(self, t):
        """Segment index for time t; t = T maps to the last segment."""
        return min(int(np.floor(t * self.segments / self.T)), self.segments - 1)

    def basis_row(self, ts):
        ts = np.asarray(ts, dtype=float)
        idx = np.minimum(
            np.floor(ts * self.segments / self.T).astype(int), self.segments - 1
        )
        b = np.zeros((ts.size, self.segments))
        b[np.arange(ts.size), idx] = 1.0
        return b

    @classmethod
    def initialized(cls, num_qubits, T, segments=4, tied=False, tunneling=2.0e-3,
                    bias=1.0e-4, coupling=1.0e-4):
        sched = cls.__new__(cls)
        sched.segments = int(segments)
        init = {"tunneling": tunneling, "bias": bias, "coupling": coupling}
        coeffs = {}
        for kind in KIND_ORDER:
            rows = 1 if tied else (
                len(pair_indices(num_qubits)) if kind == "coupling" else num_qubits
            )
            coeffs[kind] = np.full((rows, int(segments)), init[kind], dtype=float)
        cls.__init__(sched, num_qubits, T, coeffs, tied=tied, segments=segments)
        return sched

    @classmethod
    def _from_parts(cls, other):
        return cls(other.num_qubits, other.T,
                   {k: other.coeffs[k].copy() for k in KIND_ORDER},
                   tied=other.tied, segments=other.segments)

    def _extra_fields(self):
        return {"segments": self.segments}


def list_trainable(schedule, learning_rates) -> list[CoefficientId]:
    """Trainable coefficients in deterministic order.

    Order is kind (tunneling, bias, coupling), then site, then basis index.
    Kinds whose learning rate is zero are excluded.
    """
    kinds = tuple(k for k in KIND_ORDER if learning_rates.get(k, 0.0) > 0.0)
    return schedule.coefficient_ids(kinds=kinds)


def schedule_from_dict(d):
    common = dict(num_qubits=d["num_qubits"], T=d["T_ns"],
                  coeffs=d["coefficients"], tied=d["tied"])
    if d["mode"] == "fourier":
        return FourierSchedule(n_max=d["n_max"], **common)
    if d["mode"] == "piecewise":
        return PiecewiseSchedule(segments=d["segments"], **common)
    raise ScheduleError(f"unknown schedule mode {d['mode']!r}")


def save_schedule(schedule, path):
    with open(path, "w") as fh:
        json.dump(schedule.to_dict(), fh, indent=2)


def load_schedule(path):
    with open(path) as fh:
        return schedule_from_dict(json.load(fh))
