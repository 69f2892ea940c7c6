"""Iterative staging: grow a trained N-qubit schedule to N+1 qubits.

Tunneling (and bias) coefficient sets are copied to every qubit of the larger
system, and the trained pair coupling is copied to every pairwise coupling.
Starting the larger system from these values takes far fewer epochs than the
flat initialization.
"""

from __future__ import annotations

import numpy as np

from .qcore import pair_indices
from .schedules import KIND_ORDER, FourierSchedule, PiecewiseSchedule


def stage_up(trained):
    """Return the (N+1)-qubit schedule initialized from an N-qubit one.

    Tied source: the shared rows carry over unchanged.  Untied source: qubit
    0's row seeds every qubit and pair (0, 1)'s row seeds every pair; the
    basis structure (n_max or segment count) and T are preserved.
    """
    if not isinstance(trained, (FourierSchedule, PiecewiseSchedule)):
        raise TypeError(f"unsupported schedule type {type(trained).__name__}")
    n_new = trained.num_qubits + 1
    coeffs = {}
    for kind in KIND_ORDER:
        src = trained.coeffs[kind]
        if trained.tied:
            coeffs[kind] = src.copy()
        else:
            rows = len(pair_indices(n_new)) if kind == "coupling" else n_new
            coeffs[kind] = np.tile(src[0], (rows, 1))
    if isinstance(trained, FourierSchedule):
        return FourierSchedule(n_new, trained.T, coeffs, tied=trained.tied,
                               n_max=trained.n_max)
    return PiecewiseSchedule(n_new, trained.T, coeffs, tied=trained.tied,
                             segments=trained.segments)
