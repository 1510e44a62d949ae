"""Reference step loops in plain numpy.

Same in-place contract as the compiled extension: ``spec`` is the rfft
of the state along position, shape (modes, velocity nodes), advanced
``n_steps`` Strang steps.  Kept intentionally close to the formulas in
the solver module; the compiled version only restructures the loops.
"""

from __future__ import annotations

import numpy as np


def advance_rank_one(
    spec: np.ndarray,
    phase_half: np.ndarray,
    decay: np.ndarray,
    wgain: np.ndarray,
    u: np.ndarray,
    ufreq: np.ndarray,
    mcoef: float,
    half_dt: float,
    q: np.ndarray,
    p: np.ndarray,
    n_steps: int,
) -> None:
    for _ in range(n_steps):
        spec *= phase_half
        m = spec @ u
        s = spec @ ufreq
        before = spec @ q
        m_mid = mcoef * m - half_dt * s
        spec *= decay
        spec += np.outer(m_mid, wgain)
        spec += np.outer(before - spec @ q, p)
        spec *= phase_half


def advance_dense(
    spec: np.ndarray,
    phase_half: np.ndarray,
    prop: np.ndarray,
    q: np.ndarray,
    p: np.ndarray,
    n_steps: int,
) -> None:
    for _ in range(n_steps):
        spec *= phase_half
        before = spec @ q
        spec[:] = spec @ prop.T
        spec += np.outer(before - spec @ q, p)
        spec *= phase_half
