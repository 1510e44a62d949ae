"""Collision operators on the velocity grid.

Three linearized models share one calling convention.  Each acts on the
trailing (velocity) axis of an ``(n_x, n_v)`` field of the weighted
perturbation, is symmetric with respect to the grid quadrature, and kills
exactly one local profile per position node:

* ``relaxation``: plain relaxation to the Maxwellian-weighted projection at
  rate ``1/kappa``, the discrete gap is ``1/kappa`` exactly;
* ``semiclassical``: relaxation toward a quantum equilibrium with Pauli
  blocking (``epsilon=+1``) or Bose enhancement (``epsilon=-1``); the loss
  rate depends on velocity, the gain stays rank one;
* ``fokker_planck``: drift-diffusion in velocity, built as minus the
  quadrature adjoint of the twisted gradient so that self-adjointness and
  negativity hold on the grid, not only in the continuum limit.

The perturbation variable ``h`` relates to the physical density ``f``
through a fixed velocity weight: ``f = f_eq + weight * h``.  For the first
and third models the weight is the square-root Maxwellian; for the
semiclassical model it is ``sqrt(M)/(1 + eps*kappa_inf*M)``, the choice
that turns the linearized gain into the same rank-one form as plain
relaxation.  ``nonlinear_split`` and ``collision_bilinear`` use the same
weight, so the exact algebraic identity

    Q(f_eq + weight*h) = weight * (L h + Gamma(h, h))

holds on the grid and is enforced by the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy.optimize import brentq

from .grid import DistributionField, PhaseGrid

__all__ = [
    "RelaxationModel",
    "SemiClassicalModel",
    "FokkerPlanckModel",
    "Model",
    "EquilibriumState",
    "maxwellian",
    "sqrt_maxwellian",
    "solve_equilibrium",
    "build_relaxation",
    "build_semiclassical",
    "build_fokker_planck",
    "apply_collision",
    "collision_matrix",
    "boltzmann_frequency",
    "split_gain_loss",
    "project_local",
    "project_global",
    "collision_frequency",
    "collision_bilinear",
    "nonlinear_collision",
    "nonlinear_split",
]

INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


def maxwellian(grid: PhaseGrid) -> np.ndarray:
    """Gaussian velocity profile, renormalized so its quadrature sum is 1.

    The renormalization (a relative shift of order the truncation error)
    makes mass conservation and projection idempotence exact on the grid.
    """
    raw = INV_SQRT_2PI * np.exp(-0.5 * grid.v_nodes**2)
    return raw / (raw @ grid.v_weights)


def sqrt_maxwellian(grid: PhaseGrid) -> np.ndarray:
    return np.sqrt(maxwellian(grid))


@dataclass(frozen=True, eq=False)
class EquilibriumState:
    """Spatially homogeneous quantum equilibrium on a fixed grid.

    ``occupancy`` holds ``kappa_inf * M / (1 + eps * kappa_inf * M)`` at the
    velocity nodes; ``kappa_inf`` is chosen so the quadrature mass equals
    ``rho`` exactly.  ``epsilon`` is +1 for fermions, -1 for bosons, 0 for
    the classical limit (then ``kappa_inf == rho``).
    """

    rho: float
    epsilon: float
    kappa_inf: float
    occupancy: np.ndarray = field(repr=False)


def solve_equilibrium(grid: PhaseGrid, rho: float, epsilon: float) -> EquilibriumState:
    """Solve the scalar mass constraint for the equilibrium multiplier.

    Raises ``ValueError`` when no admissible multiplier exists: fermions
    saturate at occupancy one so ``rho`` must stay below ``2*v_max``; bosons
    require the multiplier to stay below ``1/max(M)``, beyond which the
    grid mass already diverges.
    """
    if rho <= 0:
        raise ValueError("rho must be positive")
    M = maxwellian(grid)
    w = grid.v_weights

    def mass(kappa_inf: float) -> float:
        return float((kappa_inf * M / (1.0 + epsilon * kappa_inf * M)) @ w) - rho

    if epsilon == 0:
        kinf = rho
    elif epsilon > 0:
        cap = float(w.sum())  # occupancy <= 1 caps the mass at the interval length
        if rho >= cap:
            raise ValueError(f"fermion mass {rho} exceeds saturation {cap}")
        hi = 1.0
        while mass(hi) < 0:
            hi *= 2.0
            if hi > 1e12:
                raise ValueError("equilibrium solve failed to bracket")
        kinf = brentq(mass, 1e-14, hi, xtol=1e-15, rtol=8.9e-16)
    else:
        # regularity bound 1 - kappa_inf*max(M) > 0; stay below the continuum
        # critical multiplier sqrt(2*pi) even when no node sits at v = 0
        crit = min(np.sqrt(2.0 * np.pi) * (1.0 - 1e-8), (1.0 - 1e-12) / float(M.max()))
        if mass(crit) < 0:
            raise ValueError(f"boson mass {rho} unreachable below the regularity bound")
        kinf = brentq(mass, 1e-14, crit, xtol=1e-15, rtol=8.9e-16)
    occ = kinf * M / (1.0 + epsilon * kinf * M)
    return EquilibriumState(rho=float(rho), epsilon=float(epsilon), kappa_inf=float(kinf), occupancy=occ)


def _unit_profile(grid: PhaseGrid, profile: np.ndarray) -> np.ndarray:
    nrm = np.sqrt(profile**2 @ grid.v_weights)
    return profile / nrm


@dataclass(frozen=True, eq=False)
class RelaxationModel:
    kind = "relaxation"
    grid: PhaseGrid
    kappa: float
    kernel_profile: np.ndarray = field(repr=False)
    frequency: np.ndarray = field(repr=False)
    gain_profile: np.ndarray = field(repr=False)


@dataclass(frozen=True, eq=False)
class SemiClassicalModel:
    kind = "semiclassical"
    grid: PhaseGrid
    kappa: float
    equilibrium: EquilibriumState
    kernel_profile: np.ndarray = field(repr=False)
    frequency: np.ndarray = field(repr=False)
    gain_profile: np.ndarray = field(repr=False)
    weight: np.ndarray = field(repr=False)


@dataclass(frozen=True, eq=False)
class FokkerPlanckModel:
    kind = "fokker_planck"
    grid: PhaseGrid
    kernel_profile: np.ndarray = field(repr=False)
    twisted_grad: np.ndarray = field(repr=False)
    operator: np.ndarray = field(repr=False)


Model = Union[RelaxationModel, SemiClassicalModel, FokkerPlanckModel]


def build_relaxation(grid: PhaseGrid, kappa: float) -> RelaxationModel:
    """Relaxation model with rate ``1/kappa``."""
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    M = sqrt_maxwellian(grid)
    return RelaxationModel(
        grid=grid,
        kappa=float(kappa),
        kernel_profile=_unit_profile(grid, M),
        frequency=np.full(grid.n_v, 1.0 / kappa),
        gain_profile=M / kappa,
    )


def build_semiclassical(
    grid: PhaseGrid, kappa: float, rho: float, epsilon: float
) -> SemiClassicalModel:
    """Semiclassical relaxation linearized at its grid equilibrium.

    In the weighted variable the operator reads

        L h = -freq(v) h + (1/kappa) * (quadrature of M*h) * M

    with ``freq = rho/(kappa*kappa_inf) * (1 + eps*kappa_inf*Mxw)`` and
    ``M = sqrt(Mxw)``.  The local kernel is spanned by the weighted
    equilibrium ``M/(1 + eps*kappa_inf*Mxw)``; because ``kappa_inf`` solves
    the mass constraint on the same quadrature, ``L`` annihilates that
    profile to round-off.
    """
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    eq = solve_equilibrium(grid, rho, epsilon)
    Mxw = maxwellian(grid)
    M = np.sqrt(Mxw)
    denom = 1.0 + epsilon * eq.kappa_inf * Mxw
    freq = rho / (kappa * eq.kappa_inf) * denom
    return SemiClassicalModel(
        grid=grid,
        kappa=float(kappa),
        equilibrium=eq,
        kernel_profile=_unit_profile(grid, M / denom),
        frequency=freq,
        gain_profile=M / kappa,
        weight=M / denom,
    )


def build_fokker_planck(grid: PhaseGrid) -> FokkerPlanckModel:
    """Velocity drift-diffusion in square-root-Maxwellian weighting.

    The twisted gradient ``G = d/dv + v/2`` is materialized by conjugating
    the differentiation matrix with the weight, ``G = diag(M) Dv diag(1/M)``,
    so ``G`` annihilates the weight exactly.  The operator is then minus the
    quadrature adjoint, ``L = -W^{-1} G^T W G``: symmetric negative
    semidefinite by construction, with discrete kernel exactly ``span{M}``.
    """
    M = sqrt_maxwellian(grid)
    G = (M[:, None] * grid.deriv_v) / M[None, :]
    w = grid.v_weights
    L = -(G.T * w[None, :]) @ G / w[:, None]
    return FokkerPlanckModel(
        grid=grid,
        kernel_profile=_unit_profile(grid, M),
        twisted_grad=G,
        operator=L,
    )


def collision_matrix(model: Model) -> np.ndarray:
    """Dense velocity-space matrix of the linearized operator."""
    if isinstance(model, FokkerPlanckModel):
        return model.operator.copy()
    g = model.grid
    gain = np.outer(model.gain_profile, g.v_weights * sqrt_maxwellian(g))
    return gain - np.diag(model.frequency)


def apply_collision(model: Model, h: DistributionField) -> DistributionField:
    """Linearized collision operator applied per position node."""
    return DistributionField(h.grid, apply_collision_values(model, h.values))


def apply_collision_values(model: Model, values: np.ndarray) -> np.ndarray:
    if isinstance(model, FokkerPlanckModel):
        return values @ model.operator.T
    g = model.grid
    moments = values @ (g.v_weights * sqrt_maxwellian(g))
    return np.outer(moments, model.gain_profile) - values * model.frequency[None, :]


def split_gain_loss(model: Model, h: DistributionField) -> tuple[DistributionField, DistributionField]:
    """Split ``L h = gain - loss`` into its bounded and multiplicative parts.

    For the drift-diffusion model there is no bounded part; the split is
    ``(0, -L h)``.
    """
    g = h.grid
    if isinstance(model, FokkerPlanckModel):
        loss = -apply_collision_values(model, h.values)
        return DistributionField(g, np.zeros_like(h.values)), DistributionField(g, loss)
    moments = h.values @ (g.v_weights * sqrt_maxwellian(g))
    gain = np.outer(moments, model.gain_profile)
    loss = h.values * model.frequency[None, :]
    return DistributionField(g, gain), DistributionField(g, loss)


def collision_frequency(model: Model) -> np.ndarray:
    """Velocity profile of the multiplicative loss rate."""
    if isinstance(model, FokkerPlanckModel):
        raise ValueError("drift-diffusion has no multiplicative frequency")
    return model.frequency.copy()


def project_local(model: Model, h: DistributionField) -> DistributionField:
    """Per-position projection onto the local collision kernel."""
    g = h.grid
    p = model.kernel_profile
    coeff = h.values @ (g.v_weights * p)
    return DistributionField(g, np.outer(coeff, p))


def project_global(model: Model, h: DistributionField) -> DistributionField:
    """Projection onto the global equilibrium direction (kernel, x-averaged)."""
    g = h.grid
    p = model.kernel_profile
    coeff = float(np.mean(h.values @ (g.v_weights * p)))
    return DistributionField(g, np.broadcast_to(coeff * p, h.values.shape).copy())


def _require_semiclassical(model: Model) -> SemiClassicalModel:
    if not isinstance(model, SemiClassicalModel):
        raise TypeError(f"expected semiclassical model, got {model.kind}")
    return model


def collision_bilinear(
    model: Model, h1: DistributionField, h2: DistributionField
) -> DistributionField:
    """Symmetric quadratic remainder of the semiclassical collision.

    Defined so that expanding the nonlinear operator around equilibrium in
    the weighted variable terminates exactly:
    ``Q(f_eq + S h) = S (L h + Gamma(h, h))`` with ``S`` the model weight.
    """
    m = _require_semiclassical(model)
    g = m.grid
    Mxw = maxwellian(g)
    M = np.sqrt(Mxw)
    eps, kinf, kap = m.equilibrium.epsilon, m.equilibrium.kappa_inf, m.kappa
    if eps == 0:
        return DistributionField(g, np.zeros_like(h1.values))
    denom = 1.0 + eps * kinf * Mxw
    # moment difference: quadrature of M*h*(Mxw' - Mxw)/denom', per x node
    base = g.v_weights * M / denom
    m1 = h1.values @ (base * Mxw)
    r1 = h1.values @ base
    m2 = h2.values @ (base * Mxw)
    r2 = h2.values @ base
    out = (eps / (2.0 * kap)) * (
        h1.values * (m2[:, None] - np.outer(r2, Mxw))
        + h2.values * (m1[:, None] - np.outer(r1, Mxw))
    )
    return DistributionField(g, out)


def nonlinear_collision(model: Model, f: DistributionField) -> DistributionField:
    """Full quadratic collision operator acting on the physical density."""
    source, rate = nonlinear_split(model, f)
    return DistributionField(f.grid, source.values - rate.values * f.values)


def boltzmann_frequency(gamma_exp: float, v_nodes: np.ndarray) -> np.ndarray:
    """Hard-potential collision frequency: convolution of |.|^gamma with the
    Maxwellian, evaluated at the given velocities.

    ``gamma_exp = 0`` gives the constant 1 (unit kernel normalization);
    ``gamma_exp = 1`` at v = 0 gives the Gaussian mean speed sqrt(2/pi).
    The integrand has a kink at v, so the quadrature is adaptive with the
    kink declared as a breakpoint rather than a fixed rule.
    """
    if not 0.0 <= gamma_exp <= 1.0:
        raise ValueError("gamma_exp must lie in [0, 1] (hard potentials)")
    from scipy.integrate import quad

    def nu_at(v: float) -> float:
        def integrand(u: float) -> float:
            return abs(v - u) ** gamma_exp * INV_SQRT_2PI * np.exp(-0.5 * u * u)

        lo, hi = min(-20.0, v - 1.0), max(20.0, v + 1.0)
        val, _ = quad(integrand, lo, hi, points=[v], limit=200, epsabs=1e-12, epsrel=1e-12)
        return val

    return np.array([nu_at(float(v)) for v in np.asarray(v_nodes, dtype=float)])


def nonlinear_split(
    model: Model, f: DistributionField
) -> tuple[DistributionField, DistributionField]:
    """Write ``Q(f) = source - rate * f`` with sign structure suited to
    positivity-preserving integrators.

    ``source = Mxw * rho_f / kappa`` is nonnegative whenever ``f`` is, and
    for fermion data below saturation the ``rate`` profile stays
    nonnegative as well.
    """
    m = _require_semiclassical(model)
    g = m.grid
    Mxw = maxwellian(g)
    eps, kap = m.equilibrium.epsilon, m.kappa
    rho_f = f.values @ g.v_weights
    m_f = f.values @ (g.v_weights * Mxw)
    source = np.outer(rho_f, Mxw) / kap
    rate = (1.0 - eps * m_f[:, None] + eps * np.outer(rho_f, Mxw)) / kap
    return DistributionField(g, source), DistributionField(g, rate)
