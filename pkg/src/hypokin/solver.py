"""Time integration on the discrete phase space.

Four run types share one skeleton: exact Fourier transport in position,
an unconditionally stable collision substep in velocity, Strang
composition, and norm sampling into a decay report.

    run_linear          relaxation / semiclassical (linearized) / drift-diffusion
    run_nonlinear_sc    quadratic semiclassical collision with transport
    run_with_potential  relaxation model with a weak external force
    run_poisson         relaxation model coupled to its own field

Transport multiplies each spatial Fourier mode by e^{-i k v dt}; for an
even mode count the unpaired highest mode has no well-defined phase and
is left untouched, which keeps the step real, unitary, and reversible.
The linear collision substep solves the scalar decay exactly per node
with the rank-one gain frozen at the step midpoint, then restores the
local kernel moment (the correction is third order in the step and
exactly zero for the plain relaxation model).  The drift-diffusion
substep applies a cached exact propagator, which subsumes any implicit
treatment of the stiff multiplicative part.  The nonlinear substep is an
explicit midpoint update of the quadratic operator, whose velocity
quadrature vanishes identically, so mass is conserved to round-off by
construction.

All randomness flows from the single seed in the run configuration.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.linalg import expm, lu_factor, lu_solve

from . import hypo
from . import kernels
from .grid import (
    DistributionField,
    PhaseGrid,
    build_grid,
    norm_h1,
    norm_l2,
    random_smooth_field,
)
from .models import (
    FokkerPlanckModel,
    Model,
    RelaxationModel,
    SemiClassicalModel,
    build_fokker_planck,
    build_relaxation,
    build_semiclassical,
    nonlinear_split,
    project_global,
    sqrt_maxwellian,
)

__all__ = [
    "SCHEMES",
    "EQUATIONS",
    "RECIPES",
    "SolverAbort",
    "ModelSpec",
    "GridSpec",
    "InitialSpec",
    "PotentialSpec",
    "RunConfig",
    "build_model",
    "initial_field",
    "potential_from_mode",
    "poisson_field",
    "transport_step",
    "collision_step",
    "force_step",
    "run_linear",
    "run_nonlinear_sc",
    "run_with_potential",
    "run_poisson",
]

SCHEMES = ("strang_exact_transport", "imex_euler")
EQUATIONS = ("linear", "nonlinear", "potential", "poisson")
RECIPES = ("mode_times_vM", "random_band", "stationary", "relative_mode")


class SolverAbort(RuntimeError):
    """Raised when a run must stop: non-finite state, conservation breach,
    or a range violation.  Carries the offending step index."""

    def __init__(self, message: str, step: int):
        super().__init__(f"{message} at step {step}")
        self.step = step


# ---------------------------------------------------------------------------
# run configuration


@dataclass(frozen=True)
class ModelSpec:
    """Which collision model to build.  ``epsilon`` is the statistics sign
    of the semiclassical model (+1 fermion, -1 boson, 0 classical)."""

    kind: str = "relaxation"
    kappa: float = 1.0
    rho: float = 1.0
    epsilon: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in ("relaxation", "semiclassical", "fokker_planck"):
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.kappa <= 0:
            raise ValueError("kappa must be positive")
        if self.rho <= 0:
            raise ValueError("rho must be positive")
        if self.epsilon not in (-1.0, 0.0, 1.0):
            raise ValueError("epsilon must be one of -1, 0, +1")


@dataclass(frozen=True)
class GridSpec:
    n_x: int = 16
    length_x: float = 2.0 * math.pi
    n_v: int = 32
    v_max: float = 8.0
    quadrature: str = "uniform"

    def build(self) -> PhaseGrid:
        return build_grid(self.n_x, self.length_x, self.n_v, self.v_max, self.quadrature)


@dataclass(frozen=True)
class InitialSpec:
    """Named initial-condition recipe.

    ``mode_times_vM``: sin of a spatial mode times v times the
    square-root Maxwellian (amplitude multiplies the raw shape).
    ``random_band``: band-limited random field, normalized so the
    amplitude is its H1 norm.  ``stationary``: a discrete steady state
    (kernel profile in the unpaired spatial mode).  ``relative_mode``:
    sinusoidal relative perturbation of the equilibrium density, the
    shape used by the nonlinear runs.
    """

    recipe: str = "mode_times_vM"
    amplitude: float = 1.0
    mode: int = 1

    def __post_init__(self) -> None:
        if self.recipe not in RECIPES:
            raise ValueError(f"unknown initial recipe {self.recipe!r}")
        if not math.isfinite(self.amplitude) or self.amplitude == 0:
            raise ValueError("amplitude must be finite and nonzero")
        if self.mode < 1:
            raise ValueError("mode must be a positive integer")


@dataclass(frozen=True)
class PotentialSpec:
    """External potential sampled at the position nodes, with a recorded
    C2-size bound used to gate the weak-field hypothesis."""

    values: np.ndarray
    c2_bound: float


@dataclass(frozen=True)
class RunConfig:
    model: ModelSpec = field(default_factory=ModelSpec)
    grid: GridSpec = field(default_factory=GridSpec)
    t_end: float = 20.0
    dt: float = 1e-2
    sample_every: int = 10
    scheme: str = "strang_exact_transport"
    equation: str = "linear"
    initial: InitialSpec = field(default_factory=InitialSpec)
    seed: int = 1234
    order: int = 1
    epsilon0_bound: float = 0.05
    potential_bound: float = 0.05
    mass_rel_tol: float = 1e-10
    monotone_tol: float = 1e-9
    fit_series: str = "h1"
    fit_transient: float = 0.1
    fit_window: float = 0.5

    def __post_init__(self) -> None:
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError("dt must be positive")
        if self.t_end < self.dt:
            raise ValueError("t_end must be at least one step")
        if self.sample_every < 1:
            raise ValueError("sample_every must be at least 1")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.equation not in EQUATIONS:
            raise ValueError(f"unknown equation {self.equation!r}")
        if self.order not in (1, 2):
            raise ValueError("order must be 1 or 2")
        if self.equation == "nonlinear" and abs(self.initial.amplitude) > self.epsilon0_bound:
            raise ValueError(
                f"nonlinear amplitude {self.initial.amplitude} exceeds the "
                f"smallness bound {self.epsilon0_bound}"
            )

    @property
    def n_steps(self) -> int:
        return max(int(round(self.t_end / self.dt)), 1)


def build_model(spec: ModelSpec, grid: PhaseGrid) -> Model:
    if spec.kind == "relaxation":
        return build_relaxation(grid, spec.kappa)
    if spec.kind == "semiclassical":
        return build_semiclassical(grid, spec.kappa, spec.rho, spec.epsilon)
    return build_fokker_planck(grid)


# ---------------------------------------------------------------------------
# initial conditions


def initial_field(
    model: Model,
    spec: InitialSpec,
    rng: Optional[np.random.Generator] = None,
) -> DistributionField:
    g = model.grid
    phase = 2.0 * math.pi * spec.mode / g.length_x
    sx = np.sin(phase * g.x_nodes)
    if spec.recipe == "mode_times_vM":
        shape = np.outer(sx, g.v_nodes * sqrt_maxwellian(g))
    elif spec.recipe == "random_band":
        if rng is None:
            raise ValueError("random_band needs a generator")
        raw = random_smooth_field(g, rng)
        shape = raw.values / norm_h1(raw)
    elif spec.recipe == "stationary":
        if g.n_x % 2 == 0:
            col = np.where(np.arange(g.n_x) % 2 == 0, 1.0, -1.0)
        else:
            col = np.ones(g.n_x)
        shape = np.outer(col, model.kernel_profile)
    else:  # relative_mode
        if isinstance(model, SemiClassicalModel):
            profile = model.equilibrium.occupancy / model.weight
        else:
            profile = sqrt_maxwellian(g)
        shape = np.outer(sx, profile)
    return DistributionField(g, spec.amplitude * shape)


def _mean_free(model: Model, h: DistributionField, label: str) -> DistributionField:
    pg = project_global(model, h)
    drift = norm_l2(pg)
    if drift > 1e-13 * max(norm_l2(h), 1e-300):
        warnings.warn(
            f"{label}: initial data has a conserved component "
            f"(norm {drift:.3e}); projecting it out",
            stacklevel=3,
        )
        return DistributionField(h.grid, h.values - pg.values)
    return h


# ---------------------------------------------------------------------------
# elementary steps


def _phase_table(grid: PhaseGrid, dt: float) -> np.ndarray:
    ph = np.exp(-1j * dt * np.outer(grid.wavenumbers, grid.v_nodes))
    if grid.n_x % 2 == 0:
        ph[-1, :] = 1.0
    return ph


def transport_step(h: DistributionField, dt: float) -> DistributionField:
    """Exact free flow h(x, v) -> h(x - v dt, v)."""
    g = h.grid
    spec = np.fft.rfft(h.values, axis=0)
    spec *= _phase_table(g, dt)
    return DistributionField(g, np.fft.irfft(spec, n=g.n_x, axis=0))


@dataclass(frozen=True)
class _CollisionData:
    """Precomputed per-(model, dt) arrays driving the collision substep."""

    decay: np.ndarray
    wgain: np.ndarray
    u: np.ndarray
    ufreq: np.ndarray
    mcoef: float
    half_dt: float
    q: np.ndarray
    p: np.ndarray


def _collision_data(model: Model, dt: float) -> _CollisionData:
    g = model.grid
    freq = model.frequency
    decay = np.exp(-freq * dt)
    wgain = (1.0 - decay) / freq * model.gain_profile
    u = g.v_weights * sqrt_maxwellian(g)
    q = g.v_weights * model.kernel_profile
    ug = float(u @ model.gain_profile)
    return _CollisionData(
        decay=decay,
        wgain=wgain,
        u=u,
        ufreq=u * freq,
        mcoef=1.0 + 0.5 * dt * ug,
        half_dt=0.5 * dt,
        q=q,
        p=model.kernel_profile,
    )


def _apply_rank_one(values: np.ndarray, d: _CollisionData) -> np.ndarray:
    # moments first, then decay; works on real rows and on spectral rows
    m = values @ d.u
    s = values @ d.ufreq
    before = values @ d.q
    m_mid = d.mcoef * m - d.half_dt * s
    out = values * d.decay + np.outer(m_mid, d.wgain)
    out += np.outer(before - out @ d.q, d.p)
    return out


_PROPAGATORS: dict = {}


def _fp_propagator(model: FokkerPlanckModel, dt: float) -> np.ndarray:
    key = (id(model), float(dt))
    if key not in _PROPAGATORS:
        _PROPAGATORS[key] = expm(dt * model.operator)
    return _PROPAGATORS[key]


def _apply_dense(values: np.ndarray, prop: np.ndarray, q: np.ndarray, p: np.ndarray) -> np.ndarray:
    before = values @ q
    out = values @ prop.T
    out += np.outer(before - out @ q, p)
    return out


def _implicit_rank_one(values: np.ndarray, model: Model, dt: float) -> np.ndarray:
    g = model.grid
    freq, gain = model.frequency, model.gain_profile
    u = g.v_weights * sqrt_maxwellian(g)
    q = g.v_weights * model.kernel_profile
    shrink = 1.0 / (1.0 + dt * freq)
    gd = gain * shrink
    before = values @ q
    ht = values * shrink
    m_plus = (ht @ u) / (1.0 - dt * float(u @ gd))
    out = ht + dt * np.outer(m_plus, gd)
    out += np.outer(before - out @ q, model.kernel_profile)
    return out


def collision_step(
    model: Model,
    h_or_f: DistributionField,
    dt: float,
    linear: bool = True,
    method: str = "midpoint_exponential",
) -> DistributionField:
    """One collision substep.

    Linear: exact per-node exponential with the gain frozen at the step
    midpoint (or a cached exact propagator for drift-diffusion), plus an
    exact restoration of the per-position kernel moment.  Both variants
    are unconditionally stable.  Nonlinear: explicit midpoint update of
    the quadratic operator, stable for dt below the inverse of the
    current loss rate; violating that bound raises instead of blowing up.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    g = h_or_f.grid
    if linear:
        if isinstance(model, FokkerPlanckModel):
            if method == "implicit_euler":
                lu = lu_factor(np.eye(g.n_v) - dt * model.operator)
                out = lu_solve(lu, h_or_f.values.T).T
                q = g.v_weights * model.kernel_profile
                out += np.outer(h_or_f.values @ q - out @ q, model.kernel_profile)
            else:
                out = _apply_dense(
                    h_or_f.values,
                    _fp_propagator(model, dt),
                    g.v_weights * model.kernel_profile,
                    model.kernel_profile,
                )
        elif method == "implicit_euler":
            out = _implicit_rank_one(h_or_f.values, model, dt)
        else:
            out = _apply_rank_one(h_or_f.values, _collision_data(model, dt))
        return DistributionField(g, out)
    if not isinstance(model, SemiClassicalModel):
        raise TypeError("nonlinear stepping is defined for the semiclassical model")
    return _nonlinear_collision_step(model, h_or_f, dt)


def _nonlinear_rhs(model: SemiClassicalModel, values: np.ndarray, dt: float, step: int) -> np.ndarray:
    f = DistributionField(model.grid, values)
    source, rate = nonlinear_split(model, f)
    peak = float(np.max(np.abs(rate.values)))
    if dt * peak > 2.0:
        raise SolverAbort(
            f"explicit collision update unstable: dt*rate = {dt * peak:.3g} > 2", step
        )
    return source.values - rate.values * values


def _nonlinear_collision_step(
    model: SemiClassicalModel, f: DistributionField, dt: float, step: int = 0
) -> DistributionField:
    k1 = _nonlinear_rhs(model, f.values, dt, step)
    mid = f.values + 0.5 * dt * k1
    k2 = _nonlinear_rhs(model, mid, dt, step)
    return DistributionField(f.grid, f.values + dt * k2)


def force_step(h: DistributionField, propagators: np.ndarray) -> DistributionField:
    """Velocity advection by a position-dependent force, one exact
    propagator per position node."""
    out = np.einsum("xvw,xw->xv", propagators, h.values)
    return DistributionField(h.grid, out)


def _force_propagators(grid: PhaseGrid, slopes: np.ndarray, tau: float) -> np.ndarray:
    mats = np.empty((grid.n_x, grid.n_v, grid.n_v))
    cache: dict[float, np.ndarray] = {}
    for i, a in enumerate(slopes):
        key = float(a)
        if key not in cache:
            cache[key] = np.eye(grid.n_v) if key == 0.0 else expm(key * tau * grid.deriv_v)
        mats[i] = cache[key]
    return mats


# ---------------------------------------------------------------------------
# sampling scaffold shared by the run loops


class _Recorder:
    def __init__(
        self,
        model: Model,
        weights: hypo.LyapunovWeights,
        nu0_ratio: float,
        order: int,
        extra_names: tuple[str, ...] = (),
        callback: Optional[Callable[[int, float, DistributionField], None]] = None,
    ):
        self.model = model
        self.weights = weights
        self.nu0_ratio = nu0_ratio
        self.order = order
        self.callback = callback
        self.times: list[float] = []
        self.l2: list[float] = []
        self.h1: list[float] = []
        self.lyap: list[float] = []
        self.lam: list[float] = []
        self.mass: list[float] = []
        self.extras: dict[str, list[float]] = {name: [] for name in extra_names}
        if order == 2:
            self.extras.setdefault("lyapunov2", [])

    def take(self, step: int, t: float, values: np.ndarray, mass: float, **extra: float) -> None:
        if not np.all(np.isfinite(values)):
            raise SolverAbort("non-finite state", step)
        h = DistributionField(self.model.grid, values)
        self.times.append(t)
        self.l2.append(norm_l2(h))
        self.h1.append(norm_h1(h))
        self.lyap.append(hypo.lyapunov(h, self.weights))
        self.lam.append(hypo.lambda_norm(self.model, h))
        self.mass.append(mass)
        if self.order == 2:
            self.extras["lyapunov2"].append(
                hypo.lyapunov_k(h, self.weights, 2, self.nu0_ratio)
            )
        for name, val in extra.items():
            self.extras[name].append(val)
        if self.callback is not None:
            self.callback(step, t, h)

    def report(self, monotone_tol: float) -> hypo.DecayReport:
        lyap = np.array(self.lyap)
        return hypo.DecayReport(
            times=np.array(self.times),
            l2=np.array(self.l2),
            h1=np.array(self.h1),
            lyapunov=lyap,
            lam=np.array(self.lam),
            mass=np.array(self.mass),
            extras={k: np.array(v) for k, v in self.extras.items()},
            monotone_violations=hypo.count_violations(lyap, monotone_tol),
        )


def _sample_steps(n_steps: int, every: int) -> list[int]:
    marks = list(range(0, n_steps, every))
    if marks[-1] != n_steps:
        marks.append(n_steps)
    return marks


def _resolve_weights(model, grid, weights, constants):
    from .constants import measure_constants, select_weights

    ratio = 1.0
    if weights is None:
        if constants is None:
            constants = measure_constants(model, grid)
        weights = select_weights(constants)
    if constants is not None:
        ratio = constants.nu0 / constants.nu1
    return weights, ratio


def _finish(rec: _Recorder, config: RunConfig) -> hypo.DecayReport:
    report = rec.report(config.monotone_tol)
    try:
        return hypo.attach_fit(
            report, config.fit_series, config.fit_transient, config.fit_window
        )
    except ValueError:
        # short runs keep the raw series with the fit marked inconclusive
        return report


# ---------------------------------------------------------------------------
# run loops


def run_linear(
    config: RunConfig,
    model: Optional[Model] = None,
    weights: Optional[hypo.LyapunovWeights] = None,
    constants=None,
    callback: Optional[Callable[[int, float, DistributionField], None]] = None,
) -> hypo.DecayReport:
    """Integrate the linearized equation and sample a decay report.

    Initial data is projected onto the mean-free complement (with a
    warning if that changes it).  The spatial spectrum is the state
    variable between samples; a non-finite sample aborts with the step
    index.
    """
    grid = config.grid.build()
    if model is None:
        model = build_model(config.model, grid)
    weights, nu0_ratio = _resolve_weights(model, grid, weights, constants)
    rng = np.random.default_rng(config.seed)
    h0 = _mean_free(model, initial_field(model, config.initial, rng), "run_linear")

    dt = config.dt
    n_steps = config.n_steps
    rec = _Recorder(model, weights, nu0_ratio, config.order, callback=callback)

    spec = np.fft.rfft(h0.values, axis=0)
    q = grid.v_weights * model.kernel_profile

    if config.scheme == "strang_exact_transport":
        ph = _phase_table(grid, 0.5 * dt)
        if isinstance(model, FokkerPlanckModel):
            prop = _fp_propagator(model, dt)
            advance = lambda s, n: kernels.advance_dense(s, ph, prop, q, model.kernel_profile, n)
        else:
            d = _collision_data(model, dt)
            advance = lambda s, n: kernels.advance_rank_one(
                s, ph, d.decay, d.wgain, d.u, d.ufreq, d.mcoef, d.half_dt, d.q, d.p, n
            )
    else:
        ph_full = _phase_table(grid, dt)
        if isinstance(model, FokkerPlanckModel):
            lu = lu_factor(np.eye(grid.n_v) - dt * model.operator)

            def advance(s: np.ndarray, n: int) -> None:
                for _ in range(n):
                    s *= ph_full
                    out = lu_solve(lu, s.T).T
                    out += np.outer(s @ q - out @ q, model.kernel_profile)
                    s[:] = out
        else:

            def advance(s: np.ndarray, n: int) -> None:
                for _ in range(n):
                    s *= ph_full
                    s[:] = _implicit_rank_one(s, model, dt)

    marks = _sample_steps(n_steps, config.sample_every)
    done = 0
    for mark in marks:
        if mark > done:
            advance(spec, mark - done)
            done = mark
        values = np.fft.irfft(spec, n=grid.n_x, axis=0)
        # conserved moment: full-space quadrature against the kernel profile
        mass = float(np.sum(values @ q) * grid.length_x / grid.n_x)
        rec.take(mark, mark * dt, values, mass)
    return _finish(rec, config)


def run_nonlinear_sc(
    config: RunConfig,
    model: Optional[SemiClassicalModel] = None,
    weights: Optional[hypo.LyapunovWeights] = None,
    constants=None,
    callback: Optional[Callable[[int, float, DistributionField], None]] = None,
) -> hypo.DecayReport:
    """Integrate the quadratic collision equation with transport.

    The state is the physical density; the report tracks the weighted
    deviation from equilibrium (the variable of the linearized theory),
    total mass, and the density range.  Fermion runs abort if the density
    leaves [0, 1] beyond round-off slack; every run aborts on relative
    mass drift beyond the configured tolerance.
    """
    grid = config.grid.build()
    if model is None:
        m = build_model(config.model, grid)
        if not isinstance(m, SemiClassicalModel):
            raise ValueError("nonlinear runs need the semiclassical model")
        model = m
    weights, nu0_ratio = _resolve_weights(model, grid, weights, constants)
    rng = np.random.default_rng(config.seed)
    h0 = _mean_free(model, initial_field(model, config.initial, rng), "run_nonlinear_sc")

    if norm_h1(h0) > config.epsilon0_bound * 1.5:
        raise ValueError(
            f"initial perturbation H1 norm {norm_h1(h0):.3g} exceeds the "
            f"smallness bound {config.epsilon0_bound}"
        )

    eq_values = np.broadcast_to(model.equilibrium.occupancy, (grid.n_x, grid.n_v))
    f = eq_values + model.weight * h0.values
    fermion = model.equilibrium.epsilon > 0

    dt = config.dt
    if config.scheme != "strang_exact_transport":
        raise ValueError("nonlinear runs use the strang_exact_transport scheme")
    ph = _phase_table(grid, 0.5 * dt)
    dx = grid.length_x / grid.n_x

    def total_mass(values: np.ndarray) -> float:
        return float(np.sum(values @ grid.v_weights) * dx)

    mass0 = total_mass(f)
    rec = _Recorder(
        model, weights, nu0_ratio, config.order, extra_names=("fmin", "fmax"), callback=callback
    )

    def check_and_record(step: int, values: np.ndarray) -> None:
        if not np.all(np.isfinite(values)):
            raise SolverAbort("non-finite density", step)
        fmin, fmax = float(values.min()), float(values.max())
        if fmin < -1e-12 or (fermion and fmax > 1.0 + 1e-12):
            raise SolverAbort(
                f"density range [{fmin:.3e}, {fmax:.3e}] violates the occupancy bounds", step
            )
        mass = total_mass(values)
        if abs(mass - mass0) > config.mass_rel_tol * abs(mass0):
            raise SolverAbort(
                f"mass drift {abs(mass - mass0):.3e} exceeds tolerance", step
            )
        h = (values - eq_values) / model.weight
        rec.take(step, step * dt, h, mass, fmin=fmin, fmax=fmax)

    n_steps = config.n_steps
    marks = _sample_steps(n_steps, config.sample_every)
    check_and_record(0, f)
    next_idx = 1
    for step in range(1, n_steps + 1):
        spec = np.fft.rfft(f, axis=0)
        spec *= ph
        f = np.fft.irfft(spec, n=grid.n_x, axis=0)
        f = _nonlinear_collision_step(model, DistributionField(grid, f), dt, step).values
        spec = np.fft.rfft(f, axis=0)
        spec *= ph
        f = np.fft.irfft(spec, n=grid.n_x, axis=0)
        if next_idx < len(marks) and step == marks[next_idx]:
            check_and_record(step, f)
            next_idx += 1
    return _finish(rec, config)


def potential_from_mode(grid: PhaseGrid, amplitude: float, mode: int = 1) -> PotentialSpec:
    """Cosine potential with a spectral C2-size bound."""
    k = 2.0 * math.pi * mode / grid.length_x
    values = amplitude * np.cos(k * grid.x_nodes)
    bound = abs(amplitude) * (1.0 + k + k * k)
    return PotentialSpec(values=values, c2_bound=float(bound))


def _potential_slopes(grid: PhaseGrid, potential: PotentialSpec) -> np.ndarray:
    spec = np.fft.rfft(potential.values)
    spec *= 1j * grid.wavenumbers
    if grid.n_x % 2 == 0:
        spec[-1] = 0.0
    return np.fft.irfft(spec, n=grid.n_x)


def run_with_potential(
    config: RunConfig,
    potential: PotentialSpec,
    model: Optional[RelaxationModel] = None,
    weights: Optional[hypo.LyapunovWeights] = None,
    constants=None,
    callback: Optional[Callable[[int, float, DistributionField], None]] = None,
) -> hypo.DecayReport:
    """Linear run with a weak external force on the relaxation model.

    The force substep advects in velocity with one exact propagator per
    position node; a zero potential delegates to :func:`run_linear`
    unchanged.  The size gate refuses potentials beyond the configured
    weak-field bound.
    """
    grid = config.grid.build()
    if model is None:
        m = build_model(config.model, grid)
        if not isinstance(m, RelaxationModel):
            raise ValueError("potential runs support the relaxation model only")
        model = m
    elif not isinstance(model, RelaxationModel):
        raise ValueError("potential runs support the relaxation model only")
    if potential.values.shape != (grid.n_x,):
        raise ValueError("potential must be sampled at the position nodes")
    if potential.c2_bound > config.potential_bound:
        raise ValueError(
            f"potential size {potential.c2_bound:.3g} exceeds the weak-field "
            f"bound {config.potential_bound}"
        )
    if not np.any(potential.values):
        return run_linear(config, model=model, weights=weights, constants=constants, callback=callback)

    weights, nu0_ratio = _resolve_weights(model, grid, weights, constants)
    rng = np.random.default_rng(config.seed)
    h0 = _mean_free(model, initial_field(model, config.initial, rng), "run_with_potential")

    dt = config.dt
    if config.scheme != "strang_exact_transport":
        raise ValueError("potential runs use the strang_exact_transport scheme")
    ph = _phase_table(grid, 0.5 * dt)
    slopes = _potential_slopes(grid, potential)
    props = _force_propagators(grid, slopes, 0.5 * dt)
    d = _collision_data(model, dt)
    q = grid.v_weights * model.kernel_profile
    dx = grid.length_x / grid.n_x

    rec = _Recorder(model, weights, nu0_ratio, config.order, callback=callback)
    values = h0.values.copy()

    def record(step: int, vals: np.ndarray) -> None:
        mass = float(np.sum(vals @ q) * dx)
        rec.take(step, step * dt, vals, mass)

    n_steps = config.n_steps
    marks = _sample_steps(n_steps, config.sample_every)
    record(0, values)
    next_idx = 1
    for step in range(1, n_steps + 1):
        spec = np.fft.rfft(values, axis=0)
        spec *= ph
        values = np.fft.irfft(spec, n=grid.n_x, axis=0)
        values = np.einsum("xvw,xw->xv", props, values)
        values = _apply_rank_one(values, d)
        values = np.einsum("xvw,xw->xv", props, values)
        spec = np.fft.rfft(values, axis=0)
        spec *= ph
        values = np.fft.irfft(spec, n=grid.n_x, axis=0)
        if next_idx < len(marks) and step == marks[next_idx]:
            record(step, values)
            next_idx += 1
    return _finish(rec, config)


def poisson_field(grid: PhaseGrid, source: np.ndarray, tol: float = 1e-9) -> tuple[np.ndarray, np.ndarray]:
    """Solve the periodic Poisson problem d2V/dx2 = source with zero-mean
    gauge; returns (V, dV/dx).  A source with nonzero mean has no
    periodic solution and raises."""
    src = np.asarray(source, dtype=float)
    if src.shape != (grid.n_x,):
        raise ValueError("source must be sampled at the position nodes")
    spec = np.fft.rfft(src)
    scale = max(float(np.max(np.abs(src))), 1.0)
    if abs(spec[0]) > tol * grid.n_x * scale:
        raise ValueError("Poisson source must have zero mean on the torus")
    k = grid.wavenumbers.copy()
    k[0] = 1.0
    vspec = -spec / k**2
    vspec[0] = 0.0
    dspec = 1j * k * vspec
    if grid.n_x % 2 == 0:
        vspec[-1] = 0.0
        dspec[-1] = 0.0
    return np.fft.irfft(vspec, n=grid.n_x), np.fft.irfft(dspec, n=grid.n_x)


def run_poisson(
    config: RunConfig,
    model: Optional[RelaxationModel] = None,
    weights: Optional[hypo.LyapunovWeights] = None,
    constants=None,
    callback: Optional[Callable[[int, float, DistributionField], None]] = None,
) -> hypo.DecayReport:
    """Linearized self-consistent-field run on the relaxation model.

    Each spatial mode couples transport and its own field exactly in one
    propagator, so the free part conserves the combined field-plus-state
    energy to round-off; the report adds the field-energy series.
    """
    grid = config.grid.build()
    if model is None:
        m = build_model(config.model, grid)
        if not isinstance(m, RelaxationModel):
            raise ValueError("self-consistent runs support the relaxation model only")
        model = m
    elif not isinstance(model, RelaxationModel):
        raise ValueError("self-consistent runs support the relaxation model only")
    weights, nu0_ratio = _resolve_weights(model, grid, weights, constants)
    rng = np.random.default_rng(config.seed)
    h0 = _mean_free(model, initial_field(model, config.initial, rng), "run_poisson")

    dt = config.dt
    if config.scheme != "strang_exact_transport":
        raise ValueError("self-consistent runs use the strang_exact_transport scheme")
    M = sqrt_maxwellian(grid)
    u = grid.v_weights * M
    q = grid.v_weights * model.kernel_profile
    d = _collision_data(model, dt)
    dx = grid.length_x / grid.n_x

    # one exact propagator per retained mode: transport plus field coupling
    n_k = grid.wavenumbers.size
    props = np.empty((n_k, grid.n_v, grid.n_v), dtype=complex)
    props[0] = np.eye(grid.n_v)
    last_coupled = n_k - 1 if grid.n_x % 2 == 1 else n_k - 2
    for j in range(1, n_k):
        kj = grid.wavenumbers[j]
        if j > last_coupled:
            props[j] = np.eye(grid.n_v)
            continue
        B = -1j * kj * np.diag(grid.v_nodes) - (1j / kj) * np.outer(grid.v_nodes * M, u)
        props[j] = expm(0.5 * dt * B)

    def field_energy(values: np.ndarray) -> float:
        rho = values @ u
        _, dV = poisson_field(grid, rho)
        return float(np.sum(dV * dV) * dx)

    rec = _Recorder(
        model, weights, nu0_ratio, config.order,
        extra_names=("field_energy",), callback=callback,
    )
    values = h0.values.copy()

    def record(step: int, vals: np.ndarray) -> None:
        mass = float(np.sum(vals @ q) * dx)
        rec.take(step, step * dt, vals, mass, field_energy=field_energy(vals))

    def free_half(spec: np.ndarray) -> None:
        for j in range(n_k):
            spec[j] = props[j] @ spec[j]

    n_steps = config.n_steps
    marks = _sample_steps(n_steps, config.sample_every)
    record(0, values)
    next_idx = 1
    spec = np.fft.rfft(values, axis=0)
    for step in range(1, n_steps + 1):
        free_half(spec)
        spec = _apply_rank_one(spec, d)
        free_half(spec)
        if next_idx < len(marks) and step == marks[next_idx]:
            values = np.fft.irfft(spec, n=grid.n_x, axis=0)
            record(step, values)
            next_idx += 1
    return _finish(rec, config)


def run(config: RunConfig, **kwargs) -> hypo.DecayReport:
    """Dispatch on the configured equation."""
    if config.equation == "linear":
        return run_linear(config, **kwargs)
    if config.equation == "nonlinear":
        return run_nonlinear_sc(config, **kwargs)
    if config.equation == "potential":
        potential = kwargs.pop("potential", None)
        if potential is None:
            raise ValueError("potential runs need a PotentialSpec")
        return run_with_potential(config, potential, **kwargs)
    return run_poisson(config, **kwargs)
