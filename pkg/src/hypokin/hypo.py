"""Twisted Lyapunov functionals, coercivity norms, and decay diagnostics.

The central object is the weighted quadratic functional

    F(h) = A ||h||^2 + alpha ||grad_x h||^2 + beta ||grad_v h||^2
           + gamma <grad_x h, grad_v h>

whose weights come from the constants module.  With certified weights it
decreases along the linear flow, which is what turns a velocity-only
spectral gap into a full phase-space decay rate.  The order-2 variant
adds second derivatives with a schedule tied to the norm-equivalence
ratio.  `fit_rate` extracts exponential rates from sampled series and
`dissipation_check` evaluates the certified twisted-pairing inequality on
a concrete field.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import DistributionField, grad_v, grad_x, inner_l2, norm_l2
from .models import FokkerPlanckModel, Model, apply_collision, project_global

__all__ = [
    "LyapunovWeights",
    "DecayReport",
    "lambda_norm",
    "lyapunov",
    "lyapunov_k",
    "lyapunov_k_equivalence",
    "fit_rate",
    "dissipation_check",
]


@dataclass(frozen=True)
class LyapunovWeights:
    """Weights of the twisted functional plus the auxiliary splitting
    parameter used when deriving them.

    ``order`` is the derivative order of the functional the weights were
    selected for (1 or 2)."""

    a: float
    alpha: float
    beta: float
    gamma_mix: float
    eta: float
    order: int = 1

    def __post_init__(self) -> None:
        for name in ("a", "alpha", "beta", "gamma_mix", "eta"):
            val = getattr(self, name)
            if not math.isfinite(val) or val <= 0:
                raise ValueError(f"weight {name} = {val} must be positive and finite")
        if self.gamma_mix**2 >= self.alpha * self.beta:
            raise ValueError(
                f"gamma_mix^2 = {self.gamma_mix**2} must stay below "
                f"alpha*beta = {self.alpha * self.beta}"
            )
        if self.alpha < self.beta:
            raise ValueError("alpha must dominate beta")
        if self.order not in (1, 2):
            raise ValueError("order must be 1 or 2")

    def as_dict(self) -> dict[str, float]:
        return {
            "a": self.a,
            "alpha": self.alpha,
            "beta": self.beta,
            "gamma_mix": self.gamma_mix,
            "eta": self.eta,
            "order": self.order,
        }


def lambda_norm(model: Model, h: DistributionField) -> float:
    """The model's coercivity norm.

    Plain L2 for the relaxation-type models; for drift-diffusion the
    velocity-weighted norm sqrt(||v h||^2 + ||grad_v h||^2).
    """
    if isinstance(model, FokkerPlanckModel):
        vh = DistributionField(h.grid, h.values * h.grid.v_nodes[None, :])
        a = norm_l2(vh)
        b = norm_l2(grad_v(h))
        return float(np.sqrt(a * a + b * b))
    return norm_l2(h)


def lyapunov(h: DistributionField, w: LyapunovWeights) -> float:
    """First-order twisted functional of a field."""
    hx = grad_x(h)
    hv = grad_v(h)
    return (
        w.a * norm_l2(h) ** 2
        + w.alpha * norm_l2(hx) ** 2
        + w.beta * norm_l2(hv) ** 2
        + w.gamma_mix * inner_l2(hx, hv)
    )


def _order2_prefactor(w: LyapunovWeights, nu0_ratio: float) -> float:
    # weight schedule (ratio/2)^(-2(k-1)) at k = 2, with the recorded
    # normalization constant 2/K, K = 2
    return (nu0_ratio / 2.0) ** (-2.0)


def lyapunov_k(h: DistributionField, w: LyapunovWeights, k: int, nu0_ratio: float = 1.0) -> float:
    """Homogeneous twisted functional of derivative order ``k``.

    ``k = 1`` drops the zeroth-order term of :func:`lyapunov`; ``k = 2``
    combines the pure second velocity derivative with the weighted
    mixed/spatial block, scheduled by ``nu0_ratio`` (the certified
    norm-equivalence ratio nu0/nu1 of the model).
    """
    if k not in (1, 2):
        raise ValueError("functional order must be 1 or 2")
    hx = grad_x(h)
    hv = grad_v(h)
    if k == 1:
        return (
            w.alpha * norm_l2(hx) ** 2
            + w.beta * norm_l2(hv) ** 2
            + w.gamma_mix * inner_l2(hx, hv)
        )
    hxx = grad_x(hx)
    hxv = grad_v(hx)
    hvv = grad_v(hv)
    p = _order2_prefactor(w, nu0_ratio)
    return norm_l2(hvv) ** 2 + p * (
        w.alpha * norm_l2(hxx) ** 2
        + w.beta * norm_l2(hxv) ** 2
        + w.gamma_mix * inner_l2(hxv, hxx)
    )


def lyapunov_k_equivalence(
    w: LyapunovWeights, k: int, nu0_ratio: float = 1.0
) -> tuple[float, float]:
    """Constants (c, C) with c * |h|_k^2 <= F_k(h) <= C * |h|_k^2.

    The homogeneous seminorm |h|_k^2 sums the squared derivatives of
    total order k.  Both constants come from the eigenvalues of the 2x2
    block [[alpha, gamma/2], [gamma/2, beta]].
    """
    if k not in (1, 2):
        raise ValueError("functional order must be 1 or 2")
    half = 0.5 * w.gamma_mix
    block = np.array([[w.alpha, half], [half, w.beta]])
    lo, hi = np.linalg.eigvalsh(block)
    if k == 1:
        return float(lo), float(hi)
    p = _order2_prefactor(w, nu0_ratio)
    return float(min(1.0, p * lo)), float(max(1.0, p * hi))


def fit_rate(
    times: np.ndarray,
    values: np.ndarray,
    transient_fraction: float = 0.1,
    window_fraction: float = 0.5,
) -> tuple[float, float, tuple[float, float]]:
    """Exponential rate of a positive series by least squares on its log.

    Discards the leading ``transient_fraction`` of the samples, fits on
    the trailing ``window_fraction`` of what remains, and returns
    ``(tau, r2, (t_start, t_end))`` where the fitted model is
    ``exp(-tau * t)`` up to a constant.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    if t.ndim != 1 or t.shape != y.shape:
        raise ValueError("times and values must be matching 1-d arrays")
    if np.any(np.diff(t) <= 0):
        raise ValueError("times must be strictly increasing")
    n = t.size
    start = int(np.ceil(transient_fraction * n))
    rest = n - start
    start = n - max(int(np.floor(window_fraction * rest)), 2)
    tw, yw = t[start:], y[start:]
    if tw.size < 10:
        raise ValueError(f"fit window holds {tw.size} samples; need at least 10")
    if np.any(yw <= 0):
        raise ValueError("fit window contains non-positive values")
    logy = np.log(yw)
    A = np.vstack([tw, np.ones_like(tw)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, logy, rcond=None)
    resid = logy - (slope * tw + intercept)
    ss_res = float(resid @ resid)
    centered = logy - logy.mean()
    ss_tot = float(centered @ centered)
    if ss_tot < 1e-28:
        r2 = 1.0 if ss_res < 1e-24 else 0.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    return float(-slope), float(r2), (float(tw[0]), float(tw[-1]))


@dataclass(frozen=True)
class DecayReport:
    """Sampled norm trajectories of one run plus fit diagnostics.

    ``extras`` holds model-dependent columns (field energy for the
    self-consistent run, density bounds for the nonlinear one).
    ``tau_fit`` is NaN when the fit is inconclusive (r2 below 0.99).
    """

    times: np.ndarray
    l2: np.ndarray
    h1: np.ndarray
    lyapunov: np.ndarray
    lam: np.ndarray
    mass: np.ndarray
    extras: dict[str, np.ndarray] = field(default_factory=dict)
    tau_fit: float = float("nan")
    fit_r2: float = float("nan")
    fit_window: tuple[float, float] = (float("nan"), float("nan"))
    fit_series: str = "h1"
    fit_conclusive: bool = False
    monotone_violations: int = 0

    def __post_init__(self) -> None:
        n = self.times.size
        series = [self.l2, self.h1, self.lyapunov, self.lam, self.mass]
        series += list(self.extras.values())
        if any(s.size != n for s in series):
            raise ValueError("series lengths disagree")
        if n > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    def columns(self) -> dict[str, np.ndarray]:
        cols = {
            "t": self.times,
            "l2": self.l2,
            "h1": self.h1,
            "lyapunov": self.lyapunov,
            "lambda": self.lam,
            "mass": self.mass,
        }
        cols.update(self.extras)
        return cols

    def series(self, name: str) -> np.ndarray:
        try:
            return self.columns()[name]
        except KeyError:
            raise KeyError(f"no series named {name!r}") from None


def attach_fit(
    report: DecayReport,
    series: str = "h1",
    transient_fraction: float = 0.1,
    window_fraction: float = 0.5,
) -> DecayReport:
    """Return a copy of the report with fit fields filled in.

    A rate is only reported as conclusive when the fit explains the
    window with r2 >= 0.99; otherwise tau is NaN and flagged.
    """
    tau, r2, window = fit_rate(
        report.times, report.series(series), transient_fraction, window_fraction
    )
    ok = bool(r2 >= 0.99)
    return DecayReport(
        times=report.times,
        l2=report.l2,
        h1=report.h1,
        lyapunov=report.lyapunov,
        lam=report.lam,
        mass=report.mass,
        extras=report.extras,
        tau_fit=tau if ok else float("nan"),
        fit_r2=r2,
        fit_window=window,
        fit_series=series,
        fit_conclusive=ok,
        monotone_violations=report.monotone_violations,
    )


def count_violations(series: np.ndarray, rel_tol: float = 1e-9) -> int:
    """Steps at which a nominally decreasing series increased beyond
    relative tolerance."""
    s = np.asarray(series, dtype=float)
    scale = np.maximum(np.abs(s[:-1]), 1e-300)
    return int(np.sum((s[1:] - s[:-1]) / scale > rel_tol))


def dissipation_check(
    model: Model,
    h: DistributionField,
    w: LyapunovWeights,
    c_tprime: float | None = None,
    tol: float = 1e-9,
) -> dict:
    """Evaluate the certified twisted-pairing inequality on one field.

    lhs is the twisted pairing of the transport-collision operator with
    the field; rhs is minus the certified constant times the coercivity
    bracket (field plus both gradients).  The field must be mean-free
    (its conserved component is removed and reported if present).
    """
    from .constants import certify_twisted_dissipation

    pg = project_global(model, h)
    if norm_l2(pg) > 1e-12 * max(norm_l2(h), 1e-300):
        h = DistributionField(h.grid, h.values - pg.values)
    if c_tprime is None:
        c_tprime = certify_twisted_dissipation(model, h.grid, w)
    th_values = apply_collision(model, h).values - h.grid.v_nodes[None, :] * grad_x(h).values
    th = DistributionField(h.grid, th_values)
    hx, hv = grad_x(h), grad_v(h)
    thx, thv = grad_x(th), grad_v(th)
    lhs = (
        w.a * inner_l2(th, h)
        + w.alpha * inner_l2(thx, hx)
        + w.beta * inner_l2(thv, hv)
        + 0.5 * w.gamma_mix * (inner_l2(thx, hv) + inner_l2(thv, hx))
    )
    bracket = lambda_norm(model, h) ** 2 + lambda_norm(model, hx) ** 2 + lambda_norm(model, hv) ** 2
    rhs = -c_tprime * bracket
    return {"lhs": float(lhs), "rhs": float(rhs), "pass": bool(lhs <= rhs + tol)}
