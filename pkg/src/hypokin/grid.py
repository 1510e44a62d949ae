"""Discrete phase space: periodic position grid times truncated velocity grid.

Every downstream object (collision operators, Lyapunov functionals, time
steppers) does its calculus through the primitives defined here, so the
conventions are worth stating once:

* the position variable lives on a uniform periodic grid of ``n_x`` nodes
  covering ``[0, length_x)``; derivatives in ``x`` are spectral (FFT),
* the velocity variable lives on ``[-v_max, v_max]`` with either a uniform
  trapezoid rule or a Gauss-Legendre rule; derivatives in ``v`` use a
  banded finite-difference matrix (uniform) or the exact polynomial
  differentiation matrix (gauss),
* all quadrature happens with the stored weights; projections built from
  the same weights are then idempotent to round-off rather than merely to
  discretization order.

Fields are plain real arrays of shape ``(n_x, n_v)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "PhaseGrid",
    "DistributionField",
    "build_grid",
    "grad_x",
    "grad_v",
    "inner_l2",
    "norm_l2",
    "norm_h1",
    "ensure_finite",
    "fourier_deriv_matrix",
    "random_smooth_field",
]

MIN_NX = 4
MIN_NV = 8


def _fd4_matrix(v: np.ndarray) -> np.ndarray:
    """Fourth-order first-derivative matrix on a uniform node set.

    Centered five-point stencils in the interior, one-sided five-point
    stencils of the same order at the truncation boundary (fields are
    treated as compactly supported beyond the last node, not periodic).
    """
    n = v.size
    h = v[1] - v[0]
    D = np.zeros((n, n))
    interior = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
    for i in range(2, n - 2):
        D[i, i - 2 : i + 3] = interior
    edge0 = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0
    edge1 = np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / 12.0
    D[0, :5] = edge0
    D[1, :5] = edge1
    # mirror stencils at the top edge (sign flips with orientation)
    D[-1, -5:] = -edge0[::-1]
    D[-2, -5:] = -edge1[::-1]
    return D / h


def _barycentric_matrix(nodes: np.ndarray) -> np.ndarray:
    """Differentiation matrix for an arbitrary node set via barycentric weights.

    Exact (to round-off) on polynomials of degree < ``len(nodes)``; used for
    the Gauss-Legendre velocity mode.
    """
    n = nodes.size
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    # log-scaled products to avoid overflow for larger node counts
    logw = -np.sum(np.log(np.abs(diff)), axis=1)
    sign = np.prod(np.sign(diff), axis=1)
    wbar = sign * np.exp(logw - logw.max())
    D = np.empty((n, n))
    for i in range(n):
        row = wbar / (wbar[i] * diff[i, :])
        row[i] = 0.0
        D[i, :] = row
        D[i, i] = -row.sum()
    return D


@dataclass(frozen=True, eq=False)
class PhaseGrid:
    """Immutable discrete phase space T^1_x times [-v_max, v_max]_v.

    Attributes
    ----------
    n_x, length_x : int, float
        Node count and circumference of the position torus.
    n_v, v_max : int, float
        Node count and truncation radius of the velocity interval.
    quadrature : str
        ``"uniform"`` (trapezoid) or ``"gauss"`` (Legendre).
    x_nodes, v_nodes, v_weights : ndarray
        Abscissas and velocity quadrature weights.
    wavenumbers : ndarray
        Signed spectral wavenumbers matching ``numpy.fft.rfft`` layout,
        scaled by ``2*pi/length_x``.
    deriv_v : ndarray
        Velocity differentiation matrix acting on the trailing axis.
    """

    n_x: int
    length_x: float
    n_v: int
    v_max: float
    quadrature: str
    x_nodes: np.ndarray = field(repr=False)
    v_nodes: np.ndarray = field(repr=False)
    v_weights: np.ndarray = field(repr=False)
    wavenumbers: np.ndarray = field(repr=False)
    deriv_v: np.ndarray = field(repr=False)

    @property
    def dx(self) -> float:
        return self.length_x / self.n_x

    def quad_v(self, profile: np.ndarray) -> float | np.ndarray:
        """Velocity-space quadrature along the trailing axis."""
        return profile @ self.v_weights

    def quad_xv(self, values: np.ndarray) -> float:
        """Full phase-space quadrature of a sampled function."""
        return float(self.dx * np.sum(values @ self.v_weights))


@dataclass(frozen=True, eq=False)
class DistributionField:
    """A real sampled function on a :class:`PhaseGrid`.

    Construction validates shape and finiteness; solver steps revalidate
    through :func:`ensure_finite`, so a NaN or Inf never propagates silently.
    """

    grid: PhaseGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        if self.values.shape != (self.grid.n_x, self.grid.n_v):
            raise ValueError(
                f"field shape {self.values.shape} does not match grid "
                f"({self.grid.n_x}, {self.grid.n_v})"
            )
        ensure_finite(self.values)


def ensure_finite(values: np.ndarray, context: str = "field") -> None:
    if not np.all(np.isfinite(values)):
        raise FloatingPointError(f"non-finite entries in {context}")


def build_grid(
    n_x: int,
    length_x: float,
    n_v: int,
    v_max: float,
    quadrature_mode: str = "uniform",
) -> PhaseGrid:
    """Construct a validated :class:`PhaseGrid`.

    Parameters
    ----------
    n_x : int
        Position nodes, at least 4.
    length_x : float
        Torus circumference, positive.  The default configuration uses
        ``2*pi`` so the lowest nonzero spectral mode has wavenumber 1.
    n_v : int
        Velocity nodes, at least 8.
    v_max : float
        Velocity truncation radius, positive.
    quadrature_mode : str
        ``"uniform"`` or ``"gauss"``.

    Raises
    ------
    ValueError
        On any parameter outside the documented bounds.
    """
    if n_x < MIN_NX:
        raise ValueError(f"n_x = {n_x} below minimum {MIN_NX}")
    if n_v < MIN_NV:
        raise ValueError(f"n_v = {n_v} below minimum {MIN_NV}")
    if length_x <= 0:
        raise ValueError("length_x must be positive")
    if v_max <= 0:
        raise ValueError("v_max must be positive")
    if quadrature_mode not in ("uniform", "gauss"):
        raise ValueError(f"unknown quadrature mode {quadrature_mode!r}")

    x = np.arange(n_x) * (length_x / n_x)
    if quadrature_mode == "uniform":
        v = np.linspace(-v_max, v_max, n_v)
        w = np.full(n_v, v[1] - v[0])
        w[0] *= 0.5
        w[-1] *= 0.5
        Dv = _fd4_matrix(v)
    else:
        nodes, weights = np.polynomial.legendre.leggauss(n_v)
        v = nodes * v_max
        w = weights * v_max
        Dv = _barycentric_matrix(v)

    k = 2.0 * np.pi / length_x * np.arange(n_x // 2 + 1)
    return PhaseGrid(
        n_x=int(n_x),
        length_x=float(length_x),
        n_v=int(n_v),
        v_max=float(v_max),
        quadrature=quadrature_mode,
        x_nodes=x,
        v_nodes=v,
        v_weights=w,
        wavenumbers=k,
        deriv_v=Dv,
    )


def fourier_deriv_matrix(grid: PhaseGrid) -> np.ndarray:
    """Dense spectral differentiation matrix on the periodic x grid.

    Used for operator assembly (eigensolves); the solver itself
    differentiates through the FFT.  For even node counts this matrix
    annihilates the unpaired alternating mode, matching :func:`grad_x`.
    """
    n = grid.n_x
    h = grid.length_x / n
    scale = 2.0 * np.pi / grid.length_x
    col = np.zeros(n)
    for j in range(1, n):
        if n % 2 == 0:
            col[j] = 0.5 * (-1.0) ** j / np.tan(j * h * np.pi / grid.length_x) * scale
        else:
            col[j] = 0.5 * (-1.0) ** j / np.sin(j * h * np.pi / grid.length_x) * scale
    idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    return -col[idx]


def random_smooth_field(
    grid: PhaseGrid, rng: np.random.Generator, x_band: int | None = None, v_degree: int | None = None
) -> DistributionField:
    """Band-limited random field: trig polynomial in x, Hermite-type
    Gaussian-decay profile in v.

    Used for property tests and randomized certification; keeps clear of
    the unpaired x mode and of velocity scales the difference stencil
    cannot represent.
    """
    if x_band is None:
        x_band = max(1, grid.n_x // 3)
    if v_degree is None:
        v_degree = min(16, grid.n_v // 4)
    v = grid.v_nodes
    psi = np.empty((v_degree + 1, grid.n_v))
    psi[0] = np.exp(-0.25 * v * v) / (2.0 * np.pi) ** 0.25
    if v_degree >= 1:
        psi[1] = v * psi[0]
    for m in range(1, v_degree):
        psi[m + 1] = (v * psi[m] - np.sqrt(m) * psi[m - 1]) / np.sqrt(m + 1.0)
    values = np.zeros((grid.n_x, grid.n_v))
    x = grid.x_nodes * (2.0 * np.pi / grid.length_x)
    for k in range(x_band + 1):
        cx = np.cos(k * x) if k else np.ones_like(x)
        sx = np.sin(k * x)
        cv = rng.standard_normal(v_degree + 1) / (1.0 + np.arange(v_degree + 1.0)) ** 2
        sv = rng.standard_normal(v_degree + 1) / (1.0 + np.arange(v_degree + 1.0)) ** 2
        values += np.outer(cx, cv @ psi) / (1.0 + k)
        if k:
            values += np.outer(sx, sv @ psi) / (1.0 + k)
    return DistributionField(grid, values)


def _same_grid(a: DistributionField, b: DistributionField) -> PhaseGrid:
    if a.grid is not b.grid:
        # allow structurally equal grids built twice from the same parameters
        ga, gb = a.grid, b.grid
        if (
            ga.n_x != gb.n_x
            or ga.n_v != gb.n_v
            or ga.length_x != gb.length_x
            or ga.v_max != gb.v_max
            or ga.quadrature != gb.quadrature
        ):
            raise ValueError("fields live on different grids")
    return a.grid


def grad_x(h: DistributionField) -> DistributionField:
    """Spectral derivative in the position variable, per velocity node."""
    g = h.grid
    spec = np.fft.rfft(h.values, axis=0)
    spec *= 1j * g.wavenumbers[:, None]
    if g.n_x % 2 == 0:
        # the unpaired Nyquist mode has no consistent real derivative
        spec[-1, :] = 0.0
    out = np.fft.irfft(spec, n=g.n_x, axis=0)
    return DistributionField(g, out)


def grad_v(h: DistributionField) -> DistributionField:
    """Velocity derivative via the grid's differentiation matrix."""
    return DistributionField(h.grid, h.values @ h.grid.deriv_v.T)


def inner_l2(h: DistributionField, g: DistributionField) -> float:
    """Discrete L^2 pairing: dx-sum in x, weighted sum in v."""
    gr = _same_grid(h, g)
    return float(gr.dx * np.sum((h.values * g.values) @ gr.v_weights))


def norm_l2(h: DistributionField) -> float:
    g = h.grid
    return float(np.sqrt(g.dx * np.sum((h.values * h.values) @ g.v_weights)))


def norm_h1(h: DistributionField) -> float:
    """Plain (untwisted) H^1 norm: sqrt(L2^2 + |grad_x|^2 + |grad_v|^2)."""
    a = norm_l2(h)
    b = norm_l2(grad_x(h))
    c = norm_l2(grad_v(h))
    return float(np.sqrt(a * a + b * b + c * c))
