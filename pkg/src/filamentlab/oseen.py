"""Closed-form columnar-vortex profiles and the self-similar coordinate maps.

Everything here is explicit: the Gaussian vorticity profile G, the swirl
profile g with G = curl g, the time-dependent angular velocity V and the
stretching profile W = (d_r V) x^perp / |x|, the steady self-similar pair
(Omega, U) = (alpha G e3, alpha g), and the change of variables
tau = log t, xi = x / sqrt(t) with its field scalings.

Near the origin the profiles are evaluated by 4-term Taylor expansions to
avoid the cancellation in (1 - exp(-r^2/4)) / r^2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grids import Grid2D, SpectralField, ZFrequencySet, PHYSICAL, SELF_SIMILAR

#: below this radius the closed forms switch to Taylor branches
XI_TINY = 1e-4


@dataclass(frozen=True)
class OseenParams:
    alpha: float = 1.0
    t: float | None = None
    tau: float | None = None

    def __post_init__(self):
        if self.t is not None and self.t <= 0:
            raise ValueError("physical-frame evaluation requires t > 0")


def gaussian(xi) -> np.ndarray:
    """G(xi) = (1/4 pi) exp(-|xi|^2 / 4); unit mass.  xi stacks the two
    coordinates along its first axis."""
    xi = np.asarray(xi, dtype=float)
    r2 = xi[0] ** 2 + xi[1] ** 2
    return np.exp(-r2 / 4.0) / (4.0 * np.pi)


def gaussian_on_grid(grid: Grid2D) -> np.ndarray:
    r = grid.radius()
    return np.exp(-(r * r) / 4.0) / (4.0 * np.pi)


def _swirl_scalar(r2):
    """(1 - exp(-r^2/4)) / (2 pi r^2), Taylor branch below XI_TINY.

    This is the scalar s(r) with g(xi) = s(|xi|) xi^perp.
    """
    r2 = np.asarray(r2, dtype=float)
    out = np.empty_like(r2)
    small = r2 < XI_TINY ** 2
    big = ~small
    rb = r2[big]
    out[big] = (1.0 - np.exp(-rb / 4.0)) / (2.0 * np.pi * rb)
    rs = r2[small]
    # (1 - e^{-s})/s with s = r^2/4, expanded: 1 - s/2 + s^2/6 - s^3/24
    s = rs / 4.0
    out[small] = (1.0 - s / 2.0 + s * s / 6.0 - s ** 3 / 24.0) / (8.0 * np.pi)
    return out


def oseen_velocity_profile(xi) -> np.ndarray:
    """g(xi) = (1/2 pi) (xi^perp / |xi|^2)(1 - exp(-|xi|^2/4))."""
    xi = np.asarray(xi, dtype=float)
    r2 = xi[0] ** 2 + xi[1] ** 2
    s = _swirl_scalar(np.atleast_1d(r2)).reshape(np.shape(r2))
    return np.stack([-xi[1] * s, xi[0] * s])


def swirl_on_grid(grid: Grid2D) -> np.ndarray:
    """g sampled on the grid, shape (2, N, N)."""
    x1, x2 = grid.meshgrid()
    s = _swirl_scalar(x1 * x1 + x2 * x2)
    return np.stack([-x2 * s, x1 * s])


def swirl_gradient_on_grid(grid: Grid2D) -> np.ndarray:
    """grad g as the matrix field (d_j g_i)_{ij} = V J + (V'/r) xi^perp (x) xi."""
    x1, x2 = grid.meshgrid()
    r2 = x1 * x1 + x2 * x2
    r = np.sqrt(r2)
    v = _swirl_scalar(r2)
    dv_over_r = _swirl_scalar_derivative_over_r(r)
    xp = np.stack([-x2, x1])
    out = np.empty((2, 2) + x1.shape)
    jmat = np.array([[0.0, -1.0], [1.0, 0.0]])
    for i in range(2):
        for j in range(2):
            out[i, j] = v * jmat[i, j] + dv_over_r * xp[i] * (x1 if j == 0 else x2)
    return out


def _swirl_scalar_derivative_over_r(r):
    """s'(r)/r for the swirl scalar s; Taylor branch near the origin."""
    r = np.asarray(r, dtype=float)
    out = np.empty_like(r)
    small = r < XI_TINY
    big = ~small
    rb = r[big]
    e = np.exp(-rb * rb / 4.0)
    out[big] = (-2.0 * (1.0 - e) / rb ** 2 + 0.5 * e) / (2.0 * np.pi * rb ** 2)
    rs = r[small]
    # s(r) = (1 - s/2 + s^2/6 - ...) / 8pi with s = r^2/4
    # s'(r)/r = (1/8pi) d/ds(...) * (1/2) = (-1/2 + s/3 - s^2/8)/(16 pi)
    sv = rs * rs / 4.0
    out[small] = (-0.5 + sv / 3.0 - sv * sv / 8.0) / (16.0 * np.pi)
    return out


def angular_velocity(r, t, alpha):
    """V(r) = alpha/(2 pi r^2) (1 - exp(-r^2/4t)); the swirl of u^g."""
    if t <= 0:
        raise ValueError("t must be positive")
    r = np.asarray(r, dtype=float)
    return alpha / t * _swirl_scalar(r * r / t)


def radial_velocity_derivative(r, t, alpha):
    """d_r V(r, t); equals -alpha/(pi r^3)(1 - (1 + r^2/4t) e^{-r^2/4t})."""
    if t <= 0:
        raise ValueError("t must be positive")
    r = np.asarray(r, dtype=float)
    out = np.empty_like(r)
    rt = r / np.sqrt(t)
    small = rt < XI_TINY
    big = ~small
    rb = r[big]
    s = rb * rb / (4.0 * t)
    out[big] = -alpha / (np.pi * rb ** 3) * (1.0 - (1.0 + s) * np.exp(-s))
    rs = r[small]
    s = rs * rs / (4.0 * t)
    # 1 - (1+s)e^{-s} = s^2/2 - s^3/3 + s^4/8 - ...
    poly = 0.5 - s / 3.0 + s * s / 8.0 - s ** 3 / 30.0
    out[small] = -alpha / np.pi * (rs / (16.0 * t * t)) * poly
    return out


def stretching_profile(x, t, alpha) -> np.ndarray:
    """W(t, x) = d_r V(|x|, t) x^perp / |x|; vanishes linearly at the origin."""
    if t <= 0:
        raise ValueError("t must be positive")
    x = np.asarray(x, dtype=float)
    r = np.sqrt(x[0] ** 2 + x[1] ** 2)
    dv = radial_velocity_derivative(np.atleast_1d(r), t, alpha).reshape(np.shape(r))
    rsafe = np.where(r > 0, r, 1.0)
    scale = np.where(r > 0, dv / rsafe, 0.0)
    return np.stack([-x[1] * scale, x[0] * scale])


def oseen_fields(params: OseenParams, grid: Grid2D, zfreqs: ZFrequencySet,
                 frame: str = SELF_SIMILAR):
    """The steady pair (vorticity, velocity) as SpectralFields.

    Self-similar frame: vorticity (0, 0, alpha G), velocity (alpha g, 0).
    Physical frame at time t: vorticity (0, 0, (alpha/t) G(x/sqrt t)),
    velocity ((alpha/sqrt t) g(x/sqrt t), 0).
    """
    a = params.alpha
    if frame == SELF_SIMILAR:
        time = 0.0 if params.tau is None else params.tau
        gz = gaussian_on_grid(grid)
        gx = swirl_on_grid(grid)
        scale_w, scale_u = a, a
    elif frame == PHYSICAL:
        if params.t is None:
            raise ValueError("physical frame needs t")
        time = params.t
        srt = np.sqrt(params.t)
        scaled = Grid2D(grid.half_extent / srt, grid.points_per_axis)
        gz = gaussian_on_grid(scaled)
        gx = swirl_on_grid(scaled)
        scale_w, scale_u = a / params.t, a / srt
    else:
        raise ValueError(f"unknown frame {frame}")
    vort = SpectralField.zeros(grid, zfreqs, frame, time)
    vel = SpectralField.zeros(grid, zfreqs, frame, time)
    i0 = zfreqs.index_of(0)
    vort.data[i0, 2] = scale_w * gz
    vel.data[i0, 0] = scale_u * gx[0]
    vel.data[i0, 1] = scale_u * gx[1]
    return vort, vel


class SelfSimilarMap:
    """Stateless transform pair between (t, x) and (tau, xi) = (log t, x/sqrt t)."""

    @staticmethod
    def to_self_similar(t, x):
        t = np.asarray(t, dtype=float)
        if np.any(t <= 0):
            raise ValueError("t must be positive")
        return np.log(t), np.asarray(x) / np.sqrt(t)

    @staticmethod
    def to_physical(tau, xi):
        t = np.exp(np.asarray(tau, dtype=float))
        return t, np.asarray(xi) * np.sqrt(t)

    @staticmethod
    def scale_vorticity_to_self_similar(omega_values, t):
        """Omega = t * omega evaluated at (tau, xi)."""
        return np.asarray(omega_values) * t

    @staticmethod
    def scale_velocity_to_self_similar(u_values, t):
        """U = sqrt(t) * u evaluated at (tau, xi)."""
        return np.asarray(u_values) * np.sqrt(t)

    @staticmethod
    def a(tau):
        """a(tau) = 1 - exp(-tau), the smoothing clock of the linearized flow."""
        return 1.0 - np.exp(-np.asarray(tau, dtype=float))
