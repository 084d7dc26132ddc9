"""Ground-truth simulator for the stochastic advection-diffusion equation.

Each step is a Strang split: half a step of exact Fourier diffusion, a full
noisy advection substep, and another half diffusion step.  The advection
substep transports the field with a Lax-Wendroff stencil driven by the
realized (noisy) displacement, then integrates the forcing SDE with an
explicit weak-order-2 stochastic Runge-Kutta step.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import Grid, TimeAxis
from .noise import NoiseSpec, RngStream, Role, wiener_increments

# exponent of the Gaussian initial bump
INIT_WIDTH = 250.0
# slack on Courant-number comparisons
_COURANT_EPS = 1e-12


class CFLError(ValueError):
    """Raised when a stencil is asked to run above its stable Courant number."""

    def __init__(self, courant, limit=1.0):
        self.courant = float(courant)
        self.limit = float(limit)
        super().__init__(f"Courant number {self.courant:.6g} exceeds limit {self.limit:g}")


def cosine_speed(x, t):
    """Default phase speed ``cos(5 pi t)``, uniform in space."""
    return np.full(np.shape(x), math.cos(5.0 * math.pi * t))


def constant_speed(value):
    return _ConstantField(value)


def zero_forcing(x, t):
    return np.zeros(np.shape(x))


class _ConstantField:
    # module-level class so configs stay picklable for process pools
    def __init__(self, value):
        self.value = float(value)

    def __call__(self, x, t):
        return np.full(np.shape(x), self.value)

    def __repr__(self):
        return f"constant({self.value:g})"

    def __eq__(self, other):
        return isinstance(other, _ConstantField) and other.value == self.value

    def __hash__(self):
        return hash(self.value)


@dataclass
class FieldState:
    values: np.ndarray
    time_index: int = 0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1:
            raise ValueError("field values must be a vector")
        if not np.all(np.isfinite(self.values)):
            raise ValueError(f"non-finite field values at n={self.time_index}")


@dataclass
class PhysicsConfig:
    alpha: float = 0.01
    c_fn: object = cosine_speed
    f_fn: object = zero_forcing
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    sigma: float = 1.0
    theta: float = 0.5

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")


def initial_field(grid, sigma=1.0, theta=0.5):
    """Gaussian bump ``sigma * exp(-250 d^2)`` with ``d`` the periodic distance to ``theta``."""
    d = grid.nodes - theta
    d = d - grid.L * np.rint(d / grid.L)
    return sigma * np.exp(-INIT_WIDTH * d**2)


def diffusion_multiplier(grid, alpha, dt):
    k = 2.0 * np.pi * np.fft.rfftfreq(grid.K, d=grid.dx)
    return np.exp(-alpha * k**2 * dt)


def diffusion_step_exact(values, alpha, dt, grid):
    """Advance ``u_t = alpha u_xx`` exactly in Fourier space over ``dt``."""
    if alpha < 0 or dt < 0:
        raise ValueError("alpha and dt must be nonnegative")
    values = np.asarray(values, dtype=float)
    if alpha == 0 or dt == 0:
        return values.copy()
    spec = np.fft.rfft(values)
    return np.fft.irfft(spec * diffusion_multiplier(grid, alpha, dt), n=grid.K)


def lax_wendroff_step(u, courant):
    """One Lax-Wendroff step for ``u_t = a u_x`` with nodal Courant number ``a dt / dx``.

    Information travels toward ``-a``; at ``courant = +1`` the step is an
    exact shift by one cell toward lower indices.
    """
    nu = np.asarray(courant, dtype=float)
    peak = float(np.max(np.abs(nu))) if nu.size else 0.0
    if peak > 1.0 + _COURANT_EPS:
        raise CFLError(peak)
    up = np.roll(u, -1)
    um = np.roll(u, 1)
    return u + 0.5 * nu * (up - um) + 0.5 * nu**2 * (up - 2.0 * u + um)


def srk_weak2_step(drift, diffusion, y, t, dt, dW):
    """Explicit derivative-free weak order 2.0 stochastic Runge-Kutta step.

    Platen's scheme for ``dY = a(Y, t) dt + b(Y, t) dW`` with diagonal noise:
    component ``k`` of ``b`` may depend only on ``y[k]``.  Reduces to Heun's
    method when ``b == 0``.
    """
    y = np.asarray(y, dtype=float)
    if dt == 0:
        return y.copy()
    a = drift(y, t)
    b = diffusion(y, t)
    sq = math.sqrt(dt)
    support = y + a * dt
    corrector = support + b * dW
    up = support + b * sq
    um = support - b * sq
    bp = diffusion(up, t)
    bm = diffusion(um, t)
    return (
        y
        + 0.5 * (drift(corrector, t + dt) + a) * dt
        + 0.25 * (bp + bm + 2.0 * b) * dW
        + 0.25 * (bp - bm) * (dW**2 - dt) / sq
    )


def advection_substep(values, t, dt, grid, cfg, dW_c=None, dW_tilde=0.0, dW_u=None,
                      max_courant=1.0, subcycle=True):
    """Advance ``u_t - (c + noise) u_x = f + B dW^u / dt`` over one step.

    The displacement of each node over the step is the trapezoid integral of
    ``c`` plus ``A dW_c + A_tilde dW_tilde``.  When the realized Courant number
    exceeds ``max_courant`` the transport is subcycled into equal pieces, or
    :class:`CFLError` is raised if ``subcycle`` is false.
    """
    noise = cfg.noise
    x = grid.nodes
    disp = 0.5 * dt * (cfg.c_fn(x, t) + cfg.c_fn(x, t + dt))
    if dW_c is not None:
        disp = disp + noise.A * np.asarray(dW_c)
    disp = disp + noise.A_tilde * dW_tilde
    nu = disp / grid.dx
    peak = float(np.max(np.abs(nu)))
    n_sub = max(1, math.ceil(peak / max_courant - _COURANT_EPS))
    if n_sub > 1 and not subcycle:
        raise CFLError(peak, max_courant)
    u = np.asarray(values, dtype=float)
    for _ in range(n_sub):
        u = lax_wendroff_step(u, nu / n_sub)

    dW_u = np.zeros(grid.K) if dW_u is None else np.asarray(dW_u)
    B = noise.B

    def drift(y, s):
        return cfg.f_fn(x, s)

    def diffusion(y, s):
        return np.full_like(y, B)

    return srk_weak2_step(drift, diffusion, u, t, dt, dW_u)


class TruthStreams:
    """The three truth noise streams of one replicate."""

    def __init__(self, seed, replicate=0):
        self.advection = RngStream.for_role(seed, replicate, Role.TRUTH_ADVECTION)
        self.forcing = RngStream.for_role(seed, replicate, Role.TRUTH_FORCING)
        self.correlated = RngStream.for_role(seed, replicate, Role.TRUTH_CORRELATED)


def simulate_truth(grid, time_axis, cfg, streams=None, initial=None):
    """Simulate the truth on ``time_axis``; returns an ``(N + 1, K)`` array.

    ``streams`` may be a :class:`TruthStreams` or ``None`` for a noiseless run.
    """
    dt = time_axis.dt
    u = initial_field(grid, cfg.sigma, cfg.theta) if initial is None else np.array(initial, float)
    out = np.empty((time_axis.N + 1, grid.K))
    out[0] = u
    half = diffusion_multiplier(grid, cfg.alpha, 0.5 * dt)
    for n in range(time_axis.N):
        t = n * dt
        if streams is None:
            dW_c, dW_t, dW_u = None, 0.0, None
        else:
            dW_c = wiener_increments(streams.advection, grid.K, dt)
            dW_t = wiener_increments(streams.correlated, 1, dt, spatially_correlated=True)[0]
            dW_u = wiener_increments(streams.forcing, grid.K, dt)
        u = np.fft.irfft(np.fft.rfft(u) * half, n=grid.K)
        u = advection_substep(u, t, dt, grid, cfg, dW_c, dW_t, dW_u)
        u = np.fft.irfft(np.fft.rfft(u) * half, n=grid.K)
        if not np.all(np.isfinite(u)):
            raise FloatingPointError(f"truth became non-finite at step {n + 1}")
        out[n + 1] = u
    return out
