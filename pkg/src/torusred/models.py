"""Concrete oscillator systems.

The Stuart-Landau oscillator comes with fully analytic cycle and
bundle data and serves as the building block of the three-oscillator
chain whose outer members synchronise through the middle one.  A
generic :class:`OscillatorModel` interface admits user-defined coupled
systems; complex oscillator states are represented as real pairs
throughout, so all bundle matrices stay real.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bundle import LimitCycle, TorusBundle, product_bundle, validate_bundle
from .errors import ConfigError
from .fourier import FourierMap, SmoothMap, TorusGrid

__all__ = [
    "StuartLandauParams",
    "ChainConfig",
    "OscillatorModel",
    "stuart_landau_field",
    "stuart_landau_cycle",
    "sl_bundle",
    "chain_model",
    "chain_bundle",
    "chain_phase_constants",
    "phases_from_state",
]


@dataclass
class StuartLandauParams:
    """Parameters of ``dz/dt = (alpha + i beta) z + (gamma + i delta) |z|^2 z``."""

    alpha: float
    beta: float
    gamma: float
    delta: float

    def __post_init__(self):
        if not self.alpha * self.gamma < 0:
            raise ConfigError(
                "need alpha*gamma < 0 for a nonzero circular orbit "
                f"(got alpha={self.alpha}, gamma={self.gamma})"
            )
        if self.beta * self.gamma - self.alpha * self.delta == 0:
            raise ConfigError("degenerate parameters: the orbit frequency vanishes")

    @property
    def radius(self):
        return math.sqrt(-self.alpha / self.gamma)

    @property
    def frequency(self):
        return self.beta - self.alpha * self.delta / self.gamma

    @property
    def floquet_exponent(self):
        return -2.0 * self.alpha

    @property
    def period(self):
        return 2.0 * math.pi / abs(self.frequency)


def _to_complex(x, n_osc):
    x = np.asarray(x, dtype=float)
    shape = x.shape[:-1] + (n_osc, 2)
    xr = x.reshape(shape)
    return xr[..., 0] + 1j * xr[..., 1]


def _to_real(z):
    out = np.stack([z.real, z.imag], axis=-1)
    return out.reshape(z.shape[:-1] + (2 * z.shape[-1],))


def _cubic_oscillator_maps(lin, cub):
    """SmoothMap for block-diagonal fields ``z_j -> lin_j z_j + cub_j |z_j|^2 z_j``."""
    lin = np.asarray(lin, dtype=complex)
    cub = np.asarray(cub, dtype=complex)
    n = lin.size

    def fun(x):
        z = _to_complex(x, n)
        return _to_real(lin * z + cub * np.abs(z) ** 2 * z)

    def d1(x, v):
        z, u = _to_complex(x, n), _to_complex(v, n)
        return _to_real(lin * u + cub * (2.0 * np.abs(z) ** 2 * u + z * z * np.conj(u)))

    def d2(x, u_, v_):
        z = _to_complex(x, n)
        u, v = _to_complex(u_, n), _to_complex(v_, n)
        return _to_real(2.0 * cub * (np.conj(z) * u * v + z * (u * np.conj(v) + np.conj(u) * v)))

    def d3(x, u_, v_, w_):
        u, v, w = (_to_complex(a, n) for a in (u_, v_, w_))
        return _to_real(2.0 * cub * (u * v * np.conj(w) + u * np.conj(v) * w + np.conj(u) * v * w))

    def d4(x, *vs):
        return np.zeros_like(np.asarray(x, dtype=float))

    def jac(x):
        z = _to_complex(x, n)
        p = lin + 2.0 * cub * np.abs(z) ** 2
        q = cub * z * z
        out = np.zeros(z.shape[:-1] + (2 * n, 2 * n))
        for j in range(n):
            pj, qj = p[..., j], q[..., j]
            out[..., 2 * j, 2 * j] = (pj + qj).real
            out[..., 2 * j, 2 * j + 1] = -(pj - qj).imag
            out[..., 2 * j + 1, 2 * j] = (pj + qj).imag
            out[..., 2 * j + 1, 2 * j + 1] = (pj - qj).real
        return out

    return SmoothMap(fun, derivs=(d1, d2, d3, d4), jac=jac)


def stuart_landau_field(p: StuartLandauParams) -> SmoothMap:
    """The oscillator vector field on R^2, with derivatives to order 4."""
    return _cubic_oscillator_maps([p.alpha + 1j * p.beta], [p.gamma + 1j * p.delta])


def stuart_landau_cycle(p: StuartLandauParams, n_steps=2048) -> LimitCycle:
    """The circular orbit ``R exp(i omega t)``, sampled analytically."""
    R, w = p.radius, p.frequency

    def orbit(t):
        return np.array([R * math.cos(w * t), R * math.sin(w * t)])

    return LimitCycle.from_function(orbit, 2.0 * math.pi / w,
                                    n_steps=n_steps, field=stuart_landau_field(p))


def sl_bundle(p: StuartLandauParams, K=4.0, n_grid=None) -> TorusBundle:
    """Analytic torus bundle of the Stuart-Landau cycle.

    The embedding is ``R exp(i phi)``, the fast fibre direction is
    ``exp(i phi) (gamma + i delta)`` with Floquet matrix ``-2 alpha``,
    and the projection rotates its value at zero around the circle.
    """
    R = p.radius
    g, d = p.gamma, p.delta
    e0 = FourierMap.harmonic(1, (1,), np.array([R / 2.0, -1j * R / 2.0]), K=K)
    N = FourierMap.harmonic(
        1, (1,), np.array([[(g + 1j * d) / 2.0], [-1j * (g + 1j * d) / 2.0]]), K=K
    )
    L = np.array([[p.floquet_exponent]])

    if n_grid is None:
        n_grid = 3 * int(math.ceil(K)) + 1
    grid = TorusGrid(1, (n_grid,))
    phis = grid.axes()[0]
    pi0 = np.array([[0.0, 0.0], [-d / g, 1.0]])
    cs, sn = np.cos(phis), np.sin(phis)
    rot = np.moveaxis(np.array([[cs, -sn], [sn, cs]]), -1, 0)
    pi_vals = rot @ pi0 @ np.swapaxes(rot, -1, -2)
    pi = grid.project(pi_vals, K)

    bundle = TorusBundle(e0, np.array([p.frequency]), N, L, pi)
    bundle.diagnostics = validate_bundle(bundle, F0=stuart_landau_field(p),
                                         grid=grid, pde_tol=1e-10)
    return bundle


# ----------------------------------------------------------------------
# generic coupled-oscillator interface


@dataclass
class OscillatorModel:
    """A weakly coupled oscillator network ``dx/dt = F0(x) + sum_i eps^i F_i(x)``.

    ``dims[j]`` is the state dimension of oscillator ``j``; the
    uncoupled field ``F0`` is block-diagonal over the oscillators.
    Evaluators must be pure and accept batched states.
    """

    dims: list
    F0: SmoothMap
    perturbations: list
    omega: np.ndarray
    complex_pairs: bool = False
    label: str = "model"
    meta: dict = field(default_factory=dict)
    fast_rhs: object = None

    def __post_init__(self):
        self.omega = np.asarray(self.omega, dtype=float).reshape(-1)
        if len(self.dims) != self.omega.size:
            raise ConfigError("one frequency per oscillator required")

    @property
    def m(self):
        return len(self.dims)

    @property
    def M(self):
        return int(sum(self.dims))

    @property
    def F_list(self):
        return [self.F0] + list(self.perturbations)

    def rhs(self, x, eps):
        """Full vector field at coupling strength ``eps``."""
        out = self.F0.fun(x)
        w = 1.0
        for Fi in self.perturbations:
            w *= eps
            if Fi is not None:
                out = out + w * Fi.fun(x)
        return out

    def stepper_rhs(self, eps):
        """Single-state evaluator for integrator loops.

        Uses the model's specialised fast path when available (same
        math, scalar arithmetic); falls back to the generic batched
        evaluators otherwise.
        """
        if self.fast_rhs is not None:
            return self.fast_rhs(eps)
        return lambda x: self.rhs(x, eps)


def phases_from_state(x):
    """Oscillator phases ``arg(z_j)`` of a state of complex pairs."""
    x = np.asarray(x, dtype=float)
    z = _to_complex(x, x.shape[-1] // 2)
    return np.angle(z)


# ----------------------------------------------------------------------
# the three-oscillator chain


@dataclass
class ChainConfig:
    """Parameters of the chain 1 <- 2 -> 1-like network of three oscillators.

    Oscillators 1 and 3 share (alpha, beta, gamma, delta); the middle
    oscillator has (a, b, c, d).  The coupling feeds oscillator 2 into
    both ends and oscillator 1 into the middle, each with strength
    ``epsilon``.
    """

    alpha: float
    beta: float
    gamma: float
    delta: float
    a: float
    b: float
    c: float
    d: float
    epsilon: float = 0.1

    def __post_init__(self):
        self.outer = StuartLandauParams(self.alpha, self.beta, self.gamma, self.delta)
        self.middle = StuartLandauParams(self.a, self.b, self.c, self.d)
        if abs(self.outer.frequency - self.middle.frequency) < 1e-12:
            raise ConfigError(
                "resonance guard: the outer and middle frequencies coincide "
                f"(omega1 = omega2 = {self.outer.frequency}); the first "
                "tangential equation would be unsolvable"
            )

    @property
    def frequencies(self):
        w1 = self.outer.frequency
        return np.array([w1, self.middle.frequency, w1])


def chain_model(cfg: ChainConfig) -> OscillatorModel:
    """The three-oscillator chain as an :class:`OscillatorModel` (M = 6)."""
    p, q = cfg.outer, cfg.middle
    lin = [p.alpha + 1j * p.beta, q.alpha + 1j * q.beta, p.alpha + 1j * p.beta]
    cub = [p.gamma + 1j * p.delta, q.gamma + 1j * q.delta, p.gamma + 1j * p.delta]
    F0 = _cubic_oscillator_maps(lin, cub)

    C = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])

    def f1(x):
        return _to_real(_to_complex(x, 3) @ C.T)

    def f1_d1(x, v):
        return f1(v)

    def f1_zero(x, *vs):
        return np.zeros_like(np.asarray(x, dtype=float))

    jac1 = np.zeros((6, 6))
    for r in range(3):
        for cidx in range(3):
            if C[r, cidx]:
                jac1[2 * r, 2 * cidx] = 1.0
                jac1[2 * r + 1, 2 * cidx + 1] = 1.0

    F1 = SmoothMap(f1, derivs=(f1_d1, f1_zero, f1_zero, f1_zero),
                   jac=lambda x: np.broadcast_to(jac1, np.shape(x)[:-1] + (6, 6)))

    l1, l2 = complex(lin[0]), complex(lin[1])
    c1, c2 = complex(cub[0]), complex(cub[1])

    def fast_rhs(eps):
        # Scalar complex arithmetic; hot path for long integrations.
        def rhs(x):
            z1 = complex(x[0], x[1])
            z2 = complex(x[2], x[3])
            z3 = complex(x[4], x[5])
            w1 = l1 * z1 + c1 * (z1.real * z1.real + z1.imag * z1.imag) * z1 + eps * z2
            w2 = l2 * z2 + c2 * (z2.real * z2.real + z2.imag * z2.imag) * z2 + eps * z1
            w3 = l1 * z3 + c1 * (z3.real * z3.real + z3.imag * z3.imag) * z3 + eps * z2
            return np.array([w1.real, w1.imag, w2.real, w2.imag, w3.real, w3.imag])

        return rhs

    return OscillatorModel(
        dims=[2, 2, 2],
        F0=F0,
        perturbations=[F1],
        omega=cfg.frequencies,
        complex_pairs=True,
        label="stuart-landau-chain",
        meta={"config": cfg},
        fast_rhs=fast_rhs,
    )


def chain_bundle(cfg: ChainConfig, K=8.0) -> TorusBundle:
    """Analytic product bundle of the chain's three circular orbits."""
    b1 = sl_bundle(cfg.outer, K=K)
    b2 = sl_bundle(cfg.middle, K=K)
    b3 = sl_bundle(cfg.outer, K=K)
    bundle = product_bundle([b1, b2, b3])
    bundle.diagnostics = validate_bundle(bundle, F0=chain_model(cfg).F0, pde_tol=1e-10)
    return bundle


def chain_phase_constants(cfg: ChainConfig):
    """Closed-form constants (A, B) of the slow phase-difference law.

    The difference ``Phi`` of the outer phases obeys, at second order
    in the coupling, ``dPhi/dt = eps^2 (-A sin Phi + B (1 - cos Phi))``.
    Evaluated independently of the reduction engine so the two can
    cross-validate each other.
    """
    w1 = cfg.outer.frequency
    w2 = cfg.middle.frequency
    dg = cfg.delta / cfg.gamma
    dc = cfg.d / cfg.c
    a = cfg.a
    denom = 4.0 * a * a + (w1 - w2) ** 2
    dw = w2 - w1
    A = (dg * dw + a * (1.0 + dc * dg) + 2.0 * a * a * (dc + dg) / dw) / denom
    B = (dw + a * (dc - dg) + 2.0 * a * a * (1.0 - dc * dg) / dw) / denom
    return A, B
