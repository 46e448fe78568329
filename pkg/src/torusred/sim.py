"""Full-system and reduced-system integration and synchronisation metrics.

Fixed-step Euler and RK4 drive both the coupled oscillator ODE and the
reduced phase flow.  The synchronisation observable of the chain is the
unwrapped angle of ``z_1 conj(z_3)``; its decay is summarised by the
time needed to fall to a tenth of the initial value, measured on a
running-maximum envelope so the fast beating does not trigger early
crossings.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import maximum_filter1d

from .errors import ConfigError
from .models import phases_from_state

__all__ = [
    "IntegratorSpec",
    "TrajectoryRecord",
    "SweepResult",
    "integrate_full",
    "integrate_reduced",
    "measure_T01",
    "sweep_epsilon",
    "fit_powerlaw",
    "embedding_distance",
    "envelope",
    "trajectory_csv",
    "sweep_csv",
]

_SCHEMES = ("euler", "rk4")


@dataclass
class IntegratorSpec:
    """Fixed-step integrator configuration."""

    scheme: str = "rk4"
    dt: float = 0.01
    t_end: float = 100.0
    record_stride: int = 1

    def __post_init__(self):
        if self.scheme not in _SCHEMES:
            raise ConfigError(f"unknown scheme '{self.scheme}'; pick one of {_SCHEMES}")
        if not (self.dt > 0 and self.t_end > 0):
            raise ConfigError("dt and t_end must be positive")
        if self.record_stride < 1:
            raise ConfigError("record_stride must be >= 1")

    def steps(self):
        return int(round(self.t_end / self.dt))

    def with_horizon(self, t_end):
        return IntegratorSpec(self.scheme, self.dt, t_end, self.record_stride)


@dataclass
class TrajectoryRecord:
    """Time series produced by one integration run.

    ``phi_hat`` is the unwrapped synchronisation angle (consecutive
    jumps below pi by construction).  ``states`` may be omitted for
    long sweep runs.  ``failed`` marks a blow-up; the record then holds
    the finite prefix.
    """

    t: np.ndarray
    states: np.ndarray | None
    phi_hat: np.ndarray | None
    kind: str = "full"
    failed: bool = False
    meta: dict = field(default_factory=dict)


def _angle_step(prev_unwrapped, prev_raw, raw):
    d = (raw - prev_raw + math.pi) % (2.0 * math.pi) - math.pi
    return prev_unwrapped + d


def _pair_angle(x, pair):
    i, j = pair
    a, b = x[2 * i], x[2 * i + 1]
    c, d = x[2 * j], x[2 * j + 1]
    # angle of (a + ib)(c - id)
    return math.atan2(b * c - a * d, a * c + b * d)


def _beat_period(omega):
    diffs = [abs(a - b) for idx, a in enumerate(omega) for b in omega[idx + 1:]]
    diffs = [d for d in diffs if d > 1e-9]
    return 2.0 * math.pi / min(diffs) if diffs else 2.0 * math.pi


def integrate_full(model, eps, x0, spec, pair=(0, 2), record_state=True):
    """Integrate the coupled system at coupling strength ``eps``.

    For models made of complex pairs the unwrapped angle between the
    ``pair`` oscillators is recorded alongside the trajectory.  A
    non-finite state stops the run early and flags the record.
    """
    x = np.asarray(x0, dtype=float).copy()
    if x.size != model.M or not np.all(np.isfinite(x)):
        raise ConfigError(f"initial state must be finite with {model.M} components")
    if spec.dt * float(np.max(np.abs(model.omega))) >= math.pi:
        raise ConfigError("dt too large: per-step phase increments would exceed pi")
    n = spec.steps()
    stride = spec.record_stride
    track_angle = bool(model.complex_pairs) and 2 * max(pair) + 1 < model.M
    rhs = model.stepper_rhs(eps)

    dt = spec.dt
    euler = spec.scheme == "euler"
    ts, states, angles = [0.0], [x.copy()] if record_state else None, []
    if track_angle:
        raw = _pair_angle(x, pair)
        unwrapped = raw
        angles.append(unwrapped)
    failed = False
    for i in range(1, n + 1):
        if euler:
            x = x + dt * rhs(x)
        else:
            k1 = rhs(x)
            k2 = rhs(x + 0.5 * dt * k1)
            k3 = rhs(x + 0.5 * dt * k2)
            k4 = rhs(x + dt * k3)
            x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(x)):
            failed = True
            break
        if track_angle:
            new_raw = _pair_angle(x, pair)
            unwrapped = _angle_step(unwrapped, raw, new_raw)
            raw = new_raw
        if i % stride == 0 or i == n:
            ts.append(i * dt)
            if record_state:
                states.append(x.copy())
            if track_angle:
                angles.append(unwrapped)
    return TrajectoryRecord(
        t=np.asarray(ts),
        states=np.asarray(states) if record_state else None,
        phi_hat=np.asarray(angles) if track_angle else None,
        kind="full",
        failed=failed,
        meta={"eps": eps, "scheme": spec.scheme, "dt": dt, "pair": pair,
              "omega": np.asarray(model.omega, dtype=float),
              "beat_period": _beat_period(np.asarray(model.omega, dtype=float)),
              "complex_pairs": bool(model.complex_pairs)},
    )


def integrate_reduced(result, eps, phi0, spec, pair=(0, 2)):
    """Integrate the reduced phase flow ``dphi/dt = omega + sum eps^j f_j``.

    Angles are stored unwrapped (the phase fields are 2 pi periodic, so
    real-line phases are fine).  The recorded observable is the phase
    difference of the ``pair`` components.
    """
    omega = result.omega
    phi = np.asarray(phi0, dtype=float).copy()
    if phi.size != omega.size:
        raise ConfigError("phase dimension mismatch")
    if spec.dt * float(np.max(np.abs(omega))) >= math.pi:
        raise ConfigError("dt too large: per-step phase increments would exceed pi")
    # Collapse the expansion into one sparse series at this coupling.
    combined = {}
    for j, f in enumerate(result.phase_terms, start=1):
        w = eps ** j
        for k, c in f.coeffs.items():
            combined[k] = combined.get(k, 0.0) + w * c
    if combined:
        keys = sorted(combined)
        kmat = np.array(keys, dtype=float)
        cmat = np.array([combined[k] for k in keys])

        def rhs(p):
            return omega + (np.exp(1j * (kmat @ p)) @ cmat).real
    else:
        def rhs(p):
            return omega

    n = spec.steps()
    stride = spec.record_stride
    dt = spec.dt
    euler = spec.scheme == "euler"
    i_idx, j_idx = pair
    ts = [0.0]
    phis = [phi.copy()]
    failed = False
    for i in range(1, n + 1):
        if euler:
            phi = phi + dt * rhs(phi)
        else:
            k1 = rhs(phi)
            k2 = rhs(phi + 0.5 * dt * k1)
            k3 = rhs(phi + 0.5 * dt * k2)
            k4 = rhs(phi + dt * k3)
            phi = phi + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(phi)):
            failed = True
            break
        if i % stride == 0 or i == n:
            ts.append(i * dt)
            phis.append(phi.copy())
    phis = np.asarray(phis)
    return TrajectoryRecord(
        t=np.asarray(ts),
        states=phis,
        phi_hat=phis[:, i_idx] - phis[:, j_idx],
        kind="reduced",
        failed=failed,
        meta={"eps": eps, "scheme": spec.scheme, "dt": dt, "pair": pair,
              "omega": np.asarray(omega, dtype=float),
              "beat_period": _beat_period(np.asarray(omega, dtype=float))},
    )


def envelope(record, window=None):
    """Forward-looking running maximum of ``|phi_hat|`` over one beat window."""
    if record.phi_hat is None:
        raise ValueError("record carries no synchronisation angle")
    if window is None:
        window = record.meta.get("beat_period", 2.0 * math.pi)
    absphi = np.abs(record.phi_hat)
    if len(record.t) < 2:
        return absphi
    dt_rec = record.t[1] - record.t[0]
    wn = max(1, int(math.ceil(window / dt_rec)))
    wn = min(wn, len(absphi))
    return maximum_filter1d(absphi, size=wn, origin=-(wn // 2), mode="nearest")


def measure_T01(record, window=None, use_envelope=True):
    """First time the synchronisation angle falls to 10 percent.

    The crossing is detected on the running-maximum envelope of
    ``|phi_hat|`` over one slow-beat window (the raw signal oscillates
    quickly and would cross too early); pass ``use_envelope=False`` for
    the raw-signal variant.  Returns NaN when the threshold is never
    reached.
    """
    if record.phi_hat is None:
        raise ValueError("record carries no synchronisation angle")
    baseline = abs(float(record.phi_hat[0]))
    if baseline < 1e-6:
        raise ValueError("initial angle too small: the decay baseline is undefined")
    signal = envelope(record, window) if use_envelope else np.abs(record.phi_hat)
    hits = np.nonzero(signal <= 0.1 * baseline)[0]
    if hits.size == 0:
        return float("nan")
    return float(record.t[hits[0]])


def embedding_distance(record, result, eps, t_min=None, n_grid=16, refine_steps=6):
    """Distance of a trajectory tail from the expanded invariant torus.

    Seeds with the nearest node of an angle grid, then Gauss-Newton
    steps refine the closest point on the embedded torus.  Reported as
    a diagnostic: after transients the distance should sit in a band of
    size proportional to the first neglected expansion order; the band
    constant is unknown, so nothing asserts against it.
    """
    if record.states is None:
        raise ValueError("record carries no states")
    if t_min is None:
        t_min = 0.5 * float(record.t[-1])
    e = result.bundle.e0
    for l, term in enumerate(result.embedding_terms, start=1):
        e = e + term.scale(eps ** l)
    ejac = e.jacobian()
    m = result.bundle.m
    axes = [np.linspace(0.0, 2.0 * np.pi, n_grid, endpoint=False) for _ in range(m)]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, m)
    torus_points = e.eval(mesh)
    tail = record.states[record.t >= t_min]
    worst = 0.0
    for x in tail:
        idx = int(np.argmin(np.sum((torus_points - x) ** 2, axis=-1)))
        phi = mesh[idx].copy()
        for _ in range(refine_steps):
            r = x - e.eval(phi)
            E = ejac.eval(phi)
            phi = phi + np.linalg.solve(E.T @ E, E.T @ r)
        worst = max(worst, float(np.linalg.norm(x - e.eval(phi))))
    return worst


def fit_powerlaw(eps, t01):
    """Least-squares slope and intercept of ``ln T01`` against ``ln eps``."""
    eps = np.asarray(eps, dtype=float)
    t01 = np.asarray(t01, dtype=float)
    slope, intercept = np.polyfit(np.log(eps), np.log(t01), 1)
    return float(slope), float(intercept)


@dataclass
class SweepResult:
    """Decay times across a sweep of coupling strengths."""

    eps: np.ndarray
    t01: np.ndarray
    t01_raw: np.ndarray
    converged: np.ndarray
    slope: float | None
    intercept: float | None

    def to_json_dict(self):
        return {
            "eps": self.eps.tolist(),
            "t01": [None if not np.isfinite(v) else v for v in self.t01],
            "t01_raw": [None if not np.isfinite(v) else v for v in self.t01_raw],
            "converged": [bool(c) for c in self.converged],
            "slope": self.slope,
            "intercept": self.intercept,
        }


def _sweep_workers(n_runs):
    raw = os.environ.get("TORUSRED_THREADS", "")
    try:
        cap = int(raw) if raw else 4
    except ValueError:
        cap = 4
    return max(1, min(cap, n_runs))


def sweep_epsilon(model, x0, eps_list, spec, reduction=None, scale_horizon=True,
                  window=None):
    """Measure the decay time across coupling strengths.

    Every run starts from the same initial state.  With
    ``scale_horizon`` the horizon grows like ``eps^-2`` away from the
    largest coupling, matching the slow timescale.  Runs execute
    concurrently (capped by the TORUSRED_THREADS environment variable)
    and results are collected in list order.  Passing a
    :class:`ReductionResult` sweeps the reduced flow instead of the
    full system.
    """
    eps_arr = np.asarray(list(eps_list), dtype=float)
    if eps_arr.size < 1 or np.any(eps_arr <= 0):
        raise ConfigError("couplings must be positive")
    d = np.diff(eps_arr)
    if eps_arr.size > 1 and not (np.all(d > 0) or np.all(d < 0)):
        raise ConfigError("couplings must be strictly increasing or decreasing")
    eps_ref = float(np.max(eps_arr))
    phi0 = phases_from_state(x0) if reduction is not None else None

    def run(eps):
        t_end = spec.t_end * (eps_ref / eps) ** 2 if scale_horizon else spec.t_end
        run_spec = spec.with_horizon(t_end)
        if reduction is not None:
            rec = integrate_reduced(reduction, eps, phi0, run_spec)
        else:
            rec = integrate_full(model, eps, x0, run_spec, record_state=False)
        if rec.failed:
            return float("nan"), float("nan")
        return (measure_T01(rec, window=window),
                measure_T01(rec, window=window, use_envelope=False))

    with ThreadPoolExecutor(max_workers=_sweep_workers(eps_arr.size)) as pool:
        futures = [pool.submit(run, float(e)) for e in eps_arr]
        pairs = [f.result() for f in futures]
    t01 = np.array([p[0] for p in pairs])
    t01_raw = np.array([p[1] for p in pairs])
    converged = np.isfinite(t01)
    if int(np.sum(converged)) >= 3:
        slope, intercept = fit_powerlaw(eps_arr[converged], t01[converged])
    else:
        slope = intercept = None
    return SweepResult(eps_arr, t01, t01_raw, converged, slope, intercept)


# ----------------------------------------------------------------------
# CSV artifacts


def _fmt(x):
    return format(float(x), ".17g")


def trajectory_csv(record, path):
    """Write ``t,re_z1,im_z1,...,phi_hat`` rows (or phases for reduced runs)."""
    with open(path, "w", newline="") as fh:
        cols = ["t"]
        n_state = 0
        if record.states is not None:
            n_state = record.states.shape[1]
            if record.kind == "full" and record.meta.get("complex_pairs"):
                for j in range(n_state // 2):
                    cols += [f"re_z{j + 1}", f"im_z{j + 1}"]
            elif record.kind == "reduced":
                cols += [f"phi{j + 1}" for j in range(n_state)]
            else:
                cols += [f"x{j + 1}" for j in range(n_state)]
        if record.phi_hat is not None:
            cols.append("phi_hat")
        fh.write(",".join(cols) + "\n")
        for i in range(len(record.t)):
            row = [_fmt(record.t[i])]
            if record.states is not None:
                row += [_fmt(v) for v in record.states[i]]
            if record.phi_hat is not None:
                row.append(_fmt(record.phi_hat[i]))
            fh.write(",".join(row) + "\n")


def sweep_csv(sweep, path):
    """Write ``epsilon,T01,converged`` rows."""
    with open(path, "w", newline="") as fh:
        fh.write("epsilon,T01,converged\n")
        for e, t, c in zip(sweep.eps, sweep.t01, sweep.converged):
            t_str = _fmt(t) if np.isfinite(t) else "nan"
            fh.write(f"{_fmt(e)},{t_str},{'true' if c else 'false'}\n")
