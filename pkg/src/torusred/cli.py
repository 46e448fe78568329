"""Batch front-end.

Reads a JSON run configuration, executes one of the pipeline commands
(bundle construction, phase reduction, simulation, coupling sweeps, or
the verification battery) and writes CSV/JSON artifacts.  Exit codes
separate configuration problems (2), numerical failures (3) and failed
verification criteria (4) from success (0).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .bundle import TorusGrid, cycle_bundle, floquet_decompose
from .errors import ConfigError, NumericalError
from .models import (
    ChainConfig,
    chain_bundle,
    chain_model,
    chain_phase_constants,
    sl_bundle,
    stuart_landau_cycle,
)
from .reduction import chain_slow_law, conjugacy_residual, phase_reduce
from .sim import (
    IntegratorSpec,
    integrate_full,
    measure_T01,
    sweep_csv,
    sweep_epsilon,
    trajectory_csv,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_ACCEPTANCE = 4

COMMANDS = ("bundle", "reduce", "simulate", "sweep", "verify")

PRESETS = {
    "set1": {
        "command": "verify",
        "model": {
            "chain": {
                "alpha": 1.0, "beta": 1.0, "gamma": -1.0, "delta": 1.0,
                "a": 1.0, "b": 2.0, "c": -1.0, "d": -1.0, "epsilon": 0.1,
            }
        },
        "numerics": {
            "K": 8, "K_nf": 6, "J": 2,
            "integrator": {"scheme": "euler", "dt": 0.05, "t_end": 4000.0},
            "x0": [[-1.0, 0.0], [1.0, 0.4], [-1.0, 0.3]],
            "sweep": {
                "eps_min": 0.02, "eps_max": 0.1, "n": 20, "t_end_ref": 2500.0,
                "x0": [[-1.0, 0.3], [1.0, 0.4], [-1.0, 0.5]],
            },
        },
        "output_dir": "out-set1",
    },
    "set2": {
        "command": "verify",
        "model": {
            "chain": {
                "alpha": 1.0, "beta": 0.1, "gamma": -1.0, "delta": 1.0,
                "a": 1.0, "b": 6.0, "c": -1.0, "d": -1.0, "epsilon": 0.1,
            }
        },
        "numerics": {
            "K": 8, "K_nf": 6, "J": 2,
            "integrator": {"scheme": "euler", "dt": 0.05, "t_end": 4000.0},
            "x0": [[1.0, 0.3], [1.0, 0.4], [-0.2, 0.9]],
            "sweep": {
                "eps_min": 0.02, "eps_max": 0.1, "n": 20, "t_end_ref": 2500.0,
                "x0": [[-1.0, 0.3], [1.0, 0.4], [-1.0, 0.5]],
            },
        },
        "output_dir": "out-set2",
    },
}


class RunConfig:
    """Validated run configuration."""

    def __init__(self, doc):
        if not isinstance(doc, dict):
            raise ConfigError("configuration must be a JSON object")
        self.command = doc.get("command")
        if self.command not in COMMANDS:
            raise ConfigError(f"command must be one of {COMMANDS}, got {self.command!r}")
        model = doc.get("model", {})
        if "chain" not in model:
            raise ConfigError("only the 'chain' model section is supported")
        chain_params = dict(model["chain"])
        try:
            self.chain = ChainConfig(**chain_params)
        except TypeError as exc:
            raise ConfigError(f"bad chain parameters: {exc}") from None

        num = doc.get("numerics", {})
        self.K = float(num.get("K", 8))
        self.K_nf = float(num.get("K_nf", 6))
        self.tol_res = num.get("tol_res")
        self.J = int(num.get("J", 2))
        if not (1 <= self.J <= 4):
            raise ConfigError("expansion order J must lie in 1..4")
        integ = num.get("integrator", {})
        self.integrator = IntegratorSpec(
            scheme=integ.get("scheme", "rk4"),
            dt=float(integ.get("dt", 0.01)),
            t_end=float(integ.get("t_end", 100.0)),
            record_stride=int(integ.get("record_stride", 1)),
        )
        self.x0 = self._parse_state(num.get("x0", [[-1.0, 0.0], [1.0, 0.4], [-1.0, 0.3]]))
        sweep = num.get("sweep", {})
        self.sweep_eps_min = float(sweep.get("eps_min", 0.02))
        self.sweep_eps_max = float(sweep.get("eps_max", 0.1))
        self.sweep_n = int(sweep.get("n", 20))
        self.sweep_t_end_ref = float(sweep.get("t_end_ref", 2500.0))
        self.sweep_dt = float(sweep.get("dt", 0.05))
        self.sweep_x0 = self._parse_state(sweep.get("x0", [[-1.0, 0.3], [1.0, 0.4], [-1.0, 0.5]]))
        if not (0 < self.sweep_eps_min < self.sweep_eps_max):
            raise ConfigError("sweep needs 0 < eps_min < eps_max")
        if self.sweep_n < 1:
            raise ConfigError("sweep needs at least one coupling value")
        self.output_dir = doc.get("output_dir", "out")
        for name, value in (("K", self.K), ("K_nf", self.K_nf)):
            if not np.isfinite(value) or value <= 0:
                raise ConfigError(f"{name} must be finite and positive")

    @staticmethod
    def _parse_state(raw):
        arr = np.asarray(raw, dtype=float).reshape(-1)
        if arr.size != 6 or not np.all(np.isfinite(arr)):
            raise ConfigError("x0 must hold three finite complex pairs")
        return arr

    def sweep_eps(self):
        return np.geomspace(self.sweep_eps_min, self.sweep_eps_max, self.sweep_n)


def _dump_json(doc, path):
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _reduce_report(cfg, result, model):
    A_pipe, B_pipe, B_const = chain_slow_law(result)
    A_form, B_form = chain_phase_constants(cfg.chain)
    f2_constants = None
    if result.order >= 2:
        c0 = result.phase_terms[1].coeffs.get((0, 0, 0))
        if c0 is not None:
            f2_constants = [float(v) for v in np.real(c0)]
    residual_scaling = {}
    for eps in (1e-2, 1e-3):
        residual_scaling[f"{eps:g}"] = conjugacy_residual(model, result, eps)
    slope = (
        math.log(residual_scaling["0.01"] / residual_scaling["0.001"]) / math.log(10.0)
    )
    return {
        "A_pipeline": A_pipe,
        "B_pipeline": B_pipe,
        "B_pipeline_const": B_const,
        "A_formula": A_form,
        "B_formula": B_form,
        "abs_dA": abs(A_pipe - A_form),
        "abs_dB": abs(B_pipe - B_form),
        "residuals": result.residuals,
        "conjugacy_residual": residual_scaling,
        "residual_order_slope": slope,
        "second_order_constants": f2_constants,
    }


def _cmd_bundle(cfg, out):
    # The chain's bundle data has intrinsic radius 2; never truncate below it.
    bundle = chain_bundle(cfg.chain, K=max(cfg.K, 4.0))
    _dump_json(bundle.to_json_dict(), out / "bundle.json")
    _dump_json(bundle.diagnostics, out / "report.json")
    return EXIT_OK


def _cmd_reduce(cfg, out):
    model = chain_model(cfg.chain)
    bundle = chain_bundle(cfg.chain, K=max(cfg.K, 4.0))
    result = phase_reduce(model, bundle, order=cfg.J, K=cfg.K, K_nf=cfg.K_nf,
                          tol_res=cfg.tol_res)
    _dump_json(result.to_json_dict(), out / "reduction.json")
    _dump_json(_reduce_report(cfg, result, model), out / "report.json")
    return EXIT_OK


def _cmd_simulate(cfg, out):
    model = chain_model(cfg.chain)
    rec = integrate_full(model, cfg.chain.epsilon, cfg.x0, cfg.integrator)
    trajectory_csv(rec, out / "trajectory.csv")
    report = {
        "failed": rec.failed,
        "t_end": float(rec.t[-1]),
        "phi_hat_final": float(rec.phi_hat[-1]),
    }
    try:
        report["T01"] = measure_T01(rec)
        report["T01_raw"] = measure_T01(rec, use_envelope=False)
    except ValueError as exc:
        report["T01"] = None
        report["T01_note"] = str(exc)
    report = {k: (None if isinstance(v, float) and not np.isfinite(v) else v)
              for k, v in report.items()}
    _dump_json(report, out / "report.json")
    return EXIT_OK


def _cmd_sweep(cfg, out):
    model = chain_model(cfg.chain)
    spec = IntegratorSpec("euler", cfg.sweep_dt, cfg.sweep_t_end_ref)
    sw = sweep_epsilon(model, cfg.sweep_x0, cfg.sweep_eps(), spec)
    sweep_csv(sw, out / "sweep.csv")
    _dump_json(sw.to_json_dict(), out / "report.json")
    return EXIT_OK


def _verify_battery(cfg):
    """Yield (name, passed, detail) verification entries."""
    chain = cfg.chain
    model = chain_model(chain)
    bundle = chain_bundle(chain, K=max(cfg.K, 4.0))
    result = phase_reduce(model, bundle, order=max(cfg.J, 2), K=cfg.K, K_nf=cfg.K_nf,
                          tol_res=cfg.tol_res)

    A_pipe, B_pipe, B_const = chain_slow_law(result)
    A_form, B_form = chain_phase_constants(chain)
    dA, dB = abs(A_pipe - A_form), abs(B_pipe - B_form)
    yield ("slow-law constants", dA <= 1e-8 and dB <= 1e-8,
           f"A={A_pipe:.12f} vs {A_form:.12f} (|dA|={dA:.2e}), "
           f"B={B_pipe:.12f} vs {B_form:.12f} (|dB|={dB:.2e})")

    r2 = conjugacy_residual(model, result, 1e-2)
    r3 = conjugacy_residual(model, result, 1e-3)
    slope = math.log(r2 / r3) / math.log(10.0)
    expected = result.order + 1
    yield ("residual order scaling", abs(slope - expected) <= 0.1,
           f"slope={slope:.3f}, expected {expected} +/- 0.1")

    worst = 0.0
    for f in result.phase_terms:
        for k, c in f.coeffs.items():
            if abs(float(np.dot(bundle.omega, k))) > 1e-9 and np.linalg.norm(k) <= cfg.K_nf:
                worst = max(worst, float(np.max(np.abs(c))))
    yield ("normal form", worst <= 1e-10,
           f"largest nonresonant phase coefficient {worst:.2e}")

    cycle = stuart_landau_cycle(chain.outer)
    mono = floquet_decompose(cycle)
    expos = np.sort(np.linalg.eigvals(mono.floquet_matrix).real)
    target = np.sort([0.0, chain.outer.floquet_exponent])
    dexp = float(np.max(np.abs(expos - target)))
    ncyc = cycle_bundle(cycle, mono, K=max(cfg.K, 4.0))
    analytic = sl_bundle(chain.outer, K=max(cfg.K, 4.0))
    grid = TorusGrid(1, (256,))
    Nn = grid.sample(ncyc.N)[..., 0]
    Na = grid.sample(analytic.N)[..., 0]
    dots = np.abs(np.sum(Nn * Na, axis=-1))
    norms = np.linalg.norm(Nn, axis=-1) * np.linalg.norm(Na, axis=-1)
    angle = float(np.max(np.arccos(np.clip(dots / norms, -1.0, 1.0))))
    yield ("floquet cross-check", dexp <= 1e-6 and angle <= 1e-6,
           f"exponent error {dexp:.2e}, fibre subspace angle {angle:.2e}")

    if A_form > 0:
        spec = IntegratorSpec("euler", 0.05, 4000.0)
        rec = integrate_full(model, chain.epsilon, cfg.x0, spec)
        window = (rec.t >= 2500.0) & (rec.t <= 4000.0)
        tail = float(np.max(np.abs(rec.phi_hat[window])))
        yield ("synchronisation figure", tail <= 0.05,
               f"max |phi_hat| on [2500, 4000] = {tail:.2e} (<= 0.05)")
    else:
        spec = IntegratorSpec("rk4", 0.01, 4000.0, record_stride=5)
        rec = integrate_full(model, chain.epsilon, cfg.x0, spec)
        window = (rec.t >= 3000.0) & (rec.t <= 4000.0)
        seg = rec.phi_hat[window]
        c = float(np.mean(seg))
        band = float(np.max(np.abs(seg - c)))
        target_phi = 2.0 * math.atan2(A_form, B_form)
        # compare modulo 2 pi: the unwrapped angle may settle on any branch
        gap = abs((c - target_phi + math.pi) % (2.0 * math.pi) - math.pi)
        ok = band <= 0.1 and gap <= 0.1
        yield ("phase-locking figure", ok,
               f"lock at {c:.4f} vs predicted {target_phi:.4f} "
               f"(gap {gap:.3f} mod 2 pi), band +/-{band:.3f}")

    if A_form > 0:
        # The decay-to-10% time only exists when the outer pair
        # synchronises; locking parameter sets have no such crossing.
        spec = IntegratorSpec("euler", cfg.sweep_dt, cfg.sweep_t_end_ref)
        sw = sweep_epsilon(model, cfg.sweep_x0, cfg.sweep_eps(), spec)
        if sw.slope is None:
            yield ("decay-time sweep", False, "fewer than 3 converged runs; no fit")
        else:
            yield ("decay-time sweep", abs(sw.slope + 2.0) <= 0.15,
                   f"slope {sw.slope:.3f}, expected -2 +/- 0.15 "
                   f"({int(np.sum(sw.converged))}/{sw.eps.size} converged)")


def _cmd_verify(cfg, out):
    entries = []
    status = EXIT_OK
    for name, ok, detail in _verify_battery(cfg):
        entries.append({"criterion": name, "passed": bool(ok), "detail": detail})
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
        if not ok:
            status = EXIT_ACCEPTANCE
    _dump_json({"criteria": entries, "passed": status == EXIT_OK}, out / "report.json")
    return status


def run(config_path=None, out_override=None, preset=None):
    """Execute one command from a config file or bundled preset."""
    try:
        if preset is not None:
            if preset not in PRESETS:
                raise ConfigError(f"unknown preset {preset!r}; available: {sorted(PRESETS)}")
            doc = json.loads(json.dumps(PRESETS[preset]))
            if config_path is not None:
                raise ConfigError("pass either --config or --preset, not both")
        elif config_path is not None:
            try:
                with open(config_path) as fh:
                    doc = json.load(fh)
            except OSError as exc:
                raise ConfigError(f"cannot read config: {exc}") from None
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config is not valid JSON: {exc}") from None
        else:
            raise ConfigError("one of --config or --preset is required")
        cfg = RunConfig(doc)
        out = Path(out_override) if out_override else Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        handler = {
            "bundle": _cmd_bundle,
            "reduce": _cmd_reduce,
            "simulate": _cmd_simulate,
            "sweep": _cmd_sweep,
            "verify": _cmd_verify,
        }[cfg.command]
        return handler(cfg, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="torusred",
        description="High-order phase reduction of weakly coupled oscillator networks.",
    )
    parser.add_argument("--config", help="path to a JSON run configuration")
    parser.add_argument("--out", help="output directory (overrides the config)")
    parser.add_argument("--preset", choices=sorted(PRESETS),
                        help="bundled parameter set (runs its verify battery)")
    args = parser.parse_args(argv)
    return run(config_path=args.config, out_override=args.out, preset=args.preset)


if __name__ == "__main__":
    sys.exit(main())
