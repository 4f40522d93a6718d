"""Command-line front end.

Subcommands: validate, synthesize, simulate, roa, reproduce-paper. Each
reads an optional system JSON (falling back to the bundled reference case),
runs the corresponding pipeline, prints a short human-readable summary and
writes machine-readable JSON reports plus trajectory CSV / gnuplot stubs
into the output directory.

Exit codes: 0 success, 1 standing-assumption or synthesis failure, 2 input
error, 3 certificate infeasible (reports still written), 4 trajectory
divergence, 5 reference-case mismatch.

Reports are byte-identical across runs for a fixed (config, seed);
wall-clock metadata goes to a separate run_meta.json.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import attack, model, observer, refcase, roa, sim
from .errors import (
    AssumptionError,
    DivergenceError,
    NumericError,
    SynthesisError,
    ValidationError,
)

__all__ = ["RunConfig", "main"]

log = logging.getLogger("obsforge")

EXIT_OK = 0
EXIT_ASSUMPTION = 1
EXIT_INPUT = 2
EXIT_INFEASIBLE = 3
EXIT_DIVERGED = 4
EXIT_MISMATCH = 5


@dataclass
class RunConfig:
    """Validated knobs for one pipeline run."""

    system: str | None = None
    pi_star: list | None = None
    gamma_fraction: float = 0.9
    Y_scale: float = 0.2
    desired_poles: list | None = None
    W1_scale: float = 1.0
    W2_scale: float = 1.0
    delta_fraction: float = 0.1
    dt: float = 1e-3
    T: float = 5.0
    seed: int = 0
    output_dir: str = "out"
    z0: list | None = None
    zhat0: list | None = None
    bundle: str | None = None
    decay_samples: int = 200
    box_samples: int = 500
    box_halfwidth: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.gamma_fraction < 1.0:
            raise ValidationError(
                "must lie in (0, 1), got %r" % self.gamma_fraction,
                field="gamma_fraction",
            )
        if not 0.0 < self.delta_fraction < 1.0:
            raise ValidationError(
                "must lie in (0, 1), got %r" % self.delta_fraction,
                field="delta_fraction",
            )
        for name in ("Y_scale", "W1_scale", "W2_scale"):
            if getattr(self, name) <= 0:
                raise ValidationError(
                    "must be positive, got %r" % getattr(self, name), field=name
                )
        if self.dt <= 0:
            raise ValidationError("must be positive, got %r" % self.dt, field="dt")
        if self.T <= self.dt:
            raise ValidationError("must exceed dt, got %r" % self.T, field="T")
        if self.seed < 0 or int(self.seed) != self.seed:
            raise ValidationError(
                "must be a nonnegative integer, got %r" % self.seed, field="seed"
            )
        self.seed = int(self.seed)


def _parse_vector(text, name):
    try:
        return [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError:
        raise ValidationError(
            "expected comma-separated reals, got %r" % text, field=name
        ) from None


def build_parser():
    parser = argparse.ArgumentParser(
        prog="obs-forge",
        description=(
            "Sensor-attack synthesis, observer design, and region-of-"
            "attraction certification for linear plants with quadratic outputs."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)
    specs = {
        "validate": "check the standing assumptions on a system definition",
        "synthesize": "design the attack row, observer gain, and certificate",
        "simulate": "integrate the attacked loop plus observer and fit decay",
        "roa": "compute the certificate and Monte Carlo checks",
        "reproduce-paper": (
            "re-run the bundled reference design and diff against the frozen "
            "expected values"
        ),
    }
    for name, help_text in specs.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="path to a system JSON definition")
        p.add_argument("--seed", type=int, default=0, help="master RNG seed")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--dt", type=float, default=1e-3, help="integration step")
        p.add_argument("--horizon", type=float, default=5.0, help="final time")
        p.add_argument(
            "--pi", help="target projection direction pi*, comma separated"
        )
        p.add_argument(
            "--gamma-fraction",
            type=float,
            default=0.9,
            help="fraction of the stability bound used for the attack scaling",
        )
        p.add_argument(
            "--poles", help="desired observer poles, comma separated"
        )
        p.add_argument(
            "--y-scale", type=float, default=0.2, help="Lyapunov weight Y = scale*I"
        )
        p.add_argument(
            "--w1-scale", type=float, default=1.0, help="certificate weight W1 = scale*I"
        )
        p.add_argument(
            "--w2-scale", type=float, default=1.0, help="certificate weight W2 = scale*I"
        )
        p.add_argument(
            "--delta-fraction",
            type=float,
            default=0.1,
            help="decay margin delta as a fraction of c2",
        )
        if name == "simulate":
            p.add_argument("--z0", help="initial plant/controller state, comma separated")
            p.add_argument("--zhat0", help="initial observer state, comma separated")
        if name in ("simulate", "roa"):
            p.add_argument(
                "--bundle",
                help="reuse a bundle.json from synthesize instead of redesigning",
            )
    return parser


def config_from_args(args):
    return RunConfig(
        system=args.config,
        pi_star=_parse_vector(args.pi, "pi") if args.pi else None,
        gamma_fraction=args.gamma_fraction,
        Y_scale=args.y_scale,
        desired_poles=_parse_vector(args.poles, "poles") if args.poles else None,
        W1_scale=args.w1_scale,
        W2_scale=args.w2_scale,
        delta_fraction=args.delta_fraction,
        dt=args.dt,
        T=args.horizon,
        seed=args.seed,
        output_dir=args.out,
        z0=_parse_vector(args.z0, "z0") if getattr(args, "z0", None) else None,
        zhat0=_parse_vector(args.zhat0, "zhat0") if getattr(args, "zhat0", None) else None,
        bundle=getattr(args, "bundle", None),
    )


def _load_system(config):
    if config.system is None:
        log.info("no --config given, using the bundled reference system")
        plant, controller, cl = refcase.reference_system()
        return plant, controller, cl
    plant, controller = model.load_system(config.system)
    return plant, controller, model.assemble(plant, controller)


def _jsonable(value):
    """Recursively convert to JSON-safe types; non-finite floats to strings."""
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, (np.floating, float)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, complex):
        return {"re": value.real, "im": value.imag}
    return value


def _write_json(path, payload):
    text = json.dumps(_jsonable(payload), indent=2, sort_keys=True)
    with open(path, "w") as fh:
        fh.write(text + "\n")
    log.info("wrote %s", path)


def _write_meta(config, argv):
    """Wall-clock and invocation metadata, kept out of the main reports."""
    import time

    os.makedirs(config.output_dir, exist_ok=True)
    meta = {
        "argv": list(argv),
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "seed": config.seed,
    }
    with open(os.path.join(config.output_dir, "run_meta.json"), "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _design_pipeline(config, cl):
    """Shared synthesis chain: attack row, observer gain, certificate."""
    n = cl.n
    Y = config.Y_scale * np.eye(n)
    design = attack.build_design(
        cl,
        pi_star=np.array(config.pi_star, dtype=float) if config.pi_star else None,
        gamma_fraction=config.gamma_fraction,
        Y=Y,
        seed=config.seed,
    )
    desired = (
        np.array(config.desired_poles, dtype=float)
        if config.desired_poles
        else None
    )
    obs = observer.design_gain(design, cl.B, desired_poles=desired)
    est = roa.certify(
        cl,
        design,
        obs,
        W1=config.W1_scale * np.eye(n),
        W2=config.W2_scale * np.eye(n),
        delta_fraction=config.delta_fraction,
    )
    return design, obs, est


def _verification_flags(cl, design, obs, est):
    from .numerics import is_hurwitz

    FLH = design.Fbar + obs.L @ design.Hbar
    return {
        "loop_hurwitz": bool(is_hurwitz(cl.A)),
        "attacked_loop_hurwitz": bool(is_hurwitz(design.Fbar)),
        "pair_observable": bool(
            attack.is_observable(design.Fbar, design.Hbar)
        ),
        "error_matrix_hurwitz": bool(is_hurwitz(FLH)),
        "placement_ok": bool(obs.placement_error <= observer.PLACEMENT_TOL),
        "certificate_feasible": bool(est.feasible),
    }


def _bundle_payload(config, plant, controller, cl, design, obs, est):
    return {
        "system": {
            "plant": {
                "A_p": plant.A_p.tolist(),
                "B_p": plant.B_p.tolist(),
                "Q_p": plant.Q_p.tolist(),
            },
            "controller": {
                "A_c": controller.A_c.tolist(),
                "B_c": controller.B_c.tolist(),
                "C_c": controller.C_c.tolist(),
                "D_c": controller.D_c,
            },
        },
        "config": {
            "gamma_fraction": config.gamma_fraction,
            "Y_scale": config.Y_scale,
            "W1_scale": config.W1_scale,
            "W2_scale": config.W2_scale,
            "delta_fraction": config.delta_fraction,
            "seed": config.seed,
        },
        "attack": {
            "pi_star": design.pi_star.tolist(),
            "gamma_max": design.gamma_max,
            "gamma": design.gamma,
            "pi": design.pi.tolist(),
            "Hbar": design.Hbar.tolist(),
            "observability_margin": design.observability_margin,
            "forbidden_subspaces": [
                {
                    "tag": sub.tag,
                    "normals": [v.tolist() for v in sub.normals],
                    "eigenvalue": {"re": sub.eigenvalue.real, "im": sub.eigenvalue.imag},
                    "degenerate": sub.degenerate,
                }
                for sub in design.forbidden
            ],
            "forbidden_notes": list(design.forbidden.notes),
        },
        "observer": {
            "L": obs.L[:, 0].tolist(),
            "desired_poles": [
                {"re": p.real, "im": p.imag} for p in np.atleast_1d(obs.desired_poles)
            ],
            "placed_poles": [
                {"re": p.real, "im": p.imag} for p in obs.placed_poles
            ],
            "placement_error": obs.placement_error,
        },
        "roa": est.as_dict(),
        "verification": _verification_flags(cl, design, obs, est),
    }


def load_bundle(path):
    """Rebuild (plant, controller, cl, design, obs) from a bundle JSON.

    The stored pi and L are used verbatim, so a reloaded bundle reproduces
    the original design bit for bit; verification flags are recomputed and
    must match the stored ones.
    """
    with open(path) as fh:
        payload = json.load(fh)
    plant, controller = model.system_from_dict(payload["system"])
    cl = model.assemble(plant, controller)
    pi = np.array(payload["attack"]["pi"], dtype=float)
    design = attack.design_from_pi(
        cl,
        pi,
        pi_star=np.array(payload["attack"]["pi_star"], dtype=float),
        gamma=payload["attack"]["gamma"],
        gamma_max=payload["attack"]["gamma_max"],
    )
    L = np.array(payload["observer"]["L"], dtype=float).reshape(-1, 1)
    desired = np.array(
        [p["re"] + 1j * p["im"] for p in payload["observer"]["desired_poles"]]
    )
    obs = observer.gain_from_vector(design, cl.B, L, desired)
    return payload, plant, controller, cl, design, obs


def cmd_validate(config):
    plant, controller, cl = _load_system(config)
    report = model.validate_assumptions(plant, controller, cl)
    rows = [
        ("loop matrix Hurwitz (abscissa %.6g)" % report.spectral_abscissa, report.a_hurwitz),
        ("plant/controller spectra disjoint (gap %.6g)" % report.min_eigenvalue_gap, report.spectra_disjoint),
        ("coupling B_p C_c nonzero (norm %.6g)" % report.bpcc_norm, report.bpcc_nonzero),
        ("output weight symmetric", report.qp_symmetric),
    ]
    width = max(len(r[0]) for r in rows)
    print("assumption checks")
    for label, ok in rows:
        print("  %-*s  %s" % (width, label, "pass" if ok else "FAIL"))
    os.makedirs(config.output_dir, exist_ok=True)
    _write_json(os.path.join(config.output_dir, "assumptions.json"), report.as_dict())
    return (EXIT_OK if report.all_passed else EXIT_ASSUMPTION), report.as_dict()


def cmd_synthesize(config):
    plant, controller, cl = _load_system(config)
    report = model.validate_assumptions(plant, controller, cl)
    if not report.all_passed:
        print("standing assumptions failed; run the validate subcommand for details")
        return EXIT_ASSUMPTION, report.as_dict()
    design, obs, est = _design_pipeline(config, cl)
    payload = _bundle_payload(config, plant, controller, cl, design, obs, est)
    os.makedirs(config.output_dir, exist_ok=True)
    _write_json(os.path.join(config.output_dir, "bundle.json"), payload)
    print("gamma_max = %.6g, gamma = %.6g" % (design.gamma_max, design.gamma))
    print("pi = %s" % np.array2string(design.pi, precision=6))
    print("L  = %s" % np.array2string(obs.L[:, 0], precision=6))
    print(
        "placement error %.3g, observability margin %.3g"
        % (obs.placement_error, design.observability_margin)
    )
    if not est.feasible:
        print(
            "certificate infeasible (c2 = %.6g <= 0): the bundle was written, "
            "but no region of attraction is certified. Consider retuning the "
            "observer gain L or the weight matrices W1 and W2." % est.c2
        )
        return EXIT_INFEASIBLE, payload
    print(
        "certificate feasible: c2 = %.6g, delta = %.6g, level = %.6g"
        % (est.c2, est.delta, est.level)
    )
    return EXIT_OK, payload


def _default_initial(config, cl):
    if config.z0 is not None:
        z0 = np.array(config.z0, dtype=float)
    elif config.system is None and cl.n == len(refcase.REFERENCE_Z0):
        z0 = np.array(refcase.REFERENCE_Z0)
    else:
        z0 = 0.1 * np.array([(-1.0) ** i for i in range(cl.n)])
    if config.zhat0 is not None:
        zhat0 = np.array(config.zhat0, dtype=float)
    elif config.system is None and cl.n == len(refcase.REFERENCE_ZHAT0):
        zhat0 = np.array(refcase.REFERENCE_ZHAT0)
    else:
        zhat0 = -z0
    if z0.shape != (cl.n,):
        raise ValidationError("expected %d components" % cl.n, field="z0")
    if zhat0.shape != (cl.n,):
        raise ValidationError("expected %d components" % cl.n, field="zhat0")
    return z0, zhat0


def _design_for_run(config, cl, plant, controller):
    """Either reuse a stored bundle or run the synthesis chain."""
    if config.bundle:
        payload, b_plant, b_controller, b_cl, design, obs = load_bundle(config.bundle)
        flags = _verification_flags(
            b_cl, design, obs, _estimate_from_bundle(payload, b_cl, design, obs, config)
        )
        stored = payload.get("verification", {})
        diffs = {k: (stored.get(k), v) for k, v in flags.items() if stored.get(k) != v}
        if diffs:
            raise ValidationError(
                "re-verification of the bundle changed flags: %s" % diffs,
                field="bundle",
            )
        est = _estimate_from_bundle(payload, b_cl, design, obs, config)
        return b_cl, design, obs, est
    design, obs, est = _design_pipeline(config, cl)
    return cl, design, obs, est


def _estimate_from_bundle(payload, cl, design, obs, config):
    return roa.certify(
        cl,
        design,
        obs,
        W1=payload["config"]["W1_scale"] * np.eye(cl.n),
        W2=payload["config"]["W2_scale"] * np.eye(cl.n),
        delta_fraction=payload["config"]["delta_fraction"],
    )


def cmd_simulate(config):
    plant, controller, cl = _load_system(config)
    cl, design, obs, est = _design_for_run(config, cl, plant, controller)
    z0, zhat0 = _default_initial(config, cl)
    traj = sim.integrate(cl, design, obs, z0, zhat0, dt=config.dt, T=config.T)
    try:
        fit = sim.fit_decay(traj)
    except ValidationError:
        fit = None  # identically zero error; the trajectory is still exported
    os.makedirs(config.output_dir, exist_ok=True)
    csv_path = os.path.join(config.output_dir, "trajectory.csv")
    sim.trajectory_to_csv(traj, csv_path)
    sim.write_gnuplot_stub(
        "trajectory.csv", os.path.join(config.output_dir, "plot_trajectory.gp"), cl.n
    )
    e0 = float(np.linalg.norm(zhat0 - z0))
    payload = {
        "z0": z0.tolist(),
        "zhat0": zhat0.tolist(),
        "dt": config.dt,
        "T": config.T,
        "final_error_norm": float(traj.e_norm[-1]),
        "final_state_norm": float(traj.z_norm[-1]),
        "error_ratio": float(traj.e_norm[-1] / e0) if e0 > 0 else 0.0,
        "decay_fit": fit.as_dict() if fit is not None else None,
    }
    _write_json(os.path.join(config.output_dir, "simulate.json"), payload)
    rate = "alpha = %.4g" % fit.alpha if fit is not None else "no decay fit"
    print(
        "integrated %d steps; final ||e|| = %.3e, %s"
        % (len(traj.times) - 1, payload["final_error_norm"], rate)
    )
    return EXIT_OK, payload


def cmd_roa(config):
    plant, controller, cl = _load_system(config)
    cl, design, obs, est = _design_for_run(config, cl, plant, controller)
    os.makedirs(config.output_dir, exist_ok=True)
    payload = {"estimate": est.as_dict()}
    box = roa.monte_carlo_box_check(
        cl,
        design,
        obs,
        box_halfwidth=config.box_halfwidth,
        n_samples=config.box_samples,
        horizon=config.T,
        seed=config.seed,
        dt=config.dt,
    )
    payload["box_check"] = box.as_dict()
    code = EXIT_OK
    if est.feasible and est.level is not None and math.isfinite(est.level):
        decay = roa.verify_decay(
            cl,
            design,
            obs,
            est,
            n_samples=config.decay_samples,
            seed=config.seed,
            dt=config.dt,
        )
        payload["decay_check"] = decay.as_dict()
        print(
            "certificate feasible: level %.6g, decay satisfied on %d/%d samples"
            % (est.level, round(decay.fraction_satisfied * decay.n_samples), decay.n_samples)
        )
    else:
        payload["decay_check"] = None
        print(
            "certificate infeasible (c2 = %.6g <= 0): report written without a "
            "decay check. Consider retuning the observer gain L or the weight "
            "matrices W1 and W2." % est.c2
        )
        code = EXIT_INFEASIBLE
    print(
        "box check: %.1f%% of %d samples converged"
        % (100 * box.fraction_converged, box.n_samples)
    )
    _write_json(os.path.join(config.output_dir, "roa.json"), payload)
    return code, payload


def cmd_reproduce(config):
    results, mismatches = refcase.run_reference_case(dt=config.dt, T=config.T)
    os.makedirs(config.output_dir, exist_ok=True)
    payload = {"results": results, "mismatches": mismatches}
    _write_json(os.path.join(config.output_dir, "reproduce.json"), payload)
    expected = refcase.expected_values()
    rows = [
        ("closed-loop spectrum", "dist %.2e (tol %.0e)" % (
            results["spectrum_distance"], expected["closed_loop_eigenvalues"]["tol"])),
        ("gamma_max", "%.6g (expect %.3g +/- %.2g)" % (
            results["gamma_max"], expected["gamma_max"]["value"], expected["gamma_max"]["tol"])),
        ("pi", "%s (expect %s +/- %.2g)" % (
            np.array2string(np.array(results["pi"]), precision=4),
            expected["pi"]["value"], expected["pi"]["tol"])),
        ("placed poles", "%s" % ", ".join(results["placed_poles"])),
        ("certificate feasible", str(results["roa"]["feasible"])),
        ("error ratio at T", "%.3e (expect < %.0e)" % (
            results["error_ratio_at_T"], expected["error_ratio_at_T"]["max"])),
    ]
    width = max(len(r[0]) for r in rows)
    print("reference-case reproduction")
    for label, value in rows:
        print("  %-*s  %s" % (width, label, value))
    if mismatches:
        print("MISMATCHES:")
        for line in mismatches:
            print("  - " + line)
        return EXIT_MISMATCH, payload
    print("all rows within tolerance")
    return EXIT_OK, payload


_COMMANDS = {
    "validate": cmd_validate,
    "synthesize": cmd_synthesize,
    "simulate": cmd_simulate,
    "roa": cmd_roa,
    "reproduce-paper": cmd_reproduce,
}


def _setup_logging():
    level_name = os.environ.get("OBS_FORGE_LOG", "error").lower()
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    if level_name not in levels:
        raise ValidationError(
            "must be one of error, info, debug; got %r" % level_name,
            field="OBS_FORGE_LOG",
        )
    logging.basicConfig(
        level=levels[level_name], format="%(levelname)s %(name)s: %(message)s"
    )


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        _setup_logging()
        args = build_parser().parse_args(argv)
        config = config_from_args(args)
        _write_meta(config, argv)
        code, _ = _COMMANDS[args.command](config)
        return code
    except ValidationError as exc:
        print("input error: %s" % exc, file=sys.stderr)
        return EXIT_INPUT
    except (OSError, json.JSONDecodeError) as exc:
        print("input error: %s" % exc, file=sys.stderr)
        return EXIT_INPUT
    except DivergenceError as exc:
        print("trajectory diverged: %s" % exc, file=sys.stderr)
        return EXIT_DIVERGED
    except (AssumptionError, SynthesisError, NumericError, ZeroDivisionError) as exc:
        print("design failure: %s" % exc, file=sys.stderr)
        return EXIT_ASSUMPTION


if __name__ == "__main__":
    sys.exit(main())
