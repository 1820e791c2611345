"""``curvemag`` command line.

Subcommands: ``frame``, ``demag``, ``minimize``, ``gamma`` and ``analytic``.
Exit codes: 0 success (including a non-converged minimisation), 2 invalid
configuration, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, _kernels
from . import analytic, cross_section, dimension3d, geometry, optimizer, perturbation
from .config import RunConfig, load_config
from .errors import ConfigError, CurvemagError
from .reduced_energy import BoundaryCondition, energy, energy_normalization, field_to_csv

log = logging.getLogger("curvemag")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


# --- builders ---------------------------------------------------------------------


def build_curve(cfg: RunConfig, n: int | None = None) -> geometry.Curve:
    c = cfg.curve
    n = n or cfg.grid.n
    if c.kind == "line":
        return geometry.line(c.length, n, start=c.start)
    if c.kind == "ring":
        return geometry.ring(c.radius, n)
    if c.kind == "helix":
        return geometry.helix(c.a, c.b, c.turns, n)
    return geometry.from_samples(geometry.read_points_csv(c.path), n=n, closed=c.closed)


def build_model(cfg: RunConfig) -> perturbation.PerturbationModel:
    p = cfg.perturbation
    return perturbation.from_spec(p.kind, kappa=p.kappa, beta=p.beta, tensor=p.tensor,
                                  tensor_path=p.tensor_path)


def build_cross_section(cfg: RunConfig) -> cross_section.CrossSection | None:
    q = cfg.cross_section
    shape = cross_section.from_spec(q.kind, radius=q.radius, side=q.side,
                                    vertices=q.vertices, path=q.path)
    if shape is not None and q.normalize:
        shape = shape.normalized()
    return shape


def build_demag(cfg: RunConfig, shape=None):
    shape = shape if shape is not None else build_cross_section(cfg)
    if shape is None:
        return None
    q = cfg.cross_section
    return cross_section.demag_matrix(shape, q.panels, convention=q.convention,
                                      self_term=q.self_term)


def build_bc(cfg: RunConfig) -> BoundaryCondition:
    b = cfg.boundary
    if b.kind == "pinned":
        return BoundaryCondition.pinned(b.left, b.right)
    return BoundaryCondition(b.kind)


def _wall_q(cfg: RunConfig, demag) -> float:
    if cfg.analytic.q is not None:
        return cfg.analytic.q
    if demag is not None:
        # isotropic part of the matrix; exact for the disk
        return 0.25 * float(np.trace(demag.matrix))
    return analytic.wall_q()


def analytic_field(cfg: RunConfig, curve, demag=None):
    """Oracle field and a parameter record for the ``[analytic]`` section."""
    a = cfg.analytic
    kappa = cfg.perturbation.kappa
    R = cfg.curve.radius
    if a.oracle == "wall":
        q = _wall_q(cfg, demag)
        field, e = analytic.wall_field(kappa, q, curve)
        prof = analytic.WallProfile(kappa, q)
        return field, {"oracle": "wall", "kappa": kappa, "q": q, "rate": prof.rate,
                       "energy": e, "alternative_rate": 1.0 / math.sqrt(4.0 * math.pi)}
    if a.oracle == "ring_family":
        w = math.sqrt(1.0 + (R * kappa) ** 2)
        B = a.b_amplitude if a.b_amplitude is not None else math.sqrt(
            max(0.0, 1.0 - a.amplitude**2)) / w
        field = analytic.ring_family(R, kappa, a.amplitude, B, a.phase, curve, force=a.force)
        return field, {"oracle": "ring_family", "R": R, "kappa": kappa, "A": a.amplitude,
                       "B": B, "phase": a.phase, "omega": w}
    if a.oracle == "ring_minimizer":
        field = analytic.ring_minimizer(R, kappa, curve, a.sign)
        return field, {"oracle": "ring_minimizer", "R": R, "kappa": kappa, "sign": a.sign}
    if a.oracle == "ring_demag":
        m = a.demag_coefficient
        if m is None:
            m = float(0.5 * np.trace(demag.matrix)) if demag is not None else analytic.DISK_COEFFICIENT
        g, field = analytic.ring_demag_solution(R, kappa, curve, a.sign, m)
        return field, {"oracle": "ring_demag", "R": R, "kappa": kappa, "gamma": g,
                       "demag_coefficient": m, "sign": a.sign}
    field = analytic.sol2_field(a.winding, a.phase, curve, kappa)
    return field, {"oracle": "spiral", "R": R, "kappa": kappa, "winding": a.winding,
                   "phase": a.phase}


# --- output helpers ---------------------------------------------------------------


def _metadata(cfg: RunConfig, command: str) -> dict:
    return {"command": command, "version": __version__, "backend": _kernels.BACKEND,
            "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
            "config": cfg.model_dump()}


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.output.dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _plot_field(field, curve, path: Path) -> bool:
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        log.warning("matplotlib not installed; skipping %s", path.name)
        return False
    comp = field.frame_components(curve)
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 5), sharex=True)
    for k, name in enumerate(("v.t", "v.n", "v.b")):
        ax1.plot(curve.s, comp[:, k], label=name)
    ax1.legend(loc="best")
    ax1.set_ylabel("component")
    ax2.plot(curve.s, np.arccos(np.clip(comp[:, 0], -1.0, 1.0)))
    ax2.set_ylabel("theta = arccos(v.t)")
    ax2.set_xlabel("s")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return True


# --- commands ----------------------------------------------------------------------


def cmd_frame(cfg: RunConfig) -> int:
    curve = build_curve(cfg)
    out = _outdir(cfg)
    f = curve.frame
    cols = np.column_stack([curve.s, f.t, f.n, f.b, f.curvature, f.torsion])
    header = "s,t1,t2,t3,n1,n2,n3,b1,b2,b3,curvature,torsion"
    np.savetxt(out / "frame.csv", cols, delimiter=",", header=header, comments="", fmt="%.17g")
    print(f"wrote {out / 'frame.csv'} ({len(curve.s)} rows)")
    return EXIT_OK


def cmd_demag(cfg: RunConfig) -> int:
    shape = build_cross_section(cfg)
    if shape is None:
        raise ConfigError("cross_section.kind: 'none' has no demag matrix")
    q = cfg.cross_section
    M = build_demag(cfg, shape)
    table = cross_section.demag_convergence(shape, q.convergence, convention=q.convention,
                                            self_term=q.self_term)
    out = _outdir(cfg)
    payload = {"demag": M.to_dict(), "area": shape.area, "convergence": table,
               "metadata": _metadata(cfg, "demag")}
    _write_json(out / "demag.json", payload)
    m = M.matrix
    print(f"M = [[{m[0, 0]:.10g}, {m[0, 1]:.3g}], [{m[1, 0]:.3g}, {m[1, 1]:.10g}]]  "
          f"({M.panels} panels, {M.convention})")
    return EXIT_OK


def cmd_minimize(cfg: RunConfig) -> int:
    curve = build_curve(cfg)
    model = build_model(cfg)
    demag = build_demag(cfg) if cfg.minimize.demag else None
    bc = build_bc(cfg)
    mc = cfg.minimize
    if mc.init == "analytic":
        f0, _ = analytic_field(cfg, curve, demag)
        f0 = type(f0).from_vectors(f0.v, bc)
    else:
        f0 = optimizer.initial_field(curve, mc.init, bc, seed=cfg.seed,
                                     vector=mc.init_vector, width=mc.init_width,
                                     noise=mc.init_noise)
    opts = optimizer.MinimizeOptions(tol=mc.tol, max_iters=mc.max_iters, step_rule=mc.step_rule)
    rep = optimizer.minimize(f0, curve, model, demag, opts)
    if not np.isfinite(rep.energy.total):
        raise FloatingPointError("energy is not finite")
    out = _outdir(cfg)
    field_to_csv(rep.field, curve, out / "field.csv")
    norm = energy_normalization(rep.energy, rep.field, curve, model)
    summary = rep.summary()
    summary["normalization"] = norm.to_dict()
    summary["history"] = [list(h) for h in rep.history]
    if curve.kind == "line" and bc.kind == "pinned":
        try:
            fit = analytic.fit_wall_rate(rep.field, curve, _wall_q(cfg, demag))
            summary["wall_fit"] = fit._asdict()
        except ValueError:
            pass
    summary["metadata"] = _metadata(cfg, "minimize")
    _write_json(out / "report.json", summary)
    if cfg.output.plot:
        _plot_field(rep.field, curve, out / "field.svg")
    state = "converged" if rep.converged else "NOT converged"
    print(f"{state} after {rep.iterations} iterations: E = {rep.energy.total:.12g}, "
          f"|g| = {rep.grad_norm:.3e}")
    return EXIT_OK


def cmd_gamma(cfg: RunConfig) -> int:
    curve = build_curve(cfg)
    model = build_model(cfg)
    shape = build_cross_section(cfg)
    if shape is None:
        raise ConfigError("cross_section.kind: the tube study needs a disk or square")
    gc = cfg.gamma
    R, kappa = cfg.curve.radius, cfg.perturbation.kappa

    if gc.v0 == "ring_minimizer":
        def v0(c):
            return analytic.ring_minimizer(R, kappa, c, cfg.analytic.sign)
    elif gc.v0 == "ring_demag":
        def v0(c):
            return analytic.ring_demag_solution(R, kappa, c, cfg.analytic.sign)[1]
    elif gc.v0 == "wall":
        def v0(c):
            return analytic.wall_field(kappa, _wall_q(cfg, None), c)[0]
    else:
        def v0(c):
            return optimizer.initial_field(c, "constant", vector=cfg.minimize.init_vector)

    grid = dimension3d.cross_grid(shape, gc.n_r, gc.n_theta, gc.n_side)
    study = dimension3d.gamma_convergence_study(v0, curve, model, shape, gc.epsilons,
                                                grid=grid, ratio=gc.ratio, form=gc.form,
                                                threads=cfg.threads)
    out = _outdir(cfg)
    study.to_csv(out / "gamma.csv")
    payload = study.summary()
    payload["metadata"] = _metadata(cfg, "gamma")
    _write_json(out / "gamma.json", payload)
    for r in study.rows:
        print(f"eps={r['epsilon']:<8g} N={r['n_segments']:<6d} gap={r['gap']:.6e}")
    return EXIT_OK


def cmd_analytic(cfg: RunConfig) -> int:
    curve = build_curve(cfg)
    model = build_model(cfg)
    demag = build_demag(cfg) if cfg.minimize.demag else None
    field, params = analytic_field(cfg, curve, demag)
    E = energy(field, curve, model, demag)
    out = _outdir(cfg)
    field_to_csv(field, curve, out / "field.csv")
    params["discrete_energy"] = E.to_dict()
    params["metadata"] = _metadata(cfg, "analytic")
    _write_json(out / "analytic.json", params)
    print(f"{params['oracle']}: discrete E = {E.total:.12g}")
    return EXIT_OK


COMMANDS = {"frame": cmd_frame, "demag": cmd_demag, "minimize": cmd_minimize,
            "gamma": cmd_gamma, "analytic": cmd_analytic}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="curvemag", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        sp = sub.add_parser(name, help=fn.__name__.replace("cmd_", ""))
        sp.add_argument("--config", type=Path, help="TOML configuration file")
        sp.add_argument("--out", type=Path, help="output directory (overrides [output].dir)")
        sp.add_argument("--seed", type=int, help="random seed (overrides seed)")
        sp.add_argument("--threads", type=int, help="worker threads (overrides threads)")
        sp.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides: dict = {}
    if args.out is not None:
        overrides["output"] = {"dir": str(args.out)}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.threads is not None:
        overrides["threads"] = args.threads
    try:
        cfg = load_config(args.config, overrides=overrides)
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        # parameter combinations the schema cannot see (e.g. kappa = 0 for ring_demag)
        print(f"config error: invalid parameters: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CurvemagError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
