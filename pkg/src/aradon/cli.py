"""Batch front-end: phantom, forward, check, reconstruct, factors, sweep.

Exit codes: 0 consistent / success, 1 inconsistent (range test failed),
2 usage, config, or file-format error, 3 numeric failure.

`ARADON_THREADS` caps the worker pools of the underlying numeric
libraries.  It is consumed here, before numpy is first imported, because
BLAS pools size themselves at import time; it is the only environment
variable the tool reads.
"""

import os


def _cap_threads():
    val = os.environ.get("ARADON_THREADS")
    if not val:
        return
    for var in (
        "OMP_NUM_THREADS",
        "OPENBLAS_NUM_THREADS",
        "MKL_NUM_THREADS",
        "VECLIB_MAXIMUM_THREADS",
        "NUMEXPR_NUM_THREADS",
    ):
        os.environ.setdefault(var, val)


_cap_threads()

import argparse
import json
import sys
import time
import warnings

import numpy as np

from .errors import AradonError, ConfigError, GridMismatch, InconsistentInput
from .config import load_config, parse_config
from .harmonics import project_minus
from .xray import forward_sinogram, phantom
from .bukhgeim import range_residual_0, reconstruct_f0
from .attenuation import build_h, range_residual_a, reconstruct_f_attenuated
from . import io as aio


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="aradon",
        description="Attenuated Radon transform range tests and reconstruction "
        "on convex planar domains.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, sino_arg=False):
        p.add_argument("--config", required=True, help="path to the JSON run config")
        p.add_argument("--out", default=None, help="output directory (default: config io.out_dir)")
        p.add_argument("--factors-cache", default=None,
                       help="integrating-factor cache file to reuse or create")
        p.add_argument("--attenuated", action="store_true",
                       help="use the attenuation phantom from the config")
        if sino_arg:
            p.add_argument("sinogram", help="path to a sinogram file")

    common(sub.add_parser("phantom", help="evaluate the source phantom on the grid"))
    fw = sub.add_parser("forward", help="compute boundary data for the configured phantoms")
    common(fw)
    fw.add_argument("--csv", action="store_true", help="also export the sinogram as CSV")
    common(sub.add_parser("check", help="test boundary data against the range condition"),
           sino_arg=True)
    common(sub.add_parser("reconstruct", help="recover the source from boundary data"),
           sino_arg=True)
    common(sub.add_parser("factors", help="build and cache the integrating factors"))
    sw = sub.add_parser("sweep", help="run the cycle across a resolution ladder")
    common(sw)
    sw.add_argument("axis", choices=("nodes", "modes", "angles", "quad"))
    return parser


def _outdir(cfg, args):
    out = args.out if args.out is not None else cfg.out_dir
    os.makedirs(out, exist_ok=True)
    return out


def _get_factors(cfg, args, boundary, angular, quad, need_interior):
    """Build the integrating factors, honoring the cache flag."""
    a = cfg.make_phantom("a", boundary)
    cache = args.factors_cache
    if cache and os.path.exists(cache):
        factors = aio.read_factors_cache(cache, boundary=boundary, angular=angular)
        if factors.a_info != {"name": a.name, "params": _plain(a.params)}:
            raise ConfigError(
                "factors cache %s was built for attenuation %s, config says %s"
                % (cache, factors.a_info, {"name": a.name, "params": a.params})
            )
        if factors.n_modes != cfg.n_modes:
            raise GridMismatch(
                "factors cache has N=%d, config wants N=%d"
                % (factors.n_modes, cfg.n_modes)
            )
        if need_interior and factors.interior is None:
            raise ConfigError(
                "factors cache %s has no interior data; rebuild with the "
                "factors subcommand" % cache
            )
        return factors
    grid = cfg.make_grid(boundary) if need_interior else None
    factors = build_h(
        a, boundary, angular, cfg.n_modes, quad=quad,
        s_grid=np.linspace(*_s_span(boundary), cfg.s_samples),
        interior_grid=grid, tol_neg=cfg.tol_neg, tol_identity=cfg.tol_identity,
    )
    if cache:
        aio.write_factors_cache(cache, factors, config_hash=cfg.config_hash)
    return factors


def _s_span(boundary):
    radius = float(np.max(np.hypot(*boundary.positions.T)))
    return -1.2 * radius, 1.2 * radius


def _plain(obj):
    """Mirror JSON round-tripping: tuples to lists, for comparisons."""
    return json.loads(json.dumps(obj))


def cmd_phantom(cfg, args):
    out = _outdir(cfg, args)
    boundary = cfg.make_boundary()
    which = "a" if args.attenuated else "f"
    f = cfg.make_phantom(which, boundary)
    grid = cfg.make_grid(boundary)
    vals = np.zeros(grid.ny * grid.nx)
    inside = boundary.contains(grid.points_all)
    vals[inside] = f(grid.points_all[inside])
    pic = vals.reshape(grid.ny, grid.nx)
    path = os.path.join(out, "phantom_%s.csv" % which)
    aio.write_field_csv(path, grid.xs, grid.ys, pic)
    print("phantom %s (%s): min %.6g max %.6g supported=%s -> %s"
          % (which, f.name, pic.min(), pic.max(), not f.is_zero, path))
    return 0


def cmd_forward(cfg, args):
    out = _outdir(cfg, args)
    boundary = cfg.make_boundary()
    angular = cfg.make_angular()
    quad = cfg.make_quad()
    f = cfg.make_phantom("f", boundary)
    a = cfg.make_phantom("a", boundary) if args.attenuated else phantom("zero", boundary)
    sino = forward_sinogram(f, a, boundary, angular, quad=quad)
    path = os.path.join(out, "sinogram.bin")
    aio.write_sinogram(path, sino, config_hash=cfg.config_hash)
    if getattr(args, "csv", False):
        aio.sinogram_to_csv(os.path.join(out, "sinogram.csv"), sino)
    dirs = np.stack([np.cos(angular.angles), np.sin(angular.angles)], axis=1)
    incoming = (boundary.normals @ dirs.T) < 0.0
    max_incoming = float(np.max(np.abs(sino.data[incoming]))) if incoming.any() else 0.0
    print(
        "sinogram %d nodes x %d angles: min %.6g max %.6g, "
        "max |incoming| %.3g (gauge zero) -> %s"
        % (boundary.n_nodes, angular.n_angles, sino.data.min(), sino.data.max(),
           max_incoming, path)
    )
    return 0


def _check_sino_grids(cfg, sino):
    want_kind = {"disk": "unit-disk", "table": "generic"}.get(
        cfg.boundary_kind, cfg.boundary_kind
    )
    if sino.boundary.n_nodes != cfg.n_nodes or sino.boundary.kind != want_kind:
        raise GridMismatch(
            "sinogram has %s/%d nodes, config wants %s/%d"
            % (sino.boundary.kind, sino.boundary.n_nodes, cfg.boundary_kind,
               cfg.n_nodes)
        )
    if sino.angular.n_angles != cfg.n_angles:
        raise GridMismatch(
            "sinogram has %d angles, config wants %d"
            % (sino.angular.n_angles, cfg.n_angles)
        )


def cmd_check(cfg, args):
    out = _outdir(cfg, args)
    sino = aio.read_sinogram(args.sinogram)
    _check_sino_grids(cfg, sino)
    trace = project_minus(sino, cfg.n_modes)
    attenuated = args.attenuated or sino.attenuated
    if attenuated:
        quad = cfg.make_quad()
        factors = _get_factors(cfg, args, sino.boundary, sino.angular, quad,
                               need_interior=False)
        rr = range_residual_a(trace, factors)
    else:
        rr = range_residual_0(trace)
    consistent = rr.relative <= cfg.residual_gate
    report = rr.report()
    extra = {
        "config_hash": cfg.config_hash,
        "attenuated": bool(attenuated),
        "gate": cfg.residual_gate,
        "verdict": "consistent" if consistent else "inconsistent",
    }
    path = os.path.join(out, "residual.json")
    aio.write_residual_report(path, report, extra=extra)
    print("range residual: relative %.6g (gate %.3g) -> %s [%s]"
          % (rr.relative, cfg.residual_gate, path, extra["verdict"]))
    return 0 if consistent else 1


def _recon_error(cfg, boundary, grid, pic, truth_field):
    """Relative L2 error against the named phantom on the gated interior."""
    mask_pic = grid.valid.reshape(grid.ny, grid.nx)
    r = np.hypot(grid.points_all[:, 0], grid.points_all[:, 1]).reshape(grid.ny, grid.nx)
    region = mask_pic & (r <= cfg.error_radius)
    truth = np.zeros(grid.ny * grid.nx)
    truth[grid.valid] = truth_field(grid.points)
    truth = truth.reshape(grid.ny, grid.nx)
    denom = float(np.sqrt(np.sum(truth[region] ** 2)))
    if denom == 0.0:
        return float(np.sqrt(np.sum(pic[region] ** 2)))
    return float(np.sqrt(np.sum((pic[region] - truth[region]) ** 2)) / denom)


def cmd_reconstruct(cfg, args):
    out = _outdir(cfg, args)
    sino = aio.read_sinogram(args.sinogram)
    _check_sino_grids(cfg, sino)
    boundary = sino.boundary
    grid = cfg.make_grid(boundary)
    trace = project_minus(sino, cfg.n_modes)
    attenuated = args.attenuated or sino.attenuated
    flagged = 0
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", InconsistentInput)
        if attenuated:
            quad = cfg.make_quad()
            factors = _get_factors(cfg, args, boundary, sino.angular, quad,
                                   need_interior=True)
            pic = reconstruct_f_attenuated(trace, factors, grid, gate=cfg.recon_gate)
        else:
            pic = reconstruct_f0(trace, grid, gate=cfg.recon_gate)
        flagged = sum(1 for w in caught if issubclass(w.category, InconsistentInput))

    path = os.path.join(out, "reconstruction.csv")
    aio.write_field_csv(path, grid.xs, grid.ys, pic)
    report = {
        "config_hash": cfg.config_hash,
        "attenuated": bool(attenuated),
        "consistency_flag": int(flagged),
        "grid": {"nx": grid.nx, "ny": grid.ny, "margin": grid.margin},
    }
    if cfg.phantom_f["name"] != "zero":
        truth = cfg.make_phantom("f", boundary)
        err = _recon_error(cfg, boundary, grid, pic, truth)
        report["relative_l2_error"] = err
        report["error_radius"] = cfg.error_radius
        print("reconstruction error %.4g (|xi| <= %.3g) consistency_flag=%d -> %s"
              % (err, cfg.error_radius, flagged, path))
    else:
        print("reconstruction written, consistency_flag=%d -> %s" % (flagged, path))
    with open(os.path.join(out, "recon_report.json"), "w") as fh:
        json.dump(report, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return 0


def cmd_factors(cfg, args):
    out = _outdir(cfg, args)
    boundary = cfg.make_boundary()
    angular = cfg.make_angular()
    quad = cfg.make_quad()
    cache = args.factors_cache or os.path.join(out, "factors.bin")
    a = cfg.make_phantom("a", boundary)
    grid = cfg.make_grid(boundary)
    factors = build_h(
        a, boundary, angular, cfg.n_modes, quad=quad,
        s_grid=np.linspace(*_s_span(boundary), cfg.s_samples),
        interior_grid=grid, tol_neg=cfg.tol_neg, tol_identity=cfg.tol_identity,
    )
    aio.write_factors_cache(cache, factors, config_hash=cfg.config_hash)
    print(
        "factors for a=%s: max negative mode %.3g (tol %.3g), "
        "alpha*beta identity deviation %.3g -> %s"
        % (a.name, factors.max_neg_mode, factors.tol_neg,
           factors.max_identity_dev, cache)
    )
    return 0


_SWEEP_DEFAULTS = {
    "nodes": (128, 256, 512),
    "modes": (8, 16, 32),
    "angles": (64, 128, 256),
    "quad": (2, 4, 8),
}


def _rung_config(cfg, axis, value):
    doc = json.loads(json.dumps(cfg.raw))
    doc.setdefault("boundary", {})
    doc.setdefault("modes", {})
    doc.setdefault("quad", {})
    if axis == "nodes":
        doc["boundary"]["n_nodes"] = value
    elif axis == "modes":
        doc["modes"]["n"] = value
    elif axis == "angles":
        doc["modes"]["angles"] = value
    elif axis == "quad":
        doc["quad"]["panels"] = value
    return parse_config(doc)


def cmd_sweep(cfg, args):
    out = _outdir(cfg, args)
    values = [int(v) for v in cfg.sweep_values] or list(_SWEEP_DEFAULTS[args.axis])
    path = os.path.join(out, "sweep_%s.csv" % args.axis)
    failed = None
    with open(path, "w", newline="") as fh:
        fh.write("resolution,residual,recon_error,runtime\n")
        fh.flush()
        for value in values:
            t0 = time.perf_counter()
            try:
                rung = _rung_config(cfg, args.axis, value)
                boundary = rung.make_boundary()
                angular = rung.make_angular()
                quad = rung.make_quad()
                f = rung.make_phantom("f", boundary)
                a = rung.make_phantom("a", boundary) if args.attenuated \
                    else phantom("zero", boundary)
                sino = forward_sinogram(f, a, boundary, angular, quad=quad)
                trace = project_minus(sino, rung.n_modes)
                grid = rung.make_grid(boundary)
                if args.attenuated:
                    factors = build_h(
                        a, boundary, angular, rung.n_modes, quad=quad,
                        s_grid=np.linspace(*_s_span(boundary), rung.s_samples),
                        interior_grid=grid, tol_neg=rung.tol_neg,
                        tol_identity=rung.tol_identity,
                    )
                    rr = range_residual_a(trace, factors)
                    pic = reconstruct_f_attenuated(trace, factors, grid,
                                                   gate=rung.recon_gate)
                else:
                    rr = range_residual_0(trace)
                    pic = reconstruct_f0(trace, grid, gate=rung.recon_gate)
                err = _recon_error(rung, boundary, grid, pic, f)
            except (AradonError, ValueError) as exc:
                failed = "rung %s=%d failed: %s" % (args.axis, value, exc)
                break
            runtime = time.perf_counter() - t0
            fh.write("%d,%.12g,%.12g,%.6g\n" % (value, rr.relative, err, runtime))
            fh.flush()
            print("sweep %s=%d: residual %.4g recon_error %.4g (%.2fs)"
                  % (args.axis, value, rr.relative, err, runtime))
    if failed:
        print("sweep aborted, partial results in %s\n%s" % (path, failed),
              file=sys.stderr)
        return 3
    print("sweep complete -> %s" % path)
    return 0


_COMMANDS = {
    "phantom": cmd_phantom,
    "forward": cmd_forward,
    "check": cmd_check,
    "reconstruct": cmd_reconstruct,
    "factors": cmd_factors,
    "sweep": cmd_sweep,
}


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        return _COMMANDS[args.command](cfg, args)
    except (ConfigError, GridMismatch) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    except OSError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    except AradonError as exc:
        print("numeric failure: %s" % exc, file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
