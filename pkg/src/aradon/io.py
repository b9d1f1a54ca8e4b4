"""File persistence: binary containers, CSV exports, report JSON.

Binary containers share one layout: a single-line UTF-8 JSON header
(sorted keys, so identical content writes identical bytes), a newline,
then the raw payload.  Complex arrays are stored as contiguous
little-endian 64-bit float pairs (re, im), row-major, which is exactly
numpy's '<c16'.  Headers carry a sha256 checksum of the payload;
readers verify it before trusting the data.
"""

import csv
import hashlib
import json

import numpy as np

from .errors import ConfigError, GridMismatch
from .geometry import make_boundary
from .harmonics import ModeTrace, AngularGrid
from .xray import Sinogram
from .bukhgeim import ModeField, CartesianGrid
from .attenuation import IntegratingFactor, InteriorFactors

_TRACE_FORMAT = "aradon-mode-trace"
_SINO_FORMAT = "aradon-sinogram"
_FIELD_FORMAT = "aradon-mode-field"
_FACTORS_FORMAT = "aradon-factors"


def _checksum(payload):
    return hashlib.sha256(payload).hexdigest()


def _write_container(path, header, payload):
    header = dict(header)
    header["checksum"] = _checksum(payload)
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(blob)
        fh.write(b"\n")
        fh.write(payload)


def _read_container(path, expect_format):
    with open(path, "rb") as fh:
        first = fh.readline()
        payload = fh.read()
    try:
        header = json.loads(first.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ConfigError("%s: not a recognized container: %s" % (path, exc))
    if header.get("format") != expect_format:
        raise ConfigError(
            "%s: expected format %r, found %r"
            % (path, expect_format, header.get("format"))
        )
    if header.get("checksum") != _checksum(payload):
        raise ConfigError("%s: payload checksum mismatch" % path)
    return header, payload


def boundary_descriptor(boundary):
    return boundary.descriptor()


def boundary_from_descriptor(desc):
    kind = desc["kind"]
    if kind == "generic":
        return make_boundary("table", desc["n_nodes"],
                             table=np.asarray(desc["table"], dtype=float))
    return make_boundary(kind, desc["n_nodes"],
                         a=desc.get("a", 1.0), b=desc.get("b", 1.0))


def write_mode_trace(path, trace):
    header = {
        "format": _TRACE_FORMAT,
        "version": 1,
        "n_modes": trace.n_modes,
        "n_nodes": trace.boundary.n_nodes,
        "boundary": trace.boundary.descriptor(),
    }
    _write_container(path, header, np.ascontiguousarray(trace.data, dtype="<c16").tobytes())


def read_mode_trace(path):
    header, payload = _read_container(path, _TRACE_FORMAT)
    boundary = boundary_from_descriptor(header["boundary"])
    n_modes = int(header["n_modes"])
    data = np.frombuffer(payload, dtype="<c16").reshape(n_modes + 1, int(header["n_nodes"]))
    return ModeTrace(boundary, n_modes, data.copy())


def write_sinogram(path, sino, config_hash=None):
    meta = dict(sino.meta or {})
    if config_hash is not None:
        meta["config_hash"] = config_hash
    header = {
        "format": _SINO_FORMAT,
        "version": 1,
        "n_nodes": sino.boundary.n_nodes,
        "n_angles": sino.angular.n_angles,
        "boundary": sino.boundary.descriptor(),
        "attenuated": bool(sino.attenuated),
        "meta": meta,
    }
    _write_container(path, header, np.ascontiguousarray(sino.data, dtype="<f8").tobytes())


def read_sinogram(path):
    header, payload = _read_container(path, _SINO_FORMAT)
    boundary = boundary_from_descriptor(header["boundary"])
    angular = AngularGrid(int(header["n_angles"]))
    data = np.frombuffer(payload, dtype="<f8").reshape(
        int(header["n_nodes"]), int(header["n_angles"])
    )
    return Sinogram(boundary, angular, data.copy(),
                    attenuated=bool(header["attenuated"]), meta=header.get("meta", {}))


def sinogram_to_csv(path, sino):
    pos = sino.boundary.positions
    angles = sino.angular.angles
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["node_index", "angle_index", "z_x", "z_y", "phi", "value"])
        for i in range(sino.boundary.n_nodes):
            for j in range(sino.angular.n_angles):
                writer.writerow([
                    i, j,
                    "%.17g" % pos[i, 0], "%.17g" % pos[i, 1],
                    "%.17g" % angles[j], "%.17g" % sino.data[i, j],
                ])


def write_mode_field(path, field):
    header = {
        "format": _FIELD_FORMAT,
        "version": 1,
        "n_modes": field.n_modes,
        "points": [[float(p[0]), float(p[1])] for p in np.asarray(field.points)],
    }
    _write_container(path, header, np.ascontiguousarray(field.data, dtype="<c16").tobytes())


def read_mode_field(path):
    header, payload = _read_container(path, _FIELD_FORMAT)
    points = np.asarray(header["points"], dtype=float)
    n_modes = int(header["n_modes"])
    data = np.frombuffer(payload, dtype="<c16").reshape(n_modes + 1, len(points))
    return ModeField(points, n_modes, data.copy())


def write_residual_report(path, report, extra=None):
    """RangeResidual report JSON, optionally merged with verdict fields."""
    doc = dict(report.report()) if hasattr(report, "report") else dict(report)
    if extra:
        doc.update(extra)
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write("\n")


def write_field_csv(path, xs, ys, picture):
    picture = np.asarray(picture)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y", "value"])
        for iy in range(len(ys)):
            for ix in range(len(xs)):
                writer.writerow([
                    "%.17g" % xs[ix], "%.17g" % ys[iy], "%.17g" % picture[iy, ix],
                ])


def read_field_csv(path):
    xs, ys, vals = [], [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        head = next(reader)
        if head[:3] != ["x", "y", "value"]:
            raise ConfigError("%s: not a field CSV" % path)
        for row in reader:
            xs.append(float(row[0]))
            ys.append(float(row[1]))
            vals.append(float(row[2]))
    ux = np.unique(np.asarray(xs))
    uy = np.unique(np.asarray(ys))
    pic = np.asarray(vals).reshape(len(uy), len(ux))
    return ux, uy, pic


def _block_bytes(arrays):
    blocks = []
    payload = b""
    for name, arr, dtype in arrays:
        arr = np.ascontiguousarray(arr, dtype=dtype)
        blocks.append({"name": name, "shape": list(arr.shape), "dtype": dtype})
        payload += arr.tobytes()
    return blocks, payload


def _split_blocks(blocks, payload):
    out = {}
    offset = 0
    for blk in blocks:
        dt = np.dtype(blk["dtype"])
        count = int(np.prod(blk["shape"])) if blk["shape"] else 1
        nbytes = count * dt.itemsize
        out[blk["name"]] = np.frombuffer(
            payload[offset:offset + nbytes], dtype=dt
        ).reshape(blk["shape"]).copy()
        offset += nbytes
    return out


def write_factors_cache(path, factors, config_hash=None):
    arrays = [
        ("h_boundary", factors.h_boundary, "<c16"),
        ("alpha", factors.alpha, "<c16"),
        ("beta", factors.beta, "<c16"),
    ]
    interior_meta = None
    if factors.interior is not None:
        gi = factors.interior.grid
        interior_meta = {
            "nx": gi.nx, "ny": gi.ny, "margin": gi.margin,
            "extent": [float(gi.xs[0]), float(gi.xs[-1]),
                       float(gi.ys[0]), float(gi.ys[-1])],
        }
        arrays += [
            ("inside", factors.interior.inside.astype(np.uint8), "<u1"),
            ("h_interior", factors.interior.h, "<c16"),
            ("alpha_interior", factors.interior.alpha, "<c16"),
            ("beta_interior", factors.interior.beta, "<c16"),
            ("a_values", factors.interior.a_values, "<f8"),
        ]
    blocks, payload = _block_bytes(arrays)
    header = {
        "format": _FACTORS_FORMAT,
        "version": 1,
        "n_modes": factors.n_modes,
        "n_nodes": factors.boundary.n_nodes,
        "n_angles": factors.angular.n_angles,
        "boundary": factors.boundary.descriptor(),
        "zero_attenuation": factors.zero_attenuation,
        "a": factors.a_info,
        "tol_neg": factors.tol_neg,
        "max_neg_mode": factors.max_neg_mode,
        "max_identity_dev": factors.max_identity_dev,
        "interior": interior_meta,
        "blocks": blocks,
    }
    if config_hash is not None:
        header["config_hash"] = config_hash
    _write_container(path, header, payload)


def read_factors_cache(path, boundary=None, angular=None):
    """Load an integrating-factor cache.

    When `boundary`/`angular` are given, the cached grids must match
    them (GridMismatch otherwise) and the given objects are used so the
    factors share identity with the caller's grids.
    """
    header, payload = _read_container(path, _FACTORS_FORMAT)
    desc = header["boundary"]
    if boundary is not None:
        if boundary.n_nodes != int(header["n_nodes"]) or boundary.kind != desc["kind"]:
            raise GridMismatch(
                "cached factors use %s/%d nodes, run uses %s/%d"
                % (desc["kind"], header["n_nodes"], boundary.kind, boundary.n_nodes)
            )
    else:
        boundary = boundary_from_descriptor(desc)
    if angular is not None:
        if angular.n_angles != int(header["n_angles"]):
            raise GridMismatch(
                "cached factors use %d angles, run uses %d"
                % (header["n_angles"], angular.n_angles)
            )
    else:
        angular = AngularGrid(int(header["n_angles"]))

    data = _split_blocks(header["blocks"], payload)
    interior = None
    if header.get("interior") is not None:
        im = header["interior"]
        grid = CartesianGrid(boundary, im["nx"], im["ny"], margin=im["margin"],
                             extent=tuple(im["extent"]))
        interior = InteriorFactors(
            grid, data["inside"].astype(bool), data["h_interior"],
            data["alpha_interior"], data["beta_interior"], data["a_values"],
        )
    return IntegratingFactor(
        boundary, angular, int(header["n_modes"]), data["h_boundary"],
        data["alpha"], data["beta"], bool(header["zero_attenuation"]),
        header.get("a", {}), float(header["tol_neg"]),
        float(header["max_neg_mode"]), float(header["max_identity_dev"]),
        interior,
    )


def read_boundary_table(path):
    """Boundary node table: CSV of x,y rows, closed implicitly."""
    pts = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for row in reader:
            if not row or row[0].strip().startswith("#"):
                continue
            if row[0].strip().lower() in ("x", ""):
                continue
            pts.append([float(row[0]), float(row[1])])
    if len(pts) < 3:
        raise ConfigError("%s: boundary table needs at least 3 points" % path)
    return np.asarray(pts, dtype=float)
