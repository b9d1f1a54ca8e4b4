"""Convex planar domains and their chord geometry.

A domain is represented by its boundary curve, discretized at uniformly
spaced parameter values on [0, 2pi).  Three kinds are supported: the unit
disk, axis-aligned ellipses, and generic convex curves given as point
tables (interpolated with periodic cubic splines).  On top of the curve
data the module provides ray casting, chords with their two travel times
tau_plus / tau_minus, the radial parametrization of the boundary seen from
an interior point, and the numerically estimated jump of the chord-length
derivative across tangential directions.

Conventions: curves are traversed counterclockwise; the outward normal is
the tangent rotated clockwise by 90 degrees; angles phi always refer to
the direction (cos phi, sin phi).
"""

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import NonConvex, TooFewNodes, OutsideDomain, NoIntersection

# Tolerances shared by the geometric predicates.
ON_BOUNDARY_TOL = 1e-9     # distance below which a point counts as lying on the curve
TOL_TANGENT = 1e-9         # |n . theta| below this is tangential (variety Z)
BISECT_ITERS = 60          # bisection refinement count for parameter root finding
CURVATURE_FLOOR = 1e-6     # strictly positive curvature bound delta


def _as_point(p):
    p = np.asarray(p, dtype=float)
    if p.shape != (2,):
        raise ValueError("expected a 2-vector, got shape %r" % (p.shape,))
    return p


def _cross(u, v):
    """z-component of the 2-D cross product u x v."""
    return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]


@dataclass(frozen=True)
class Chord:
    """A directed chord through a point of the closed domain.

    end_plus = base + tau_plus * direction is the exit point of the forward
    ray, end_minus = base - tau_minus * direction the entry point of the
    backward ray; tau_plus + tau_minus is the full chord length.
    """

    base: np.ndarray
    direction: np.ndarray
    tau_plus: float
    tau_minus: float
    end_plus: np.ndarray
    end_minus: np.ndarray

    @property
    def length(self):
        return self.tau_plus + self.tau_minus


class ConvexBoundary:
    """Discretized C^2 convex boundary curve.

    Attributes
    ----------
    kind : str
        One of "unit-disk", "ellipse", "generic".
    n_nodes : int
        Number of uniformly spaced parameter nodes.
    params : (n,) array
        Node parameters t_i = 2 pi i / n.
    positions, tangents, normals : (n, 2) arrays
        Node positions, unit tangents, outward unit normals.
    curvatures, speeds : (n,) arrays
        kappa(t_i) and |w'(t_i)| at the nodes.
    """

    def __init__(self, kind, n_nodes, a=1.0, b=1.0, table=None):
        if n_nodes < 16:
            raise TooFewNodes("n_nodes must be >= 16, got %d" % n_nodes)
        self.kind = kind
        self.n_nodes = int(n_nodes)
        self.a = float(a)
        self.b = float(b)
        self.params = 2.0 * np.pi * np.arange(self.n_nodes) / self.n_nodes
        self._spline_x = None
        self._spline_y = None

        if kind == "generic":
            pts = np.asarray(table, dtype=float)
            if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 8:
                raise NonConvex("generic boundary needs a table of at least 8 (x, y) rows")
            # Normalize to counterclockwise orientation before fitting.
            area2 = np.sum(pts[:, 0] * np.roll(pts[:, 1], -1) - np.roll(pts[:, 0], -1) * pts[:, 1])
            if area2 < 0:
                pts = pts[::-1]
            ts = 2.0 * np.pi * np.arange(len(pts) + 1) / len(pts)
            closed = np.vstack([pts, pts[:1]])
            self._spline_x = CubicSpline(ts, closed[:, 0], bc_type="periodic")
            self._spline_y = CubicSpline(ts, closed[:, 1], bc_type="periodic")

        t = self.params
        self.positions = self.position_at(t)
        d1 = self._derivative_at(t)
        d2 = self._second_derivative_at(t)
        self.speeds = np.hypot(d1[:, 0], d1[:, 1])
        self.tangents = d1 / self.speeds[:, None]
        # Outward normal of a counterclockwise curve: tangent rotated by -90 degrees.
        self.normals = np.column_stack([self.tangents[:, 1], -self.tangents[:, 0]])
        self.curvatures = (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]) / self.speeds ** 3

        check_t = np.linspace(0.0, 2.0 * np.pi, 8 * self.n_nodes, endpoint=False)
        cd1 = self._derivative_at(check_t)
        cd2 = self._second_derivative_at(check_t)
        csp = np.hypot(cd1[:, 0], cd1[:, 1])
        ck = (cd1[:, 0] * cd2[:, 1] - cd1[:, 1] * cd2[:, 0]) / csp ** 3
        if np.min(ck) < CURVATURE_FLOOR:
            raise NonConvex(
                "curvature lower bound violated: min kappa = %.3e < %.1e"
                % (np.min(ck), CURVATURE_FLOOR)
            )

        dt = 2.0 * np.pi / self.n_nodes
        self.perimeter = float(np.sum(self.speeds) * dt)

    # ------------------------------------------------------------------
    # curve evaluation

    def position_at(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "unit-disk":
            return np.stack([np.cos(t), np.sin(t)], axis=-1)
        if self.kind == "ellipse":
            return np.stack([self.a * np.cos(t), self.b * np.sin(t)], axis=-1)
        tm = np.mod(t, 2.0 * np.pi)
        return np.stack([self._spline_x(tm), self._spline_y(tm)], axis=-1)

    def _derivative_at(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "unit-disk":
            return np.stack([-np.sin(t), np.cos(t)], axis=-1)
        if self.kind == "ellipse":
            return np.stack([-self.a * np.sin(t), self.b * np.cos(t)], axis=-1)
        tm = np.mod(t, 2.0 * np.pi)
        return np.stack([self._spline_x(tm, 1), self._spline_y(tm, 1)], axis=-1)

    def _second_derivative_at(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "unit-disk":
            return np.stack([-np.cos(t), -np.sin(t)], axis=-1)
        if self.kind == "ellipse":
            return np.stack([-self.a * np.cos(t), -self.b * np.sin(t)], axis=-1)
        tm = np.mod(t, 2.0 * np.pi)
        return np.stack([self._spline_x(tm, 2), self._spline_y(tm, 2)], axis=-1)

    # ------------------------------------------------------------------
    # membership and distance

    def contains(self, points, tol=ON_BOUNDARY_TOL):
        """Closed-domain membership test, vectorized over points."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.kind == "unit-disk":
            inside = np.hypot(pts[:, 0], pts[:, 1]) <= 1.0 + tol
        elif self.kind == "ellipse":
            form = (pts[:, 0] / self.a) ** 2 + (pts[:, 1] / self.b) ** 2
            inside = form <= 1.0 + 2.0 * tol / min(self.a, self.b)
        else:
            inside = self._winding_inside(pts) | (self.distance_to_boundary(pts) <= tol)
        return inside if np.asarray(points).ndim == 2 else bool(inside[0])

    def _winding_inside(self, pts):
        # Ray-crossing parity against a dense polyline sample of the spline.
        t = np.linspace(0.0, 2.0 * np.pi, 8 * self.n_nodes, endpoint=False)
        poly = self.position_at(t)
        x0, y0 = poly[:, 0], poly[:, 1]
        x1, y1 = np.roll(x0, -1), np.roll(y0, -1)
        px = pts[:, 0][:, None]
        py = pts[:, 1][:, None]
        crosses = ((y0 > py) != (y1 > py)) & (
            px < (x1 - x0) * (py - y0) / (y1 - y0 + 1e-300) + x0
        )
        return np.sum(crosses, axis=1) % 2 == 1

    def distance_to_boundary(self, points):
        """Unsigned distance from each point to the curve (Newton-polished)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.kind == "unit-disk":
            d = np.abs(1.0 - np.hypot(pts[:, 0], pts[:, 1]))
            return d if np.asarray(points).ndim == 2 else float(d[0])
        t = np.linspace(0.0, 2.0 * np.pi, 8 * self.n_nodes, endpoint=False)
        cand = self.position_at(t)
        d2 = (pts[:, 0][:, None] - cand[None, :, 0]) ** 2 + (
            pts[:, 1][:, None] - cand[None, :, 1]
        ) ** 2
        u = t[np.argmin(d2, axis=1)]
        # Newton on d/du |w(u) - p|^2 = 0.
        for _ in range(6):
            w = self.position_at(u)
            dw = self._derivative_at(u)
            ddw = self._second_derivative_at(u)
            r = w - pts
            g = np.sum(r * dw, axis=1)
            gp = np.sum(dw * dw, axis=1) + np.sum(r * ddw, axis=1)
            step = g / np.where(np.abs(gp) > 1e-300, gp, 1e-300)
            u = u - np.clip(step, -0.5, 0.5)
        d = np.hypot(*(self.position_at(u) - pts).T)
        return d if np.asarray(points).ndim == 2 else float(d[0])

    def nearest_param(self, point):
        """Boundary parameter of the foot point closest to `point`."""
        p = _as_point(point)
        if self.kind == "unit-disk":
            return float(np.mod(np.arctan2(p[1], p[0]), 2.0 * np.pi))
        t = np.linspace(0.0, 2.0 * np.pi, 16 * self.n_nodes, endpoint=False)
        cand = self.position_at(t)
        u = t[np.argmin(np.sum((cand - p) ** 2, axis=1))]
        for _ in range(8):
            w = self.position_at(u)
            dw = self._derivative_at(u)
            ddw = self._second_derivative_at(u)
            r = w - p
            g = float(r @ dw)
            gp = float(dw @ dw + r @ ddw)
            if abs(gp) < 1e-300:
                break
            u = u - min(max(g / gp, -0.5), 0.5)
        return float(np.mod(u, 2.0 * np.pi))

    def interior_margin(self, n_spacings=3.0):
        """Margin below which quadrature kernels are under-resolved."""
        return n_spacings * self.perimeter / self.n_nodes

    # ------------------------------------------------------------------
    # ray casting

    def forward_hit(self, base, direction):
        """Distance and hit point of the forward ray from an interior base.

        For the unit disk the quadratic closed form is used; other kinds
        bracket the boundary-parameter root between the two straddling
        nodes and bisect.  The base must be strictly inside; boundary
        bases are handled by the chord routines.
        """
        p = _as_point(base)
        d = _as_point(direction)
        if self.kind == "unit-disk":
            pd = p @ d
            disc = pd * pd - p @ p + 1.0
            if disc < 0.0:
                raise NoIntersection("ray misses the unit circle")
            l = -pd + np.sqrt(disc)
            return float(l), p + l * d

        s = _cross(d, self.positions - p)
        s = np.where(s == 0.0, 1e-300, s)
        flips = np.nonzero(s * np.roll(s, -1) < 0.0)[0]
        hit = None
        for i in flips:
            lo = self.params[i]
            hi = lo + 2.0 * np.pi / self.n_nodes
            slo = s[i]
            for _ in range(BISECT_ITERS):
                mid = 0.5 * (lo + hi)
                sm = _cross(d, self.position_at(mid) - p)
                if sm == 0.0:
                    lo = hi = mid
                    break
                if (sm > 0.0) == (slo > 0.0):
                    lo = mid
                    slo = sm
                else:
                    hi = mid
            u = 0.5 * (lo + hi)
            w = self.position_at(u)
            l = float((w - p) @ d)
            if l > 0.0 and (hit is None or l < hit[0]):
                hit = (l, w)
        if hit is None:
            raise NoIntersection("forward ray cast found no boundary crossing")
        return hit

    def line_chord(self, p0, direction):
        """Both crossings of the full line p0 + t*direction with the curve.

        Returns (t_lo, t_hi) in line coordinates, or None when the line
        misses the closed domain.  p0 may lie outside.
        """
        p = _as_point(p0)
        d = _as_point(direction)
        if self.kind == "unit-disk":
            pd = p @ d
            disc = pd * pd - p @ p + 1.0
            if disc <= 0.0:
                return None
            r = np.sqrt(disc)
            return float(-pd - r), float(-pd + r)

        s = _cross(d, self.positions - p)
        s = np.where(s == 0.0, 1e-300, s)
        flips = np.nonzero(s * np.roll(s, -1) < 0.0)[0]
        if len(flips) < 2:
            return None
        ts = []
        for i in flips:
            lo = self.params[i]
            hi = lo + 2.0 * np.pi / self.n_nodes
            slo = s[i]
            for _ in range(BISECT_ITERS):
                mid = 0.5 * (lo + hi)
                sm = _cross(d, self.position_at(mid) - p)
                if sm == 0.0:
                    lo = hi = mid
                    break
                if (sm > 0.0) == (slo > 0.0):
                    lo = mid
                    slo = sm
                else:
                    hi = mid
            w = self.position_at(0.5 * (lo + hi))
            ts.append(float((w - p) @ d))
        return min(ts), max(ts)

    def chord_through_node(self, node_index, direction):
        """Full chord length through boundary node `node_index` along +-direction.

        The self-intersection at the node makes bracketed bisection
        degenerate for near-tangential directions (both parameter roots
        fall inside one node interval), so closed-kind curves use the
        quadratic with the known root t=0 factored out.
        """
        d = _as_point(direction)
        z = self.positions[node_index]
        if self.kind == "unit-disk":
            return float(2.0 * abs(z @ d))
        if self.kind == "ellipse":
            dp = np.array([d[0] / self.a, d[1] / self.b])
            zp = np.array([z[0] / self.a, z[1] / self.b])
            aa = dp @ dp
            bb = 2.0 * zp @ dp
            return float(abs(bb) / aa)
        return self._generic_chord_from_boundary(self.params[node_index], z, d)

    def _generic_chord_from_boundary(self, u0, z, d):
        # Far root of cross(d, w(u) - z) = 0, excluding the self root at u0.
        m = 4096
        t = np.mod(u0 + np.linspace(0.0, 2.0 * np.pi, m, endpoint=False), 2.0 * np.pi)
        s = _cross(d, self.position_at(t) - z)
        # A sample can land exactly on the far root (table nodes divide the
        # scan grid); keep its sign information instead of a hard zero.
        s = np.where(s == 0.0, 1e-300, s)
        gap = 2.0 * np.pi / m
        mask = np.minimum(np.abs(t - u0), 2.0 * np.pi - np.abs(t - u0)) > 2.0 * gap
        sm = np.where(mask, s, np.nan)
        idx = None
        for i in range(m - 1):
            if np.isfinite(sm[i]) and np.isfinite(sm[i + 1]) and (sm[i] > 0.0) != (sm[i + 1] > 0.0):
                idx = i
                break
        if idx is None:
            # Near-tangential: polish with Newton from the osculating estimate.
            du = self._derivative_at(u0)
            sp = float(np.hypot(du[0], du[1]))
            k = float(
                (du[0] * self._second_derivative_at(u0)[1] - du[1] * self._second_derivative_at(u0)[0])
                / sp ** 3
            )
            tang = du / sp
            sinpsi = _cross(tang, d)
            est = 2.0 * abs(sinpsi) / (k * sp) if k > 0 else 0.0
            if est == 0.0:
                return 0.0
            best = 0.0
            for sign in (1.0, -1.0):
                u = u0 + sign * est
                for _ in range(40):
                    su = _cross(d, self.position_at(u) - z)
                    dsu = _cross(d, self._derivative_at(u))
                    if abs(dsu) < 1e-300:
                        break
                    step = su / dsu
                    u = u - step
                    if abs(step) < 1e-15:
                        break
                w = self.position_at(u)
                du_final = np.mod(u - u0, 2.0 * np.pi)
                if min(du_final, 2.0 * np.pi - du_final) > 1e-12:
                    best = max(best, float(np.hypot(*(w - z))))
            return best
        lo = t[idx]
        hi = t[idx] + gap
        slo = sm[idx]
        for _ in range(BISECT_ITERS):
            mid = 0.5 * (lo + hi)
            smid = _cross(d, self.position_at(mid) - z)
            if smid == 0.0:
                lo = hi = mid
                break
            if (smid > 0.0) == (slo > 0.0):
                lo = mid
                slo = smid
            else:
                hi = mid
        w = self.position_at(0.5 * (lo + hi))
        return float(np.hypot(*(w - z)))

    def node_chord_lengths(self, directions):
        """Full chord lengths through every node for every direction.

        Parameters
        ----------
        directions : (M, 2) array of unit vectors.

        Returns
        -------
        (n_nodes, M) array of chord lengths.
        """
        dirs = np.asarray(directions, dtype=float)
        if self.kind == "unit-disk":
            return 2.0 * np.abs(self.positions @ dirs.T)
        if self.kind == "ellipse":
            dp = dirs / np.array([self.a, self.b])
            zp = self.positions / np.array([self.a, self.b])
            aa = np.sum(dp * dp, axis=1)
            bb = 2.0 * zp @ dp.T
            return np.abs(bb) / aa
        out = np.empty((self.n_nodes, len(dirs)))
        for j, d in enumerate(dirs):
            for i in range(self.n_nodes):
                out[i, j] = self.chord_through_node(i, d)
        return out

    # ------------------------------------------------------------------
    # complex views used by the boundary-integral operators

    def complex_nodes(self):
        return self.positions[:, 0] + 1j * self.positions[:, 1]

    def complex_velocity(self):
        d1 = self._derivative_at(self.params)
        return d1[:, 0] + 1j * d1[:, 1]

    def descriptor(self):
        """JSON-ready description used by the file formats."""
        desc = {"kind": self.kind, "n_nodes": self.n_nodes}
        if self.kind == "ellipse":
            desc["a"] = self.a
            desc["b"] = self.b
        if self.kind == "generic":
            desc["table"] = [[float(x), float(y)] for x, y in self.positions]
        return desc


def make_boundary(kind, n_nodes, a=1.0, b=1.0, table=None):
    """Construct a ConvexBoundary.

    Parameters
    ----------
    kind : str
        "unit-disk", "ellipse" (semi-axes a, b) or "generic" (point table).
        Config-file spellings "disk" and "table" are accepted as aliases.
    n_nodes : int
        Node count, at least 16.
    """
    kind = {"disk": "unit-disk", "table": "generic"}.get(kind, kind)
    if kind == "unit-disk":
        return ConvexBoundary("unit-disk", n_nodes)
    if kind == "ellipse":
        if a <= 0 or b <= 0:
            raise NonConvex("ellipse semi-axes must be positive")
        if a == b == 1.0:
            # Degenerate ellipse: identical to the unit disk, but keep the
            # requested kind so descriptors round-trip.
            return ConvexBoundary("ellipse", n_nodes, a=1.0, b=1.0)
        return ConvexBoundary("ellipse", n_nodes, a=a, b=b)
    if kind == "generic":
        return ConvexBoundary("generic", n_nodes, table=table)
    raise NonConvex("unknown boundary kind %r" % (kind,))


def cast_chord(boundary, x, theta):
    """Chord through x in direction theta.

    For x on the boundary the travel time on the outward side is zero and
    the other side carries the full chord; tangential directions give a
    degenerate chord (both times zero, strict convexity).
    """
    p = _as_point(x)
    d = _as_point(theta)
    d = d / np.hypot(d[0], d[1])
    if not boundary.contains(p):
        raise OutsideDomain("chord base %s lies outside the closed domain" % (p,))

    if boundary.distance_to_boundary(p[None, :])[0] <= ON_BOUNDARY_TOL:
        u0 = boundary.nearest_param(p)
        dw = boundary._derivative_at(u0)
        sp = np.hypot(dw[0], dw[1])
        normal = np.array([dw[1], -dw[0]]) / sp
        c = float(normal @ d)
        if abs(c) <= TOL_TANGENT:
            tau_p, tau_m = 0.0, 0.0
        else:
            idx = int(np.argmin(np.sum((boundary.positions - p) ** 2, axis=1)))
            if np.hypot(*(boundary.positions[idx] - p)) <= ON_BOUNDARY_TOL:
                full = boundary.chord_through_node(idx, d)
            else:
                full = boundary._generic_chord_from_boundary(u0, p, d) \
                    if boundary.kind == "generic" else _closed_form_boundary_chord(boundary, p, d)
            if c > 0.0:
                tau_p, tau_m = 0.0, full
            else:
                tau_p, tau_m = full, 0.0
    else:
        lp, _ = boundary.forward_hit(p, d)
        lm, _ = boundary.forward_hit(p, -d)
        tau_p, tau_m = lp, lm

    return Chord(
        base=p,
        direction=d,
        tau_plus=float(tau_p),
        tau_minus=float(tau_m),
        end_plus=p + tau_p * d,
        end_minus=p - tau_m * d,
    )


def _closed_form_boundary_chord(boundary, z, d):
    # Chord length from a boundary point, t=0 root factored out.
    if boundary.kind == "unit-disk":
        return float(2.0 * abs(z @ d))
    dp = np.array([d[0] / boundary.a, d[1] / boundary.b])
    zp = np.array([z[0] / boundary.a, z[1] / boundary.b])
    return float(abs(2.0 * zp @ dp) / (dp @ dp))


def radial_parametrization(boundary, xi, phi):
    """Boundary point seen from xi in direction phi.

    Returns (l, w) with w = xi + l (cos phi, sin phi) on the curve.
    """
    p = _as_point(xi)
    if not boundary.contains(p):
        raise OutsideDomain("radial parametrization base lies outside the domain")
    d = np.array([np.cos(phi), np.sin(phi)])
    if boundary.distance_to_boundary(p[None, :])[0] <= ON_BOUNDARY_TOL:
        u0 = boundary.nearest_param(p)
        dw = boundary._derivative_at(u0)
        sp = np.hypot(dw[0], dw[1])
        normal = np.array([dw[1], -dw[0]]) / sp
        c = float(normal @ d)
        if c >= -TOL_TANGENT:
            return 0.0, p
        idx = int(np.argmin(np.sum((boundary.positions - p) ** 2, axis=1)))
        if np.hypot(*(boundary.positions[idx] - p)) <= ON_BOUNDARY_TOL:
            l = boundary.chord_through_node(idx, d)
        elif boundary.kind == "generic":
            l = boundary._generic_chord_from_boundary(u0, p, d)
        else:
            l = _closed_form_boundary_chord(boundary, p, d)
        return float(l), p + l * d
    l, w = boundary.forward_hit(p, d)
    return float(l), w


def tau_angular_jump(boundary, z0, h_phi=1e-3):
    """Jump of the phi-derivative of the chord length across tangency.

    z0 may be a node index or a node position.  The chord length
    tau(z0, theta(phi)) vanishes at the tangential direction phi0 and
    grows like 2 R0 |sin(phi - phi0)| on both sides, so the derivative
    jump is estimated as (tau(phi0+h) + tau(phi0-h)) / h -> 4 R0.
    """
    if np.isscalar(z0) or (isinstance(z0, np.ndarray) and z0.ndim == 0):
        idx = int(z0)
    else:
        z = _as_point(z0)
        idx = int(np.argmin(np.sum((boundary.positions - z) ** 2, axis=1)))
        if np.hypot(*(boundary.positions[idx] - z)) > 1e-8:
            raise OutsideDomain("z0 is not a boundary node")
    tang = boundary.tangents[idx]
    phi0 = np.arctan2(tang[1], tang[0])
    tp = boundary.chord_through_node(idx, np.array([np.cos(phi0 + h_phi), np.sin(phi0 + h_phi)]))
    tm = boundary.chord_through_node(idx, np.array([np.cos(phi0 - h_phi), np.sin(phi0 - h_phi)]))
    return float((tp + tm) / h_phi)


def classify_boundary_pair(boundary, z, theta, tol_tangent=TOL_TANGENT):
    """Incoming / outgoing / tangential classification by sign of n . theta."""
    z = _as_point(z)
    d = _as_point(theta)
    idx = int(np.argmin(np.sum((boundary.positions - z) ** 2, axis=1)))
    c = float(boundary.normals[idx] @ d)
    if c > tol_tangent:
        return "outgoing"
    if c < -tol_tangent:
        return "incoming"
    return "tangential"
