"""Boundary-integral machinery for A-analytic maps.

An A-analytic map is a sequence-valued function <v_0, v_{-1}, v_{-2}, ...>
with dbar v_n + d v_{n-2} = 0.  Its boundary traces are characterized by
the kernel condition (I + i H_0) g = 0 with H_0 = i (S + G), where C and
S are the componentwise Cauchy integrals (interior and principal-value
boundary versions) and G couples modes k and k+2j through powers of
conj(w - xi)/(w - xi).  This module discretizes all of them with the
trapezoid rule on the uniform boundary parameter (spectrally accurate
for smooth periodic integrands), builds the interior map from its trace,
and evaluates the derivative formula recovering the source as
f = 2 Re(d v_{-1}).
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import TooCloseToBoundary, InconsistentInput, OutsideDomain
from .harmonics import ModeTrace, weighted_norms


class ModeField:
    """Mode data of an A-analytic map sampled at interior points.

    data[k, p] = v_{-k}(xi_p).
    """

    def __init__(self, points, n_modes, data, boundary=None):
        points = np.asarray(points, dtype=float)
        data = np.asarray(data, dtype=complex)
        if data.shape != (n_modes + 1, len(points)):
            raise ValueError("mode field shape mismatch")
        if not np.all(np.isfinite(data)):
            raise ValueError("mode field contains non-finite entries")
        self.points = points
        self.n_modes = int(n_modes)
        self.data = data
        self.boundary = boundary


@dataclass
class RangeResidual:
    """Residual of the range characterization with its summary norms."""

    residual: ModeTrace
    norm_l1: float
    norm_l11: float
    relative: float
    per_mode_max: np.ndarray

    def report(self):
        return {
            "norm_l1": self.norm_l1,
            "norm_l11": self.norm_l11,
            "relative": self.relative,
            "per_mode_max": [float(x) for x in self.per_mode_max],
        }


EPS_FLOOR = 1e-12


def _require_interior(boundary, points, margin):
    if margin is None:
        margin = boundary.interior_margin()
    z = _as_complex_points(points)
    pts = np.column_stack([z.real, z.imag])
    if not np.all(boundary.contains(pts)):
        raise OutsideDomain("evaluation point outside the closed domain")
    if margin <= 0.0:
        return
    d = boundary.distance_to_boundary(pts)
    if np.any(d < margin):
        worst = float(np.min(d))
        raise TooCloseToBoundary(
            "evaluation point %g from the boundary; margin is %g "
            "(pass margin=0 to override, or use the trace operators)"
            % (worst, margin)
        )


def _spectral_derivative(rows):
    """d/dt along the boundary parameter, row-wise, by FFT."""
    n = rows.shape[1]
    k = np.fft.fftfreq(n, d=1.0 / n)
    if n % 2 == 0:
        k[n // 2] = 0.0
    return np.fft.ifft(1j * k[None, :] * np.fft.fft(rows, axis=1), axis=1)


def op_C(g, xi, margin=None):
    """Interior Cauchy integral of every mode row at one point."""
    _require_interior(g.boundary, xi, margin)
    return _C_apply(g.data, g.boundary, _as_complex_points(xi))[:, 0]


def _as_complex_points(points):
    """Points as a 1-D complex array.

    Complex input (scalar or array) passes through; real input is read
    as (x, y) coordinate pairs, with a single bare scalar taken as a
    point on the real axis.
    """
    arr = np.asarray(points)
    if np.iscomplexobj(arr) or arr.ndim == 0:
        return np.atleast_1d(arr.astype(complex))
    arr = np.asarray(arr, dtype=float)
    if arr.ndim == 1 and arr.shape[0] == 2:
        return np.array([arr[0] + 1j * arr[1]])
    if arr.ndim == 1:
        return arr.astype(complex)
    return arr[:, 0] + 1j * arr[:, 1]


def _C_apply(g_data, boundary, targets):
    w = boundary.complex_nodes()
    wd = boundary.complex_velocity()
    dt = 2.0 * np.pi / boundary.n_nodes
    kernel = wd[None, :] / (w[None, :] - targets[:, None])
    out = np.einsum("ki,pi->kp", g_data, kernel, optimize=False)
    return out * (dt / (2.0j * np.pi))


def op_S(g):
    """Boundary principal-value Cauchy integral, componentwise.

    Uses singularity subtraction: the smooth difference quotient is
    integrated by the trapezoid rule with the diagonal replaced by its
    limit (the parameter derivative of the mode values, computed
    spectrally), and the subtracted constant contributes exactly itself
    since the p.v. integral of dw/(w - xi_0) over a smooth closed curve
    is pi*i.
    """
    return ModeTrace(g.boundary, g.n_modes, _S_apply(g.data, g.boundary))


def _S_apply(g_data, boundary):
    n = boundary.n_nodes
    w = boundary.complex_nodes()
    wd = boundary.complex_velocity()
    dt = 2.0 * np.pi / n
    diff = w[None, :] - w[:, None]           # [m, i] = w_i - w_m
    np.fill_diagonal(diff, 1.0)
    kernel = wd[None, :] / diff
    np.fill_diagonal(kernel, 0.0)
    row_sum = np.sum(kernel, axis=1)
    gdot = _spectral_derivative(g_data)
    smooth = (
        np.einsum("ki,mi->km", g_data, kernel, optimize=False)
        - g_data * row_sum[None, :]
        + gdot
    )
    return smooth * (dt / (1.0j * np.pi)) + g_data


def _G_kernel(boundary, targets, node_targets):
    """Base kernel and mode-coupling ratio of the operator G.

    targets: complex points; node_targets: for entries that are boundary
    nodes, their node index (else -1).  The kernel row for a node target
    gets the double-layer diagonal limit kappa |w'| / 2 and the ratio its
    tangential limit conj(w')/w'.
    """
    w = boundary.complex_nodes()
    wd = boundary.complex_velocity()
    dt = 2.0 * np.pi / boundary.n_nodes
    diff = w[None, :] - targets[:, None]
    ondiag = node_targets >= 0
    if np.any(ondiag):
        rows = np.nonzero(ondiag)[0]
        diff[rows, node_targets[rows]] = 1.0   # placeholder, replaced below
    base = (2.0 / np.pi) * np.imag(wd[None, :] / diff) * dt
    ratio = np.conj(diff) / diff
    if np.any(ondiag):
        cols = node_targets[rows]
        base[rows, cols] = (2.0 / np.pi) * (
            boundary.curvatures[cols] * np.abs(wd[cols]) / 2.0
        ) * dt
        ratio[rows, cols] = np.conj(wd[cols]) / wd[cols]
    return base, ratio


def _G_apply(g_data, boundary, targets, node_targets=None):
    """Apply G at arbitrary targets; Horner recursion over the j-powers."""
    n_rows = g_data.shape[0]
    if node_targets is None:
        node_targets = np.full(len(targets), -1, dtype=int)
    base, ratio = _G_kernel(boundary, targets, node_targets)
    out = np.zeros((n_rows, len(targets)), dtype=complex)
    acc = {0: None, 1: None}
    for k in range(n_rows - 3, -1, -1):
        par = k % 2
        term = np.broadcast_to(g_data[k + 2][None, :], ratio.shape)
        acc[par] = ratio * (term if acc[par] is None else term + acc[par])
        out[k] = np.sum(base * acc[par], axis=1)
    # rows N-1, N and any row without partners two above stay zero
    return out


def op_G(g, xi):
    """G applied to the trace, evaluated at one point of the closed domain.

    Interior points use the nonsingular kernel directly; a point
    coinciding with a boundary node gets the diagonal limit.
    """
    targets = _as_complex_points(xi)
    d2 = np.abs(g.boundary.complex_nodes() - targets[0])
    idx = int(np.argmin(d2))
    node = idx if d2[idx] <= 1e-12 else -1
    return _G_apply(g.data, g.boundary, targets, np.array([node]))[:, 0]


def _G_boundary(g_data, boundary):
    targets = boundary.complex_nodes()
    node_targets = np.arange(boundary.n_nodes)
    return _G_apply(g_data, boundary, targets, node_targets)


def hilbert_H0(g):
    """Hilbert transform of the trace: H0 g = i (S g + G g)."""
    data = 1.0j * (_S_apply(g.data, g.boundary) + _G_boundary(g.data, g.boundary))
    return ModeTrace(g.boundary, g.n_modes, data)


def _make_residual(res_data, in_data, boundary, n_modes):
    res = ModeTrace(boundary, n_modes, res_data)
    l11, _, l1 = weighted_norms(res)
    _, _, l1_in = weighted_norms(ModeTrace(boundary, n_modes, in_data))
    rel = l1 / max(l1_in, EPS_FLOOR)
    per_mode = np.max(np.abs(res_data), axis=1)
    return RangeResidual(res, l1, l11, rel, per_mode)


def range_residual_0(g):
    """Residual (I - S - G) g of the non-attenuated range condition.

    Identical to (I + i H0) g; zero exactly on traces of A-analytic maps.
    """
    res_data = g.data - _S_apply(g.data, g.boundary) - _G_boundary(g.data, g.boundary)
    return _make_residual(res_data, g.data, g.boundary, g.n_modes)


def cauchy_build(g, points, margin=None):
    """Interior A-analytic map from its trace: v_n = (1/2) G g + C g."""
    _require_interior(g.boundary, points, margin)
    targets = _as_complex_points(points)
    data = 0.5 * _G_apply(g.data, g.boundary, targets) + _C_apply(g.data, g.boundary, targets)
    pts = np.column_stack([targets.real, targets.imag])
    return ModeField(pts, g.n_modes, data, g.boundary)


def trace_plus(g):
    """Boundary limit of the Cauchy-built map: v+ = (1/2)Gg + (1/2)(S+I)g."""
    data = 0.5 * _G_boundary(g.data, g.boundary) + 0.5 * (
        _S_apply(g.data, g.boundary) + g.data
    )
    return ModeTrace(g.boundary, g.n_modes, data)


class CartesianGrid:
    """Regular Cartesian grid clipped to the domain interior.

    Points are ordered row-major with x varying fastest.  `valid` marks
    points inside the domain at roughly `margin` distance from the
    boundary; evaluation happens on the valid subset and `unflatten`
    scatters values back to the (ny, nx) picture with zeros elsewhere.
    """

    def __init__(self, boundary, nx, ny, margin=None, extent=None):
        if extent is None:
            lo = np.min(boundary.positions, axis=0)
            hi = np.max(boundary.positions, axis=0)
            extent = (lo[0], hi[0], lo[1], hi[1])
        self.boundary = boundary
        self.nx = int(nx)
        self.ny = int(ny)
        self.xs = np.linspace(extent[0], extent[1], nx)
        self.ys = np.linspace(extent[2], extent[3], ny)
        self.hx = float(self.xs[1] - self.xs[0]) if nx > 1 else 1.0
        self.hy = float(self.ys[1] - self.ys[0]) if ny > 1 else 1.0
        gx, gy = np.meshgrid(self.xs, self.ys)
        self.points_all = np.column_stack([gx.ravel(), gy.ravel()])
        self.margin = boundary.interior_margin() if margin is None else float(margin)
        inside = boundary.contains(self.points_all)
        dist = boundary.distance_to_boundary(self.points_all)
        self.valid = inside & (dist >= self.margin)
        self.points = self.points_all[self.valid]

    def unflatten(self, values, fill=0.0):
        out = np.full(self.ny * self.nx, fill, dtype=np.asarray(values).dtype)
        out[self.valid] = values
        return out.reshape(self.ny, self.nx)


def make_patch(boundary, nx, ny, half_width):
    """Fully interior Cartesian patch centered at the origin."""
    return CartesianGrid(
        boundary, nx, ny, margin=0.0,
        extent=(-half_width, half_width, -half_width, half_width),
    )


def aanaliticity_defect(field, grid):
    """Max finite-difference defect of dbar v_n + d v_{n-2} on a patch.

    The field must be sampled on a fully valid Cartesian patch; centered
    differences give dbar = (d_x + i d_y)/2 and d = (d_x - i d_y)/2 and
    the defect pairs stored rows k and k+2.
    """
    if not np.all(grid.valid):
        raise ValueError("a-analyticity defect needs a fully interior patch")
    n_rows = field.data.shape[0]
    pic = field.data.reshape(n_rows, grid.ny, grid.nx)
    dx = (pic[:, 1:-1, 2:] - pic[:, 1:-1, :-2]) / (2.0 * grid.hx)
    dy = (pic[:, 2:, 1:-1] - pic[:, :-2, 1:-1]) / (2.0 * grid.hy)
    dbar = 0.5 * (dx + 1.0j * dy)
    dee = 0.5 * (dx - 1.0j * dy)
    worst = 0.0
    for k in range(0, n_rows - 2):
        worst = max(worst, float(np.max(np.abs(dbar[k] + dee[k + 2]))))
    return worst


def del_v_minus(g, d, points, margin=None):
    """d v_{-d} at interior points from the trace, by explicit kernels.

    2 pi i times the value is the j-sum of dw-integrals with kernels
    j conj(w-xi)^{j-1}/(w-xi)^{j+1} against trace rows d + 2j - 2, minus
    the dconj(w)-integrals with (j-1) conj(w-xi)^{j-2}/(w-xi)^j.
    """
    _require_interior(g.boundary, points, margin)
    boundary = g.boundary
    targets = _as_complex_points(points)
    w = boundary.complex_nodes()
    wd = boundary.complex_velocity()
    dt = 2.0 * np.pi / boundary.n_nodes
    u = w[None, :] - targets[:, None]
    ratio = np.conj(u) / u
    acc = np.zeros_like(ratio)
    power = np.ones_like(ratio)          # ratio^(j-1)
    j = 1
    while d + 2 * j - 2 <= g.n_modes:
        row = g.data[d + 2 * j - 2]
        acc += (row * (j * wd))[None, :] * power
        if j >= 2:
            prev = power / ratio         # ratio^(j-2)
            acc -= (row * ((j - 1) * np.conj(wd)))[None, :] * prev
        power = power * ratio
        j += 1
    out = np.sum(acc / (u * u), axis=1) * dt
    return out / (2.0j * np.pi)


def reconstruct_f0(g, grid, margin=None, gate=0.05):
    """Source term from consistent non-attenuated boundary data.

    Returns the picture 2 Re(d v_{-1}) on the grid (zeros outside the
    evaluated region).  A residual above the gate only warns: the
    reconstruction formula stays well defined on inconsistent input, it
    just stops meaning anything.
    """
    check = range_residual_0(g)
    if check.relative > gate:
        warnings.warn(
            "range residual %.3g exceeds the gate %.3g; input may not be "
            "in range" % (check.relative, gate),
            InconsistentInput,
        )
    vals = 2.0 * np.real(del_v_minus(g, 1, grid.points, margin=margin))
    return grid.unflatten(vals)
