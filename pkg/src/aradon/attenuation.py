"""Integrating factors and the attenuated range machinery.

The special integrating factor h = Da - (1/2)(I - iH)Ra (with H the
finite Hilbert transform in the offset variable) has the property that
e^{-h} and e^{+h} carry only nonnegative angular Fourier modes.  Their
mode sequences alpha and beta conjugate the attenuated problem to the
non-attenuated one: H_a = beta * H_0 (alpha * .), the attenuated range
condition is (I + i H_a) applied to the nonpositive projection, and the
source is recovered from u = beta * v via f = 2 Re(d u_{-1}) + a u_0.

Factor builds validate their own algebra: alpha * beta must reproduce
the convolution identity and the negative modes of e^{+-h} must vanish
to tolerance, otherwise the build raises instead of guessing at signs.
"""

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import (
    SupportTouchesEdge,
    FactorBuildError,
    GridMismatch,
    InconsistentInput,
)
from .harmonics import ModeTrace, convolve, convolve_seq
from .bukhgeim import (
    hilbert_H0,
    _make_residual,
    cauchy_build,
    del_v_minus,
    reconstruct_f0,
    range_residual_0,
)
from .xray import QuadSettings, radon_profile, _batch_line_spans, _directions


def _fft_linear_convolve(a, b):
    n = len(a) + len(b) - 1
    nfft = 1
    while nfft < n:
        nfft *= 2
    return np.fft.irfft(np.fft.rfft(a, nfft) * np.fft.rfft(b, nfft), nfft)[:n]


def finite_hilbert(samples):
    """Finite Hilbert transform on a uniform grid, compact support inside.

    Evaluates (1/pi) p.v. integral of f(t)/(s - t) dt at every grid
    point by pairing t = s - u against t = s + u (the odd combination is
    regular at u = 0) plus the trapezoid endpoint term, which restores
    second-order accuracy:

        H_i = (1/pi) [ sum_{k>=1} (f_{i-k} - f_{i+k})/k - (f_{i+1} - f_{i-1})/2 ]

    The grid spacing cancels.  Endpoint samples must vanish: the scheme
    assumes the support is strictly inside the grid.
    """
    f = np.asarray(samples, dtype=float)
    n = len(f)
    if n < 4:
        raise ValueError("need at least 4 samples")
    if abs(f[0]) > 1e-12 or abs(f[-1]) > 1e-12:
        raise SupportTouchesEdge(
            "endpoint samples are %.3g / %.3g, expected 0" % (f[0], f[-1])
        )
    shifts = np.arange(1 - n, n, dtype=float)
    kern = np.where(shifts == 0.0, 0.0, 1.0 / np.where(shifts == 0.0, 1.0, shifts))
    pair_sum = _fft_linear_convolve(f, kern)[n - 1:2 * n - 1]
    corr = np.zeros(n)
    corr[1:-1] = (f[2:] - f[:-2]) / 2.0
    corr[0] = f[1] / 2.0
    corr[-1] = -f[-2] / 2.0
    return (pair_sum - corr) / np.pi


class IntegratingFactor:
    """h on the boundary cylinder with the mode sequences of e^{-+h}."""

    def __init__(self, boundary, angular, n_modes, h_boundary, alpha, beta,
                 zero_attenuation, a_info, tol_neg, max_neg_mode,
                 max_identity_dev, interior=None):
        self.boundary = boundary
        self.angular = angular
        self.n_modes = int(n_modes)
        self.h_boundary = h_boundary        # (n_nodes, M) complex
        self.alpha = alpha                  # (N+1, n_nodes), modes of e^{-h}
        self.beta = beta                    # (N+1, n_nodes), modes of e^{+h}
        self.zero_attenuation = bool(zero_attenuation)
        self.a_info = dict(a_info or {})
        self.tol_neg = float(tol_neg)
        self.max_neg_mode = float(max_neg_mode)
        self.max_identity_dev = float(max_identity_dev)
        self.interior = interior


class InteriorFactors:
    """Factor data on the inside points of a Cartesian grid."""

    def __init__(self, grid, inside, h, alpha, beta, a_values):
        self.grid = grid
        self.inside = inside                # bool (ny*nx,)
        self.h = h                          # (p_in, M)
        self.alpha = alpha                  # (N+1, p_in)
        self.beta = beta                    # (N+1, p_in)
        self.a_values = a_values            # (p_in,)


def _identity_rows(n_modes, n_cols):
    rows = np.zeros((n_modes + 1, n_cols), dtype=complex)
    rows[0] = 1.0
    return rows


def _factor_modes(h_values, n_modes, tol_neg, what):
    """Nonnegative mode sequences of e^{-h} and e^{+h}, with validation."""
    m = h_values.shape[1]
    em = np.exp(-h_values)
    ep = np.exp(+h_values)
    cm = np.fft.fft(em, axis=1) / m
    cp = np.fft.fft(ep, axis=1) / m
    neg = 0.0
    n_neg = min(n_modes, m // 2 - 1)
    if n_neg >= 1:
        neg_idx = m - np.arange(1, n_neg + 1)
        neg = max(float(np.max(np.abs(cm[:, neg_idx]))),
                  float(np.max(np.abs(cp[:, neg_idx]))))
    alpha = cm[:, : n_modes + 1].T.copy()
    beta = cp[:, : n_modes + 1].T.copy()
    if neg > tol_neg:
        raise FactorBuildError(
            "negative angular modes of e^{+-h} reach %.3g > %.3g on the %s; "
            "h is inconsistent with the vanishing-mode structure" % (neg, tol_neg, what)
        )
    return alpha, beta, neg


def _seq_product_deviation(alpha, beta):
    """Max deviation of the product sequence alpha * beta from <1,0,...>."""
    prod = convolve_seq(alpha, beta)
    prod[0] -= 1.0
    return float(np.max(np.abs(prod)))


def default_s_grid(boundary, n_samples=2048):
    radius = float(np.max(np.hypot(*boundary.positions.T)))
    return np.linspace(-1.2 * radius, 1.2 * radius, n_samples)


def _chord_integrals(a, starts, taus, direction, quad):
    """Ray integrals of `a` from each start over length tau, one direction."""
    frac, wts = quad.nodes_weights()
    s = taus[:, None] * frac[None, :]
    pts = starts[:, None, :] + s[:, :, None] * direction[None, None, :]
    vals = a(pts)
    return taus * np.einsum("mk,k->m", vals, wts, optimize=False)


def build_h(a, boundary, angular, n_modes, quad=None, s_grid=None,
            interior_grid=None, tol_neg=1e-6, tol_identity=1e-8):
    """Integrating factor of the attenuation on the boundary cylinder.

    Computes h(z, theta) = Da(z, theta) - (1/2)(I - iH) Ra(z.theta_perp,
    theta) at every boundary node and direction (and on the inside points
    of `interior_grid` when reconstruction needs interior factors), then
    projects e^{-+h} onto their nonnegative mode sequences.  The finite
    Hilbert transform runs per direction on the offset grid `s_grid`
    (default 2048 samples across 1.2x the domain radius).
    """
    quad = quad or QuadSettings()
    angular.check_modes(n_modes)
    m_ang = angular.n_angles
    n = boundary.n_nodes

    if a.is_zero:
        h_b = np.zeros((n, m_ang), dtype=complex)
        interior = None
        if interior_grid is not None:
            inside = interior_grid.boundary.contains(interior_grid.points_all)
            p_in = int(np.sum(inside))
            interior = InteriorFactors(
                interior_grid, inside,
                np.zeros((p_in, m_ang), dtype=complex),
                _identity_rows(n_modes, p_in),
                _identity_rows(n_modes, p_in),
                np.zeros(p_in),
            )
        return IntegratingFactor(
            boundary, angular, n_modes, h_b,
            _identity_rows(n_modes, n), _identity_rows(n_modes, n),
            True, {"name": "zero", "params": {}}, tol_neg, 0.0, 0.0,
            interior,
        )

    if s_grid is None:
        s_grid = default_s_grid(boundary)
    s_grid = np.asarray(s_grid, dtype=float)
    dirs = _directions(angular.angles)
    taus = boundary.node_chord_lengths(dirs)
    normal_dot = boundary.normals @ dirs.T

    int_pts = None
    if interior_grid is not None:
        inside = interior_grid.boundary.contains(interior_grid.points_all)
        int_pts = interior_grid.points_all[inside]
        h_i = np.zeros((len(int_pts), m_ang), dtype=complex)

    h_b = np.zeros((n, m_ang), dtype=complex)
    for j in range(m_ang):
        th = dirs[j]
        perp = np.array([-th[1], th[0]])
        ra = radon_profile(a, boundary, th, s_grid, quad)
        hr = finite_hilbert(ra)
        ra_spline = CubicSpline(s_grid, ra)
        hr_spline = CubicSpline(s_grid, hr)

        # Da at boundary nodes: zero on outgoing/tangential rays, the
        # full chord integral on incoming ones.
        da_b = np.zeros(n)
        incoming = normal_dot[:, j] < 0.0
        if np.any(incoming):
            da_b[incoming] = _chord_integrals(
                a, boundary.positions[incoming], taus[incoming, j], th, quad
            )
        s_b = boundary.positions @ perp
        h_b[:, j] = da_b - 0.5 * (ra_spline(s_b) - 1.0j * hr_spline(s_b))

        if int_pts is not None and len(int_pts):
            _, t_fwd, ok = _batch_line_spans(boundary, int_pts, th)
            tau_fwd = np.where(ok, t_fwd, 0.0)
            da_i = _chord_integrals(a, int_pts, tau_fwd, th, quad)
            s_i = int_pts @ perp
            h_i[:, j] = da_i - 0.5 * (ra_spline(s_i) - 1.0j * hr_spline(s_i))

    alpha, beta, neg = _factor_modes(h_b, n_modes, tol_neg, "boundary")
    dev = _seq_product_deviation(alpha, beta)
    if dev > tol_identity:
        raise FactorBuildError(
            "alpha * beta deviates from the identity sequence by %.3g > %.3g"
            % (dev, tol_identity)
        )

    interior = None
    if int_pts is not None:
        alpha_i, beta_i, neg_i = _factor_modes(h_i, n_modes, tol_neg, "interior grid")
        neg = max(neg, neg_i)
        interior = InteriorFactors(interior_grid, inside, h_i, alpha_i, beta_i,
                                   a(int_pts))

    return IntegratingFactor(
        boundary, angular, n_modes, h_b, alpha, beta, False,
        {"name": a.name, "params": a.params}, tol_neg, neg, dev, interior,
    )


def _check_match(g, factors):
    if g.boundary.n_nodes != factors.boundary.n_nodes or \
            g.boundary.kind != factors.boundary.kind:
        raise GridMismatch("trace and factors live on different boundaries")
    if g.n_modes != factors.n_modes:
        raise GridMismatch(
            "trace has N=%d but factors were built for N=%d"
            % (g.n_modes, factors.n_modes)
        )


def hilbert_Ha(g, factors):
    """Attenuated Hilbert transform: beta * H0(alpha * g), per node."""
    _check_match(g, factors)
    if factors.zero_attenuation:
        return hilbert_H0(g)
    ag = convolve(factors.alpha, g.data)
    h0 = hilbert_H0(ModeTrace(g.boundary, g.n_modes, ag))
    return ModeTrace(g.boundary, g.n_modes, convolve(factors.beta, h0.data))


def range_residual_a(g, factors):
    """Residual of the attenuated range condition, (I + i H_a) g."""
    _check_match(g, factors)
    res_data = g.data + 1.0j * hilbert_Ha(g, factors).data
    return _make_residual(res_data, g.data, g.boundary, g.n_modes)


def residual_route_gap(g, factors):
    """Max gap between the two equivalent residual formulations.

    Route one applies (I + i H_a) directly; route two conjugates by the
    factors, applying (I + i H_0) to alpha * g and convolving the result
    by beta.  They agree up to the alpha * beta identity defect.
    """
    _check_match(g, factors)
    r1 = range_residual_a(g, factors).residual.data
    ag = convolve(factors.alpha, g.data)
    inner = ag + 1.0j * hilbert_H0(ModeTrace(g.boundary, g.n_modes, ag)).data
    r2 = convolve(factors.beta, inner)
    return float(np.max(np.abs(r1 - r2)))


def reconstruct_f_attenuated(g, factors, grid, margin=None, gate=0.05):
    """Source reconstruction from attenuated boundary data.

    Builds v from the conjugated trace alpha * g, forms u = beta * v on
    the grid, and evaluates f = 2 Re(d u_{-1}) + a u_0.  The derivative
    of u splits by the product rule: d v modes come from the explicit
    boundary kernels, d beta from centered differences of the interior
    factor grid (beta is smooth; v is the singular part).
    """
    _check_match(g, factors)
    if factors.zero_attenuation:
        return reconstruct_f0(g, grid, margin=margin, gate=gate)

    check = range_residual_a(g, factors)
    if check.relative > gate:
        import warnings

        warnings.warn(
            "attenuated range residual %.3g exceeds the gate %.3g"
            % (check.relative, gate),
            InconsistentInput,
        )

    if factors.interior is None or factors.interior.grid is not grid:
        if factors.interior is None:
            raise GridMismatch("factors carry no interior data; rebuild with interior_grid")
        gi = factors.interior.grid
        same = (
            gi.nx == grid.nx and gi.ny == grid.ny
            and np.allclose(gi.xs, grid.xs) and np.allclose(gi.ys, grid.ys)
        )
        if not same:
            raise GridMismatch("factors were built on a different interior grid")

    inter = factors.interior
    n_modes = g.n_modes
    ag_trace = ModeTrace(g.boundary, n_modes, convolve(factors.alpha, g.data))

    eval_mask = grid.valid & inter.inside
    pts = grid.points_all[eval_mask]
    v = cauchy_build(ag_trace, pts, margin=margin)

    # factor rows mapped onto the full picture for finite differences
    ny, nx = grid.ny, grid.nx
    beta_pic = np.full((n_modes + 1, ny * nx), np.nan, dtype=complex)
    beta_pic[:, inter.inside] = inter.beta
    beta_pic = beta_pic.reshape(n_modes + 1, ny, nx)
    dbx = np.full_like(beta_pic, np.nan)
    dby = np.full_like(beta_pic, np.nan)
    dbx[:, :, 1:-1] = (beta_pic[:, :, 2:] - beta_pic[:, :, :-2]) / (2.0 * grid.hx)
    dby[:, 1:-1, :] = (beta_pic[:, 2:, :] - beta_pic[:, :-2, :]) / (2.0 * grid.hy)
    del_beta_pic = 0.5 * (dbx - 1.0j * dby)
    del_beta = del_beta_pic.reshape(n_modes + 1, ny * nx)[:, eval_mask]
    fd_ok = np.all(np.isfinite(del_beta), axis=0)

    # positions of the eval points inside the interior-point list
    inside_idx = np.cumsum(inter.inside) - 1
    take = inside_idx[eval_mask]
    beta_here = inter.beta[:, take]
    a_here = inter.a_values[take]

    u0 = np.real(np.sum(beta_here * v.data, axis=0))

    del_u1 = np.zeros(len(pts), dtype=complex)
    for k in range(0, n_modes):
        dv = del_v_minus(ag_trace, 1 + k, pts, margin=margin)
        del_u1 += beta_here[k] * dv
        db = np.where(fd_ok, del_beta[k], 0.0)
        del_u1 += db * v.data[1 + k]

    f_vals = 2.0 * np.real(del_u1) + a_here * u0
    f_vals = np.where(fd_ok, f_vals, 0.0)
    out = np.zeros(ny * nx)
    out[eval_mask] = f_vals
    return out.reshape(ny, nx)
