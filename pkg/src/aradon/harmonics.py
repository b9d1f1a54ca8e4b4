"""Angular Fourier analysis on the boundary cylinder Gamma x S^1.

Boundary data g(z, theta) is reduced to its nonpositive angular modes:
a ModeTrace stores rows k = 0..N with row k holding g_{-k} at every
boundary node.  The module provides the projections onto nonpositive and
nonnegative modes, reassembly of the real-valued function, truncated
sequence convolution, the weighted norms used as decay diagnostics, and
the two summation identities for nonnegative sequences that underpin the
convolution norm bounds.

All angular grids are uniform, phi_j = 2 pi j / M, and projections are
plain DFTs: exact for trigonometric polynomials of degree <= N whenever
M >= 2N+2.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import GridTooCoarse, NegativeEntry


@dataclass(frozen=True)
class AngularGrid:
    """Uniform grid on the circle of directions."""

    n_angles: int
    angles: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.n_angles < 4:
            raise GridTooCoarse("angular grid needs at least 4 samples")
        object.__setattr__(
            self, "angles", 2.0 * np.pi * np.arange(self.n_angles) / self.n_angles
        )

    def check_modes(self, n_modes):
        if self.n_angles < 2 * n_modes + 2:
            raise GridTooCoarse(
                "M = %d angles cannot resolve N = %d modes (need M >= 2N+2)"
                % (self.n_angles, n_modes)
            )


class ModeTrace:
    """Nonpositive angular modes of boundary data.

    data[k, i] = g_{-k}(z_i) for k = 0..n_modes, i over boundary nodes.
    """

    def __init__(self, boundary, n_modes, data):
        data = np.asarray(data, dtype=complex)
        if n_modes < 1:
            raise ValueError("n_modes must be >= 1")
        if data.shape != (n_modes + 1, boundary.n_nodes):
            raise ValueError(
                "mode data shape %r does not match (N+1, n_nodes) = %r"
                % (data.shape, (n_modes + 1, boundary.n_nodes))
            )
        if not np.all(np.isfinite(data)):
            raise ValueError("mode data contains non-finite entries")
        self.boundary = boundary
        self.n_modes = int(n_modes)
        self.data = data

    def copy(self):
        return ModeTrace(self.boundary, self.n_modes, self.data.copy())


class ModeSeq:
    """One-point sequence of nonnegative-index coefficients, k = 0..N."""

    def __init__(self, coeffs):
        coeffs = np.asarray(coeffs, dtype=complex)
        if coeffs.ndim != 1 or len(coeffs) < 1:
            raise ValueError("ModeSeq expects a nonempty 1-D coefficient vector")
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("ModeSeq coefficients must be finite")
        self.coeffs = coeffs

    def __len__(self):
        return len(self.coeffs)


def _mode_matrix(g):
    """Accept ModeTrace, ModeSeq, or a raw array; return (matrix, wrap)."""
    if isinstance(g, ModeTrace):
        return g.data, "trace"
    if isinstance(g, ModeSeq):
        return g.coeffs[:, None], "seq"
    arr = np.asarray(g, dtype=complex)
    if arr.ndim == 1:
        return arr[:, None], "vec"
    return arr, "mat"


def project_minus(g, n_modes):
    """Project a sinogram onto its nonpositive angular modes.

    Parameters
    ----------
    g : Sinogram
        Real samples on boundary nodes x uniform angular grid.
    n_modes : int
        Truncation level N.

    Returns
    -------
    ModeTrace with row k = g_{-k}, computed as (1/M) sum_j g_j e^{+ik phi_j}.
    """
    values = np.asarray(g.data, dtype=float)
    m = values.shape[1]
    if m < 2 * n_modes + 2:
        raise GridTooCoarse(
            "sinogram with %d angles cannot resolve %d modes" % (m, n_modes)
        )
    # ifft carries the e^{+i k phi_j} kernel and the 1/M factor.
    modes = np.fft.ifft(values, axis=1)[:, : n_modes + 1]
    return ModeTrace(g.boundary, n_modes, modes.T.copy())


def project_plus(h_samples, n_modes):
    """Nonnegative-mode coefficients of angular samples at one point."""
    vals = np.asarray(h_samples, dtype=complex)
    m = len(vals)
    if m < 2 * n_modes + 2:
        raise GridTooCoarse(
            "%d angular samples cannot resolve %d modes" % (m, n_modes)
        )
    coeffs = np.fft.fft(vals) / m
    return ModeSeq(coeffs[: n_modes + 1])


def assemble_real(v, phi):
    """Evaluate the real-valued function carried by nonpositive modes.

    Returns g_0 + 2 Re sum_{n>=1} g_{-n} e^{-i n phi}.  For a ModeTrace
    the result has shape (n_nodes,) per angle; phi may be scalar or a
    vector of angles (then an extra trailing axis is added).
    """
    mat, wrap = _mode_matrix(v)
    n = mat.shape[0] - 1
    phi_arr = np.atleast_1d(np.asarray(phi, dtype=float))
    kernel = np.exp(-1j * np.outer(np.arange(1, n + 1), phi_arr))  # (N, n_phi)
    out = np.real(mat[0][:, None]) + 2.0 * np.real(
        np.einsum("kc,kp->cp", mat[1:], kernel, optimize=False)
    )
    if np.isscalar(phi) or np.asarray(phi).ndim == 0:
        out = out[:, 0]
    if wrap in ("seq", "vec"):
        out = out[0] if out.ndim == 1 else out[0, :]
        return float(out) if np.ndim(out) == 0 else out
    return out


def convolve(a, g):
    """Truncated convolution of a nonnegative-index sequence with g.

    The single signed-index formula (a * g)_n = sum_k a_k g_{n-k} lands
    in two storage layouts.  When g holds nonpositive modes (ModeTrace
    or a bare mode matrix), row m is index -m and the sum runs while
    m + k <= N; terms that would reach below -N are dropped.  When g is
    itself a nonnegative-index sequence (ModeSeq or 1-D vector), the sum
    is the power-series product sum_{k<=m} a_k g_{m-k} and nothing
    truncates.  `a` is a ModeSeq or vector, optionally per-node with
    shape (N+1, n_nodes).  The result matches g's type.
    """
    amat, _ = _mode_matrix(a)
    gmat, wrap = _mode_matrix(g)
    n = gmat.shape[0] - 1
    if amat.shape[0] != n + 1:
        raise ValueError("sequence lengths differ: %d vs %d" % (amat.shape[0], n + 1))
    out = np.zeros_like(gmat)
    if wrap in ("seq", "vec"):
        for m in range(n + 1):
            out[m] = np.sum(amat[: m + 1] * gmat[m::-1], axis=0)
        return ModeSeq(out[:, 0]) if wrap == "seq" else out[:, 0]
    for m in range(n + 1):
        # a broadcasts over columns whether stored per-node or globally
        out[m] = np.sum(amat[: n + 1 - m] * gmat[m:], axis=0)
    if wrap == "trace":
        return ModeTrace(g.boundary, n, out)
    return out


def convolve_seq(a, b):
    """Power-series convolution of two nonnegative-index sequences.

    Accepts per-node matrices of shape (N+1, n_cols); columns convolve
    independently.  All index sums stay within 0..N, so no terms drop.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape[0] != b.shape[0]:
        raise ValueError("sequence lengths differ: %d vs %d" % (a.shape[0], b.shape[0]))
    out = np.zeros(np.broadcast_shapes(a.shape, b.shape), dtype=complex)
    for m in range(a.shape[0]):
        out[m] = np.sum(a[: m + 1] * b[m::-1], axis=0)
    return out


def identity_seq(n_modes):
    """Convolution identity <1, 0, 0, ...>."""
    e = np.zeros(n_modes + 1, dtype=complex)
    e[0] = 1.0
    return ModeSeq(e)


def weighted_norms(v):
    """Truncated decay norms of a mode trace.

    Returns (l11, l12, l1): sup over nodes of sum_k k |v_{-k}|,
    sum_k k^2 |v_{-k}|, and sum_k |v_{-k}|.
    """
    mat, _ = _mode_matrix(v)
    k = np.arange(mat.shape[0], dtype=float)
    absv = np.abs(mat)
    l1 = float(np.max(np.sum(absv, axis=0)))
    l11 = float(np.max(np.sum(k[:, None] * absv, axis=0)))
    l12 = float(np.max(np.sum((k ** 2)[:, None] * absv, axis=0)))
    return l11, l12, l1


def lemma21_identity(c):
    """Both sides of the two summation identities for nonnegative sequences.

    The input vector holds c_1..c_J (c[i] is the coefficient of index
    i+1).  Identity (i): sum_{k>=1} sum_{n>=0} k c_{k+n} equals
    sum_j j(j+1)/2 c_j.  Identity (ii): the same double sum without the
    factor k equals sum_j j c_j.  Left sides are computed by a literal
    double loop, right sides by the weighted single sums.
    """
    c = np.asarray(c, dtype=float)
    if c.ndim != 1:
        raise ValueError("expected a 1-D vector")
    if np.any(c < 0.0):
        raise NegativeEntry("sequence entries must be nonnegative")
    jmax = len(c)

    def cval(j):
        return c[j - 1] if 1 <= j <= jmax else 0.0

    lhs_i = 0.0
    lhs_ii = 0.0
    for k in range(1, jmax + 1):
        for n in range(0, jmax - k + 1):
            lhs_i += k * cval(k + n)
            lhs_ii += cval(k + n)
    j = np.arange(1, jmax + 1, dtype=float)
    rhs_i = float(np.sum(j * (j + 1) / 2.0 * c))
    rhs_ii = float(np.sum(j * c))
    return lhs_i, rhs_i, lhs_ii, rhs_ii


def bernstein_growth(v, order=1):
    """Cumulative weighted mode sums, a smoothness diagnostic.

    Returns the curve C_m = sup over nodes of sum_{n<=m} n^order |v_{-n}|
    for m = 0..N.  A curve still climbing at m = N signals that the
    truncation level is too small for the data's smoothness.
    """
    mat, _ = _mode_matrix(v)
    k = np.arange(mat.shape[0], dtype=float) ** order
    weighted = k[:, None] * np.abs(mat)
    return np.max(np.cumsum(weighted, axis=0), axis=1)
