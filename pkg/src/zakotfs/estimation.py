"""Effective-channel estimation from the embedded pilot and the
delay-Doppler input-output prediction built on it.

The receiver reads the channel off the guard neighbourhood of the pilot
cell, keeps taps only inside a declared support region, and turns the
result into a sparse linear operator for MMSE equalization.  Doppler tap
indices are signed, l in [-N/2, N/2), stored in the grid at column
l mod N; delay tap indices are signed as well, relative to the pilot row
M/2, stored at row k mod M.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse

from .dd_frame import FrameLayout
from .zak import ROLE_CHANNEL, DDGrid, dzt, extend, idzt


@dataclass(frozen=True)
class SupportRegion:
    """Delay-Doppler index set assumed to hold every effective-channel tap.

    kind 'C1' covers [kappa2, kappa3) in absolute delay bins, the span of
    the physical paths alone; 'C2' covers [kappa1, kappa4), one widened
    margin that also absorbs uncorrected timing and CFO leakage.  Doppler
    is always the full signed range.
    """

    kind: str
    k_lo: int
    k_hi: int
    m: int
    n: int

    def __post_init__(self):
        if self.kind not in ("C1", "C2"):
            raise ValueError(f"unknown support kind {self.kind!r}")
        if not 0 <= self.k_lo < self.k_hi <= self.m:
            raise ValueError(
                f"delay range [{self.k_lo}, {self.k_hi}) does not fit a "
                f"grid with {self.m} delay bins"
            )

    @classmethod
    def from_layout(cls, layout: FrameLayout, kind: str) -> "SupportRegion":
        if kind == "C1":
            lo, hi = layout.kappa2, layout.kappa3
        elif kind == "C2":
            lo, hi = layout.kappa1, layout.kappa4
        else:
            raise ValueError(f"unknown support kind {kind!r}")
        return cls(kind=kind, k_lo=lo, k_hi=hi, m=layout.m, n=layout.n)

    @property
    def size(self) -> int:
        return (self.k_hi - self.k_lo) * self.n

    def delay_taps(self) -> np.ndarray:
        """Signed delay tap indices (absolute bin minus M/2)."""
        return np.arange(self.k_lo, self.k_hi) - self.m // 2

    def doppler_taps(self) -> np.ndarray:
        """Signed Doppler tap indices, -N/2 .. N/2-1."""
        return np.arange(self.n) - self.n // 2

    def contains(self, k: int, l: int) -> bool:
        """Membership test on signed tap indices."""
        return (self.k_lo - self.m // 2 <= k < self.k_hi - self.m // 2
                and -self.n // 2 <= l < self.n // 2)


@dataclass(frozen=True)
class EffectiveChannelEstimate:
    """Sparse DD channel taps plus the support they were read on."""

    taps: DDGrid
    support: SupportRegion
    pilot_amp: float

    def __post_init__(self):
        if self.taps.m != self.support.m or self.taps.n != self.support.n:
            raise ValueError("tap grid and support dimensions disagree")

    def tap_items(self):
        """Yield (k, l, value) over the support with signed indices."""
        v = self.taps.values
        for k in self.support.delay_taps():
            for l in self.support.doppler_taps():
                yield k, l, v[k % self.support.m, l % self.support.n]

    def peak(self) -> tuple[int, int]:
        """Signed (k, l) of the largest-magnitude tap."""
        best, at = -1.0, (0, 0)
        for k, l, val in self.tap_items():
            mag = abs(val)
            if mag > best:
                best, at = mag, (k, l)
        return at


def estimate(y_dd: DDGrid, layout: FrameLayout, support: SupportRegion,
             pilot_amp: float) -> EffectiveChannelEstimate:
    """Read the effective channel from the received pilot neighbourhood.

    h[k, l] = y_dd[k + M/2, l + N/2] * exp(-j*pi*l/N) / pilot_amp inside
    the support, zero outside.  The phase factor removes the transmit
    twist the pilot position imprints on every echo.
    """
    if pilot_amp <= 0:
        raise ValueError("pilot_amp must be positive")
    m, n = y_dd.m, y_dd.n
    if layout.k_p != m // 2 or layout.l_p != n // 2:
        raise ValueError("estimation assumes the pilot sits at (M/2, N/2)")
    if support.m != m or support.n != n:
        raise ValueError("support was built for a different grid size")

    taps = np.zeros((m, n), dtype=np.complex128)
    ls = support.doppler_taps()
    phase = np.exp(-1j * np.pi * ls / n)
    for k_abs in range(support.k_lo, support.k_hi):
        k = k_abs - m // 2
        row = y_dd.values[k_abs, (ls + n // 2) % n] * phase / pilot_amp
        taps[k % m, ls % n] = row
    grid = DDGrid(values=taps, role=ROLE_CHANNEL)
    return EffectiveChannelEstimate(taps=grid, support=support,
                                    pilot_amp=float(pilot_amp))


def manual_taps(entries: dict[tuple[int, int], complex],
                support: SupportRegion,
                pilot_amp: float = 1.0) -> EffectiveChannelEstimate:
    """Build an estimate directly from {(k, l): gain} signed tap entries."""
    taps = np.zeros((support.m, support.n), dtype=np.complex128)
    for (k, l), g in entries.items():
        if not support.contains(k, l):
            raise ValueError(f"tap ({k}, {l}) falls outside the support")
        taps[k % support.m, l % support.n] = g
    grid = DDGrid(values=taps, role=ROLE_CHANNEL)
    return EffectiveChannelEstimate(taps=grid, support=support,
                                    pilot_amp=float(pilot_amp))


def predict_io(s_dd: DDGrid, h: EffectiveChannelEstimate) -> DDGrid:
    """Twisted convolution of the channel taps with the extended frame.

    y[k, l] = sum over taps (k', l') of
        h[k', l'] * s_ext[k - k', l - l'] * exp(j*2*pi*(k - k')*l'/(M*N))
    with s_ext the quasi-periodic extension, so the output is itself
    quasi-periodic.
    """
    m, n = s_dd.m, s_dd.n
    kk = np.arange(m)[:, None]
    ll = np.arange(n)[None, :]
    out = np.zeros((m, n), dtype=np.complex128)
    for k, l, val in h.tap_items():
        if val == 0:
            continue
        dk = kk - k
        dl = ll - l
        wrap = np.exp(2j * np.pi * (dk // m) * dl / n)
        twist = np.exp(2j * np.pi * dk * l / (m * n))
        shifted = s_dd.values[dk % m, dl % n]
        out += val * shifted * wrap * twist
    return DDGrid(values=out, role=s_dd.role)


def build_io_matrix(h: EffectiveChannelEstimate,
                    layout: FrameLayout) -> scipy.sparse.csr_matrix:
    """Matrix H with vec(y) = H @ vec(s) reproducing predict_io.

    vec ordering is row-major over (delay, Doppler).  Each tap lands one
    phased entry per grid cell, so rows carry at most |support| nonzeros.
    """
    m, n = layout.m, layout.n
    if h.support.m != m or h.support.n != n:
        raise ValueError("estimate and layout grid sizes disagree")
    mn = m * n
    kk = np.arange(m)[:, None]
    ll = np.arange(n)[None, :]
    rows_idx = (kk * n + ll).ravel()

    rows, cols, data = [], [], []
    for k, l, val in h.tap_items():
        if val == 0:
            continue
        dk = kk - k
        dl = ll - l
        wrap = np.exp(2j * np.pi * (dk // m) * dl / n)
        twist = np.exp(2j * np.pi * dk * l / (m * n))
        col = ((dk % m) * n + (dl % n)).ravel()
        rows.append(rows_idx)
        cols.append(col)
        data.append((val * wrap * twist).ravel())
    if not rows:
        return scipy.sparse.csr_matrix((mn, mn), dtype=np.complex128)
    mat = scipy.sparse.coo_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(mn, mn),
    )
    return mat.tocsr()


_DENSE_LIMIT = 1024
_CG_TOL = 1e-8


class SolverDivergence(RuntimeError):
    """Iterative equalizer failed to reach its residual target."""

    def __init__(self, residual: float, iterations: int):
        super().__init__(
            f"conjugate gradient stalled at relative residual {residual:.3e} "
            f"after {iterations} iterations"
        )
        self.residual = residual
        self.iterations = iterations


def _cg_hermitian(matvec, b: np.ndarray, tol: float, max_iter: int) -> np.ndarray:
    """Plain conjugate gradient for a Hermitian positive definite system."""
    x = np.zeros_like(b)
    r = b.copy()
    p = r.copy()
    rs = np.vdot(r, r).real
    b_norm = np.sqrt(np.vdot(b, b).real)
    if b_norm == 0:
        return x
    for it in range(max_iter):
        if np.sqrt(rs) <= tol * b_norm:
            return x
        ap = matvec(p)
        curvature = np.vdot(p, ap).real
        if curvature <= 0:
            # The search direction sits in the operator's null space, so the
            # system is singular and no further progress is possible.
            raise SolverDivergence(np.sqrt(rs) / b_norm, it)
        alpha = rs / curvature
        x = x + alpha * p
        r = r - alpha * ap
        rs_new = np.vdot(r, r).real
        p = r + (rs_new / rs) * p
        rs = rs_new
    if np.sqrt(rs) <= tol * b_norm:
        return x
    raise SolverDivergence(np.sqrt(rs) / b_norm, max_iter)


def mmse_equalize(y_dd: DDGrid, h_matrix: scipy.sparse.spmatrix,
                  noise_var: float) -> DDGrid:
    """Linear MMSE inversion x = H^H (H H^H + noise_var I)^{-1} y.

    Small systems are solved densely; larger ones run conjugate gradient
    on the regularized normal equations without ever forming H H^H.
    """
    if noise_var < 0:
        raise ValueError("noise_var must be nonnegative")
    m, n = y_dd.m, y_dd.n
    mn = m * n
    if h_matrix.shape != (mn, mn):
        raise ValueError(f"operator shape {h_matrix.shape} does not match grid {(mn, mn)}")
    y = y_dd.values.ravel()

    if mn <= _DENSE_LIMIT:
        hd = h_matrix.toarray()
        gram = hd @ hd.conj().T + noise_var * np.eye(mn)
        z = np.linalg.solve(gram, y)
        x = hd.conj().T @ z
    else:
        hh = h_matrix.conj().T.tocsr()

        def matvec(v):
            return h_matrix @ (hh @ v) + noise_var * v

        # Well-posed systems converge in tens of iterations; the cap only
        # bounds how long a near-singular unregularized solve can grind
        # before the divergence diagnostic surfaces.
        z = _cg_hermitian(matvec, y, _CG_TOL, max_iter=min(10 * mn, 2000))
        x = hh @ z
    return DDGrid(values=x.reshape(m, n), role=y_dd.role)


def _delay_gain_profiles(h: EffectiveChannelEstimate) -> tuple[np.ndarray, np.ndarray]:
    """Per-delay time-varying gains of the tap operator.

    A DD tap (k', l') acts on the time sequence as a circular shift by
    k' under a modulation at l'/(MN); summing one delay row over its
    Doppler column therefore yields a diagonal gain profile for that
    shift, sampled exactly by a zero-padded inverse DFT.
    """
    m, n = h.support.m, h.support.n
    mn = m * n
    delays = h.support.delay_taps()
    dopplers = h.support.doppler_taps()
    profiles = np.zeros((delays.size, mn), dtype=np.complex128)
    spec = np.zeros(mn, dtype=np.complex128)
    for i, d in enumerate(delays):
        row = h.taps.values[d % m, :]
        spec[:] = 0.0
        spec[dopplers % mn] = row[dopplers % n]
        profiles[i] = mn * np.fft.ifft(spec)
    return delays, profiles


def equalize_taps(y_dd: DDGrid, h: EffectiveChannelEstimate,
                  noise_var: float) -> DDGrid:
    """MMSE inversion driven directly by the estimated taps.

    Same solution as build_io_matrix followed by mmse_equalize, but the
    operator runs in the time domain, where each supported delay is one
    circular shift under a time-varying gain.  A matvec then costs a few
    multiplies per sample instead of a sparse row sum over the whole
    Doppler axis, which is what keeps wide supports tractable.
    """
    if noise_var < 0:
        raise ValueError("noise_var must be nonnegative")
    if (y_dd.m, y_dd.n) != (h.support.m, h.support.n):
        raise ValueError("tap support and grid dimensions disagree")
    delays, profiles = _delay_gain_profiles(h)
    y = idzt(y_dd).samples

    def apply_h(v):
        out = np.zeros_like(v)
        for d, g in zip(delays, profiles):
            out += np.roll(g * v, d)
        return out

    def apply_hh(w):
        out = np.zeros_like(w)
        for d, g in zip(delays, profiles):
            out += np.conj(g) * np.roll(w, -d)
        return out

    def matvec(v):
        return apply_h(apply_hh(v)) + noise_var * v

    z = _cg_hermitian(matvec, y, _CG_TOL, max_iter=min(10 * y.size, 2000))
    x = dzt(apply_hh(z), m=y_dd.m, n=y_dd.n)
    return DDGrid(values=x.values, role=y_dd.role)


def dd_noise_var(noise_psd: float, q: int, b: float) -> float:
    """Per-cell DD noise variance after matched filtering and the DZT.

    Channel noise enters with per-sample variance noise_psd at rate q*B;
    the unit-energy matched filter scales it by 1/(q*B) and the unitary
    transform keeps it there.
    """
    return noise_psd / (q * b)


def guard_noise_var(y_dd: DDGrid, layout: FrameLayout,
                    support: SupportRegion) -> float:
    """Estimate noise variance from guard cells outside the support."""
    cells = [(k, l)
             for k in range(layout.kappa1, layout.kappa4)
             for l in range(layout.n)
             if not (k == layout.k_p and l == layout.l_p)
             and not support.k_lo <= k < support.k_hi]
    if not cells:
        raise ValueError("support covers every guard cell; no noise-only "
                         "region is left to measure")
    vals = np.array([y_dd.values[k, l] for k, l in cells])
    return float(np.mean(np.abs(vals) ** 2))
