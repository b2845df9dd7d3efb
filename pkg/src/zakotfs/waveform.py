"""Pulse shaping and the analog transmit / matched-filter receive chain.

The transmit waveform is built from one MN-periodic symbol stream: the
stream is periodically extended, windowed along time by the family's
Doppler-shaping window, placed on an oversampled impulse grid, and
convolved with the delay-shaping filter w1,

    s(t) = sum_q s[q] V(q/B) w1(t - q/B),

where V is the unit-peak window.  The receiver correlates with w1,
applies the conjugate window, samples at q/B and folds the result into
one MN period.  Window pairs are chosen so the folded cascade of the
clean chain is the identity:

* 'rrc': w1 is a root-raised-cosine in time and V a root-raised-cosine
  taper in the other domain; shifted copies of |V|^2 spaced T sum to 1,
  so the folded tapers reassemble the frame exactly.
* 'sinc': w1(t) = sinc(Bt) with a flat transmit window stretched past
  the frame by a guard margin and a one-period rectangular receive
  window, which keeps the received core in the periodic steady state
  for any channel delay up to the margin.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .dd_frame import FrameParams
from .zak import DTSignal

__all__ = [
    "PulseShape",
    "AnalogSignal",
    "rrc_w1",
    "rrc_w2",
    "synthesize",
    "matched_filter",
    "sample_and_periodize",
]

# Width of the guard band around the removable singularities of rrc_w1,
# in units of B*t; inside it the analytic limits are used.
_SINGULARITY_EPS = 1e-8


def rrc_w1(t: np.ndarray | float, b: float, beta: float) -> np.ndarray | float:
    """Root-raised-cosine delay filter evaluated at time t (seconds).

    Peak value is 1 + beta*(4/pi - 1) at t = 0; the removable
    singularities at |t| = 1/(4 beta B) use their analytic limits.
    """
    if not 0 < beta <= 1:
        raise ValueError(f"beta must be in (0, 1], got {beta}")
    scalar = np.isscalar(t)
    x = np.asarray(t, dtype=float) * b  # time in symbol units
    out = np.empty_like(x)
    at_zero = np.abs(x) < _SINGULARITY_EPS
    at_edge = np.abs(np.abs(x) - 1.0 / (4 * beta)) < _SINGULARITY_EPS
    regular = ~(at_zero | at_edge)
    with np.errstate(invalid="ignore", divide="ignore"):
        xr = np.where(regular, x, 1.0)
        num = np.sin(np.pi * xr * (1 - beta)) + 4 * beta * xr * np.cos(np.pi * xr * (1 + beta))
        den = np.pi * xr * (1 - (4 * beta * xr) ** 2)
        out = np.where(regular, num / den, 0.0)
    out = np.where(at_zero, 1 + beta * (4 / np.pi - 1), out)
    edge = (beta / np.sqrt(2)) * (
        (1 + 2 / np.pi) * np.sin(np.pi / (4 * beta))
        + (1 - 2 / np.pi) * np.cos(np.pi / (4 * beta))
    )
    out = np.where(at_edge, edge, out)
    return float(out) if scalar else out


def rrc_w2(t: np.ndarray | float, t_period: float, beta: float) -> np.ndarray | float:
    """Root-raised-cosine Doppler window, peak 1/sqrt(T), support (1+beta)T."""
    if not 0 < beta <= 1:
        raise ValueError(f"beta must be in (0, 1], got {beta}")
    if t_period <= 0:
        raise ValueError("t_period must be positive")
    scalar = np.isscalar(t)
    at = np.abs(np.asarray(t, dtype=float))
    t1 = (1 - beta) * t_period / 2
    t2 = (1 + beta) * t_period / 2
    flat = at <= t1
    taper = (at > t1) & (at <= t2)
    arg = np.pi / (beta * t_period) * (at - t1)
    out = np.where(flat, 1.0 / np.sqrt(t_period), 0.0)
    out = np.where(taper, np.sqrt(np.clip(1 + np.cos(arg), 0.0, None) / (2 * t_period)), out)
    return float(out) if scalar else out


@dataclass(frozen=True)
class AnalogSignal:
    """Oversampled baseband signal with an explicit time origin.

    samples[i] is the value at t = t0 + i/rate; t0 is always an integer
    number of sample periods so decimation grids stay aligned.
    """

    samples: np.ndarray
    rate: float
    t0: float = 0.0

    def __post_init__(self) -> None:
        s = np.array(np.asarray(self.samples), dtype=np.complex128, copy=True)
        if s.ndim != 1:
            raise ValueError("AnalogSignal samples must be 1-D")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)
        if self.rate <= 0:
            raise ValueError("rate must be positive")

    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.samples.size) / self.rate


@dataclass(frozen=True)
class PulseShape:
    """Filter family and truncation used by the shaping chain.

    w1_span is the one-sided truncation of the delay filter in units of
    1/B; None selects the non-truncated realization, where shaping is
    done by multiplying with the filter's closed-form spectrum instead
    of convolving with sampled taps.  The transmit guard margin for the
    'sinc' family defaults follow the span (see synthesize).
    """

    family: str = "rrc"
    beta: float = 0.5
    w1_span: int | None = 16

    def __post_init__(self) -> None:
        if self.family not in ("rrc", "sinc"):
            raise ValueError(f"unknown pulse family {self.family!r}")
        if self.family == "rrc" and not 0 < self.beta <= 1:
            raise ValueError(f"beta must be in (0, 1] for rrc, got {self.beta}")
        if self.w1_span is not None and self.w1_span < 2:
            raise ValueError("w1_span must be at least 2 symbol periods")

    @property
    def exact(self) -> bool:
        return self.w1_span is None

    def reach(self) -> int:
        """Symbol periods the filter meaningfully extends to one side."""
        return 64 if self.exact else self.w1_span

    def w1_taps(self, b: float, q: int) -> np.ndarray:
        """Unit-energy sampled delay filter at rate q*B, length 2*span*q + 1."""
        if self.exact:
            raise ValueError("the non-truncated realization has no tap form")
        key = (self.family, self.beta, self.w1_span, float(b), int(q))
        taps = _TAP_CACHE.get(key)
        if taps is None:
            m = np.arange(-self.w1_span * q, self.w1_span * q + 1)
            t = m / (q * b)
            if self.family == "rrc":
                taps = rrc_w1(t, b, self.beta).astype(np.complex128)
            else:
                taps = np.sinc(b * t).astype(np.complex128)
            taps /= np.sqrt(np.sum(np.abs(taps) ** 2) / (q * b))
            taps.setflags(write=False)
            _TAP_CACHE[key] = taps
        return taps

    def w1_gain(self, f: np.ndarray, b: float) -> np.ndarray:
        """Closed-form filter spectrum, unit-energy normalized.

        The brick band is half-open, (-B/2, B/2]: the Nyquist line is
        carried once, on the positive edge, so filtering and matched
        filtering compose to unit gain there instead of splitting the
        line across both edges and losing half of it.
        """
        tiny = 1e-9 * b
        if self.family == "sinc":
            mag = ((f > -b / 2 + tiny) & (f <= b / 2 + tiny)).astype(float)
        else:
            af = np.abs(f)
            lo = (1 - self.beta) * b / 2
            hi = (1 + self.beta) * b / 2
            mag = np.zeros_like(af)
            mag[af <= lo] = 1.0
            mid = (af > lo) & (af < hi)
            mag[mid] = np.sqrt(0.5 * (1 + np.cos(np.pi * (af[mid] - lo) / (self.beta * b))))
        return mag / np.sqrt(b)

    def tail_fraction(self, b: float, q: int) -> float:
        """Energy fraction of the outermost symbol period of the taps."""
        if self.exact:
            return 0.0
        taps = self.w1_taps(b, q)
        total = np.sum(np.abs(taps) ** 2)
        edge = np.sum(np.abs(taps[: q]) ** 2) + np.sum(np.abs(taps[-q:]) ** 2)
        return float(edge / total)


_TAP_CACHE: dict[tuple, np.ndarray] = {}

# A shaped frame whose truncated filter tails still hold more than this
# fraction of the tap energy in the outermost period is rejected.  The
# sinc tail only decays like 1/t, so the bar is set where a span-16
# truncation still passes while a span of a few symbols does not.
_TAIL_LIMIT = 1e-3


def w1_filter(x: np.ndarray, shape: PulseShape, b: float, q: int,
              correlate: bool = False) -> np.ndarray:
    """Run the delay filter (or its matched correlator) over a buffer.

    Truncated shapes convolve with the sampled taps; the non-truncated
    realization multiplies by the closed-form spectrum, which acts
    circularly, so the buffer needs zero padding well past the frame.
    The correlator variant folds in the 1/(q*B) matched-filter scale.
    """
    if shape.exact:
        f = np.fft.fftfreq(x.size, d=1.0 / (q * b))
        gain = shape.w1_gain(f, b)
        if not correlate:
            gain = q * b * gain
        return np.fft.ifft(np.fft.fft(x) * gain)
    taps = shape.w1_taps(b, q)
    kernel = np.conj(taps[::-1]) / (q * b) if correlate else taps
    return fftconvolve(x, kernel, mode="same")


# Brick-window edges sit exactly on sample instants; comparisons are
# nudged by a sliver of the period so float rounding in the time axis
# cannot move a boundary sample to the wrong side.
_EDGE_EPS = 1e-9


def _tx_window(shape: PulseShape, t: np.ndarray, t_period: float,
               margin_s: float) -> np.ndarray:
    if shape.family == "rrc":
        return np.sqrt(t_period) * rrc_w2(t - t_period / 2, t_period, shape.beta)
    lo = -margin_s - _EDGE_EPS * t_period
    hi = t_period + margin_s - _EDGE_EPS * t_period
    return ((t >= lo) & (t < hi)).astype(float)


def _rx_window(shape: PulseShape, t: np.ndarray, t_period: float) -> np.ndarray:
    if shape.family == "rrc":
        return np.sqrt(t_period) * rrc_w2(t - t_period / 2, t_period, shape.beta)
    eps = _EDGE_EPS * t_period
    return ((t >= -eps) & (t < t_period - eps)).astype(float)


def synthesize(dt: DTSignal, shape: PulseShape, q: int,
               margin: int | None = None) -> AnalogSignal:
    """Shape one frame into the analog domain at rate q*B.

    The frame core occupies t in [0, T).  The symbol stream is extended
    MN-periodically under the transmit window; `margin` (in symbol
    periods, 'sinc' family only) sets how far the flat window reaches
    past the core so delayed copies at the receiver stay in the periodic
    steady state.  Needs dt.rate set to B.
    """
    if dt.rate is None:
        raise ValueError("DTSignal.rate must carry the symbol rate B")
    if q < 2:
        raise ValueError("oversampling q must be at least 2")
    b = dt.rate
    mn = dt.m * dt.n
    t_period = mn / b
    if margin is None:
        margin = shape.reach() + 8
    if shape.tail_fraction(b, q) > _TAIL_LIMIT:
        raise ValueError(
            f"w1_span={shape.w1_span} leaves {shape.tail_fraction(b, q):.2e} "
            "of the tap energy in the outer period; increase the span"
        )

    if shape.family == "rrc":
        # Window support is [-beta*T/2, T + beta*T/2).
        ext = int(np.ceil(shape.beta * mn / 2)) + 1
    else:
        ext = int(margin)
    q_lo, q_hi = -ext, mn + ext
    span_q = shape.reach() * q
    t0 = (q_lo * q - span_q) / (q * b)

    if shape.exact:
        # Periodic steady state first: exact trigonometric interpolation
        # of the symbol sequence on the q-grid, then the window cuts it.
        period = np.zeros(mn * q, dtype=np.complex128)
        period[::q] = dt.samples
        f = np.fft.fftfreq(mn * q, d=1.0 / (q * b))
        core = np.fft.ifft(np.fft.fft(period) * (q * b) * shape.w1_gain(f, b))
        n_out = (q_hi - q_lo - 1) * q + 2 * span_q + 1
        t = t0 + np.arange(n_out) / (q * b)
        idx = np.arange(n_out) + (q_lo * q - span_q)
        shaped = core[np.mod(idx, mn * q)] * _tx_window(shape, t, t_period, margin / b)
        return AnalogSignal(samples=shaped, rate=q * b, t0=t0)

    sym_idx = np.arange(q_lo, q_hi)
    window = _tx_window(shape, sym_idx / b, t_period, margin / b)
    vals = dt.samples[np.mod(sym_idx, mn)] * window
    n_out = (q_hi - q_lo - 1) * q + 2 * span_q + 1
    train = np.zeros(n_out, dtype=np.complex128)
    train[span_q + (sym_idx - q_lo) * q] = vals
    shaped = w1_filter(train, shape, b, q)
    return AnalogSignal(samples=shaped, rate=q * b, t0=t0)


def matched_filter(r: AnalogSignal, shape: PulseShape, params: FrameParams) -> AnalogSignal:
    """Correlate with w1 and apply the conjugate receive window.

    The signal's time axis must already place the frame core at [0, T);
    truncated shapes keep the input's sample times.  The non-truncated
    realization instead windows first, folds the result into one frame
    period, and correlates circularly there, where the periodic content
    sits exactly on the transform bins; its output is the single period
    starting at t = 0.
    """
    b = params.b
    q = int(round(r.rate / b))
    if abs(r.rate - q * b) > 1e-6 * b or q < 2:
        raise ValueError(f"rate {r.rate} is not an integer multiple >= 2 of B={b}")
    if shape.exact:
        i_zero = -r.t0 * r.rate
        if abs(i_zero - round(i_zero)) > 1e-6:
            raise ValueError("signal time origin is not aligned to the sample grid")
        i_zero = int(round(i_zero))
        windowed = r.samples * np.conj(_rx_window(shape, r.times(), params.t))
        period = params.m * params.n * q
        folded = np.zeros(period, dtype=np.complex128)
        slots = np.mod(np.arange(r.samples.size) - i_zero, period)
        np.add.at(folded, slots, windowed)
        f = np.fft.fftfreq(period, d=1.0 / (q * b))
        z = np.fft.ifft(np.fft.fft(folded) * shape.w1_gain(f, b))
        return AnalogSignal(samples=z, rate=r.rate, t0=0.0)
    z = w1_filter(r.samples, shape, b, q, correlate=True)
    window = _rx_window(shape, r.times(), params.t)
    return AnalogSignal(samples=z * np.conj(window), rate=r.rate, t0=r.t0)


def sample_and_periodize(y: AnalogSignal, params: FrameParams) -> DTSignal:
    """Sample the filtered signal at q/B and fold into one MN period.

    Everything the receive window kept is folded additively modulo MN
    symbols, so tapered frame edges reassemble and any content beyond
    one period aliases back onto the core.
    """
    b = params.b
    mn = params.m * params.n
    q = int(round(y.rate / b))
    if abs(y.rate - q * b) > 1e-6 * b:
        raise ValueError(f"rate {y.rate} is not an integer multiple of B={b}")
    # Index of the sample at t = 0; t0 is an integer number of periods.
    i_zero = -y.t0 * y.rate
    if abs(i_zero - round(i_zero)) > 1e-6:
        raise ValueError("signal time origin is not aligned to the sample grid")
    i_zero = int(round(i_zero))
    n = y.samples.size
    # Symbol instants q_t with 0 <= i_zero + q_t*q < n.
    q_min = -(i_zero // q)
    q_max = (n - 1 - i_zero) // q
    sym = np.arange(q_min, q_max + 1)
    if sym.size == 0 or sym[0] > 0 or sym[-1] < mn - 1:
        raise ValueError("signal does not cover the frame period")
    picked = y.samples[i_zero + sym * q]
    folded = np.zeros(mn, dtype=np.complex128)
    np.add.at(folded, np.mod(sym, mn), picked)
    return DTSignal(samples=folded, m=params.m, n=params.n, rate=b)
