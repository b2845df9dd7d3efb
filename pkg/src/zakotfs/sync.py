"""Burst acquisition: ZC preamble, correlation timing, Kay's CFO estimator."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .waveform import AnalogSignal, PulseShape, w1_filter

__all__ = [
    "Preamble",
    "SyncResult",
    "make_preamble",
    "shape_preamble",
    "detect_timing",
    "kay_cfo",
    "estimate_cfo",
    "correct",
]

DEFAULT_LENGTH = 256
DEFAULT_ROOT = 25
DEFAULT_THRESHOLD = 0.3
DEFAULT_GAP = 64


@dataclass(frozen=True)
class Preamble:
    """Constant-modulus polyphase sequence at the symbol rate."""

    length: int
    root: int
    samples: np.ndarray

    def __post_init__(self) -> None:
        s = np.array(np.asarray(self.samples), dtype=np.complex128, copy=True)
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)


@dataclass(frozen=True)
class SyncResult:
    """Timing/CFO acquisition outcome at the oversampled rate.

    start_index points at the first sample of the preamble core (chip 0)
    inside the searched buffer; detected reflects the threshold test at
    the correlation peak.
    """

    start_index: int
    cfo_hat: float
    peak_metric: float
    detected: bool = True


def make_preamble(length: int = DEFAULT_LENGTH, root: int = DEFAULT_ROOT) -> Preamble:
    """Even-length Zadoff-Chu sequence x[n] = exp(-j pi u n^2 / N)."""
    if length < 2 or length % 2 != 0:
        raise ValueError(f"preamble length must be even and >= 2, got {length}")
    if math.gcd(root, length) != 1:
        raise ValueError(f"root {root} shares a factor with length {length}")
    n = np.arange(length)
    samples = np.exp(-1j * np.pi * root * n ** 2 / length)
    return Preamble(length=length, root=root, samples=samples)


def shape_preamble(pre: Preamble, shape: PulseShape, b: float, q: int) -> AnalogSignal:
    """Upsample the chips to rate q*B and run them through the delay filter.

    The returned signal places chip j at t = j/B; the leading and
    trailing filter tails are kept, so t0 is negative by the filter
    reach.  This doubles as the transmit burst segment and the matched
    template for detect_timing.
    """
    pad = shape.reach()
    train = np.zeros((pre.length + 2 * pad) * q, dtype=np.complex128)
    train[pad * q:(pad + pre.length) * q:q] = pre.samples
    shaped = w1_filter(train, shape, b, q)
    return AnalogSignal(samples=shaped, rate=q * b, t0=-pad / b)


def _upsampled_chips(pre: Preamble, q: int) -> np.ndarray:
    train = np.zeros(pre.length * q, dtype=np.complex128)
    train[::q] = pre.samples
    return train


def detect_timing(rx: AnalogSignal, preamble: Preamble, q: int,
                  shape: PulseShape | None = None,
                  threshold: float = DEFAULT_THRESHOLD) -> SyncResult:
    """Locate the preamble by normalized sliding cross-correlation.

    With a shape, the template is the pulse-shaped preamble (matched to
    what shape_preamble transmits); without one, the raw zero-stuffed
    chip train.  peak_metric is |<rx_window, template>| normalized by
    both energies, so it lives in [0, 1] and the threshold separates a
    lock from noise.  cfo_hat is left at zero; see estimate_cfo.
    """
    if q < 1:
        raise ValueError("oversampling factor must be >= 1")
    if shape is None:
        template = _upsampled_chips(preamble, q)
        core_offset = 0
    else:
        shaped = shape_preamble(preamble, shape, rx.rate / q, q)
        template = shaped.samples
        core_offset = shape.reach() * q
    if rx.samples.size < template.size:
        raise ValueError(
            f"buffer of {rx.samples.size} samples cannot hold a "
            f"{template.size}-sample preamble"
        )

    corr = fftconvolve(rx.samples, np.conj(template[::-1]), mode="valid")
    power = np.convolve(np.abs(rx.samples) ** 2, np.ones(template.size), mode="valid")
    tnorm = np.sqrt(np.sum(np.abs(template) ** 2))
    peak_power = float(np.max(power))
    if peak_power <= 0.0:
        # Dead buffer: nothing to lock onto.
        return SyncResult(start_index=core_offset, cfo_hat=0.0,
                          peak_metric=0.0, detected=False)
    # Exactly silent stretches leave only FFT rounding noise in corr; a
    # relative power floor keeps that noise from masquerading as a peak.
    floor = 1e-12 * peak_power
    metric = np.abs(corr) / (tnorm * np.sqrt(np.maximum(power, floor)))

    lag = int(np.argmax(metric))
    peak = float(metric[lag])
    return SyncResult(
        start_index=lag + core_offset,
        cfo_hat=0.0,
        peak_metric=peak,
        detected=peak >= threshold,
    )


def kay_cfo(rx_preamble: np.ndarray, rate: float) -> float:
    """Kay's weighted phase-increment frequency estimate, in Hz.

    The parabolic window w[n] ~ 1 - ((n - L/2)/(L/2))^2 over the L-1
    phase differences is renormalized to sum to one, which makes the
    estimator exact on a pure tone within the unambiguous band.
    """
    x = np.asarray(rx_preamble, dtype=np.complex128)
    if x.ndim != 1 or x.size < 2:
        raise ValueError("Kay's estimator needs at least two samples")
    if rate <= 0:
        raise ValueError("rate must be positive")
    length = x.size
    n = np.arange(1, length)
    w = 1.0 - ((n - length / 2) / (length / 2)) ** 2
    w = np.maximum(w, 0.0)
    w /= np.sum(w)
    dphi = np.angle(x[1:] * np.conj(x[:-1]))
    return float(rate / (2 * np.pi) * np.sum(w * dphi))


def estimate_cfo(rx: AnalogSignal, preamble: Preamble, q: int,
                 start_index: int, shape: PulseShape | None = None,
                 block_chips: int = 16) -> float:
    """CFO from the located preamble, by Kay's estimator on block sums.

    The received core is correlated against the template one block at a
    time; each partial correlation collapses to one phasor rotating at
    the carrier offset.  Echo paths barely register in these sums (a
    delayed copy of the sequence beats against the template as a fast
    chirp that a block integrates away), where a sample-by-sample
    product would hand Kay's estimator a strong interfering ramp.
    start_index must point at chip 0, as detect_timing reports it.
    """
    if not 1 <= block_chips <= preamble.length:
        raise ValueError("block size must be between 1 chip and the preamble")
    if shape is None:
        template = _upsampled_chips(preamble, q)
    else:
        shaped = shape_preamble(preamble, shape, rx.rate / q, q)
        template = shaped.samples[shape.reach() * q:(shape.reach() + preamble.length) * q]
    lo = start_index
    hi = start_index + template.size
    if lo < 0 or hi > rx.samples.size:
        raise ValueError("preamble window falls outside the buffer")
    derotated = rx.samples[lo:hi] * np.conj(template)
    width = block_chips * q
    blocks = derotated.size // width
    sums = derotated[:blocks * width].reshape(blocks, width).sum(axis=1)
    return kay_cfo(sums, rx.rate / width)


def correct(rx: AnalogSignal, sync: SyncResult) -> AnalogSignal:
    """Trim to the estimated start and undo the estimated carrier ramp.

    The derotation references the buffer's own time axis, so running
    correct with the true (offset, CFO) of a synthetic impairment
    restores the original samples exactly.
    """
    if not 0 <= sync.start_index <= rx.samples.size:
        raise ValueError(
            f"start index {sync.start_index} outside buffer of {rx.samples.size}"
        )
    trimmed = rx.samples[sync.start_index:]
    t0 = rx.t0 + sync.start_index / rx.rate
    t = t0 + np.arange(trimmed.size) / rx.rate
    out = trimmed * np.exp(-2j * np.pi * sync.cfo_hat * t)
    return AnalogSignal(samples=out, rate=rx.rate, t0=t0)
