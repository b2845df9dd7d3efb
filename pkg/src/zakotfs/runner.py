"""Monte-Carlo orchestration: single trials, BER sweeps, CSV/SVG emission."""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import svg
from .channel import apply_impairments, apply_paths
from .config import ExperimentConfig
from .dd_frame import demap_symbols, map_bits
from .estimation import (SupportRegion, dd_noise_var, equalize_taps, estimate)
from .sync import (SyncResult, correct, detect_timing, estimate_cfo,
                   make_preamble, shape_preamble)
from .waveform import AnalogSignal, matched_filter, sample_and_periodize, synthesize
from .zak import dzt, idzt

__all__ = ["TrialReport", "BerPoint", "BerCurve", "run_trial", "sweep",
           "write_outputs"]


@dataclass(frozen=True)
class TrialReport:
    """Everything one end-to-end trial produced."""

    snr_db: float
    trial_index: int
    seed_key: tuple[int, int]
    bit_errors: int
    bits_sent: int
    symbols: np.ndarray
    taps: object
    sync: SyncResult | None
    sync_failed: bool = False

    def __post_init__(self):
        if self.bit_errors > self.bits_sent:
            raise ValueError("more bit errors than bits sent")


@dataclass(frozen=True)
class BerPoint:
    snr_db: float
    ber: float
    ci95: float
    trials: int
    errors: int
    bits: int


@dataclass(frozen=True)
class BerCurve:
    """One BER-vs-SNR series with binomial normal-approximation CIs."""

    points: tuple[BerPoint, ...]

    def __post_init__(self):
        for p in self.points:
            if not 0.0 <= p.ber <= 1.0:
                raise ValueError(f"ber {p.ber} outside [0, 1]")
        object.__setattr__(self, "points", tuple(self.points))

    def to_csv(self) -> str:
        lines = ["snr_db,ber,ci95,trials,errors,bits"]
        for p in self.points:
            lines.append(f"{p.snr_db:g},{p.ber:.9e},{p.ci95:.9e},"
                         f"{p.trials},{p.errors},{p.bits}")
        return "\n".join(lines) + "\n"


def _trial_rng(cfg: ExperimentConfig, snr_index: int,
               trial_index: int) -> tuple[np.random.Generator, tuple[int, int]]:
    """Counter-based per-trial stream so worker layout cannot matter."""
    word = (snr_index << 32) | trial_index
    key = np.array([cfg.base_seed, word], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key)), (cfg.base_seed, word)


def _compose_burst(cfg: ExperimentConfig, frame_sig: AnalogSignal,
                   template: AnalogSignal | None) -> tuple[AnalogSignal, int]:
    """Put preamble (optional), gap, and frame on one time axis.

    The frame core keeps t = 0; the returned offset is the nominal index
    of preamble chip 0 in the buffer (-1 without a preamble).  The tail
    is padded out so channel delays never push content off the end.
    """
    b = cfg.params.b
    rate = frame_sig.rate
    q = cfg.q
    frame_start = int(round(frame_sig.t0 * rate))

    tail_pad = int(math.ceil((cfg.tau_max + cfg.impairments.dt) * rate)) + 4 * q
    if template is None:
        samples = np.concatenate(
            [frame_sig.samples, np.zeros(tail_pad, dtype=np.complex128)])
        return AnalogSignal(samples=samples, rate=rate, t0=frame_sig.t0), -1

    # The gap separates the template's last sample from the first frame
    # sample, which for a wide transmit window sits well before the
    # frame core, so the preamble clears the frame's rolloff flank.
    tpl_start = frame_start - cfg.gap_symbols * q - template.samples.size
    start = tpl_start
    end = frame_start + frame_sig.samples.size + tail_pad
    buf = np.zeros(end - start, dtype=np.complex128)
    buf[:template.samples.size] += template.samples
    buf[frame_start - start:frame_start - start + frame_sig.samples.size] += frame_sig.samples
    pad_q = -int(round(template.t0 * rate))
    chip0_index = pad_q
    return AnalogSignal(samples=buf, rate=rate, t0=start / rate), chip0_index


def _make_tx(cfg: ExperimentConfig, layout, constellation,
             rng: np.random.Generator):
    """Draw one frame's bits and build the transmit burst around them."""
    nbits = layout.n_data_cells * constellation.bits_per_symbol
    bits = rng.integers(0, 2, size=nbits)
    tx_grid = map_bits(bits, constellation, layout, cfg.pilot_amp)
    frame_sig = synthesize(idzt(tx_grid, rate=cfg.params.b), cfg.shape, cfg.q)

    template = None
    preamble = None
    if cfg.sync_enabled:
        preamble = make_preamble(cfg.preamble_length, cfg.preamble_root)
        template = shape_preamble(preamble, cfg.shape, cfg.params.b, cfg.q)
    burst, chip0_nominal = _compose_burst(cfg, frame_sig, template)
    return bits, burst, chip0_nominal, preamble


def run_trial(cfg: ExperimentConfig, trial_index: int,
              snr_index: int = 0) -> TrialReport:
    """One frame through the whole pipeline at cfg.snr_db[snr_index]."""
    params = cfg.params
    layout = cfg.layout()
    constellation = cfg.constellation()
    b = params.b
    rate = cfg.q * b
    snr_db = cfg.snr_db[snr_index]
    rng, seed_key = _trial_rng(cfg, snr_index, trial_index)

    bits, burst, chip0_nominal, preamble = _make_tx(cfg, layout, constellation, rng)
    nbits = bits.size

    faded = apply_paths(burst, cfg.paths)
    impaired = apply_impairments(faded, cfg.impairments)

    core_lo = int(round(-impaired.t0 * rate))
    core = impaired.samples[core_lo:core_lo + params.m * params.n * cfg.q]
    signal_power = float(np.mean(np.abs(core) ** 2))
    noise_psd = 0.0 if math.isinf(snr_db) else signal_power / 10 ** (snr_db / 10)
    rx_samples = impaired.samples
    if noise_psd > 0:
        z = rng.standard_normal(rx_samples.size) + 1j * rng.standard_normal(rx_samples.size)
        rx_samples = rx_samples + np.sqrt(noise_psd / 2) * z
    rx = AnalogSignal(samples=rx_samples, rate=rate, t0=impaired.t0)

    sync_res = None
    if cfg.sync_enabled:
        sync_res = detect_timing(rx, preamble, cfg.q, shape=cfg.shape,
                                 threshold=cfg.sync_threshold)
        if not sync_res.detected:
            # Counted as a decode of all-zero bits against what was sent.
            return TrialReport(
                snr_db=snr_db, trial_index=trial_index, seed_key=seed_key,
                bit_errors=int(np.sum(bits)), bits_sent=nbits,
                symbols=np.zeros(layout.n_data_cells, dtype=np.complex128),
                taps=None, sync=sync_res, sync_failed=True,
            )
        if cfg.cfo_mode == "time_domain":
            shift = max(sync_res.start_index - chip0_nominal, 0)
            cfo_hat = estimate_cfo(rx, preamble, cfg.q, sync_res.start_index,
                                   shape=cfg.shape)
            sync_res = replace(sync_res, cfo_hat=cfo_hat)
            trimmed = correct(rx, replace(sync_res, start_index=shift))
            rx = AnalogSignal(samples=trimmed.samples, rate=rate, t0=rx.t0)

    y_dd = dzt(sample_and_periodize(matched_filter(rx, cfg.shape, params), params))
    support = SupportRegion.from_layout(layout, cfg.support_kind)
    h_est = estimate(y_dd, layout, support, cfg.pilot_amp)
    x_hat = equalize_taps(y_dd, h_est, dd_noise_var(noise_psd, cfg.q, b))

    rx_bits = demap_symbols(x_hat, layout, constellation)
    errors = int(np.sum(rx_bits != bits))
    rows = np.array(layout.data_delay_bins)
    symbols = x_hat.values[rows, :].reshape(-1).copy()
    return TrialReport(
        snr_db=snr_db, trial_index=trial_index, seed_key=seed_key,
        bit_errors=errors, bits_sent=nbits, symbols=symbols,
        taps=h_est, sync=sync_res, sync_failed=False,
    )


def _trial_stats(cfg: ExperimentConfig, trial_index: int,
                 snr_index: int) -> tuple[int, int, int, int, bool, np.ndarray | None]:
    r = run_trial(cfg, trial_index, snr_index)
    symbols = r.symbols if trial_index == 0 else None
    return (snr_index, trial_index, r.bit_errors, r.bits_sent,
            r.sync_failed, symbols)


def sweep(cfg: ExperimentConfig, emit: bool = True
          ) -> tuple[BerCurve, dict[float, np.ndarray]]:
    """Run the configured trial grid and aggregate one BER curve.

    Trials fan out over processes when cfg.workers > 1; results are
    reduced in (snr, trial) order from integer counters, so the curve
    and every emitted byte are independent of the worker count.  Returns
    the curve plus the trial-0 equalized symbols per SNR point for the
    constellation dumps.
    """
    jobs = [(si, ti) for si in range(len(cfg.snr_db))
            for ti in range(cfg.trials)]
    if cfg.workers == 1:
        stats = [_trial_stats(cfg, ti, si) for si, ti in jobs]
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            futures = [pool.submit(_trial_stats, cfg, ti, si)
                       for si, ti in jobs]
            stats = [f.result() for f in futures]
    stats.sort(key=lambda s: (s[0], s[1]))

    points = []
    scatters: dict[float, np.ndarray] = {}
    for si, snr_db in enumerate(cfg.snr_db):
        rows = [s for s in stats if s[0] == si]
        errors = sum(s[2] for s in rows)
        bits = sum(s[3] for s in rows)
        ber = errors / bits
        ci = 1.96 * math.sqrt(ber * (1 - ber) / bits)
        points.append(BerPoint(snr_db=snr_db, ber=ber, ci95=ci,
                               trials=len(rows), errors=errors, bits=bits))
        first = rows[0]
        if first[5] is not None:
            scatters[snr_db] = first[5]
    curve = BerCurve(points=tuple(points))
    if emit:
        write_outputs(cfg, curve, scatters)
    return curve, scatters


def _ensure_parent(path: str) -> None:
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)


def write_outputs(cfg: ExperimentConfig, curve: BerCurve,
                  scatters: dict[float, np.ndarray]) -> list[str]:
    """Emit the CSV, the BER curve SVG, and one scatter SVG per SNR."""
    written = []
    name = f"{cfg.shape.family} {cfg.constellation_order}-QAM"
    try:
        _ensure_parent(cfg.out_csv)
        with open(cfg.out_csv, "w", encoding="utf-8", newline="\n") as f:
            f.write(curve.to_csv())
        written.append(cfg.out_csv)

        series = [(name, [(p.snr_db, p.ber, p.ci95) for p in curve.points
                          if not math.isinf(p.snr_db)])]
        if series[0][1]:
            _ensure_parent(cfg.out_curve_svg)
            with open(cfg.out_curve_svg, "w", encoding="utf-8", newline="\n") as f:
                f.write(svg.line_chart(series, title=f"BER, {name}"))
            written.append(cfg.out_curve_svg)

        reference = cfg.constellation().points
        for snr_db in sorted(scatters):
            chart = svg.scatter_chart(
                scatters[snr_db], title=f"{name}, SNR {snr_db:g} dB",
                reference=reference)
            path = f"{cfg.out_constellation_prefix}snr_{snr_db:g}dB.svg"
            _ensure_parent(path)
            with open(path, "w", encoding="utf-8", newline="\n") as f:
                f.write(chart)
            written.append(path)
    except OSError as e:
        raise RuntimeError(f"cannot write output {e.filename or ''}: {e}") from e
    return written
