"""Effective-channel estimation, prediction, and MMSE equalization tests."""

import numpy as np
import pytest
import scipy.sparse

import zakotfs.estimation
from zakotfs.channel import ImpairmentSpec, PathSpec, apply_impairments, apply_paths
from zakotfs.dd_frame import FrameParams, build_layout, map_bits, Constellation
from zakotfs.estimation import (
    EffectiveChannelEstimate,
    SolverDivergence,
    SupportRegion,
    build_io_matrix,
    dd_noise_var,
    equalize_taps,
    estimate,
    guard_noise_var,
    manual_taps,
    mmse_equalize,
    predict_io,
)
from zakotfs.waveform import PulseShape, matched_filter, sample_and_periodize, synthesize
from zakotfs.zak import DDGrid, dzt, extend, idzt

NU_P = 30e3


def make_layout(m=64, n=64, c_bins=3.0, margin_bins=0.0):
    p = FrameParams(m=m, n=n, nu_p=NU_P, tau_p=1 / NU_P)
    return p, build_layout(p, tau_max=c_bins / p.b, dt_margin=margin_bins / p.b)


def pilot_frame(layout, pilot_amp=8.0):
    """A frame with zeroed data cells, pilot only."""
    v = np.zeros((layout.m, layout.n), dtype=complex)
    v[layout.k_p, layout.l_p] = pilot_amp
    return DDGrid(values=v)


def run_chain(grid, params, shape, q, paths=(), imp=None):
    """Transmit, fade, impair, matched-filter, fold back to the grid."""
    sig = synthesize(idzt(grid, rate=params.b), shape, q)
    if paths:
        sig = apply_paths(sig, paths)
    if imp is not None:
        sig = apply_impairments(sig, imp)
    return dzt(sample_and_periodize(matched_filter(sig, shape, params), params))


class TestSupportRegion:
    """Support construction from the frame layout."""

    def test_c1_spans_inner_guard(self):
        _, lay = make_layout(c_bins=3.0)
        s = SupportRegion.from_layout(lay, "C1")
        assert (s.k_lo, s.k_hi) == (lay.kappa2, lay.kappa3)
        assert list(s.delay_taps()) == [-1, 0, 1, 2]

    def test_c2_spans_full_guard(self):
        _, lay = make_layout(c_bins=3.0)
        s = SupportRegion.from_layout(lay, "C2")
        assert (s.k_lo, s.k_hi) == (lay.kappa1, lay.kappa4)
        assert list(s.delay_taps()) == [-4, -3, -2, -1, 0, 1, 2, 3]

    def test_c1_inside_c2(self):
        _, lay = make_layout(c_bins=2.0)
        c1 = SupportRegion.from_layout(lay, "C1")
        c2 = SupportRegion.from_layout(lay, "C2")
        assert c2.k_lo <= c1.k_lo and c1.k_hi <= c2.k_hi

    def test_doppler_is_full_signed_range(self):
        _, lay = make_layout()
        s = SupportRegion.from_layout(lay, "C1")
        taps = s.doppler_taps()
        assert taps[0] == -32 and taps[-1] == 31

    def test_size_and_contains(self):
        _, lay = make_layout(c_bins=3.0)
        s = SupportRegion.from_layout(lay, "C1")
        assert s.size == 4 * 64
        assert s.contains(-1, 0) and s.contains(2, 31)
        assert not s.contains(3, 0)
        assert not s.contains(0, 32)

    def test_unknown_kind_rejected(self):
        _, lay = make_layout()
        with pytest.raises(ValueError, match="kind"):
            SupportRegion.from_layout(lay, "C3")

    def test_bad_range_rejected(self):
        with pytest.raises(ValueError, match="delay range"):
            SupportRegion(kind="C1", k_lo=5, k_hi=5, m=8, n=8)


class TestEstimate:
    """Reading taps off the received pilot neighbourhood."""

    def test_reads_with_pilot_phase_removed(self):
        """y[k_p + k, l_p + l] maps to h[k, l] * exp(+j pi l / N) / A."""
        _, lay = make_layout(m=16, n=8, c_bins=2.0)
        sup = SupportRegion.from_layout(lay, "C1")
        amp = 4.0
        v = np.zeros((16, 8), dtype=complex)
        v[lay.k_p + 1, (lay.l_p + 2) % 8] = 0.5 - 0.25j
        h = estimate(DDGrid(values=v, role="received"), lay, sup, amp)
        got = h.taps.values[1 % 16, 2 % 8]
        expect = (0.5 - 0.25j) * np.exp(-1j * np.pi * 2 / 8) / amp
        assert got == pytest.approx(expect, abs=1e-14)

    def test_outside_support_is_zero(self):
        _, lay = make_layout(m=16, n=8, c_bins=2.0)
        sup = SupportRegion.from_layout(lay, "C1")
        rng = np.random.default_rng(0)
        y = DDGrid(values=rng.standard_normal((16, 8)), role="received")
        h = estimate(y, lay, sup, 1.0)
        for k in range(-8, 8):
            for l in range(-4, 4):
                if not sup.contains(k, l):
                    assert h.taps.values[k % 16, l % 8] == 0.0

    def test_pilot_only_loopback_identity(self):
        """With no channel the estimate is a clean unit tap at (0, 0)."""
        p, lay = make_layout(m=16, n=16, c_bins=2.0)
        sup = SupportRegion.from_layout(lay, "C2")
        y = run_chain(pilot_frame(lay), p, PulseShape(family="sinc", w1_span=None), 4)
        h = estimate(y, lay, sup, 8.0)
        assert h.peak() == (0, 0)
        assert h.taps.values[0, 0] == pytest.approx(1.0, abs=1e-9)
        off = h.taps.values.copy()
        off[0, 0] = 0.0
        assert np.sum(np.abs(off) ** 2) < 1e-3

    def test_integer_path_lands_on_its_bins(self):
        """A one-path channel at integer (delay, Doppler) peaks there."""
        p, lay = make_layout(m=16, n=16, c_bins=2.0)
        sup = SupportRegion.from_layout(lay, "C1")
        path = PathSpec(gain=0.8, delay=1 / p.b, doppler=2 * p.doppler_bin_hz)
        y = run_chain(pilot_frame(lay), p, PulseShape(family="sinc", w1_span=None),
                      4, paths=(path,))
        h = estimate(y, lay, sup, 8.0)
        assert h.peak() == (1, 2)
        assert abs(h.taps.values[1, 2]) == pytest.approx(0.8, rel=1e-6)

    def test_pilot_amp_positive(self):
        _, lay = make_layout(m=16, n=8, c_bins=2.0)
        sup = SupportRegion.from_layout(lay, "C1")
        y = DDGrid(values=np.zeros((16, 8)), role="received")
        with pytest.raises(ValueError, match="pilot_amp"):
            estimate(y, lay, sup, 0.0)

    def test_support_grid_must_match(self):
        _, lay = make_layout(m=16, n=8, c_bins=2.0)
        sup = SupportRegion(kind="C1", k_lo=3, k_hi=5, m=8, n=8)
        y = DDGrid(values=np.zeros((16, 8)), role="received")
        with pytest.raises(ValueError, match="different grid"):
            estimate(y, lay, sup, 1.0)


class TestManualTapsAndEstimate:
    """The direct tap container used by tests and the selftest."""

    def test_tap_items_covers_support(self):
        _, lay = make_layout(m=16, n=8, c_bins=2.0)
        sup = SupportRegion.from_layout(lay, "C1")
        h = manual_taps({(0, 0): 1.0}, sup)
        assert sum(1 for _ in h.tap_items()) == sup.size

    def test_peak_finds_planted_tap(self):
        _, lay = make_layout(m=16, n=8, c_bins=2.0)
        sup = SupportRegion.from_layout(lay, "C2")
        h = manual_taps({(0, 0): 0.4, (-2, 3): 0.9j}, sup)
        assert h.peak() == (-2, 3)

    def test_out_of_support_tap_rejected(self):
        _, lay = make_layout(m=16, n=8, c_bins=2.0)
        sup = SupportRegion.from_layout(lay, "C1")
        with pytest.raises(ValueError, match="outside the support"):
            manual_taps({(5, 0): 1.0}, sup)

    def test_grid_size_mismatch_rejected(self):
        sup = SupportRegion(kind="C1", k_lo=3, k_hi=5, m=8, n=8)
        taps = DDGrid(values=np.zeros((4, 4)), role="channel")
        with pytest.raises(ValueError, match="disagree"):
            EffectiveChannelEstimate(taps=taps, support=sup, pilot_amp=1.0)


class TestPredictIo:
    """The twisted convolution against independent references."""

    def naive_predict(self, s, h):
        """Literal scalar-loop twisted convolution over the support."""
        m, n = s.m, s.n
        out = np.zeros((m, n), dtype=complex)
        for k in range(m):
            for l in range(n):
                acc = 0.0 + 0.0j
                for kp, lp, val in h.tap_items():
                    if val == 0:
                        continue
                    acc += (val * extend(s, k - kp, l - lp)
                            * np.exp(2j * np.pi * (k - kp) * lp / (m * n)))
                out[k, l] = acc
        return out

    def test_identity_tap_is_identity(self):
        _, lay = make_layout(m=8, n=8, c_bins=1.0)
        sup = SupportRegion.from_layout(lay, "C1")
        rng = np.random.default_rng(1)
        s = DDGrid(values=rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8)))
        h = manual_taps({(0, 0): 1.0}, sup)
        y = predict_io(s, h)
        assert np.max(np.abs(y.values - s.values)) < 1e-14

    def test_single_tap_shift_phase_by_hand(self):
        """One tap moves the pilot and twists it by exp(j 2 pi k_p l0 / MN)."""
        _, lay = make_layout(m=8, n=8, c_bins=1.0)
        sup = SupportRegion.from_layout(lay, "C2")
        amp = 3.0
        s = pilot_frame(lay, pilot_amp=amp)
        g = 0.7 - 0.1j
        h = manual_taps({(1, 2): g}, sup)
        y = predict_io(s, h)
        expect = g * amp * np.exp(2j * np.pi * lay.k_p * 2 / 64)
        assert y.values[lay.k_p + 1, lay.l_p + 2] == pytest.approx(expect, abs=1e-13)

    @pytest.mark.parametrize("m,n", [(8, 8), (8, 4), (16, 8)])
    def test_matches_naive_double_sum(self, m, n):
        p = FrameParams(m=m, n=n, nu_p=NU_P, tau_p=1 / NU_P)
        lay = build_layout(p, tau_max=1.0 / p.b, dt_margin=0.0)
        sup = SupportRegion.from_layout(lay, "C2")
        rng = np.random.default_rng(m + n)
        s = DDGrid(values=rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n)))
        entries = {}
        for k in sup.delay_taps():
            for l in sup.doppler_taps():
                if rng.uniform() < 0.3:
                    entries[(int(k), int(l))] = complex(rng.standard_normal(),
                                                        rng.standard_normal())
        h = manual_taps(entries, sup)
        fast = predict_io(s, h).values
        slow = self.naive_predict(s, h)
        assert np.max(np.abs(fast - slow)) < 1e-12

    def _calibrated_error(self, path):
        """Taps read from a pilot frame, then used to predict a data frame."""
        p, lay = make_layout(m=8, n=8, c_bins=1.5)
        sup = SupportRegion.from_layout(lay, "C2")
        shape = PulseShape(family="rrc", beta=0.5, w1_span=None)
        y_pilot = run_chain(pilot_frame(lay), p, shape, 4, paths=(path,))
        h = estimate(y_pilot, lay, sup, 8.0)
        const = Constellation.qam(4)
        rng = np.random.default_rng(2)
        bits = rng.integers(0, 2, size=lay.n_data_cells * const.bits_per_symbol)
        frame = map_bits(bits, const, lay, pilot_amp=8.0)
        y_true = run_chain(frame, p, shape, 4, paths=(path,))
        y_pred = predict_io(frame, h)
        return (np.linalg.norm(y_pred.values - y_true.values)
                / np.linalg.norm(y_true.values))

    def test_calibrated_prediction_matches_the_chain(self):
        """On-bin paths are predicted to a fraction of a percent."""
        p = FrameParams(m=8, n=8, nu_p=NU_P, tau_p=1 / NU_P)
        path = PathSpec(gain=0.9 * np.exp(0.3j), delay=1.0 / p.b,
                        doppler=2 * p.doppler_bin_hz)
        assert self._calibrated_error(path) < 5e-3

    def test_fractional_delay_leaks_past_the_support(self):
        """Off-bin delays spread slowly decaying interpolation tails
        beyond any finite support, so the error floor is far higher."""
        p = FrameParams(m=8, n=8, nu_p=NU_P, tau_p=1 / NU_P)
        path = PathSpec(gain=0.9 * np.exp(0.3j), delay=1.3 / p.b, doppler=0.0)
        err = self._calibrated_error(path)
        assert 1e-3 < err < 0.15


class TestBuildIoMatrix:
    """Sparse operator equivalence with the direct prediction."""

    def test_identity_tap_gives_identity_matrix(self):
        _, lay = make_layout(m=8, n=8, c_bins=1.0)
        sup = SupportRegion.from_layout(lay, "C1")
        h = manual_taps({(0, 0): 1.0}, sup)
        mat = build_io_matrix(h, lay)
        assert (mat - scipy.sparse.eye(64)).nnz == 0

    def test_matrix_reproduces_predict_io(self):
        _, lay = make_layout(m=16, n=8, c_bins=2.0)
        sup = SupportRegion.from_layout(lay, "C2")
        rng = np.random.default_rng(3)
        entries = {(int(k), int(l)): complex(rng.standard_normal(), rng.standard_normal())
                   for k in sup.delay_taps() for l in sup.doppler_taps()
                   if rng.uniform() < 0.2}
        h = manual_taps(entries, sup)
        s = DDGrid(values=rng.standard_normal((16, 8)) + 1j * rng.standard_normal((16, 8)))
        via_matrix = (build_io_matrix(h, lay) @ s.values.ravel()).reshape(16, 8)
        direct = predict_io(s, h).values
        assert np.max(np.abs(via_matrix - direct)) < 1e-12

    def test_row_sparsity_bounded_by_support(self):
        _, lay = make_layout(m=16, n=8, c_bins=2.0)
        sup = SupportRegion.from_layout(lay, "C1")
        rng = np.random.default_rng(4)
        entries = {(int(k), int(l)): 1.0 + 0j
                   for k in sup.delay_taps() for l in sup.doppler_taps()}
        mat = build_io_matrix(manual_taps(entries, sup), lay).tocsr()
        row_nnz = np.diff(mat.indptr)
        assert np.max(row_nnz) <= sup.size

    def test_empty_taps_give_zero_matrix(self):
        _, lay = make_layout(m=8, n=8, c_bins=1.0)
        sup = SupportRegion.from_layout(lay, "C1")
        mat = build_io_matrix(manual_taps({}, sup), lay)
        assert mat.nnz == 0

    def test_layout_mismatch_rejected(self):
        _, lay8 = make_layout(m=8, n=8, c_bins=1.0)
        _, lay16 = make_layout(m=16, n=8, c_bins=1.0)
        sup = SupportRegion.from_layout(lay8, "C1")
        with pytest.raises(ValueError, match="disagree"):
            build_io_matrix(manual_taps({(0, 0): 1.0}, sup), lay16)


class TestMmseEqualize:
    """Linear MMSE inversion on dense and iterative paths."""

    def test_identity_channel_noiseless(self):
        rng = np.random.default_rng(5)
        y = DDGrid(values=rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8)),
                   role="received")
        x = mmse_equalize(y, scipy.sparse.eye(64, format="csr"), 0.0)
        assert np.max(np.abs(x.values - y.values)) < 1e-10

    def test_diagonal_channel_closed_form(self):
        """For H = diag(d): x = conj(d) y / (|d|^2 + noise_var)."""
        rng = np.random.default_rng(6)
        d = rng.standard_normal(64) + 1j * rng.standard_normal(64)
        y = DDGrid(values=rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8)),
                   role="received")
        var = 0.3
        x = mmse_equalize(y, scipy.sparse.diags(d).tocsr(), var)
        expect = (np.conj(d) * y.values.ravel() / (np.abs(d) ** 2 + var)).reshape(8, 8)
        assert np.max(np.abs(x.values - expect)) < 1e-10

    def test_noiseless_two_tap_channel_inverts(self):
        _, lay = make_layout(m=8, n=8, c_bins=2.0)
        sup = SupportRegion.from_layout(lay, "C1")
        h = manual_taps({(0, 0): 1.0, (1, -2): 0.4j}, sup)
        mat = build_io_matrix(h, lay)
        rng = np.random.default_rng(7)
        s = DDGrid(values=rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8)))
        y = predict_io(s, h)
        x = mmse_equalize(DDGrid(values=y.values, role="received"), mat, 0.0)
        assert np.max(np.abs(x.values - s.values)) < 1e-6

    def test_heavy_noise_shrinks_output(self):
        rng = np.random.default_rng(8)
        y = DDGrid(values=rng.standard_normal((8, 8)), role="received")
        x = mmse_equalize(y, scipy.sparse.eye(64, format="csr"), 1e9)
        assert np.linalg.norm(x.values) < 1e-6 * np.linalg.norm(y.values)

    def test_cg_matches_dense(self, monkeypatch):
        """Forcing the iterative path reproduces the dense solution."""
        rng = np.random.default_rng(9)
        d0 = rng.standard_normal(64) + 1j * rng.standard_normal(64) + 3.0
        d1 = 0.3 * (rng.standard_normal(63) + 1j * rng.standard_normal(63))
        mat = scipy.sparse.diags([d0, d1], [0, 1]).tocsr()
        y = DDGrid(values=rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8)),
                   role="received")
        dense = mmse_equalize(y, mat, 0.01)
        monkeypatch.setattr(zakotfs.estimation, "_DENSE_LIMIT", 0)
        iterative = mmse_equalize(y, mat, 0.01)
        assert np.max(np.abs(dense.values - iterative.values)) < 1e-6

    def test_singular_system_raises_divergence(self, monkeypatch):
        """An unsolvable normal system surfaces as SolverDivergence."""
        monkeypatch.setattr(zakotfs.estimation, "_DENSE_LIMIT", 0)
        d = np.ones(16)
        d[-1] = 0.0
        y = DDGrid(values=np.ones((4, 4)), role="received")
        with pytest.raises(SolverDivergence):
            mmse_equalize(y, scipy.sparse.diags(d).tocsr(), 0.0)

    def test_negative_noise_rejected(self):
        y = DDGrid(values=np.zeros((4, 4)), role="received")
        with pytest.raises(ValueError, match="noise_var"):
            mmse_equalize(y, scipy.sparse.eye(16, format="csr"), -1.0)

    def test_shape_mismatch_rejected(self):
        y = DDGrid(values=np.zeros((4, 4)), role="received")
        with pytest.raises(ValueError, match="operator shape"):
            mmse_equalize(y, scipy.sparse.eye(9, format="csr"), 0.0)


class TestEqualizeTaps:
    """The tap-driven equalizer against the sparse-matrix reference.

    Both solve the same regularized normal equations; the tap form just
    applies the operator as per-delay circular shifts under time-varying
    gains instead of a sparse matrix, so it must agree to solver
    tolerance on any support."""

    def _random_estimate(self, sup, seed, density=0.3):
        rng = np.random.default_rng(seed)
        entries = {(0, 0): 1.0}
        for k in sup.delay_taps():
            for l in sup.doppler_taps():
                if rng.random() < density:
                    entries[(int(k), int(l))] = 0.2 * complex(
                        rng.standard_normal(), rng.standard_normal())
        return manual_taps(entries, sup)

    @pytest.mark.parametrize("m,n,c_bins,kind", [
        (8, 8, 1.5, "C2"),
        (16, 8, 2.0, "C1"),
        (16, 16, 2.0, "C2"),
    ])
    def test_matches_matrix_path(self, m, n, c_bins, kind):
        _, lay = make_layout(m=m, n=n, c_bins=c_bins)
        sup = SupportRegion.from_layout(lay, kind)
        h = self._random_estimate(sup, seed=m * 10 + n)
        rng = np.random.default_rng(3)
        y = DDGrid(values=rng.standard_normal((m, n))
                   + 1j * rng.standard_normal((m, n)), role="received")
        via_matrix = mmse_equalize(y, build_io_matrix(h, lay), 0.05)
        via_taps = equalize_taps(y, h, 0.05)
        scale = np.max(np.abs(via_matrix.values))
        assert np.max(np.abs(via_taps.values - via_matrix.values)) / scale < 1e-6

    def test_noiseless_two_tap_channel_inverts(self):
        _, lay = make_layout(m=8, n=8, c_bins=2.0)
        sup = SupportRegion.from_layout(lay, "C1")
        h = manual_taps({(0, 0): 1.0, (1, -2): 0.4j}, sup)
        rng = np.random.default_rng(17)
        s = DDGrid(values=rng.standard_normal((8, 8))
                   + 1j * rng.standard_normal((8, 8)))
        y = predict_io(s, h)
        x = equalize_taps(DDGrid(values=y.values, role="received"), h, 0.0)
        assert np.max(np.abs(x.values - s.values)) < 1e-6

    def test_identity_taps_pass_through(self):
        _, lay = make_layout(m=8, n=8, c_bins=1.0)
        sup = SupportRegion.from_layout(lay, "C1")
        h = manual_taps({(0, 0): 1.0}, sup)
        rng = np.random.default_rng(18)
        y = DDGrid(values=rng.standard_normal((8, 8))
                   + 1j * rng.standard_normal((8, 8)), role="received")
        x = equalize_taps(y, h, 0.0)
        assert np.max(np.abs(x.values - y.values)) < 1e-8

    def test_all_zero_taps_without_noise_diverge(self):
        _, lay = make_layout(m=4, n=4, c_bins=0.0)
        sup = SupportRegion.from_layout(lay, "C1")
        h = manual_taps({}, sup)
        y = DDGrid(values=np.ones((4, 4)), role="received")
        with pytest.raises(SolverDivergence):
            equalize_taps(y, h, 0.0)

    def test_negative_noise_rejected(self):
        _, lay = make_layout(m=8, n=8, c_bins=1.0)
        sup = SupportRegion.from_layout(lay, "C1")
        h = manual_taps({(0, 0): 1.0}, sup)
        with pytest.raises(ValueError, match="noise_var"):
            equalize_taps(DDGrid(values=np.zeros((8, 8))), h, -0.5)

    def test_grid_mismatch_rejected(self):
        _, lay = make_layout(m=8, n=8, c_bins=1.0)
        sup = SupportRegion.from_layout(lay, "C1")
        h = manual_taps({(0, 0): 1.0}, sup)
        with pytest.raises(ValueError, match="disagree"):
            equalize_taps(DDGrid(values=np.zeros((4, 4))), h, 0.0)


class TestNoiseCalibration:
    """Noise variance bookkeeping on the DD grid."""

    def test_dd_noise_var_scale(self):
        assert dd_noise_var(2.0, 4, 1.92e6) == pytest.approx(2.0 / (4 * 1.92e6))

    def test_guard_cells_measure_noise(self):
        _, lay = make_layout(c_bins=3.0)
        sup = SupportRegion.from_layout(lay, "C1")
        rng = np.random.default_rng(10)
        var = 0.25
        noise = np.sqrt(var / 2) * (rng.standard_normal((64, 64))
                                    + 1j * rng.standard_normal((64, 64)))
        got = guard_noise_var(DDGrid(values=noise, role="received"), lay, sup)
        assert got == pytest.approx(var, rel=0.25)

    def test_c2_support_leaves_no_probe_cells(self):
        _, lay = make_layout(c_bins=3.0)
        sup = SupportRegion.from_layout(lay, "C2")
        y = DDGrid(values=np.zeros((64, 64)), role="received")
        with pytest.raises(ValueError, match="noise-only"):
            guard_noise_var(y, lay, sup)


class TestImpairmentSignatures:
    """How uncorrected CFO and timing offsets read on the estimate."""

    def _estimate_for(self, imp, kind="C2"):
        p, lay = make_layout(m=16, n=16, c_bins=1.0, margin_bins=1.0)
        sup = SupportRegion.from_layout(lay, kind)
        y = run_chain(pilot_frame(lay), p, PulseShape(family="rrc", beta=0.5, w1_span=None),
                      4, paths=(PathSpec(gain=1.0, delay=0.0, doppler=0.0),), imp=imp)
        return estimate(y, lay, sup, 8.0), p

    def test_cfo_of_one_doppler_bin_moves_the_peak(self):
        h0, p = self._estimate_for(None)
        h1, _ = self._estimate_for(ImpairmentSpec(eps0=p.doppler_bin_hz))
        k0, l0 = h0.peak()
        assert (k0, l0) == (0, 0)
        assert h1.peak() == (k0, l0 + 1)

    def test_timing_offset_of_one_bin_moves_the_peak(self):
        h0, p = self._estimate_for(None)
        h1, _ = self._estimate_for(ImpairmentSpec(dt=1.0 / p.b))
        k0, l0 = h0.peak()
        assert h1.peak() == (k0 + 1, l0)

    def test_combined_offsets_stay_inside_c2(self):
        _, p = self._estimate_for(None)
        imp = ImpairmentSpec(dt=0.6 / p.b, eps0=0.5 * p.doppler_bin_hz)
        h, _ = self._estimate_for(imp)
        k, l = h.peak()
        assert h.support.contains(k, l)
