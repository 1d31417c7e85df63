"""Tests for temporal-mode geometry: overlaps, distortion, complement modes.

The Gaussian pair has closed-form overlap exp(-dt^2/(8 s^2)) and distortion
1 - exp(-dt^2/(4 s^2)); those serve as analytic oracles.  Quadrature results
are cross-checked against numpy's trapezoid rule as an independent
implementation of the same integral.
"""

import math

import numpy as np
import pytest

from okdrate.modes import (
    COINCIDENT_MODE_CUTOFF,
    ModePair,
    TemporalEnvelope,
    WAVEFORM_HEADER,
    complement_mode,
    distortion,
    gaussian_envelope,
    gaussian_pair,
    load_waveform_csv,
    normalize,
    overlap,
    write_envelope_csv,
    write_waveform_csv,
)


def bump(t, lo, hi):
    """Smooth compactly-supported bump on (lo, hi), zero elsewhere."""
    x = (t - lo) / (hi - lo)
    out = np.zeros_like(t)
    inside = (x > 0) & (x < 1)
    out[inside] = np.exp(-1.0 / (x[inside] * (1 - x[inside])))
    return out


def disjoint_pair():
    t = np.linspace(0.0, 10.0, 4001)
    u0 = normalize(TemporalEnvelope(t, bump(t, 1.0, 3.0).astype(complex)))
    u1 = normalize(TemporalEnvelope(t, bump(t, 7.0, 9.0).astype(complex)))
    return ModePair(u0, u1)


class TestNormalize:
    def test_unit_norm(self):
        t = np.linspace(-3, 3, 501)
        env = normalize(TemporalEnvelope(t, (t**2 + 1.0).astype(complex)))
        assert env.norm_squared() == pytest.approx(1.0, abs=1e-12)

    def test_idempotent(self):
        t = np.linspace(-3, 3, 501)
        env = normalize(TemporalEnvelope(t, np.exp(-(t**2)).astype(complex)))
        again = normalize(env)
        np.testing.assert_allclose(again.amplitudes, env.amplitudes, atol=1e-12)

    def test_scale_invariant(self):
        t = np.linspace(-3, 3, 501)
        raw = np.exp(-(t**2)) * (1 + 0.5j)
        a = normalize(TemporalEnvelope(t, raw))
        b = normalize(TemporalEnvelope(t, 7.25 * raw))
        np.testing.assert_allclose(a.amplitudes, b.amplitudes, atol=1e-12)

    def test_zero_envelope_rejected(self):
        t = np.linspace(-1, 1, 11)
        with pytest.raises(ValueError, match="degenerate envelope"):
            normalize(TemporalEnvelope(t, np.zeros(11, dtype=complex)))

    def test_mismatched_shapes_rejected(self):
        with pytest.raises(ValueError):
            TemporalEnvelope(np.linspace(0, 1, 5), np.zeros(4, dtype=complex))


class TestOverlap:
    def test_self_overlap_is_one(self):
        pair = gaussian_pair(0.0)
        assert overlap(pair) == pytest.approx(1.0, abs=1e-12)

    def test_disjoint_supports(self):
        assert abs(overlap(disjoint_pair())) <= 1e-15

    @pytest.mark.parametrize("delta_t,sigma", [(0.5, 1.0), (1.0, 1.0), (2.0, 0.7), (1.0, 0.5)])
    def test_gaussian_closed_form(self, delta_t, sigma):
        pair = gaussian_pair(delta_t, sigma=sigma)
        want = math.exp(-(delta_t**2) / (8.0 * sigma**2))
        assert overlap(pair).real == pytest.approx(want, abs=1e-9)
        assert abs(overlap(pair).imag) <= 1e-12

    def test_matches_numpy_trapezoid(self):
        # independent quadrature of the same integrand
        pair = gaussian_pair(1.3, sigma=0.8)
        integrand = np.conj(pair.u0.amplitudes) * pair.u1.amplitudes
        want = np.trapezoid(integrand, pair.u0.t_grid)
        assert overlap(pair) == pytest.approx(complex(want), abs=1e-12)


class TestDistortion:
    def test_identical_modes(self):
        assert distortion(gaussian_pair(0.0)) == 0.0

    def test_orthogonal_modes(self):
        assert distortion(disjoint_pair()) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("delta_t", [0.25, 0.5, 1.0, 2.0, 4.0])
    def test_gaussian_closed_form(self, delta_t):
        want = 1.0 - math.exp(-(delta_t**2) / 4.0)
        assert distortion(gaussian_pair(delta_t)) == pytest.approx(want, abs=1e-6)

    def test_phase_invariance(self):
        pair = gaussian_pair(1.0)
        rotated = ModePair(
            pair.u0, TemporalEnvelope(pair.u1.t_grid, pair.u1.amplitudes * np.exp(0.73j))
        )
        assert distortion(rotated) == pytest.approx(distortion(pair), abs=1e-12)

    def test_grid_refinement_stability(self):
        coarse = distortion(gaussian_pair(1.0, n_points=2001))
        fine = distortion(gaussian_pair(1.0, n_points=4001))
        assert abs(coarse - fine) <= 1e-6


class TestComplementMode:
    def test_orthogonal_complement_is_u1(self):
        pair = disjoint_pair()
        v = complement_mode(pair)
        integrand = np.conj(v.amplitudes) * pair.u1.amplitudes
        fidelity = abs(np.trapezoid(integrand, pair.u0.t_grid))
        assert fidelity >= 1.0 - 1e-9

    def test_coincident_modes_rejected(self):
        with pytest.raises(ValueError, match="modes coincide; complement undefined"):
            complement_mode(gaussian_pair(0.0))
        assert COINCIDENT_MODE_CUTOFF <= 1e-9

    @pytest.mark.parametrize("delta_t", [0.3, 1.0, 2.5])
    def test_orthonormal_to_u0(self, delta_t):
        pair = gaussian_pair(delta_t)
        v = complement_mode(pair)
        t = pair.u0.t_grid
        cross = np.trapezoid(np.conj(pair.u0.amplitudes) * v.amplitudes, t)
        norm = np.trapezoid(np.abs(v.amplitudes) ** 2, t)
        assert abs(cross) <= 1e-9
        assert abs(norm - 1.0) <= 1e-9

    @pytest.mark.parametrize("delta_t", [0.3, 1.0, 2.5])
    def test_reconstruction(self, delta_t):
        # u1 = <u0,u1> u0 + sqrt(D) v pointwise
        pair = gaussian_pair(delta_t)
        v = complement_mode(pair)
        c = overlap(pair)
        d = distortion(pair)
        rebuilt = c * pair.u0.amplitudes + math.sqrt(d) * v.amplitudes
        err = np.trapezoid(np.abs(rebuilt - pair.u1.amplitudes) ** 2, pair.u0.t_grid)
        assert math.sqrt(err) <= 1e-8

    def test_complex_pair_complement(self):
        # chirped second mode exercises the complex arithmetic
        t = np.linspace(-6, 6, 3001)
        u0 = gaussian_envelope(t, 0.0, 1.0)
        u1 = normalize(TemporalEnvelope(t, np.exp(-((t - 0.7) ** 2) / 4.0 + 0.4j * t)))
        pair = ModePair(u0, u1)
        v = complement_mode(pair)
        cross = np.trapezoid(np.conj(u0.amplitudes) * v.amplitudes, t)
        assert abs(cross) <= 1e-9
        assert abs(np.trapezoid(np.abs(v.amplitudes) ** 2, t) - 1.0) <= 1e-9


class TestWaveformCsv:
    def test_round_trip(self, tmp_path):
        pair = gaussian_pair(1.0, n_points=101)
        path = tmp_path / "pair.csv"
        write_waveform_csv(path, pair.u0, pair.u1)
        raw0, raw1 = load_waveform_csv(path)
        np.testing.assert_allclose(raw0.t_grid, pair.u0.t_grid, atol=0)
        np.testing.assert_allclose(raw0.amplitudes, pair.u0.amplitudes, atol=0)
        np.testing.assert_allclose(raw1.amplitudes, pair.u1.amplitudes, atol=0)

    def test_header_exact(self, tmp_path):
        pair = gaussian_pair(1.0, n_points=11)
        path = tmp_path / "pair.csv"
        write_waveform_csv(path, pair.u0, pair.u1)
        first = path.read_text().splitlines()[0]
        assert first == ",".join(WAVEFORM_HEADER)
        assert first == "t,re_u0,im_u0,re_u1,im_u1"

    def test_no_numpy_reprs_leak(self, tmp_path):
        pair = gaussian_pair(1.0, n_points=11)
        path = tmp_path / "pair.csv"
        write_waveform_csv(path, pair.u0, pair.u1)
        assert "np.float" not in path.read_text()

    def test_malformed_row_reports_line(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text(
            "t,re_u0,im_u0,re_u1,im_u1\n"
            "0.0,1.0,0.0,0.5,0.0\n"
            "0.1,oops,0.0,0.5,0.0\n"
        )
        with pytest.raises(ValueError, match="line 3"):
            load_waveform_csv(path)

    def test_wrong_field_count_reports_line(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("t,re_u0,im_u0,re_u1,im_u1\n0.0,1.0,0.0\n")
        with pytest.raises(ValueError, match="line 2"):
            load_waveform_csv(path)

    def test_wrong_header_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("time,a,b,c,d\n0.0,1.0,0.0,0.5,0.0\n")
        with pytest.raises(ValueError, match="header"):
            load_waveform_csv(path)

    def test_nonincreasing_time_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text(
            "t,re_u0,im_u0,re_u1,im_u1\n"
            "0.0,1.0,0.0,0.5,0.0\n"
            "0.0,0.9,0.0,0.5,0.0\n"
        )
        with pytest.raises(ValueError, match="strictly increasing"):
            load_waveform_csv(path)

    def test_envelope_csv_header(self, tmp_path):
        pair = gaussian_pair(1.0, n_points=11)
        v = complement_mode(pair)
        path = tmp_path / "v.csv"
        write_envelope_csv(path, v, label="v")
        lines = path.read_text().splitlines()
        assert lines[0] == "t,re_v,im_v"
        assert len(lines) == 12
