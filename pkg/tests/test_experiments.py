import numpy as np
import pytest

from scarlab.basis import basis_state, enumerate_basis, make_state
from scarlab.dynamics import evolve_dense, time_grid
from scarlab.errors import ParameterError, WindowError
from scarlab.experiments import (
    find_revival_peak,
    first_crossing_time,
    fit_gaussian_decay,
    quench_series,
    reduce_frozen_chain,
    run_defect_study,
    run_disorder_sweep,
)
from scarlab.observables import TimeSeries, fidelity_series
from scarlab.operators import build_perturbation_full, build_pxp, sample_disorder



class TestRevivalPeak:
    def test_constant_series_tie_break(self):
        times = np.linspace(0.0, 5.0, 51)
        series = TimeSeries(times, np.ones(51))
        t, f = find_revival_peak(series, 1.0)
        assert t == pytest.approx(1.1)  # first grid point past the exclusion
        assert f == 1.0

    def test_peak_is_grid_point(self):
        times = np.linspace(0.0, 10.0, 101)
        values = np.exp(-times) + 0.5 * np.exp(-((times - 6.283) ** 2))
        series = TimeSeries(times, values)
        t, f = find_revival_peak(series, 1.0)
        assert t in times
        assert f == values[list(times).index(t)]

    def test_empty_window(self):
        series = TimeSeries(np.array([0.0, 0.5]), np.array([1.0, 0.9]))
        with pytest.raises(WindowError):
            find_revival_peak(series, 1.0)

    def test_z2_revival_near_five(self):
        basis = enumerate_basis(12, "pbc", "constrained")
        H = build_pxp(basis)
        psi0 = make_state("z2", basis)
        traj = evolve_dense(H, psi0, time_grid(30.0, 0.05))
        t, f = find_revival_peak(fidelity_series(traj, psi0), 1.0)
        assert 4.0 <= t <= 6.0
        assert f > 0.5

    def test_z3_peak_later_than_z2_small_disorder(self):
        basis = enumerate_basis(12, "pbc", "full")
        H = build_pxp(basis) + build_perturbation_full(
            basis, sample_disorder(12, 0.02, 42)
        )
        times = time_grid(30.0, 0.05)
        stars = {}
        for name in ("z2", "z3"):
            qs = quench_series(H, make_state(name, basis), times)
            stars[name] = find_revival_peak(qs.fidelity, 1.0)[0]
        assert stars["z3"] > stars["z2"]

    def test_first_crossing(self):
        series = TimeSeries(np.array([0.0, 1.0, 2.0]), np.array([1.0, 0.05, 0.5]))
        assert first_crossing_time(series, 0.1) == 1.0
        assert first_crossing_time(series, 0.01) is None


class TestGaussianFit:
    def test_exact_model_recovery(self):
        w = np.arange(0, 0.51, 0.05)
        a, b, c = 0.6, 8.0, 0.2
        peaks = a * np.exp(-b * w**2) + c
        fit = fit_gaussian_decay(w, peaks)
        assert fit.converged
        assert fit.a == pytest.approx(a, abs=1e-6)
        assert fit.b == pytest.approx(b, abs=1e-6)
        assert fit.c == pytest.approx(c, abs=1e-6)
        assert fit.residual_norm < 1e-10

    def test_degenerate_all_equal(self):
        w = np.arange(0, 0.51, 0.1)
        fit = fit_gaussian_decay(w, np.full(w.size, 0.4))
        assert fit.a == 0.0
        assert fit.c == pytest.approx(0.4)
        assert not fit.converged  # b is unidentifiable

    def test_scale_consistency(self):
        w = np.arange(0, 0.51, 0.05)
        rng = np.random.default_rng(1)
        peaks = 0.7 * np.exp(-11.0 * w**2) + 0.05 + 1e-3 * rng.normal(size=w.size)
        lam = 3.7
        f1 = fit_gaussian_decay(w, peaks)
        f2 = fit_gaussian_decay(w, lam * peaks)
        assert f2.a == pytest.approx(lam * f1.a, rel=1e-8)
        assert f2.c == pytest.approx(lam * f1.c, rel=1e-8)
        assert f2.b == pytest.approx(f1.b, abs=1e-8)

    def test_noisy_decay_has_positive_b(self):
        w = np.arange(0, 0.51, 0.05)
        rng = np.random.default_rng(3)
        peaks = 0.8 * np.exp(-14.0 * w**2) + 0.02 + 5e-3 * rng.normal(size=w.size)
        fit = fit_gaussian_decay(w, peaks)
        assert fit.b > 0
        assert fit.residual_norm < 0.1 * np.linalg.norm(peaks)

    def test_input_validation(self):
        with pytest.raises(ParameterError):
            fit_gaussian_decay([0, 0.1, 0.2], [1, 0.9, 0.8])
        with pytest.raises(ParameterError):
            fit_gaussian_decay([0, 0.1, 0.1, 0.2], [1, 0.9, 0.85, 0.8])


class TestDisorderSweep:
    def run_small(self, workers):
        times = time_grid(10.0, 0.1)
        return run_disorder_sweep(
            8, "pbc", "z2", [0.0, 0.2], realizations=3, master_seed=7,
            times=times, max_workers=workers,
        )

    def test_shapes_and_zero_strength_column(self):
        res = self.run_small(1)
        assert res.peaks.shape == (2, 3)
        assert res.stderr_peaks[0] == 0.0
        assert np.all(res.peaks[0] == res.peaks[0, 0])  # deterministic at W=0
        assert np.all(res.peaks >= 0) and np.all(res.peaks <= 1)

    def test_deterministic_across_pool_sizes(self):
        a = self.run_small(1)
        b = self.run_small(2)
        assert np.array_equal(a.peaks, b.peaks)
        assert np.array_equal(a.peak_times, b.peak_times)
        assert np.array_equal(a.mean_peaks, b.mean_peaks)

    def test_seed_changes_results(self):
        times = time_grid(10.0, 0.1)
        a = run_disorder_sweep(8, "pbc", "z2", [0.2], 2, 7, times, max_workers=1)
        b = run_disorder_sweep(8, "pbc", "z2", [0.2], 2, 8, times, max_workers=1)
        assert not np.array_equal(a.peaks, b.peaks)

    def test_validation(self):
        times = time_grid(5.0, 0.5)
        with pytest.raises(ParameterError):
            run_disorder_sweep(8, "pbc", "z2", [0.1], 0, 7, times)
        with pytest.raises(ParameterError):
            run_disorder_sweep(8, "pbc", "z2", [-0.1], 1, 7, times)


class TestFrozenReduction:
    def test_eighteen_site_example(self):
        red = reduce_frozen_chain(18, 10)
        assert red.frozen_sites == (8, 9, 10, 11, 12)
        assert red.reduced_n == 13
        # ring order starting just past the block
        assert red.site_map[13] == 1
        assert red.site_map[18] == 6
        assert red.site_map[1] == 7
        assert red.site_map[7] == 13
        assert set(red.site_map.values()) == set(range(1, 14))

    def test_reduced_state_is_alternating(self):
        red = reduce_frozen_chain(18, 10)
        # restriction of the defect state to dynamic sites: the period-2
        # pattern, starting excited at original site 13
        assert red.reduced_state_bits == int("1010101010101", 2)

    def test_ten_site_example(self):
        red = reduce_frozen_chain(10, 6)
        assert red.frozen_sites == (4, 5, 6, 7, 8)
        assert red.reduced_n == 5
        assert red.site_map == {9: 1, 10: 2, 1: 3, 2: 4, 3: 5}
        assert red.reduced_state_bits == 0b10101

    def test_default_site(self):
        assert reduce_frozen_chain(18).defect_site == 10

    def test_validation(self):
        with pytest.raises(ParameterError):
            reduce_frozen_chain(9)
        with pytest.raises(ParameterError):
            reduce_frozen_chain(18, 9)  # odd site is excited, not a ground site
        with pytest.raises(ParameterError):
            reduce_frozen_chain(6)

    def test_round_trip_embedding_n10(self):
        # evolving the defect state on the full ring keeps the frozen block
        # fixed; embedding the reduced trajectory reproduces all amplitudes
        n = 10
        red = reduce_frozen_chain(n, 6)
        full = enumerate_basis(n, "pbc", "full")
        H_full = build_pxp(full)
        psi_full = make_state("z2_defect_up", full, defect_site=6)
        times = time_grid(10.0, 0.5)
        traj_full = evolve_dense(H_full, psi_full, times)

        red_basis = enumerate_basis(red.reduced_n, "obc", "constrained")
        H_red = build_pxp(red_basis)
        psi_red = basis_state(red_basis, red.reduced_state_bits)
        traj_red = evolve_dense(H_red, psi_red, times)

        frozen_bits = int(np.flatnonzero(psi_full.amplitudes)[0]) & ~sum(
            1 << (orig - 1) for orig in red.site_map
        )
        inv = {j: orig for orig, j in red.site_map.items()}
        for snap_f, snap_r in zip(traj_full.snapshots, traj_red.snapshots):
            embedded = np.zeros(full.size, dtype=complex)
            for k, bits in enumerate(red_basis.configs):
                full_bits = frozen_bits
                for j in range(red.reduced_n):
                    if (bits >> j) & 1:
                        full_bits |= 1 << (inv[j + 1] - 1)
                embedded[full_bits] = snap_r.amplitudes[k]
            assert np.max(np.abs(embedded - snap_f.amplitudes)) < 1e-7


@pytest.fixture(scope="module")
def study10():
    return run_defect_study(10, "pbc", time_grid(15.0, 0.1))


class TestDefectStudy:
    def test_bundle_contents(self, study10):
        assert set(study10.fidelity) == {
            "z2", "z2_defect_down", "z2_defect_up", "z2_defect_up_reduced"
        }
        assert set(study10.correlation) == {"z2", "z2_defect_down", "z2_defect_up"}
        assert study10.overlaps is not None
        assert set(study10.overlaps) == {"z2", "z2_defect_down"}

    def test_full_matches_reduced_fidelity(self, study10):
        a = study10.fidelity["z2_defect_up"].values
        b = study10.fidelity["z2_defect_up_reduced"].values
        assert np.max(np.abs(a - b)) < 1e-8

    def test_rejects_open_chain_and_odd_rings(self):
        with pytest.raises(ParameterError):
            run_defect_study(10, "obc", time_grid(1.0, 0.5))


class TestQuenchSeries:
    def test_methods_agree(self):
        basis = enumerate_basis(10, "pbc", "constrained")
        H = build_pxp(basis)
        psi0 = make_state("z2", basis)
        times = time_grid(10.0, 0.5)
        qd = quench_series(H, psi0, times, method="dense", track_energy=True)
        qk = quench_series(H, psi0, times, method="krylov", track_energy=True)
        assert np.allclose(qd.fidelity.values, qk.fidelity.values, atol=1e-9)
        assert np.allclose(qd.correlation.values, qk.correlation.values, atol=1e-9)
        assert qk.max_norm_drift < 1e-8
        assert qk.max_energy_drift < 1e-6

    def test_unknown_method(self):
        basis = enumerate_basis(6, "pbc", "constrained")
        H = build_pxp(basis)
        with pytest.raises(ParameterError):
            quench_series(H, make_state("z2", basis), np.array([0.0, 1.0]),
                          method="magic")
