import numpy as np
import pytest

from xtalksim.experiments import (
    FidelitySeries,
    PRESETS,
    SegmentedBaseline,
    cd_idle_reference_infidelity,
    gate_fidelity,
    improvement_orders,
    run_preset,
    run_sequence,
    run_single_gate,
    scheme_label,
    sweep_j,
    SchemeRun,
)
from xtalksim.model import (
    CrosstalkOnly,
    DynamicalDecoupling,
    FrequencyModulation,
    Idle,
    PairTopology,
    StarTopology,
    SystemParams,
    XGate,
    assemble_hamiltonian,
    target_unitary,
)
from xtalksim.operators import SIGMA_X, TimeGrid, embed, propagate

PARAMS = SystemParams.from_mhz(50.0, 5.0)
PAIR = PairTopology()
T_M = PARAMS.matched_time()


class TestGateFidelity:
    def test_identity_is_one(self):
        assert gate_fidelity(np.eye(4), np.eye(4)) == pytest.approx(1.0)

    def test_global_phase_blind(self):
        rng = np.random.default_rng(3)
        q, _ = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
        base = gate_fidelity(q, np.eye(4))
        for phase in (0.3, 1.7, np.pi):
            shifted = gate_fidelity(np.exp(1j * phase) * q, np.eye(4))
            assert abs(shifted - base) <= 1e-12

    def test_orthogonal_gate_scores_zero(self):
        x1 = embed(SIGMA_X, 1, 2)
        assert gate_fidelity(x1, np.eye(4)) == pytest.approx(0.0, abs=1e-14)

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ValueError):
            gate_fidelity(np.eye(4), np.eye(8))


class TestImprovementOrders:
    def test_ratio_in_decades(self):
        assert improvement_orders(1e-3, 1e-5) == pytest.approx(2.0)

    def test_degenerate_inputs(self):
        assert improvement_orders(0.0, 1e-5) == 0.0
        assert improvement_orders(1e-3, 0.0) == np.inf


class TestFidelitySeries:
    def test_negative_noise_clamps_to_zero(self):
        s = FidelitySeries("CD", np.array([1.0]), np.array([-1e-12]))
        assert s.infidelities[0] == 0.0

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            FidelitySeries("CD", np.array([1.0]), np.array([1.1]))
        with pytest.raises(ValueError):
            FidelitySeries("CD", np.array([1.0]), np.array([np.nan]))
        with pytest.raises(ValueError):
            FidelitySeries("CD", np.array([1.0, 2.0]), np.array([0.1]))


class TestSingleGate:
    def test_zero_coupling_is_exact(self):
        silent = SystemParams(delta=PARAMS.delta, j=0.0)
        assert run_single_gate(silent, PAIR, CrosstalkOnly(), Idle(T_M), step=0.01) <= 1e-12
        assert (
            run_single_gate(silent, PAIR, CrosstalkOnly(), XGate(T_M), step=0.01) <= 1e-10
        )

    def test_idle_matches_static_oracle(self):
        propagated = run_single_gate(PARAMS, PAIR, CrosstalkOnly(), Idle(T_M), step=0.002)
        exact = cd_idle_reference_infidelity(PARAMS, PAIR, T_M)
        assert propagated == pytest.approx(exact, abs=1e-8)

    def test_star_idle_matches_static_oracle(self):
        star = StarTopology()
        propagated = run_single_gate(PARAMS, star, CrosstalkOnly(), Idle(T_M), step=0.002)
        exact = cd_idle_reference_infidelity(PARAMS, star, T_M)
        assert propagated == pytest.approx(exact, abs=1e-8)

    def test_scheme_labels(self):
        assert scheme_label(CrosstalkOnly()) == "CD"
        assert scheme_label(FrequencyModulation(cycles=6, gamma=1.0)) == "FM-N6"
        assert scheme_label(DynamicalDecoupling(4, 1.25)) == "DD-Z4"
        assert scheme_label(SegmentedBaseline(DynamicalDecoupling(4, 1.25))) == "CD"


class TestSequences:
    def brute_force_infidelity(self, scheme, gate, repetitions, step):
        h = assemble_hamiltonian(PARAMS, PAIR, scheme, gate, repetitions=repetitions)
        u = propagate(h, TimeGrid.with_max_step(0.0, h.t_end, step))
        ideal = target_unitary(gate, PAIR, repetitions=repetitions)
        return max(0.0, 1.0 - gate_fidelity(u, ideal))

    def test_single_repetition_equals_single_gate(self):
        series = run_sequence(PARAMS, PAIR, CrosstalkOnly(), Idle(T_M), 1, step=0.01)
        single = run_single_gate(PARAMS, PAIR, CrosstalkOnly(), Idle(T_M), step=0.01)
        assert series.counts.tolist() == [1]
        assert series.infidelities[0] == pytest.approx(single, abs=1e-14)

    def test_matched_window_reuse_agrees_with_direct(self):
        # The periodic fast path must match one uninterrupted propagation.
        series = run_sequence(PARAMS, PAIR, CrosstalkOnly(), Idle(T_M), 3, step=0.01)
        direct = self.brute_force_infidelity(CrosstalkOnly(), Idle(T_M), 3, 0.01)
        assert series.infidelities[-1] == pytest.approx(direct, abs=1e-11)

    def test_unmatched_general_path_agrees_with_direct(self):
        series = run_sequence(PARAMS, PAIR, CrosstalkOnly(), Idle(30.0), 3, step=0.01)
        direct = self.brute_force_infidelity(CrosstalkOnly(), Idle(30.0), 3, 0.01)
        assert series.infidelities[-1] == pytest.approx(direct, abs=1e-11)
        assert series.abscissa[-1] == pytest.approx(90.0)

    def test_pulsed_tail_agrees_with_direct(self):
        # Decoupled runs extend half a pulse width past the last gate.  A
        # step dividing both the gate time and the tail aligns the window
        # grids with the uninterrupted one, so the products match exactly.
        dd = DynamicalDecoupling(segments=4, width=1.25)
        series = run_sequence(PARAMS, PAIR, dd, Idle(T_M), 3, step=0.0125)
        direct = self.brute_force_infidelity(dd, Idle(T_M), 3, 0.0125)
        assert series.infidelities[-1] == pytest.approx(direct, abs=1e-11)
        assert series.abscissa[-1] == pytest.approx(3 * T_M + 0.625)

    def test_idle_sequences_count_every_gate(self):
        series = run_sequence(PARAMS, PAIR, CrosstalkOnly(), Idle(T_M), 4, step=0.05)
        assert series.counts.tolist() == [1, 2, 3, 4]
        # Bare crosstalk compounds: longer runs cannot improve.
        assert np.all(np.diff(series.infidelities) > 0.0)

    def test_driven_sequences_use_odd_counts(self):
        series = run_sequence(PARAMS, PAIR, CrosstalkOnly(), XGate(T_M), 5, step=0.05)
        assert series.counts.tolist() == [1, 3, 5]
        with pytest.raises(ValueError, match="odd"):
            run_sequence(PARAMS, PAIR, CrosstalkOnly(), XGate(T_M), 4, step=0.05)


class TestSweepJ:
    def runs(self):
        return [SchemeRun("CD", CrosstalkOnly())]

    def test_grid_validation(self):
        with pytest.raises(ValueError):
            sweep_j(PARAMS, PAIR, self.runs(), Idle(T_M), [], step=0.05)
        with pytest.raises(ValueError):
            sweep_j(PARAMS, PAIR, self.runs(), Idle(T_M), [5.0, -1.0], step=0.05)

    def test_threaded_map_matches_sequential(self):
        from concurrent.futures import ThreadPoolExecutor

        j_grid = [2.0, 5.0, 8.0]
        seq = sweep_j(PARAMS, PAIR, self.runs(), Idle(T_M), j_grid, step=0.05)
        with ThreadPoolExecutor(max_workers=3) as pool:
            par = sweep_j(
                PARAMS, PAIR, self.runs(), Idle(T_M), j_grid, step=0.05,
                map_fn=lambda f, it: list(pool.map(f, it)),
            )
        assert seq[0].abscissa.tolist() == par[0].abscissa.tolist()
        assert seq[0].infidelities.tolist() == par[0].infidelities.tolist()

    def test_infidelity_grows_with_coupling(self):
        series = sweep_j(PARAMS, PAIR, self.runs(), Idle(T_M), [1.0, 5.0, 10.0], step=0.05)[0]
        assert np.all(np.diff(series.infidelities) > 0.0)


class TestPresets:
    def test_unknown_preset_rejected(self):
        with pytest.raises(KeyError):
            run_preset("fig99")

    def test_catalog_is_complete(self):
        names = {
            "fig2", "fig3b", "fig3c", "fig4a", "fig4b", "fig4c", "fig5", "fig6",
            "fig8", "fig9", "fig10", "fig11", "fig12", "fig13", "fig14", "fig15",
            "fig16", "fig17", "fig18",
        }
        assert set(PRESETS) == names

    def test_rows_are_canonically_sorted(self):
        rows = run_preset("fig2", step=0.2)
        assert rows == sorted(rows, key=lambda r: (r[0], r[1], r[2]))
        series = {r[0] for r in rows}
        assert series == {"vs_gate_time"}
        assert all(r[1] == "CD" for r in rows)
        assert len(rows) == 117

    def test_waveform_preset_shape(self):
        rows = run_preset("fig4a", step=0.2)
        channels = {r[1] for r in rows if r[0] == "waveform"}
        assert "X1-drive" in channels
        assert "Z2-modulation" in channels
