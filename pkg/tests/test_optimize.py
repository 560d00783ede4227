import numpy as np
import pytest

from xtalksim.model import SystemParams, angular_to_cyclic_mhz, cyclic_mhz_to_angular
from xtalksim.optimize import (
    DEFAULT_GRID_MAX_MHZ,
    DEFAULT_GRID_STEP_MHZ,
    corner_averaged_fidelity,
    default_gamma_grid,
    first_local_minimum,
    scan_gamma,
)

PARAMS = SystemParams.from_mhz(50.0, 5.0)
T_M = PARAMS.matched_time()
STEP = DEFAULT_GRID_STEP_MHZ


class TestFirstLocalMinimum:
    def test_simple_dip(self):
        assert first_local_minimum([3.0, 2.0, 1.0, 2.0]) == 2
        assert first_local_minimum([2.0, 1.0, 2.0]) == 1

    def test_first_of_several(self):
        assert first_local_minimum([3.0, 1.0, 2.0, 0.5, 2.0]) == 1

    def test_plateau_resolves_leftmost(self):
        assert first_local_minimum([3.0, 1.0, 1.0, 1.0, 2.0]) == 1
        v = [3.0, 1.0, 1.0 + 1e-14, 1.0, 2.0]
        assert first_local_minimum(v) == 1

    def test_monotone_curves_have_none(self):
        assert first_local_minimum([1.0, 2.0, 3.0]) is None
        assert first_local_minimum([3.0, 2.0, 1.0]) is None

    def test_still_falling_at_edge_is_none(self):
        assert first_local_minimum([5.0, 4.0, 3.0, 3.0]) is None

    def test_descent_after_rejected_plateau(self):
        # A plateau running into the edge is no minimum, but an earlier dip is.
        assert first_local_minimum([3.0, 3.0, 2.0, 2.0]) is None
        assert first_local_minimum([3.0, 1.5, 2.5, 1.0, 1.0]) == 1


class TestDefaultGrid:
    def test_shape_and_step(self):
        grid = default_gamma_grid()
        assert grid[0] == 0.0
        assert angular_to_cyclic_mhz(grid[1] - grid[0]) == pytest.approx(STEP)
        assert angular_to_cyclic_mhz(grid[-1]) <= DEFAULT_GRID_MAX_MHZ + 1e-9
        assert grid.size == 378

    def test_custom_bounds(self):
        grid = default_gamma_grid(step_mhz=10.0, max_mhz=100.0)
        assert grid.size == 11
        assert angular_to_cyclic_mhz(grid[-1]) == pytest.approx(100.0)


class TestScanGamma:
    @pytest.mark.parametrize(
        "cycles, expect_mhz", [(4, 201.0), (6, 321.0), (8, 442.0)]
    )
    def test_idle_amplitude_table(self, cycles, expect_mhz):
        scan = scan_gamma("fm2-idle", PARAMS, cycles, T_M)
        assert scan.found
        assert abs(scan.gamma_opt_mhz - expect_mhz) <= STEP

    @pytest.mark.parametrize(
        "cycles, expect_mhz", [(4, 244.0), (6, 363.0), (8, 482.0)]
    )
    def test_x_gate_amplitude_table(self, cycles, expect_mhz):
        scan = scan_gamma("fm2-x", PARAMS, cycles, T_M)
        assert scan.found
        assert abs(scan.gamma_opt_mhz - expect_mhz) <= STEP

    @pytest.mark.parametrize(
        "cycles, expect_mhz", [(4, 168.2), (6, 243.8), (8, 322.9)]
    )
    def test_unmatched_first_order_table(self, cycles, expect_mhz):
        scan = scan_gamma("fm1", PARAMS, cycles, 30.0)
        assert scan.found
        assert abs(scan.gamma_opt_mhz - expect_mhz) <= STEP

    def test_refinement_stability(self):
        # Halving the grid step moves the optimum by at most one coarse step.
        coarse = scan_gamma("fm2-idle", PARAMS, 4, T_M)
        fine = scan_gamma(
            "fm2-idle",
            PARAMS,
            4,
            T_M,
            grid=default_gamma_grid(step_mhz=STEP / 2.0),
        )
        assert abs(fine.gamma_opt - coarse.gamma_opt) <= coarse.grid_step + 1e-12

    def test_callable_functional(self):
        grid = cyclic_mhz_to_angular(1.0) * np.arange(50)
        scan = scan_gamma(lambda g: (g - grid[17]) ** 2 + 0.5, grid=grid)
        assert scan.minimum_index == 17

    def test_no_minimum_in_short_range(self):
        scan = scan_gamma(
            "fm2-idle", PARAMS, 4, T_M, grid=default_gamma_grid(max_mhz=100.0)
        )
        assert not scan.found
        assert scan.gamma_opt is None
        assert scan.gamma_opt_mhz is None

    def test_grid_validation(self):
        with pytest.raises(ValueError):
            scan_gamma(lambda g: g, grid=np.array([0.0, 1.0]))
        with pytest.raises(ValueError):
            scan_gamma(lambda g: g, grid=np.array([0.0, 1.0, 1.5]))
        with pytest.raises(ValueError):
            scan_gamma("nope", PARAMS, 4, T_M)


class TestCornerAveraging:
    def quadratic_scan(self):
        grid = cyclic_mhz_to_angular(1.0) * np.arange(30)
        return scan_gamma(lambda g: (g - grid[10]) ** 2 + 0.25, grid=grid)

    def test_averages_the_two_neighbors(self):
        scan = self.quadratic_scan()
        center = scan.gamma_opt
        dg = scan.grid_step
        simulate = lambda g: 1.0 - (g - center) ** 2
        expect = 1.0 - dg**2
        assert corner_averaged_fidelity(simulate, scan) == pytest.approx(expect, rel=1e-12)

    def test_elementwise_on_arrays(self):
        scan = self.quadratic_scan()
        simulate = lambda g: np.array([g, 2.0 * g])
        avg = corner_averaged_fidelity(simulate, scan)
        assert np.allclose(avg, [scan.gamma_opt, 2.0 * scan.gamma_opt])

    def test_rejects_scan_without_minimum(self):
        grid = cyclic_mhz_to_angular(1.0) * np.arange(30)
        scan = scan_gamma(lambda g: -g, grid=grid)
        with pytest.raises(ValueError):
            corner_averaged_fidelity(lambda g: 1.0, scan)

    def test_zero_lower_corner_is_allowed(self):
        # A minimum right next to zero amplitude averages over {0, 2 dg}.
        grid = cyclic_mhz_to_angular(1.0) * np.arange(30)
        values = np.concatenate([[0.5, 0.4], np.linspace(0.45, 2.0, 28)])
        scan = scan_gamma(lambda g: float(values[np.argmin(np.abs(grid - g))]), grid=grid)
        assert scan.minimum_index == 1
        avg = corner_averaged_fidelity(lambda g: g, scan)
        assert avg == pytest.approx(scan.gamma_opt, rel=1e-12)

    def test_rejects_negative_lower_corner(self):
        # Only reachable with a handcrafted record; grid scans never select
        # an edge point.
        from xtalksim.optimize import GammaScan

        grid = cyclic_mhz_to_angular(1.0) * np.arange(5)
        scan = GammaScan(grid=grid, values=np.ones(5), minimum_index=0)
        with pytest.raises(ValueError, match="below zero"):
            corner_averaged_fidelity(lambda g: 1.0, scan)
