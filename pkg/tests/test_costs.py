import pytest

from sigauth.costs import (
    CostParams,
    cloud_cost,
    format_usd,
    scaling_table,
    total_cost,
    vm_hours,
)
from sigauth.errors import NegativeDuration, NegativeInput


class TestVmHours:
    def test_difference(self):
        assert vm_hours(2.0, 5.0) == 3.0

    def test_zero_duration(self):
        assert vm_hours(5.0, 5.0) == 0.0

    def test_end_before_start_rejected(self):
        with pytest.raises(NegativeDuration):
            vm_hours(5.0, 2.0)


class TestCloudCost:
    def test_unit_case_is_bit_exact(self):
        assert cloud_cost(1, 0.21, 1.0) == 0.21

    def test_zero_inputs(self):
        assert cloud_cost(0, 0.21, 5.0) == 0.0
        assert cloud_cost(3, 0.0, 5.0) == 0.0
        assert cloud_cost(3, 0.21, 0.0) == 0.0

    def test_negative_inputs_rejected(self):
        with pytest.raises(NegativeInput):
            cloud_cost(-1, 0.21, 1.0)
        with pytest.raises(NegativeInput):
            cloud_cost(1, -0.21, 1.0)
        with pytest.raises(NegativeInput):
            cloud_cost(1, 0.21, -1.0)

    def test_linear_in_vm_count(self):
        for n in (1, 2, 5, 8, 64):
            assert cloud_cost(2 * n, 0.21, 10.0) == 2 * cloud_cost(n, 0.21, 10.0)


class TestTotalCost:
    def test_hand_case(self):
        p = CostParams(cost_i=100.0, n_v=2, c_v=0.21, t_s=0.0, t_c=10.0)
        assert total_cost(p) == pytest.approx(104.2, abs=1e-12)

    def test_hardware_only(self):
        p = CostParams(cost_i=250.0, n_v=0, c_v=0.21, t_s=1.0, t_c=9.0)
        assert total_cost(p) == 250.0

    def test_propagates_duration_error(self):
        p = CostParams(cost_i=0.0, n_v=1, c_v=0.21, t_s=9.0, t_c=1.0)
        with pytest.raises(NegativeDuration):
            total_cost(p)

    def test_params_validate(self):
        with pytest.raises(NegativeInput):
            CostParams(cost_i=-1.0, n_v=1, c_v=0.21, t_s=0.0, t_c=1.0).validate()
        with pytest.raises(NegativeInput):
            CostParams(cost_i=0.0, n_v=-1, c_v=0.21, t_s=0.0, t_c=1.0).validate()


class TestScalingTable:
    def test_values_and_order(self):
        table = scaling_table(range(1, 11), 0.21, 1.0)
        assert len(table) == 10
        assert table[0] == (1, 0.21)
        assert table[-1] == (10, pytest.approx(2.1, abs=1e-12))
        for n, cost in table:
            assert cost == cloud_cost(n, 0.21, 1.0)

    def test_exactly_linear(self):
        table = dict(scaling_table([1, 2, 4, 8], 0.37, 3.0))
        assert table[2] == 2 * table[1]
        assert table[4] == 2 * table[2]
        assert table[8] == 2 * table[4]

    def test_hardware_offset(self):
        table = scaling_table([1, 2], 0.21, 1.0, cost_i=100.0)
        assert table[0] == (1, pytest.approx(100.21, abs=1e-12))
        assert table[1] == (2, pytest.approx(100.42, abs=1e-12))

    def test_singleton(self):
        assert scaling_table([3], 0.5, 2.0) == [(3, 3.0)]

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            scaling_table([], 0.21, 1.0)


class TestFormatUsd:
    def test_two_decimals_only_at_output(self):
        assert format_usd(0.21) == "0.21"
        assert format_usd(104.2) == "104.20"
        assert format_usd(2.1) == "2.10"
        assert format_usd(0.0) == "0.00"
        assert format_usd(1.005 - 0.005) == "1.00"
        # rounding happens only in the string, never in the arithmetic
        assert cloud_cost(3, 1.0 / 3.0, 1.0) == 3 * (1.0 / 3.0)
