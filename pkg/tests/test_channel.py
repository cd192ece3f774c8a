import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iabplan.channel import (
    McsRow,
    McsTable,
    RadioParams,
    link_capacity_mbps,
    link_snr_db,
    load_mcs_table,
    los_probability,
    pathloss_db,
    populate_edges,
    select_mcs,
)
from iabplan.errors import McsTableError, ParameterError
from iabplan.scenario import Gnb, ScenarioGraph, generate_synthetic

# Documented 4-row table used throughout: thresholds 0/10/20/30 dB, rising
# modulation, and one top row whose error rate breaches the default cap.
TEST_TABLE = McsTable(
    rows=(
        McsRow(0.0, 0, 2, 0.5, 0.05),
        McsRow(10.0, 1, 4, 0.5, 0.05),
        McsRow(20.0, 2, 6, 0.75, 0.05),
        McsRow(30.0, 3, 8, 0.9258, 0.5),
    )
)


def graph_of(positions):
    nodes = tuple(
        Gnb(id=i, position=(p[0], p[1], 10.0)) for i, p in enumerate(positions)
    )
    return ScenarioGraph(nodes=nodes, edges=(), lambda_mbps=1000.0, area_km2=1.0)


class TestPathloss:
    def test_los_100m_at_27ghz(self):
        pl = pathloss_db(100.0, True, RadioParams())
        assert pl == pytest.approx(32.4 + 42.0 + 20 * math.log10(27.0), abs=1e-6)
        assert pl == pytest.approx(103.03, abs=0.01)

    def test_los_1m_drops_distance_term(self):
        pl = pathloss_db(1.0, True, RadioParams())
        assert pl == pytest.approx(32.4 + 20 * math.log10(27.0), abs=1e-6)
        assert pl == pytest.approx(61.03, abs=0.01)

    def test_nlos_100m_takes_nlos_branch(self):
        pl = pathloss_db(100.0, False, RadioParams())
        expected = 22.4 + 35.3 * 2.0 + 21.3 * math.log10(27.0)
        assert expected > 103.03
        assert pl == pytest.approx(expected, abs=1e-6)
        assert pl == pytest.approx(123.49, abs=0.01)

    def test_nlos_floored_by_los_at_short_range(self):
        # Below roughly 4 m the LoS fit exceeds the NLoS fit at 27 GHz.
        assert pathloss_db(1.0, False, RadioParams()) == pathloss_db(
            1.0, True, RadioParams()
        )

    def test_rejects_nonpositive_distance(self):
        with pytest.raises(ParameterError):
            pathloss_db(0.0, True, RadioParams())
        with pytest.raises(ParameterError):
            pathloss_db(-5.0, True, RadioParams())


class TestLosProbability:
    def test_certain_below_18m(self):
        assert los_probability(10.0) == 1.0
        assert los_probability(18.0) == 1.0

    def test_hand_value_at_36m(self):
        expected = 0.5 + math.exp(-1.0) * 0.5
        assert los_probability(36.0) == pytest.approx(expected, abs=1e-9)
        assert los_probability(36.0) == pytest.approx(0.684, abs=0.001)

    def test_vanishes_at_long_range(self):
        assert los_probability(1e6) < 1e-4

    @settings(max_examples=50)
    @given(st.floats(0.1, 1e5))
    def test_always_a_probability(self, d):
        p = los_probability(d)
        assert 0.0 <= p <= 1.0


class TestSnr:
    def test_hand_value_with_default_params(self):
        params = RadioParams()
        # 33 dBm + 36.12 dB array gain - PL - (-80.98 dBm noise floor)
        assert params.beamforming_gain_db == pytest.approx(36.1236, abs=1e-3)
        assert params.noise_floor_dbm == pytest.approx(-80.9794, abs=1e-3)
        snr = link_snr_db(103.0273, params)
        assert snr == pytest.approx(47.08, abs=0.01)

    def test_zero_when_pathloss_balances_budget(self):
        params = RadioParams()
        pl = params.tx_power_dbm + params.beamforming_gain_db - params.noise_floor_dbm
        assert link_snr_db(pl, params) == pytest.approx(0.0, abs=1e-12)

    def test_linear_in_pathloss(self):
        params = RadioParams()
        assert link_snr_db(100.0, params) - link_snr_db(103.0, params) == pytest.approx(3.0)


class TestSelectMcs:
    def test_below_all_thresholds_yields_none(self):
        assert select_mcs(-1.0, TEST_TABLE, 0.1) is None

    def test_saturates_at_best_low_bler_row(self):
        # 35 dB clears every threshold, but the top row's BLER of 0.5 is
        # over the cap, so index 2 wins.
        row = select_mcs(35.0, TEST_TABLE, 0.1)
        assert row.mcs_index == 2

    def test_threshold_is_inclusive(self):
        row = select_mcs(20.0, TEST_TABLE, 0.1)
        assert row.mcs_index == 2

    def test_relaxed_bler_cap_unlocks_top_row(self):
        row = select_mcs(35.0, TEST_TABLE, 0.6)
        assert row.mcs_index == 3

    @settings(max_examples=50)
    @given(st.floats(-10, 40), st.floats(-10, 40))
    def test_capacity_monotone_in_snr(self, s1, s2):
        params = RadioParams()
        lo, hi = min(s1, s2), max(s1, s2)
        c_lo = link_capacity_mbps(select_mcs(lo, TEST_TABLE, 0.1), params)
        c_hi = link_capacity_mbps(select_mcs(hi, TEST_TABLE, 0.1), params)
        assert c_lo <= c_hi

    def test_contract_of_returned_row(self):
        for snr in (-5.0, 0.0, 5.0, 15.0, 25.0, 45.0):
            row = select_mcs(snr, TEST_TABLE, 0.1)
            if row is not None:
                assert row.snr_db <= snr
                assert row.bler < 0.1


class TestCapacity:
    def test_top_rate_hand_value(self):
        # 8 * 0.9258 * (1584 / 8.9286e-6 s) * 0.82 * 0.7 = 754.21 Mb/s
        params = RadioParams(mimo_layers=1)
        row = McsRow(25.3, 27, 8, 0.9258, 0.07)
        assert params.symbol_duration_s == pytest.approx(1e-3 / 8 / 14, rel=1e-12)
        assert link_capacity_mbps(row, params) == pytest.approx(754.21, abs=0.01)

    def test_no_mcs_means_zero(self):
        assert link_capacity_mbps(None, RadioParams()) == 0.0

    def test_two_layers_exactly_double(self):
        row = McsRow(25.3, 27, 8, 0.9258, 0.07)
        c1 = link_capacity_mbps(row, RadioParams(mimo_layers=1))
        c2 = link_capacity_mbps(row, RadioParams(mimo_layers=2))
        assert c2 == pytest.approx(2.0 * c1, rel=1e-12)


class TestMcsTableAsset:
    def test_packaged_table_loads_and_is_well_formed(self):
        table = load_mcs_table()
        assert len(table.rows) == 28
        top = table.rows[-1]
        assert top.modulation_order == 8
        assert top.code_rate == pytest.approx(0.9258, abs=1e-4)
        assert all(r.bler < 0.1 for r in table.rows)
        effs = [r.modulation_order * r.code_rate for r in table.rows]
        assert effs == sorted(effs)

    def test_custom_path_roundtrip(self, tmp_path):
        path = tmp_path / "table.csv"
        path.write_text(
            "snr_db,mcs_index,modulation_order,code_rate,bler\n"
            "0.0,0,2,0.5,0.05\n10.0,1,4,0.5,0.05\n"
        )
        table = load_mcs_table(path)
        assert len(table.rows) == 2

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "table.csv"
        path.write_text("snr,mcs\n0,1\n")
        with pytest.raises(McsTableError, match="header"):
            load_mcs_table(path)

    def test_unsorted_rows_rejected(self):
        with pytest.raises(McsTableError, match="sorted"):
            McsTable(rows=(McsRow(10, 1, 4, 0.5, 0.05), McsRow(0, 0, 2, 0.5, 0.05)))

    def test_non_increasing_mcs_rejected(self):
        with pytest.raises(McsTableError, match="strictly increasing"):
            McsTable(rows=(McsRow(0, 1, 4, 0.5, 0.05), McsRow(10, 1, 2, 0.5, 0.05)))


class TestPopulateEdges:
    def test_close_pair_always_linked_symmetrically(self):
        g = populate_edges(graph_of([(0, 0), (10, 0)]), seed=5)
        pairs = {(e.src, e.dst): e for e in g.edges}
        assert set(pairs) == {(0, 1), (1, 0)}
        assert pairs[0, 1].capacity_mbps == pairs[1, 0].capacity_mbps
        assert pairs[0, 1].snr_db == pairs[1, 0].snr_db

    def test_out_of_reach_pair_has_no_edge(self):
        # 50 km: even a lucky LoS draw stays below the lowest threshold.
        g = populate_edges(graph_of([(0, 0), (50000, 0)]), seed=5)
        assert g.edges == ()

    def test_deterministic_per_seed(self):
        base = generate_synthetic(10, 45, seed=2)
        a = populate_edges(base, seed=9)
        b = populate_edges(base, seed=9)
        assert a.edges == b.edges
        c = populate_edges(base, seed=10)
        assert a.edges != c.edges

    def test_synthetic_graphs_are_dense(self):
        # Without obstacle modeling the candidate graph carries far more
        # edges than nodes.
        g = populate_edges(generate_synthetic(15, 45, seed=1), seed=1)
        assert len(g.edges) > 2 * len(g.nodes)

    def test_colocated_nodes_rejected(self):
        g = graph_of([(5, 5), (5, 5)])
        with pytest.raises(ParameterError, match="co-located"):
            populate_edges(g, seed=1)


class TestRadioParamsValidation:
    def test_ratio_fields_must_be_fractions(self):
        with pytest.raises(ParameterError):
            RadioParams(dl_slot_ratio=1.5)
        with pytest.raises(ParameterError):
            RadioParams(overhead=0.0)
        with pytest.raises(ParameterError):
            RadioParams(max_bler=1.0)

    def test_mimo_layers_positive(self):
        with pytest.raises(ParameterError):
            RadioParams(mimo_layers=0)
