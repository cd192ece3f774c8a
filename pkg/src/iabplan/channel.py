"""mmWave link budget: pathloss, LoS probability, SNR, link adaptation,
and NR downlink capacity.

The propagation model is the urban-microcell street-canyon fit from the
3GPP TR 38.901 family, and the capacity chain follows the TS 38.306 data
rate structure: a beamformed SNR selects the highest MCS whose error rate
stays below the target, and the MCS spectral efficiency scales the slot
budget of the carrier.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from importlib import resources

import numpy as np

from .errors import McsTableError, ParameterError
from .scenario import (
    CandidateEdge,
    ScenarioGraph,
    assign_demands,
    estimate_demand,
    generate_synthetic,
    prune_edges,
    remove_isolated,
    sample_coverage,
)

DEFAULT_MCS_ASSET = "mcs_table_256qam.csv"


@dataclass(frozen=True)
class RadioParams:
    """Radio configuration for the synthetic link model.

    Defaults describe a 27 GHz carrier with 400 MHz bandwidth, 132 resource
    blocks at numerology 3, 8x8 planar arrays on both ends, and a 10% block
    error target.
    """

    fc_ghz: float = 27.0
    bandwidth_mhz: float = 400.0
    rb_count: int = 132
    numerology: int = 3
    dl_slot_ratio: float = 0.7
    overhead: float = 0.18
    noise_density_dbm_hz: float = -174.0
    noise_figure_db: float = 7.0
    antenna_elems: tuple[int, int] = (8, 8)
    mimo_layers: int = 1
    tx_power_dbm: float = 33.0
    max_bler: float = 0.1

    def __post_init__(self):
        if self.fc_ghz <= 0 or self.bandwidth_mhz <= 0 or self.rb_count <= 0:
            raise ParameterError("carrier, bandwidth, and RB count must be positive")
        if self.numerology < 0:
            raise ParameterError("numerology must be non-negative")
        for name in ("dl_slot_ratio", "overhead", "max_bler"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ParameterError(f"{name} must lie in (0, 1), got {v}")
        if self.mimo_layers < 1:
            raise ParameterError("mimo_layers must be >= 1")
        if min(self.antenna_elems) < 1:
            raise ParameterError("antenna_elems must be positive")

    @property
    def beamforming_gain_db(self) -> float:
        # Single dominant ray: SVD beamforming with unit-norm vectors attains
        # the full array gain N_tx * N_rx on both ends of the link.
        n_elems = self.antenna_elems[0] * self.antenna_elems[1]
        return 10.0 * math.log10(n_elems * n_elems)

    @property
    def noise_floor_dbm(self) -> float:
        bw_hz = self.bandwidth_mhz * 1e6
        return self.noise_density_dbm_hz + 10.0 * math.log10(bw_hz) + self.noise_figure_db

    @property
    def symbol_duration_s(self) -> float:
        # Average OFDM symbol duration: slot length at this numerology over
        # the 14 symbols per slot, cyclic-prefix irregularity ignored.
        return (1e-3 / (2 ** self.numerology)) / 14.0


@dataclass(frozen=True)
class McsRow:
    snr_db: float
    mcs_index: int
    modulation_order: int
    code_rate: float
    bler: float


@dataclass(frozen=True)
class McsTable:
    """Ordered link-adaptation rows: SNR threshold, MCS, and error rate."""

    rows: tuple[McsRow, ...]

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(self.rows))
        if not self.rows:
            raise McsTableError("MCS table is empty")
        for prev, cur in zip(self.rows, self.rows[1:]):
            if cur.snr_db < prev.snr_db:
                raise McsTableError(
                    f"rows not sorted by snr_db: {cur.snr_db} after {prev.snr_db}"
                )
            if cur.mcs_index <= prev.mcs_index:
                raise McsTableError(
                    f"mcs_index not strictly increasing at snr_db={cur.snr_db}"
                )


def load_mcs_table(path=None) -> McsTable:
    """Load an MCS table CSV; without a path, the packaged table is used.

    Expected header: ``snr_db,mcs_index,modulation_order,code_rate,bler``.
    """
    if path is None:
        ref = resources.files("iabplan.data").joinpath(DEFAULT_MCS_ASSET)
        text = ref.read_text(encoding="utf-8")
        lines = text.splitlines()
    else:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    reader = csv.DictReader(lines)
    expected = ["snr_db", "mcs_index", "modulation_order", "code_rate", "bler"]
    if reader.fieldnames != expected:
        raise McsTableError(
            f"bad header {reader.fieldnames}, expected {expected}"
        )
    rows = []
    for i, rec in enumerate(reader):
        try:
            rows.append(
                McsRow(
                    snr_db=float(rec["snr_db"]),
                    mcs_index=int(rec["mcs_index"]),
                    modulation_order=int(rec["modulation_order"]),
                    code_rate=float(rec["code_rate"]),
                    bler=float(rec["bler"]),
                )
            )
        except (TypeError, ValueError) as exc:
            raise McsTableError(f"row {i}: {exc}") from exc
    return McsTable(rows=tuple(rows))


def pathloss_db(distance_m: float, los: bool, params: RadioParams) -> float:
    """UMi street-canyon pathloss in dB; NLoS is floored by the LoS value."""
    if distance_m <= 0:
        raise ParameterError(f"distance must be positive, got {distance_m}")
    log_d = math.log10(distance_m)
    log_f = math.log10(params.fc_ghz)
    pl_los = 32.4 + 21.0 * log_d + 20.0 * log_f
    if los:
        return pl_los
    pl_nlos = 22.4 + 35.3 * log_d + 21.3 * log_f
    return max(pl_los, pl_nlos)


def los_probability(distance_m: float) -> float:
    """UMi outdoor LoS probability; certain below 18 m, decaying beyond."""
    if distance_m <= 0:
        raise ParameterError(f"distance must be positive, got {distance_m}")
    if distance_m <= 18.0:
        return 1.0
    ratio = 18.0 / distance_m
    return ratio + math.exp(-distance_m / 36.0) * (1.0 - ratio)


def link_snr_db(pathloss: float, params: RadioParams) -> float:
    """Beamformed link SNR: tx power + array gain - pathloss - noise floor."""
    return (
        params.tx_power_dbm
        - pathloss
        + params.beamforming_gain_db
        - params.noise_floor_dbm
    )


def select_mcs(snr_db: float, table: McsTable, max_bler: float) -> McsRow | None:
    """Highest MCS whose threshold is met and whose BLER is under the cap.

    The threshold rule is inclusive: an SNR exactly equal to a row's
    threshold qualifies that row.  Returns ``None`` when nothing qualifies.
    """
    best = None
    for row in table.rows:
        if row.bler < max_bler and snr_db >= row.snr_db:
            if best is None or row.mcs_index > best.mcs_index:
                best = row
    return best


def link_capacity_mbps(mcs: McsRow | None, params: RadioParams) -> float:
    """NR downlink capacity in Mb/s for the selected MCS; 0 when none fits."""
    if mcs is None:
        return 0.0
    subcarriers = 12.0 * params.rb_count
    rate_bps = (
        params.mimo_layers
        * mcs.modulation_order
        * mcs.code_rate
        * (subcarriers / params.symbol_duration_s)
        * (1.0 - params.overhead)
        * params.dl_slot_ratio
    )
    return rate_bps / 1e6


def _pair_rng(seed: int, a: int, b: int) -> np.random.Generator:
    # Seeded per unordered pair so edge generation is order-independent and
    # safe to parallelize.
    lo, hi = (a, b) if a <= b else (b, a)
    return np.random.default_rng([seed, lo, hi])


def populate_edges(
    graph: ScenarioGraph,
    params: RadioParams | None = None,
    table: McsTable | None = None,
    seed: int = 0,
) -> ScenarioGraph:
    """Fill in candidate edges for every node pair with a feasible MCS.

    LoS is drawn once per unordered pair, so the resulting SNR and capacity
    are symmetric; pairs whose SNR supports no MCS get no edge at all.
    """
    params = params or RadioParams()
    table = table or load_mcs_table()
    ids = graph.node_ids()
    pos = {n.id: n.position for n in graph.nodes}
    edges: list[CandidateEdge] = []
    for ai in range(len(ids)):
        for bi in range(ai + 1, len(ids)):
            i, j = ids[ai], ids[bi]
            dx = pos[i][0] - pos[j][0]
            dy = pos[i][1] - pos[j][1]
            dz = pos[i][2] - pos[j][2]
            dist = math.sqrt(dx * dx + dy * dy + dz * dz)
            if dist <= 0:
                raise ParameterError(f"nodes {i} and {j} are co-located")
            u = float(_pair_rng(seed, i, j).random())
            los = u < los_probability(dist)
            snr = link_snr_db(pathloss_db(dist, los, params), params)
            row = select_mcs(snr, table, params.max_bler)
            if row is None:
                continue
            cap = link_capacity_mbps(row, params)
            edges.append(CandidateEdge(src=i, dst=j, snr_db=snr, capacity_mbps=cap))
            edges.append(CandidateEdge(src=j, dst=i, snr_db=snr, capacity_mbps=cap))
    return replace(graph, edges=tuple(edges))


def build_synthetic_scenario(
    n: int,
    density_per_km2: float,
    seed: int,
    *,
    radius_m: float = 100.0,
    lambda_mbps: float = 1000.0,
    resolution_m: float = 1.0,
    height_m: float = 10.0,
    params: RadioParams | None = None,
    table: McsTable | None = None,
) -> tuple[ScenarioGraph, list[int]]:
    """Run the full synthetic pipeline: place, estimate demand, build edges,
    prune under-capacity links, and drop out-of-range nodes.

    Returns the ready-to-plan graph and the list of removed node ids.
    """
    graph = generate_synthetic(
        n, density_per_km2, seed, height_m=height_m, lambda_mbps=lambda_mbps
    )
    grid = sample_coverage(graph, radius_m, resolution_m)
    graph = assign_demands(graph, estimate_demand(grid, lambda_mbps))
    graph = populate_edges(graph, params, table, seed)
    graph = prune_edges(graph)
    return remove_isolated(graph)
