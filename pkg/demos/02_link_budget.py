"""Walk the link budget chain: distance -> pathloss -> SNR -> MCS -> rate.

Shows both propagation branches and where the adaptive modulation steps
sit, using the packaged 28-row lookup table.
"""

from iabplan import (
    RadioParams,
    link_capacity_mbps,
    link_snr_db,
    load_mcs_table,
    los_probability,
    pathloss_db,
    select_mcs,
)

params = RadioParams()  # 27 GHz, 400 MHz, 8x8 arrays, 33 dBm
table = load_mcs_table()

print(f"array gain: {params.beamforming_gain_db:.2f} dB, "
      f"noise floor: {params.noise_floor_dbm:.2f} dBm")
print(f"\n{'d [m]':>6} {'P(LoS)':>7} | {'LoS SNR':>8} {'MCS':>4} {'Mb/s':>7} "
      f"| {'NLoS SNR':>8} {'MCS':>4} {'Mb/s':>7}")

for d in (10, 25, 50, 100, 200, 400, 800):
    p_los = los_probability(d)
    cols = [f"{d:>6} {p_los:>7.3f}"]
    for los in (True, False):
        snr = link_snr_db(pathloss_db(d, los, params), params)
        row = select_mcs(snr, table, params.max_bler)
        rate = link_capacity_mbps(row, params)
        idx = row.mcs_index if row else "-"
        cols.append(f"{snr:>8.1f} {idx:>4} {rate:>7.1f}")
    print(" | ".join(cols))

top = table.rows[-1]
print(f"\npeak rate, 1 layer:  {link_capacity_mbps(top, params):7.1f} Mb/s")
two = RadioParams(mimo_layers=2)
print(f"peak rate, 2 layers: {link_capacity_mbps(top, two):7.1f} Mb/s")
