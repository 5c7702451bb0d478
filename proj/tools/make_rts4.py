#!/usr/bin/env python3
"""Write cases/rts4_96bus.json: four copies of the 24-bus reliability test
area joined by AC ties and HVDC links, with wind farms in two areas.

Synthetic and representative only. Run from the repository root.
"""
import json
import sys

# from, to, R, X, B (p.u. on 100 MVA), rating MW
BRANCHES = [
    (1, 2, 0.0026, 0.0139, 0.4611, 175), (1, 3, 0.0546, 0.2112, 0.0572, 175),
    (1, 5, 0.0218, 0.0845, 0.0229, 175), (2, 4, 0.0328, 0.1267, 0.0343, 175),
    (2, 6, 0.0497, 0.1920, 0.0520, 175), (3, 9, 0.0308, 0.1190, 0.0322, 175),
    (3, 24, 0.0023, 0.0839, 0.0, 400), (4, 9, 0.0268, 0.1037, 0.0281, 175),
    (5, 10, 0.0228, 0.0883, 0.0239, 175), (6, 10, 0.0139, 0.0605, 2.4590, 175),
    (7, 8, 0.0159, 0.0614, 0.0166, 175), (8, 9, 0.0427, 0.1651, 0.0447, 175),
    (8, 10, 0.0427, 0.1651, 0.0447, 175), (9, 11, 0.0023, 0.0839, 0.0, 400),
    (9, 12, 0.0023, 0.0839, 0.0, 400), (10, 11, 0.0023, 0.0839, 0.0, 400),
    (10, 12, 0.0023, 0.0839, 0.0, 400), (11, 13, 0.0061, 0.0476, 0.0999, 500),
    (11, 14, 0.0054, 0.0418, 0.0879, 500), (12, 13, 0.0061, 0.0476, 0.0999, 500),
    (12, 23, 0.0124, 0.0966, 0.2030, 500), (13, 23, 0.0111, 0.0865, 0.1818, 500),
    (14, 16, 0.0050, 0.0389, 0.0818, 500), (15, 16, 0.0022, 0.0173, 0.0364, 500),
    (15, 21, 0.0063, 0.0490, 0.1030, 500), (15, 21, 0.0063, 0.0490, 0.1030, 500),
    (15, 24, 0.0067, 0.0519, 0.1091, 500), (16, 17, 0.0033, 0.0259, 0.0545, 500),
    (16, 19, 0.0030, 0.0231, 0.0485, 500), (17, 18, 0.0018, 0.0144, 0.0303, 500),
    (17, 22, 0.0135, 0.1053, 0.2212, 500), (18, 21, 0.0033, 0.0259, 0.0545, 500),
    (18, 21, 0.0033, 0.0259, 0.0545, 500), (19, 20, 0.0051, 0.0396, 0.0833, 500),
    (19, 20, 0.0051, 0.0396, 0.0833, 500), (20, 23, 0.0028, 0.0216, 0.0455, 500),
    (20, 23, 0.0028, 0.0216, 0.0455, 500), (21, 22, 0.0087, 0.0678, 0.1424, 500),
]

LOADS = {1: 108, 2: 97, 3: 180, 4: 74, 5: 71, 6: 136, 7: 125, 8: 171, 9: 175, 10: 195,
         13: 265, 14: 194, 15: 317, 16: 100, 18: 333, 19: 181, 20: 128}

# bus, unit size MW, count, base cost $/MWh. Costs are heat rate times fuel
# price for each unit type (oil CT 43.5, oil 27.6/23.5/23.0, coal 14.4/11.6/11.4,
# nuclear 6.0, hydro 2.0).
UNITS = [
    (1, 20, 2, 43.5), (1, 76, 2, 14.4), (2, 20, 2, 43.5), (2, 76, 2, 14.4),
    (7, 100, 3, 23.5), (13, 197, 3, 23.0), (15, 12, 5, 27.6), (15, 155, 1, 11.6),
    (16, 155, 1, 11.6), (18, 400, 1, 6.0), (21, 400, 1, 6.0), (22, 50, 6, 2.0),
    (23, 155, 2, 11.6), (23, 350, 1, 11.4),
]

AREAS = {
    # load scale, cost scale
    1: (0.85, 0.92),
    2: (1.10, 1.10),
    3: (1.05, 1.04),
    4: (0.80, 1.00),
}

# Tie lines: (from bus, to bus, R, X, B, rating MW). Two ties join areas 1 and 2,
# giving five corridors: 1-2, 1-3, 1-4, 2-3, 3-4.
TIES = [
    (107, 203, 0.0120, 0.0970, 0.2000, 300),
    (113, 215, 0.0100, 0.0750, 0.1600, 300),
    (121, 322, 0.0120, 0.0970, 0.2000, 300),
    (123, 423, 0.0110, 0.0860, 0.1800, 300),
    (223, 318, 0.0120, 0.0970, 0.2000, 300),
    (316, 416, 0.0110, 0.0860, 0.1800, 300),
]

HVDC = [
    ("H1-3", 101, 301, 200),
    ("H4-2", 414, 214, 200),
    ("H4-3", 420, 320, 200),
]
HVDC_LOSS = {"A": 0.025, "B": 0.016, "C": 0.004}

WIND = [(4, 8, 200), (4, 19, 150), (4, 3, 150), (1, 6, 150)]  # area, bus, MW


def bus_id(area, n):
    return str(area * 100 + n)


def main(path):
    buses, lines, gens, loads = [], [], [], []
    for area in sorted(AREAS):
        load_scale, cost_scale = AREAS[area]
        for n in range(1, 25):
            buses.append({"id": bus_id(area, n), "zone": str(area),
                          "is_slack": area == 1 and n == 13})
        merged = {}
        for i, (f, t, r, x, b, cap) in enumerate(BRANCHES):
            key = (f, t)
            if area == 4 and key in {(19, 20), (20, 23)}:
                # Area 4 carries single equivalents of these double circuits.
                if key in merged:
                    continue
                merged[key] = True
                r, x, b, cap = r / 2, x / 2, b * 2, cap * 2
            circuit = sum(1 for e in BRANCHES[:i] if (e[0], e[1]) == key) + 1
            lid = f"{bus_id(area, f)}-{bus_id(area, t)}" + (f"-{circuit}" if circuit > 1 else "")
            lines.append({"id": lid, "from": bus_id(area, f), "to": bus_id(area, t),
                          "susceptance": round(1.0 / x, 6), "resistance": r,
                          "shunt_susceptance": b, "capacity": cap})
        for n, mw in LOADS.items():
            loads.append({"id": f"d{bus_id(area, n)}", "bus": bus_id(area, n),
                          "utility": 1000, "d_max": round(mw * load_scale, 3)})
        k = 0
        for n, size, count, cost in UNITS:
            for u in range(count):
                k += 1
                gens.append({"id": f"g{bus_id(area, n)}-{u + 1}", "bus": bus_id(area, n),
                             "cost": round(cost * cost_scale + 0.01 * k, 4), "g_max": size})
        # Synchronous condenser: no active power, holds the bus voltage.
        gens.append({"id": f"sc{bus_id(area, 14)}", "bus": bus_id(area, 14), "cost": 0.0, "g_max": 0})
    for i, (area, n, mw) in enumerate(WIND):
        gens.append({"id": f"w{bus_id(area, n)}", "bus": bus_id(area, n),
                     "cost": round(1.0 + 0.01 * i, 4), "g_max": mw, "wind": True})
    for f, t, r, x, b, cap in TIES:
        lines.append({"id": f"{f}-{t}", "from": str(f), "to": str(t),
                      "susceptance": round(1.0 / x, 6), "resistance": r,
                      "shunt_susceptance": b, "capacity": cap})
    links = [{"id": lid, "from": str(f), "to": str(t), "capacity": cap, "loss_params": HVDC_LOSS}
             for lid, f, t, cap in HVDC]
    case = {
        "name": "rts4-96bus-synthetic",
        "base_power_mva": 100,
        "base_voltage_kv": 230,
        "buses": buses,
        "ac_lines": lines,
        "hvdc_links": links,
        "generators": gens,
        "loads": loads,
        "zones": {str(a): {"intra_loss": 0} for a in sorted(AREAS)},
    }
    with open(path, "w") as fh:
        json.dump(case, fh, indent=1)
        fh.write("\n")
    print(f"{path}: {len(buses)} buses, {len(lines)} AC lines, {len(links)} HVDC, "
          f"{len(gens)} generators, {len(loads)} loads")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "cases/rts4_96bus.json")
