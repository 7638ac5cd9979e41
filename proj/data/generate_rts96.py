#!/usr/bin/env python3
"""Writes rts96_two_area.json, the two-area IEEE RTS-96 grid bundled with the examples.

Network, load and generator cost data follow the IEEE RTS-96 system (as
distributed with MATPOWER's case24_ieee_rts, duplicated for area 2 with bus
ids 2xx and joined by three interties). Reserve data are not part of RTS-96
and are assumptions of this repository:

  * reserve caps per unit type (MW, symmetric up/down),
  * a uniform procurement price of 10 $/MW in both directions,
  * activation prices per unit type ($/MWh, equal up and down).

The 400 MW nuclear units offer no reserve. Lines 214-216 and 216-219 are the
DLR lines, with their nominal rating set to 250 MW and a Drake conductor
whose maximum temperature reproduces 250 MW at 230 kV under the default NLR
weather.

Run:  python3 generate_rts96.py > rts96_two_area.json
"""

import json
import sys

AREA_LOADS = {1: 108, 2: 97, 3: 180, 4: 74, 5: 71, 6: 136, 7: 125, 8: 171, 9: 175,
              10: 195, 13: 265, 14: 194, 15: 317, 16: 100, 18: 333, 19: 181, 20: 128}

# (from, to, reactance p.u. on 100 MVA, rating MW)
AREA_BRANCHES = [
    (1, 2, 0.0139, 175), (1, 3, 0.2112, 175), (1, 5, 0.0845, 175), (2, 4, 0.1267, 175),
    (2, 6, 0.1920, 175), (3, 9, 0.1190, 175), (3, 24, 0.0839, 400), (4, 9, 0.1037, 175),
    (5, 10, 0.0883, 175), (6, 10, 0.0605, 175), (7, 8, 0.0614, 175), (8, 9, 0.1651, 175),
    (8, 10, 0.1651, 175), (9, 11, 0.0839, 400), (9, 12, 0.0839, 400), (10, 11, 0.0839, 400),
    (10, 12, 0.0839, 400), (11, 13, 0.0476, 500), (11, 14, 0.0418, 500), (12, 13, 0.0476, 500),
    (12, 23, 0.0966, 500), (13, 23, 0.0865, 500), (14, 16, 0.0389, 500), (15, 16, 0.0173, 500),
    (15, 21, 0.0490, 500), (15, 21, 0.0490, 500), (15, 24, 0.0519, 500), (16, 17, 0.0259, 500),
    (16, 19, 0.0231, 500), (17, 18, 0.0144, 500), (17, 22, 0.1053, 500), (18, 21, 0.0259, 500),
    (18, 21, 0.0259, 500), (19, 20, 0.0396, 500), (19, 20, 0.0396, 500), (20, 23, 0.0216, 500),
    (20, 23, 0.0216, 500), (21, 22, 0.0678, 500),
]

INTERTIES = [(107, 203, 0.161, 175), (113, 215, 0.075, 500), (123, 217, 0.097, 500)]

# unit type: (cost_quadratic, cost_linear, p_min, p_max)
UNIT_TYPES = {
    "U12": (0.328412, 56.564, 2.4, 12),
    "U20": (0.0, 130.0, 16, 20),
    "U50": (0.0, 0.001, 10, 50),
    "U76": (0.014142, 16.0811, 15.2, 76),
    "U100": (0.052672, 43.6615, 25, 100),
    "U155": (0.008342, 12.3883, 54.3, 155),
    "U197": (0.00717, 48.5804, 69, 197),
    "U350": (0.004895, 11.8495, 140, 350),
    "U400": (0.000213, 4.4231, 100, 400),
}

# unit type: (reserve cap MW, activation price $/MWh)   -- assumptions
RESERVE = {
    "U12": (12, 60), "U20": (20, 90), "U50": (40, 15), "U76": (30, 30), "U100": (50, 45),
    "U155": (45, 25), "U197": (60, 50), "U350": (70, 25), "U400": (0, 0),
}
PROCUREMENT_PRICE = 10.0

AREA_UNITS = [
    (1, ["U20", "U20", "U76", "U76"]),
    (2, ["U20", "U20", "U76", "U76"]),
    (7, ["U100", "U100", "U100"]),
    (13, ["U197", "U197", "U197"]),
    (15, ["U12"] * 5 + ["U155"]),
    (16, ["U155"]),
    (18, ["U400"]),
    (21, ["U400"]),
    (22, ["U50"] * 6),
    (23, ["U155", "U155", "U350"]),
]

DLR_LINES = {(214, 216), (216, 219)}
DLR_NOMINAL_MW = 250.0

DRAKE = {
    "diameter": 0.02814,
    "resistance_at_t_low": 7.283e-5,
    "t_low": 25.0,
    "resistance_at_t_high": 8.688e-5,
    "t_high": 75.0,
    "emissivity": 0.8,
    "absorptivity": 0.8,
    "max_temperature": 69.4,
    "elevation": 0.0,
}


def build():
    buses, lines, gens, loads = [], [], [], []
    for area in (1, 2):
        base = 100 * area
        buses += [base + b for b in range(1, 25)]
        seen = {}
        for f, t, x, lim in AREA_BRANCHES:
            fb, tb = base + f, base + t
            key = (fb, tb)
            seen[key] = seen.get(key, 0) + 1
            lid = f"{fb}-{tb}" if seen[key] == 1 else f"{fb}-{tb}-{seen[key]}"
            line = {"id": lid, "from": fb, "to": tb, "reactance": x, "limit_mw": float(lim)}
            if key in DLR_LINES:
                line["limit_mw"] = DLR_NOMINAL_MW
                line["dlr"] = True
                line["rating"] = {"conductor": DRAKE, "voltage_kv": 230.0,
                                  "nominal_rating_mw": DLR_NOMINAL_MW}
            lines.append(line)
        for b, mw in AREA_LOADS.items():
            loads.append({"bus": base + b, "mw": float(mw)})
        for b, units in AREA_UNITS:
            for k, u in enumerate(units, start=1):
                c2, c1, pmin, pmax = UNIT_TYPES[u]
                cap, act = RESERVE[u]
                gens.append({
                    "id": f"G{base + b}_{u}_{k}", "bus": base + b,
                    "p_min": float(pmin), "p_max": float(pmax),
                    "cost_quadratic": c2, "cost_linear": c1,
                    "reserve_down_max": -float(cap), "reserve_up_max": float(cap),
                    "procurement_price_up": PROCUREMENT_PRICE if cap else 0.0,
                    "procurement_price_down": PROCUREMENT_PRICE if cap else 0.0,
                    "activation_price_up": float(act), "activation_price_down": float(act),
                })
    for f, t, x, lim in INTERTIES:
        lines.append({"id": f"{f}-{t}", "from": f, "to": t, "reactance": x, "limit_mw": float(lim)})
    return {"name": "rts96_two_area", "slack_bus": 113, "load_scale": 1.0,
            "buses": buses, "lines": lines, "generators": gens, "loads": loads}


if __name__ == "__main__":
    json.dump(build(), sys.stdout, indent=1)
    sys.stdout.write("\n")
