#!/usr/bin/env python3
"""Writes the bundled fixtures.

grid10: 10 three-sector sites, 30 cells, 5 routes (scenarios/grid10.toml).
reduced5: 5 two-sector sites, 10 cells, 3 routes (scenarios/reduced5.toml).
"""
import argparse
import random

W, H = 1400.0, 1275.0


def sites(rng):
    # hex-like rows of 4, 3, 3 sites, each jittered
    rows = [(212.0, [175.0 + 350.0 * i for i in range(4)]),
            (637.0, [350.0 + 350.0 * i for i in range(3)]),
            (1062.0, [175.0 + 350.0 * i for i in range(3)])]
    out = []
    for y, xs in rows:
        for x in xs:
            out.append((x + rng.uniform(-60, 60), y + rng.uniform(-60, 60),
                        rng.uniform(22.0, 56.0), rng.uniform(0.0, 120.0)))
    return out


def reduced_sites(rng):
    rows = [(150.0, [125.0 + 250.0 * i for i in range(3)]),
            (450.0, [250.0 + 250.0 * i for i in range(2)])]
    out = []
    for y, xs in rows:
        for x in xs:
            out.append((x + rng.uniform(-40, 40), y + rng.uniform(-40, 40),
                        rng.uniform(22.0, 56.0), rng.uniform(0.0, 180.0)))
    return out


REDUCED_W, REDUCED_H = 750.0, 600.0
REDUCED_ROUTES = [
    [(20, 300), (260, 310), (500, 290), (730, 300)],
    [(20, 40), (250, 200), (500, 80), (730, 220)],
    [(180, 20), (160, 300), (220, 580)],
    [(560, 20), (580, 300), (520, 580)],
    [(20, 580), (300, 420), (460, 180), (730, 40)],
]

ROUTES = [
    [(40, 420), (520, 430), (900, 400), (1360, 440)],
    [(40, 860), (480, 840), (800, 880), (1360, 850)],
    [(300, 40), (320, 500), (280, 900), (330, 1235)],
    [(1050, 40), (1030, 420), (1080, 820), (1040, 1235)],
    [(60, 1200), (500, 900), (760, 640), (1000, 300), (1340, 60)],
]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--layout", choices=["grid10", "reduced5"], default="grid10")
    ap.add_argument("--seed", type=int, default=20241)
    ap.add_argument("--out")
    args = ap.parse_args()
    out = args.out or f"scenarios/{args.layout}.toml"
    rng = random.Random(args.seed)
    if args.layout == "grid10":
        header = "# 10 sites on a perturbed grid, three sectors each; generated by tools/make_grid10.py"
        width, height, site_list, sectors, routes = W, H, sites(rng), 3, ROUTES
    else:
        header = "# 5 sites, two sectors each (10 cells); generated by tools/make_grid10.py --layout reduced5"
        width, height, site_list, sectors, routes = REDUCED_W, REDUCED_H, reduced_sites(rng), 2, REDUCED_ROUTES
    lines = [
        header,
        "",
        "[radio]",
        "carrier_hz = 2.0e9",
        "bandwidth_hz = 10.0e6",
        "n_prb = 50",
        "prb_bw_hz = 180.0e3",
        "noise_psd_dbm_hz = -174.0",
        "",
        "[area]",
        f"width_m = {width}",
        f"height_m = {height}",
        "",
        "[channel]",
        "pl0_db = 38.0",
        "d0_m = 1.0",
        "exponent = 3.5",
        "shadow_sigma_db = 8.0",
        "shadow_corr_m = 50.0",
        "fast_fade_sigma_db = 1.0",
        f"shadow_seed = {args.seed}",
        "",
        "[channel.antenna]",
        "max_gain_dbi = 15.0",
        "hpbw_deg = 65.0",
        "front_back_db = 25.0",
    ]
    cid = 0
    for x, y, h, az0 in site_list:
        for k in range(sectors):
            cid += 1
            lines += ["", "[[cells]]", f"id = {cid}", f"position = [{x:.1f}, {y:.1f}, 0.0]",
                      f"antenna_height_m = {h:.1f}", f"azimuth_deg = {(az0 + 360 / sectors * k) % 360:.1f}",
                      "tx_power_dbm = 46.0"]
    for i, wps in enumerate(routes, start=1):
        pts = ", ".join(f"[{x:.1f}, {y:.1f}]" for x, y in wps)
        lines += ["", "[[routes]]", f"id = {i}", f"waypoints = [{pts}]", "ue_height_m = 1.5"]
    with open(out, "w") as f:
        f.write("\n".join(lines) + "\n")


if __name__ == "__main__":
    main()
