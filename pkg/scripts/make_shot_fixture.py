"""Generate the bundled synthetic shot-chart fixture (no real player data).

Shots are drawn from a mixture of rim attempts, mid-range jumpers and
three-point attempts around the arc, in 0.1 ft court units.
"""
import csv
import math
import sys
from pathlib import Path

import numpy as np

N_SHOTS = 753
HEADER = ["GAME_DATE", "OPPONENT", "PERIOD", "MINUTES_REMAINING", "SECONDS_REMAINING",
          "SHOT_MADE_FLAG", "ACTION_TYPE", "SHOT_TYPE", "SHOT_DISTANCE", "LOC_X", "LOC_Y"]
TEAMS = ["BOS", "CLE", "HOU", "LAL", "MIA", "OKC", "POR", "SAS", "TOR", "UTA"]


def shot_location(rng):
    kind = rng.choice(["rim", "mid", "three", "deep"], p=[0.3, 0.13, 0.5, 0.07])
    if kind == "rim":
        r, theta = abs(rng.normal(0, 30)), rng.uniform(0, math.pi)
    elif kind == "mid":
        r, theta = rng.uniform(80, 220), rng.uniform(0.15, math.pi - 0.15)
    elif kind == "three":
        corner = rng.random() < 0.2
        if corner:
            x = rng.choice([-1, 1]) * rng.uniform(222, 245)
            return int(x), int(rng.uniform(-45, 80)), "Jump Shot", 3
        r, theta = rng.uniform(238, 275), rng.uniform(0.38, math.pi - 0.38)
    else:
        r, theta = rng.uniform(300, 420), rng.uniform(0.6, math.pi - 0.6)
    x = int(np.clip(r * math.cos(theta), -250, 250))
    y = int(np.clip(r * math.sin(theta), -50, 420))
    three = (abs(x) >= 220 and y <= 92) or math.hypot(x, y) >= 237.5
    action = "Layup Shot" if kind == "rim" else "Jump Shot"
    return x, y, action, 3 if three else 2


def main(out):
    rng = np.random.default_rng(30)
    periods = rng.choice([1, 2, 3, 4, 5], size=N_SHOTS, p=[0.35, 0.206, 0.343, 0.097, 0.004])
    rows = []
    for i in range(N_SHOTS):
        x, y, action, stype = shot_location(rng)
        rows.append([
            f"2017-{10 + i * 6 // N_SHOTS:02d}-{1 + i % 28:02d}",
            TEAMS[int(rng.integers(len(TEAMS)))],
            int(periods[i]),
            int(rng.integers(0, 12)),
            int(rng.integers(0, 60)),
            int(rng.random() < (0.55 if stype == 2 else 0.42)),
            action,
            f"{stype}PT Field Goal",
            int(round(math.hypot(x, y) / 10)),
            x,
            y,
        ])
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(HEADER)
        writer.writerows(rows)


if __name__ == "__main__":
    default = Path(__file__).resolve().parents[1] / "src" / "mrfnhpp" / "data" / "synthetic_shots.csv"
    main(sys.argv[1] if len(sys.argv) > 1 else default)
