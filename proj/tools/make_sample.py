#!/usr/bin/env python3
"""Write a small synthetic station dataset and config to data/sample."""
import math
import pathlib
import random

out = pathlib.Path(__file__).resolve().parent.parent / "data" / "sample"
out.mkdir(parents=True, exist_ok=True)
rng = random.Random(7)

sides, steps, count = 15, 6, 30
border = [(math.cos(2 * math.pi * i / sides), math.sin(2 * math.pi * i / sides)) for i in range(sides)]
inradius = math.cos(math.pi / sides)
stations = []
while len(stations) < count:
    r = 0.9 * inradius * math.sqrt(rng.random())
    a = 2 * math.pi * rng.random()
    p = (r * math.cos(a), r * math.sin(a))
    if all(math.dist(p, q) > 0.05 for q in stations):
        stations.append(p)

(out / "border.csv").write_text("x,y\n" + "".join(f"{x:.17g},{y:.17g}\n" for x, y in border))
(out / "stations.csv").write_text(
    "id,x,y\n" + "".join(f"S{i:02d},{x:.17g},{y:.17g}\n" for i, (x, y) in enumerate(stations)))
rows = []
for k in range(steps):
    t = k / (steps - 1)
    for i, (x, y) in enumerate(stations):
        rows.append(f"S{i:02d},{k},{math.sin(3 * x) * math.cos(2 * y) + t * t:.17g}\n")
(out / "readings.csv").write_text("station_id,step_index,value\n" + "".join(rows))
(out / "run.cfg").write_text(
    "# Sample run; relative paths resolve against this file's directory.\n"
    "stations = stations.csv\n"
    "readings = readings.csv\n"
    "border = border.csv\n"
    "volume_out = out/volume.json\n"
    "grid_out = out/grid.json\n"
    "report_out = out/report.json\n")
