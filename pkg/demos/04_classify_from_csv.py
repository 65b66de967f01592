"""Classify measured initial data through the command-line interface.

Two profiles are written as x, rho0, u0 tables: the smoothed plateau
(exponential upstream ramp, so rho0' <= sigma(rho0) everywhere) and a
narrow Gaussian whose rising flank is too steep. Note that any Gaussian
tail fails the test far upstream, where rho0'/rho0 grows without bound.
The classify subcommand reports each verdict.
"""

import json
import subprocess
import sys
import tempfile
from pathlib import Path

import numpy as np

from nonlocal_arz import Grid
from nonlocal_arz.presets import preset_fields

grid = Grid(-38.0, 30.0, 1360)
x = grid.x
profiles = {
    "smoothed-plateau": preset_fields("smoothed-plateau", grid, amplitude=0.4)[0],
    "steep-bump": preset_fields("gaussian-bump", grid, amplitude=0.6, width=0.7)[0],
}

with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    curve = tmp / "sigma.csv"
    subprocess.run([sys.executable, "-m", "nonlocal_arz", "thresholds", "--J", "1",
                    "--kind", "sigma", "--out", str(curve)], check=True, capture_output=True)
    for name, rho in profiles.items():
        path = tmp / f"{name}.csv"
        np.savetxt(path, np.column_stack([x, rho, 1.0 - rho]), delimiter=",",
                   header="x,rho0,u0", comments="")
        out = subprocess.run([sys.executable, "-m", "nonlocal_arz", "classify", str(path),
                              "--curve", str(curve), "--kernel", "zero"],
                             check=True, capture_output=True, text=True).stdout
        v = json.loads(out)
        print(f"{name:18s} subcritical={v['subcritical']!s:5s} bad cells={v['n_supercritical']}")
        # same test by hand, restricted to the flank
        flank = (rho > 0.05) & (np.gradient(rho, grid.dx) > rho * (1.0 - rho))
        if flank.any():
            print(f"{'':18s} on the flank (rho > 0.05): x in [{x[flank].min():.2f}, {x[flank].max():.2f}]")
