"""
Command line runs and replay
============================

Each table written by the command line tool comes with a manifest holding
the full argument list, configuration and library versions. Replaying the
manifest reproduces the table byte for byte.
"""

import tempfile
from pathlib import Path

from liebcavity import cli, sweeps

with tempfile.TemporaryDirectory() as tmp:
    out = Path(tmp) / "run"
    cli.main(["--out", str(out), "sweep", "--param", "u", "--range", "0", "0.2", "0.1",
              "--engines", "hierarchy,meanfield", "--nc", "3", "--convergence", "none"])
    print((out / "sweep_u.csv").read_text())

    again = sweeps.replay(out / "sweep_u.manifest.json", Path(tmp) / "replay")
    print("identical:", again[0].read_bytes() == (out / "sweep_u.csv").read_bytes())
