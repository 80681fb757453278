"""Drive the full pipeline through the command-line interface.

The same four steps are available from a shell as
``vaxcontagion generate-network|simulate|records|estimate``; here they are
called in-process. The result equals the in-library replicate with the
same seed.
"""

import pathlib
import tempfile

from vaxcontagion.cli import main

work = pathlib.Path(tempfile.mkdtemp(prefix="vaxcontagion-"))
cfg = work / "study.cfg"
cfg.write_text(
    "# network alternative, 10000 nodes\n"
    "num_groups=2000\nout_tie_prob=0.0001\n"
    "p_u=0.5\np_v=0.01\ndelta=0.2\n"
    "n_bootstrap=200\nscales=ratio,difference\n"
)
steps = [
    ["generate-network", "--out", work / "net.txt"],
    ["simulate", "--network", work / "net.txt", "--out", work / "traj.csv"],
    ["records", "--network", work / "net.txt", "--trajectory", work / "traj.csv", "--out", work / "rec.csv"],
    ["estimate", "--records", work / "rec.csv", "--out", work / "report.csv"],
]
for argv in steps:
    argv = [str(a) for a in argv] + ["--config", str(cfg), "--seed", "42"]
    code = main(argv)
    print(f"vaxcontagion {argv[0]:<16} exit {code}")
    if code:
        raise SystemExit(code)

print("\n" + (work / "report.csv").read_text())
print("bad input gives exit", main(["estimate", "--records", str(work / "traj.csv"), "--out", str(work / "x.csv")]))
