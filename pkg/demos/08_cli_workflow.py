"""
The reproducibility workflow: validate, synthesize, simulate
============================================================

Everything the library does is reachable from three CLI commands, with
the scenario file as the unit of reproducibility and the controller
artifact pinned to its content hash. This script drives the same
entry points the `linetemp` console command uses.
"""

import pathlib
import tempfile

from linetemp import cli

SCENARIO = "scenarios/isle_jourdain.scenario"
work = pathlib.Path(tempfile.mkdtemp(prefix="linetemp-demo-"))

# 1. validate: schema + physics checks, every problem reported at once
print("$ linetemp validate", SCENARIO)
rc = cli.main(["validate", SCENARIO])
print("exit code:", rc)

# 2. synthesize: gain + invariant set + tightened boxes into a
#    versioned artifact that embeds the scenario's sha256
ctl = work / "controller.json"
print("\n$ linetemp synthesize ... -o controller.json")
rc = cli.main(["synthesize", SCENARIO, "-o", str(ctl)])
print("exit code:", rc)

# 3. simulate: closed loop against the nonlinear plant; CSV/report/SVG
csv = work / "run.csv"
print("\n$ linetemp simulate ... controller.json --steps 30 --csv run.csv")
rc = cli.main(["simulate", SCENARIO, str(ctl), "--steps", "30",
               "--csv", str(csv)])
print("exit code:", rc)
print("CSV rows written:", csv.read_text().count("\n") - 1)

# the hash check in action: edit the scenario (even a comment) and the
# stale artifact is refused — exit code 1, no silent mis-simulation
edited = work / "edited.scenario"
edited.write_text(pathlib.Path(SCENARIO).read_text() + "\n# tweaked\n")
print("\n$ linetemp simulate edited.scenario controller.json")
rc = cli.main(["simulate", str(edited), str(ctl)])
print("exit code:", rc, "(validation failure, as designed)")

# a free (uncontrolled) run needs no artifact at all
print("\n$ linetemp simulate ... --free --steps 45")
rc = cli.main(["simulate", SCENARIO, "--free", "--steps", "45"])
print("exit code:", rc)
