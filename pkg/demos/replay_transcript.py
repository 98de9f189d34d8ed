"""Replay a diagnosis conversation and audit the turn-taking rules.

Runs the replanning scenario, then walks the transcript prefix by prefix
checking that the router would have picked exactly the agent who actually
spoke next. Prints the speaking order with the loop phases annotated.
"""

import tempfile
from pathlib import Path

from wxdiag.agents import route_next
from wxdiag.diagnosis import run_loop
from wxdiag.synth import build_case, scenario_task


def main():
    workdir = Path(tempfile.mkdtemp(prefix="wxdiag_demo_"))
    store = build_case("rainstorm_replan", workdir / "store")
    outcome, messages = run_loop(scenario_task("rainstorm_replan"), store)

    agreed = 0
    for i in range(1, len(messages)):
        pick = route_next(messages[:i])
        assert pick is messages[i].sender, (i, pick, messages[i].sender)
        agreed += 1
    print(f"router agreed with all {agreed} turns\n")

    for m in messages:
        phase = m.body.get("phase", "")
        detail = ""
        if phase == "hypothesis":
            detail = (f" cycle {m.body['cycle']} {m.body['category']} "
                      f"({len(m.body['guidelines'])} mechanisms)")
        elif phase == "verdict":
            detail = f" {m.body['verdict']}"
        elif m.body.get("status"):
            detail = f" {m.body['status']}"
        print(f"{m.seq:3d} {m.sender.value:16s} {m.kind.value:17s}"
              f" {phase}{detail}")

    print(f"\noutcome: {outcome.status} after {len(outcome.cycles)} cycles, "
          f"{len(outcome.memory)} lesson(s) in memory")


if __name__ == "__main__":
    main()
