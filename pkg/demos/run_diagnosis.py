"""Run the closed diagnostic loop on a synthetic cold-wave case.

Builds a small case store on disk, lets the agent orchestra type the event,
propose mechanism hypotheses, verify them against computed indices, and
render the supporting chart. Prints the cycle trail and the final report.
"""

import tempfile
from pathlib import Path

from wxdiag.diagnosis import run_loop
from wxdiag.synth import build_case, scenario_task


def main():
    workdir = Path(tempfile.mkdtemp(prefix="wxdiag_demo_"))
    store = build_case("coldwave_accept", workdir / "store")
    task = scenario_task("coldwave_accept")
    print(f"task: {task}\n")

    outcome, messages = run_loop(task, store, out_dir=workdir / "figures")

    print(f"event typed as {outcome.event} "
          f"(trigger {outcome.anomaly['variable']} at the "
          f"{outcome.anomaly['exceedance_percentile']:.0f}th percentile)\n")
    for cycle in outcome.cycles:
        print(f"cycle {cycle.cycle} [{cycle.category}] -> {cycle.verdict} "
              f"(support {cycle.pass_fraction:.2f}, "
              f"completeness {cycle.completeness:.2f})")
        for item in cycle.evidence:
            if item.status != "ok":
                print(f"    {item.index_id}: {item.error}")
                continue
            tag = "significant" if item.significant else "background"
            print(f"    {item.index_id} = {item.value:.6g} {item.units} "
                  f"(SA {item.sa:+.2f}, {tag})")

    print(f"\nstatus: {outcome.status}")
    print(f"chart: {workdir / 'figures' / outcome.figure}")
    print(f"transcript: {len(messages)} messages, "
          f"{len({m.sender for m in messages})} distinct speakers")
    print("\n" + outcome.report)


if __name__ == "__main__":
    main()
