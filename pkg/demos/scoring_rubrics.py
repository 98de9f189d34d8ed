"""Tour the evaluation rubrics used by the benchmark harness.

Numeric answers pass through a strict 5% gate and land in half-decade
score bands; hypothesis sets are scored on guideline conformity and
mechanism-category coverage; retrieval logs are scored on variable and
time-window coverage.
"""

from wxdiag.harness import (Hypothesis, RequiredData, RetrievedData,
                            data_score, hypothesis_score, index_gate,
                            index_score, relative_error)
from wxdiag.kb import default_kb, match_applicable


def main():
    print("numeric gate and bands (ground truth 116.5693)")
    for reply in (116.5693, 116.6412, 117.5, 121.0, 124.0):
        rel = relative_error(116.5693, reply)
        gate = "pass" if index_gate(rel) else "FAIL"
        print(f"  reply {reply:9.4f}  eps {rel.eps:.2e}  gate {gate}  "
              f"score {index_score(rel)}")

    kb = default_kb()
    by_cat = {}
    for entry in match_applicable(kb, "Rainstorm"):
        by_cat.setdefault(entry.category, []).append(entry.entry_id)
    dyn = by_cat["dynamics"][0]
    thm = by_cat["thermodynamics"][0]
    mst = by_cat["moisture"][0]
    print("\nhypothesis sets for a Rainstorm")
    for label, ids in [("one off-guideline id", ("made-up",)),
                       ("one valid dynamics id", (dyn,)),
                       ("two categories", (dyn, thm)),
                       ("all three categories", (dyn, thm, mst)),
                       ("three categories plus a stray", (dyn, thm, mst,
                                                          "made-up"))]:
        score = hypothesis_score(Hypothesis("Rainstorm", ids), kb)
        print(f"  {label:32s} -> {score}")

    print("\nretrieval coverage (core t,u,v; aux clim:x; 24-h window)")
    need = RequiredData(core=("t", "u", "v"), auxiliary=("clim:x",),
                        window=("2014-05-07T12:00Z", "2014-05-08T12:00Z"))
    full = ("2014-05-07T12:00Z", "2014-05-08T12:00Z")
    for label, got in [
            ("nothing fetched", RetrievedData((), None)),
            ("one core var", RetrievedData(("t",), full)),
            ("core without climatology", RetrievedData(("t", "u", "v"), full)),
            ("everything plus an extra", RetrievedData(("t", "u", "v",
                                                        "clim:x", "w"), full)),
            ("exactly what was needed", RetrievedData(("t", "u", "v",
                                                       "clim:x"), full))]:
        print(f"  {label:32s} -> {data_score(got, need)}")


if __name__ == "__main__":
    main()
