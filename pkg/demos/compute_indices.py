"""Compute diagnostic indices straight from a case store.

Shows the registry-driven path the loop itself uses: look an index up,
fetch its required variables, run the kernel, and read the provenance
hash that ties the number back to its inputs.
"""

import tempfile
from pathlib import Path

from wxdiag.indices import compute_index, registry
from wxdiag.synth import build_case

PICKS = {
    "rainstorm_replan": [
        ("Positive Vorticity", {}),
        ("Low-Level Divergence Extrema", {}),
        ("Precipitable Water (PWAT)", {}),
        ("CAPE", {}),
    ],
    "gale_accept": [
        ("Jet Intensity", {}),
        ("Surface Wind Speed", {}),
        ("Vertical Wind Shear", {"levels_pair": [850.0, 200.0],
                                 "point": [25.0, 105.0]}),
    ],
}


def main():
    workdir = Path(tempfile.mkdtemp(prefix="wxdiag_demo_"))
    reg = registry()
    print(f"{len(reg)} indices registered\n")

    for scenario, picks in PICKS.items():
        store = build_case(scenario, workdir / scenario)
        print(f"case: {scenario}")
        for index_id, extra in picks:
            spec = reg[index_id]
            inputs = {}
            for var in spec.required_vars:
                if var == "sounding":
                    inputs[var] = store.fetch_sounding("sounding")
                else:
                    inputs[var] = store.fetch_field(var)
            params = dict(store.meta.get("index_params", {}).get(index_id, {}))
            params.update(extra)
            result = compute_index(index_id, inputs, params, reg=reg)
            print(f"  {index_id:34s} [{spec.tier:6s}] "
                  f"{result.value:14.6g} {result.units:8s} "
                  f"provenance {result.provenance}")
        print()


if __name__ == "__main__":
    main()
