"""Render a chart template, break its layout, and let the checker repair it.

The figure checker reviews the plot spec (not the pixels): intervals, barb
thinning, smoothing, colorbar, title sizing. Every finding carries patches,
so a broken spec can be repaired mechanically and re-rendered.
"""

import tempfile
from pathlib import Path

from wxdiag.figcheck import check_plot, fix_until_clean
from wxdiag.plotspec import build_plot_spec, patch_spec
from wxdiag.render import render_svg
from wxdiag.store import resolve_field_ref
from wxdiag.synth import build_case


def show(tag, report):
    print(f"{tag}: verdict={report.verdict} "
          f"(errors={report.error_count}, style={report.style_count})")
    for finding in report.findings:
        print(f"    {finding.rule_id} [{finding.severity}] {finding.message}")


def main():
    workdir = Path(tempfile.mkdtemp(prefix="wxdiag_demo_"))
    store = build_case("coldwave_accept", workdir / "store")

    spec = build_plot_spec("synoptic_z500_msl_barbs")
    show("fresh template", check_plot(spec))

    broken = spec
    for path, value in [("layers[1].interval", 3.0),
                        ("layers[2].smoothing_sigma", 1.0),
                        ("layers[2].step", 9),
                        ("title.size", 30.0)]:
        broken = patch_spec(broken, path, value)
    show("\nafter mangling", check_plot(broken))

    fixed, report, rounds = fix_until_clean(broken)
    show(f"\nrepaired in {rounds} round(s)", report)

    fields = {ref: resolve_field_ref(store, ref) for ref in fixed.field_refs()}
    svg = render_svg(fixed, fields)
    out = workdir / "chart.svg"
    out.write_text(svg, "utf-8")
    print(f"\nwrote {out} ({len(svg)} bytes)")


if __name__ == "__main__":
    main()
