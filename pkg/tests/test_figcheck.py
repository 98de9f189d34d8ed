import pytest

from wxdiag.figcheck import (CheckFinding, CheckReport, apply_suggestions,
                             check_plot, fix_until_clean)
from wxdiag.plotspec import PlotSpecError, build_plot_spec, patch_spec, templates


def spec_with(**overrides):
    return build_plot_spec("synoptic_z500_msl_barbs",
                           overrides=list(overrides.items()))


def rule_ids(spec):
    return check_plot(spec).rule_ids()


def test_all_templates_pass_clean():
    for template_id in templates():
        report = check_plot(build_plot_spec(template_id))
        assert report.findings == (), (template_id, report.rule_ids())
        assert report.verdict == "pass"


def test_mslp_interval_is_an_error():
    spec = spec_with(**{"layers[1].interval": 3.0})
    report = check_plot(spec)
    assert report.rule_ids() == ["R3"]
    assert report.error_count == 1
    assert not report.passed
    assert apply_suggestions(spec, report).layers[1].interval == 4.0


def test_mslp_interval_accepts_both_sanctioned_values():
    assert rule_ids(spec_with(**{"layers[1].interval": 2.5})) == []
    assert rule_ids(spec_with(**{"layers[1].interval": 4.0})) == []


def test_z500_interval_is_an_error():
    spec = build_plot_spec("jet_200_z500", overrides=[("layers[1].interval", 60.0)])
    report = check_plot(spec)
    assert report.rule_ids() == ["R4"]
    assert apply_suggestions(spec, report).layers[1].interval == 40.0


def test_smoothed_barbs_are_an_error():
    spec = spec_with(**{"layers[2].smoothing_sigma": 1.0})
    report = check_plot(spec)
    assert report.rule_ids() == ["R2"]
    assert report.error_count == 1
    assert apply_suggestions(spec, report).layers[2].smoothing_sigma == 0.0


def test_contour_smoothing_range():
    assert rule_ids(spec_with(**{"layers[1].smoothing_sigma": 0.5})) == ["R1"]
    assert rule_ids(spec_with(**{"layers[1].smoothing_sigma": 3.5})) == ["R1"]
    assert rule_ids(spec_with(**{"layers[1].smoothing_sigma": 1.5})) == []


def test_reduced_smoothing_flag_lowers_the_floor():
    relaxed = spec_with(**{"layers[1].allow_reduced_smoothing": True,
                           "layers[1].smoothing_sigma": 1.2})
    assert rule_ids(relaxed) == []
    still_bad = spec_with(**{"layers[1].allow_reduced_smoothing": True,
                             "layers[1].smoothing_sigma": 0.8})
    assert rule_ids(still_bad) == ["R1"]


def test_contour_linewidth_style():
    assert rule_ids(spec_with(**{"layers[1].linewidth": 1.5})) == ["R5"]


def test_barb_style_findings_are_per_property():
    spec = spec_with(**{"layers[2].step": 8, "layers[2].linewidth": 0.3,
                        "layers[2].length": 7.0})
    report = check_plot(spec)
    assert report.rule_ids() == ["R6", "R6", "R6"]
    assert report.style_count == 3
    assert not report.passed
    fixed = apply_suggestions(spec, report)
    assert (fixed.layers[2].step, fixed.layers[2].linewidth,
            fixed.layers[2].length) == (4, 0.6, 5.5)


def test_gridline_style():
    assert rule_ids(spec_with(**{"gridlines.linewidth": 1.0})) == ["R7"]
    assert rule_ids(spec_with(**{"gridlines.alpha": 0.6})) == ["R7"]


def test_export_scale_style():
    assert rule_ids(spec_with(**{"export.scale": 150.0})) == ["R8"]
    assert rule_ids(spec_with(**{"export.scale": 200.0})) == []


def test_missing_colorbar_is_an_error():
    spec = spec_with(**{"colorbar.present": False})
    report = check_plot(spec)
    assert report.rule_ids() == ["R9"]
    fixed = apply_suggestions(spec, report)
    assert fixed.colorbar.present and fixed.colorbar.label


def test_overlong_colorbar_label_is_an_error():
    spec = spec_with(**{"colorbar.label": "x" * 41})
    report = check_plot(spec)
    assert report.rule_ids() == ["R9"]
    fixed = apply_suggestions(spec, report)
    assert len(fixed.colorbar.label) <= 40


def test_title_sizes():
    assert rule_ids(spec_with(**{"title.size": 20.0})) == ["R10"]
    spec = build_plot_spec("synoptic_z500_msl_barbs", subtitle="valid 12Z",
                           overrides=[("title.subtitle_size", 10.0)])
    assert check_plot(spec).rule_ids() == ["R10"]


def test_pass_tolerates_at_most_two_style_findings():
    two_style = spec_with(**{"layers[1].linewidth": 1.5, "export.scale": 150.0})
    assert check_plot(two_style).passed
    three_style = spec_with(**{"layers[1].linewidth": 1.5, "export.scale": 150.0,
                               "gridlines.alpha": 0.6})
    report = check_plot(three_style)
    assert report.style_count == 3
    assert report.verdict == "revise"


def test_single_error_fails_regardless_of_style_count():
    report = check_plot(spec_with(**{"layers[1].interval": 3.0}))
    assert report.style_count == 0
    assert not report.passed


def test_apply_suggestions_rejects_conflicts():
    spec = spec_with()
    report = CheckReport((
        CheckFinding("R3", "error", "a", (("layers[1].interval", 4.0),)),
        CheckFinding("R4", "error", "b", (("layers[1].interval", 40.0),)),
    ))
    with pytest.raises(PlotSpecError, match="conflicting"):
        apply_suggestions(spec, report)


def test_fix_until_clean_converges_within_three_rounds():
    spec = spec_with(**{"layers[1].interval": 3.0,
                        "layers[1].smoothing_sigma": 0.2,
                        "layers[2].smoothing_sigma": 2.0,
                        "layers[2].step": 9,
                        "colorbar.present": False,
                        "export.scale": 120.0,
                        "title.size": 30.0})
    first = check_plot(spec)
    assert not first.passed
    fixed, report, rounds = fix_until_clean(spec)
    assert report.passed
    assert rounds <= 3
    assert report.findings == ()


def test_each_repair_round_strictly_shrinks_findings():
    spec = spec_with(**{"layers[1].interval": 3.0, "colorbar.present": False,
                        "gridlines.alpha": 0.9})
    counts = [len(check_plot(spec).findings)]
    for _ in range(3):
        report = check_plot(spec)
        if report.passed:
            break
        spec = apply_suggestions(spec, report)
        counts.append(len(check_plot(spec).findings))
    assert counts == sorted(counts, reverse=True)
    assert len(set(counts)) == len(counts)
    assert check_plot(spec).passed


def test_report_serialization():
    report = check_plot(spec_with(**{"layers[1].interval": 3.0}))
    doc = report.as_mapping()
    assert doc["verdict"] == "revise"
    assert doc["error_count"] == 1
    assert doc["findings"][0]["rule_id"] == "R3"
    assert doc["findings"][0]["patches"] == [["layers[1].interval", 4.0]]
