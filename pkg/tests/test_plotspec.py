import pytest

from wxdiag.plotspec import (BarbLayer, ContourLayer, GridlineSpec, PlotSpec,
                             PlotSpecError, ShadingLayer, TitleSpec,
                             build_plot_spec, load_templates, patch_spec,
                             templates)

EXPECTED_TEMPLATES = {
    "synoptic_z500_msl_barbs", "jet_200_z500", "theta_e_850_z500",
    "moisture_flux_925", "t2m_sa_msl", "wind10_speed_barbs", "z500_sa",
    "t850_adv_msl",
}


def synoptic_spec(**overrides):
    return build_plot_spec("synoptic_z500_msl_barbs",
                           overrides=list(overrides.items()))


def test_catalog_contents():
    assert set(templates()) == EXPECTED_TEMPLATES


def test_catalog_is_cached():
    assert templates() is templates()


def test_build_from_template():
    spec = synoptic_spec()
    assert spec.template_id == "synoptic_z500_msl_barbs"
    kinds = [type(l).__name__ for l in spec.layers]
    assert kinds == ["ShadingLayer", "ContourLayer", "BarbLayer"]
    assert spec.layers[1].interval == 4.0
    assert spec.colorbar.present
    assert spec.colorbar.label == "500-hPa height (gpm)"
    assert spec.field_refs() == ["z@500", "msl@0", "u@850", "v@850"]


def test_build_without_shading_omits_colorbar():
    catalog = dict(templates())
    catalog["bare"] = {
        "template_id": "bare", "title": "contours only",
        "layers": [{"kind": "contour", "field_ref": "msl@0", "interval": 4.0}],
    }
    spec = build_plot_spec("bare", catalog=catalog)
    assert not spec.colorbar.present


def test_unknown_template():
    with pytest.raises(PlotSpecError, match="unknown template"):
        build_plot_spec("nope")


def test_overrides_apply_in_order():
    spec = synoptic_spec(**{"layers[1].interval": 2.5, "title.size": 15.0})
    assert spec.layers[1].interval == 2.5
    assert spec.title.size == 15.0


def test_layer_order_enforced():
    with pytest.raises(PlotSpecError, match="layer order"):
        PlotSpec(template_id="x", title=TitleSpec("t"),
                 layers=(BarbLayer("u", "v"), ShadingLayer("t@850")))


def test_contour_needs_exactly_one_of_interval_levels():
    with pytest.raises(PlotSpecError):
        ContourLayer("msl@0")
    with pytest.raises(PlotSpecError):
        ContourLayer("msl@0", interval=4.0, levels=(1000.0,))
    layer = ContourLayer("msl@0", levels=[1000, 1004])
    assert layer.levels == (1000.0, 1004.0)


def test_empty_layers_rejected():
    with pytest.raises(PlotSpecError, match="at least one layer"):
        PlotSpec(template_id="x", title=TitleSpec("t"), layers=())


def test_json_round_trip():
    spec = synoptic_spec(**{"title.subtitle": "2014-05-08T12:00Z",
                            "gridlines.alpha": 0.4})
    again = PlotSpec.from_json(spec.to_json())
    assert again == spec


def test_from_mapping_rejects_bad_schema():
    doc = synoptic_spec().as_mapping()
    doc["schema"] = "plotspec/99"
    with pytest.raises(PlotSpecError, match="schema"):
        PlotSpec.from_mapping(doc)


def test_from_mapping_rejects_unknown_layer_kind():
    doc = synoptic_spec().as_mapping()
    doc["layers"][0]["kind"] = "heatmap"
    with pytest.raises(PlotSpecError, match="layer kind"):
        PlotSpec.from_mapping(doc)


def test_patch_spec_paths():
    spec = synoptic_spec()
    assert patch_spec(spec, "layers[2].step", 5).layers[2].step == 5
    assert patch_spec(spec, "colorbar.label", "hgt").colorbar.label == "hgt"
    assert not patch_spec(spec, "gridlines", GridlineSpec(show=False)).gridlines.show


def test_patch_spec_bad_paths():
    spec = synoptic_spec()
    for path in ("layers[9].step", "layers[0].nope", "nope.x", "title.nope",
                 "layers[1"):
        with pytest.raises(PlotSpecError):
            patch_spec(spec, path, 1)


def test_load_templates_rejects_duplicates(tmp_path):
    entry = ('{"template_id": "a", "title": "t", "layers": '
             '[{"kind": "contour", "field_ref": "msl@0", "interval": 4.0}]}')
    path = tmp_path / "tpl.json"
    path.write_text('{"schema": "plot-templates/1", "templates": [%s, %s]}'
                    % (entry, entry))
    with pytest.raises(PlotSpecError, match="duplicate"):
        load_templates(path)
