import xml.etree.ElementTree as ET

import numpy as np
import pytest

import storytopics as st

SVG_NS = "{http://www.w3.org/2000/svg}"


def _projection(coords, labels):
    coords = np.asarray(coords, dtype=np.float64)
    ids = tuple(f"s{i}" for i in range(coords.shape[0]))
    return st.Projection2D(coords=coords, story_ids=ids, labels=tuple(labels))


def _series(root):
    return {
        g.get("data-domain"): g
        for g in root.iter(f"{SVG_NS}g")
        if g.get("class") == "series"
    }


def _markers(group):
    return [el for el in group if el.get("class") == "marker"]


def test_svg_parses_and_counts_markers_per_domain():
    rng = np.random.default_rng(0)
    labels = ["Health"] * 3 + ["Energy"] * 2 + ["Entertainment"] * 4 + ["Safety"] + ["Other"] * 5
    proj = _projection(rng.normal(size=(len(labels), 2)), labels)
    root = ET.fromstring(st.scatter_svg(proj))
    series = _series(root)
    assert set(series) == set(st.DOMAIN_STYLE)
    counts = {d: len(_markers(g)) for d, g in series.items()}
    assert counts == {
        "Health": 3, "Energy": 2, "Entertainment": 4, "Safety": 1, "Other": 5,
    }


def test_marker_shapes_and_colors_follow_domain_style():
    tags = {"circle": "circle", "cross": "path", "diamond": "polygon",
            "plus": "path", "square": "rect"}
    proj = _projection(
        [[0, 0], [1, 0], [0, 1], [1, 1], [2, 2]],
        ["Health", "Entertainment", "Energy", "Safety", "Other"],
    )
    root = ET.fromstring(st.scatter_svg(proj))
    for domain, group in _series(root).items():
        color, shape = st.DOMAIN_STYLE[domain]
        (marker,) = _markers(group)
        assert marker.tag == f"{SVG_NS}{tags[shape]}"
        assert marker.get("stroke") == color


def test_nan_coordinates_are_skipped():
    coords = [[0.0, 0.0], [np.nan, 1.0], [1.0, np.inf], [2.0, 2.0]]
    proj = _projection(coords, ["Health"] * 4)
    root = ET.fromstring(st.scatter_svg(proj))
    assert len(_markers(_series(root)["Health"])) == 2


def test_legend_always_lists_all_domains():
    empty = _projection(np.empty((0, 2)), [])
    root = ET.fromstring(st.scatter_svg(empty))
    legend = next(
        g for g in root.iter(f"{SVG_NS}g") if g.get("class") == "legend"
    )
    texts = [t.text for t in legend.iter(f"{SVG_NS}text")]
    assert texts == list(st.DOMAIN_STYLE)
    assert len(_markers(legend)) == 5
    # the empty plot still has its five (empty) series groups
    assert set(_series(root)) == set(st.DOMAIN_STYLE)


def test_title_and_dimensions():
    proj = _projection([[0, 0]], ["Other"])
    text = st.scatter_svg(proj, width=640, height=480, title="a <b> title")
    root = ET.fromstring(text)
    assert root.get("width") == "640"
    assert root.get("height") == "480"
    titles = [t.text for t in root.iter(f"{SVG_NS}text")]
    assert "a <b> title" in titles
    # no title element unless requested
    no_title = ET.fromstring(st.scatter_svg(proj))
    assert all(t.text in st.DOMAIN_STYLE for t in no_title.iter(f"{SVG_NS}text"))


def test_markers_stay_inside_frame():
    rng = np.random.default_rng(1)
    proj = _projection(rng.normal(size=(40, 2)) * 100, ["Safety"] * 40)
    root = ET.fromstring(st.scatter_svg(proj, width=960, height=720, margin=48))
    frame = next(r for r in root.iter(f"{SVG_NS}rect") if r.get("class") == "frame")
    x0, y0 = float(frame.get("x")), float(frame.get("y"))
    x1 = x0 + float(frame.get("width"))
    y1 = y0 + float(frame.get("height"))
    for group in _series(root).values():
        for marker in _markers(group):
            d = marker.get("d")
            cx = float(marker.get("cx", 0)) if marker.get("cx") else None
            if cx is not None:
                cy = float(marker.get("cy"))
                assert x0 <= cx <= x1 and y0 <= cy <= y1
            elif d:
                nums = [float(v) for v in d.replace("M", " ").replace("L", " ").split()]
                xs, ys = nums[0::2], nums[1::2]
                pad = 8  # marker extent may poke past the data box slightly
                assert min(xs) >= x0 - pad and max(xs) <= x1 + pad
                assert min(ys) >= y0 - pad and max(ys) <= y1 + pad


def test_save_svg(tmp_path):
    proj = _projection([[0, 0], [1, 1]], ["Health", "Energy"])
    out = tmp_path / "plot.svg"
    st.save_svg(proj, out, title="demo")
    text = out.read_text(encoding="utf-8")
    assert text.startswith("<svg")
    ET.fromstring(text)


def test_unknown_marker_shape_rejected():
    from storytopics.plotting import _marker

    with pytest.raises(ValueError):
        _marker("star", 0.0, 0.0, 4.0, "#000000")
