import math

import pytest

import instanton_moduli as im

TORUS = "domain = torus\ndim = 2\nX_0 = sin(x0)\nX_1 = sin(x1)\nf = cos(x0) + cos(x1)\n"


@pytest.fixture(scope="module")
def torus():
    return im.Field.from_text(TORUS, "torus_cosine")


def test_field_eval(torus):
    assert torus.dimension == 2
    v = torus([0.5, 0.0])
    assert v[0] == pytest.approx(math.sin(0.5))
    assert v[1] == 0.0


def test_rest_points(torus):
    points = im.rest_points(torus, grid=8)
    assert [p["index"] for p in points] == [2, 1, 1, 0]


def test_integrate(torus):
    times, points = im.integrate(torus, [0.1, 0.1], 5.0)
    assert times[0] == 0.0
    assert len(times) == len(points)
    assert all(b > a for a, b in zip(times, times[1:]))


def test_instantons_and_signs(torus):
    insts = im.instantons(torus, 0, 1, grid=8)
    assert len(insts) == 2
    assert sorted(i["sign"] for i in insts) == [-1, 1]


def test_broken_strata(torus):
    strata = im.broken_strata(torus, 0, 3, max_depth=2, grid=8)
    assert len(strata[1]) == 8
    assert strata[0] == [] and strata[2] == []


def test_morse_homology(torus):
    h = im.morse_homology(torus, grid=8)
    assert h["ranks"] == [1, 2, 1]
    assert h["betti"] == [1, 2, 1]
    assert all(t == [] for t in h["torsion"])


def test_families(torus):
    fams = im.families(torus, 0, 3, grid=8)
    assert len(fams["arcs"]) == 4
    assert fams["incidence_ok"]
    assert fams["cohomology"]["betti"] == [4, 0]


def test_local_model():
    box = im.Field.from_text(
        "domain = box\ndim = 2\nbounds_0 = -1 1\nbounds_1 = -1 1\n"
        "X_0 = -x0 + 0.3*x1^3\nX_1 = x1 + 0.3*x0^3\n",
        "box_saddle",
    )
    model = im.local_model(box, 0, r_cut=0.5, grid=8)
    assert model["k_plus"] == 1 and model["k_minus"] == 1
    assert model["C"] >= 1.0
    assert 0.0 < model["eps_contract"] < model["eta"]


def test_incidence_errors(torus):
    with pytest.raises(RuntimeError):
        im.instantons(torus, 0, 3)  # index gap 2 needs families
    with pytest.raises(ValueError):
        im.Field.from_text("domain = torus\ndim = 2\nX_0 = sin(\n")
