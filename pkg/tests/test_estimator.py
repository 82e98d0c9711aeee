import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from barrierfix import BarrierRepair, NotRepairedError, instrument, parse, pretty_print

from conftest import corpus_kernel, corpus_path


def test_params_round_trip():
    est = BarrierRepair(strategy="maxsat", gw=20, grid=False)
    params = est.get_params()
    assert params["strategy"] == "maxsat" and params["gw"] == 20 and params["grid"] is False
    assert clone(est).get_params() == params
    est.set_params(lw=3)
    assert est.lw == 3


def test_fit_transform_race():
    k = corpus_kernel("race")
    est = BarrierRepair()
    fixed = est.fit_transform(k)
    assert est.status_ == "repaired" and est.predict(k) == "repaired"
    assert est.solution_.total_weight == 1 and len(est.changes_) == 1
    assert est.n_iter_ == 2 and len(est.constraint_) == 1
    assert "barrier;" in pretty_print(fixed)


def test_accepts_text_and_path():
    assert BarrierRepair().fit(corpus_path("race").read_text()).status_ == "repaired"
    assert BarrierRepair().fit(corpus_path("race")).status_ == "repaired"
    assert BarrierRepair().fit(str(corpus_path("race"))).status_ == "repaired"


def test_not_repaired():
    est = BarrierRepair().fit(corpus_kernel("write_write_race"))
    assert est.status_ == "cannot_repair" and est.solution_ is None
    with pytest.raises(NotRepairedError):
        est.transform(corpus_kernel("write_write_race"))


def test_grid_switch():
    k = corpus_kernel("interblock")
    assert BarrierRepair().fit(k).solution_.total_weight == 13
    assert BarrierRepair(grid=False).fit(k).status_ == "cannot_repair"


def test_unfitted_and_mismatched():
    with pytest.raises(NotFittedError):
        BarrierRepair().transform(corpus_kernel("race"))
    est = BarrierRepair().fit(corpus_kernel("race"))
    with pytest.raises(ValueError):
        est.transform(corpus_kernel("divergence"))
    with pytest.raises(ValueError):
        est.predict(corpus_kernel("divergence"))


@pytest.mark.parametrize("kw", [
    {"strategy": "nope"}, {"gw": 0}, {"lw": -1}, {"max_iter": 0}, {"threads": 0},
    {"unroll": -2}, {"blocks": 1.5}, {"gw": True},
])
def test_bad_params(kw):
    with pytest.raises(ValueError):
        BarrierRepair(**kw).fit(corpus_kernel("race"))


def test_bad_inputs():
    with pytest.raises(TypeError):
        BarrierRepair().fit(42)
    with pytest.raises(TypeError):
        BarrierRepair().fit(instrument(corpus_kernel("race")))
    with pytest.raises(Exception):
        BarrierRepair().fit("kernel k( {}")
